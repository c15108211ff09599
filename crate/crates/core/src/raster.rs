//! Flat little-endian raster files with JSON header sidecars.
//!
//! A raster at `path` stores samples row-major with no padding; its header lives at
//! `path` + `.json`.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex32;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::rd_solver::DemRaster;
use crate::resampler::ComplexRaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DType {
    Float32,
    Float64,
    Complex64,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::Float32 => 4,
            DType::Float64 | DType::Complex64 => 8,
        }
    }
}

/// Lat/lon lattice: sample `(r, c)` sits at `(lat0 + r dlat, lon0 + c dlon)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoRef {
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RasterHeader {
    pub rows: usize,
    pub cols: usize,
    pub dtype: DType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub georef: Option<GeoRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodata: Option<f64>,
}

impl RasterHeader {
    pub fn new(rows: usize, cols: usize, dtype: DType) -> Self {
        Self {
            rows,
            cols,
            dtype,
            georef: None,
            nodata: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(GeoError::Raster(format!(
                "raster dimensions must be positive, got {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(())
    }

    pub fn byte_len(&self) -> usize {
        self.rows * self.cols * self.dtype.size()
    }
}

pub fn header_path(data: &Path) -> PathBuf {
    let mut s = data.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn read_header(data: &Path) -> Result<RasterHeader> {
    let text = fs::read_to_string(header_path(data))?;
    let h: RasterHeader = serde_json::from_str(&text)?;
    h.validate()?;
    Ok(h)
}

fn write_raw(data: &Path, header: &RasterHeader, bytes: &[u8]) -> Result<()> {
    header.validate()?;
    debug_assert_eq!(bytes.len(), header.byte_len());
    fs::write(data, bytes)?;
    let mut text = serde_json::to_string_pretty(header)?;
    text.push('\n');
    fs::write(header_path(data), text)?;
    Ok(())
}

fn read_raw(data: &Path) -> Result<(RasterHeader, Vec<u8>)> {
    let header = read_header(data)?;
    let bytes = fs::read(data)?;
    if bytes.len() != header.byte_len() {
        return Err(GeoError::Raster(format!(
            "{} holds {} bytes, header implies {}",
            data.display(),
            bytes.len(),
            header.byte_len()
        )));
    }
    Ok((header, bytes))
}

/// Writes a float64 raster.
pub fn write_f64(
    data: &Path,
    rows: usize,
    cols: usize,
    values: &[f64],
    georef: Option<GeoRef>,
) -> Result<()> {
    if values.len() != rows * cols {
        return Err(GeoError::Raster(
            "value count does not match dimensions".into(),
        ));
    }
    let mut header = RasterHeader::new(rows, cols, DType::Float64);
    header.georef = georef;
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    write_raw(data, &header, &bytes)
}

/// Reads a float32 or float64 raster as f64 samples.
pub fn read_real(data: &Path) -> Result<(RasterHeader, Vec<f64>)> {
    let (header, bytes) = read_raw(data)?;
    let values = match header.dtype {
        DType::Float32 => bytes
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect(),
        DType::Float64 => bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect(),
        DType::Complex64 => {
            return Err(GeoError::Raster(format!(
                "{} is complex, expected real",
                data.display()
            )))
        }
    };
    Ok((header, values))
}

pub fn read_dem(data: &Path) -> Result<DemRaster> {
    let (header, values) = read_real(data)?;
    let g = header
        .georef
        .ok_or_else(|| GeoError::Raster(format!("{} header has no georef", data.display())))?;
    DemRaster::new(
        values,
        header.rows,
        header.cols,
        g.lat0,
        g.lon0,
        g.dlat,
        g.dlon,
        header.nodata,
    )
}

/// Writes a DEM as float32 or float64.
pub fn write_dem(data: &Path, dem: &DemRaster, dtype: DType) -> Result<()> {
    let (lat0, lon0, dlat, dlon) = dem.georef();
    let header = RasterHeader {
        rows: dem.rows(),
        cols: dem.cols(),
        dtype,
        georef: Some(GeoRef {
            lat0,
            lon0,
            dlat,
            dlon,
        }),
        nodata: dem.nodata(),
    };
    let bytes: Vec<u8> = match dtype {
        DType::Float32 => dem
            .heights()
            .iter()
            .flat_map(|v| (*v as f32).to_le_bytes())
            .collect(),
        DType::Float64 => dem.heights().iter().flat_map(|v| v.to_le_bytes()).collect(),
        DType::Complex64 => return Err(GeoError::Raster("DEM cannot be complex".into())),
    };
    write_raw(data, &header, &bytes)
}

/// Writes interleaved (re, im) float32 pairs.
pub fn write_complex(data: &Path, raster: &ComplexRaster) -> Result<()> {
    let header = RasterHeader::new(raster.rows(), raster.cols(), DType::Complex64);
    let bytes: Vec<u8> = raster
        .data()
        .iter()
        .flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes()))
        .collect();
    write_raw(data, &header, &bytes)
}

pub fn read_complex(data: &Path) -> Result<ComplexRaster> {
    let (header, bytes) = read_raw(data)?;
    if header.dtype != DType::Complex64 {
        return Err(GeoError::Raster(format!(
            "{} is not complex64",
            data.display()
        )));
    }
    let samples = bytes
        .chunks_exact(8)
        .map(|b| {
            Complex32::new(
                f32::from_le_bytes(b[0..4].try_into().unwrap()),
                f32::from_le_bytes(b[4..8].try_into().unwrap()),
            )
        })
        .collect();
    ComplexRaster::new(header.rows, header.cols, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_names_and_dtype_spelling() {
        assert_eq!(
            header_path(Path::new("/tmp/a.lat.f64")),
            PathBuf::from("/tmp/a.lat.f64.json")
        );
        let h = RasterHeader::new(2, 3, DType::Complex64);
        let text = serde_json::to_string(&h).unwrap();
        assert_eq!(text, r#"{"rows":2,"cols":3,"dtype":"complex64"}"#);
        assert!(
            serde_json::from_str::<RasterHeader>(r#"{"rows":2,"cols":3,"dtype":"int8"}"#).is_err()
        );
    }

    #[test]
    fn complex_layout_is_interleaved_le() {
        let dir = std::env::temp_dir().join(format!("pfa-rd-geo-raster-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("z.c64");
        let r = ComplexRaster::new(
            1,
            2,
            vec![Complex32::new(1.0, -2.0), Complex32::new(0.5, 4.0)],
        )
        .unwrap();
        write_complex(&path, &r).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], &1.0f32.to_le_bytes());
        assert_eq!(&bytes[4..8], &(-2.0f32).to_le_bytes());
        assert_eq!(read_complex(&path).unwrap(), r);
        fs::write(&path, &bytes[..12]).unwrap();
        assert!(read_complex(&path).is_err());
        fs::remove_dir_all(&dir).ok();
    }
}
