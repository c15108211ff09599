//! PFA to Zero-Doppler resampling.
//!
//! Each output pixel is forward-mapped through the Zero-Doppler geometry to the
//! reference height, the ground point is inverse-mapped into the PFA image, and the
//! source is sampled there with bilinear interpolation.

use num_complex::Complex32;
use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::exec::{map_indexed, Exec};
use crate::geodesy::{EcefPoint, Orbit};
use crate::pfa_model::{ImageIndex, RangeDoppler};
use crate::projection::PfaGeometry;
use crate::rd_solver::{rrdot_to_surface, Surface};
use crate::zd_model::{zd_inverse_map, ZeroDopplerGrid};

/// Pixels of margin added around the mapped PFA footprint.
pub const DESIGN_MARGIN: usize = 2;
/// Samples per image edge used to bound the footprint (corners included).
const EDGE_SAMPLES: usize = 9;
/// Output is rejected when more than this fraction of pixels fail to solve.
pub const MAX_FAILED_FRACTION: f64 = 0.5;

/// Row-major complex raster.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexRaster {
    rows: usize,
    cols: usize,
    data: Vec<Complex32>,
}

impl ComplexRaster {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(GeoError::Raster(
                "complex raster dimensions must be positive".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(GeoError::Raster(format!(
                "complex raster has {} samples, expected {}",
                data.len(),
                rows * cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn filled(rows: usize, cols: usize, value: Complex32) -> Result<Self> {
        Self::new(rows, cols, vec![value; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[Complex32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex32 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex32) {
        self.data[row * self.cols + col] = v;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResampleReport {
    pub rows: usize,
    pub lines: usize,
    pub valid_fraction: f64,
    pub failed_pixels: usize,
    pub max_ground_roundtrip_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resampled {
    /// Rows along slant range, columns along azimuth lines.
    pub raster: ComplexRaster,
    /// True where the output was interpolated from inside the source image.
    pub valid: Vec<bool>,
    pub report: ResampleReport,
}

/// Bilinear interpolation of real and imaginary parts; `None` outside the raster.
pub fn interpolate_complex(src: &ComplexRaster, at: &ImageIndex) -> Option<Complex32> {
    let (rmax, cmax) = ((src.rows - 1) as f64, (src.cols - 1) as f64);
    if !(at.row >= 0.0 && at.row <= rmax && at.col >= 0.0 && at.col <= cmax) {
        return None;
    }
    let r0 = (at.row.floor() as usize).min(src.rows.saturating_sub(2));
    let c0 = (at.col.floor() as usize).min(src.cols.saturating_sub(2));
    let r1 = (r0 + 1).min(src.rows - 1);
    let c1 = (c0 + 1).min(src.cols - 1);
    let (fr, fc) = (at.row - r0 as f64, at.col - c0 as f64);
    let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
    let q = [
        src.get(r0, c0),
        src.get(r0, c1),
        src.get(r1, c0),
        src.get(r1, c1),
    ];
    let part = |f: fn(&Complex32) -> f32| {
        let top = lerp(f(&q[0]) as f64, f(&q[1]) as f64, fc);
        let bottom = lerp(f(&q[2]) as f64, f(&q[3]) as f64, fc);
        lerp(top, bottom, fr) as f32
    };
    Some(Complex32::new(part(|z| z.re), part(|z| z.im)))
}

fn boundary_indices(rows: usize, cols: usize) -> Vec<ImageIndex> {
    let (rmax, cmax) = ((rows - 1) as f64, (cols - 1) as f64);
    let mut out = Vec::new();
    for k in 0..EDGE_SAMPLES {
        let t = k as f64 / (EDGE_SAMPLES - 1) as f64;
        out.push(ImageIndex {
            row: t * rmax,
            col: 0.0,
        });
        out.push(ImageIndex {
            row: t * rmax,
            col: cmax,
        });
        out.push(ImageIndex {
            row: 0.0,
            col: t * cmax,
        });
        out.push(ImageIndex {
            row: rmax,
            col: t * cmax,
        });
    }
    out
}

/// Designs a Zero-Doppler grid covering the PFA image footprint at `ref_height`.
///
/// Range spacing is `|a11| * row_spacing`; azimuth time spacing makes the ground
/// distance between lines match the PFA column spacing, using the ground speed
/// `|V| |T| / |R_sat|` at the scene center.
pub fn design_zd_grid(
    geom: &PfaGeometry,
    ref_height: f64,
    orbit: &Orbit,
) -> Result<ZeroDopplerGrid> {
    let g = &geom.grid;
    let surface = Surface::ConstantHae(ref_height);
    let guess = geom.constants.t_coa;

    let mut failures = Vec::new();
    let mut solutions = Vec::new();
    for idx in boundary_indices(g.rows, g.cols) {
        match geom
            .forward(&idx, &surface)
            .and_then(|(p, _)| zd_inverse_map(orbit, &p, guess))
        {
            Ok(sol) => solutions.push(sol),
            Err(e) => failures.push(format!("({:.1}, {:.1}): {e}", idx.row, idx.col)),
        }
    }
    if !failures.is_empty() {
        return Err(GeoError::Design(format!(
            "footprint points not solvable: {}",
            failures.join("; ")
        )));
    }

    let scp_idx = ImageIndex {
        row: g.scp_row,
        col: g.scp_col,
    };
    let (scp_ground, _) = geom.forward(&scp_idx, &surface)?;
    let scp_sol = zd_inverse_map(orbit, &scp_ground, guess)?;
    let state = orbit.state_at(scp_sol.eta)?;
    let ground_speed =
        state.velocity.norm() * scp_ground.vec().norm() / state.position.vec().norm();

    let dr = geom.affine.a11.abs() * g.row_spacing;
    let dt = g.col_spacing / ground_speed;
    let margin = if g.rows == 1 && g.cols == 1 {
        0
    } else {
        DESIGN_MARGIN
    };

    let (r_min, r_max) = solutions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.r), hi.max(s.r))
        });
    let (t_min, t_max) = solutions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.eta), hi.max(s.eta))
        });

    let rows = ((r_max - r_min) / dr).ceil() as usize + 2 * margin + 1;
    let lines = ((t_max - t_min) / dt).ceil() as usize + 2 * margin + 1;
    ZeroDopplerGrid::new(
        r_min - margin as f64 * dr,
        dr,
        t_min - margin as f64 * dt,
        dt,
        rows,
        lines,
        orbit.clone(),
        geom.constants.wavelength,
        geom.constants.look_side,
    )
}

enum PixelOutcome {
    Valid(Complex32, f64),
    Outside,
    Failed,
}

/// Resamples a PFA image onto a Zero-Doppler grid at a fixed reference height.
pub fn resample_pfa_to_zd(
    src: &ComplexRaster,
    geom: &PfaGeometry,
    zd: &ZeroDopplerGrid,
    ref_height: f64,
    exec: Exec,
) -> Result<Resampled> {
    if src.rows != geom.grid.rows || src.cols != geom.grid.cols {
        return Err(GeoError::Resample(format!(
            "source raster is {}x{} but metadata describes {}x{}",
            src.rows, src.cols, geom.grid.rows, geom.grid.cols
        )));
    }
    let surface = Surface::ConstantHae(ref_height);

    let lines = map_indexed(zd.lines, exec, |line| -> Vec<PixelOutcome> {
        let state = match zd.orbit.state_at(zd.time_at(line as f64)) {
            Ok(s) => s,
            Err(_) => return (0..zd.rows).map(|_| PixelOutcome::Failed).collect(),
        };
        (0..zd.rows)
            .map(|row| {
                let rd = RangeDoppler {
                    r: zd.range_at(row as f64),
                    rdot: 0.0,
                };
                let ground: EcefPoint =
                    match rrdot_to_surface(&state, &rd, ref_height, zd.look_side) {
                        Ok((p, _)) => p,
                        Err(_) => return PixelOutcome::Failed,
                    };
                let idx = match geom.inverse(&ground) {
                    Ok(i) => i,
                    Err(_) => return PixelOutcome::Failed,
                };
                match interpolate_complex(src, &idx) {
                    Some(v) => {
                        let err = geom
                            .forward(&idx, &surface)
                            .map(|(p, _)| p.distance(&ground))
                            .unwrap_or(f64::INFINITY);
                        PixelOutcome::Valid(v, err)
                    }
                    None => PixelOutcome::Outside,
                }
            })
            .collect()
    });

    let n = zd.rows * zd.lines;
    let mut data = vec![Complex32::new(0.0, 0.0); n];
    let mut valid = vec![false; n];
    let (mut n_valid, mut n_failed, mut max_err) = (0usize, 0usize, 0.0f64);
    for (line, pixels) in lines.into_iter().enumerate() {
        for (row, px) in pixels.into_iter().enumerate() {
            let i = row * zd.lines + line;
            match px {
                PixelOutcome::Valid(v, err) => {
                    data[i] = v;
                    valid[i] = true;
                    n_valid += 1;
                    max_err = max_err.max(err);
                }
                PixelOutcome::Outside => {}
                PixelOutcome::Failed => n_failed += 1,
            }
        }
    }
    if n_failed as f64 > MAX_FAILED_FRACTION * n as f64 {
        return Err(GeoError::Resample(format!(
            "{n_failed} of {n} output pixels failed to map"
        )));
    }
    Ok(Resampled {
        raster: ComplexRaster::new(zd.rows, zd.lines, data)?,
        valid,
        report: ResampleReport {
            rows: zd.rows,
            lines: zd.lines,
            valid_fraction: n_valid as f64 / n as f64,
            failed_pixels: n_failed,
            max_ground_roundtrip_error: max_err,
        },
    })
}
