//! Pixel-level forward (image to ground) and inverse (ground to image) mapping for
//! constant-COA PFA images, and whole-grid geocoding.

use crate::error::Result;
use crate::exec::{map_indexed, Exec};
use crate::geodesy::{ecef_to_llh, EcefPoint};
use crate::pfa_model::{
    compute_affine, coord_to_index, derive_pfa_constants, image_to_rrdot, index_to_coord,
    rrdot_to_image, scanline_model, AffineModel, GridInfo, ImageIndex, PfaConstants, RangeDoppler,
    ScanlineModel,
};
use crate::rd_solver::{rrdot_to_ground, SolveDiagnostics, Surface};
use crate::sicd::SicdMeta;

#[derive(Debug, Clone, PartialEq)]
pub struct PfaGeometry {
    pub constants: PfaConstants,
    pub affine: AffineModel,
    pub grid: GridInfo,
}

impl PfaGeometry {
    pub fn new(constants: PfaConstants, grid: GridInfo) -> Result<Self> {
        let affine = compute_affine(&constants)?;
        Ok(Self {
            constants,
            affine,
            grid,
        })
    }

    pub fn from_meta(meta: &SicdMeta) -> Result<Self> {
        Self::new(derive_pfa_constants(meta)?, GridInfo::from_meta(meta)?)
    }

    pub fn image_to_rd(&self, idx: &ImageIndex) -> Result<RangeDoppler> {
        image_to_rrdot(&self.affine, &index_to_coord(&self.grid, idx))
    }

    /// Range/range-rate model of the azimuth line through column `col`.
    pub fn scanline(&self, col: f64) -> ScanlineModel {
        let az = (col - self.grid.scp_col) * self.grid.col_spacing;
        scanline_model(&self.affine, &self.constants, az)
    }

    pub fn forward(
        &self,
        idx: &ImageIndex,
        surface: &Surface,
    ) -> Result<(EcefPoint, SolveDiagnostics)> {
        let rd = self.image_to_rd(idx)?;
        rrdot_to_ground(
            &self.constants.state(),
            &rd,
            surface,
            self.constants.look_side,
        )
    }

    /// Range and range rate from the COA platform state straight to `p`, then the
    /// inverse affine transform.
    pub fn inverse(&self, p: &EcefPoint) -> Result<ImageIndex> {
        let los = self.constants.arp_pos.vec() - p.vec();
        let r = los.norm();
        let rd = RangeDoppler {
            r,
            rdot: self.constants.arp_vel.dot(&los) / r,
        };
        let c = rrdot_to_image(&self.affine, &rd)?;
        Ok(coord_to_index(&self.grid, &c))
    }
}

pub fn pfa_forward_map(
    geom: &PfaGeometry,
    idx: &ImageIndex,
    surface: &Surface,
) -> Result<(EcefPoint, SolveDiagnostics)> {
    geom.forward(idx, surface)
}

pub fn pfa_inverse_map(geom: &PfaGeometry, p: &EcefPoint) -> Result<ImageIndex> {
    geom.inverse(p)
}

/// Geodetic coordinates for every `decimate`-th pixel, row-major with rows along range.
/// Failed pixels hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct GeocodeOutput {
    pub rows: usize,
    pub cols: usize,
    pub decimate: usize,
    pub lat: Vec<f64>,
    pub lon: Vec<f64>,
    pub height: Vec<f64>,
    pub failures: usize,
}

impl GeocodeOutput {
    pub fn failure_fraction(&self) -> f64 {
        self.failures as f64 / (self.rows * self.cols) as f64
    }
}

/// Forward-maps the (decimated) image one azimuth line at a time. Each line reuses
/// the shared platform state and walks range with first-order polynomials for R and Rdot.
pub fn geocode(
    geom: &PfaGeometry,
    surface: &Surface,
    decimate: usize,
    exec: Exec,
) -> GeocodeOutput {
    let k = decimate.max(1);
    let rows = geom.grid.rows.div_ceil(k);
    let cols = geom.grid.cols.div_ceil(k);
    let look = geom.constants.look_side;

    let lines = map_indexed(cols, exec, |c| {
        let scan = geom.scanline((c * k) as f64);
        (0..rows)
            .map(|r| {
                let rg = ((r * k) as f64 - geom.grid.scp_row) * geom.grid.row_spacing;
                let rd = scan.at(rg);
                if !(rd.r > 0.0) {
                    return None;
                }
                rrdot_to_ground(&scan.state, &rd, surface, look)
                    .and_then(|(p, _)| ecef_to_llh(&p))
                    .ok()
            })
            .collect::<Vec<_>>()
    });

    let n = rows * cols;
    let mut out = GeocodeOutput {
        rows,
        cols,
        decimate: k,
        lat: vec![f64::NAN; n],
        lon: vec![f64::NAN; n],
        height: vec![f64::NAN; n],
        failures: 0,
    };
    for (c, line) in lines.into_iter().enumerate() {
        for (r, llh) in line.into_iter().enumerate() {
            let i = r * cols + c;
            match llh {
                Some(p) => {
                    out.lat[i] = p.lat();
                    out.lon[i] = p.lon();
                    out.height[i] = p.height();
                }
                None => out.failures += 1,
            }
        }
    }
    out
}
