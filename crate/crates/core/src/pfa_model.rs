//! Constant-COA polar format geometry.
//!
//! When every pixel of a spotlight PFA image shares one center-of-aperture time, the
//! platform state, the SCP range and range rate, the polar angle, its rate, and the
//! polar aperture scale factor with its slope are all scalars. Image coordinates then
//! map to (range, range rate) through a single affine transform:
//!
//! ```text
//! | R    |   | R_scp    |   | a11 a12 |   | rg |
//! | Rdot | = | Rdot_scp | + | a21 a22 | . | az |
//! ```
//!
//! with `a11 = KSF cos(theta)`, `a12 = KSF sin(theta)`,
//! `a21 = (dKSF/dtheta cos(theta) - KSF sin(theta)) dtheta/dt` and
//! `a22 = (dKSF/dtheta sin(theta) + KSF cos(theta)) dtheta/dt`.

use crate::error::{GeoError, Result};
use crate::geodesy::{EcefPoint, StateVector, Vec3, SPEED_OF_LIGHT};
use crate::rd_solver::LookSide;
use crate::sicd::SicdMeta;

/// Largest tolerated COA-time variation (seconds) across the image half-extent.
pub const TCOA_CONSTANCY_TOL: f64 = 1e-9;

/// Relative determinant threshold for the affine matrix.
pub const DET_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfaConstants {
    pub arp_pos: EcefPoint,
    pub arp_vel: Vec3,
    pub r_scp: f64,
    pub rdot_scp: f64,
    pub theta_coa: f64,
    pub dtheta_dt: f64,
    pub ksf: f64,
    pub dksf_dtheta: f64,
    pub t_coa: f64,
    pub wavelength: f64,
    pub look_side: LookSide,
}

impl PfaConstants {
    /// Platform state at COA. Every pixel of the image shares it.
    pub fn state(&self) -> StateVector {
        StateVector::new(self.t_coa, self.arp_pos, self.arp_vel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineModel {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub r_scp: f64,
    pub rdot_scp: f64,
}

/// Metric image coordinates relative to the SCP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageCoord {
    pub rg: f64,
    pub az: f64,
}

/// Fractional pixel address; `row` runs along range, `col` along azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageIndex {
    pub row: f64,
    pub col: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeDoppler {
    pub r: f64,
    pub rdot: f64,
}

/// One azimuth line of the image expressed as first-order polynomials in range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanlineModel {
    pub r0: f64,
    pub dr: f64,
    pub rdot0: f64,
    pub drdot: f64,
    pub state: StateVector,
}

impl ScanlineModel {
    pub fn at(&self, rg: f64) -> RangeDoppler {
        RangeDoppler {
            r: self.r0 + self.dr * rg,
            rdot: self.rdot0 + self.drdot * rg,
        }
    }
}

/// Binding between pixel indices and metric image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridInfo {
    pub scp_row: f64,
    pub scp_col: f64,
    pub row_spacing: f64,
    pub col_spacing: f64,
    pub rows: usize,
    pub cols: usize,
    pub scp_ecef: EcefPoint,
    pub scp_height: f64,
}

impl GridInfo {
    pub fn from_meta(meta: &SicdMeta) -> Result<Self> {
        let g = GridInfo {
            scp_row: meta.scp_row,
            scp_col: meta.scp_col,
            row_spacing: meta.row_spacing,
            col_spacing: meta.col_spacing,
            rows: meta.rows,
            cols: meta.cols,
            scp_ecef: meta.scp_ecef,
            scp_height: meta.scp_llh.height(),
        };
        if !(g.row_spacing > 0.0 && g.col_spacing > 0.0) {
            return Err(GeoError::Metadata(
                "pixel spacing (must be positive)".into(),
            ));
        }
        if !(0.0..g.rows as f64).contains(&g.scp_row) || !(0.0..g.cols as f64).contains(&g.scp_col)
        {
            return Err(GeoError::Metadata(format!(
                "SCP pixel ({}, {}) outside {}x{} image",
                g.scp_row, g.scp_col, g.rows, g.cols
            )));
        }
        Ok(g)
    }

    pub fn contains(&self, i: &ImageIndex) -> bool {
        i.row >= 0.0
            && i.col >= 0.0
            && i.row <= (self.rows - 1) as f64
            && i.col <= (self.cols - 1) as f64
    }
}

pub fn index_to_coord(g: &GridInfo, i: &ImageIndex) -> ImageCoord {
    ImageCoord {
        rg: (i.row - g.scp_row) * g.row_spacing,
        az: (i.col - g.scp_col) * g.col_spacing,
    }
}

pub fn coord_to_index(g: &GridInfo, c: &ImageCoord) -> ImageIndex {
    ImageIndex {
        row: c.rg / g.row_spacing + g.scp_row,
        col: c.az / g.col_spacing + g.scp_col,
    }
}

/// Largest COA-time excursion produced by the non-constant terms of the COA
/// polynomial, each term scaled by the image half-extent in meters.
pub fn tcoa_variation(meta: &SicdMeta) -> f64 {
    let half_rg = 0.5 * meta.rows as f64 * meta.row_spacing;
    let half_az = 0.5 * meta.cols as f64 * meta.col_spacing;
    let mut worst = 0.0_f64;
    for (i, row) in meta.time_coa_poly.coefs().iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if i == 0 && j == 0 {
                continue;
            }
            worst = worst.max((c * half_rg.powi(i as i32) * half_az.powi(j as i32)).abs());
        }
    }
    worst
}

/// Returns the image's single COA time, or rejects images whose COA time varies.
pub fn validate_constant_tcoa(meta: &SicdMeta) -> Result<f64> {
    let variation = tcoa_variation(meta);
    if variation > TCOA_CONSTANCY_TOL {
        return Err(GeoError::UnsupportedGeometry(format!(
            "COA time varies by up to {variation:.3e} s across the image; only constant-COA spotlight images are supported"
        )));
    }
    Ok(meta.time_coa_poly.coefs()[0][0])
}

/// Evaluates the polynomial metadata at the COA time.
///
/// Explicit SCPCOA position/velocity take precedence over the ARP polynomial.
pub fn derive_pfa_constants(meta: &SicdMeta) -> Result<PfaConstants> {
    let t_coa = validate_constant_tcoa(meta)?;

    let theta_coa = meta.polar_ang_poly.eval(t_coa);
    let dtheta_dt = meta.polar_ang_poly.derivative().eval(t_coa);
    let ksf = meta.spatial_freq_sf_poly.eval(theta_coa);
    let dksf_dtheta = meta.spatial_freq_sf_poly.derivative().eval(theta_coa);

    let (arp_pos, arp_vel) = match &meta.coa_state {
        Some(coa) => (coa.pos, coa.vel),
        None => (
            EcefPoint::from_vec(&meta.arp_poly.position(t_coa)),
            meta.arp_poly.velocity(t_coa),
        ),
    };
    if !(arp_vel.norm() > 0.0) {
        return Err(GeoError::Metadata(
            "ARP velocity at COA (must be non-zero)".into(),
        ));
    }
    if !(meta.center_frequency > 0.0) {
        return Err(GeoError::Metadata("center frequency".into()));
    }

    let los = arp_pos.vec() - meta.scp_ecef.vec();
    let r_scp = los.norm();
    if !(r_scp > 0.0) {
        return Err(GeoError::Metadata("SCP coincides with ARP".into()));
    }
    let rdot_scp = arp_vel.dot(&los) / r_scp;

    for (name, v) in [
        ("PFA/PolarAngPoly", theta_coa),
        ("PFA/SpatialFreqSFPoly", ksf),
        ("Position/ARPPoly", r_scp),
    ] {
        if !v.is_finite() {
            return Err(GeoError::Metadata(name.into()));
        }
    }

    Ok(PfaConstants {
        arp_pos,
        arp_vel,
        r_scp,
        rdot_scp,
        theta_coa,
        dtheta_dt,
        ksf,
        dksf_dtheta,
        t_coa,
        wavelength: SPEED_OF_LIGHT / meta.center_frequency,
        look_side: meta.side_of_track,
    })
}

impl AffineModel {
    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    fn check_invertible(&self) -> Result<f64> {
        let det = self.det();
        let scale = self
            .a11
            .abs()
            .max(self.a12.abs())
            .max(self.a21.abs())
            .max(self.a22.abs());
        if !(det.abs() > DET_REL_TOL * scale * scale) {
            return Err(GeoError::Degenerate(format!(
                "affine matrix determinant {det:e} is below threshold"
            )));
        }
        Ok(det)
    }
}

pub fn compute_affine(k: &PfaConstants) -> Result<AffineModel> {
    let (s, c) = k.theta_coa.sin_cos();
    let m = AffineModel {
        a11: k.ksf * c,
        a12: k.ksf * s,
        a21: (k.dksf_dtheta * c - k.ksf * s) * k.dtheta_dt,
        a22: (k.dksf_dtheta * s + k.ksf * c) * k.dtheta_dt,
        r_scp: k.r_scp,
        rdot_scp: k.rdot_scp,
    };
    m.check_invertible()?;
    Ok(m)
}

pub fn image_to_rrdot(m: &AffineModel, c: &ImageCoord) -> Result<RangeDoppler> {
    let r = m.r_scp + m.a11 * c.rg + m.a12 * c.az;
    let rdot = m.rdot_scp + m.a21 * c.rg + m.a22 * c.az;
    if !(r > 0.0) {
        return Err(GeoError::OutOfModel(format!(
            "image coordinate ({}, {}) maps to non-positive range {r}",
            c.rg, c.az
        )));
    }
    Ok(RangeDoppler { r, rdot })
}

pub fn rrdot_to_image(m: &AffineModel, rd: &RangeDoppler) -> Result<ImageCoord> {
    let det = m.check_invertible()?;
    let dr = rd.r - m.r_scp;
    let drdot = rd.rdot - m.rdot_scp;
    Ok(ImageCoord {
        rg: (m.a22 * dr - m.a12 * drdot) / det,
        az: (m.a11 * drdot - m.a21 * dr) / det,
    })
}

/// Range and range rate along the azimuth line at `az` as functions of `rg`.
pub fn scanline_model(m: &AffineModel, k: &PfaConstants, az: f64) -> ScanlineModel {
    ScanlineModel {
        r0: m.r_scp + m.a12 * az,
        dr: m.a11,
        rdot0: m.rdot_scp + m.a22 * az,
        drdot: m.a21,
        state: k.state(),
    }
}

/// Doppler frequency corresponding to a range rate.
pub fn rdot_to_doppler(rdot: f64, wavelength: f64) -> f64 {
    -2.0 * rdot / wavelength
}
