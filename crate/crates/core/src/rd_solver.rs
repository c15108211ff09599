//! Native-Doppler projection of a (range, range-rate) pair onto a surface.
//!
//! All line-of-sight directions `u` from the platform with `V . u = -Rdot` lie on a
//! cone around the velocity vector. At range `R` they trace a circle, parameterized
//! here by the angle `psi` measured from the direction of the Earth's center. The
//! ground point is the root of `height(R_sat + R u(psi)) - h` on the look-side half
//! of that circle.

use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};
use crate::geodesy::{ecef_to_llh, height_above_ellipsoid, EcefPoint, StateVector, Vec3};
use crate::pfa_model::RangeDoppler;

/// Side of the velocity vector the radar looks toward.
///
/// For a solution `P`, `((V x (P - R_sat)) . R_sat)` is positive for `Left` and
/// negative for `Right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LookSide {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl LookSide {
    /// `"L"` or `"R"`, as written in SICD metadata.
    pub fn code(self) -> &'static str {
        match self {
            LookSide::Left => "L",
            LookSide::Right => "R",
        }
    }

    /// Sign of the side indicator for this look direction.
    pub fn sign(self) -> f64 {
        match self {
            LookSide::Left => 1.0,
            LookSide::Right => -1.0,
        }
    }
}

/// Height tolerance (m) at which the circle root search stops.
pub const HEIGHT_TOL: f64 = 1e-6;
/// Angular width (rad) at which the circle root search stops regardless of height.
pub const ANGLE_TOL: f64 = 1e-13;
const MAX_ROOT_ITERS: usize = 200;
/// Samples used to hunt for a bracket when the endpoints of the half circle do not bracket.
const FALLBACK_SAMPLES: usize = 256;

pub const DEM_STEP_TOL: f64 = 0.1;
pub const DEM_MAX_ITERS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// `|P - R_sat| - R` in meters.
    pub range_residual: f64,
    /// `V . (R_sat - P) / |R_sat - P| - Rdot` in m/s.
    pub rdot_residual: f64,
    /// Height of `P` minus the target surface height, in meters.
    pub height_residual: f64,
    pub iterations: usize,
}

impl SolveDiagnostics {
    /// Range-rate residual divided by platform speed.
    pub fn normalized_rdot(&self, speed: f64) -> f64 {
        self.rdot_residual / speed
    }
}

/// Gridded heights above the WGS-84 ellipsoid on a regular lat/lon lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct DemRaster {
    heights: Vec<f64>,
    rows: usize,
    cols: usize,
    lat0: f64,
    lon0: f64,
    dlat: f64,
    dlon: f64,
    nodata: Option<f64>,
    mean: f64,
}

impl DemRaster {
    /// `heights` is row-major; sample `(r, c)` sits at `(lat0 + r dlat, lon0 + c dlon)`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        heights: Vec<f64>,
        rows: usize,
        cols: usize,
        lat0: f64,
        lon0: f64,
        dlat: f64,
        dlon: f64,
        nodata: Option<f64>,
    ) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(GeoError::Raster(format!(
                "DEM must be at least 2x2, got {rows}x{cols}"
            )));
        }
        if heights.len() != rows * cols {
            return Err(GeoError::Raster(format!(
                "DEM has {} samples, expected {}",
                heights.len(),
                rows * cols
            )));
        }
        if dlat == 0.0 || dlon == 0.0 || !dlat.is_finite() || !dlon.is_finite() {
            return Err(GeoError::Raster(
                "DEM spacing must be finite and non-zero".into(),
            ));
        }
        let mut dem = Self {
            heights,
            rows,
            cols,
            lat0,
            lon0,
            dlat,
            dlon,
            nodata,
            mean: f64::NAN,
        };
        let valid: Vec<f64> = dem
            .heights
            .iter()
            .copied()
            .filter(|h| dem.is_valid(*h))
            .collect();
        if valid.is_empty() {
            return Err(GeoError::Raster("DEM contains no valid samples".into()));
        }
        dem.mean = valid.iter().sum::<f64>() / valid.len() as f64;
        Ok(dem)
    }

    /// Builds a DEM by sampling a height function over the lattice.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        lat0: f64,
        lon0: f64,
        dlat: f64,
        dlon: f64,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut heights = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                heights.push(f(lat0 + r as f64 * dlat, lon0 + c as f64 * dlon));
            }
        }
        Self::new(heights, rows, cols, lat0, lon0, dlat, dlon, None)
    }

    fn is_valid(&self, h: f64) -> bool {
        h.is_finite() && self.nodata.is_none_or(|nd| h != nd)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// `(lat0, lon0, dlat, dlon)`.
    pub fn georef(&self) -> (f64, f64, f64, f64) {
        (self.lat0, self.lon0, self.dlat, self.dlon)
    }

    pub fn nodata(&self) -> Option<f64> {
        self.nodata
    }

    /// Mean of the valid samples.
    pub fn mean_height(&self) -> f64 {
        self.mean
    }

    /// Bilinear height at a geodetic position. Missing coverage and nodata are errors.
    pub fn height_at(&self, lat: f64, lon: f64) -> Result<f64> {
        let nodata = || GeoError::NoData { lat, lon };
        let r = (lat - self.lat0) / self.dlat;
        let c = (lon - self.lon0) / self.dlon;
        let (rmax, cmax) = ((self.rows - 1) as f64, (self.cols - 1) as f64);
        if !(r >= 0.0 && r <= rmax && c >= 0.0 && c <= cmax) {
            return Err(nodata());
        }
        let r0 = (r.floor() as usize).min(self.rows - 2);
        let c0 = (c.floor() as usize).min(self.cols - 2);
        let (fr, fc) = (r - r0 as f64, c - c0 as f64);
        let at = |i: usize, j: usize| self.heights[i * self.cols + j];
        let q = [
            at(r0, c0),
            at(r0, c0 + 1),
            at(r0 + 1, c0),
            at(r0 + 1, c0 + 1),
        ];
        if q.iter().any(|h| !self.is_valid(*h)) {
            return Err(nodata());
        }
        Ok((1.0 - fr) * ((1.0 - fc) * q[0] + fc * q[1]) + fr * ((1.0 - fc) * q[2] + fc * q[3]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    ConstantHae(f64),
    Dem(DemRaster),
}

/// Residuals of a candidate point against `(R, Rdot)`; `height_residual` is the
/// ellipsoidal height of `p` (callers subtract their surface height).
pub fn solve_residuals(state: &StateVector, rd: &RangeDoppler, p: &EcefPoint) -> SolveDiagnostics {
    let los = state.position.vec() - p.vec();
    let range = los.norm();
    SolveDiagnostics {
        range_residual: range - rd.r,
        rdot_residual: state.velocity.dot(&los) / range - rd.rdot,
        height_residual: height_above_ellipsoid(p).unwrap_or(f64::NAN),
        iterations: 0,
    }
}

/// The range-Doppler circle for one `(state, R, Rdot)`.
struct ConeCircle {
    center: Vec3,
    e1: Vec3,
    e2: Vec3,
}

impl ConeCircle {
    fn new(state: &StateVector, rd: &RangeDoppler, look: LookSide) -> Result<Self> {
        let speed = state.velocity.norm();
        if !(speed > 0.0) {
            return Err(GeoError::Degenerate("platform velocity is zero".into()));
        }
        if !(rd.r > 0.0) {
            return Err(GeoError::OutOfModel(format!("non-positive range {}", rd.r)));
        }
        if !(rd.rdot.abs() < speed) {
            return Err(GeoError::InvalidCone {
                rdot: rd.rdot,
                speed,
            });
        }
        let sat = state.position.vec();
        let vhat = state.velocity / speed;
        let nadir = -sat;
        let perp = nadir - vhat * nadir.dot(&vhat);
        let perp_norm = perp.norm();
        if !(perp_norm > 1e-9 * sat.norm()) {
            return Err(GeoError::Degenerate(
                "velocity is parallel to the position vector".into(),
            ));
        }
        let e1 = perp / perp_norm;
        let e2 = vhat.cross(&e1) * look.sign();
        let cos_cone = -rd.rdot / speed;
        let sin_cone = (1.0 - cos_cone * cos_cone).sqrt();
        Ok(Self {
            center: sat + vhat * (rd.r * cos_cone),
            e1: e1 * (rd.r * sin_cone),
            e2: e2 * (rd.r * sin_cone),
        })
    }

    fn point(&self, psi: f64) -> Vec3 {
        let (s, c) = psi.sin_cos();
        self.center + self.e1 * c + self.e2 * s
    }
}

fn height_error(circle: &ConeCircle, psi: f64, h: f64) -> Result<f64> {
    Ok(height_above_ellipsoid(&EcefPoint::from_vec(&circle.point(psi)))? - h)
}

/// Brent's method on a bracket with `fa <= 0 <= fb` (or the reverse).
fn brent(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
) -> Result<(f64, usize)> {
    if fa.abs() < fb.abs() {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut mflag = true;
    for it in 1..=MAX_ROOT_ITERS {
        if fb.abs() <= HEIGHT_TOL || (b - a).abs() <= ANGLE_TOL {
            return Ok((b, it));
        }
        let mut s = if fa != fc && fb != fc {
            a * fb * fc / ((fa - fb) * (fa - fc))
                + b * fa * fc / ((fb - fa) * (fb - fc))
                + c * fa * fb / ((fc - fa) * (fc - fb))
        } else {
            b - fb * (b - a) / (fb - fa)
        };
        let lo = (3.0 * a + b) / 4.0;
        let outside = !((s > lo.min(b)) && (s < lo.max(b)));
        let slow = if mflag {
            (s - b).abs() >= (b - c).abs() / 2.0
        } else {
            (s - b).abs() >= (c - d).abs() / 2.0
        };
        let tiny = if mflag {
            (b - c).abs() < ANGLE_TOL
        } else {
            (c - d).abs() < ANGLE_TOL
        };
        if outside || slow || tiny {
            s = 0.5 * (a + b);
            mflag = true;
        } else {
            mflag = false;
        }
        let fs = f(s)?;
        d = c;
        c = b;
        fc = fb;
        if fa * fs < 0.0 {
            b = s;
            fb = fs;
        } else {
            a = s;
            fa = fs;
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
        }
    }
    Ok((b, MAX_ROOT_ITERS))
}

/// Projects `(R, Rdot)` from `state` onto the surface of constant ellipsoidal height.
pub fn rrdot_to_surface(
    state: &StateVector,
    rd: &RangeDoppler,
    surface_height: f64,
    look: LookSide,
) -> Result<(EcefPoint, SolveDiagnostics)> {
    let circle = ConeCircle::new(state, rd, look)?;
    let f = |psi: f64| height_error(&circle, psi, surface_height);
    let pi = std::f64::consts::PI;

    let f0 = f(0.0)?;
    let fpi = f(pi)?;
    let (psi, iterations) = if f0.abs() <= HEIGHT_TOL {
        (0.0, 1)
    } else if f0 < 0.0 && fpi > 0.0 {
        brent(f, 0.0, pi, f0, fpi)?
    } else {
        // Endpoints do not bracket. Sample the half circle and take the outermost crossing.
        let step = pi / FALLBACK_SAMPLES as f64;
        let samples = (0..=FALLBACK_SAMPLES)
            .map(|k| f(k as f64 * step))
            .collect::<Result<Vec<_>>>()?;
        let crossing = (0..FALLBACK_SAMPLES)
            .rev()
            .find(|&k| samples[k] < 0.0 && samples[k + 1] >= 0.0);
        match crossing {
            Some(k) => brent(
                f,
                k as f64 * step,
                (k + 1) as f64 * step,
                samples[k],
                samples[k + 1],
            )?,
            None => {
                let min_f = samples.iter().copied().fold(f64::INFINITY, f64::min);
                let max_f = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                return Err(GeoError::NoSolution { min_f, max_f });
            }
        }
    };
    let p = EcefPoint::from_vec(&circle.point(psi));
    let mut diag = solve_residuals(state, rd, &p);
    diag.height_residual -= surface_height;
    diag.iterations = iterations;
    debug_assert!(diag.range_residual.abs() < 1e-3, "{diag:?}");
    debug_assert!(
        diag.rdot_residual.abs() < 1e-6 * state.velocity.norm(),
        "{diag:?}"
    );
    debug_assert!(diag.height_residual.abs() < 1e-3, "{diag:?}");
    Ok((p, diag))
}

/// Projects `(R, Rdot)` onto a DEM by fixed-point iteration on the surface height.
pub fn rrdot_to_dem(
    state: &StateVector,
    rd: &RangeDoppler,
    dem: &DemRaster,
    look: LookSide,
) -> Result<(EcefPoint, SolveDiagnostics)> {
    let mut h = dem.mean_height();
    let mut last_step = f64::INFINITY;
    let mut last = SolveDiagnostics::default();
    for it in 1..=DEM_MAX_ITERS {
        let (p, mut diag) = rrdot_to_surface(state, rd, h, look)?;
        let llh = ecef_to_llh(&p)?;
        let dem_h = dem.height_at(llh.lat(), llh.lon())?;
        diag.height_residual = llh.height() - dem_h;
        diag.iterations = it;
        last_step = dem_h - h;
        last = diag;
        if last_step.abs() < DEM_STEP_TOL {
            return Ok((p, diag));
        }
        h = dem_h;
    }
    Err(GeoError::NoConvergence {
        diagnostics: last,
        last_step,
    })
}

/// Dispatches to the constant-height or DEM solver.
pub fn rrdot_to_ground(
    state: &StateVector,
    rd: &RangeDoppler,
    surface: &Surface,
    look: LookSide,
) -> Result<(EcefPoint, SolveDiagnostics)> {
    match surface {
        Surface::ConstantHae(h) => rrdot_to_surface(state, rd, *h, look),
        Surface::Dem(dem) => rrdot_to_dem(state, rd, dem, look),
    }
}
