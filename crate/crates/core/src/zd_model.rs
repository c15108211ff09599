//! Zero-Doppler image geometry: range/azimuth-time grids, the azimuth-time solve
//! for a ground target, and forward mapping from grid pixels to the ground.

use serde::Serialize;

use crate::error::{GeoError, Result};
use crate::geodesy::{EcefPoint, Orbit};
use crate::pfa_model::{ImageIndex, RangeDoppler};
use crate::rd_solver::{rrdot_to_ground, LookSide, SolveDiagnostics, Surface};

/// Normalized orthogonality residual the azimuth-time solve drives below.
pub const ZD_RESIDUAL_TOL: f64 = 1e-12;
const ZD_MAX_ITERS: usize = 100;

/// Zero-Doppler raster: `row` indexes slant range, `col` (line) indexes azimuth time.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroDopplerGrid {
    pub r0: f64,
    pub dr: f64,
    pub t0: f64,
    pub dt: f64,
    pub rows: usize,
    pub lines: usize,
    pub orbit: Orbit,
    pub wavelength: f64,
    pub look_side: LookSide,
}

impl ZeroDopplerGrid {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        r0: f64,
        dr: f64,
        t0: f64,
        dt: f64,
        rows: usize,
        lines: usize,
        orbit: Orbit,
        wavelength: f64,
        look_side: LookSide,
    ) -> Result<Self> {
        if !(dr > 0.0) || dt == 0.0 || !dt.is_finite() {
            return Err(GeoError::Design(format!(
                "invalid spacings dr={dr}, dt={dt}"
            )));
        }
        if rows == 0 || lines == 0 {
            return Err(GeoError::Design("empty zero-Doppler grid".into()));
        }
        let t_end = t0 + dt * (lines - 1) as f64;
        if !orbit.contains(t0) || !orbit.contains(t_end) {
            return Err(GeoError::Design(format!(
                "azimuth span [{t0}, {t_end}] s not inside orbit span [{}, {}] s",
                orbit.start_time(),
                orbit.end_time()
            )));
        }
        Ok(Self {
            r0,
            dr,
            t0,
            dt,
            rows,
            lines,
            orbit,
            wavelength,
            look_side,
        })
    }

    pub fn range_at(&self, row: f64) -> f64 {
        self.r0 + self.dr * row
    }

    pub fn time_at(&self, line: f64) -> f64 {
        self.t0 + self.dt * line
    }

    /// Fractional pixel of a zero-Doppler solution.
    pub fn index_of(&self, sol: &ZdSolution) -> ImageIndex {
        ImageIndex {
            row: (sol.r - self.r0) / self.dr,
            col: (sol.eta - self.t0) / self.dt,
        }
    }

    pub fn description(&self) -> ZdGridDescription {
        ZdGridDescription {
            r0: self.r0,
            dr: self.dr,
            t0: self.t0,
            dt: self.dt,
            rows: self.rows,
            lines: self.lines,
            wavelength: self.wavelength,
            look_side: self.look_side,
            orbit: self
                .orbit
                .states()
                .iter()
                .map(|s| OrbitSample {
                    time: s.time,
                    position: [s.position.x, s.position.y, s.position.z],
                    velocity: [s.velocity.x, s.velocity.y, s.velocity.z],
                })
                .collect(),
        }
    }
}

/// JSON form of a grid written next to resampled rasters.
#[derive(Debug, Clone, Serialize)]
pub struct ZdGridDescription {
    pub r0: f64,
    pub dr: f64,
    pub t0: f64,
    pub dt: f64,
    pub rows: usize,
    pub lines: usize,
    pub wavelength: f64,
    pub look_side: LookSide,
    pub orbit: Vec<OrbitSample>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitSample {
    pub time: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZdSolution {
    pub eta: f64,
    pub r: f64,
}

struct Doppler {
    g: f64,
    dg: f64,
    norm: f64,
    range: f64,
}

fn doppler(orbit: &Orbit, target: &EcefPoint, eta: f64) -> Result<Doppler> {
    let (pos, vel, acc) = orbit.interpolate(eta)?;
    let los = pos - target.vec();
    let range = los.norm();
    Ok(Doppler {
        g: vel.dot(&los),
        dg: acc.dot(&los) + vel.norm_squared(),
        norm: vel.norm() * range,
        range,
    })
}

/// Azimuth time at which the platform velocity is orthogonal to the line of sight to
/// `target`, found by Newton iteration guarded by a bisection bracket.
pub fn zd_inverse_map(orbit: &Orbit, target: &EcefPoint, eta_guess: f64) -> Result<ZdSolution> {
    let (start, end) = (orbit.start_time(), orbit.end_time());
    let guess = if eta_guess.is_finite() {
        eta_guess.clamp(start, end)
    } else {
        orbit.mid_time()
    };

    let at_guess = doppler(orbit, target, guess)?;
    if at_guess.g == 0.0 {
        return Ok(ZdSolution {
            eta: guess,
            r: at_guess.range,
        });
    }

    // Grow a bracket geometrically toward the sign change. g increases with time for
    // a target the platform flies past.
    let forward = at_guess.g < 0.0;
    let (mut lo, mut hi) = (guess, guess);
    let mut step = 1.0;
    loop {
        let edge = if forward {
            (guess + step).min(end)
        } else {
            (guess - step).max(start)
        };
        let d = doppler(orbit, target, edge)?;
        if (d.g > 0.0) == forward || d.g == 0.0 {
            if forward {
                hi = edge;
            } else {
                lo = edge;
            }
            break;
        }
        if forward {
            lo = edge;
        } else {
            hi = edge;
        }
        if edge == start || edge == end {
            return Err(GeoError::OutOfSwath(format!(
                "no zero-Doppler crossing for target ({:.3}, {:.3}, {:.3}) inside orbit span",
                target.x, target.y, target.z
            )));
        }
        step *= 2.0;
    }

    let mut eta = if forward { lo } else { hi };
    for _ in 0..ZD_MAX_ITERS {
        let d = doppler(orbit, target, eta)?;
        if (d.g / d.norm).abs() < ZD_RESIDUAL_TOL {
            return Ok(ZdSolution { eta, r: d.range });
        }
        if d.g < 0.0 {
            lo = eta;
        } else {
            hi = eta;
        }
        let newton = eta - d.g / d.dg;
        eta = if d.dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    let d = doppler(orbit, target, eta)?;
    Ok(ZdSolution { eta, r: d.range })
}

/// Normalized zero-Doppler residual `V . (R_sat - T) / (|V| |R_sat - T|)` at `eta`.
pub fn zd_residual(orbit: &Orbit, target: &EcefPoint, eta: f64) -> Result<f64> {
    let d = doppler(orbit, target, eta)?;
    Ok(d.g / d.norm)
}

/// Derivative of the unnormalized residual with respect to azimuth time at `eta`.
pub fn zd_residual_slope(orbit: &Orbit, target: &EcefPoint, eta: f64) -> Result<f64> {
    Ok(doppler(orbit, target, eta)?.dg)
}

/// Ground point of a zero-Doppler pixel.
pub fn zd_forward_map(
    grid: &ZeroDopplerGrid,
    i: &ImageIndex,
    surface: &Surface,
) -> Result<(EcefPoint, SolveDiagnostics)> {
    let state = grid.orbit.state_at(grid.time_at(i.col))?;
    let rd = RangeDoppler {
        r: grid.range_at(i.row),
        rdot: 0.0,
    };
    rrdot_to_ground(&state, &rd, surface, grid.look_side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodesy::{StateVector, Vec3};

    fn linear_orbit() -> Orbit {
        let states = (-10..=10)
            .map(|k| {
                let t = k as f64 * 10.0;
                StateVector::new(
                    t,
                    EcefPoint::new(7.0e6, 7500.0 * t, 0.0),
                    Vec3::new(0.0, 7500.0, 0.0),
                )
            })
            .collect();
        Orbit::new(states).unwrap()
    }

    #[test]
    fn straight_line_closed_form() {
        let orbit = linear_orbit();
        let sol = zd_inverse_map(&orbit, &EcefPoint::new(6378137.0, 0.0, 0.0), 37.0).unwrap();
        assert!(sol.eta.abs() < 1e-9);
        assert!((sol.r - 621_863.0).abs() < 1e-6);
        let sol = zd_inverse_map(&orbit, &EcefPoint::new(6378137.0, 75_000.0, 0.0), -50.0).unwrap();
        assert!((sol.eta - 10.0).abs() < 1e-9);
        assert!(
            zd_residual_slope(&orbit, &EcefPoint::new(6378137.0, 0.0, 0.0), 0.0).unwrap() > 0.0
        );
    }

    #[test]
    fn out_of_swath() {
        let orbit = linear_orbit();
        let err = zd_inverse_map(&orbit, &EcefPoint::new(6378137.0, 2.0e6, 0.0), 0.0).unwrap_err();
        assert!(matches!(err, GeoError::OutOfSwath(_)));
    }

    #[test]
    fn forward_trivial_equator_point() {
        let grid = ZeroDopplerGrid::new(
            621_000.0,
            0.5,
            0.0,
            0.1,
            4000,
            1,
            linear_orbit(),
            0.03,
            LookSide::Left,
        )
        .unwrap();
        let (p, _) = zd_forward_map(
            &grid,
            &ImageIndex {
                row: 1726.0,
                col: 0.0,
            },
            &Surface::ConstantHae(0.0),
        )
        .unwrap();
        assert!(p.distance(&EcefPoint::new(6378137.0, 0.0, 0.0)) < 1e-3);
    }

    #[test]
    fn grid_must_fit_orbit() {
        assert!(ZeroDopplerGrid::new(
            6e5,
            1.0,
            90.0,
            1.0,
            10,
            20,
            linear_orbit(),
            0.03,
            LookSide::Left
        )
        .is_err());
        assert!(ZeroDopplerGrid::new(
            6e5,
            1.0,
            90.0,
            -1.0,
            10,
            20,
            linear_orbit(),
            0.03,
            LookSide::Left
        )
        .is_ok());
        assert!(ZeroDopplerGrid::new(
            6e5,
            0.0,
            0.0,
            1.0,
            10,
            20,
            linear_orbit(),
            0.03,
            LookSide::Left
        )
        .is_err());
    }
}
