//! WGS-84 geodesy, one-dimensional polynomials and orbit interpolation.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{GeoError, Result};

pub type Vec3 = Vector3<f64>;

/// WGS-84 semi-major axis in meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 inverse flattening.
pub const WGS84_INV_F: f64 = 298.257_223_563;
pub const WGS84_F: f64 = 1.0 / WGS84_INV_F;
/// Semi-minor axis, `a * (1 - f)`.
pub const WGS84_B: f64 = WGS84_A * (1.0 - WGS84_F);
/// First eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);
/// Second eccentricity squared.
pub const WGS84_EP2: f64 = WGS84_E2 / (1.0 - WGS84_E2);

/// Speed of light in vacuum (m/s), exact.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Earth-centered Earth-fixed position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EcefPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl EcefPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn vec(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn from_vec(v: &Vec3) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn distance(&self, other: &EcefPoint) -> f64 {
        (self.vec() - other.vec()).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<Vec3> for EcefPoint {
    fn from(v: Vec3) -> Self {
        Self::from_vec(&v)
    }
}

/// Geodetic coordinates: degrees of latitude and longitude, meters above the ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlhPoint {
    lat: f64,
    lon: f64,
    height: f64,
}

impl LlhPoint {
    /// Builds a point after checking latitude in [-90, 90], longitude in [-180, 180]
    /// and a finite height. A longitude of exactly +180 is folded to -180.
    pub fn new(lat: f64, lon: f64, height: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Domain(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Domain(format!(
                "longitude {lon} outside [-180, 180)"
            )));
        }
        if !height.is_finite() {
            return Err(GeoError::Domain(format!("height {height} is not finite")));
        }
        let lon = if lon == 180.0 { -180.0 } else { lon };
        Ok(Self { lat, lon, height })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn height(&self) -> f64 {
        self.height
    }
}

/// Closed-form WGS-84 geodetic to ECEF conversion.
pub fn llh_to_ecef(p: &LlhPoint) -> EcefPoint {
    let (slat, clat) = p.lat.to_radians().sin_cos();
    let (slon, clon) = p.lon.to_radians().sin_cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * slat * slat).sqrt();
    EcefPoint::new(
        (n + p.height) * clat * clon,
        (n + p.height) * clat * slon,
        (n * (1.0 - WGS84_E2) + p.height) * slat,
    )
}

/// ECEF to geodetic conversion using Bowring's iteration on the reduced latitude.
///
/// Points on the polar axis report longitude 0.
pub fn ecef_to_llh(p: &EcefPoint) -> Result<LlhPoint> {
    let (lat, lon, height) = ecef_to_llh_radians(p)?;
    let mut lon_deg = lon.to_degrees();
    if lon_deg >= 180.0 {
        lon_deg -= 360.0;
    }
    Ok(LlhPoint {
        lat: lat.to_degrees().clamp(-90.0, 90.0),
        lon: lon_deg,
        height,
    })
}

/// Ellipsoidal height of an ECEF point.
pub fn height_above_ellipsoid(p: &EcefPoint) -> Result<f64> {
    ecef_to_llh_radians(p).map(|(_, _, h)| h)
}

fn ecef_to_llh_radians(p: &EcefPoint) -> Result<(f64, f64, f64)> {
    let EcefPoint { x, y, z } = *p;
    if !p.is_finite() {
        return Err(GeoError::Domain("non-finite ECEF coordinate".into()));
    }
    let rho = x.hypot(y);
    if rho.hypot(z) < 1.0 {
        return Err(GeoError::Domain(
            "ECEF point within 1 m of the Earth's center".into(),
        ));
    }
    if rho == 0.0 {
        let lat = std::f64::consts::FRAC_PI_2.copysign(z);
        return Ok((lat, 0.0, z.abs() - WGS84_B));
    }
    let lon = y.atan2(x);

    let one_minus_f = 1.0 - WGS84_F;
    let mut beta = z.atan2(one_minus_f * rho);
    let mut lat = bowring_step(beta, rho, z);
    for _ in 0..6 {
        beta = (one_minus_f * lat.sin()).atan2(lat.cos());
        let next = bowring_step(beta, rho, z);
        let done = (next - lat).abs() < 1e-15;
        lat = next;
        if done {
            break;
        }
    }
    let (slat, clat) = lat.sin_cos();
    let h = rho * clat + z * slat - WGS84_A * (1.0 - WGS84_E2 * slat * slat).sqrt();
    Ok((lat, lon, h))
}

#[inline]
fn bowring_step(beta: f64, rho: f64, z: f64) -> f64 {
    let (sb, cb) = beta.sin_cos();
    (z + WGS84_EP2 * WGS84_B * sb * sb * sb).atan2(rho - WGS84_E2 * WGS84_A * cb * cb * cb)
}

/// Local east/north/up unit vectors at a geodetic position.
pub fn enu_basis(p: &LlhPoint) -> (Vec3, Vec3, Vec3) {
    let (slat, clat) = p.lat.to_radians().sin_cos();
    let (slon, clon) = p.lon.to_radians().sin_cos();
    let east = Vec3::new(-slon, clon, 0.0);
    let north = Vec3::new(-slat * clon, -slat * slon, clat);
    let up = Vec3::new(clat * clon, clat * slon, slat);
    (east, north, up)
}

/// Polynomial in one variable, constant term first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial1D {
    coefs: Vec<f64>,
}

impl Polynomial1D {
    pub fn new(coefs: Vec<f64>) -> Result<Self> {
        if coefs.is_empty() {
            return Err(GeoError::Domain(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        if coefs.iter().any(|c| !c.is_finite()) {
            return Err(GeoError::Domain(
                "polynomial coefficient is not finite".into(),
            ));
        }
        Ok(Self { coefs })
    }

    pub fn constant(c: f64) -> Self {
        Self { coefs: vec![c] }
    }

    pub fn coefs(&self) -> &[f64] {
        &self.coefs
    }

    pub fn degree(&self) -> usize {
        self.coefs.len() - 1
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coefs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Formal derivative; the derivative of a constant is `[0]`.
    pub fn derivative(&self) -> Polynomial1D {
        if self.coefs.len() == 1 {
            return Polynomial1D::constant(0.0);
        }
        let coefs = self
            .coefs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * k as f64)
            .collect();
        Polynomial1D { coefs }
    }
}

pub fn poly_eval(p: &Polynomial1D, x: f64) -> f64 {
    p.eval(x)
}

pub fn poly_derivative(p: &Polynomial1D) -> Polynomial1D {
    p.derivative()
}

/// Time-tagged platform position and velocity in ECEF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    pub time: f64,
    pub position: EcefPoint,
    pub velocity: Vec3,
}

impl StateVector {
    pub fn new(time: f64, position: EcefPoint, velocity: Vec3) -> Self {
        Self {
            time,
            position,
            velocity,
        }
    }
}

/// Ordered ephemeris with strictly increasing sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    states: Vec<StateVector>,
}

impl Orbit {
    pub fn new(states: Vec<StateVector>) -> Result<Self> {
        if states.len() < 2 {
            return Err(GeoError::InvalidOrbit(format!(
                "need at least 2 state vectors, got {}",
                states.len()
            )));
        }
        for w in states.windows(2) {
            if !(w[1].time > w[0].time) {
                return Err(GeoError::InvalidOrbit(format!(
                    "times not strictly increasing at {} -> {}",
                    w[0].time, w[1].time
                )));
            }
        }
        if states.iter().any(|s| {
            !s.time.is_finite()
                || !s.position.is_finite()
                || !s.velocity.iter().all(|v| v.is_finite())
        }) {
            return Err(GeoError::InvalidOrbit("non-finite state vector".into()));
        }
        Ok(Self { states })
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn start_time(&self) -> f64 {
        self.states[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.states[self.states.len() - 1].time
    }

    pub fn mid_time(&self) -> f64 {
        0.5 * (self.start_time() + self.end_time())
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_time() && t <= self.end_time()
    }

    /// Cubic Hermite interpolation of position and velocity.
    pub fn state_at(&self, t: f64) -> Result<StateVector> {
        let (pos, vel, _) = self.interpolate(t)?;
        Ok(StateVector::new(t, EcefPoint::from_vec(&pos), vel))
    }

    /// Position, velocity and acceleration of the Hermite interpolant at `t`.
    pub fn interpolate(&self, t: f64) -> Result<(Vec3, Vec3, Vec3)> {
        if !self.contains(t) {
            return Err(GeoError::OutsideOrbit {
                t,
                start: self.start_time(),
                end: self.end_time(),
            });
        }
        let n = self.states.len();
        let i = self.states.partition_point(|s| s.time <= t).clamp(1, n - 1) - 1;
        let (s0, s1) = (&self.states[i], &self.states[i + 1]);
        let (p0, p1) = (s0.position.vec(), s1.position.vec());
        let (v0, v1) = (s0.velocity, s1.velocity);
        let h = s1.time - s0.time;
        let s = (t - s0.time) / h;
        if t == s0.time {
            return Ok((p0, v0, hermite_accel(0.0, h, &p0, &p1, &v0, &v1)));
        }
        if t == s1.time {
            return Ok((p1, v1, hermite_accel(1.0, h, &p0, &p1, &v0, &v1)));
        }
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let pos = p0 * h00 + v0 * (h10 * h) + p1 * h01 + v1 * (h11 * h);

        let d00 = 6.0 * s2 - 6.0 * s;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d11 = 3.0 * s2 - 2.0 * s;
        let vel = (p0 - p1) * (d00 / h) + v0 * d10 + v1 * d11;
        Ok((pos, vel, hermite_accel(s, h, &p0, &p1, &v0, &v1)))
    }
}

fn hermite_accel(s: f64, h: f64, p0: &Vec3, p1: &Vec3, v0: &Vec3, v1: &Vec3) -> Vec3 {
    let a00 = 12.0 * s - 6.0;
    let a10 = 6.0 * s - 4.0;
    let a11 = 6.0 * s - 2.0;
    (p0 - p1) * (a00 / (h * h)) + v0 * (a10 / h) + v1 * (a11 / h)
}

pub fn orbit_state_at(orbit: &Orbit, t: f64) -> Result<StateVector> {
    orbit.state_at(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equator_prime_meridian_is_semi_major_axis() {
        let p = llh_to_ecef(&LlhPoint::new(0.0, 0.0, 0.0).unwrap());
        assert_eq!(p, EcefPoint::new(6378137.0, 0.0, 0.0));
    }

    #[test]
    fn north_pole_is_semi_minor_axis() {
        let p = llh_to_ecef(&LlhPoint::new(90.0, 0.0, 0.0).unwrap());
        assert!(p.x.abs() < 1e-6 && p.y.abs() < 1e-6);
        assert!((p.z - 6356752.3142).abs() < 1e-3);
    }

    #[test]
    fn los_angeles_matches_textbook_formula() {
        // Direct evaluation of N = a / sqrt(1 - e^2 sin^2 lat), evaluated separately at 30 digits.
        let p = llh_to_ecef(&LlhPoint::new(34.05, -118.25, 500.0).unwrap());
        assert!((p.x - -2_504_130.472_208_892).abs() < 1e-6, "{p:?}");
        assert!((p.y - -4_660_413.443_934_171).abs() < 1e-6, "{p:?}");
        assert!((p.z - 3_551_323.128_055_019).abs() < 1e-6, "{p:?}");
        assert!((height_above_ellipsoid(&p).unwrap() - 500.0).abs() < 1e-6);
    }

    #[test]
    fn inverse_on_axis_points() {
        let llh = ecef_to_llh(&EcefPoint::new(6378137.0, 0.0, 0.0)).unwrap();
        assert!(llh.lat().abs() < 1e-9 && llh.lon().abs() < 1e-9 && llh.height().abs() < 1e-4);

        let pole = ecef_to_llh(&EcefPoint::new(0.0, 0.0, 6356752.3142)).unwrap();
        assert_eq!(pole.lat(), 90.0);
        assert_eq!(pole.lon(), 0.0);
        assert!(pole.height().abs() < 1e-3);

        let south = ecef_to_llh(&EcefPoint::new(0.0, 0.0, -6356852.0)).unwrap();
        assert_eq!(south.lat(), -90.0);
    }

    #[test]
    fn near_center_is_domain_error() {
        assert!(matches!(
            ecef_to_llh(&EcefPoint::new(0.3, 0.2, 0.1)),
            Err(GeoError::Domain(_))
        ));
    }

    #[test]
    fn longitude_range_and_fold() {
        assert_eq!(LlhPoint::new(0.0, 180.0, 0.0).unwrap().lon(), -180.0);
        assert!(LlhPoint::new(91.0, 0.0, 0.0).is_err());
        assert!(LlhPoint::new(0.0, -181.0, 0.0).is_err());
        let llh = ecef_to_llh(&EcefPoint::new(-6378137.0, 0.0, 0.0)).unwrap();
        assert_eq!(llh.lon(), -180.0);
    }

    #[test]
    fn round_trip_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..2000 {
            let llh = LlhPoint::new(
                rng.gen_range(-90.0..=90.0),
                rng.gen_range(-180.0..180.0),
                rng.gen_range(-500.0..9000.0),
            )
            .unwrap();
            let p = llh_to_ecef(&llh);
            let back = llh_to_ecef(&ecef_to_llh(&p).unwrap());
            assert!(p.distance(&back) < 1e-4, "{llh:?}");
        }
    }

    #[test]
    fn polynomial_basics() {
        assert_eq!(Polynomial1D::constant(2.0).eval(17.0), 2.0);
        assert_eq!(
            Polynomial1D::new(vec![1.0, 2.0, 3.0]).unwrap().eval(2.0),
            17.0
        );
        assert_eq!(Polynomial1D::constant(5.0).derivative().coefs(), &[0.0]);
        assert_eq!(
            Polynomial1D::new(vec![0.0, 0.0, 1.0])
                .unwrap()
                .derivative()
                .coefs(),
            &[0.0, 2.0]
        );
        assert!(Polynomial1D::new(vec![]).is_err());
        assert!(Polynomial1D::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn horner_matches_power_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let coefs: Vec<f64> = (0..6).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let x: f64 = rng.gen_range(-2.0..2.0);
            let naive: f64 = coefs
                .iter()
                .enumerate()
                .map(|(k, c)| c * x.powi(k as i32))
                .sum();
            let p = Polynomial1D::new(coefs).unwrap();
            assert!((p.eval(x) - naive).abs() < 1e-12 * (1.0 + naive.abs()));
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = Polynomial1D::new((0..7).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let dp = p.derivative();
        let h = 1e-4;
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-1.5..1.5);
            let fd = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
            assert!((fd - dp.eval(x)).abs() < 1e-6);
        }
    }

    fn linear_orbit() -> Orbit {
        let states = (0..5)
            .map(|k| {
                let t = k as f64 * 10.0;
                StateVector::new(
                    t,
                    EcefPoint::new(7.0e6, 7500.0 * t, 100.0 * t),
                    Vec3::new(0.0, 7500.0, 100.0),
                )
            })
            .collect();
        Orbit::new(states).unwrap()
    }

    #[test]
    fn orbit_nodes_are_exact() {
        let orbit = linear_orbit();
        for s in orbit.states() {
            let got = orbit.state_at(s.time).unwrap();
            assert_eq!(got.position, s.position);
            assert_eq!(got.velocity, s.velocity);
        }
    }

    #[test]
    fn orbit_reproduces_lines() {
        let orbit = linear_orbit();
        let sv = orbit.state_at(15.0).unwrap();
        assert!((sv.position.y - 112_500.0).abs() < 1e-8);
        assert!((sv.position.z - 1500.0).abs() < 1e-10);
        assert!((sv.velocity - Vec3::new(0.0, 7500.0, 100.0)).norm() < 1e-9);
    }

    #[test]
    fn orbit_rejects_extrapolation_and_bad_input() {
        let orbit = linear_orbit();
        assert!(matches!(
            orbit.state_at(-0.1),
            Err(GeoError::OutsideOrbit { .. })
        ));
        assert!(matches!(
            orbit.state_at(40.1),
            Err(GeoError::OutsideOrbit { .. })
        ));
        let s = orbit.states()[0];
        assert!(Orbit::new(vec![s]).is_err());
        assert!(Orbit::new(vec![s, s]).is_err());
    }

    #[test]
    fn circular_orbit_midpoint_accuracy() {
        let r = 7.0e6;
        let w = 7500.0 / r;
        let states = (0..7)
            .map(|k| {
                let t = k as f64 * 10.0;
                let (s, c) = (w * t).sin_cos();
                StateVector::new(
                    t,
                    EcefPoint::new(r * c, r * s, 0.0),
                    Vec3::new(-r * w * s, r * w * c, 0.0),
                )
            })
            .collect();
        let orbit = Orbit::new(states).unwrap();
        for k in 0..6 {
            let t = k as f64 * 10.0 + 5.0;
            let (s, c) = (w * t).sin_cos();
            let truth = EcefPoint::new(r * c, r * s, 0.0);
            let sv = orbit.state_at(t).unwrap();
            assert!(sv.position.distance(&truth) < 1e-3);
        }
        // C1 continuity across an interior node
        let eps = 1e-9;
        let left = orbit.state_at(30.0 - eps).unwrap().velocity;
        let right = orbit.state_at(30.0 + eps).unwrap().velocity;
        assert!((left - right).norm() < 1e-4);
    }
}
