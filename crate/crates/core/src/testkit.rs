//! Independent references for checking the geometry code.
//!
//! Nothing here calls the solvers, the affine model or the resampler. The oracles use
//! plain vector algebra, dense scanning and bisection, plus the geodetic conversions
//! and orbit interpolation from [`crate::geodesy`].

use std::f64::consts::TAU;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geodesy::{
    ecef_to_llh, enu_basis, height_above_ellipsoid, llh_to_ecef, EcefPoint, LlhPoint, Orbit,
    Polynomial1D, StateVector, Vec3, SPEED_OF_LIGHT, WGS84_A, WGS84_B, WGS84_E2, WGS84_EP2,
};
use crate::pfa_model::{ImageIndex, PfaConstants, RangeDoppler};
use crate::rd_solver::LookSide;
use crate::sicd::{ArpPoly, CoaState, Polynomial2D, SicdMeta};

pub const GM_EARTH: f64 = 3.986_004_418e14;

/// Scan step of the brute-force cone search, radians.
pub const BRUTE_SCAN_STEP: f64 = 1e-5;
/// Bisection stopping width of the brute-force cone search, radians.
pub const BRUTE_REFINE_TOL: f64 = 1e-10;
/// Scan step of the zero-Doppler time search, seconds.
pub const ZD_SCAN_STEP: f64 = 1e-3;
/// Step used by the finite-difference range rate, seconds.
pub const FD_STEP: f64 = 1e-3;

const CENTER_FREQUENCY: f64 = 9.65e9;
const T_COA: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    EquatorialNadirOffset,
    MidLatitudeSquint,
    HighIncidence,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::EquatorialNadirOffset,
        Preset::MidLatitudeSquint,
        Preset::HighIncidence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::EquatorialNadirOffset => "equatorial-nadir-offset",
            Preset::MidLatitudeSquint => "mid-latitude-squint",
            Preset::HighIncidence => "high-incidence",
        }
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

/// Circular orbit about the Earth's center, fixed in ECEF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularOrbit {
    pub radius: f64,
    pub omega: f64,
    /// Position direction at `t_ref`.
    pub p_hat: Vec3,
    /// Velocity direction at `t_ref`, orthogonal to `p_hat`.
    pub v_hat: Vec3,
    pub t_ref: f64,
}

impl CircularOrbit {
    /// n-th time derivative of position at `t`.
    pub fn derivative(&self, n: usize, t: f64) -> Vec3 {
        let (s, c) = (self.omega * (t - self.t_ref)).sin_cos();
        let scale = self.radius * self.omega.powi(n as i32);
        // d^n/dt^n of (cos, sin) rotates the phase by n quarter turns
        let (dc, ds) = match n % 4 {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        };
        (self.p_hat * dc + self.v_hat * ds) * scale
    }

    pub fn state(&self, t: f64) -> StateVector {
        StateVector::new(
            t,
            EcefPoint::from_vec(&self.derivative(0, t)),
            self.derivative(1, t),
        )
    }

    pub fn sample(&self, start: f64, end: f64, step: f64) -> Orbit {
        let n = ((end - start) / step).round() as usize;
        Orbit::new(
            (0..=n)
                .map(|k| self.state(start + k as f64 * step))
                .collect(),
        )
        .expect("sampled orbit is ordered")
    }

    /// Per-axis Taylor polynomial of the given degree about `t0`, in powers of `t`.
    pub fn arp_poly(&self, t0: f64, degree: usize) -> ArpPoly {
        let mut taylor = [vec![], vec![], vec![]];
        let mut fact = 1.0;
        for n in 0..=degree {
            if n > 0 {
                fact *= n as f64;
            }
            let d = self.derivative(n, t0) / fact;
            for axis in 0..3 {
                taylor[axis].push(d[axis]);
            }
        }
        let [x, y, z] = taylor.map(|c| Polynomial1D::new(shift_polynomial(&c, t0)).unwrap());
        ArpPoly { x, y, z }
    }
}

/// Converts coefficients of `sum d_n (x - x0)^n` into coefficients of powers of `x`.
pub fn shift_polynomial(about: &[f64], x0: f64) -> Vec<f64> {
    let n = about.len();
    let mut out = vec![0.0; n];
    for (deg, d) in about.iter().enumerate() {
        let mut binom = 1.0;
        for (k, slot) in out.iter_mut().enumerate().take(deg + 1) {
            // C(deg, k) * (-x0)^(deg - k)
            *slot += d * binom * (-x0).powi((deg - k) as i32);
            binom = binom * (deg - k) as f64 / (k + 1) as f64;
        }
    }
    out
}

/// Side indicator `(V x (P - R_sat)) . R_sat`.
pub fn side_indicator(state: &StateVector, p: &EcefPoint) -> f64 {
    let sat = state.position.vec();
    state.velocity.cross(&(p.vec() - sat)).dot(&sat)
}

/// Range and range rate of `p` seen from `state`, by direct evaluation.
pub fn direct_rrdot(state: &StateVector, p: &EcefPoint) -> RangeDoppler {
    let los = state.position.vec() - p.vec();
    let r = los.norm();
    RangeDoppler {
        r,
        rdot: state.velocity.dot(&los) / r,
    }
}

/// The four affine entries `[a11, a12, a21, a22]`, evaluated term by term.
pub fn affine_entries_oracle(k: &PfaConstants) -> [f64; 4] {
    let cos_t = k.theta_coa.cos();
    let sin_t = k.theta_coa.sin();
    let a11 = k.ksf * cos_t;
    let a12 = k.ksf * sin_t;
    let a21 = (k.dksf_dtheta * cos_t - k.ksf * sin_t) * k.dtheta_dt;
    let a22 = (k.dksf_dtheta * sin_t + k.ksf * cos_t) * k.dtheta_dt;
    [a11, a12, a21, a22]
}

/// Image coordinates `(rg, az)` of a range/range-rate pair by Cramer's rule.
pub fn cramer_image_coord(k: &PfaConstants, rd: &RangeDoppler) -> (f64, f64) {
    let [a11, a12, a21, a22] = affine_entries_oracle(k);
    let det = a11 * a22 - a12 * a21;
    let (b1, b2) = (rd.r - k.r_scp, rd.rdot - k.rdot_scp);
    ((b1 * a22 - a12 * b2) / det, (a11 * b2 - b1 * a21) / det)
}

/// Distance in units in the last place between two finite floats.
pub fn ulp_distance(a: f64, b: f64) -> u64 {
    fn key(x: f64) -> i64 {
        let bits = x.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    }
    key(a).abs_diff(key(b))
}

/// Spacing of floats at magnitude `x`.
pub fn ulp_of(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return f64::MIN_POSITIVE;
    }
    f64::from_bits(x.to_bits() + 1) - x
}

/// Brute-force ground point of `(R, Rdot)` at constant height: scan the full cone
/// circle at [`BRUTE_SCAN_STEP`], keep sign changes of `height - h` whose endpoints
/// both lie on the look side, take the one farthest from the nadir direction, and
/// bisect it down to [`BRUTE_REFINE_TOL`]. `None` means no crossing was found.
pub fn brute_force_rrdot(
    state: &StateVector,
    rd: &RangeDoppler,
    height: f64,
    look: LookSide,
) -> Option<EcefPoint> {
    let sat = state.position.vec();
    let speed = state.velocity.norm();
    if !(rd.rdot.abs() < speed) || !(rd.r > 0.0) {
        return None;
    }
    let vhat = state.velocity / speed;
    // Any orthonormal pair spanning the plane normal to the velocity.
    let helper = if vhat.z.abs() < 0.9 {
        Vec3::z()
    } else {
        Vec3::x()
    };
    let b1 = vhat.cross(&helper).normalize();
    let b2 = vhat.cross(&b1);
    let along = -rd.rdot / speed;
    let across = (1.0 - along * along).sqrt();
    let (axis, u1, u2) = (
        sat + vhat * (along * rd.r),
        b1 * (across * rd.r),
        b2 * (across * rd.r),
    );
    let point_sc = |c: f64, s: f64| -> Vec3 { axis + u1 * c + u2 * s };
    let point = |psi: f64| -> Vec3 {
        let (s, c) = psi.sin_cos();
        point_sc(c, s)
    };
    let exact = |psi: f64| -> f64 {
        height_above_ellipsoid(&EcefPoint::from_vec(&point(psi))).unwrap_or(f64::NAN) - height
    };
    let approx = |psi: f64| -> f64 { approx_height(&point(psi)) - height };
    // The side indicator is linear in (cos psi, sin psi) on this circle.
    let side_c = vhat.cross(&b1).dot(&sat) * look.sign();
    let side_s = vhat.cross(&b2).dot(&sat) * look.sign();
    let nadir = -sat.normalize();

    let steps = (TAU / BRUTE_SCAN_STEP).ceil() as usize;
    let mut best: Option<(f64, f64, f64)> = None; // (a, b, angle from nadir)
    let mut prev: Option<(f64, f64)> = None;
    for k in 0..=steps {
        let psi = k as f64 * BRUTE_SCAN_STEP;
        let (sn, cs) = psi.sin_cos();
        if !(side_c * cs + side_s * sn > 0.0) {
            prev = None;
            continue;
        }
        let fp = approx_height(&point_sc(cs, sn)) - height;
        if let Some((pa, fa)) = prev {
            if (fa < 0.0) != (fp < 0.0) {
                let dir = (point(psi) - sat).normalize();
                let off_nadir = dir.dot(&nadir).clamp(-1.0, 1.0).acos();
                if best.is_none_or(|b| off_nadir > b.2) {
                    best = Some((pa, psi, off_nadir));
                }
            }
        }
        prev = Some((psi, fp));
    }
    let Some((mut a, mut b, _)) = best else {
        return tangent_touch(&approx, &exact, steps).map(|psi| EcefPoint::from_vec(&point(psi)));
    };
    // The scan used the approximate height; widen until the exact height brackets too.
    let (mut fa, mut fb) = (exact(a), exact(b));
    for _ in 0..8 {
        if (fa < 0.0) != (fb < 0.0) {
            break;
        }
        a -= BRUTE_SCAN_STEP;
        b += BRUTE_SCAN_STEP;
        fa = exact(a);
        fb = exact(b);
    }
    if (fa < 0.0) == (fb < 0.0) {
        return None;
    }
    let neg_at_a = fa < 0.0;
    while b - a > BRUTE_REFINE_TOL {
        let m = 0.5 * (a + b);
        if (exact(m) < 0.0) == neg_at_a {
            a = m;
        } else {
            b = m;
        }
    }
    Some(EcefPoint::from_vec(&point(0.5 * (a + b))))
}

/// Ellipsoidal height from one Bowring step, without trigonometric calls. Within a
/// millimeter of the exact height for points within a few kilometers of the surface.
pub fn approx_height(p: &Vec3) -> f64 {
    let (a, b) = (WGS84_A, WGS84_B);
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    let (tz, tr) = (p.z * a, rho * b);
    let n = (tz * tz + tr * tr).sqrt();
    let (su, cu) = (tz / n, tr / n);
    let num = p.z + WGS84_EP2 * b * su * su * su;
    let den = rho - WGS84_E2 * a * cu * cu * cu;
    let n = (num * num + den * den).sqrt();
    let (sl, cl) = (num / n, den / n);
    rho * cl + p.z * sl - a * (1.0 - WGS84_E2 * sl * sl).sqrt()
}

/// Angle where the circle only touches the surface: the scan minimum of `|approx|`,
/// refined by parabolic vertices of the exact height at shrinking spacings, accepted
/// when the exact height error is below 1e-6 m.
fn tangent_touch(
    approx: &impl Fn(f64) -> f64,
    exact: &impl Fn(f64) -> f64,
    steps: usize,
) -> Option<f64> {
    let k = (0..=steps)
        .map(|k| (k, approx(k as f64 * BRUTE_SCAN_STEP).abs()))
        .filter(|(_, v)| v.is_finite())
        .min_by(|x, y| x.1.total_cmp(&y.1))?
        .0;
    let mut psi = k as f64 * BRUTE_SCAN_STEP;
    for h in [1e-3, 1e-4, 1e-5] {
        let (fm, f0, fp) = (exact(psi - h), exact(psi), exact(psi + h));
        let curvature = fm - 2.0 * f0 + fp;
        if curvature > 0.0 {
            psi -= 0.5 * h * (fp - fm) / curvature;
        }
    }
    (exact(psi).abs() < 1e-6).then_some(psi)
}

/// Range rate by central differences of the range over `eta +/- FD_STEP`.
pub fn finite_diff_rdot(orbit: &Orbit, target: &EcefPoint, eta: f64) -> crate::error::Result<f64> {
    let r =
        |t: f64| -> crate::error::Result<f64> { Ok(orbit.state_at(t)?.position.distance(target)) };
    Ok((r(eta + FD_STEP)? - r(eta - FD_STEP)?) / (2.0 * FD_STEP))
}

/// Zero-Doppler time by scanning `V . (R_sat - T)` on a 1 ms grid over `[start, end]`
/// and bisecting the first sign change.
pub fn dense_scan_zero_doppler(
    orbit: &Orbit,
    target: &EcefPoint,
    start: f64,
    end: f64,
) -> Option<f64> {
    let g = |t: f64| -> f64 {
        let s = orbit.state_at(t).expect("scan stays inside the orbit");
        s.velocity.dot(&(s.position.vec() - target.vec()))
    };
    let start = start.max(orbit.start_time());
    let end = end.min(orbit.end_time());
    let n = ((end - start) / ZD_SCAN_STEP).floor() as usize;
    let mut prev = (start, g(start));
    for k in 1..=n {
        let t = start + k as f64 * ZD_SCAN_STEP;
        let gt = g(t);
        if (prev.1 < 0.0) != (gt < 0.0) {
            let (mut a, mut b, neg_a) = (prev.0, t, prev.1 < 0.0);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if (g(m) < 0.0) == neg_a {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        prev = (t, gt);
    }
    None
}

/// Places a circular-orbit platform so a ground point is seen at the given local
/// incidence and squint angles (degrees) on the requested side.
pub fn place_platform(
    target: &LlhPoint,
    incidence_deg: f64,
    squint_deg: f64,
    altitude: f64,
    heading_deg: f64,
    look: LookSide,
    t_ref: f64,
) -> CircularOrbit {
    let (east, north, up) = enu_basis(target);
    let t = llh_to_ecef(target).vec();
    let along = north * heading_deg.to_radians().cos() + east * heading_deg.to_radians().sin();
    let right = along.cross(&up);
    let toward_sat = match look {
        LookSide::Left => right,
        LookSide::Right => -right,
    };
    let (ss, cs) = squint_deg.to_radians().sin_cos();
    let horizontal = toward_sat * cs + along * ss;
    let (si, ci) = incidence_deg.to_radians().sin_cos();
    let d = up * ci + horizontal * si;
    let radius = WGS84_A + altitude;
    let td = t.dot(&d);
    let l = -td + (td * td - t.norm_squared() + radius * radius).sqrt();
    let pos = t + d * l;
    let p_hat = pos.normalize();
    let v_hat = (along - p_hat * along.dot(&p_hat)).normalize();
    CircularOrbit {
        radius,
        omega: (GM_EARTH / radius).sqrt() / radius,
        p_hat,
        v_hat,
        t_ref,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub ground: EcefPoint,
    pub height: f64,
    pub rd: RangeDoppler,
    pub pixel: ImageIndex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneOptions {
    pub rows: usize,
    pub cols: usize,
    pub probes: usize,
}

impl Default for SceneOptions {
    fn default() -> Self {
        Self {
            rows: 1024,
            cols: 1024,
            probes: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub preset: Preset,
    pub seed: u64,
    pub platform: CircularOrbit,
    /// Platform orbit sampled every 10 s over +/-200 s around COA.
    pub orbit: Orbit,
    pub meta: SicdMeta,
    /// The constants the metadata polynomials were built to reproduce.
    pub constants: PfaConstants,
    pub probes: Vec<Probe>,
}

struct PresetGeometry {
    scp: LlhPoint,
    look: LookSide,
    platform: CircularOrbit,
}

fn preset_geometry(preset: Preset) -> PresetGeometry {
    match preset {
        Preset::EquatorialNadirOffset => {
            // Platform at (7000 km, 0, 0) moving +y at 7.5 km/s at COA.
            let radius = 7.0e6;
            PresetGeometry {
                scp: LlhPoint::new(4.5, 0.0, 0.0).unwrap(),
                look: LookSide::Left,
                platform: CircularOrbit {
                    radius,
                    omega: 7.5e3 / radius,
                    p_hat: Vec3::x(),
                    v_hat: Vec3::y(),
                    t_ref: T_COA,
                },
            }
        }
        Preset::MidLatitudeSquint => {
            let scp = LlhPoint::new(40.2, -3.7, 350.0).unwrap();
            let look = LookSide::Right;
            PresetGeometry {
                scp,
                look,
                platform: place_platform(&scp, 35.0, 6.0, 520.0e3, 190.0, look, T_COA),
            }
        }
        Preset::HighIncidence => {
            let scp = LlhPoint::new(-25.4, 133.9, 1200.0).unwrap();
            let look = LookSide::Left;
            PresetGeometry {
                scp,
                look,
                platform: place_platform(&scp, 58.0, -2.0, 600.0e3, 350.0, look, T_COA),
            }
        }
    }
}

pub fn make_synthetic_scene(seed: u64, preset: Preset) -> SyntheticScene {
    make_synthetic_scene_with(seed, preset, SceneOptions::default())
}

/// Builds a self-consistent constant-COA scene and probe set.
pub fn make_synthetic_scene_with(seed: u64, preset: Preset, opts: SceneOptions) -> SyntheticScene {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (preset as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let geo = preset_geometry(preset);
    let platform = geo.platform;
    let coa = platform.state(T_COA);
    let scp_ecef = llh_to_ecef(&geo.scp);

    let los = coa.position.vec() - scp_ecef.vec();
    let r_scp = los.norm();
    let rdot_scp = coa.velocity.dot(&los) / r_scp;
    let los_rate = coa.velocity.cross(&(los / r_scp)).norm() / r_scp;

    let theta = rng.gen_range(0.02..0.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let ksf = rng.gen_range(0.98..1.02);
    let dksf = rng.gen_range(-0.05..0.05);
    let constants = PfaConstants {
        arp_pos: coa.position,
        arp_vel: coa.velocity,
        r_scp,
        rdot_scp,
        theta_coa: theta,
        dtheta_dt: los_rate,
        ksf,
        dksf_dtheta: dksf,
        t_coa: T_COA,
        wavelength: SPEED_OF_LIGHT / CENTER_FREQUENCY,
        look_side: geo.look,
    };

    let q = rng.gen_range(-1e-5..1e-5);
    let polar_ang_poly = Polynomial1D::new(shift_polynomial(&[theta, los_rate, q], T_COA)).unwrap();
    let sf_poly = Polynomial1D::new(shift_polynomial(
        &[
            ksf,
            dksf,
            rng.gen_range(-0.01..0.01),
            rng.gen_range(-0.01..0.01),
        ],
        theta,
    ))
    .unwrap();

    let row_spacing = rng.gen_range(0.5..1.0);
    let col_spacing = rng.gen_range(0.5..1.0);
    let meta = SicdMeta {
        scp_ecef,
        scp_llh: geo.scp,
        scp_row: (opts.rows / 2) as f64,
        scp_col: (opts.cols / 2) as f64,
        rows: opts.rows,
        cols: opts.cols,
        row_spacing,
        col_spacing,
        time_coa_poly: Polynomial2D::constant(T_COA),
        polar_ang_poly,
        spatial_freq_sf_poly: sf_poly,
        arp_poly: platform.arp_poly(T_COA, 5),
        coa_state: Some(CoaState {
            pos: coa.position,
            vel: coa.velocity,
        }),
        center_frequency: CENTER_FREQUENCY,
        side_of_track: geo.look,
        collect_start: None,
    };

    let (east, north, _) = enu_basis(&geo.scp);
    let extent = (opts.rows as f64 * row_spacing).max(opts.cols as f64 * col_spacing);
    let mut probes = Vec::with_capacity(opts.probes);
    let mut attempts = 0;
    while probes.len() < opts.probes && attempts < 1000 * opts.probes.max(1) {
        attempts += 1;
        let offset = east * rng.gen_range(-extent..extent) + north * rng.gen_range(-extent..extent);
        let h = geo.scp.height() + rng.gen_range(-200.0..200.0);
        let horiz = ecef_to_llh(&EcefPoint::from_vec(&(scp_ecef.vec() + offset))).unwrap();
        let ground = llh_to_ecef(&LlhPoint::new(horiz.lat(), horiz.lon(), h).unwrap());
        let rd = direct_rrdot(&coa, &ground);
        let (rg, az) = cramer_image_coord(&constants, &rd);
        let pixel = ImageIndex {
            row: rg / row_spacing + meta.scp_row,
            col: az / col_spacing + meta.scp_col,
        };
        let inside = pixel.row >= 0.0
            && pixel.col >= 0.0
            && pixel.row <= (opts.rows - 1) as f64
            && pixel.col <= (opts.cols - 1) as f64;
        if inside {
            probes.push(Probe {
                ground,
                height: h,
                rd,
                pixel,
            });
        }
    }

    SyntheticScene {
        preset,
        seed,
        platform,
        orbit: platform.sample(T_COA - 200.0, T_COA + 200.0, 10.0),
        meta,
        constants,
        probes,
    }
}

/// A randomized solver case. `truth` is `None` for cases built to have no solution.
#[derive(Debug, Clone, Copy)]
pub struct SolverCase {
    pub state: StateVector,
    pub rd: RangeDoppler,
    pub height: f64,
    pub look: LookSide,
    pub truth: Option<EcefPoint>,
}

/// Random visible geometry from a 450-750 km orbit shell. About one case in seven has
/// its range shortened below the closest surface distance.
pub fn random_solver_case(rng: &mut impl Rng) -> SolverCase {
    let lat = rng.gen_range(-70.0..70.0);
    let lon = rng.gen_range(-180.0..180.0);
    let h = rng.gen_range(-100.0..4000.0);
    let target = LlhPoint::new(lat, lon, h).unwrap();
    let look = if rng.gen_bool(0.5) {
        LookSide::Left
    } else {
        LookSide::Right
    };
    let platform = place_platform(
        &target,
        rng.gen_range(15.0..60.0),
        rng.gen_range(-15.0..15.0),
        rng.gen_range(450.0e3..750.0e3),
        rng.gen_range(0.0..360.0),
        look,
        0.0,
    );
    let state = platform.state(0.0);
    let ground = llh_to_ecef(&target);
    let rd = direct_rrdot(&state, &ground);
    if rng.gen_range(0..7) == 0 {
        let short = state.position.vec().norm() - WGS84_A - h - rng.gen_range(5.0e3..50.0e3);
        return SolverCase {
            state,
            rd: RangeDoppler {
                r: short,
                rdot: rd.rdot,
            },
            height: h,
            look,
            truth: None,
        };
    }
    SolverCase {
        state,
        rd,
        height: h,
        look,
        truth: Some(ground),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pfa_model::derive_pfa_constants;

    #[test]
    fn shifted_polynomial_matches_taylor_form() {
        let about = [1.5, -0.25, 0.125, 0.75];
        let x0 = 2.5;
        let p = Polynomial1D::new(shift_polynomial(&about, x0)).unwrap();
        for x in [-1.0, 0.0, 2.5, 4.0] {
            let direct: f64 = about
                .iter()
                .enumerate()
                .map(|(n, d)| d * (x - x0).powi(n as i32))
                .sum();
            assert!((p.eval(x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn circular_orbit_derivatives() {
        let c = preset_geometry(Preset::MidLatitudeSquint).platform;
        let h = 1e-3;
        let fd = (c.derivative(0, 1.0 + h) - c.derivative(0, 1.0 - h)) / (2.0 * h);
        assert!((fd - c.derivative(1, 1.0)).norm() < 1e-3);
        let fd2 = (c.derivative(1, 1.0 + h) - c.derivative(1, 1.0 - h)) / (2.0 * h);
        assert!((fd2 - c.derivative(2, 1.0)).norm() < 1e-6);
    }

    #[test]
    fn equatorial_preset_reproduces_trivial_state() {
        let scene = make_synthetic_scene(1, Preset::EquatorialNadirOffset);
        let s = scene.constants;
        assert_eq!(s.arp_pos, EcefPoint::new(7.0e6, 0.0, 0.0));
        assert_eq!(s.arp_vel, Vec3::new(0.0, 7.5e3, 0.0));
        assert_eq!(s.rdot_scp, 0.0);
    }

    #[test]
    fn derived_constants_match_generator() {
        for preset in Preset::ALL {
            let scene = make_synthetic_scene(5, preset);
            let k = derive_pfa_constants(&scene.meta).unwrap();
            let t = scene.constants;
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            assert!(rel(k.theta_coa, t.theta_coa) < 1e-12, "{preset:?}");
            assert!(rel(k.dtheta_dt, t.dtheta_dt) < 1e-12, "{preset:?}");
            assert!(rel(k.ksf, t.ksf) < 1e-12);
            assert!(
                rel(k.dksf_dtheta, t.dksf_dtheta) < 1e-10,
                "{} {}",
                k.dksf_dtheta,
                t.dksf_dtheta
            );
            assert!(rel(k.r_scp, t.r_scp) < 1e-12);
            assert!((k.rdot_scp - t.rdot_scp).abs() < 1e-9);
            assert!(
                scene.meta.consistency_warnings().is_empty(),
                "{:?}",
                scene.meta.consistency_warnings()
            );
        }
    }

    #[test]
    fn probes_are_self_consistent() {
        for preset in Preset::ALL {
            let scene = make_synthetic_scene(9, preset);
            assert_eq!(scene.probes.len(), 200);
            let coa = scene.constants.state();
            for p in &scene.probes {
                let rd = direct_rrdot(&coa, &p.ground);
                assert!((rd.r - p.rd.r).abs() <= 1e-9 * p.rd.r);
                let h = height_above_ellipsoid(&p.ground).unwrap();
                assert!((h - p.height).abs() < 1e-6);
                assert!(side_indicator(&coa, &p.ground) * scene.constants.look_side.sign() > 0.0);
            }
        }
    }

    #[test]
    fn approx_height_tracks_exact_height() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let llh = LlhPoint::new(
                rng.gen_range(-85.0..85.0),
                rng.gen_range(-180.0..180.0),
                rng.gen_range(-500.0..10_000.0),
            )
            .unwrap();
            let p = llh_to_ecef(&llh);
            assert!((approx_height(&p.vec()) - llh.height()).abs() < 1e-3);
        }
    }

    #[test]
    fn ulp_helpers() {
        assert_eq!(ulp_distance(1.0, 1.0), 0);
        assert_eq!(ulp_distance(1.0, f64::from_bits(1.0f64.to_bits() + 3)), 3);
        assert_eq!(ulp_distance(-0.0, 0.0), 0);
        assert_eq!(ulp_of(1.0), f64::EPSILON);
    }

    #[test]
    fn brute_force_trivial_equator() {
        let state = StateVector::new(
            0.0,
            EcefPoint::new(7.0e6, 0.0, 0.0),
            Vec3::new(0.0, 7.5e3, 0.0),
        );
        let rd = RangeDoppler {
            r: 7.0e5,
            rdot: 0.0,
        };
        let p = brute_force_rrdot(&state, &rd, 0.0, LookSide::Left).unwrap();
        assert!(height_above_ellipsoid(&p).unwrap().abs() < 1e-3);
        assert!(p.z > 0.0);
        let touch = RangeDoppler {
            r: 621_863.0,
            rdot: 0.0,
        };
        let p = brute_force_rrdot(&state, &touch, 0.0, LookSide::Right).unwrap();
        assert!(
            p.distance(&EcefPoint::new(6378137.0, 0.0, 0.0)) < 1e-3,
            "{p:?}"
        );
        let short = RangeDoppler {
            r: 6.0e5,
            rdot: 0.0,
        };
        assert!(brute_force_rrdot(&state, &short, 0.0, LookSide::Left).is_none());
    }

    #[test]
    fn finite_difference_rdot_on_linear_orbit() {
        let states = (0..5)
            .map(|k| {
                let t = k as f64 * 10.0;
                StateVector::new(
                    t,
                    EcefPoint::new(7.0e6, 7500.0 * t, 0.0),
                    Vec3::new(0.0, 7500.0, 0.0),
                )
            })
            .collect();
        let orbit = Orbit::new(states).unwrap();
        let target = EcefPoint::new(6378137.0, 150_000.0, 0.0);
        // Zero-Doppler point at t = 20 s.
        assert!(finite_diff_rdot(&orbit, &target, 20.0).unwrap().abs() < 1e-4);
        // R(t) = hypot(dx, 7500 t - y): dR/dt = 7500 (7500 t - y) / R
        let t = 12.0;
        let dx: f64 = 7.0e6 - 6378137.0;
        let dy = 7500.0 * t - 150_000.0;
        let closed = 7500.0 * dy / dx.hypot(dy);
        assert!((finite_diff_rdot(&orbit, &target, t).unwrap() - closed).abs() < 1e-4);
    }
}
