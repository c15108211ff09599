//! Acceptance checks run against synthetic scenes and the oracles in [`crate::testkit`].
//!
//! Each criterion returns a [`CriterionOutcome`]; `pfa-rd-geo selftest` and the
//! acceptance test target both go through [`run_all`].

use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex32;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exec::{map_indexed, Exec};
use crate::geodesy::{ecef_to_llh, EcefPoint, Orbit, StateVector, Vec3};
use crate::pfa_model::{
    compute_affine, image_to_rrdot, rdot_to_doppler, rrdot_to_image, ImageCoord, ImageIndex,
    PfaConstants, RangeDoppler,
};
use crate::projection::{geocode, PfaGeometry};
use crate::rd_solver::{rrdot_to_dem, rrdot_to_surface, DemRaster, LookSide, Surface};
use crate::resampler::{design_zd_grid, resample_pfa_to_zd, ComplexRaster};
use crate::testkit::{
    affine_entries_oracle, brute_force_rrdot, dense_scan_zero_doppler, make_synthetic_scene,
    make_synthetic_scene_with, random_solver_case, ulp_distance, ulp_of, Preset, SceneOptions,
    SolverCase,
};
use crate::zd_model::{zd_forward_map, zd_inverse_map};

pub const CRITERIA: [u8; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelftestOptions {
    /// Relative change applied to `a21` of the mapping model under test (criteria 1
    /// and 2). Zero for a normal run.
    pub perturb_a21: f64,
    pub exec: Exec,
    pub seed: u64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        Self {
            perturb_a21: 0.0,
            exec: Exec::Parallel,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {} {}: {} ({}; {:.2} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "affine model correctness",
        2 => "forward/inverse equivalence on synthetic presets",
        3 => "range/range-rate solver contracts",
        4 => "zero-Doppler solve",
        5 => "scanline linearity and constant platform state",
        6 => "resampler chain",
        7 => "Doppler conversion",
        8 => "determinism across worker counts",
        _ => "unknown criterion",
    }
}

/// Collects failures and the worst observed values for one criterion.
#[derive(Default)]
struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok && self.failures.len() < 5 {
            self.failures.push(what());
        } else if !ok {
            self.failures.push(String::new());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn finish(self, id: u8, start: Instant, budget: Option<f64>) -> CriterionOutcome {
        let elapsed = start.elapsed();
        let mut failures = self.failures;
        if let Some(b) = budget {
            if elapsed.as_secs_f64() > b {
                failures.push(format!(
                    "runtime {:.2} s exceeds {b} s",
                    elapsed.as_secs_f64()
                ));
            }
        }
        let detail = if failures.is_empty() {
            self.notes.join(", ")
        } else {
            let shown: Vec<_> = failures.iter().filter(|s| !s.is_empty()).cloned().collect();
            format!("{} failure(s): {}", failures.len(), shown.join("; "))
        };
        CriterionOutcome {
            id,
            title: title(id),
            passed: failures.is_empty(),
            detail,
            elapsed,
        }
    }
}

fn perturbed(mut geom: PfaGeometry, opts: &SelftestOptions) -> PfaGeometry {
    geom.affine.a21 *= 1.0 + opts.perturb_a21;
    geom
}

pub fn run_criterion(id: u8, opts: &SelftestOptions) -> CriterionOutcome {
    match id {
        1 => affine_model(opts),
        2 => equivalence(opts),
        3 => solver_contracts(opts),
        4 => zero_doppler(opts),
        5 => scanline(opts),
        6 => resampler_chain(opts),
        7 => doppler(),
        8 => determinism(opts),
        _ => CriterionOutcome {
            id,
            title: title(id),
            passed: false,
            detail: "no such criterion".into(),
            elapsed: Duration::ZERO,
        },
    }
}

pub fn run_all(opts: &SelftestOptions) -> Vec<CriterionOutcome> {
    CRITERIA.iter().map(|&id| run_criterion(id, opts)).collect()
}

fn random_constants(rng: &mut impl Rng) -> PfaConstants {
    PfaConstants {
        arp_pos: EcefPoint::new(7.0e6, 0.0, 0.0),
        arp_vel: Vec3::new(0.0, 7.5e3, 0.0),
        r_scp: rng.gen_range(5.0e5..1.5e6),
        rdot_scp: rng.gen_range(-500.0..500.0),
        theta_coa: rng.gen_range(-0.5..0.5),
        dtheta_dt: rng.gen_range(0.005..0.05),
        ksf: rng.gen_range(0.9..1.1),
        dksf_dtheta: rng.gen_range(-0.1..0.1),
        t_coa: 0.0,
        wavelength: 0.031,
        look_side: LookSide::Left,
    }
}

fn affine_model(opts: &SelftestOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let mut c = Check::default();
    let (mut worst_ulp, mut worst_r, mut worst_rdot, mut worst_coord) =
        (0u64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let k = random_constants(&mut rng);
        let mut m = match compute_affine(&k) {
            Ok(m) => m,
            Err(e) => {
                c.require(false, || format!("compute_affine: {e}"));
                continue;
            }
        };
        m.a21 *= 1.0 + opts.perturb_a21;
        let oracle = affine_entries_oracle(&k);
        for (got, want) in [m.a11, m.a12, m.a21, m.a22].into_iter().zip(oracle) {
            let d = ulp_distance(got, want);
            worst_ulp = worst_ulp.max(d);
            c.require(d <= 4, || {
                format!("entry {got:e} vs oracle {want:e} differs by {d} ulp")
            });
        }

        let coord = ImageCoord {
            rg: rng.gen_range(-5000.0..5000.0),
            az: rng.gen_range(-5000.0..5000.0),
        };
        let rd = image_to_rrdot(&m, &coord);
        let back = rd.and_then(|rd| rrdot_to_image(&m, &rd).map(|b| (rd, b)));
        match back {
            Ok((rd, b)) => {
                let e = (b.rg - coord.rg).hypot(b.az - coord.az);
                worst_coord = worst_coord.max(e);
                c.require(e < 1e-6, || format!("image round trip off by {e:e} m"));
                let again = image_to_rrdot(&m, &b).unwrap_or(RangeDoppler {
                    r: f64::NAN,
                    rdot: f64::NAN,
                });
                let (er, erd) = ((again.r - rd.r).abs(), (again.rdot - rd.rdot).abs());
                worst_r = worst_r.max(er);
                worst_rdot = worst_rdot.max(erd);
                c.require(er < 1e-6 && erd < 1e-9, || {
                    format!("range round trip off by {er:e} m, {erd:e} m/s")
                });
            }
            Err(e) => c.require(false, || format!("round trip failed: {e}")),
        }
    }
    c.note(format!(
        "max entry error {worst_ulp} ulp, round trip {worst_coord:.1e} m / {worst_r:.1e} m / {worst_rdot:.1e} m/s"
    ));
    c.finish(1, start, Some(1.0))
}

fn equivalence(opts: &SelftestOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut c = Check::default();
    let (mut worst_ground, mut worst_pixel, mut n) = (0.0f64, 0.0f64, 0usize);
    for preset in Preset::ALL {
        let scene = make_synthetic_scene(opts.seed, preset);
        let geom = match PfaGeometry::from_meta(&scene.meta) {
            Ok(g) => perturbed(g, opts),
            Err(e) => {
                c.require(false, || format!("{}: {e}", preset.name()));
                continue;
            }
        };
        c.require(scene.probes.len() == 200, || {
            format!("{} has {} probes", preset.name(), scene.probes.len())
        });
        for probe in &scene.probes {
            n += 1;
            match geom.forward(&probe.pixel, &Surface::ConstantHae(probe.height)) {
                Ok((p, _)) => {
                    let d = p.distance(&probe.ground);
                    worst_ground = worst_ground.max(d);
                    c.require(d < 0.01, || {
                        format!("{}: forward misses probe by {d:.4} m", preset.name())
                    });
                }
                Err(e) => c.require(false, || format!("{}: forward failed: {e}", preset.name())),
            }
            match geom.inverse(&probe.ground) {
                Ok(idx) => {
                    let d = (idx.row - probe.pixel.row)
                        .abs()
                        .max((idx.col - probe.pixel.col).abs());
                    worst_pixel = worst_pixel.max(d);
                    c.require(d < 1e-3, || {
                        format!("{}: inverse misses probe by {d:.2e} px", preset.name())
                    });
                }
                Err(e) => c.require(false, || format!("{}: inverse failed: {e}", preset.name())),
            }
        }
    }
    c.note(format!(
        "{n} probes, max ground error {worst_ground:.2e} m, max pixel error {worst_pixel:.2e}"
    ));
    c.finish(2, start, Some(10.0))
}

fn tangent_cases() -> Vec<SolverCase> {
    let state = StateVector::new(
        0.0,
        EcefPoint::new(7.0e6, 0.0, 0.0),
        Vec3::new(0.0, 7.5e3, 0.0),
    );
    let mut out = Vec::new();
    for dr in [-0.5, 0.5] {
        for look in [LookSide::Left, LookSide::Right] {
            out.push(SolverCase {
                state,
                rd: RangeDoppler {
                    r: 621_863.0 + dr,
                    rdot: 0.0,
                },
                height: 0.0,
                look,
                truth: None,
            });
        }
    }
    out
}

/// Tilted plane in degrees of latitude/longitude through `(lat, lon, h)`, sampled
/// over +/-0.2 degrees.
fn plane_dem(lat: f64, lon: f64, h: f64, slope_lat: f64, slope_lon: f64) -> DemRaster {
    let n = 201;
    let step = 0.002;
    let (lat0, lon0) = (lat - 0.2, lon - 0.2);
    DemRaster::from_fn(n, n, lat0, lon0, step, step, |la, lo| {
        h + slope_lat * (la - lat) + slope_lon * (lo - lon)
    })
    .expect("plane DEM")
}

fn solver_contracts(opts: &SelftestOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(3));
    let mut c = Check::default();
    let mut cases: Vec<SolverCase> = (0..600).map(|_| random_solver_case(&mut rng)).collect();
    cases.extend(tangent_cases());

    let (mut worst_oracle, mut solved, mut unsolved) = (0.0f64, 0usize, 0usize);
    let mut worst = [0.0f64; 3];
    let verdicts = map_indexed(cases.len(), opts.exec, |i| {
        let case = &cases[i];
        (
            rrdot_to_surface(&case.state, &case.rd, case.height, case.look),
            brute_force_rrdot(&case.state, &case.rd, case.height, case.look),
        )
    });
    for (case, (solver, oracle)) in cases.iter().zip(verdicts) {
        let speed = case.state.velocity.norm();
        match (&solver, oracle) {
            (Ok((p, diag)), Some(q)) => {
                solved += 1;
                let d = p.distance(&q);
                worst_oracle = worst_oracle.max(d);
                c.require(d < 0.01, || format!("solver and oracle differ by {d:.4} m"));
                let r = [
                    diag.range_residual.abs(),
                    diag.normalized_rdot(speed).abs(),
                    diag.height_residual.abs(),
                ];
                for (w, v) in worst.iter_mut().zip(r) {
                    *w = w.max(v);
                }
                c.require(r[0] < 1e-3 && r[1] < 1e-6 && r[2] < 1e-3, || {
                    format!("residuals {r:?}")
                });
            }
            (Err(_), None) => unsolved += 1,
            (Ok((p, _)), None) => c.require(false, || {
                format!("solver found {p:?}, oracle found nothing")
            }),
            (Err(e), Some(q)) => {
                c.require(false, || format!("solver failed ({e}), oracle found {q:?}"))
            }
        }
    }

    let mut dem_cases = 0usize;
    let mut worst_dem = 0.0f64;
    for case in cases.iter().filter(|c| c.truth.is_some()).take(60) {
        let truth = case.truth.unwrap();
        let Ok(llh) = ecef_to_llh(&truth) else {
            continue;
        };
        let dem = plane_dem(
            llh.lat(),
            llh.lon(),
            llh.height(),
            rng.gen_range(-3000.0..3000.0),
            rng.gen_range(-3000.0..3000.0),
        );
        dem_cases += 1;
        match rrdot_to_dem(&case.state, &case.rd, &dem, case.look) {
            Ok((p, diag)) => {
                let speed = case.state.velocity.norm();
                let on_dem = ecef_to_llh(&p)
                    .and_then(|l| dem.height_at(l.lat(), l.lon()).map(|h| l.height() - h))
                    .unwrap_or(f64::NAN)
                    .abs();
                worst_dem = worst_dem.max(on_dem);
                c.require(
                    diag.range_residual.abs() < 1e-3
                        && diag.normalized_rdot(speed).abs() < 1e-6
                        && on_dem < 0.5,
                    || format!("DEM residuals {diag:?}, off surface {on_dem:.3} m"),
                );
            }
            Err(e) => c.require(false, || format!("DEM solve failed: {e}")),
        }
    }
    c.require(solved + unsolved >= 600, || {
        format!("only {} agreeing verdicts", solved + unsolved)
    });
    c.note(format!(
        "{} cases ({solved} solved, {unsolved} no-solution), oracle distance {worst_oracle:.1e} m, residuals {:.1e} m / {:.1e} / {:.1e} m, {dem_cases} DEM cases off-surface {worst_dem:.2e} m",
        cases.len(),
        worst[0],
        worst[1],
        worst[2]
    ));
    c.finish(3, start, Some(30.0))
}

fn linear_orbit(p0: Vec3, v: Vec3) -> Orbit {
    let states = (0..=20)
        .map(|k| {
            let t = -100.0 + 10.0 * k as f64;
            StateVector::new(t, EcefPoint::from_vec(&(p0 + v * t)), v)
        })
        .collect();
    Orbit::new(states).expect("linear orbit")
}

fn zero_doppler(opts: &SelftestOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut c = Check::default();
    let (mut worst_res, mut worst_scan, mut worst_closed, mut n) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for preset in [Preset::MidLatitudeSquint, Preset::HighIncidence] {
        let scene = make_synthetic_scene(opts.seed, preset);
        let t_coa = scene.constants.t_coa;
        for probe in scene.probes.iter().take(50) {
            n += 1;
            let sol = match zd_inverse_map(&scene.orbit, &probe.ground, t_coa) {
                Ok(s) => s,
                Err(e) => {
                    c.require(false, || format!("{}: {e}", preset.name()));
                    continue;
                }
            };
            let s = scene.orbit.state_at(sol.eta).expect("inside orbit");
            let los = s.position.vec() - probe.ground.vec();
            let res = (s.velocity.dot(&los) / (s.velocity.norm() * los.norm())).abs();
            worst_res = worst_res.max(res);
            c.require(res < 1e-12, || format!("normalized residual {res:e}"));
            match dense_scan_zero_doppler(&scene.orbit, &probe.ground, t_coa - 100.0, t_coa + 100.0)
            {
                Some(eta) => {
                    let d = (eta - sol.eta).abs();
                    worst_scan = worst_scan.max(d);
                    c.require(d < 1e-7, || format!("dense scan differs by {d:e} s"));
                }
                None => c.require(false, || "dense scan found no zero-Doppler time".into()),
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(4));
    for _ in 0..50 {
        let p0 = Vec3::new(7.0e6, rng.gen_range(-1e5..1e5), rng.gen_range(-1e5..1e5));
        let v = Vec3::new(
            rng.gen_range(-100.0..100.0),
            7.5e3,
            rng.gen_range(-500.0..500.0),
        );
        let orbit = linear_orbit(p0, v);
        let target = Vec3::new(6.37e6, rng.gen_range(-3e5..3e5), rng.gen_range(-3e5..3e5));
        let closed = v.dot(&(target - p0)) / v.norm_squared();
        match zd_inverse_map(&orbit, &EcefPoint::from_vec(&target), 0.0) {
            Ok(sol) => {
                let d = (sol.eta - closed).abs();
                worst_closed = worst_closed.max(d);
                c.require(d < 1e-9, || {
                    format!("linear orbit: {} vs closed form {closed}", sol.eta)
                });
            }
            Err(e) => c.require(false, || format!("linear orbit: {e}")),
        }
    }
    c.note(format!(
        "{n} scene targets, residual {worst_res:.1e}, dense scan {worst_scan:.1e} s, closed form {worst_closed:.1e} s"
    ));
    c.finish(4, start, Some(5.0))
}

fn scanline(opts: &SelftestOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut c = Check::default();
    let mut worst = 0.0f64;
    let mut lines = 0usize;
    for preset in Preset::ALL {
        let scene = make_synthetic_scene_with(
            opts.seed,
            preset,
            SceneOptions {
                rows: 1024,
                cols: 1024,
                probes: 0,
            },
        );
        let geom = match PfaGeometry::from_meta(&scene.meta) {
            Ok(g) => g,
            Err(e) => {
                c.require(false, || format!("{}: {e}", preset.name()));
                continue;
            }
        };
        let g = &geom.grid;
        let reference = geom.scanline(0.0).state;
        for col in 0..g.cols {
            lines += 1;
            let scan = geom.scanline(col as f64);
            c.require(scan.state == reference, || {
                format!("{}: platform state differs on line {col}", preset.name())
            });
            let rg = |i: usize| (i as f64 - g.scp_row) * g.row_spacing;
            let vals: Vec<(RangeDoppler, f64, f64)> = (0..g.rows)
                .map(|i| {
                    let x = rg(i);
                    let rd = scan.at(x);
                    let sr = scan.r0.abs().max((scan.dr * x).abs()).max(rd.r.abs());
                    let sd = scan
                        .rdot0
                        .abs()
                        .max((scan.drdot * x).abs())
                        .max(rd.rdot.abs());
                    (rd, sr, sd)
                })
                .collect();
            for w in vals.windows(3) {
                let d2r = w[2].0.r - 2.0 * w[1].0.r + w[0].0.r;
                let d2d = w[2].0.rdot - 2.0 * w[1].0.rdot + w[0].0.rdot;
                let sr = w[0].1.max(w[1].1).max(w[2].1);
                let sd = w[0].2.max(w[1].2).max(w[2].2);
                let ur = d2r.abs() / ulp_of(sr);
                let ud = d2d.abs() / ulp_of(sd);
                worst = worst.max(ur).max(ud);
                c.require(ur <= 4.0 && ud <= 4.0, || {
                    format!(
                        "{}: line {col} second difference {ur} / {ud} ulp",
                        preset.name()
                    )
                });
            }
        }
    }
    c.note(format!(
        "{lines} azimuth lines, max second difference {worst} ulp, one platform state per scene"
    ));
    c.finish(5, start, None)
}

const RESAMPLE_SIZE: usize = 512;

fn resampler_chain(opts: &SelftestOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut c = Check::default();
    let scene = make_synthetic_scene_with(
        opts.seed,
        Preset::MidLatitudeSquint,
        SceneOptions {
            rows: RESAMPLE_SIZE,
            cols: RESAMPLE_SIZE,
            probes: 0,
        },
    );
    let geom = match PfaGeometry::from_meta(&scene.meta) {
        Ok(g) => g,
        Err(e) => {
            c.require(false, || e.to_string());
            return c.finish(6, start, None);
        }
    };
    let h = scene.meta.scp_llh.height();
    let zd = match design_zd_grid(&geom, h, &scene.orbit) {
        Ok(z) => z,
        Err(e) => {
            c.require(false, || e.to_string());
            return c.finish(6, start, None);
        }
    };

    let constant = Complex32::new(0.75, -1.25);
    let timer = Instant::now();
    let flat = ComplexRaster::filled(RESAMPLE_SIZE, RESAMPLE_SIZE, constant).expect("raster");
    match resample_pfa_to_zd(&flat, &geom, &zd, h, opts.exec) {
        Ok(out) => {
            let resample_time = timer.elapsed().as_secs_f64();
            c.require(resample_time < 10.0, || {
                format!("512x512 resample took {resample_time:.2} s")
            });
            let mismatched = out
                .raster
                .data()
                .iter()
                .zip(&out.valid)
                .filter(|(v, ok)| **ok && **v != constant)
                .count();
            c.require(mismatched == 0, || {
                format!("{mismatched} valid pixels changed a constant image")
            });
            let e = out.report.max_ground_roundtrip_error;
            c.require(e < 0.01, || format!("ground round trip {e:.3e} m"));
            let vf = out.report.valid_fraction;
            c.require(vf > 0.0 && vf <= 1.0, || format!("valid fraction {vf}"));
            c.note(format!(
                "{}x{} output in {resample_time:.2} s, valid fraction {vf:.3}, ground round trip {e:.1e} m",
                zd.rows, zd.lines
            ));
        }
        Err(e) => c.require(false, || format!("constant image: {e}")),
    }

    // Zero-Doppler round trip on a lattice of output pixels.
    let surface = Surface::ConstantHae(h);
    let mut worst_zd = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            let idx = ImageIndex {
                row: (zd.rows - 1) as f64 * i as f64 / 7.0,
                col: (zd.lines - 1) as f64 * j as f64 / 7.0,
            };
            let back = zd_forward_map(&zd, &idx, &surface)
                .and_then(|(p, _)| zd_inverse_map(&zd.orbit, &p, zd.time_at(idx.col)))
                .map(|s| zd.index_of(&s));
            match back {
                Ok(b) => {
                    let d = (b.row - idx.row).abs().max((b.col - idx.col).abs());
                    worst_zd = worst_zd.max(d);
                    c.require(d < 1e-3, || format!("zero-Doppler pixel round trip {d:e}"));
                }
                Err(e) => c.require(false, || format!("zero-Doppler round trip: {e}")),
            }
        }
    }

    let spots = [
        (100usize, 100usize),
        (100, 400),
        (256, 256),
        (400, 120),
        (420, 380),
    ];
    let mut impulse = ComplexRaster::filled(RESAMPLE_SIZE, RESAMPLE_SIZE, Complex32::new(0.0, 0.0))
        .expect("raster");
    for &(r, col) in &spots {
        impulse.set(r, col, Complex32::new(1.0, 0.0));
    }
    let mut worst_peak = 0.0f64;
    match resample_pfa_to_zd(&impulse, &geom, &zd, h, opts.exec) {
        Ok(out) => {
            for &(r, col) in &spots {
                let expected = geom
                    .forward(
                        &ImageIndex {
                            row: r as f64,
                            col: col as f64,
                        },
                        &surface,
                    )
                    .and_then(|(p, _)| zd_inverse_map(&zd.orbit, &p, geom.constants.t_coa))
                    .map(|s| zd.index_of(&s));
                let Ok(e) = expected else {
                    c.require(false, || {
                        format!("impulse ({r}, {col}) has no predicted location")
                    });
                    continue;
                };
                let (er, ec) = (e.row.round() as i64, e.col.round() as i64);
                let mut best = (0.0f32, 0i64, 0i64);
                for rr in er - 8..=er + 8 {
                    for cc in ec - 8..=ec + 8 {
                        if rr < 0 || cc < 0 || rr >= zd.rows as i64 || cc >= zd.lines as i64 {
                            continue;
                        }
                        let v = out.raster.get(rr as usize, cc as usize).norm();
                        if v > best.0 {
                            best = (v, rr, cc);
                        }
                    }
                }
                let d = (best.1 as f64 - e.row)
                    .abs()
                    .max((best.2 as f64 - e.col).abs());
                worst_peak = worst_peak.max(d);
                c.require(best.0 > 0.0 && d <= 1.0, || {
                    format!(
                        "impulse ({r}, {col}) peaks at ({}, {}), expected ({:.2}, {:.2})",
                        best.1, best.2, e.row, e.col
                    )
                });
            }
        }
        Err(e) => c.require(false, || format!("impulse image: {e}")),
    }
    c.note(format!(
        "zero-Doppler round trip {worst_zd:.1e} px, impulse offset <= {worst_peak:.2} px"
    ));
    c.finish(6, start, None)
}

fn doppler() -> CriterionOutcome {
    let start = Instant::now();
    let mut c = Check::default();
    for (rdot, lambda, want) in [
        (0.0, 0.031, 0.0),
        (-155.0, 0.031, 10_000.0),
        (120.0, 0.24, -1000.0),
    ] {
        let got = rdot_to_doppler(rdot, lambda);
        c.require(got == want, || {
            format!("rdot {rdot}, wavelength {lambda}: {got} Hz, expected {want}")
        });
    }
    c.note("3 exact cases");
    c.finish(7, start, None)
}

fn determinism(opts: &SelftestOptions) -> CriterionOutcome {
    let start = Instant::now();
    let mut c = Check::default();
    let scene = make_synthetic_scene_with(
        opts.seed,
        Preset::HighIncidence,
        SceneOptions {
            rows: 256,
            cols: 256,
            probes: 0,
        },
    );
    let geom = match PfaGeometry::from_meta(&scene.meta) {
        Ok(g) => g,
        Err(e) => {
            c.require(false, || e.to_string());
            return c.finish(8, start, None);
        }
    };
    let h = scene.meta.scp_llh.height();
    let surface = Surface::ConstantHae(h);
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let g1 = geocode(&geom, &surface, 1, Exec::Threads(1));
    let g4 = geocode(&geom, &surface, 1, Exec::Threads(4));
    c.require(
        bits(&g1.lat) == bits(&g4.lat)
            && bits(&g1.lon) == bits(&g4.lon)
            && bits(&g1.height) == bits(&g4.height),
        || "geocode rasters differ between 1 and 4 workers".into(),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(8));
    let samples = (0..256 * 256)
        .map(|_| Complex32::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let src = ComplexRaster::new(256, 256, samples).expect("raster");
    let outputs = design_zd_grid(&geom, h, &scene.orbit).and_then(|zd| {
        let a = resample_pfa_to_zd(&src, &geom, &zd, h, Exec::Threads(1))?;
        let b = resample_pfa_to_zd(&src, &geom, &zd, h, Exec::Threads(4))?;
        Ok((a, b))
    });
    match outputs {
        Ok((a, b)) => {
            let cbits = |r: &ComplexRaster| {
                r.data()
                    .iter()
                    .map(|z| (z.re.to_bits(), z.im.to_bits()))
                    .collect::<Vec<_>>()
            };
            c.require(
                cbits(&a.raster) == cbits(&b.raster) && a.valid == b.valid && a.report == b.report,
                || "resampled rasters differ between 1 and 4 workers".into(),
            );
        }
        Err(e) => c.require(false, || format!("resample: {e}")),
    }
    c.note("geocode 256x256 and resample identical for 1 and 4 workers");
    c.finish(8, start, None)
}
