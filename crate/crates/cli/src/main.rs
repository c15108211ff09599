use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use pfa_rd_geo::geodesy::{llh_to_ecef, StateVector};
use pfa_rd_geo::pfa_model::{rdot_to_doppler, tcoa_variation, validate_constant_tcoa, ImageIndex};
use pfa_rd_geo::projection::{geocode, PfaGeometry};
use pfa_rd_geo::raster::{read_complex, read_dem, write_complex, write_f64};
use pfa_rd_geo::resampler::{design_zd_grid, resample_pfa_to_zd};
use pfa_rd_geo::selftest::{run_all, run_criterion, SelftestOptions};
use pfa_rd_geo::{
    ecef_to_llh, parse_meta, EcefPoint, ErrorClass, Exec, GeoError, LlhPoint, Orbit, SicdMeta,
    Surface,
};

const EXIT_USAGE: u8 = 1;
const EXIT_METADATA: u8 = 2;
const EXIT_GEOMETRY: u8 = 3;
const EXIT_IO: u8 = 4;

/// Largest fraction of failed pixels `geocode` tolerates.
const GEOCODE_MAX_FAILED: f64 = 0.10;

#[derive(Parser)]
#[command(
    name = "pfa-rd-geo",
    version,
    about = "Range-Doppler geometry for constant-COA spotlight PFA images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print parsed metadata, COA constants and the affine model.
    Info {
        meta: PathBuf,
        /// Exit with a metadata error when the COA time is not constant.
        #[arg(long)]
        strict: bool,
    },
    /// Map one pixel to latitude, longitude and height.
    Forward {
        meta: PathBuf,
        #[arg(long, num_args = 2, value_names = ["ROW", "COL"], allow_negative_numbers = true)]
        pixel: Vec<f64>,
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Also print solver residuals.
        #[arg(long)]
        verbose: bool,
    },
    /// Map a geodetic point to a fractional pixel.
    Inverse {
        meta: PathBuf,
        #[arg(long, num_args = 3, value_names = ["LAT", "LON", "H"], allow_negative_numbers = true)]
        llh: Vec<f64>,
    },
    /// Write latitude, longitude and height rasters for the whole image.
    Geocode {
        meta: PathBuf,
        #[command(flatten)]
        surface: SurfaceArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        decimate: u64,
    },
    /// Resample a PFA image onto a zero-Doppler grid.
    Resample {
        meta: PathBuf,
        #[arg(long)]
        slc: PathBuf,
        /// Reference height in meters (defaults to the SCP height).
        #[arg(long, allow_negative_numbers = true)]
        height: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Orbit span sampled from the ARP polynomial, seconds around COA.
        #[arg(long, default_value_t = 120.0)]
        orbit_span: f64,
    },
    /// Run the built-in acceptance checks on synthetic scenes.
    Selftest {
        #[arg(
            long,
            hide = true,
            default_value_t = 0.0,
            allow_negative_numbers = true
        )]
        perturb_a21: f64,
        /// Run only these criteria (comma separated).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u8>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SurfaceArgs {
    /// Constant height above the WGS-84 ellipsoid, meters.
    #[arg(long, allow_negative_numbers = true)]
    height: Option<f64>,
    /// DEM raster with a georeferenced JSON header.
    #[arg(long)]
    dem: Option<PathBuf>,
}

impl SurfaceArgs {
    fn load(&self) -> anyhow::Result<Surface> {
        match (&self.dem, self.height) {
            (Some(path), _) => {
                let dem =
                    read_dem(path).with_context(|| format!("reading DEM {}", path.display()))?;
                Ok(Surface::Dem(dem))
            }
            (None, Some(h)) => Ok(Surface::ConstantHae(h)),
            (None, None) => unreachable!("clap requires one surface"),
        }
    }
}

/// Failure with an explicit exit code.
#[derive(Debug)]
struct Exit(u8, String);

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(Exit(code, _)) = cause.downcast_ref::<Exit>() {
            return *code;
        }
        if let Some(e) = cause.downcast_ref::<GeoError>() {
            return match e.class() {
                ErrorClass::Metadata => EXIT_METADATA,
                ErrorClass::Geometry => EXIT_GEOMETRY,
                ErrorClass::Io => EXIT_IO,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
    }
    EXIT_GEOMETRY
}

fn load_meta(path: &Path) -> anyhow::Result<SicdMeta> {
    let text = std::fs::read_to_string(path)
        .map_err(GeoError::from)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_meta(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_geometry(path: &Path) -> anyhow::Result<PfaGeometry> {
    let meta = load_meta(path)?;
    for w in meta.consistency_warnings() {
        log::warn!("{w}");
    }
    Ok(PfaGeometry::from_meta(&meta)?)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_info(path: &Path, strict: bool) -> anyhow::Result<()> {
    let meta = load_meta(path)?;
    println!("file: {}", path.display());
    println!("shape: {} rows x {} cols", meta.rows, meta.cols);
    println!("scp pixel: {} {}", meta.scp_row, meta.scp_col);
    println!(
        "spacing: row {} m, col {} m",
        meta.row_spacing, meta.col_spacing
    );
    let e = meta.scp_ecef;
    println!("scp ecef: {:.4} {:.4} {:.4}", e.x, e.y, e.z);
    let l = meta.scp_llh;
    println!("scp llh: {:.9} {:.9} {:.4}", l.lat(), l.lon(), l.height());
    println!("side of track: {}", meta.side_of_track.code());
    println!("center frequency: {} Hz", meta.center_frequency);
    if let Some(s) = &meta.collect_start {
        println!("collect start: {s}");
    }
    for w in meta.consistency_warnings() {
        println!("warning: {w}");
    }

    if let Err(e) = validate_constant_tcoa(&meta) {
        println!(
            "constant t_COA: NO (variation {:.3e} s)",
            tcoa_variation(&meta)
        );
        if strict {
            return Err(e.into());
        }
        return Ok(());
    }
    println!("constant t_COA: yes");
    let geom = PfaGeometry::from_meta(&meta)?;
    let k = &geom.constants;
    let m = &geom.affine;
    println!("t_COA: {} s", k.t_coa);
    println!(
        "COA state source: {}",
        if meta.coa_state.is_some() {
            "SCPCOA"
        } else {
            "ARPPoly"
        }
    );
    println!(
        "arp position: {:.4} {:.4} {:.4}",
        k.arp_pos.x, k.arp_pos.y, k.arp_pos.z
    );
    println!(
        "arp velocity: {:.6} {:.6} {:.6}",
        k.arp_vel.x, k.arp_vel.y, k.arp_vel.z
    );
    println!("wavelength: {:.9} m", k.wavelength);
    println!("R_scp: {:.6} m", k.r_scp);
    println!("Rdot_scp: {:.6} m/s", k.rdot_scp);
    println!(
        "doppler_scp: {:.6} Hz",
        rdot_to_doppler(k.rdot_scp, k.wavelength)
    );
    println!("theta_COA: {:.17e} rad", k.theta_coa);
    println!("dtheta/dt: {:.17e} rad/s", k.dtheta_dt);
    println!("KSF: {:.17e}", k.ksf);
    println!("dKSF/dtheta: {:.17e}", k.dksf_dtheta);
    println!("affine matrix:");
    println!("  a11 {:.17e}  a12 {:.17e}", m.a11, m.a12);
    println!("  a21 {:.17e}  a22 {:.17e}", m.a21, m.a22);
    Ok(())
}

fn cmd_forward(
    path: &Path,
    pixel: &[f64],
    surface: &SurfaceArgs,
    verbose: bool,
) -> anyhow::Result<()> {
    let geom = load_geometry(path)?;
    let surface = surface.load()?;
    let idx = ImageIndex {
        row: pixel[0],
        col: pixel[1],
    };
    let (p, diag) = geom.forward(&idx, &surface)?;
    let llh = ecef_to_llh(&p)?;
    println!("{:.9} {:.9} {:.4}", llh.lat(), llh.lon(), llh.height());
    if verbose {
        println!("ecef: {:.4} {:.4} {:.4}", p.x, p.y, p.z);
        println!(
            "residuals: range {:.3e} m, rdot {:.3e} m/s, height {:.3e} m, iterations {}",
            diag.range_residual, diag.rdot_residual, diag.height_residual, diag.iterations
        );
    }
    Ok(())
}

fn cmd_inverse(path: &Path, llh: &[f64]) -> anyhow::Result<()> {
    let geom = load_geometry(path)?;
    let point = LlhPoint::new(llh[0], llh[1], llh[2])?;
    let idx = geom.inverse(&llh_to_ecef(&point))?;
    println!("{:.6} {:.6}", idx.row, idx.col);
    Ok(())
}

fn cmd_geocode(
    path: &Path,
    surface: &SurfaceArgs,
    out: &Path,
    decimate: usize,
    exec: Exec,
) -> anyhow::Result<()> {
    let geom = load_geometry(path)?;
    let surface = surface.load()?;
    let start = Instant::now();
    let g = geocode(&geom, &surface, decimate, exec);
    for (suffix, values) in [
        (".lat.f64", &g.lat),
        (".lon.f64", &g.lon),
        (".hgt.f64", &g.height),
    ] {
        let file = with_suffix(out, suffix);
        write_f64(&file, g.rows, g.cols, values, None)
            .with_context(|| format!("writing {}", file.display()))?;
    }
    let frac = g.failure_fraction();
    println!(
        "geocoded {} x {} (decimate {}) in {:.2} s; {} failed pixels ({:.2}%)",
        g.rows,
        g.cols,
        g.decimate,
        start.elapsed().as_secs_f64(),
        g.failures,
        100.0 * frac
    );
    if frac > GEOCODE_MAX_FAILED {
        return Err(Exit(
            EXIT_GEOMETRY,
            format!(
                "{:.1}% of pixels failed (limit {:.0}%)",
                100.0 * frac,
                100.0 * GEOCODE_MAX_FAILED
            ),
        )
        .into());
    }
    Ok(())
}

/// Samples the ARP polynomial once per second over `span` seconds centered on COA.
fn orbit_from_arp(meta: &SicdMeta, t_coa: f64, span: f64) -> anyhow::Result<Orbit> {
    let half = (0.5 * span).ceil().max(1.0) as i64;
    let states = (-half..=half)
        .map(|k| {
            let t = t_coa + k as f64;
            StateVector::new(
                t,
                EcefPoint::from_vec(&meta.arp_poly.position(t)),
                meta.arp_poly.velocity(t),
            )
        })
        .collect();
    Ok(Orbit::new(states)?)
}

fn cmd_resample(
    path: &Path,
    slc: &Path,
    height: Option<f64>,
    out: &Path,
    span: f64,
    exec: Exec,
) -> anyhow::Result<()> {
    if !(span > 0.0 && span.is_finite()) {
        return Err(Exit(
            EXIT_USAGE,
            format!("--orbit-span must be positive, got {span}"),
        )
        .into());
    }
    let meta = load_meta(path)?;
    for w in meta.consistency_warnings() {
        log::warn!("{w}");
    }
    let geom = PfaGeometry::from_meta(&meta)?;
    let src = read_complex(slc).with_context(|| format!("reading {}", slc.display()))?;
    let h = height.unwrap_or(meta.scp_llh.height());
    let orbit = orbit_from_arp(&meta, geom.constants.t_coa, span)?;
    let start = Instant::now();
    let zd = design_zd_grid(&geom, h, &orbit)?;
    let res = resample_pfa_to_zd(&src, &geom, &zd, h, exec)?;

    let raster_path = with_suffix(out, ".zd.c64");
    write_complex(&raster_path, &res.raster)
        .with_context(|| format!("writing {}", raster_path.display()))?;
    for (suffix, text) in [
        (
            ".grid.json",
            serde_json::to_string_pretty(&zd.description())?,
        ),
        (".report.json", serde_json::to_string_pretty(&res.report)?),
    ] {
        let file = with_suffix(out, suffix);
        std::fs::write(&file, text + "\n")
            .map_err(GeoError::from)
            .with_context(|| format!("writing {}", file.display()))?;
    }
    println!(
        "resampled to {} range bins x {} lines in {:.2} s; valid fraction {:.4}, {} failed pixels, max ground round trip {:.3e} m",
        zd.rows,
        zd.lines,
        start.elapsed().as_secs_f64(),
        res.report.valid_fraction,
        res.report.failed_pixels,
        res.report.max_ground_roundtrip_error
    );
    Ok(())
}

fn cmd_selftest(perturb_a21: f64, criteria: &[u8], exec: Exec) -> anyhow::Result<()> {
    let opts = SelftestOptions {
        perturb_a21,
        exec,
        ..SelftestOptions::default()
    };
    let start = Instant::now();
    let outcomes = if criteria.is_empty() {
        run_all(&opts)
    } else {
        criteria
            .iter()
            .map(|&id| run_criterion(id, &opts))
            .collect()
    };
    for o in &outcomes {
        println!("{o}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!(
        "selftest: {passed}/{} criteria passed in {:.2} s",
        outcomes.len(),
        start.elapsed().as_secs_f64()
    );
    if passed != outcomes.len() {
        return Err(Exit(EXIT_GEOMETRY, "selftest failed".into()).into());
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let exec = Exec::from_env();
    match cli.command {
        Command::Info { meta, strict } => cmd_info(&meta, strict),
        Command::Forward {
            meta,
            pixel,
            surface,
            verbose,
        } => cmd_forward(&meta, &pixel, &surface, verbose),
        Command::Inverse { meta, llh } => cmd_inverse(&meta, &llh),
        Command::Geocode {
            meta,
            surface,
            out,
            decimate,
        } => cmd_geocode(&meta, &surface, &out, decimate as usize, exec),
        Command::Resample {
            meta,
            slc,
            height,
            out,
            orbit_span,
        } => cmd_resample(&meta, &slc, height, &out, orbit_span, exec),
        Command::Selftest {
            perturb_a21,
            criteria,
        } => cmd_selftest(perturb_a21, &criteria, exec),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            e.print().ok();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
