use thiserror::Error;

use crate::rd_solver::SolveDiagnostics;

pub type Result<T> = std::result::Result<T, GeoError>;

/// Broad classes used by the command line to choose exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Metadata,
    Geometry,
    Io,
}

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("time {t} s outside orbit span [{start}, {end}] s")]
    OutsideOrbit { t: f64, start: f64, end: f64 },
    #[error("invalid orbit: {0}")]
    InvalidOrbit(String),
    #[error("metadata error: missing or invalid `{0}`")]
    Metadata(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(String),
    #[error("outside model: {0}")]
    OutOfModel(String),
    #[error("invalid Doppler cone: |rdot| = {rdot} m/s is not below platform speed {speed} m/s")]
    InvalidCone { rdot: f64, speed: f64 },
    #[error("no range-Doppler solution on surface (height error spans [{min_f:.3}, {max_f:.3}] m around the cone)")]
    NoSolution { min_f: f64, max_f: f64 },
    #[error("DEM iteration did not converge after {} iterations (last height step {last_step:.3} m)", diagnostics.iterations)]
    NoConvergence {
        diagnostics: SolveDiagnostics,
        last_step: f64,
    },
    #[error("no DEM data at lat {lat:.6}, lon {lon:.6}")]
    NoData { lat: f64, lon: f64 },
    #[error("target outside swath: {0}")]
    OutOfSwath(String),
    #[error("grid design failed: {0}")]
    Design(String),
    #[error("resampling failed: {0}")]
    Resample(String),
    #[error("raster error: {0}")]
    Raster(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("XML error: {0}")]
    Xml(#[from] roxmltree::Error),
}

impl GeoError {
    pub fn class(&self) -> ErrorClass {
        match self {
            GeoError::Metadata(_)
            | GeoError::UnsupportedGeometry(_)
            | GeoError::UnsupportedFormat(_)
            | GeoError::Json(_)
            | GeoError::Xml(_) => ErrorClass::Metadata,
            GeoError::Io(_) | GeoError::Raster(_) => ErrorClass::Io,
            _ => ErrorClass::Geometry,
        }
    }
}
