//! Geometry for constant-COA spotlight polar-format (PFA) SAR images.
//!
//! A PFA pixel maps affinely to range and range rate from a single platform state.
//! This crate builds that map from SICD-style metadata, solves range/range-rate
//! pairs against an ellipsoid-height or DEM surface, and resamples images onto a
//! zero-Doppler (range, azimuth time) grid.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod geodesy;
pub mod pfa_model;
pub mod projection;
pub mod raster;
pub mod rd_solver;
pub mod resampler;
pub mod selftest;
pub mod sicd;
pub mod testkit;
pub mod zd_model;

pub use error::{ErrorClass, GeoError, Result};
pub use exec::Exec;
pub use geodesy::{ecef_to_llh, llh_to_ecef, EcefPoint, LlhPoint, Orbit, StateVector};
pub use pfa_model::{AffineModel, ImageCoord, ImageIndex, PfaConstants, RangeDoppler};
pub use projection::{geocode, pfa_forward_map, pfa_inverse_map, GeocodeOutput, PfaGeometry};
pub use rd_solver::{rrdot_to_ground, DemRaster, LookSide, SolveDiagnostics, Surface};
pub use resampler::{design_zd_grid, resample_pfa_to_zd, ComplexRaster};
pub use sicd::{parse_meta, SicdMeta};
pub use zd_model::{zd_forward_map, zd_inverse_map, ZeroDopplerGrid};
