//! Relief visualisation, dataset preparation and evaluation for LiDAR
//! digital elevation models.
//!
//! [`raster`] holds the grid types and GeoTIFF/PNG I/O, [`viz`] computes the
//! relief visualisations (slope, SVF, openness, SLRM, MSTP and their blends),
//! [`dataset`] tiles scenes and assigns stratified folds, [`metrics`] scores
//! prediction rasters and [`report`] aggregates metric CSVs into tables.
//! The `reliefseg` binary exposes all of it through [`cli`].

pub mod cli;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod raster;
pub mod report;
pub mod synthetic;
pub mod viz;

pub use error::{Error, Result};
