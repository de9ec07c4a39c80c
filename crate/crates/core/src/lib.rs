//! Common-grid ensembling and recall-vs-area evaluation for global image
//! geolocation.
//!
//! Predictors (geolocation models over cells, attribute classifiers over
//! population-density buckets or land-cover classes) are projected onto one
//! equirectangular grid as area-normalized probability maps, multiplied
//! together, and scored by how much area must be searched, in score order,
//! before the ground truth is covered.
//!
//! Modules:
//! - [`geogrid`]: the grid, pixel areas and spherical geometry
//! - [`gridio`]: GRV1 rasters, CSV tables, downsampling
//! - [`attribmask`]: class masks from attribute rasters and cells
//! - [`ensemble`]: factorized probability maps and their product
//! - [`evalrva`]: per-image evaluation, recall curves, rebalancing
//! - [`oracle`]: slow literal reference implementations
//! - [`pipeline`]: the end-to-end commands behind the CLI

pub mod attribmask;
pub mod ensemble;
pub mod error;
pub mod evalrva;
pub mod geogrid;
pub mod gridio;
pub mod oracle;
pub mod pipeline;

pub use error::{Error, Result};
