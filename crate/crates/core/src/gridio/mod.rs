//! Raster containers, CSV tables and resampling onto the common grid.

mod grid;
mod raster;
mod resample;
mod tables;

pub use grid::{FloatGrid, Grid, LabelGrid, NODATA};
pub use raster::{
    read_header, read_raster, write_raster, DType, Header, Raster, HEADER_LEN, MAGIC, NODATA_U8,
};
pub use resample::{
    downsample_float, downsample_labels, downsample_mode, downsample_nearest, label_images,
    ImageLabels, Kernel,
};
pub use tables::{
    read_manifest, read_scores, write_manifest, ImageManifest, ManifestEntry, ScoreTable,
};
