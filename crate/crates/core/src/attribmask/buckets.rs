//! Equal-width log10 bucketing of a population-density raster.

use crate::error::{Error, Result};
use crate::gridio::{FloatGrid, LabelGrid, NODATA};

/// Bucket `b` covers `[edges[b], edges[b+1])` in log10(density); the last
/// bucket is closed on both sides. Zero density lands in bucket 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketSpec {
    edges: Vec<f64>,
    nodata: f32,
}

impl BucketSpec {
    pub fn from_edges(edges: Vec<f64>, nodata: f32) -> Result<Self> {
        if edges.len() < 3 {
            return Err(Error::Input(format!(
                "need at least 2 buckets (3 edges), got {} edges",
                edges.len()
            )));
        }
        if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input(format!(
                "bucket edges must be finite and strictly ascending: {edges:?}"
            )));
        }
        Ok(Self { edges, nodata })
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn n_buckets(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn nodata(&self) -> f32 {
        self.nodata
    }

    /// NaN, negative values and the sentinel are not land.
    pub fn is_valid(&self, density: f32) -> bool {
        is_valid(density, self.nodata)
    }

    /// `None` for nodata pixels.
    pub fn bucket_of(&self, density: f32) -> Option<u16> {
        if !self.is_valid(density) {
            return None;
        }
        if density == 0.0 {
            return Some(0);
        }
        let x = (density as f64).log10();
        // Count interior edges at or below x; values beyond the outer edges
        // clamp into the first/last bucket.
        let interior = &self.edges[1..self.edges.len() - 1];
        Some(interior.iter().take_while(|&&e| e <= x).count() as u16)
    }
}

fn is_valid(density: f32, nodata: f32) -> bool {
    density.is_finite() && density >= 0.0 && density != nodata
}

/// Equal-width edges over the log10 range of positive valid densities.
pub fn build_buckets(density: &FloatGrid, n: usize, nodata: f32) -> Result<BucketSpec> {
    if n < 2 {
        return Err(Error::Input(format!("need at least 2 buckets, got {n}")));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in density.as_slice() {
        if is_valid(v, nodata) && v > 0.0 {
            let x = (v as f64).log10();
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    if lo > hi {
        return Err(Error::EmptyDomain(
            "density raster has no valid pixel with density > 0".into(),
        ));
    }
    if lo == hi {
        return Err(Error::EmptyDomain(format!(
            "all positive densities equal 10^{lo}; bucket range is degenerate"
        )));
    }
    let width = hi - lo;
    let mut edges: Vec<f64> = (0..n).map(|k| lo + width * k as f64 / n as f64).collect();
    edges.push(hi);
    BucketSpec::from_edges(edges, nodata)
}

pub fn apply_buckets(density: &FloatGrid, spec: &BucketSpec) -> LabelGrid {
    density.map(|v| spec.bucket_of(v).unwrap_or(NODATA))
}
