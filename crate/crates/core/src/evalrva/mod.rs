//! Per-image evaluation on the common grid and the metrics built on it.
//!
//! The smallest area containing the ground truth is the measure of every
//! pixel whose value is at least the value at the ground-truth pixel. That
//! is a single counting pass per image; no sort is needed.

mod curve;
mod rebalance;
mod report;

pub use curve::{
    bucket_deltas, cap_area_thresholds, gcd_recall, per_bucket_breakdown, rva_curve,
    rva_curve_from_areas, RvACurve, Thresholds, GCD_THRESHOLDS_KM, THRESHOLD_NAMES,
};
pub use rebalance::{rebalance, rebalance_indices, SplitMix64};
pub use report::{write_curve_csv, write_eval_csv, write_table_csv, TableRow};

use crate::ensemble::FactorizedMap;
use crate::error::{Error, Result};
use crate::geogrid::{great_circle_distance, GeoPoint, PixelAreaMap};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub image_id: String,
    /// Smallest accumulated area containing the ground truth, km².
    pub min_area: f64,
    /// Map value at the ground-truth pixel.
    pub p_star: f64,
    /// Center of the highest-valued pixel; `None` when the map is all zero.
    pub top1: Option<GeoPoint>,
    pub gcd_km: Option<f64>,
    pub bucket: Option<u16>,
}

impl EvalRecord {
    /// True when the ground-truth pixel has zero probability and the area is
    /// the whole globe by convention rather than by ranking.
    pub fn is_full_budget(&self) -> bool {
        self.p_star == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaResult {
    pub p_star: f64,
    pub min_area: f64,
}

fn check_shape(map: &FactorizedMap, areas: &PixelAreaMap) -> Result<()> {
    let g = areas.grid();
    if !g.same_shape(map.height(), map.width()) {
        return Err(Error::Dimension(format!(
            "map is {}x{}, area map is {}x{}",
            map.height(),
            map.width(),
            g.height(),
            g.width()
        )));
    }
    Ok(())
}

// Columns evaluated at a time; keeps the working buffer in L1.
const CHUNK: usize = 1024;

/// One streaming pass over the map: per-row counts of values `>= threshold`
/// and the first (row-major) pixel holding the maximum positive value.
fn scan(map: &FactorizedMap, threshold: f64) -> (Vec<u64>, Option<(usize, usize)>) {
    let w = map.width();
    let mut buf = vec![0.0; CHUNK.min(w)];
    let mut counts = vec![0u64; map.height()];
    let (mut best, mut best_at) = (0.0f64, None);
    for (r, n) in counts.iter_mut().enumerate() {
        let mut start = 0;
        while start < w {
            let chunk = &mut buf[..CHUNK.min(w - start)];
            map.fill_span(r, start, chunk);
            let mut chunk_max = 0.0f64;
            for &v in chunk.iter() {
                *n += (v >= threshold) as u64;
                chunk_max = if v > chunk_max { v } else { chunk_max };
            }
            // Strict `>` keeps the earliest pixel on ties.
            if chunk_max > best {
                let c = chunk.iter().position(|&v| v == chunk_max).expect("max is present");
                best = chunk_max;
                best_at = Some((r, start + c));
            }
            start += chunk.len();
        }
    }
    (counts, best_at)
}

/// Area of `{q : P(q) >= P(gt)}`. A zero value at the ground truth gives the
/// whole globe.
pub fn min_containing_area(
    map: &FactorizedMap,
    gt: GeoPoint,
    areas: &PixelAreaMap,
) -> Result<AreaResult> {
    check_shape(map, areas)?;
    let (gr, gc) = areas.grid().latlon_to_index(gt);
    let p_star = map.evaluate(gr, gc);
    if p_star == 0.0 {
        return Ok(AreaResult {
            p_star,
            min_area: areas.total(),
        });
    }
    let (counts, _) = scan(map, p_star);
    Ok(AreaResult {
        p_star,
        min_area: areas.measure_row_counts(&counts),
    })
}

/// Center of the highest-valued pixel and its distance to `gt`.
pub fn gcd_top1(
    map: &FactorizedMap,
    gt: GeoPoint,
    areas: &PixelAreaMap,
) -> Result<(GeoPoint, f64)> {
    check_shape(map, areas)?;
    let (_, best_at) = scan(map, f64::INFINITY);
    let (r, c) = best_at.ok_or(Error::NoPrediction)?;
    let grid = areas.grid();
    let top = grid.index_to_center(r, c)?;
    Ok((top, great_circle_distance(top, gt, grid.earth_radius())))
}

/// Min-area and top-1 in one pass over the map.
pub fn evaluate_image(
    image_id: &str,
    map: &FactorizedMap,
    gt: GeoPoint,
    areas: &PixelAreaMap,
) -> Result<EvalRecord> {
    check_shape(map, areas)?;
    let grid = areas.grid();
    let (gr, gc) = grid.latlon_to_index(gt);
    let p_star = map.evaluate(gr, gc);
    let (counts, best_at) = scan(map, p_star);
    let min_area = if p_star == 0.0 {
        areas.total()
    } else {
        areas.measure_row_counts(&counts)
    };
    let top1 = match best_at {
        Some((r, c)) => Some(grid.index_to_center(r, c)?),
        None => None,
    };
    Ok(EvalRecord {
        image_id: image_id.to_string(),
        min_area,
        p_star,
        top1,
        gcd_km: top1.map(|t| great_circle_distance(t, gt, grid.earth_radius())),
        bucket: None,
    })
}
