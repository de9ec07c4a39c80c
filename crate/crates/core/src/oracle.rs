//! Slow reference implementations for auditing results on small grids.
//!
//! These follow the definitions literally: probability maps are built as
//! explicit sums of mask/area terms, the containing area is found by sorting
//! pixels and accumulating tie groups, and the top-1 pixel by a full scan.
//! They share nothing with the fast path except [`PixelAreaMap`].

use std::cmp::Ordering;

use crate::ensemble::DenseMap;
use crate::error::{Error, Result};
use crate::geogrid::{GeoPoint, PixelAreaMap};
use crate::gridio::{Grid, LabelGrid};

/// Largest grid the oracles accept.
pub const MAX_ORACLE_PIXELS: usize = 1_000_000;

fn guard(height: usize, width: usize) -> Result<()> {
    if height * width > MAX_ORACLE_PIXELS {
        return Err(Error::Resource(format!(
            "{height}x{width} grid exceeds the oracle limit of {MAX_ORACLE_PIXELS} pixels"
        )));
    }
    Ok(())
}

/// Sort pixels by value, descending; accumulate whole tie groups until the
/// group holding the ground-truth pixel is in.
pub fn oracle_min_area(dense: &DenseMap, gt: GeoPoint, areas: &PixelAreaMap) -> Result<f64> {
    let (h, w) = (dense.height(), dense.width());
    guard(h, w)?;
    if !areas.grid().same_shape(h, w) {
        return Err(Error::Dimension("dense map and area map differ".into()));
    }
    let (gr, gc) = areas.grid().latlon_to_index(gt);
    let target = gr * w + gc;

    let values = dense.as_slice();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal));

    let mut counts = vec![0u64; h];
    let mut k = 0;
    while k < order.len() {
        let v = values[order[k]];
        let mut end = k;
        let mut has_target = false;
        while end < order.len() && values[order[end]] == v {
            has_target |= order[end] == target;
            counts[order[end] / w] += 1;
            end += 1;
        }
        if has_target {
            break;
        }
        k = end;
    }
    Ok(areas.measure_row_counts(&counts))
}

/// First pixel (row-major) holding the maximum positive value.
pub fn oracle_argmax(dense: &DenseMap) -> Option<(usize, usize)> {
    let w = dense.width();
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in dense.as_slice().iter().enumerate() {
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| (k / w, k % w))
}

/// One predictor as the oracle sees it.
#[derive(Debug, Clone, Copy)]
pub enum OracleFactor<'a> {
    /// `Σ_j p_j m_j / area(m_j)` over the masks of `labels`.
    Scores { probs: &'a [f64], labels: &'a LabelGrid },
    /// 1 on the listed classes, 0 elsewhere.
    Indicator { classes: &'a [usize], labels: &'a LabelGrid },
    /// Constant map.
    Uniform(f64),
}

fn mask_area(labels: &LabelGrid, class: usize, areas: &PixelAreaMap) -> f64 {
    let counts: Vec<u64> = labels
        .rows()
        .map(|row| row.iter().filter(|&&l| l as usize == class).count() as u64)
        .collect();
    areas.measure_row_counts(&counts)
}

fn materialize(factor: &OracleFactor<'_>, areas: &PixelAreaMap) -> Result<DenseMap> {
    let g = areas.grid();
    let (h, w) = (g.height(), g.width());
    let check = |labels: &LabelGrid| {
        if labels.height() != h || labels.width() != w {
            Err(Error::Dimension("mask grid differs from the area map".into()))
        } else {
            Ok(())
        }
    };
    match *factor {
        OracleFactor::Uniform(v) => Ok(Grid::filled(h, w, v)),
        OracleFactor::Indicator { classes, labels } => {
            check(labels)?;
            Ok(labels.map(|l| if classes.contains(&(l as usize)) { 1.0 } else { 0.0 }))
        }
        OracleFactor::Scores { probs, labels } => {
            check(labels)?;
            let mut out = Grid::filled(h, w, 0.0f64);
            for (j, &p) in probs.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let area = mask_area(labels, j, areas);
                if area == 0.0 {
                    return Err(Error::ZeroAreaClass { class: j });
                }
                let term = p / area;
                for r in 0..h {
                    for c in 0..w {
                        if labels.get(r, c) as usize == j {
                            out.set(r, c, out.get(r, c) + term);
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Materializes every factor and multiplies them element-wise, in order.
pub fn oracle_dense_ensemble(factors: &[OracleFactor<'_>], areas: &PixelAreaMap) -> Result<DenseMap> {
    let g = areas.grid();
    guard(g.height(), g.width())?;
    let mut out = Grid::filled(g.height(), g.width(), 1.0f64);
    for f in factors {
        let m = materialize(f, areas)?;
        for r in 0..g.height() {
            for c in 0..g.width() {
                out.set(r, c, out.get(r, c) * m.get(r, c));
            }
        }
    }
    Ok(out)
}
