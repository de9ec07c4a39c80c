//! Class masks on the common grid.
//!
//! A mask set is a single label grid: pixel `q` belongs to mask `j` iff its
//! label is `j`. Population-density buckets, merged land-cover classes and
//! rasterized geolocation cells all end up in this form.

mod buckets;
mod cells;
mod merge;

use std::sync::Arc;

pub use buckets::{apply_buckets, build_buckets, BucketSpec};
pub use cells::{read_cells_csv, read_polygons, rasterize_cells, Cell, CellShape};
pub use merge::{apply_merge, read_merge_csv, MergeMap, ESA_CCI_CODES};

use crate::error::{Error, Result};
use crate::geogrid::PixelAreaMap;
use crate::gridio::{LabelGrid, NODATA};

#[derive(Debug, Clone)]
pub struct ClassMaskSet {
    labels: Arc<LabelGrid>,
    class_areas: Vec<f64>,
    nodata_area: f64,
}

impl ClassMaskSet {
    /// Measures every class of `labels`. `class_count` defaults to one past
    /// the largest label; passing it keeps trailing empty classes addressable.
    pub fn new(
        labels: impl Into<Arc<LabelGrid>>,
        areas: &PixelAreaMap,
        class_count: Option<usize>,
    ) -> Result<Self> {
        let labels = labels.into();
        let grid = areas.grid();
        if !grid.same_shape(labels.height(), labels.width()) {
            return Err(Error::Dimension(format!(
                "label grid {}x{} does not match the {}x{} common grid",
                labels.height(),
                labels.width(),
                grid.height(),
                grid.width()
            )));
        }
        let bound = labels.label_bound();
        let count = class_count.unwrap_or(bound);
        if bound > count {
            return Err(Error::Input(format!(
                "label {} present but only {count} classes declared",
                bound - 1
            )));
        }
        if count >= NODATA as usize {
            return Err(Error::Input(format!("too many classes: {count}")));
        }

        // Per-row counts folded into the class totals row by row, in the
        // same order as PixelAreaMap::measure_row_counts.
        let mut class_areas = vec![0.0f64; count];
        let mut nodata_area = 0.0f64;
        let mut row_counts = vec![0u64; count + 1];
        let mut touched: Vec<usize> = Vec::new();
        for (r, row) in labels.rows().enumerate() {
            for &l in row {
                let k = if l == NODATA { count } else { l as usize };
                if row_counts[k] == 0 {
                    touched.push(k);
                }
                row_counts[k] += 1;
            }
            let a = areas.row_area(r);
            for &k in &touched {
                let n = row_counts[k] as f64;
                if k == count {
                    nodata_area += n * a;
                } else {
                    class_areas[k] += n * a;
                }
                row_counts[k] = 0;
            }
            touched.clear();
        }
        Ok(Self {
            labels,
            class_areas,
            nodata_area,
        })
    }

    pub fn labels(&self) -> &Arc<LabelGrid> {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_areas.len()
    }

    pub fn class_areas(&self) -> &[f64] {
        &self.class_areas
    }

    pub fn nodata_area(&self) -> f64 {
        self.nodata_area
    }

    /// Spherical area of class `class`, km².
    pub fn mask_area(&self, class: usize) -> Result<f64> {
        self.class_areas.get(class).copied().ok_or(Error::Index {
            index: class,
            len: self.class_areas.len(),
        })
    }

    /// A class can carry a score only if it covers some area.
    pub fn is_usable(&self, class: usize) -> bool {
        self.class_areas.get(class).is_some_and(|&a| a > 0.0)
    }

    /// Pixel count per class, nodata last.
    pub fn pixel_counts(&self) -> Vec<u64> {
        let n = self.class_count();
        let mut counts = vec![0u64; n + 1];
        for &l in self.labels.as_slice() {
            let k = if l == NODATA { n } else { l as usize };
            counts[k] += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geogrid::GlobalGrid;

    fn areas(h: usize, w: usize) -> PixelAreaMap {
        PixelAreaMap::new(GlobalGrid::new(h, w).unwrap())
    }

    #[test]
    fn full_globe_class() {
        let a = areas(18, 36);
        let m = ClassMaskSet::new(LabelGrid::filled(18, 36, 0), &a, None).unwrap();
        assert_eq!(m.class_count(), 1);
        let total = a.grid().sphere_area();
        assert!(((m.mask_area(0).unwrap() - total) / total).abs() < 1e-9);
        assert_eq!(m.nodata_area(), 0.0);
    }

    #[test]
    fn empty_class_flagged() {
        let a = areas(2, 2);
        let labels = LabelGrid::from_vec(2, 2, vec![0, 0, 2, NODATA]).unwrap();
        let m = ClassMaskSet::new(labels, &a, Some(4)).unwrap();
        assert_eq!(m.mask_area(1).unwrap(), 0.0);
        assert!(!m.is_usable(1));
        assert!(!m.is_usable(3));
        assert!(m.is_usable(2));
        assert!(matches!(m.mask_area(4), Err(Error::Index { .. })));
        assert_eq!(m.pixel_counts(), vec![2, 0, 1, 0, 1]);
    }

    #[test]
    fn class_count_too_small() {
        let a = areas(2, 2);
        let labels = LabelGrid::from_vec(2, 2, vec![0, 1, 2, 3]).unwrap();
        assert!(ClassMaskSet::new(labels.clone(), &a, Some(3)).is_err());
        let wrong = areas(2, 4);
        assert!(matches!(
            ClassMaskSet::new(labels, &wrong, None),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn class_areas_match_canonical_measure() {
        let a = areas(6, 12);
        let data: Vec<u16> = (0..72).map(|k| [0, 1, NODATA, 2][(k * 7 + k / 5) % 4]).collect();
        let labels = LabelGrid::from_vec(6, 12, data).unwrap();
        let m = ClassMaskSet::new(labels.clone(), &a, None).unwrap();
        for c in 0..3u16 {
            let counts: Vec<u64> = labels
                .rows()
                .map(|r| r.iter().filter(|&&l| l == c).count() as u64)
                .collect();
            assert_eq!(m.mask_area(c as usize).unwrap(), a.measure_row_counts(&counts));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn areas_partition_sphere(
                (h, w, data) in (1usize..12, 1usize..24).prop_flat_map(|(h, w)| {
                    (Just(h), Just(w), proptest::collection::vec(
                        prop_oneof![0u16..5, Just(NODATA)], h * w))
                })
            ) {
                let a = areas(h, w);
                let m = ClassMaskSet::new(LabelGrid::from_vec(h, w, data).unwrap(), &a, None).unwrap();
                let total: f64 = m.class_areas().iter().sum::<f64>() + m.nodata_area();
                let sphere = a.grid().sphere_area();
                prop_assert!(((total - sphere) / sphere).abs() < 1e-9);
            }
        }
    }
}
