//! Probability maps on the common grid in factorized form.
//!
//! A predictor's map is a label grid plus a per-class value table
//! (`p_j / area(m_j)`), and an ensemble is the element-wise product of
//! several such maps. Nothing is materialized per image: evaluating a pixel
//! costs one table lookup and multiply per factor, and the label grids are
//! shared across every image that uses the same masks.

use std::sync::Arc;

use crate::attribmask::ClassMaskSet;
use crate::error::{Error, Result};
use crate::gridio::{Grid, LabelGrid, NODATA};

/// Explicit per-pixel probabilities.
pub type DenseMap = Grid<f64>;

/// Default budget for [`densify`]: one full common grid of f64.
pub const DEFAULT_DENSE_BUDGET_BYTES: usize = 5400 * 10800 * 8;

/// Per-class probabilities from one predictor for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    probs: Vec<f64>,
}

impl ScoreVector {
    pub fn dense(probs: Vec<f64>) -> Result<Self> {
        if let Some((j, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
        {
            return Err(Error::Input(format!("score {j} is {p}; must be finite and >= 0")));
        }
        Ok(Self { probs })
    }

    /// Scores given as `(class, p)` pairs; unlisted classes score 0.
    pub fn from_sparse(pairs: &[(usize, f64)], class_count: usize) -> Result<Self> {
        let mut probs = vec![0.0; class_count];
        for &(j, p) in pairs {
            let slot = probs.get_mut(j).ok_or(Error::Index {
                index: j,
                len: class_count,
            })?;
            *slot = p;
        }
        Self::dense(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Entries in a labeled factor's lookup table: one per possible u16 label.
const LUT_LEN: usize = 1 << 16;

/// One factor of a [`FactorizedMap`].
#[derive(Debug, Clone)]
pub struct Factor {
    height: usize,
    width: usize,
    labels: Option<Arc<LabelGrid>>,
    values: Vec<f64>,
    // Indexed directly by label. Entries past the class table, nodata
    // included, are 0, so the hot loops need neither clamping nor bounds
    // checks.
    lut: Option<Arc<[f64; LUT_LEN]>>,
}

impl Factor {
    /// Same value everywhere.
    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        check_value(value)?;
        Ok(Self {
            height,
            width,
            labels: None,
            values: vec![value],
            lut: None,
        })
    }

    /// Pixel value is `values[label]`, 0 for nodata.
    pub fn from_table(labels: Arc<LabelGrid>, values: &[f64]) -> Result<Self> {
        values.iter().copied().try_for_each(check_value)?;
        if values.len() > NODATA as usize {
            return Err(Error::Index {
                index: values.len() - 1,
                len: NODATA as usize,
            });
        }
        let mut lut: Box<[f64; LUT_LEN]> = vec![0.0; LUT_LEN]
            .into_boxed_slice()
            .try_into()
            .expect("length is LUT_LEN");
        lut[..values.len()].copy_from_slice(values);
        Ok(Self {
            height: labels.height(),
            width: labels.width(),
            labels: Some(labels),
            values: values.to_vec(),
            lut: Some(Arc::from(lut)),
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn labels(&self) -> Option<&Arc<LabelGrid>> {
        self.labels.as_ref()
    }

    /// Per-class values; a single value for constant factors.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The same factor with every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|v| v * c).collect();
        match &self.labels {
            Some(l) => Self::from_table(Arc::clone(l), &values),
            None => Self::constant(self.height, self.width, values[0]),
        }
    }

    #[inline]
    pub fn value_at(&self, row: usize, col: usize) -> f64 {
        match (&self.labels, &self.lut) {
            (Some(l), Some(lut)) => lut[l.get(row, col) as usize],
            _ => self.values[0],
        }
    }

    fn write_span(&self, row: usize, start: usize, out: &mut [f64]) {
        match (&self.labels, &self.lut) {
            (Some(l), Some(lut)) => {
                let src = &l.row(row)[start..start + out.len()];
                for (o, &lab) in out.iter_mut().zip(src) {
                    *o = lut[lab as usize];
                }
            }
            _ => out.fill(self.values[0]),
        }
    }

    fn mul_span(&self, row: usize, start: usize, out: &mut [f64]) {
        match (&self.labels, &self.lut) {
            (Some(l), Some(lut)) => {
                let src = &l.row(row)[start..start + out.len()];
                for (o, &lab) in out.iter_mut().zip(src) {
                    *o *= lut[lab as usize];
                }
            }
            _ => {
                let v = self.values[0];
                out.iter_mut().for_each(|o| *o *= v);
            }
        }
    }
}

fn check_value(v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("factor value {v} must be finite and >= 0")))
    }
}

/// Element-wise product of factors; an empty product is 1 everywhere.
#[derive(Debug, Clone)]
pub struct FactorizedMap {
    height: usize,
    width: usize,
    factors: Vec<Factor>,
}

impl FactorizedMap {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            factors: Vec::new(),
        }
    }

    pub fn from_factors(height: usize, width: usize, factors: Vec<Factor>) -> Result<Self> {
        let mut map = Self::new(height, width);
        for f in factors {
            map.push(f)?;
        }
        Ok(map)
    }

    pub fn push(&mut self, factor: Factor) -> Result<()> {
        if factor.height != self.height || factor.width != self.width {
            return Err(Error::Dimension(format!(
                "factor is {}x{}, map is {}x{}",
                factor.height, factor.width, self.height, self.width
            )));
        }
        self.factors.push(factor);
        Ok(())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Probability at one pixel, factors multiplied in list order.
    pub fn evaluate(&self, row: usize, col: usize) -> f64 {
        self.factors
            .iter()
            .fold(1.0, |acc, f| acc * f.value_at(row, col))
    }

    /// Writes one row of evaluated values into `out` (length `width`).
    /// Bit-identical to calling [`evaluate`](Self::evaluate) per pixel.
    pub fn fill_row(&self, row: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.width);
        self.fill_span(row, 0, out);
    }

    /// Writes columns `start..start + out.len()` of one row.
    pub fn fill_span(&self, row: usize, start: usize, out: &mut [f64]) {
        match self.factors.split_first() {
            None => out.fill(1.0),
            Some((first, rest)) => {
                first.write_span(row, start, out);
                for f in rest {
                    f.mul_span(row, start, out);
                }
            }
        }
    }
}

/// Turns one predictor's scores into a factor: `p_j / area(m_j)` on mask `j`.
pub fn assemble(scores: &ScoreVector, masks: &ClassMaskSet) -> Result<Factor> {
    let areas = masks.class_areas();
    if scores.probs().len() > areas.len() {
        return Err(Error::Index {
            index: scores.probs().len() - 1,
            len: areas.len(),
        });
    }
    let mut values = vec![0.0; areas.len()];
    for (j, &p) in scores.probs().iter().enumerate() {
        if p > 0.0 {
            if areas[j] <= 0.0 {
                return Err(Error::ZeroAreaClass { class: j });
            }
            values[j] = p / areas[j];
        }
    }
    Factor::from_table(Arc::clone(masks.labels()), &values)
}

/// Concatenates the factor lists of several maps.
pub fn product(maps: &[FactorizedMap]) -> Result<FactorizedMap> {
    let Some(first) = maps.first() else {
        return Err(Error::Input("product of zero maps".into()));
    };
    let mut out = FactorizedMap::new(first.height, first.width);
    for m in maps {
        if m.height != out.height || m.width != out.width {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} and {}x{} maps",
                out.height, out.width, m.height, m.width
            )));
        }
        out.factors.extend(m.factors.iter().cloned());
    }
    Ok(out)
}

/// Indicator factor: 1 on pixels whose class is in `classes`, 0 elsewhere.
pub fn urban_prior(masks: &ClassMaskSet, classes: &[usize]) -> Result<Factor> {
    if classes.is_empty() {
        return Err(Error::Input("urban prior needs at least one class".into()));
    }
    let mut values = vec![0.0; masks.class_count()];
    for &c in classes {
        *values.get_mut(c).ok_or(Error::Index {
            index: c,
            len: masks.class_count(),
        })? = 1.0;
    }
    Factor::from_table(Arc::clone(masks.labels()), &values)
}

/// Materializes the map, refusing when it would exceed `budget_bytes`.
pub fn densify(map: &FactorizedMap, budget_bytes: usize) -> Result<DenseMap> {
    let n = map.height * map.width;
    let need = n.saturating_mul(std::mem::size_of::<f64>());
    if need > budget_bytes {
        return Err(Error::Resource(format!(
            "dense {}x{} map needs {need} bytes, budget is {budget_bytes}",
            map.height, map.width
        )));
    }
    let mut data = vec![0.0; n];
    for (r, out) in data.chunks_exact_mut(map.width).enumerate() {
        map.fill_row(r, out);
    }
    Grid::from_vec(map.height, map.width, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geogrid::{GlobalGrid, PixelAreaMap};
    use crate::gridio::NODATA;

    fn areas(h: usize, w: usize) -> PixelAreaMap {
        PixelAreaMap::new(GlobalGrid::new(h, w).unwrap())
    }

    fn masks(h: usize, w: usize, labels: Vec<u16>) -> ClassMaskSet {
        ClassMaskSet::new(LabelGrid::from_vec(h, w, labels).unwrap(), &areas(h, w), None).unwrap()
    }

    #[test]
    fn uniform_normalization() {
        let m = masks(4, 8, vec![0; 32]);
        let f = assemble(&ScoreVector::dense(vec![1.0]).unwrap(), &m).unwrap();
        let map = FactorizedMap::from_factors(4, 8, vec![f]).unwrap();
        let expected = 1.0 / m.mask_area(0).unwrap();
        let s = areas(4, 8).grid().sphere_area();
        assert!(((expected - 1.0 / s) * s).abs() < 1e-9);
        let d = densify(&map, usize::MAX).unwrap();
        assert!(d.as_slice().iter().all(|&v| v == expected));
    }

    #[test]
    fn proportional_scores() {
        // Columns split east/west: equal areas.
        let labels: Vec<u16> = (0..16).map(|k| if k % 4 < 2 { 0 } else { 1 }).collect();
        let m = masks(4, 4, labels);
        let f = assemble(&ScoreVector::dense(vec![0.75, 0.25]).unwrap(), &m).unwrap();
        assert!((f.value_at(0, 0) / f.value_at(0, 3) - 3.0).abs() < 1e-12);
    }

    // Hand-computed table for north/south halves of a 2x2 grid.
    #[test]
    fn two_by_two_rows() {
        let g = areas(2, 2);
        let m = masks(2, 2, vec![0, 0, 1, 1]);
        let f = assemble(&ScoreVector::dense(vec![0.5, 0.5]).unwrap(), &m).unwrap();
        let map = FactorizedMap::from_factors(2, 2, vec![f]).unwrap();
        let d = densify(&map, usize::MAX).unwrap();
        let north = 0.5 / (2.0 * g.row_area(0));
        let south = 0.5 / (2.0 * g.row_area(1));
        for (got, want) in d.as_slice().iter().zip([north, north, south, south]) {
            assert!(((got - want) / want).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_area_guard() {
        let m = ClassMaskSet::new(LabelGrid::filled(2, 2, 0), &areas(2, 2), Some(3)).unwrap();
        let err = assemble(&ScoreVector::dense(vec![0.5, 0.0, 0.5]).unwrap(), &m).unwrap_err();
        assert!(matches!(err, Error::ZeroAreaClass { class: 2 }));
        // Zero score on an empty class is fine.
        assert!(assemble(&ScoreVector::dense(vec![1.0, 0.0, 0.0]).unwrap(), &m).is_ok());
        assert!(assemble(&ScoreVector::dense(vec![1.0; 4]).unwrap(), &m).is_err());
    }

    #[test]
    fn nodata_is_zero() {
        let m = masks(1, 3, vec![0, NODATA, 1]);
        let f = assemble(&ScoreVector::dense(vec![1.0, 1.0]).unwrap(), &m).unwrap();
        assert_eq!(f.value_at(0, 1), 0.0);
        assert!(f.value_at(0, 0) > 0.0);
    }

    #[test]
    fn identity_and_annihilator() {
        let m = masks(2, 4, vec![0, 1, 2, 0, 1, 2, 0, 1]);
        let f = assemble(&ScoreVector::dense(vec![0.2, 0.3, 0.5]).unwrap(), &m).unwrap();
        let base = FactorizedMap::from_factors(2, 4, vec![f.clone()]).unwrap();
        let one = FactorizedMap::from_factors(2, 4, vec![Factor::constant(2, 4, 1.0).unwrap()]).unwrap();
        let a = densify(&base, usize::MAX).unwrap();
        let b = densify(&product(&[base.clone(), one]).unwrap(), usize::MAX).unwrap();
        assert_eq!(a, b);

        // Zero outside class 1.
        let mask = urban_prior(&m, &[1]).unwrap();
        let masked = FactorizedMap::from_factors(2, 4, vec![f, mask]).unwrap();
        for r in 0..2 {
            for c in 0..4 {
                let v = masked.evaluate(r, c);
                assert_eq!(v == 0.0, m.labels().get(r, c) != 1);
            }
        }
    }

    #[test]
    fn urban_prior_errors() {
        let m = masks(1, 4, vec![0, 1, 2, 3]);
        assert!(matches!(urban_prior(&m, &[]), Err(Error::Input(_))));
        assert!(matches!(urban_prior(&m, &[4]), Err(Error::Index { .. })));
        let all = urban_prior(&m, &[0, 1, 2, 3]).unwrap();
        assert!((0..4).all(|c| all.value_at(0, c) == 1.0));
    }

    #[test]
    fn dimension_mismatch() {
        let a = FactorizedMap::new(2, 4);
        let b = FactorizedMap::new(4, 8);
        assert!(matches!(product(&[a.clone(), b]), Err(Error::Dimension(_))));
        let mut a = a;
        assert!(a.push(Factor::constant(3, 3, 1.0).unwrap()).is_err());
    }

    #[test]
    fn densify_budget_and_empty_product() {
        let map = FactorizedMap::new(3, 5);
        let d = densify(&map, 15 * 8).unwrap();
        assert!(d.as_slice().iter().all(|&v| v == 1.0));
        assert!(matches!(densify(&map, 15 * 8 - 1), Err(Error::Resource(_))));
    }

    #[test]
    fn sparse_scores() {
        let s = ScoreVector::from_sparse(&[(2, 0.5), (0, 0.25)], 4).unwrap();
        assert_eq!(s.probs(), &[0.25, 0.0, 0.5, 0.0]);
        assert!(ScoreVector::from_sparse(&[(4, 0.5)], 4).is_err());
        assert!(ScoreVector::dense(vec![f64::NAN]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn factor(h: usize, w: usize) -> impl Strategy<Value = Factor> {
            (
                proptest::collection::vec(prop_oneof![0u16..4, Just(NODATA)], h * w),
                proptest::collection::vec(0.0f64..1.0, 4),
            )
                .prop_map(move |(l, v)| {
                    Factor::from_table(Arc::new(LabelGrid::from_vec(h, w, l).unwrap()), &v).unwrap()
                })
        }

        proptest! {
            #[test]
            fn commutative(a in factor(3, 5), b in factor(3, 5)) {
                let ab = FactorizedMap::from_factors(3, 5, vec![a.clone(), b.clone()]).unwrap();
                let ba = FactorizedMap::from_factors(3, 5, vec![b, a]).unwrap();
                for r in 0..3 {
                    for c in 0..5 {
                        prop_assert_eq!(ab.evaluate(r, c), ba.evaluate(r, c));
                    }
                }
            }

            #[test]
            fn densify_matches_pointwise(fs in proptest::collection::vec(factor(4, 6), 0..4)) {
                let map = FactorizedMap::from_factors(4, 6, fs.clone()).unwrap();
                let d = densify(&map, usize::MAX).unwrap();
                for r in 0..4 {
                    for c in 0..6 {
                        let mut v = 1.0;
                        for f in &fs {
                            v *= f.value_at(r, c);
                        }
                        prop_assert_eq!(d.get(r, c), v);
                        prop_assert_eq!(map.evaluate(r, c), v);
                    }
                }
            }

            #[test]
            fn assembled_map_integrates_to_score_mass(
                labels in proptest::collection::vec(0u16..5, 6 * 12),
                probs in proptest::collection::vec(0.0f64..1.0, 5),
            ) {
                let g = areas(6, 12);
                let m = ClassMaskSet::new(LabelGrid::from_vec(6, 12, labels).unwrap(), &g, Some(5)).unwrap();
                let probs: Vec<f64> = probs.iter().enumerate()
                    .map(|(j, &p)| if m.is_usable(j) { p } else { 0.0 }).collect();
                let f = assemble(&ScoreVector::dense(probs.clone()).unwrap(), &m).unwrap();
                let mut integral = 0.0;
                for r in 0..6 {
                    for c in 0..12 {
                        integral += f.value_at(r, c) * g.row_area(r);
                    }
                }
                let mass: f64 = probs.iter().sum();
                prop_assert!((integral - mass).abs() <= 1e-6 * mass.max(1e-12));
            }
        }
    }
}
