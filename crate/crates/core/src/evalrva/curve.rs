use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::EvalRecord;
use crate::error::{Error, Result};
use crate::geogrid::spherical_cap_area;

/// Street, city, region, country and continent radii, km.
pub const GCD_THRESHOLDS_KM: [f64; 5] = [1.0, 25.0, 200.0, 750.0, 2500.0];
pub const THRESHOLD_NAMES: [&str; 5] = ["street", "city", "region", "country", "continent"];

/// Cap areas (km²) with the standard GCD radii.
pub fn cap_area_thresholds(earth_radius: f64) -> Vec<f64> {
    GCD_THRESHOLDS_KM
        .iter()
        .map(|&r| spherical_cap_area(r, earth_radius).expect("radii are below pi*R"))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Thresholds {
    /// Every distinct min-area, i.e. the exact empirical CDF.
    Auto,
    Explicit(Vec<f64>),
}

/// Recall as a step function of the area budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RvACurve {
    points: Vec<(f64, f64)>,
}

impl RvACurve {
    /// `(area_km2, recall)` pairs, ascending in area.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Recall with budget `alpha`: the value at the largest threshold not
    /// above `alpha`, 0 below the first.
    pub fn recall_at(&self, alpha: f64) -> f64 {
        let k = self.points.partition_point(|&(a, _)| a <= alpha);
        if k == 0 {
            0.0
        } else {
            self.points[k - 1].1
        }
    }
}

/// `recall(α) = |{i : min_area_i <= α}| / N`. The auto curve ends at
/// `total_area` with recall 1.
pub fn rva_curve_from_areas(
    min_areas: &[f64],
    thresholds: &Thresholds,
    total_area: f64,
) -> Result<RvACurve> {
    if min_areas.is_empty() {
        return Err(Error::Input("recall curve needs at least one record".into()));
    }
    let mut sorted = min_areas.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let recall = |alpha: f64| sorted.partition_point(|&a| a <= alpha) as f64 / n;
    let mut alphas: Vec<f64> = match thresholds {
        Thresholds::Auto => {
            let mut t = sorted.clone();
            t.dedup();
            if t.last().is_some_and(|&last| last < total_area) {
                t.push(total_area);
            }
            t
        }
        Thresholds::Explicit(t) => t.clone(),
    };
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    Ok(RvACurve {
        points: alphas.into_iter().map(|a| (a, recall(a))).collect(),
    })
}

pub fn rva_curve(
    records: &[EvalRecord],
    thresholds: &Thresholds,
    total_area: f64,
) -> Result<RvACurve> {
    let areas: Vec<f64> = records.iter().map(|r| r.min_area).collect();
    rva_curve_from_areas(&areas, thresholds, total_area)
}

/// Fraction of errors at or below each threshold. Missing predictions
/// should be passed as `f64::INFINITY`.
pub fn gcd_recall(errors_km: &[f64], thresholds_km: &[f64]) -> Result<Vec<f64>> {
    if errors_km.is_empty() {
        return Err(Error::Input("GCD recall needs at least one error".into()));
    }
    let n = errors_km.len() as f64;
    Ok(thresholds_km
        .iter()
        .map(|&t| errors_km.iter().filter(|&&e| e <= t).count() as f64 / n)
        .collect())
}

fn join_buckets<'a>(
    records: &'a [EvalRecord],
    buckets: &HashMap<String, u16>,
) -> Result<BTreeMap<u16, Vec<&'a EvalRecord>>> {
    let mut by_bucket: BTreeMap<u16, Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        let b = buckets.get(&r.image_id).ok_or_else(|| {
            Error::Join(format!("image {:?} has no bucket label", r.image_id))
        })?;
        by_bucket.entry(*b).or_default().push(r);
    }
    Ok(by_bucket)
}

/// One curve per bucket.
pub fn per_bucket_breakdown(
    records: &[EvalRecord],
    buckets: &HashMap<String, u16>,
    thresholds: &Thresholds,
    total_area: f64,
) -> Result<BTreeMap<u16, RvACurve>> {
    join_buckets(records, buckets)?
        .into_iter()
        .map(|(b, recs)| {
            let areas: Vec<f64> = recs.iter().map(|r| r.min_area).collect();
            Ok((b, rva_curve_from_areas(&areas, thresholds, total_area)?))
        })
        .collect()
}

/// Absolute recall improvement of `other` over `base` per bucket, as
/// `(area, recall_other - recall_base)` on the union of both curves'
/// thresholds. Both sets must cover the same images.
pub fn bucket_deltas(
    base: &[EvalRecord],
    other: &[EvalRecord],
    buckets: &HashMap<String, u16>,
    total_area: f64,
) -> Result<BTreeMap<u16, Vec<(f64, f64)>>> {
    let ids = |rs: &[EvalRecord]| rs.iter().map(|r| r.image_id.clone()).collect::<BTreeSet<_>>();
    let (a, b) = (ids(base), ids(other));
    if a != b {
        let missing = a.symmetric_difference(&b).next().cloned().unwrap_or_default();
        return Err(Error::Join(format!(
            "record sets differ (e.g. image {missing:?})"
        )));
    }
    let base_curves = per_bucket_breakdown(base, buckets, &Thresholds::Auto, total_area)?;
    let other_curves = per_bucket_breakdown(other, buckets, &Thresholds::Auto, total_area)?;
    let mut out = BTreeMap::new();
    for (bucket, bc) in &base_curves {
        let oc = &other_curves[bucket];
        let mut alphas: Vec<f64> = bc
            .points()
            .iter()
            .chain(oc.points())
            .map(|&(a, _)| a)
            .collect();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        out.insert(
            *bucket,
            alphas
                .into_iter()
                .map(|a| (a, oc.recall_at(a) - bc.recall_at(a)))
                .collect(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geogrid::MEAN_EARTH_RADIUS_KM;

    fn rec(id: &str, area: f64) -> EvalRecord {
        EvalRecord {
            image_id: id.into(),
            min_area: area,
            p_star: 1.0,
            top1: None,
            gcd_km: None,
            bucket: None,
        }
    }

    #[test]
    fn counting() {
        let c = rva_curve_from_areas(&[10.0, 20.0, 30.0, 40.0], &Thresholds::Explicit(vec![25.0]), 100.0)
            .unwrap();
        assert_eq!(c.points(), &[(25.0, 0.5)]);
        let c = rva_curve_from_areas(&[10.0, 20.0, 30.0, 40.0], &Thresholds::Auto, 100.0).unwrap();
        assert_eq!(c.recall_at(25.0), 0.5);
        assert_eq!(c.recall_at(9.9), 0.0);
        assert_eq!(c.recall_at(40.0), 1.0);
        assert_eq!(c.points().last(), Some(&(100.0, 1.0)));
    }

    #[test]
    fn step_at_full_globe() {
        let total = 5.1e8;
        let c = rva_curve_from_areas(&[total; 3], &Thresholds::Auto, total).unwrap();
        assert_eq!(c.points(), &[(total, 1.0)]);
        assert_eq!(c.recall_at(total * 0.999), 0.0);
    }

    #[test]
    fn empty_records() {
        assert!(rva_curve(&[], &Thresholds::Auto, 1.0).is_err());
        assert!(gcd_recall(&[], &GCD_THRESHOLDS_KM).is_err());
    }

    #[test]
    fn gcd_counts() {
        assert_eq!(gcd_recall(&[0.0; 4], &GCD_THRESHOLDS_KM).unwrap(), vec![1.0; 5]);
        let r = gcd_recall(&[0.5, 30.0, 300.0], &GCD_THRESHOLDS_KM).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(r, vec![third, third, 2.0 * third, 1.0, 1.0]);
        let r = gcd_recall(&[f64::INFINITY, 0.0], &[1.0]).unwrap();
        assert_eq!(r, vec![0.5]);
    }

    #[test]
    fn cap_table() {
        let caps = cap_area_thresholds(MEAN_EARTH_RADIUS_KM);
        assert!((caps[0] - 3.14).abs() < 0.01);
        assert!(caps.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn breakdown_and_deltas() {
        let recs = vec![rec("a", 1.0), rec("b", 2.0), rec("c", 3.0), rec("d", 4.0)];
        let buckets: HashMap<String, u16> =
            [("a", 0), ("b", 1), ("c", 0), ("d", 1)].map(|(k, v)| (k.to_string(), v)).into();
        let per = per_bucket_breakdown(&recs, &buckets, &Thresholds::Auto, 10.0).unwrap();
        assert_eq!(per[&0].points(), &[(1.0, 0.5), (3.0, 1.0), (10.0, 1.0)]);

        let zero = bucket_deltas(&recs, &recs, &buckets, 10.0).unwrap();
        assert!(zero.values().flatten().all(|&(_, d)| d == 0.0));

        // Curve subtraction by direct recomputation.
        let better = vec![rec("a", 0.5), rec("b", 2.0), rec("c", 1.5), rec("d", 4.0)];
        let d = bucket_deltas(&recs, &better, &buckets, 10.0).unwrap();
        let base0 = |x: f64| [1.0, 3.0].iter().filter(|&&a| a <= x).count() as f64 / 2.0;
        let new0 = |x: f64| [0.5, 1.5].iter().filter(|&&a| a <= x).count() as f64 / 2.0;
        for &(x, delta) in &d[&0] {
            assert_eq!(delta, new0(x) - base0(x));
        }
        assert_eq!(d[&0].len(), 5);

        let missing = vec![rec("a", 1.0)];
        assert!(matches!(
            bucket_deltas(&recs, &missing, &buckets, 10.0),
            Err(Error::Join(_))
        ));
        let unlabeled: HashMap<String, u16> = HashMap::new();
        assert!(matches!(
            per_bucket_breakdown(&recs, &unlabeled, &Thresholds::Auto, 10.0),
            Err(Error::Join(_))
        ));
    }

    #[test]
    fn single_bucket_equals_overall() {
        let recs = vec![rec("a", 3.0), rec("b", 1.0), rec("c", 3.0)];
        let buckets: HashMap<String, u16> =
            ["a", "b", "c"].map(|k| (k.to_string(), 2)).into();
        let per = per_bucket_breakdown(&recs, &buckets, &Thresholds::Auto, 9.0).unwrap();
        assert_eq!(per[&2], rva_curve(&recs, &Thresholds::Auto, 9.0).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn valid_cdf(areas in proptest::collection::vec(0.001f64..100.0, 1..60)) {
                let c = rva_curve_from_areas(&areas, &Thresholds::Auto, 100.0).unwrap();
                let p = c.points();
                prop_assert!(p.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
                prop_assert_eq!(p.last().unwrap(), &(100.0, 1.0));
                for &(a, r) in p {
                    let direct = areas.iter().filter(|&&x| x <= a).count() as f64 / areas.len() as f64;
                    prop_assert_eq!(r, direct);
                }
            }
        }
    }
}
