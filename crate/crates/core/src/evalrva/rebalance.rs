//! Bucket-balanced subsampling of an image manifest.
//!
//! Reproducible across implementations: every random draw comes from a
//! counter-based SplitMix64 stream.
//!
//! ```text
//! mix(z)       = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!                z ^= z >> 27; z *= 0x94D049BB133111EB; z ^ (z >> 31)
//! key(seed, b) = mix(seed + (b + 1) * 0x9E3779B97F4A7C15)
//! draw(k, i)   = mix(k + (i + 1) * 0x9E3779B97F4A7C15)     (wrapping u64)
//! below(x, m)  = (x * m) >> 64                             (u128 product)
//! ```
//!
//! For bucket `b` with members `m[0..n]` in manifest order and target size
//! `k`, a partial Fisher-Yates shuffle runs for `i in 0..k`:
//! `j = i + below(draw(key(seed, b), i), n - i)`, swap `m[i]` and `m[j]`.
//! The first `k` members are kept. Output lists bucket 0 first, then bucket
//! 1, and so on, each in manifest order.

use crate::error::{Error, Result};
use crate::gridio::ImageManifest;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Counter-based SplitMix64.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitMix64 {
    key: u64,
}

impl SplitMix64 {
    pub fn mix(mut z: u64) -> u64 {
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Independent stream for `(seed, stream)`.
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: Self::mix(seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(GAMMA))),
        }
    }

    /// The `i`-th value of the stream.
    pub fn draw(&self, i: u64) -> u64 {
        Self::mix(self.key.wrapping_add(i.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    /// Maps the `i`-th value into `0..m`.
    pub fn below(&self, i: u64, m: u64) -> u64 {
        ((self.draw(i) as u128 * m as u128) >> 64) as u64
    }
}

/// Manifest row indices of a balanced subset: the same number of images,
/// the size of the smallest bucket, drawn from each of `0..n_buckets`.
/// Images without a bucket (`None`) are left out.
pub fn rebalance_indices(labels: &[Option<u16>], n_buckets: usize, seed: u64) -> Result<Vec<usize>> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_buckets];
    for (k, label) in labels.iter().enumerate() {
        if let Some(b) = *label {
            members
                .get_mut(b as usize)
                .ok_or_else(|| {
                    Error::Input(format!("row {k}: bucket {b} outside 0..{n_buckets}"))
                })?
                .push(k);
        }
    }
    if n_buckets == 0 {
        return Err(Error::Input("no buckets to balance".into()));
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::EmptyBucket(empty as u16));
    }
    let take = members.iter().map(Vec::len).min().unwrap_or(0);
    let mut out = Vec::with_capacity(take * n_buckets);
    for (b, m) in members.iter_mut().enumerate() {
        let rng = SplitMix64::new(seed, b as u64);
        let n = m.len();
        for i in 0..take {
            let j = i + rng.below(i as u64, (n - i) as u64) as usize;
            m.swap(i, j);
        }
        let mut chosen = m[..take].to_vec();
        chosen.sort_unstable();
        out.extend(chosen);
    }
    Ok(out)
}

/// Balanced subset of `manifest`; `labels` is aligned with its rows.
pub fn rebalance(
    manifest: &ImageManifest,
    labels: &[Option<u16>],
    n_buckets: usize,
    seed: u64,
) -> Result<ImageManifest> {
    if labels.len() != manifest.len() {
        return Err(Error::Join(format!(
            "{} bucket labels for {} manifest rows",
            labels.len(),
            manifest.len()
        )));
    }
    Ok(manifest.subset(&rebalance_indices(labels, n_buckets, seed)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels_with_counts(counts: &[usize]) -> Vec<Option<u16>> {
        // Interleave buckets so selection has to respect manifest order.
        let mut out = Vec::new();
        let mut left = counts.to_vec();
        while left.iter().any(|&c| c > 0) {
            for (b, c) in left.iter_mut().enumerate() {
                if *c > 0 {
                    out.push(Some(b as u16));
                    *c -= 1;
                }
            }
        }
        out
    }

    #[test]
    fn reference_mix_values() {
        // SplitMix64 reference outputs for state increments from seed 0.
        let mut s: u64 = 0;
        let mut next = || {
            s = s.wrapping_add(GAMMA);
            SplitMix64::mix(s)
        };
        assert_eq!(next(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(next(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(next(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn counts_from_reported_buckets() {
        for (counts, total) in [
            (vec![540, 548, 1159, 715], 2160),
            (vec![11846, 17623, 18668, 1692], 6768),
        ] {
            let labels = labels_with_counts(&counts);
            let idx = rebalance_indices(&labels, 4, 7).unwrap();
            assert_eq!(idx.len(), total);
            let min = *counts.iter().min().unwrap();
            for b in 0..4u16 {
                assert_eq!(idx.iter().filter(|&&k| labels[k] == Some(b)).count(), min);
            }
            assert_eq!(idx, rebalance_indices(&labels, 4, 7).unwrap());
        }
    }

    #[test]
    fn output_order_and_full_selection() {
        let labels = labels_with_counts(&[3, 3, 3]);
        let idx = rebalance_indices(&labels, 3, 1).unwrap();
        let expected: Vec<usize> = (0..3)
            .flat_map(|b| (0..9).filter(move |k| k % 3 == b))
            .collect();
        assert_eq!(idx, expected);
    }

    #[test]
    fn empty_bucket_and_unlabeled() {
        let labels = vec![Some(0), Some(2), None];
        assert!(matches!(
            rebalance_indices(&labels, 3, 0),
            Err(Error::EmptyBucket(1))
        ));
        assert!(rebalance_indices(&labels, 2, 0).is_err());
        let labels = vec![Some(0), None, Some(1), Some(1)];
        let idx = rebalance_indices(&labels, 2, 0).unwrap();
        assert_eq!(idx.len(), 2);
        assert!(!idx.contains(&1));
    }

    #[test]
    fn seeds_change_subset_not_counts() {
        let labels = labels_with_counts(&[50, 20, 80]);
        let a = rebalance_indices(&labels, 3, 1).unwrap();
        let b = rebalance_indices(&labels, 3, 2).unwrap();
        assert_ne!(a, b);
        assert_eq!(a.len(), b.len());
    }

    #[test]
    fn roughly_uniform_selection() {
        // Each of 10 members should be picked about half the time.
        let labels: Vec<Option<u16>> = (0..15).map(|k| Some((k >= 10) as u16)).collect();
        let mut hits = [0u32; 10];
        for seed in 0..4000 {
            for k in rebalance_indices(&labels, 2, seed).unwrap() {
                if k < 10 {
                    hits[k] += 1;
                }
            }
        }
        for h in hits {
            assert!((1700..2300).contains(&h), "{hits:?}");
        }
    }
}
