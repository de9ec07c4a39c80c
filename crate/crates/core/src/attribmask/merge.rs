//! Relabeling of land-cover codes into merged classes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::gridio::{LabelGrid, NODATA};

/// ESA CCI land-cover legend; 0 is "no data".
pub const ESA_CCI_CODES: [u16; 38] = [
    0, 10, 11, 12, 20, 30, 40, 50, 60, 61, 62, 70, 71, 72, 80, 81, 82, 90, 100, 110, 120, 121, 122,
    130, 140, 150, 151, 152, 153, 160, 170, 180, 190, 200, 201, 202, 210, 220,
];

/// Source code to merged class. A destination of [`NODATA`] drops the code.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeMap {
    map: BTreeMap<u16, u16>,
    class_count: usize,
}

impl MergeMap {
    pub fn new(map: BTreeMap<u16, u16>) -> Result<Self> {
        let class_count = map
            .values()
            .filter(|&&d| d != NODATA)
            .map(|&d| d as usize + 1)
            .max()
            .unwrap_or(0);
        for c in 0..class_count {
            if !map.values().any(|&d| d as usize == c) {
                return Err(Error::Input(format!(
                    "merged class {c} has no source code (classes 0..{class_count} must all be used)"
                )));
            }
        }
        Ok(Self { map, class_count })
    }

    /// Seven classes: cropland (10–40), broadleaf tree (50–60), other tree
    /// (70–100), short vegetation (110–150), flooded vegetation (160–180),
    /// urban (190), bare/water/ice (200–220). Sub-codes follow their parent.
    pub fn esa_default() -> Self {
        let map = ESA_CCI_CODES
            .iter()
            .map(|&code| {
                let dst = match code - code % 10 {
                    0 => NODATA,
                    10..=40 => 0,
                    50..=60 => 1,
                    70..=100 => 2,
                    110..=150 => 3,
                    160..=180 => 4,
                    190 => 5,
                    _ => 6,
                };
                (code, dst)
            })
            .collect();
        Self::new(map).expect("default merge map is surjective")
    }

    pub fn identity(codes: impl IntoIterator<Item = u16>) -> Result<Self> {
        Self::new(codes.into_iter().map(|c| (c, c)).collect())
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn get(&self, code: u16) -> Option<u16> {
        self.map.get(&code).copied()
    }
}

pub fn apply_merge(labels: &LabelGrid, merge: &MergeMap) -> Result<LabelGrid> {
    let mut lut: Vec<Option<u16>> = vec![None; u16::MAX as usize + 1];
    for (&src, &dst) in &merge.map {
        lut[src as usize] = Some(dst);
    }
    lut[NODATA as usize] = Some(NODATA);
    let mut out = Vec::with_capacity(labels.len());
    for &l in labels.as_slice() {
        out.push(lut[l as usize].ok_or(Error::UnmappedLabel(l))?);
    }
    LabelGrid::from_vec(labels.height(), labels.width(), out)
}

#[derive(Deserialize)]
struct MergeRow {
    src_code: u16,
    dst_class: String,
}

/// `src_code,dst_class`; `dst_class` may be `nodata`.
pub fn read_merge_csv(path: impl AsRef<Path>) -> Result<MergeMap> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut map = BTreeMap::new();
    for row in rdr.deserialize::<MergeRow>() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        let dst = match row.dst_class.trim() {
            "nodata" => NODATA,
            s => s.parse::<u16>().map_err(|_| {
                Error::Input(format!("{}: bad dst_class {s:?}", path.display()))
            })?,
        };
        if map.insert(row.src_code, dst).is_some() {
            return Err(Error::Input(format!(
                "{}: src_code {} listed twice",
                path.display(),
                row.src_code
            )));
        }
    }
    MergeMap::new(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_groupings() {
        let m = MergeMap::esa_default();
        assert_eq!(m.class_count(), 7);
        assert_eq!(m.get(30), Some(0));
        assert_eq!(m.get(100), Some(2));
        assert_eq!(m.get(190), Some(5));
        assert_eq!(m.get(62), Some(1));
        assert_eq!(m.get(153), Some(3));
        assert_eq!(m.get(180), Some(4));
        assert_eq!(m.get(202), Some(6));
        assert_eq!(m.get(0), Some(NODATA));
        assert_eq!(m.get(5), None);
    }

    #[test]
    fn single_code_and_unmapped() {
        let m = MergeMap::esa_default();
        let g = LabelGrid::filled(3, 4, 210);
        assert_eq!(apply_merge(&g, &m).unwrap(), LabelGrid::filled(3, 4, 6));
        let g = LabelGrid::from_vec(1, 2, vec![10, 15]).unwrap();
        assert!(matches!(apply_merge(&g, &m), Err(Error::UnmappedLabel(15))));
    }

    #[test]
    fn identity_is_noop() {
        let g = LabelGrid::from_vec(2, 2, vec![0, 3, NODATA, 1]).unwrap();
        let m = MergeMap::identity(0..4).unwrap();
        assert_eq!(apply_merge(&g, &m).unwrap(), g);
    }

    #[test]
    fn non_surjective_rejected() {
        let map = BTreeMap::from([(1, 0), (2, 2)]);
        assert!(MergeMap::new(map).is_err());
    }

    #[test]
    fn csv_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("merge.csv");
        std::fs::write(&p, "src_code,dst_class\n10,0\n20,0\n30,1\n0,nodata\n").unwrap();
        let m = read_merge_csv(&p).unwrap();
        assert_eq!(m.class_count(), 2);
        assert_eq!(m.get(0), Some(NODATA));
        std::fs::write(&p, "src_code,dst_class\n10,0\n10,1\n").unwrap();
        assert!(read_merge_csv(&p).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn merged_counts_are_source_sums(
                idx in proptest::collection::vec(0usize..ESA_CCI_CODES.len(), 1..200)
            ) {
                let m = MergeMap::esa_default();
                let data: Vec<u16> = idx.iter().map(|&i| ESA_CCI_CODES[i]).collect();
                let g = LabelGrid::from_vec(1, data.len(), data.clone()).unwrap();
                let out = apply_merge(&g, &m).unwrap();
                for c in (0..7u16).chain([NODATA]) {
                    let merged = out.as_slice().iter().filter(|&&l| l == c).count();
                    let sources = data.iter().filter(|&&s| m.get(s) == Some(c)).count();
                    prop_assert_eq!(merged, sources);
                }
            }
        }
    }
}
