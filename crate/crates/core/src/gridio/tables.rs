//! CSV inputs: image manifests and per-image score tables.
//!
//! All files are comma-separated UTF-8 with a header row.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geogrid::GeoPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_id: String,
    pub lat: f64,
    pub lon: f64,
}

impl ManifestEntry {
    pub fn point(&self) -> Result<GeoPoint> {
        GeoPoint::new(self.lat, self.lon)
    }
}

/// `image_id,lat,lon`. Ids are unique; coordinates are checked where they are
/// used so one bad row does not sink a whole run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageManifest {
    entries: Vec<ManifestEntry>,
}

impl ImageManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.image_id.as_str()) {
                return Err(Error::Input(format!("duplicate image_id {:?}", e.image_id)));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> ImageManifest {
        ImageManifest {
            entries: indices.iter().map(|&i| self.entries[i].clone()).collect(),
        }
    }
}

#[derive(Deserialize)]
struct ManifestRow {
    image_id: String,
    lat: f64,
    lon: f64,
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<ImageManifest> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut entries = Vec::new();
    for row in rdr.deserialize::<ManifestRow>() {
        let row = row.map_err(|e| Error::csv(path, e))?;
        entries.push(ManifestEntry {
            image_id: row.image_id,
            lat: row.lat,
            lon: row.lon,
        });
    }
    ImageManifest::new(entries)
}

pub fn write_manifest(path: impl AsRef<Path>, manifest: &ImageManifest) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    let io = |e| Error::csv(path, e);
    w.write_record(["image_id", "lat", "lon"]).map_err(io)?;
    for e in manifest.entries() {
        w.write_record([e.image_id.clone(), e.lat.to_string(), e.lon.to_string()])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Sparse per-image scores from one predictor: `image_id,id,prob`.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    by_image: HashMap<String, Vec<(usize, f64)>>,
}

impl ScoreTable {
    pub fn from_rows(rows: impl IntoIterator<Item = (String, usize, f64)>) -> Result<Self> {
        let mut by_image: HashMap<String, Vec<(usize, f64)>> = HashMap::new();
        for (image, id, p) in rows {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::Input(format!(
                    "image {image:?}, id {id}: probability {p} must be finite and >= 0"
                )));
            }
            by_image.entry(image).or_default().push((id, p));
        }
        for (image, scores) in by_image.iter_mut() {
            scores.sort_by_key(|&(id, _)| id);
            if let Some(w) = scores.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err(Error::Input(format!(
                    "image {image:?} has more than one score for id {}",
                    w[0].0
                )));
            }
            let total: f64 = scores.iter().map(|&(_, p)| p).sum();
            if total <= 0.0 {
                return Err(Error::Input(format!("image {image:?} has zero total score")));
            }
        }
        Ok(Self { by_image })
    }

    /// Scores for `image_id`, sorted by id.
    pub fn get(&self, image_id: &str) -> Option<&[(usize, f64)]> {
        self.by_image.get(image_id).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.by_image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_image.is_empty()
    }
}

#[derive(Deserialize)]
struct ScoreRow {
    image_id: String,
    id: usize,
    prob: f64,
}

pub fn read_scores(path: impl AsRef<Path>) -> Result<ScoreTable> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut rows = Vec::new();
    for row in rdr.deserialize::<ScoreRow>() {
        let r = row.map_err(|e| Error::csv(path, e))?;
        rows.push((r.image_id, r.id, r.prob));
    }
    ScoreTable::from_rows(rows).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}
