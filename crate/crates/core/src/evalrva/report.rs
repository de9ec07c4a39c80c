use std::path::Path;

use super::{EvalRecord, RvACurve, THRESHOLD_NAMES};
use crate::error::{Error, Result};

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `image_id,min_area_km2,p_star,top1_lat,top1_lon,gcd_km,bucket`; empty
/// fields for a missing top-1 or bucket.
pub fn write_eval_csv(path: impl AsRef<Path>, records: &[EvalRecord]) -> Result<()> {
    let path = path.as_ref();
    let e = |err| Error::csv(path, err);
    let mut w = csv::Writer::from_path(path).map_err(e)?;
    w.write_record([
        "image_id",
        "min_area_km2",
        "p_star",
        "top1_lat",
        "top1_lon",
        "gcd_km",
        "bucket",
    ])
    .map_err(e)?;
    for r in records {
        w.write_record([
            r.image_id.clone(),
            r.min_area.to_string(),
            r.p_star.to_string(),
            opt(r.top1.map(|p| p.lat())),
            opt(r.top1.map(|p| p.lon())),
            opt(r.gcd_km),
            opt(r.bucket),
        ])
        .map_err(e)?;
    }
    w.flush().map_err(|err| Error::io(path, err))
}

/// `area_km2,recall`
pub fn write_curve_csv(path: impl AsRef<Path>, curve: &RvACurve) -> Result<()> {
    let path = path.as_ref();
    let e = |err| Error::csv(path, err);
    let mut w = csv::Writer::from_path(path).map_err(e)?;
    w.write_record(["area_km2", "recall"]).map_err(e)?;
    for &(a, r) in curve.points() {
        w.write_record([a.to_string(), r.to_string()]).map_err(e)?;
    }
    w.flush().map_err(|err| Error::io(path, err))
}

/// One method's row of the threshold table: recall (fractions) at the cap
/// areas and at the GCD radii, street through continent.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub method: String,
    pub images: usize,
    pub rva: Vec<f64>,
    pub gcd: Vec<f64>,
}

/// Threshold table with percentages to two decimals:
/// `method,images,rva_street_1km,...,gcd_continent_2500km`.
pub fn write_table_csv(path: impl AsRef<Path>, rows: &[TableRow]) -> Result<()> {
    let path = path.as_ref();
    let e = |err| Error::csv(path, err);
    let mut w = csv::Writer::from_path(path).map_err(e)?;
    let radii = super::GCD_THRESHOLDS_KM;
    let mut header = vec!["method".to_string(), "images".to_string()];
    for kind in ["rva", "gcd"] {
        for (name, r) in THRESHOLD_NAMES.iter().zip(radii) {
            header.push(format!("{kind}_{name}_{r}km"));
        }
    }
    w.write_record(&header).map_err(e)?;
    for row in rows {
        let mut rec = vec![row.method.clone(), row.images.to_string()];
        rec.extend(row.rva.iter().chain(&row.gcd).map(|v| format!("{:.2}", v * 100.0)));
        w.write_record(&rec).map_err(e)?;
    }
    w.flush().map_err(|err| Error::io(path, err))
}
