//! Rasterization of geolocation cells (S2 or any other partition exported
//! as lat/lon rectangles or polygons) onto the common grid.
//!
//! A pixel belongs to a cell when its center does. Rectangles own their
//! north and west edges, matching the south/east pixel rule. Polygons use
//! the even-odd rule with straight edges in lon/lat space.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::ClassMaskSet;
use crate::error::{Error, Result};
use crate::geogrid::{GlobalGrid, PixelAreaMap};
use crate::gridio::{LabelGrid, NODATA};

#[derive(Debug, Clone, PartialEq)]
pub enum CellShape {
    /// Latitude range `(lat_min, lat_max]`, longitude range
    /// `[lon_min, lon_max)`; `lon_min > lon_max` wraps across 180°.
    Rect {
        lat_min: f64,
        lat_max: f64,
        lon_min: f64,
        lon_max: f64,
    },
    /// Ring of `(lon, lat)` vertices, implicitly closed.
    Polygon(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: u16,
    pub shape: CellShape,
}

impl Cell {
    fn validate(&self) -> Result<()> {
        if self.id == NODATA {
            return Err(Error::Input(format!("cell id {} is reserved", NODATA)));
        }
        match &self.shape {
            CellShape::Rect {
                lat_min,
                lat_max,
                lon_min,
                lon_max,
            } => {
                let lat_ok = (-90.0..=90.0).contains(lat_min)
                    && (-90.0..=90.0).contains(lat_max)
                    && lat_min < lat_max;
                let lon_ok = (-180.0..=180.0).contains(lon_min)
                    && (-180.0..=180.0).contains(lon_max)
                    && lon_min != lon_max;
                if !(lat_ok && lon_ok) {
                    return Err(Error::Input(format!(
                        "cell {}: bad rectangle lat ({lat_min}, {lat_max}] lon [{lon_min}, {lon_max})",
                        self.id
                    )));
                }
            }
            CellShape::Polygon(ring) => {
                if ring.len() < 3 {
                    return Err(Error::Input(format!(
                        "cell {}: polygon needs at least 3 vertices, got {}",
                        self.id,
                        ring.len()
                    )));
                }
                if ring.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
                    return Err(Error::Input(format!(
                        "cell {}: non-finite vertex",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Half-open index range of pixels whose center coordinate lies in the
/// given predicate, searched around an estimate.
fn scan_range(
    n: usize,
    lo_guess: usize,
    hi_guess: usize,
    center: impl Fn(usize) -> f64,
    inside: impl Fn(f64) -> bool,
) -> impl Iterator<Item = usize> {
    let lo = lo_guess.saturating_sub(1);
    let hi = (hi_guess + 2).min(n);
    (lo..hi).filter(move |&k| inside(center(k)))
}

/// Even-odd crossings of the horizontal line `y` with the ring, sorted.
fn crossings(ring: &[(f64, f64)], y: f64, out: &mut Vec<f64>) {
    out.clear();
    let n = ring.len();
    for k in 0..n {
        let (x1, y1) = ring[k];
        let (x2, y2) = ring[(k + 1) % n];
        if (y1 > y) != (y2 > y) {
            out.push((x2 - x1) * (y - y1) / (y2 - y1) + x1);
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite crossings"));
}

fn claim(labels: &mut LabelGrid, row: usize, col: usize, id: u16) -> Result<()> {
    let current = labels.get(row, col);
    if current != NODATA {
        return Err(Error::Conflict {
            row,
            col,
            first: current,
            second: id,
        });
    }
    labels.set(row, col, id);
    Ok(())
}

pub fn rasterize_cells(cells: &[Cell], areas: &PixelAreaMap) -> Result<ClassMaskSet> {
    let grid = *areas.grid();
    let mut labels = LabelGrid::filled(grid.height(), grid.width(), NODATA);
    let mut xs = Vec::new();
    for cell in cells {
        cell.validate()?;
        match &cell.shape {
            &CellShape::Rect {
                lat_min,
                lat_max,
                lon_min,
                lon_max,
            } => rasterize_rect(&grid, &mut labels, cell.id, lat_min, lat_max, lon_min, lon_max)?,
            CellShape::Polygon(ring) => {
                rasterize_polygon(&grid, &mut labels, cell.id, ring, &mut xs)?
            }
        }
    }
    let class_count = cells.iter().map(|c| c.id as usize + 1).max().unwrap_or(0);
    ClassMaskSet::new(Arc::new(labels), areas, Some(class_count))
}

fn rasterize_rect(
    grid: &GlobalGrid,
    labels: &mut LabelGrid,
    id: u16,
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
) -> Result<()> {
    let rows: Vec<usize> = scan_range(
        grid.height(),
        grid.lat_to_row(lat_max),
        grid.lat_to_row(lat_min),
        |r| grid.center_lat(r),
        |lat| lat > lat_min && lat <= lat_max,
    )
    .collect();
    let cols: Vec<usize> = if lon_min < lon_max {
        scan_range(
            grid.width(),
            grid.lon_to_col(lon_min),
            if lon_max >= 180.0 { grid.width() - 1 } else { grid.lon_to_col(lon_max) },
            |c| grid.center_lon(c),
            |lon| lon >= lon_min && lon < lon_max,
        )
        .collect()
    } else {
        (0..grid.width())
            .filter(|&c| {
                let lon = grid.center_lon(c);
                lon >= lon_min || lon < lon_max
            })
            .collect()
    };
    for &r in &rows {
        for &c in &cols {
            claim(labels, r, c, id)?;
        }
    }
    Ok(())
}

fn rasterize_polygon(
    grid: &GlobalGrid,
    labels: &mut LabelGrid,
    id: u16,
    ring: &[(f64, f64)],
    xs: &mut Vec<f64>,
) -> Result<()> {
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(_, y) in ring {
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let rows: Vec<usize> = scan_range(
        grid.height(),
        grid.lat_to_row(y_hi.min(90.0)),
        grid.lat_to_row(y_lo.max(-90.0)),
        |r| grid.center_lat(r),
        |_| true,
    )
    .collect();
    for r in rows {
        crossings(ring, grid.center_lat(r), xs);
        for span in xs.chunks_exact(2) {
            let (x0, x1) = (span[0], span[1]);
            if x1 < -180.0 || x0 >= 180.0 {
                continue;
            }
            let c_lo = grid.lon_to_col(x0.max(-180.0));
            let c_hi = if x1 >= 180.0 { grid.width() - 1 } else { grid.lon_to_col(x1) };
            let cols: Vec<usize> = scan_range(
                grid.width(),
                c_lo,
                c_hi,
                |c| grid.center_lon(c),
                |lon| lon >= x0 && lon < x1,
            )
            .collect();
            for c in cols {
                claim(labels, r, c, id)?;
            }
        }
    }
    Ok(())
}

#[derive(Deserialize)]
struct RectRow {
    cell_id: u16,
    lat_min: f64,
    lat_max: f64,
    lon_min: f64,
    lon_max: f64,
}

/// `cell_id,lat_min,lat_max,lon_min,lon_max`
pub fn read_cells_csv(path: impl AsRef<Path>) -> Result<Vec<Cell>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut cells = Vec::new();
    for row in rdr.deserialize::<RectRow>() {
        let r = row.map_err(|e| Error::csv(path, e))?;
        cells.push(Cell {
            id: r.cell_id,
            shape: CellShape::Rect {
                lat_min: r.lat_min,
                lat_max: r.lat_max,
                lon_min: r.lon_min,
                lon_max: r.lon_max,
            },
        });
    }
    Ok(cells)
}

/// One polygon per line: `cell_id;lon lat,lon lat,...`. Blank lines and
/// lines starting with `#` are skipped.
pub fn read_polygons(path: impl AsRef<Path>) -> Result<Vec<Cell>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, msg: &str| {
        Error::Input(format!("{}:{}: {msg}", path.display(), line + 1))
    };
    let mut cells = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, coords) = line
            .split_once(';')
            .ok_or_else(|| bad(k, "expected `cell_id;lon lat,...`"))?;
        let id: u16 = id.trim().parse().map_err(|_| bad(k, "bad cell_id"))?;
        let mut ring = Vec::new();
        for pair in coords.split(',') {
            let mut it = pair.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(lon)), Some(Ok(lat)), None) => ring.push((lon, lat)),
                _ => return Err(bad(k, &format!("bad vertex {pair:?}"))),
            }
        }
        cells.push(Cell {
            id,
            shape: CellShape::Polygon(ring),
        });
    }
    Ok(cells)
}
