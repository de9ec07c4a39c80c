//! The common equirectangular grid over the globe and the spherical geometry
//! used to measure it.
//!
//! Rows run north to south (row 0 touches +90°), columns run west to east
//! (column 0 touches −180°). Pixel spans are uniform in degrees, so pixel
//! areas depend on the row only and are stored once per row.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Mean Earth radius (IUGG), km.
pub const MEAN_EARTH_RADIUS_KM: f64 = 6371.0088;

/// Grid used throughout the evaluation: 1/30° pixels.
pub const DEFAULT_HEIGHT: usize = 5400;
pub const DEFAULT_WIDTH: usize = 10800;

/// A geographic location in degrees, longitude normalized into [−180, 180).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Domain(format!("latitude {lat} outside [-90, 90]")));
        }
        if !lon.is_finite() {
            return Err(Error::Domain(format!("longitude {lon} is not finite")));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

fn normalize_lon(lon: f64) -> f64 {
    if (-180.0..180.0).contains(&lon) {
        return lon;
    }
    let mut wrapped = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if wrapped >= 180.0 {
        wrapped -= 360.0;
    }
    wrapped
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalGrid {
    height: usize,
    width: usize,
    earth_radius: f64,
}

impl GlobalGrid {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        Self::with_radius(height, width, MEAN_EARTH_RADIUS_KM)
    }

    pub fn with_radius(height: usize, width: usize, earth_radius: f64) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "grid must be at least 1x1, got {height}x{width}"
            )));
        }
        if !(earth_radius.is_finite() && earth_radius > 0.0) {
            return Err(Error::Domain(format!(
                "earth radius must be positive, got {earth_radius}"
            )));
        }
        Ok(Self {
            height,
            width,
            earth_radius,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn earth_radius(&self) -> f64 {
        self.earth_radius
    }

    /// Pixel height in degrees of latitude.
    pub fn lat_step(&self) -> f64 {
        180.0 / self.height as f64
    }

    /// Pixel width in degrees of longitude.
    pub fn lon_step(&self) -> f64 {
        360.0 / self.width as f64
    }

    /// Analytic surface of the sphere, 4πR².
    pub fn sphere_area(&self) -> f64 {
        4.0 * PI * self.earth_radius * self.earth_radius
    }

    pub fn same_shape(&self, height: usize, width: usize) -> bool {
        self.height == height && self.width == width
    }

    pub fn center_lat(&self, row: usize) -> f64 {
        // (h/2 - i - 1/2) is exact, so rows mirrored about the equator get
        // exactly negated latitudes.
        (self.height as f64 / 2.0 - row as f64 - 0.5) * self.lat_step()
    }

    pub fn center_lon(&self, col: usize) -> f64 {
        -180.0 + (col as f64 + 0.5) * self.lon_step()
    }

    pub fn index_to_center(&self, row: usize, col: usize) -> Result<GeoPoint> {
        self.check_index(row, col)?;
        GeoPoint::new(self.center_lat(row), self.center_lon(col))
    }

    /// Pixel containing `p`. Points on a shared edge go to the south/east
    /// pixel; −90° lands in the last row.
    pub fn latlon_to_index(&self, p: GeoPoint) -> (usize, usize) {
        (self.lat_to_row(p.lat()), self.lon_to_col(p.lon()))
    }

    pub(crate) fn lat_to_row(&self, lat: f64) -> usize {
        let r = ((90.0 - lat) * self.height as f64 / 180.0).floor();
        if r <= 0.0 {
            0
        } else {
            (r as usize).min(self.height - 1)
        }
    }

    pub(crate) fn lon_to_col(&self, lon: f64) -> usize {
        let c = ((lon + 180.0) * self.width as f64 / 360.0).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize) % self.width
        }
    }

    pub fn check_index(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.height {
            return Err(Error::Index {
                index: row,
                len: self.height,
            });
        }
        if col >= self.width {
            return Err(Error::Index {
                index: col,
                len: self.width,
            });
        }
        Ok(())
    }

    /// Area of one pixel in `row`, km².
    pub fn pixel_area(&self, row: usize) -> Result<f64> {
        if row >= self.height {
            return Err(Error::Index {
                index: row,
                len: self.height,
            });
        }
        Ok(self.row_pixel_area(row))
    }

    // R²·Δλ·(sin φ_north − sin φ_south), written as R²·Δλ·2·cos φ_mid·sin(Δφ/2).
    fn row_pixel_area(&self, row: usize) -> f64 {
        let r2 = self.earth_radius * self.earth_radius;
        let dlon = self.lon_step().to_radians();
        let half_dlat = (self.lat_step() / 2.0).to_radians();
        let mid = self.center_lat(row).to_radians();
        r2 * dlon * 2.0 * mid.cos() * half_dlat.sin()
    }
}

/// Per-row pixel areas of a [`GlobalGrid`].
#[derive(Debug, Clone)]
pub struct PixelAreaMap {
    grid: GlobalGrid,
    rows: Vec<f64>,
}

impl PixelAreaMap {
    pub fn new(grid: GlobalGrid) -> Self {
        let rows = (0..grid.height()).map(|r| grid.row_pixel_area(r)).collect();
        Self { grid, rows }
    }

    pub fn grid(&self) -> &GlobalGrid {
        &self.grid
    }

    pub fn row_area(&self, row: usize) -> f64 {
        self.rows[row]
    }

    pub fn row_areas(&self) -> &[f64] {
        &self.rows
    }

    /// Area of a pixel set described by its per-row pixel counts.
    ///
    /// Every area in the crate (class areas, accumulated evaluation areas,
    /// the grid total) goes through this one summation so that equal pixel
    /// sets always measure to bit-identical values.
    pub fn measure_row_counts(&self, counts: &[u64]) -> f64 {
        debug_assert_eq!(counts.len(), self.rows.len());
        counts
            .iter()
            .zip(&self.rows)
            .fold(0.0, |acc, (&n, &a)| acc + n as f64 * a)
    }

    /// Measured area of the whole grid; equals 4πR² up to rounding.
    pub fn total(&self) -> f64 {
        let w = self.grid.width() as u64;
        self.rows.iter().fold(0.0, |acc, &a| acc + w as f64 * a)
    }
}

/// Haversine distance in km.
pub fn great_circle_distance(a: GeoPoint, b: GeoPoint, radius: f64) -> f64 {
    let (lat1, lat2) = (a.lat().to_radians(), b.lat().to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon() - a.lon()).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * radius * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Area of a spherical cap whose geodesic radius is `radius_km`:
/// 2πR²(1 − cos(r/R)).
pub fn spherical_cap_area(radius_km: f64, earth_radius: f64) -> Result<f64> {
    let max = PI * earth_radius;
    if !radius_km.is_finite() || radius_km < 0.0 || radius_km > max {
        return Err(Error::Domain(format!(
            "cap radius {radius_km} km outside [0, {max}]"
        )));
    }
    // 1 − cos x = 2 sin²(x/2) keeps small caps accurate.
    let half = radius_km / earth_radius / 2.0;
    Ok(4.0 * PI * earth_radius * earth_radius * half.sin().powi(2))
}
