//! C ABI for georva.
//!
//! Objects are opaque handles created by `*_new`/`*_read` and released with
//! the matching `*_free`. Every fallible call returns a [`GeorvaStatus`];
//! on failure a message is available from [`georva_last_error`] on the same
//! thread. Panics are caught at the boundary and reported as
//! `GEORVA_ERR_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use georva::attribmask::ClassMaskSet;
use georva::ensemble::{assemble, densify, urban_prior, Factor, FactorizedMap, ScoreVector};
use georva::evalrva::{evaluate_image, rebalance_indices};
use georva::geogrid::{great_circle_distance, spherical_cap_area, GeoPoint, GlobalGrid, PixelAreaMap};
use georva::gridio::{read_raster, LabelGrid};
use georva::Error;

/// Result of every fallible call.
#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeorvaStatus {
    GEORVA_OK = 0,
    GEORVA_ERR_NULL = 1,
    GEORVA_ERR_INDEX = 2,
    GEORVA_ERR_DOMAIN = 3,
    GEORVA_ERR_FORMAT = 4,
    GEORVA_ERR_DIMENSION = 5,
    GEORVA_ERR_INPUT = 6,
    GEORVA_ERR_CONFLICT = 7,
    GEORVA_ERR_ZERO_AREA_CLASS = 8,
    GEORVA_ERR_RESOURCE = 9,
    GEORVA_ERR_EMPTY_DOMAIN = 10,
    GEORVA_ERR_UNMAPPED_LABEL = 11,
    GEORVA_ERR_NO_PREDICTION = 12,
    GEORVA_ERR_EMPTY_BUCKET = 13,
    GEORVA_ERR_JOIN = 14,
    GEORVA_ERR_IO = 15,
    GEORVA_ERR_BUFFER_TOO_SMALL = 16,
    GEORVA_ERR_PANIC = 17,
}

use GeorvaStatus::*;

impl From<&Error> for GeorvaStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Index { .. } => GEORVA_ERR_INDEX,
            Error::Domain(_) => GEORVA_ERR_DOMAIN,
            Error::Format { .. } => GEORVA_ERR_FORMAT,
            Error::Dimension(_) => GEORVA_ERR_DIMENSION,
            Error::Input(_) => GEORVA_ERR_INPUT,
            Error::Conflict { .. } => GEORVA_ERR_CONFLICT,
            Error::ZeroAreaClass { .. } => GEORVA_ERR_ZERO_AREA_CLASS,
            Error::Resource(_) => GEORVA_ERR_RESOURCE,
            Error::EmptyDomain(_) => GEORVA_ERR_EMPTY_DOMAIN,
            Error::UnmappedLabel(_) => GEORVA_ERR_UNMAPPED_LABEL,
            Error::NoPrediction => GEORVA_ERR_NO_PREDICTION,
            Error::EmptyBucket(_) => GEORVA_ERR_EMPTY_BUCKET,
            Error::Join(_) => GEORVA_ERR_JOIN,
            Error::Io { .. } | Error::Csv { .. } => GEORVA_ERR_IO,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn georva_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

enum Fail {
    Null(&'static str),
    Small(String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GeorvaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GEORVA_OK,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is NULL"));
            GEORVA_ERR_NULL
        }
        Ok(Err(Fail::Small(msg))) => {
            set_error(msg);
            GEORVA_ERR_BUFFER_TOO_SMALL
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            (&e).into()
        }
        Err(_) => {
            set_error("internal panic".into());
            GEORVA_ERR_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    p.write(value);
    Ok(())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Pixel areas of an equirectangular grid.
pub struct GeorvaAreas {
    inner: PixelAreaMap,
}

/// Class labels on a grid.
pub struct GeorvaLabels {
    inner: Arc<LabelGrid>,
}

/// Per-class masks and their areas.
pub struct GeorvaMasks {
    inner: ClassMaskSet,
}

/// A probability map as a product of factors.
pub struct GeorvaMap {
    inner: FactorizedMap,
}

/// Outcome of evaluating one image.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GeorvaEvalResult {
    pub min_area_km2: f64,
    pub p_star: f64,
    /// 0 when the map is zero everywhere; the top-1 fields are then NaN.
    pub has_top1: i32,
    pub top1_lat: f64,
    pub top1_lon: f64,
    pub gcd_km: f64,
}

// ------------------------------------------------------------ geometry

/// Area (km²) of a spherical cap of geodesic radius `radius_km`.
///
/// # Safety
/// `out_km2` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn georva_spherical_cap_area(
    radius_km: f64,
    earth_radius_km: f64,
    out_km2: *mut f64,
) -> GeorvaStatus {
    guard(|| out(out_km2, spherical_cap_area(radius_km, earth_radius_km)?, "out_km2"))
}

/// Great-circle distance (km) between two points given in degrees.
///
/// # Safety
/// `out_km` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn georva_great_circle_distance(
    lat1: f64,
    lon1: f64,
    lat2: f64,
    lon2: f64,
    earth_radius_km: f64,
    out_km: *mut f64,
) -> GeorvaStatus {
    guard(|| {
        let (a, b) = (GeoPoint::new(lat1, lon1)?, GeoPoint::new(lat2, lon2)?);
        out(out_km, great_circle_distance(a, b, earth_radius_km), "out_km")
    })
}

/// Pixel areas for a `height x width` grid; `earth_radius_km <= 0` selects
/// the mean Earth radius.
///
/// # Safety
/// `out_areas` must be a valid pointer; free the handle with
/// `georva_areas_free`.
#[no_mangle]
pub unsafe extern "C" fn georva_areas_new(
    height: usize,
    width: usize,
    earth_radius_km: f64,
    out_areas: *mut *mut GeorvaAreas,
) -> GeorvaStatus {
    guard(|| {
        let grid = if earth_radius_km > 0.0 {
            GlobalGrid::with_radius(height, width, earth_radius_km)?
        } else {
            GlobalGrid::new(height, width)?
        };
        out(out_areas, boxed(GeorvaAreas { inner: PixelAreaMap::new(grid) }), "out_areas")
    })
}

/// # Safety
/// `areas` must come from `georva_areas_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn georva_areas_free(areas: *mut GeorvaAreas) {
    free(areas)
}

/// Total grid area, km².
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn georva_areas_total(
    areas: *const GeorvaAreas,
    out_km2: *mut f64,
) -> GeorvaStatus {
    guard(|| out(out_km2, deref(areas, "areas")?.inner.total(), "out_km2"))
}

/// Area of one pixel in `row`, km².
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn georva_areas_row(
    areas: *const GeorvaAreas,
    row: usize,
    out_km2: *mut f64,
) -> GeorvaStatus {
    guard(|| {
        let a = &deref(areas, "areas")?.inner;
        out(out_km2, a.grid().pixel_area(row)?, "out_km2")
    })
}

// ------------------------------------------------------------ labels and masks

/// Copies `height * width` row-major labels; 65535 is nodata.
///
/// # Safety
/// `data` must point to `height * width` values.
#[no_mangle]
pub unsafe extern "C" fn georva_labels_new(
    data: *const u16,
    height: usize,
    width: usize,
    out_labels: *mut *mut GeorvaLabels,
) -> GeorvaStatus {
    guard(|| {
        let n = height.checked_mul(width).ok_or_else(|| {
            Error::Dimension(format!("{height}x{width} overflows"))
        })?;
        let v = slice(data, n, "data")?.to_vec();
        let grid = LabelGrid::from_vec(height, width, v)?;
        out(out_labels, boxed(GeorvaLabels { inner: Arc::new(grid) }), "out_labels")
    })
}

/// Reads a u8 or u16 GRV1 raster as labels.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn georva_labels_read(
    path: *const c_char,
    out_labels: *mut *mut GeorvaLabels,
) -> GeorvaStatus {
    guard(|| {
        if path.is_null() {
            return Err(Fail::Null("path"));
        }
        let p = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Error::Input("path is not UTF-8".into()))?;
        let grid = read_raster(p)?.into_labels()?;
        out(out_labels, boxed(GeorvaLabels { inner: Arc::new(grid) }), "out_labels")
    })
}

/// # Safety
/// `labels` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn georva_labels_free(labels: *mut GeorvaLabels) {
    free(labels)
}

/// Dimensions of a label grid.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn georva_labels_shape(
    labels: *const GeorvaLabels,
    out_height: *mut usize,
    out_width: *mut usize,
) -> GeorvaStatus {
    guard(|| {
        let l = &deref(labels, "labels")?.inner;
        out(out_height, l.height(), "out_height")?;
        out(out_width, l.width(), "out_width")
    })
}

/// Measures every class of `labels`. `class_count` 0 means one past the
/// largest label.
///
/// # Safety
/// Pointers must be valid; free the handle with `georva_masks_free`.
#[no_mangle]
pub unsafe extern "C" fn georva_masks_new(
    labels: *const GeorvaLabels,
    areas: *const GeorvaAreas,
    class_count: usize,
    out_masks: *mut *mut GeorvaMasks,
) -> GeorvaStatus {
    guard(|| {
        let l = deref(labels, "labels")?;
        let a = deref(areas, "areas")?;
        let count = (class_count > 0).then_some(class_count);
        let m = ClassMaskSet::new(Arc::clone(&l.inner), &a.inner, count)?;
        out(out_masks, boxed(GeorvaMasks { inner: m }), "out_masks")
    })
}

/// # Safety
/// `masks` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn georva_masks_free(masks: *mut GeorvaMasks) {
    free(masks)
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn georva_masks_class_count(
    masks: *const GeorvaMasks,
    out_count: *mut usize,
) -> GeorvaStatus {
    guard(|| out(out_count, deref(masks, "masks")?.inner.class_count(), "out_count"))
}

/// Area of class `class`, km².
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn georva_masks_class_area(
    masks: *const GeorvaMasks,
    class: usize,
    out_km2: *mut f64,
) -> GeorvaStatus {
    guard(|| out(out_km2, deref(masks, "masks")?.inner.mask_area(class)?, "out_km2"))
}

// ------------------------------------------------------------ maps

/// Empty product (1 everywhere) on the grid of `areas`.
///
/// # Safety
/// Pointers must be valid; free the handle with `georva_map_free`.
#[no_mangle]
pub unsafe extern "C" fn georva_map_new(
    areas: *const GeorvaAreas,
    out_map: *mut *mut GeorvaMap,
) -> GeorvaStatus {
    guard(|| {
        let g = deref(areas, "areas")?.inner.grid();
        let m = FactorizedMap::new(g.height(), g.width());
        out(out_map, boxed(GeorvaMap { inner: m }), "out_map")
    })
}

/// # Safety
/// `map` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn georva_map_free(map: *mut GeorvaMap) {
    free(map)
}

unsafe fn push(map: *mut GeorvaMap, factor: impl FnOnce() -> Result<Factor, Fail>) -> GeorvaStatus {
    guard(|| {
        let m = map.as_mut().ok_or(Fail::Null("map"))?;
        let f = factor()?;
        m.inner.push(f)?;
        Ok(())
    })
}

/// Multiplies in one predictor: `probs[j] / area(class j)` on mask `j`.
///
/// # Safety
/// `probs` must point to `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn georva_map_push_scores(
    map: *mut GeorvaMap,
    masks: *const GeorvaMasks,
    probs: *const f64,
    n: usize,
) -> GeorvaStatus {
    push(map, || {
        let m = deref(masks, "masks")?;
        let sv = ScoreVector::dense(slice(probs, n, "probs")?.to_vec())?;
        Ok(assemble(&sv, &m.inner)?)
    })
}

/// Multiplies in the indicator of the listed classes.
///
/// # Safety
/// `classes` must point to `n` values.
#[no_mangle]
pub unsafe extern "C" fn georva_map_push_indicator(
    map: *mut GeorvaMap,
    masks: *const GeorvaMasks,
    classes: *const usize,
    n: usize,
) -> GeorvaStatus {
    push(map, || {
        let m = deref(masks, "masks")?;
        Ok(urban_prior(&m.inner, slice(classes, n, "classes")?)?)
    })
}

/// Multiplies by a constant.
///
/// # Safety
/// `map` must be valid.
#[no_mangle]
pub unsafe extern "C" fn georva_map_push_constant(map: *mut GeorvaMap, value: f64) -> GeorvaStatus {
    push(map, || {
        let m = map.as_ref().ok_or(Fail::Null("map"))?;
        Ok(Factor::constant(m.inner.height(), m.inner.width(), value)?)
    })
}

/// Value of one pixel.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn georva_map_value(
    map: *const GeorvaMap,
    row: usize,
    col: usize,
    out_value: *mut f64,
) -> GeorvaStatus {
    guard(|| {
        let m = &deref(map, "map")?.inner;
        if row >= m.height() || col >= m.width() {
            return Err(Error::Index {
                index: row * m.width() + col,
                len: m.height() * m.width(),
            }
            .into());
        }
        out(out_value, m.evaluate(row, col), "out_value")
    })
}

/// Writes the full map, row-major, into `buf` (`len` must be at least
/// height * width).
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn georva_map_densify(
    map: *const GeorvaMap,
    buf: *mut f64,
    len: usize,
) -> GeorvaStatus {
    guard(|| {
        let m = &deref(map, "map")?.inner;
        let need = m.height() * m.width();
        if len < need {
            return Err(Fail::Small(format!("buffer holds {len} values, map has {need}")));
        }
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let dense = densify(m, usize::MAX)?;
        std::slice::from_raw_parts_mut(buf, need).copy_from_slice(dense.as_slice());
        Ok(())
    })
}

// ------------------------------------------------------------ evaluation

/// Smallest area containing the ground truth, and the top-1 prediction.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn georva_evaluate(
    map: *const GeorvaMap,
    areas: *const GeorvaAreas,
    lat: f64,
    lon: f64,
    out_result: *mut GeorvaEvalResult,
) -> GeorvaStatus {
    guard(|| {
        let m = &deref(map, "map")?.inner;
        let a = &deref(areas, "areas")?.inner;
        let rec = evaluate_image("", m, GeoPoint::new(lat, lon)?, a)?;
        let r = GeorvaEvalResult {
            min_area_km2: rec.min_area,
            p_star: rec.p_star,
            has_top1: rec.top1.is_some() as i32,
            top1_lat: rec.top1.map_or(f64::NAN, |p| p.lat()),
            top1_lon: rec.top1.map_or(f64::NAN, |p| p.lon()),
            gcd_km: rec.gcd_km.unwrap_or(f64::NAN),
        };
        out(out_result, r, "out_result")
    })
}

/// Balanced subset: row indices into `buckets` (a negative bucket means
/// none), the same count from each of `0..n_buckets`. `out_len` receives
/// the number of indices; if `cap` is too small it receives the required
/// size and `GEORVA_ERR_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `buckets` must point to `n` values and `out_indices` to `cap` slots.
#[no_mangle]
pub unsafe extern "C" fn georva_rebalance(
    buckets: *const i32,
    n: usize,
    n_buckets: usize,
    seed: u64,
    out_indices: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> GeorvaStatus {
    guard(|| {
        let labels: Vec<Option<u16>> = slice(buckets, n, "buckets")?
            .iter()
            .map(|&b| u16::try_from(b).ok())
            .collect();
        let picked = rebalance_indices(&labels, n_buckets, seed)?;
        out(out_len, picked.len(), "out_len")?;
        if picked.len() > cap {
            return Err(Fail::Small(format!("{} indices, room for {cap}", picked.len())));
        }
        if !picked.is_empty() {
            if out_indices.is_null() {
                return Err(Fail::Null("out_indices"));
            }
            std::slice::from_raw_parts_mut(out_indices, picked.len()).copy_from_slice(&picked);
        }
        Ok(())
    })
}
