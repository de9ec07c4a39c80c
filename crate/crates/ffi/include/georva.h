#ifndef GEORVA_H
#define GEORVA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result of every fallible call.
 */
typedef enum GeorvaStatus {
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
} GeorvaStatus;

/*
 Pixel areas of an equirectangular grid.
 */
typedef struct GeorvaAreas GeorvaAreas;

/*
 Class labels on a grid.
 */
typedef struct GeorvaLabels GeorvaLabels;

/*
 A probability map as a product of factors.
 */
typedef struct GeorvaMap GeorvaMap;

/*
 Per-class masks and their areas.
 */
typedef struct GeorvaMasks GeorvaMasks;

/*
 Outcome of evaluating one image.
 */
typedef struct GeorvaEvalResult {
  double min_area_km2;
  double p_star;
  /*
   0 when the map is zero everywhere; the top-1 fields are then NaN.
   */
  int32_t has_top1;
  double top1_lat;
  double top1_lon;
  double gcd_km;
} GeorvaEvalResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *georva_last_error(void);

/*
 Area (km²) of a spherical cap of geodesic radius `radius_km`.

 # Safety
 `out_km2` must be a valid pointer to a double.
 */
enum GeorvaStatus georva_spherical_cap_area(double radius_km,
                                            double earth_radius_km,
                                            double *out_km2);

/*
 Great-circle distance (km) between two points given in degrees.

 # Safety
 `out_km` must be a valid pointer to a double.
 */
enum GeorvaStatus georva_great_circle_distance(double lat1,
                                               double lon1,
                                               double lat2,
                                               double lon2,
                                               double earth_radius_km,
                                               double *out_km);

/*
 Pixel areas for a `height x width` grid; `earth_radius_km <= 0` selects
 the mean Earth radius.

 # Safety
 `out_areas` must be a valid pointer; free the handle with
 `georva_areas_free`.
 */
enum GeorvaStatus georva_areas_new(size_t height,
                                   size_t width,
                                   double earth_radius_km,
                                   struct GeorvaAreas **out_areas);

/*
 # Safety
 `areas` must come from `georva_areas_new` and not be used afterwards.
 */
void georva_areas_free(struct GeorvaAreas *areas);

/*
 Total grid area, km².

 # Safety
 Pointers must be valid.
 */
enum GeorvaStatus georva_areas_total(const struct GeorvaAreas *areas, double *out_km2);

/*
 Area of one pixel in `row`, km².

 # Safety
 Pointers must be valid.
 */
enum GeorvaStatus georva_areas_row(const struct GeorvaAreas *areas, size_t row, double *out_km2);

/*
 Copies `height * width` row-major labels; 65535 is nodata.

 # Safety
 `data` must point to `height * width` values.
 */
enum GeorvaStatus georva_labels_new(const uint16_t *data,
                                    size_t height,
                                    size_t width,
                                    struct GeorvaLabels **out_labels);

/*
 Reads a u8 or u16 GRV1 raster as labels.

 # Safety
 `path` must be a NUL-terminated UTF-8 string.
 */
enum GeorvaStatus georva_labels_read(const char *path, struct GeorvaLabels **out_labels);

/*
 # Safety
 `labels` must come from this library and not be used afterwards.
 */
void georva_labels_free(struct GeorvaLabels *labels);

/*
 Dimensions of a label grid.

 # Safety
 Pointers must be valid.
 */
enum GeorvaStatus georva_labels_shape(const struct GeorvaLabels *labels,
                                      size_t *out_height,
                                      size_t *out_width);

/*
 Measures every class of `labels`. `class_count` 0 means one past the
 largest label.

 # Safety
 Pointers must be valid; free the handle with `georva_masks_free`.
 */
enum GeorvaStatus georva_masks_new(const struct GeorvaLabels *labels,
                                   const struct GeorvaAreas *areas,
                                   size_t class_count,
                                   struct GeorvaMasks **out_masks);

/*
 # Safety
 `masks` must come from this library and not be used afterwards.
 */
void georva_masks_free(struct GeorvaMasks *masks);

/*
 # Safety
 Pointers must be valid.
 */
enum GeorvaStatus georva_masks_class_count(const struct GeorvaMasks *masks, size_t *out_count);

/*
 Area of class `class`, km².

 # Safety
 Pointers must be valid.
 */
enum GeorvaStatus georva_masks_class_area(const struct GeorvaMasks *masks,
                                          size_t class_,
                                          double *out_km2);

/*
 Empty product (1 everywhere) on the grid of `areas`.

 # Safety
 Pointers must be valid; free the handle with `georva_map_free`.
 */
enum GeorvaStatus georva_map_new(const struct GeorvaAreas *areas, struct GeorvaMap **out_map);

/*
 # Safety
 `map` must come from this library and not be used afterwards.
 */
void georva_map_free(struct GeorvaMap *map);

/*
 Multiplies in one predictor: `probs[j] / area(class j)` on mask `j`.

 # Safety
 `probs` must point to `n` doubles.
 */
enum GeorvaStatus georva_map_push_scores(struct GeorvaMap *map,
                                         const struct GeorvaMasks *masks,
                                         const double *probs,
                                         size_t n);

/*
 Multiplies in the indicator of the listed classes.

 # Safety
 `classes` must point to `n` values.
 */
enum GeorvaStatus georva_map_push_indicator(struct GeorvaMap *map,
                                            const struct GeorvaMasks *masks,
                                            const size_t *classes,
                                            size_t n);

/*
 Multiplies by a constant.

 # Safety
 `map` must be valid.
 */
enum GeorvaStatus georva_map_push_constant(struct GeorvaMap *map, double value);

/*
 Value of one pixel.

 # Safety
 Pointers must be valid.
 */
enum GeorvaStatus georva_map_value(const struct GeorvaMap *map,
                                   size_t row,
                                   size_t col,
                                   double *out_value);

/*
 Writes the full map, row-major, into `buf` (`len` must be at least
 height * width).

 # Safety
 `buf` must point to `len` writable doubles.
 */
enum GeorvaStatus georva_map_densify(const struct GeorvaMap *map, double *buf, size_t len);

/*
 Smallest area containing the ground truth, and the top-1 prediction.

 # Safety
 Pointers must be valid.
 */
enum GeorvaStatus georva_evaluate(const struct GeorvaMap *map,
                                  const struct GeorvaAreas *areas,
                                  double lat,
                                  double lon,
                                  struct GeorvaEvalResult *out_result);

/*
 Balanced subset: row indices into `buckets` (a negative bucket means
 none), the same count from each of `0..n_buckets`. `out_len` receives
 the number of indices; if `cap` is too small it receives the required
 size and `GEORVA_ERR_BUFFER_TOO_SMALL` is returned.

 # Safety
 `buckets` must point to `n` values and `out_indices` to `cap` slots.
 */
enum GeorvaStatus georva_rebalance(const int32_t *buckets,
                                   size_t n,
                                   size_t n_buckets,
                                   uint64_t seed,
                                   size_t *out_indices,
                                   size_t cap,
                                   size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEORVA_H */
