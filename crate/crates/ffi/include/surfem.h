#ifndef SURFEM_H
#define SURFEM_H

/* Generated by cbindgen from the surfem-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by the fallible entry points.
 */
typedef enum SurfemStatus {
  /**
   * The call succeeded.
   */
  SURFEM_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SURFEM_STATUS_NULL_ARGUMENT = 1,
  /**
   * An argument or option value was rejected; the reason is available
   * through `surfem_last_error_message`.
   */
  SURFEM_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A numerical routine failed (projection outside its tube of
   * uniqueness, solver divergence, undefined fit, ...).
   */
  SURFEM_STATUS_NUMERICAL_FAILURE = 3,
  /**
   * The computation panicked internally; no result was produced.
   */
  SURFEM_STATUS_PANIC = 4,
} SurfemStatus;

/**
 * Surface family of a convergence study. The built-in families are the
 * ellipse with semi-axes 3/4 and 5/4, the ellipsoid with semi-axes 3/4,
 * 5/4 and 1, and the unit sphere.
 */
typedef enum SurfemSurfaceKind {
  SURFEM_SURFACE_KIND_ELLIPSE = 0,
  SURFEM_SURFACE_KIND_ELLIPSOID = 1,
  SURFEM_SURFACE_KIND_SPHERE = 2,
} SurfemSurfaceKind;

/**
 * How the penalty direction is built from the geometry.
 */
typedef enum SurfemNormalMode {
  /**
   * Discrete normal of the curved geometry (requires the penalty order
   * to equal the geometry order).
   */
  SURFEM_NORMAL_MODE_DISCRETE = 0,
  /**
   * Normalized Lagrange interpolant of the exact normal at the penalty
   * order.
   */
  SURFEM_NORMAL_MODE_INTERPOLATED = 1,
  /**
   * Exact normal at the closest surface point.
   */
  SURFEM_NORMAL_MODE_EXACT = 2,
} SurfemNormalMode;

/**
 * Error norm selector for fitted convergence orders.
 */
typedef enum SurfemErrorNorm {
  SURFEM_ERROR_NORM_L2_FULL = 0,
  SURFEM_ERROR_NORM_L2_TAN = 1,
  SURFEM_ERROR_NORM_L2_NORM_PEN = 2,
  SURFEM_ERROR_NORM_ENERGY_AH = 3,
  SURFEM_ERROR_NORM_ENERGY_FULL = 4,
  SURFEM_ERROR_NORM_LIFTED_L2 = 5,
} SurfemErrorNorm;

/**
 * Opaque handle to the results of a convergence study: one row of error
 * norms per (level, penalty factor) pair.
 */
typedef struct SurfemStudy SurfemStudy;

/**
 * Opaque handle to a closed level-set surface: an ellipse
 * `x²/a² + y²/b² = 1` in the plane or an ellipsoid
 * `x²/a² + y²/b² + z²/c² = 1` in space.
 */
typedef struct SurfemSurface SurfemSurface;

/**
 * Options of a convergence study of the penalized tangential equation
 * `−Δ_Γ u + u = f`.
 */
typedef struct SurfemStudyOptions {
  /**
   * Surface family to mesh.
   */
  enum SurfemSurfaceKind surface;
  /**
   * Tensor rank of the solution field: 1 (vector) or 2. Rank 2 runs on
   * the ellipse and the sphere.
   */
  uint32_t rank;
  /**
   * Geometry order `k_g` in 1..=4.
   */
  uint32_t geometry_order;
  /**
   * Solution order `k_u` in 1..=4.
   */
  uint32_t solution_order;
  /**
   * Penalty-normal order `k_p` in 1..=4.
   */
  uint32_t penalty_order;
  /**
   * Penalty exponent `α`; the penalty weight of a mesh of size `h` is
   * `β h^(−2α)`.
   */
  double alpha;
  /**
   * Penalty factors `β` to sweep; must point to `beta_count` doubles.
   */
  const double *betas;
  /**
   * Number of penalty factors, at least 1.
   */
  size_t beta_count;
  /**
   * Coarsest refinement level (inclusive).
   */
  uint32_t level_lo;
  /**
   * Finest refinement level (inclusive).
   */
  uint32_t level_hi;
  /**
   * Penalty-direction mode.
   */
  enum SurfemNormalMode normal_mode;
  /**
   * Also compute the lifted L² error weighted by the measure ratio of
   * the lift.
   */
  bool lifted;
  /**
   * Assembly quadrature degree; 0 selects `2 k_u + 2`.
   */
  uint32_t quad_degree;
  /**
   * Error quadrature degree; 0 selects `2 (k_u + k_g) + 2` capped by
   * the highest tabulated rule.
   */
  uint32_t error_quad_degree;
  /**
   * Print one progress line per solve to stderr while the study runs.
   */
  bool verbose;
} SurfemStudyOptions;

/**
 * Error norms of one (level, penalty factor) pair of a study.
 */
typedef struct SurfemStudyRow {
  /**
   * Refinement level of the row.
   */
  uint32_t level;
  /**
   * Mesh size (largest cell diameter) at this level.
   */
  double h;
  /**
   * Number of scalar unknowns at this level.
   */
  size_t dofs;
  /**
   * Penalty factor `β` of the row.
   */
  double beta;
  /**
   * Componentwise L² error `‖u_h − u∘π‖`.
   */
  double l2_full;
  /**
   * Tangential L² error `‖𝐏_h (u_h − u∘π)‖`.
   */
  double l2_tan;
  /**
   * L² error in the penalty direction.
   */
  double l2_norm_pen;
  /**
   * Tangential energy error (gradient plus mass term).
   */
  double energy_ah;
  /**
   * Full energy error including the penalty term.
   */
  double energy_full;
  /**
   * Lifted L² error; NaN unless the study requested lifted errors.
   */
  double lifted_l2;
} SurfemStudyRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on the calling thread, as a
 * NUL-terminated UTF-8 string. Never null; empty before the first
 * failure. The pointer stays valid until the next failing `surfem_*`
 * call on the same thread.
 */
const char *surfem_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *surfem_version(void);

/**
 * Create an ellipse with semi-axes `a` and `b`. Returns null (with the
 * error recorded) if a semi-axis is not a positive finite number. Release
 * the handle with [`surfem_surface_free`].
 */
struct SurfemSurface *surfem_surface_ellipse(double a, double b);

/**
 * Create an ellipsoid with semi-axes `a`, `b` and `c`. Returns null (with
 * the error recorded) if a semi-axis is not a positive finite number.
 * Release the handle with [`surfem_surface_free`].
 */
struct SurfemSurface *surfem_surface_ellipsoid(double a, double b, double c);

/**
 * Create the unit sphere. Release the handle with
 * [`surfem_surface_free`].
 */
struct SurfemSurface *surfem_surface_sphere(void);

/**
 * Ambient dimension of the surface: 2 for an ellipse, 3 otherwise, 0 for
 * a null handle.
 *
 * # Safety
 * `surface` must be null or a live handle from a `surfem_surface_*`
 * constructor.
 */
uint32_t surfem_surface_dimension(const struct SurfemSurface *surface);

/**
 * Evaluate the level-set function `φ(x) = Σ xᵢ²/aᵢ² − 1` whose zero set
 * is the surface: negative inside, positive outside.
 *
 * # Safety
 * `surface` must be a live handle, `x` readable for `dimension` doubles
 * and `out` writable for one double.
 */
enum SurfemStatus surfem_surface_phi(const struct SurfemSurface *surface,
                                     const double *x,
                                     double *out);

/**
 * Project `x` onto the surface. Writes the foot point (`dimension`
 * doubles) to `out_point` and, when `out_distance` is not null, the
 * signed distance (negative inside) to `out_distance`. Fails for points
 * too deep inside the surface, beyond the focal set where the closest
 * point is no longer unique.
 *
 * # Safety
 * `surface` must be a live handle, `x` readable and `out_point` writable
 * for `dimension` doubles each, `out_distance` null or writable for one
 * double.
 */
enum SurfemStatus surfem_surface_closest_point(const struct SurfemSurface *surface,
                                               const double *x,
                                               double *out_point,
                                               double *out_distance);

/**
 * Outward unit normal at the closest surface point to `x`, written as
 * `dimension` doubles to `out`.
 *
 * # Safety
 * `surface` must be a live handle, `x` readable and `out` writable for
 * `dimension` doubles each.
 */
enum SurfemStatus surfem_surface_normal(const struct SurfemSurface *surface,
                                        const double *x,
                                        double *out);

/**
 * Release a surface handle. Null is accepted and ignored.
 *
 * # Safety
 * `surface` must be null or a handle from a `surfem_surface_*`
 * constructor that has not been freed yet.
 */
void surfem_surface_free(struct SurfemSurface *surface);

/**
 * Run a convergence study. Returns a result handle to release with
 * [`surfem_study_free`], or null (with the error recorded) if the
 * options are rejected or the computation fails.
 *
 * # Safety
 * `options` must point to a valid options struct whose `betas` field is
 * readable for `beta_count` doubles.
 */
struct SurfemStudy *surfem_study_run(const struct SurfemStudyOptions *options);

/**
 * Number of refinement levels in the study, 0 for a null handle.
 *
 * # Safety
 * `study` must be null or a live handle from [`surfem_study_run`].
 */
size_t surfem_study_level_count(const struct SurfemStudy *study);

/**
 * Number of penalty factors in the study's sweep, 0 for a null handle.
 *
 * # Safety
 * `study` must be null or a live handle from [`surfem_study_run`].
 */
size_t surfem_study_beta_count(const struct SurfemStudy *study);

/**
 * Copy the error norms of one (level, penalty factor) pair into `out`.
 * `level_index` counts levels from the coarsest, `beta_index` follows
 * the order the factors were passed in.
 *
 * # Safety
 * `study` must be a live handle from [`surfem_study_run`] and `out`
 * writable for one row struct.
 */
enum SurfemStatus surfem_study_row(const struct SurfemStudy *study,
                                   size_t level_index,
                                   size_t beta_index,
                                   struct SurfemStudyRow *out);

/**
 * Fitted convergence order of one error norm, written to `out_order`.
 * Each penalty factor's error curve is fitted by weighted least squares
 * over the levels and the smallest order over the sweep is reported.
 * Fails if the study has fewer than two levels, the norm vanishes, or
 * lifted errors were not requested for `SURFEM_ERROR_NORM_LIFTED_L2`.
 *
 * # Safety
 * `study` must be a live handle from [`surfem_study_run`] and
 * `out_order` writable for one double.
 */
enum SurfemStatus surfem_study_eoc(const struct SurfemStudy *study,
                                   enum SurfemErrorNorm norm,
                                   double *out_order);

/**
 * Release a study handle. Null is accepted and ignored.
 *
 * # Safety
 * `study` must be null or a handle from [`surfem_study_run`] that has
 * not been freed yet.
 */
void surfem_study_free(struct SurfemStudy *study);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SURFEM_H */
