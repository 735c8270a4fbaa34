//! C interface to the tangential tensor-field solver.
//!
//! Conventions shared by every entry point:
//!
//! * Handles (`SurfemSurface*`, `SurfemStudy*`) are opaque pointers owned
//!   by the library; release them with the matching `surfem_*_free` call.
//! * Fallible calls return a [`SurfemStatus`] code, or null for
//!   constructors; the message of the most recent failure on the calling
//!   thread is available through [`surfem_last_error_message`].
//! * All arrays are plain `double` buffers whose length is stated in the
//!   function documentation.
//!
//! The matching C header is generated into `include/surfem.h` when this
//! crate is built.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use surfem::cli::{run_study, NormalMode, RunConfig, StudyResult, SurfaceKind};
use surfem::errors::ErrorReport;
use surfem::levelset::LevelSetSurface;

/// Status code returned by the fallible entry points.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfemStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// An argument or option value was rejected; the reason is available
    /// through `surfem_last_error_message`.
    InvalidArgument = 2,
    /// A numerical routine failed (projection outside its tube of
    /// uniqueness, solver divergence, undefined fit, ...).
    NumericalFailure = 3,
    /// The computation panicked internally; no result was produced.
    Panic = 4,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes stripped");
    });
}

/// Message of the most recent failure on the calling thread, as a
/// NUL-terminated UTF-8 string. Never null; empty before the first
/// failure. The pointer stays valid until the next failing `surfem_*`
/// call on the same thread.
#[no_mangle]
pub extern "C" fn surfem_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn surfem_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

enum SurfaceImpl {
    Planar(LevelSetSurface<2>),
    Spatial(LevelSetSurface<3>),
}

/// Opaque handle to a closed level-set surface: an ellipse
/// `x²/a² + y²/b² = 1` in the plane or an ellipsoid
/// `x²/a² + y²/b² + z²/c² = 1` in space.
pub struct SurfemSurface(SurfaceImpl);

fn valid_axes(axes: &[f64]) -> bool {
    axes.iter().all(|&a| a.is_finite() && a > 0.0)
}

fn surface_handle(inner: SurfaceImpl) -> *mut SurfemSurface {
    Box::into_raw(Box::new(SurfemSurface(inner)))
}

/// Create an ellipse with semi-axes `a` and `b`. Returns null (with the
/// error recorded) if a semi-axis is not a positive finite number. Release
/// the handle with [`surfem_surface_free`].
#[no_mangle]
pub extern "C" fn surfem_surface_ellipse(a: f64, b: f64) -> *mut SurfemSurface {
    if !valid_axes(&[a, b]) {
        set_last_error("semi-axes must be positive finite numbers");
        return ptr::null_mut();
    }
    surface_handle(SurfaceImpl::Planar(LevelSetSurface::ellipse(a, b)))
}

/// Create an ellipsoid with semi-axes `a`, `b` and `c`. Returns null (with
/// the error recorded) if a semi-axis is not a positive finite number.
/// Release the handle with [`surfem_surface_free`].
#[no_mangle]
pub extern "C" fn surfem_surface_ellipsoid(a: f64, b: f64, c: f64) -> *mut SurfemSurface {
    if !valid_axes(&[a, b, c]) {
        set_last_error("semi-axes must be positive finite numbers");
        return ptr::null_mut();
    }
    surface_handle(SurfaceImpl::Spatial(LevelSetSurface::ellipsoid(a, b, c)))
}

/// Create the unit sphere. Release the handle with
/// [`surfem_surface_free`].
#[no_mangle]
pub extern "C" fn surfem_surface_sphere() -> *mut SurfemSurface {
    surface_handle(SurfaceImpl::Spatial(LevelSetSurface::sphere()))
}

/// Ambient dimension of the surface: 2 for an ellipse, 3 otherwise, 0 for
/// a null handle.
///
/// # Safety
/// `surface` must be null or a live handle from a `surfem_surface_*`
/// constructor.
#[no_mangle]
pub unsafe extern "C" fn surfem_surface_dimension(surface: *const SurfemSurface) -> u32 {
    match surface.as_ref() {
        Some(SurfemSurface(SurfaceImpl::Planar(_))) => 2,
        Some(SurfemSurface(SurfaceImpl::Spatial(_))) => 3,
        None => 0,
    }
}

/// Evaluate the level-set function `φ(x) = Σ xᵢ²/aᵢ² − 1` whose zero set
/// is the surface: negative inside, positive outside.
///
/// # Safety
/// `surface` must be a live handle, `x` readable for `dimension` doubles
/// and `out` writable for one double.
#[no_mangle]
pub unsafe extern "C" fn surfem_surface_phi(
    surface: *const SurfemSurface,
    x: *const f64,
    out: *mut f64,
) -> SurfemStatus {
    let Some(surface) = surface.as_ref() else {
        set_last_error("surface handle is null");
        return SurfemStatus::NullArgument;
    };
    if x.is_null() || out.is_null() {
        set_last_error("coordinate and output pointers must not be null");
        return SurfemStatus::NullArgument;
    }
    *out = match &surface.0 {
        SurfaceImpl::Planar(s) => s.phi(&[*x, *x.add(1)]),
        SurfaceImpl::Spatial(s) => s.phi(&[*x, *x.add(1), *x.add(2)]),
    };
    SurfemStatus::Ok
}

fn report_levelset(err: surfem::levelset::LevelSetError) -> SurfemStatus {
    set_last_error(&err.to_string());
    SurfemStatus::NumericalFailure
}

/// Project `x` onto the surface. Writes the foot point (`dimension`
/// doubles) to `out_point` and, when `out_distance` is not null, the
/// signed distance (negative inside) to `out_distance`. Fails for points
/// too deep inside the surface, beyond the focal set where the closest
/// point is no longer unique.
///
/// # Safety
/// `surface` must be a live handle, `x` readable and `out_point` writable
/// for `dimension` doubles each, `out_distance` null or writable for one
/// double.
#[no_mangle]
pub unsafe extern "C" fn surfem_surface_closest_point(
    surface: *const SurfemSurface,
    x: *const f64,
    out_point: *mut f64,
    out_distance: *mut f64,
) -> SurfemStatus {
    let Some(surface) = surface.as_ref() else {
        set_last_error("surface handle is null");
        return SurfemStatus::NullArgument;
    };
    if x.is_null() || out_point.is_null() {
        set_last_error("coordinate and output pointers must not be null");
        return SurfemStatus::NullArgument;
    }
    let rho = match &surface.0 {
        SurfaceImpl::Planar(s) => match s.closest_point(&[*x, *x.add(1)]) {
            Ok((p, rho)) => {
                ptr::copy_nonoverlapping(p.as_ptr(), out_point, 2);
                rho
            }
            Err(e) => return report_levelset(e),
        },
        SurfaceImpl::Spatial(s) => match s.closest_point(&[*x, *x.add(1), *x.add(2)]) {
            Ok((p, rho)) => {
                ptr::copy_nonoverlapping(p.as_ptr(), out_point, 3);
                rho
            }
            Err(e) => return report_levelset(e),
        },
    };
    if !out_distance.is_null() {
        *out_distance = rho;
    }
    SurfemStatus::Ok
}

/// Outward unit normal at the closest surface point to `x`, written as
/// `dimension` doubles to `out`.
///
/// # Safety
/// `surface` must be a live handle, `x` readable and `out` writable for
/// `dimension` doubles each.
#[no_mangle]
pub unsafe extern "C" fn surfem_surface_normal(
    surface: *const SurfemSurface,
    x: *const f64,
    out: *mut f64,
) -> SurfemStatus {
    let Some(surface) = surface.as_ref() else {
        set_last_error("surface handle is null");
        return SurfemStatus::NullArgument;
    };
    if x.is_null() || out.is_null() {
        set_last_error("coordinate and output pointers must not be null");
        return SurfemStatus::NullArgument;
    }
    match &surface.0 {
        SurfaceImpl::Planar(s) => match s.exact_normal(&[*x, *x.add(1)]) {
            Ok(n) => ptr::copy_nonoverlapping(n.as_ptr(), out, 2),
            Err(e) => return report_levelset(e),
        },
        SurfaceImpl::Spatial(s) => match s.exact_normal(&[*x, *x.add(1), *x.add(2)]) {
            Ok(n) => ptr::copy_nonoverlapping(n.as_ptr(), out, 3),
            Err(e) => return report_levelset(e),
        },
    }
    SurfemStatus::Ok
}

/// Release a surface handle. Null is accepted and ignored.
///
/// # Safety
/// `surface` must be null or a handle from a `surfem_surface_*`
/// constructor that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn surfem_surface_free(surface: *mut SurfemSurface) {
    if !surface.is_null() {
        drop(Box::from_raw(surface));
    }
}

/// Surface family of a convergence study. The built-in families are the
/// ellipse with semi-axes 3/4 and 5/4, the ellipsoid with semi-axes 3/4,
/// 5/4 and 1, and the unit sphere.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfemSurfaceKind {
    Ellipse = 0,
    Ellipsoid = 1,
    Sphere = 2,
}

/// How the penalty direction is built from the geometry.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfemNormalMode {
    /// Discrete normal of the curved geometry (requires the penalty order
    /// to equal the geometry order).
    Discrete = 0,
    /// Normalized Lagrange interpolant of the exact normal at the penalty
    /// order.
    Interpolated = 1,
    /// Exact normal at the closest surface point.
    Exact = 2,
}

/// Options of a convergence study of the penalized tangential equation
/// `−Δ_Γ u + u = f`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SurfemStudyOptions {
    /// Surface family to mesh.
    pub surface: SurfemSurfaceKind,
    /// Tensor rank of the solution field: 1 (vector) or 2. Rank 2 runs on
    /// the ellipse and the sphere.
    pub rank: u32,
    /// Geometry order `k_g` in 1..=4.
    pub geometry_order: u32,
    /// Solution order `k_u` in 1..=4.
    pub solution_order: u32,
    /// Penalty-normal order `k_p` in 1..=4.
    pub penalty_order: u32,
    /// Penalty exponent `α`; the penalty weight of a mesh of size `h` is
    /// `β h^(−2α)`.
    pub alpha: f64,
    /// Penalty factors `β` to sweep; must point to `beta_count` doubles.
    pub betas: *const f64,
    /// Number of penalty factors, at least 1.
    pub beta_count: usize,
    /// Coarsest refinement level (inclusive).
    pub level_lo: u32,
    /// Finest refinement level (inclusive).
    pub level_hi: u32,
    /// Penalty-direction mode.
    pub normal_mode: SurfemNormalMode,
    /// Also compute the lifted L² error weighted by the measure ratio of
    /// the lift.
    pub lifted: bool,
    /// Assembly quadrature degree; 0 selects `2 k_u + 2`.
    pub quad_degree: u32,
    /// Error quadrature degree; 0 selects `2 (k_u + k_g) + 2` capped by
    /// the highest tabulated rule.
    pub error_quad_degree: u32,
    /// Print one progress line per solve to stderr while the study runs.
    pub verbose: bool,
}

/// Opaque handle to the results of a convergence study: one row of error
/// norms per (level, penalty factor) pair.
pub struct SurfemStudy(StudyResult);

/// Error norms of one (level, penalty factor) pair of a study.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SurfemStudyRow {
    /// Refinement level of the row.
    pub level: u32,
    /// Mesh size (largest cell diameter) at this level.
    pub h: f64,
    /// Number of scalar unknowns at this level.
    pub dofs: usize,
    /// Penalty factor `β` of the row.
    pub beta: f64,
    /// Componentwise L² error `‖u_h − u∘π‖`.
    pub l2_full: f64,
    /// Tangential L² error `‖𝐏_h (u_h − u∘π)‖`.
    pub l2_tan: f64,
    /// L² error in the penalty direction.
    pub l2_norm_pen: f64,
    /// Tangential energy error (gradient plus mass term).
    pub energy_ah: f64,
    /// Full energy error including the penalty term.
    pub energy_full: f64,
    /// Lifted L² error; NaN unless the study requested lifted errors.
    pub lifted_l2: f64,
}

/// Error norm selector for fitted convergence orders.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfemErrorNorm {
    L2Full = 0,
    L2Tan = 1,
    L2NormPen = 2,
    EnergyAh = 3,
    EnergyFull = 4,
    LiftedL2 = 5,
}

/// Run a convergence study. Returns a result handle to release with
/// [`surfem_study_free`], or null (with the error recorded) if the
/// options are rejected or the computation fails.
///
/// # Safety
/// `options` must point to a valid options struct whose `betas` field is
/// readable for `beta_count` doubles.
#[no_mangle]
pub unsafe extern "C" fn surfem_study_run(
    options: *const SurfemStudyOptions,
) -> *mut SurfemStudy {
    let Some(options) = options.as_ref() else {
        set_last_error("options pointer is null");
        return ptr::null_mut();
    };
    if options.betas.is_null() || options.beta_count == 0 {
        set_last_error("betas must point to at least one penalty factor");
        return ptr::null_mut();
    }
    let betas = slice::from_raw_parts(options.betas, options.beta_count).to_vec();
    let surface = match options.surface {
        SurfemSurfaceKind::Ellipse => SurfaceKind::Ellipse,
        SurfemSurfaceKind::Ellipsoid => SurfaceKind::Ellipsoid,
        SurfemSurfaceKind::Sphere => SurfaceKind::Sphere,
    };
    let (k_g, k_u) = (
        options.geometry_order as usize,
        options.solution_order as usize,
    );
    let degree_cap = match surface {
        SurfaceKind::Ellipse => 20,
        _ => 14,
    };
    let cfg = RunConfig {
        surface,
        rank: options.rank as usize,
        k_g,
        k_u,
        k_p: options.penalty_order as usize,
        alpha: options.alpha,
        betas,
        level_lo: options.level_lo as usize,
        level_hi: options.level_hi as usize,
        normal_mode: match options.normal_mode {
            SurfemNormalMode::Discrete => NormalMode::Discrete,
            SurfemNormalMode::Interpolated => NormalMode::Interp,
            SurfemNormalMode::Exact => NormalMode::Exact,
        },
        lifted: options.lifted,
        quad_degree: match options.quad_degree {
            0 => 2 * k_u + 2,
            d => d as usize,
        },
        error_quad_degree: match options.error_quad_degree {
            0 => (2 * (k_u + k_g) + 2).min(degree_cap),
            d => d as usize,
        },
        progress: options.verbose,
    };
    match catch_unwind(AssertUnwindSafe(|| run_study(&cfg))) {
        Ok(Ok(result)) => Box::into_raw(Box::new(SurfemStudy(result))),
        Ok(Err(e)) => {
            set_last_error(&e.to_string());
            ptr::null_mut()
        }
        Err(_) => {
            set_last_error("internal panic while running the study");
            ptr::null_mut()
        }
    }
}

/// Number of refinement levels in the study, 0 for a null handle.
///
/// # Safety
/// `study` must be null or a live handle from [`surfem_study_run`].
#[no_mangle]
pub unsafe extern "C" fn surfem_study_level_count(study: *const SurfemStudy) -> usize {
    study.as_ref().map_or(0, |s| s.0.levels.len())
}

/// Number of penalty factors in the study's sweep, 0 for a null handle.
///
/// # Safety
/// `study` must be null or a live handle from [`surfem_study_run`].
#[no_mangle]
pub unsafe extern "C" fn surfem_study_beta_count(study: *const SurfemStudy) -> usize {
    study.as_ref().map_or(0, |s| s.0.betas.len())
}

/// Copy the error norms of one (level, penalty factor) pair into `out`.
/// `level_index` counts levels from the coarsest, `beta_index` follows
/// the order the factors were passed in.
///
/// # Safety
/// `study` must be a live handle from [`surfem_study_run`] and `out`
/// writable for one row struct.
#[no_mangle]
pub unsafe extern "C" fn surfem_study_row(
    study: *const SurfemStudy,
    level_index: usize,
    beta_index: usize,
    out: *mut SurfemStudyRow,
) -> SurfemStatus {
    let Some(SurfemStudy(result)) = study.as_ref() else {
        set_last_error("study handle is null");
        return SurfemStatus::NullArgument;
    };
    if out.is_null() {
        set_last_error("output pointer is null");
        return SurfemStatus::NullArgument;
    }
    if level_index >= result.levels.len() || beta_index >= result.betas.len() {
        set_last_error(&format!(
            "row ({level_index}, {beta_index}) out of bounds for a {} x {} study",
            result.levels.len(),
            result.betas.len()
        ));
        return SurfemStatus::InvalidArgument;
    }
    let report = &result.reports[level_index][beta_index];
    *out = SurfemStudyRow {
        level: result.levels[level_index] as u32,
        h: result.hs[level_index],
        dofs: result.dofs[level_index],
        beta: result.betas[beta_index],
        l2_full: report.l2_full,
        l2_tan: report.l2_tan,
        l2_norm_pen: report.l2_norm_pen,
        energy_ah: report.energy_ah,
        energy_full: report.energy_full,
        lifted_l2: report.lifted_l2.unwrap_or(f64::NAN),
    };
    SurfemStatus::Ok
}

fn norm_getter(norm: SurfemErrorNorm) -> fn(&ErrorReport) -> f64 {
    match norm {
        SurfemErrorNorm::L2Full => |r| r.l2_full,
        SurfemErrorNorm::L2Tan => |r| r.l2_tan,
        SurfemErrorNorm::L2NormPen => |r| r.l2_norm_pen,
        SurfemErrorNorm::EnergyAh => |r| r.energy_ah,
        SurfemErrorNorm::EnergyFull => |r| r.energy_full,
        SurfemErrorNorm::LiftedL2 => |r| r.lifted_l2.unwrap_or(f64::NAN),
    }
}

/// Fitted convergence order of one error norm, written to `out_order`.
/// Each penalty factor's error curve is fitted by weighted least squares
/// over the levels and the smallest order over the sweep is reported.
/// Fails if the study has fewer than two levels, the norm vanishes, or
/// lifted errors were not requested for `SURFEM_ERROR_NORM_LIFTED_L2`.
///
/// # Safety
/// `study` must be a live handle from [`surfem_study_run`] and
/// `out_order` writable for one double.
#[no_mangle]
pub unsafe extern "C" fn surfem_study_eoc(
    study: *const SurfemStudy,
    norm: SurfemErrorNorm,
    out_order: *mut f64,
) -> SurfemStatus {
    let Some(SurfemStudy(result)) = study.as_ref() else {
        set_last_error("study handle is null");
        return SurfemStatus::NullArgument;
    };
    if out_order.is_null() {
        set_last_error("output pointer is null");
        return SurfemStatus::NullArgument;
    }
    if norm == SurfemErrorNorm::LiftedL2
        && result.reports.iter().flatten().any(|r| r.lifted_l2.is_none())
    {
        set_last_error("the study did not request lifted errors");
        return SurfemStatus::InvalidArgument;
    }
    match result.eoc(norm_getter(norm)) {
        Some(fit) if fit.order.is_finite() => {
            *out_order = fit.order;
            SurfemStatus::Ok
        }
        _ => {
            set_last_error(
                "convergence order undefined: needs at least two levels of positive finite errors",
            );
            SurfemStatus::NumericalFailure
        }
    }
}

/// Release a study handle. Null is accepted and ignored.
///
/// # Safety
/// `study` must be null or a handle from [`surfem_study_run`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn surfem_study_free(study: *mut SurfemStudy) {
    if !study.is_null() {
        drop(Box::from_raw(study));
    }
}
