//! Closed hypersurfaces given as zero level sets of quadrics, together with
//! the closest-point projection and the exact curvature data it induces.
//!
//! A surface is `Γ = { x : φ(x) = 0 }` with `φ(x) = Σ (x_i/a_i)² − 1`.
//! The extended normal field is constant along normal lines, `n(x) = n(π(x))`
//! with `π` the closest-point projection; the Weingarten map is `W = −P Dn P`
//! with `P = Id − n ⊗ n`.

use crate::linalg as la;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LevelSetError {
    /// The gradient of `φ` vanishes at the query point (center of the quadric).
    #[error("level-set gradient vanishes at the query point")]
    DegeneratePoint,
    /// The query point lies too deep inside the surface for the projection to
    /// be the unique closest point.
    #[error("point outside the tubular neighborhood (signed distance {0:.3e})")]
    OutOfTube(f64),
    /// The projection iteration did not reach its tolerances.
    #[error("closest-point iteration did not converge within {0} iterations")]
    NoConvergence(usize),
    /// An on-surface quantity was requested at a point with `|φ|` too large.
    #[error("point is not on the surface (phi = {0:.3e})")]
    NotOnSurface(f64),
}

/// Ellipse (`D = 2`), ellipsoid or sphere (`D = 3`) as a level set.
#[derive(Debug, Clone)]
pub struct LevelSetSurface<const D: usize> {
    semiaxes: [f64; D],
    sphere: bool,
}

/// Projection of a point onto the surface with the exact geometric data used
/// by lifts: foot point, signed distance (negative inside), outward unit
/// normal and Weingarten map at the foot point.
#[derive(Debug, Clone)]
pub struct SurfacePointData<const D: usize> {
    pub point: [f64; D],
    pub rho: f64,
    pub normal: [f64; D],
    pub weingarten: [[f64; D]; D],
}

const PHI_TOL: f64 = 1e-12;
const ALIGN_TOL: f64 = 1e-10;
const MAX_PROJECTION_ITER: usize = 100;

impl LevelSetSurface<2> {
    pub fn ellipse(a: f64, b: f64) -> Self {
        assert!(a > 0.0 && b > 0.0, "semiaxes must be positive");
        Self {
            semiaxes: [a, b],
            sphere: a == 1.0 && b == 1.0,
        }
    }
}

impl LevelSetSurface<3> {
    pub fn ellipsoid(a: f64, b: f64, c: f64) -> Self {
        assert!(a > 0.0 && b > 0.0 && c > 0.0, "semiaxes must be positive");
        Self {
            semiaxes: [a, b, c],
            sphere: a == 1.0 && b == 1.0 && c == 1.0,
        }
    }

    pub fn sphere() -> Self {
        Self::ellipsoid(1.0, 1.0, 1.0)
    }
}

impl<const D: usize> LevelSetSurface<D> {
    pub fn is_sphere(&self) -> bool {
        self.sphere
    }

    pub fn semiaxes(&self) -> &[f64; D] {
        &self.semiaxes
    }

    pub fn min_semiaxis(&self) -> f64 {
        self.semiaxes.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn phi(&self, x: &[f64; D]) -> f64 {
        let mut s = -1.0;
        for i in 0..D {
            let t = x[i] / self.semiaxes[i];
            s += t * t;
        }
        s
    }

    pub fn grad_phi(&self, x: &[f64; D]) -> [f64; D] {
        std::array::from_fn(|i| 2.0 * x[i] / (self.semiaxes[i] * self.semiaxes[i]))
    }

    /// Hessian of `φ`; constant for quadrics.
    pub fn hess_phi(&self) -> [[f64; D]; D] {
        std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                if i == j {
                    2.0 / (self.semiaxes[i] * self.semiaxes[i])
                } else {
                    0.0
                }
            })
        })
    }

    /// Normalized `Dφ` at `x` itself; only meaningful on the surface.
    fn raw_normal(&self, x: &[f64; D]) -> Result<[f64; D], LevelSetError> {
        la::normalize(&self.grad_phi(x)).ok_or(LevelSetError::DegeneratePoint)
    }

    /// Outward unit normal of the constant-along-normals extension,
    /// `n(x) = Dφ(π(x)) / |Dφ(π(x))|`.
    pub fn exact_normal(&self, x: &[f64; D]) -> Result<[f64; D], LevelSetError> {
        if self.phi(x).abs() < PHI_TOL {
            self.raw_normal(x)
        } else {
            let (p, _) = self.closest_point(x)?;
            self.raw_normal(&p)
        }
    }

    /// Weingarten map `W = −P Dn P = −P D²φ P / |Dφ|` at an on-surface point.
    pub fn exact_weingarten(&self, x: &[f64; D]) -> Result<[[f64; D]; D], LevelSetError> {
        let phi = self.phi(x);
        if phi.abs() >= 1e-10 {
            return Err(LevelSetError::NotOnSurface(phi));
        }
        let g = self.grad_phi(x);
        let gn = la::norm(&g);
        if gn < 1e-14 {
            return Err(LevelSetError::DegeneratePoint);
        }
        let n = la::scale(&g, 1.0 / gn);
        let p = la::tangent_projector(&n);
        let h = self.hess_phi();
        let php = la::mat_mul(&p, &la::mat_mul(&h, &p));
        Ok(std::array::from_fn(|i| {
            std::array::from_fn(|j| -php[i][j] / gn)
        }))
    }

    /// Largest principal-curvature magnitude at an on-surface point, i.e. the
    /// spectral radius of `W` restricted to the tangent space.
    fn max_curvature(&self, p: &[f64; D], n: &[f64; D]) -> f64 {
        let w = match self.exact_weingarten(p) {
            Ok(w) => w,
            Err(_) => return f64::INFINITY,
        };
        match D {
            2 => {
                // One tangential eigenvalue; n spans the kernel.
                let t = [-n[1], n[0]];
                let mut wt = [0.0; D];
                for i in 0..D {
                    wt[i] = w[i][0] * t[0] + w[i][1] * t[1];
                }
                (t[0] * wt[0] + t[1] * wt[1]).abs()
            }
            3 => {
                // Restrict to an orthonormal tangent basis and solve the 2x2
                // symmetric eigenproblem in closed form.
                let k = (0..D).min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap();
                let mut e = [0.0; D];
                e[k] = 1.0;
                let mut t1 = [0.0; D];
                // e × n in 3d laid out by explicit indices to stay generic.
                t1[0] = e[1] * n[2] - e[2] * n[1];
                t1[1] = e[2] * n[0] - e[0] * n[2];
                t1[2] = e[0] * n[1] - e[1] * n[0];
                let t1 = la::normalize(&t1).unwrap();
                let mut t2 = [0.0; D];
                t2[0] = n[1] * t1[2] - n[2] * t1[1];
                t2[1] = n[2] * t1[0] - n[0] * t1[2];
                t2[2] = n[0] * t1[1] - n[1] * t1[0];
                let m11 = la::dot(&t1, &la::mat_vec(&w, &t1));
                let m22 = la::dot(&t2, &la::mat_vec(&w, &t2));
                let m12 = la::dot(&t1, &la::mat_vec(&w, &t2));
                let mid = 0.5 * (m11 + m22);
                let rad = (0.25 * (m11 - m22) * (m11 - m22) + m12 * m12).sqrt();
                (mid + rad).abs().max((mid - rad).abs())
            }
            _ => f64::INFINITY,
        }
    }

    /// Closest-point projection `π(x)` with signed distance `ρ` (negative
    /// inside). The sphere uses the closed form `x/|x|`; general quadrics use
    /// a first-order iteration alternating a Newton step onto the level set
    /// with a tangential slide toward `x`, stopping at `|φ(p)| < 1e−12` and
    /// `(x − p)` parallel to `n(p)` within `1e−10`.
    ///
    /// Interior points are rejected once `|ρ|` reaches 95% of the local
    /// curvature radius at the foot point: past the focal point the foot is
    /// no longer the unique minimizer. Exterior points of these convex
    /// surfaces always project uniquely and are accepted at any distance.
    pub fn closest_point(&self, x: &[f64; D]) -> Result<([f64; D], f64), LevelSetError> {
        if self.sphere {
            let r = la::norm(x);
            if r < 1e-14 {
                return Err(LevelSetError::DegeneratePoint);
            }
            let p = la::scale(x, 1.0 / r);
            let rho = r - 1.0;
            if rho < 0.0 && -rho >= 0.95 {
                return Err(LevelSetError::OutOfTube(rho));
            }
            return Ok((p, rho));
        }

        let step_cap = 0.25 * self.min_semiaxis();
        let mut p = *x;
        for _ in 0..MAX_PROJECTION_ITER {
            let g = self.grad_phi(&p);
            let gn = la::norm(&g);
            if gn < 1e-14 {
                return Err(LevelSetError::DegeneratePoint);
            }
            p = la::axpy(&p, -self.phi(&p) / (gn * gn), &g);

            let n = self.raw_normal(&p)?;
            let diff = la::sub(x, &p);
            let rho = la::dot(&diff, &n);
            let tang = la::axpy(&diff, -rho, &n);
            let tn = la::norm(&tang);
            if self.phi(&p).abs() < PHI_TOL && tn <= ALIGN_TOL * la::norm(&diff).max(1.0) {
                if rho < 0.0 && -rho * self.max_curvature(&p, &n) >= 0.95 {
                    return Err(LevelSetError::OutOfTube(rho));
                }
                return Ok((p, rho));
            }
            let step = if tn > step_cap { step_cap / tn } else { 1.0 };
            p = la::axpy(&p, step, &tang);
        }
        Err(LevelSetError::NoConvergence(MAX_PROJECTION_ITER))
    }

    /// Projection bundled with the exact normal and Weingarten map at the
    /// foot point, as needed by geometric lifts.
    pub fn point_data(&self, x: &[f64; D]) -> Result<SurfacePointData<D>, LevelSetError> {
        let (point, rho) = self.closest_point(x)?;
        let normal = self.raw_normal(&point)?;
        let weingarten = self.exact_weingarten(&point)?;
        Ok(SurfacePointData {
            point,
            rho,
            normal,
            weingarten,
        })
    }
}
