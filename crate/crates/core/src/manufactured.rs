//! Manufactured tangential tensor fields and their source terms.
//!
//! Each case pairs a closed surface with an exactly tangential solution `u`
//! of rank 1 or 2. The source is `f = −Δu + u` with the tangential Bochner
//! Laplacian evaluated through ambient derivatives: with `𝐏` the slotwise
//! tangential projector,
//!
//!   𝐠 = 𝐏 Du,   𝐡 = 𝐏 D𝐠,   (Δu)_c = Σ_{a,b} 𝐡_{c,a,b} P_{ab},
//!
//! which on the surface is independent of the normal extension. Derivatives
//! come from second-order forward-mode jets of the extended fields.

use crate::dual::{Dual1, Dual2, Scalar};
use crate::levelset::LevelSetSurface;
use crate::tensor::{Tensor, TensorProjector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManufacturedError {
    #[error("tensor rank {0} is not supported (1 or 2)")]
    UnsupportedRank(usize),
    #[error("the rank-2 case in three dimensions is defined on the unit sphere only")]
    UnsupportedSurface,
}

/// A tangential manufactured solution on a level-set surface.
#[derive(Debug, Clone)]
pub struct ManufacturedSolution<const D: usize> {
    pub rank: usize,
    surface: LevelSetSurface<D>,
}

pub fn manufactured_solution<const D: usize>(
    surface: &LevelSetSurface<D>,
    rank: usize,
) -> Result<ManufacturedSolution<D>, ManufacturedError> {
    if rank == 0 || rank > 2 {
        return Err(ManufacturedError::UnsupportedRank(rank));
    }
    if D == 3 && rank == 2 && !surface.is_sphere() {
        return Err(ManufacturedError::UnsupportedSurface);
    }
    Ok(ManufacturedSolution {
        rank,
        surface: surface.clone(),
    })
}

/// Unit normal of the level-set extension, `∇φ/|∇φ|` componentwise in `S`.
fn extended_normal<S: Scalar, const D: usize>(semiaxes: &[f64; D], x: &[S; D]) -> [S; D] {
    let g: [S; D] = std::array::from_fn(|i| x[i] / S::from_f64(semiaxes[i] * semiaxes[i]));
    let mut q = S::from_f64(0.0);
    for gi in &g {
        q = q + *gi * *gi;
    }
    let inv = S::from_f64(1.0) / q.sqrt();
    std::array::from_fn(|i| g[i] * inv)
}

/// Raw solution components (row-major, length `D^rank`) as a function of an
/// ambient point, before any numeric projection.
fn field_components<S: Scalar, const D: usize>(
    semiaxes: &[f64; D],
    rank: usize,
    x: &[S; D],
) -> Vec<S> {
    let n = extended_normal(semiaxes, x);
    let p: Vec<Vec<S>> = (0..D)
        .map(|i| {
            (0..D)
                .map(|j| {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    S::from_f64(delta) - n[i] * n[j]
                })
                .collect()
        })
        .collect();
    match (D, rank) {
        (2, 1) => {
            // P applied to (x₀³ x₁, (x₀ + 2) x₁²).
            let xs: &[S] = x;
            let w = [
                xs[0] * xs[0] * xs[0] * xs[1],
                (xs[0] + S::from_f64(2.0)) * xs[1] * xs[1],
            ];
            (0..D)
                .map(|i| {
                    let mut acc = S::from_f64(0.0);
                    for j in 0..D {
                        acc = acc + p[i][j] * w[j];
                    }
                    acc
                })
                .collect()
        }
        (3, 1) => {
            // n × ∇(x₀ x₁ x₂), tangential by construction.
            let xs: &[S] = x;
            let ns: &[S] = &n;
            let g = [xs[1] * xs[2], xs[0] * xs[2], xs[0] * xs[1]];
            vec![
                ns[1] * g[2] - ns[2] * g[1],
                ns[2] * g[0] - ns[0] * g[2],
                ns[0] * g[1] - ns[1] * g[0],
            ]
        }
        (_, 2) => {
            // P A P with a fixed constant matrix A.
            let a2 = [[-1.0, 3.0], [1.0, 2.0]];
            let a3 = [[-1.0, 3.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
            let a = |i: usize, j: usize| -> f64 {
                if D == 2 {
                    a2[i][j]
                } else {
                    a3[i][j]
                }
            };
            let mut out = Vec::with_capacity(D * D);
            for i in 0..D {
                for j in 0..D {
                    let mut acc = S::from_f64(0.0);
                    for k in 0..D {
                        for l in 0..D {
                            acc = acc + p[i][k] * S::from_f64(a(k, l)) * p[l][j];
                        }
                    }
                    out.push(acc);
                }
            }
            out
        }
        _ => unreachable!("validated at construction"),
    }
}

impl<const D: usize> ManufacturedSolution<D> {
    pub fn surface(&self) -> &LevelSetSurface<D> {
        &self.surface
    }

    /// Solution value at an ambient point (exact on the surface).
    pub fn exact_solution(&self, x: &[f64; D]) -> Tensor<D> {
        let vals = field_components(self.surface.semiaxes(), self.rank, x);
        Tensor::from_data(self.rank, vals)
    }

    /// Solution value and full ambient derivative (derivative slot last).
    pub fn exact_solution_with_gradient(&self, x: &[f64; D]) -> (Tensor<D>, Tensor<D>) {
        let jets = Dual1::seed(x);
        let vals = field_components(self.surface.semiaxes(), self.rank, &jets);
        let mut value = Tensor::zeros(self.rank);
        let mut deriv = Tensor::zeros(self.rank + 1);
        for (c, jet) in vals.iter().enumerate() {
            value.data_mut()[c] = jet.v;
            for b in 0..D {
                deriv.data_mut()[c * D + b] = jet.d[b];
            }
        }
        (value, deriv)
    }

    /// Source `f = −Δu + u` at a surface point.
    pub fn rhs(&self, x: &[f64; D]) -> Tensor<D> {
        let semiaxes = self.surface.semiaxes();
        let rank = self.rank;

        let jets = Dual2::seed(x);
        let u_jets = field_components(semiaxes, rank, &jets);
        let n_jets = extended_normal(semiaxes, &jets);

        let mut u = Tensor::<D>::zeros(rank);
        let mut du = Tensor::<D>::zeros(rank + 1);
        for (c, jet) in u_jets.iter().enumerate() {
            u.data_mut()[c] = jet.v;
            for b in 0..D {
                du.data_mut()[c * D + b] = jet.d[b];
            }
        }

        let n: [f64; D] = std::array::from_fn(|i| n_jets[i].v);
        let proj = TensorProjector::new(&n);
        // ∂_b P = −(∂_b n) ⊗ n − n ⊗ (∂_b n).
        let dp: Vec<[[f64; D]; D]> = (0..D)
            .map(|b| {
                std::array::from_fn(|i| {
                    std::array::from_fn(|j| {
                        -n_jets[i].d[b] * n[j] - n[i] * n_jets[j].d[b]
                    })
                })
            })
            .collect();

        // D𝐠 with 𝐠 = 𝐏 Du: product rule over the projector factors plus
        // the projected second derivative.
        let mut dg = Tensor::<D>::zeros(rank + 2);
        for b in 0..D {
            let mut col = Tensor::<D>::zeros(rank + 1);
            for s in 0..rank + 1 {
                let mut term = du.apply_matrix_slot(&dp[b], s);
                for s2 in 0..rank + 1 {
                    if s2 != s {
                        term = term.apply_matrix_slot(proj.matrix(), s2);
                    }
                }
                col.add_scaled(&term, 1.0);
            }
            let mut ddu_b = Tensor::<D>::zeros(rank + 1);
            for (c, jet) in u_jets.iter().enumerate() {
                for a in 0..D {
                    ddu_b.data_mut()[c * D + a] = jet.h[a][b];
                }
            }
            col.add_scaled(&proj.project(&ddu_b), 1.0);
            // Scatter as the trailing slot.
            for (idx, &v) in col.data().iter().enumerate() {
                dg.data_mut()[idx * D + b] = v;
            }
        }

        let h = proj.project(&dg);
        let mut f = h.contract_last_two(proj.matrix());
        f.scale_in_place(-1.0);
        f.add_scaled(&u, 1.0);
        f
    }
}
