//! Assembly of the penalized tangential tensor problem on a curved mesh.
//!
//! The discrete bilinear form splits into a consistency part and a penalty:
//!
//!   A_h(u, v) = ⟨∇_{Γh} 𝐏_h u, ∇_{Γh} 𝐏_h v⟩ + ⟨𝐏_h u, 𝐏_h v⟩
//!             + β h^{−2α} ⟨𝐐̃ u, 𝐐̃ v⟩,
//!
//! with `𝐏_h` the slotwise discrete tangential projector, `𝐐̃` the
//! complement projector of a chosen penalty normal, and the load
//! `l_h(v) = ⟨f ∘ π, 𝐏_h v⟩` integrated elementwise over `Γ_h`.

use crate::curved::{quad_rule, CurvedError, CurvedMesh, GeomEval};
use crate::fespace::TensorFeSpace;
use crate::levelset::{LevelSetError, LevelSetSurface};
use crate::linalg as la;
use crate::manufactured::ManufacturedSolution;
use crate::simplex::SimplexBasis;
use crate::solver::CsrMatrix;
use crate::tensor::{Tensor, TensorProjector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("penalty parameters must satisfy β > 0 and α ≥ 0 (got β = {beta}, α = {alpha})")]
    InvalidPenalty { beta: f64, alpha: f64 },
    #[error(transparent)]
    Curved(#[from] CurvedError),
    #[error(transparent)]
    LevelSet(#[from] LevelSetError),
}

/// Normal field used by the penalty projector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PenaltyNormal {
    /// The discrete normal `n_h` of the curved geometry.
    Discrete,
    /// Normalized elementwise Lagrange interpolant of the exact normal,
    /// accurate of order `k_p` (interpolation degree `k_p − 1`).
    Interpolated(usize),
    /// The exact normal at the closest surface point.
    Exact,
}

#[derive(Debug, Clone, Copy)]
pub struct PenaltyConfig {
    pub beta: f64,
    pub alpha: f64,
    pub normal: PenaltyNormal,
}

impl PenaltyConfig {
    /// Mesh-dependent penalty weight `β h^{−2α}`.
    pub fn prefactor(&self, h: f64) -> f64 {
        self.beta * h.powf(-2.0 * self.alpha)
    }
}

/// Fully projected covariant gradient of a tensor field on the discrete
/// surface: with `value = u`, `deriv[·, j] = ∂_j^Γ u` the componentwise
/// tangential derivative, and `G = ∇_Γ n_h`,
///
///   ∇_{Γh}(𝐏_h u)_{c,j} = 𝐏_h\[deriv\]_{c,j} − Σ_s G_{c_s j} · m_s(c ∖ s),
///
/// where `m_s` contracts slot `s` of the otherwise-projected value with
/// `n_h`. The correction terms are the projected derivatives of the
/// projector itself.
pub fn covariant_gradient_at_point<const D: usize>(
    value: &Tensor<D>,
    deriv: &Tensor<D>,
    n_h: &[f64; D],
    grad_n_h: &[[f64; D]; D],
) -> Tensor<D> {
    let rank = value.rank();
    assert_eq!(deriv.rank(), rank + 1);
    let proj = TensorProjector::new(n_h);
    let mut out = proj.project(deriv);
    for s in 0..rank {
        let mut t = value.clone();
        for s2 in 0..rank {
            if s2 != s {
                t = t.apply_matrix_slot(proj.matrix(), s2);
            }
        }
        let m = t.contract_slot_with_vector(s, n_h);
        let stride = D.pow((rank - 1 - s) as u32);
        for outer in 0..value.len() / (stride * D) {
            for inner in 0..stride {
                let mval = m.data()[outer * stride + inner];
                if mval == 0.0 {
                    continue;
                }
                for k in 0..D {
                    let c = outer * stride * D + k * stride + inner;
                    for j in 0..D {
                        out.data_mut()[c * D + j] -= grad_n_h[k][j] * mval;
                    }
                }
            }
        }
    }
    out
}

/// Penalty normal evaluator for one element.
pub enum PenaltyNormalElem<'a, const D: usize, const RD: usize> {
    Discrete,
    Exact(&'a LevelSetSurface<D>),
    Interpolated {
        basis: &'a SimplexBasis<RD>,
        nodal: Vec<[f64; D]>,
    },
}

impl<'a, const D: usize, const RD: usize> PenaltyNormalElem<'a, D, RD> {
    pub fn eval(
        &self,
        geom: &GeomEval<D, RD>,
        xi: &[f64; RD],
        scratch: &mut Vec<f64>,
    ) -> Result<[f64; D], LevelSetError> {
        match self {
            PenaltyNormalElem::Discrete => Ok(geom.n_h),
            PenaltyNormalElem::Exact(surface) => surface.exact_normal(&geom.x),
            PenaltyNormalElem::Interpolated { basis, nodal } => {
                scratch.resize(basis.node_count(), 0.0);
                basis.eval(xi, scratch);
                let mut n = [0.0; D];
                for (i, v) in nodal.iter().enumerate() {
                    for c in 0..D {
                        n[c] += scratch[i] * v[c];
                    }
                }
                let mag = la::norm(&n);
                Ok(la::scale(&n, 1.0 / mag))
            }
        }
    }
}

/// Per-element context that owns the interpolation basis when needed.
pub struct PenaltyNormalField<const D: usize, const RD: usize> {
    mode: PenaltyNormal,
    basis: Option<SimplexBasis<RD>>,
}

impl<const D: usize, const RD: usize> PenaltyNormalField<D, RD> {
    pub fn new(mode: PenaltyNormal) -> Self {
        let basis = match mode {
            PenaltyNormal::Interpolated(kp) => Some(SimplexBasis::<RD>::new(kp.saturating_sub(1))),
            _ => None,
        };
        PenaltyNormalField { mode, basis }
    }

    pub fn element_context<'a>(
        &'a self,
        surface: &'a LevelSetSurface<D>,
        cmesh: &CurvedMesh<D, RD>,
        elem: usize,
    ) -> Result<PenaltyNormalElem<'a, D, RD>, LevelSetError> {
        match self.mode {
            PenaltyNormal::Discrete => Ok(PenaltyNormalElem::Discrete),
            PenaltyNormal::Exact => Ok(PenaltyNormalElem::Exact(surface)),
            PenaltyNormal::Interpolated(_) => {
                let basis = self.basis.as_ref().unwrap();
                let mut nodal = Vec::with_capacity(basis.node_count());
                for node in basis.nodes() {
                    let x = cmesh.map_point(elem, node);
                    nodal.push(surface.exact_normal(&x)?);
                }
                Ok(PenaltyNormalElem::Interpolated { basis, nodal })
            }
        }
    }

    /// Penalty normal at a single reference point, for diagnostics.
    pub fn eval_at(
        &self,
        surface: &LevelSetSurface<D>,
        cmesh: &CurvedMesh<D, RD>,
        elem: usize,
        xi: &[f64; RD],
    ) -> Result<[f64; D], AssemblyError> {
        let geom = cmesh.eval(elem, xi)?;
        let ctx = self.element_context(surface, cmesh, elem)?;
        let mut scratch = Vec::new();
        Ok(ctx.eval(&geom, xi, &mut scratch)?)
    }
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

/// Assembled operator with the penalty block kept separate from the
/// consistency block, sharing one sparsity pattern. The penalty values
/// carry the `h^{−2α}` weight but not `β`, so a β sweep reuses a single
/// assembly pass.
#[derive(Debug, Clone)]
pub struct AssembledOperator {
    pub n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    cons_values: Vec<f64>,
    pen_values: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl AssembledOperator {
    /// Full system matrix `A + β S`.
    pub fn matrix_with_beta(&self, beta: f64) -> CsrMatrix {
        assert!(beta > 0.0);
        let values = self
            .cons_values
            .iter()
            .zip(&self.pen_values)
            .map(|(a, s)| a + beta * s)
            .collect();
        CsrMatrix {
            n: self.n,
            indptr: self.indptr.clone(),
            indices: self.indices.clone(),
            values,
        }
    }
}

/// Deterministic CSR pattern: scalar adjacency expanded over the component
/// blocks, column indices ascending.
fn build_pattern<const D: usize, const RD: usize>(space: &TensorFeSpace<D, RD>) -> CsrMatrix {
    let sd = space.scalar.dof_count();
    let ncomp = space.components;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); sd];
    for elem in 0..space.scalar.elem_count() {
        let dofs = space.scalar.elem_dofs(elem);
        for &i in dofs {
            for &j in dofs {
                adj[i].push(j);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let n = ncomp * sd;
    let mut indptr = Vec::with_capacity(n + 1);
    indptr.push(0usize);
    let nnz: usize = adj.iter().map(|l| l.len()).sum::<usize>() * ncomp * ncomp;
    let mut indices = Vec::with_capacity(nnz);
    for _c in 0..ncomp {
        for i in 0..sd {
            for cc in 0..ncomp {
                for &j in &adj[i] {
                    indices.push(cc * sd + j);
                }
            }
            indptr.push(indices.len());
        }
    }
    let values = vec![0.0; indices.len()];
    CsrMatrix {
        n,
        indptr,
        indices,
        values,
    }
}

/// Assemble the consistency and penalty blocks plus the manufactured load.
/// The penalty block is weighted by `h^{−2α}` only; multiply by `β` via
/// [`AssembledOperator::matrix_with_beta`].
pub fn assemble_operator<const D: usize, const RD: usize>(
    surface: &LevelSetSurface<D>,
    cmesh: &CurvedMesh<D, RD>,
    space: &TensorFeSpace<D, RD>,
    solution: &ManufacturedSolution<D>,
    alpha: f64,
    normal: PenaltyNormal,
    quad_degree: usize,
) -> Result<AssembledOperator, AssemblyError> {
    if !(alpha >= 0.0) {
        return Err(AssemblyError::InvalidPenalty { beta: 1.0, alpha });
    }
    let rule = quad_rule::<RD>(quad_degree)?;
    let nq = rule.points.len();
    let nn = space.scalar.nodes_per_elem();
    let ncomp = space.components;
    let nloc = nn * ncomp;
    let rank = space.rank;
    let sd = space.scalar.dof_count();
    let pen_weight = cmesh.base.h.powf(-2.0 * alpha);
    let normal_field = PenaltyNormalField::<D, RD>::new(normal);

    // Tabulate reference basis data once.
    let basis = space.scalar.basis();
    let mut tab_vals = vec![vec![0.0; nn]; nq];
    let mut tab_grads = vec![vec![[0.0; RD]; nn]; nq];
    for (q, xi) in rule.points.iter().enumerate() {
        basis.eval(xi, &mut tab_vals[q]);
        basis.eval_grad(xi, &mut tab_grads[q]);
    }

    let pattern = build_pattern(space);
    let n = pattern.n;
    let mut cons_values = vec![0.0; pattern.indices.len()];
    let mut pen_values = vec![0.0; pattern.indices.len()];
    let mut rhs = vec![0.0; n];

    let mut local_a = vec![0.0; nloc * nloc];
    let mut local_s = vec![0.0; nloc * nloc];
    let mut local_rhs = vec![0.0; nloc];
    // Per-dof tensors at one quadrature point.
    let mut proj_vals: Vec<Tensor<D>> = vec![Tensor::zeros(rank); nloc];
    let mut cov_grads: Vec<Tensor<D>> = vec![Tensor::zeros(rank + 1); nloc];
    let mut pen_vals: Vec<Tensor<D>> = vec![Tensor::zeros(rank); nloc];
    let mut scratch = Vec::new();

    for elem in 0..cmesh.elem_count() {
        local_a.iter_mut().for_each(|v| *v = 0.0);
        local_s.iter_mut().for_each(|v| *v = 0.0);
        local_rhs.iter_mut().for_each(|v| *v = 0.0);
        let pen_elem = normal_field.element_context(surface, cmesh, elem)?;

        for q in 0..nq {
            let xi = &rule.points[q];
            let geom = cmesh.eval(elem, xi)?;
            let w = rule.weights[q] * geom.measure;
            let proj = TensorProjector::new(&geom.n_h);
            let n_pen = pen_elem.eval(&geom, xi, &mut scratch)?;
            let pen_proj = TensorProjector::new(&n_pen);

            // Basis tensors: component c times scalar shape i.
            for c in 0..ncomp {
                for i in 0..nn {
                    let k = c * nn + i;
                    let mut value = Tensor::<D>::zeros(rank);
                    value.data_mut()[c] = tab_vals[q][i];
                    let sg = geom.surface_grad_scalar(&tab_grads[q][i]);
                    let mut deriv = Tensor::<D>::zeros(rank + 1);
                    for j in 0..D {
                        deriv.data_mut()[c * D + j] = sg[j];
                    }
                    proj_vals[k] = proj.project(&value);
                    cov_grads[k] =
                        covariant_gradient_at_point(&value, &deriv, &geom.n_h, &geom.grad_n_h);
                    pen_vals[k] = pen_proj.complement(&value);
                }
            }

            // Load: f at the lifted point against the projected test value.
            let (pi_x, _) = surface.closest_point(&geom.x)?;
            let f = solution.rhs(&pi_x);
            for k in 0..nloc {
                local_rhs[k] += w * f.inner(&proj_vals[k]);
            }

            for a in 0..nloc {
                for b in a..nloc {
                    let va = cov_grads[a].inner(&cov_grads[b]) + proj_vals[a].inner(&proj_vals[b]);
                    local_a[a * nloc + b] += w * va;
                    local_s[a * nloc + b] += w * pen_weight * pen_vals[a].inner(&pen_vals[b]);
                }
            }
        }

        // Scatter the symmetric local matrices.
        let dofs = space.scalar.elem_dofs(elem);
        for a in 0..nloc {
            let (ca, ia) = (a / nn, a % nn);
            let ga = ca * sd + dofs[ia];
            rhs[ga] += local_rhs[a];
            for b in 0..nloc {
                let entry = if b >= a { a * nloc + b } else { b * nloc + a };
                let va = local_a[entry];
                let vs = local_s[entry];
                if va == 0.0 && vs == 0.0 {
                    continue;
                }
                let (cb, ib) = (b / nn, b % nn);
                let gb = cb * sd + dofs[ib];
                let lo = pattern.indptr[ga];
                let hi = pattern.indptr[ga + 1];
                let pos = pattern.indices[lo..hi].binary_search(&gb).unwrap() + lo;
                cons_values[pos] += va;
                pen_values[pos] += vs;
            }
        }
    }

    Ok(AssembledOperator {
        n,
        indptr: pattern.indptr,
        indices: pattern.indices,
        cons_values,
        pen_values,
        rhs,
    })
}

/// Assemble the penalized system matrix and manufactured load vector.
pub fn assemble<const D: usize, const RD: usize>(
    surface: &LevelSetSurface<D>,
    cmesh: &CurvedMesh<D, RD>,
    space: &TensorFeSpace<D, RD>,
    solution: &ManufacturedSolution<D>,
    penalty: &PenaltyConfig,
    quad_degree: usize,
) -> Result<AssembledSystem, AssemblyError> {
    if !(penalty.beta > 0.0) || !(penalty.alpha >= 0.0) {
        return Err(AssemblyError::InvalidPenalty {
            beta: penalty.beta,
            alpha: penalty.alpha,
        });
    }
    let op = assemble_operator(
        surface,
        cmesh,
        space,
        solution,
        penalty.alpha,
        penalty.normal,
        quad_degree,
    )?;
    Ok(AssembledSystem {
        matrix: op.matrix_with_beta(penalty.beta),
        rhs: op.rhs,
    })
}
