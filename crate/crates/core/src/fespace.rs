//! Lagrange finite-element spaces on curved surface meshes.
//!
//! Scalar spaces of order `k_u ∈ 1..=4` identify shared degrees of freedom
//! geometrically: two local nodes are the same global dof when their
//! physical positions coincide within a tolerance far below the node
//! spacing. Tensor spaces stack `D^rank` scalar components with
//! component-major coefficient layout `coeffs[c · scalar_dofs + dof]`.

use crate::curved::{CurvedMesh, GeomEval};
use crate::simplex::SimplexBasis;
use crate::tensor::Tensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeSpaceError {
    #[error("finite element order {0} is not supported (1..=4)")]
    UnsupportedOrder(usize),
}

/// Continuous scalar Lagrange space on a curved mesh.
#[derive(Debug, Clone)]
pub struct ScalarLagrangeSpace<const D: usize, const RD: usize> {
    pub order: usize,
    basis: SimplexBasis<RD>,
    nodes_per_elem: usize,
    /// Element-major global dof ids per local node.
    elem_dofs: Vec<usize>,
    dof_points: Vec<[f64; D]>,
}

/// Identify degrees of freedom by quantized physical node positions. The
/// numbering is the deterministic first-visit order over elements and local
/// nodes; the hash map is only a lookup structure.
pub fn build_scalar_space<const D: usize, const RD: usize>(
    cmesh: &CurvedMesh<D, RD>,
    order: usize,
) -> Result<ScalarLagrangeSpace<D, RD>, FeSpaceError> {
    if order == 0 || order > 4 {
        return Err(FeSpaceError::UnsupportedOrder(order));
    }
    let basis = SimplexBasis::<RD>::new(order);
    let nodes_per_elem = basis.node_count();
    // Matching tolerance: shared-facet nodes agree to ~1e-12 h, distinct
    // nodes are separated by at least ~h / (4 shape constants).
    let tol = 1e-7 * cmesh.base.h.max(1e-300);
    let quantize = |x: &[f64; D]| -> [i64; D] {
        std::array::from_fn(|i| (x[i] / tol).round() as i64)
    };
    let mut lookup: std::collections::HashMap<[i64; D], Vec<usize>> =
        std::collections::HashMap::new();
    let mut elem_dofs = Vec::with_capacity(cmesh.elem_count() * nodes_per_elem);
    let mut dof_points: Vec<[f64; D]> = Vec::new();
    let mut offsets: Vec<[i64; D]> = Vec::new();
    let mut stack = vec![[0i64; D]];
    while let Some(o) = stack.pop() {
        if offsets.contains(&o) {
            continue;
        }
        offsets.push(o);
        for i in 0..D {
            for s in [-1i64, 1] {
                let mut q = o;
                q[i] += s;
                if q.iter().all(|&v| v.abs() <= 1) && !offsets.contains(&q) {
                    stack.push(q);
                }
            }
        }
    }
    for elem in 0..cmesh.elem_count() {
        for node in basis.nodes() {
            let x = cmesh.map_point(elem, node);
            let key = quantize(&x);
            let mut found = None;
            'probe: for off in &offsets {
                let mut k = key;
                for i in 0..D {
                    k[i] += off[i];
                }
                if let Some(cands) = lookup.get(&k) {
                    for &dof in cands {
                        let d = crate::linalg::norm(&crate::linalg::sub(&dof_points[dof], &x));
                        if d < tol {
                            found = Some(dof);
                            break 'probe;
                        }
                    }
                }
            }
            let dof = match found {
                Some(dof) => dof,
                None => {
                    let dof = dof_points.len();
                    dof_points.push(x);
                    lookup.entry(key).or_default().push(dof);
                    dof
                }
            };
            elem_dofs.push(dof);
        }
    }
    Ok(ScalarLagrangeSpace {
        order,
        basis,
        nodes_per_elem,
        elem_dofs,
        dof_points,
    })
}

impl<const D: usize, const RD: usize> ScalarLagrangeSpace<D, RD> {
    pub fn dof_count(&self) -> usize {
        self.dof_points.len()
    }

    pub fn nodes_per_elem(&self) -> usize {
        self.nodes_per_elem
    }

    pub fn elem_count(&self) -> usize {
        self.elem_dofs.len() / self.nodes_per_elem
    }

    pub fn elem_dofs(&self, elem: usize) -> &[usize] {
        &self.elem_dofs[elem * self.nodes_per_elem..(elem + 1) * self.nodes_per_elem]
    }

    pub fn dof_point(&self, dof: usize) -> [f64; D] {
        self.dof_points[dof]
    }

    pub fn basis(&self) -> &SimplexBasis<RD> {
        &self.basis
    }
}

/// Tensor-valued Lagrange space with `D^rank` identical scalar components.
#[derive(Debug, Clone)]
pub struct TensorFeSpace<const D: usize, const RD: usize> {
    pub scalar: ScalarLagrangeSpace<D, RD>,
    pub rank: usize,
    pub components: usize,
}

pub fn build_tensor_space<const D: usize, const RD: usize>(
    cmesh: &CurvedMesh<D, RD>,
    order: usize,
    rank: usize,
) -> Result<TensorFeSpace<D, RD>, FeSpaceError> {
    let scalar = build_scalar_space(cmesh, order)?;
    Ok(TensorFeSpace {
        scalar,
        rank,
        components: D.pow(rank as u32),
    })
}

impl<const D: usize, const RD: usize> TensorFeSpace<D, RD> {
    pub fn total_dofs(&self) -> usize {
        self.components * self.scalar.dof_count()
    }

    /// Global index of component `c` of scalar dof `dof`.
    pub fn global_index(&self, c: usize, dof: usize) -> usize {
        c * self.scalar.dof_count() + dof
    }

    /// Nodal interpolant: evaluates the field at every dof position.
    pub fn interpolate(&self, f: impl Fn(&[f64; D]) -> Tensor<D>) -> Vec<f64> {
        let sd = self.scalar.dof_count();
        let mut coeffs = vec![0.0; self.total_dofs()];
        for dof in 0..sd {
            let t = f(&self.scalar.dof_point(dof));
            assert_eq!(t.rank(), self.rank);
            for c in 0..self.components {
                coeffs[c * sd + dof] = t.data()[c];
            }
        }
        coeffs
    }

    /// Field value from precomputed scalar basis values at a point.
    pub fn element_value(&self, coeffs: &[f64], elem: usize, basis_vals: &[f64]) -> Tensor<D> {
        let dofs = self.scalar.elem_dofs(elem);
        let sd = self.scalar.dof_count();
        let mut out = Tensor::zeros(self.rank);
        for c in 0..self.components {
            let mut acc = 0.0;
            for (i, &dof) in dofs.iter().enumerate() {
                acc += coeffs[c * sd + dof] * basis_vals[i];
            }
            out.data_mut()[c] = acc;
        }
        out
    }

    /// Componentwise tangential surface gradient, pushed forward through the
    /// element map; the derivative slot is appended last.
    pub fn element_gradient(
        &self,
        coeffs: &[f64],
        elem: usize,
        geom: &GeomEval<D, RD>,
        basis_grads: &[[f64; RD]],
    ) -> Tensor<D> {
        let dofs = self.scalar.elem_dofs(elem);
        let sd = self.scalar.dof_count();
        let mut out = Tensor::zeros(self.rank + 1);
        for c in 0..self.components {
            let mut ref_grad = [0.0; RD];
            for (i, &dof) in dofs.iter().enumerate() {
                for a in 0..RD {
                    ref_grad[a] += coeffs[c * sd + dof] * basis_grads[i][a];
                }
            }
            let g = geom.surface_grad_scalar(&ref_grad);
            for j in 0..D {
                out.data_mut()[c * D + j] = g[j];
            }
        }
        out
    }
}
