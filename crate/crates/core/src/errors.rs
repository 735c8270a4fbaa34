//! Error norms against the exact solution and convergence-order fitting.
//!
//! All norms are integrals over the discrete surface `Γ_h`; the exact
//! solution enters through the closest-point lift, with its tangential
//! derivative on `Γ_h` given by the chain rule `D_{Γh}(u ∘ π) = Du(π) B`.

use crate::assembly::{
    covariant_gradient_at_point, AssemblyError, PenaltyConfig, PenaltyNormalField,
};
use crate::curved::{quad_rule, CurvedMesh};
use crate::fespace::TensorFeSpace;
use crate::levelset::LevelSetSurface;
use crate::manufactured::ManufacturedSolution;
use crate::tensor::TensorProjector;

/// Error norms of a discrete solution. `energy_full` is the norm induced by
/// the full penalized bilinear form; `energy_ah` omits the penalty.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    /// `‖u_h − u∘π‖_{L²(Γh)}` over all components.
    pub l2_full: f64,
    /// `‖𝐏_h (u_h − u∘π)‖_{L²(Γh)}`.
    pub l2_tan: f64,
    /// `‖𝐐̃ (u_h − u∘π)‖_{L²(Γh)}` with the penalty normal.
    pub l2_norm_pen: f64,
    /// `(∫ |∇_{Γh} 𝐏_h e|² + |𝐏_h e|²)^{1/2}`.
    pub energy_ah: f64,
    /// `(energy_ah² + β h^{−2α} l2_norm_pen²)^{1/2}`, accumulated
    /// independently inside the quadrature loop.
    pub energy_full: f64,
    /// `‖u_h − u∘π‖` weighted by `|det B|`, an `L²(Γ)` norm of the lifted
    /// error. Only filled on request.
    pub lifted_l2: Option<f64>,
}

/// Integrate all error norms with a rule of the given degree.
pub fn compute_errors<const D: usize, const RD: usize>(
    surface: &LevelSetSurface<D>,
    cmesh: &CurvedMesh<D, RD>,
    space: &TensorFeSpace<D, RD>,
    coeffs: &[f64],
    solution: &ManufacturedSolution<D>,
    penalty: &PenaltyConfig,
    quad_degree: usize,
    lifted: bool,
) -> Result<ErrorReport, AssemblyError> {
    assert_eq!(coeffs.len(), space.total_dofs());
    let rule = quad_rule::<RD>(quad_degree)?;
    let nn = space.scalar.nodes_per_elem();
    let prefactor = penalty.prefactor(cmesh.base.h);
    let normal_field = PenaltyNormalField::<D, RD>::new(penalty.normal);

    let basis = space.scalar.basis();
    let nq = rule.points.len();
    let mut tab_vals = vec![vec![0.0; nn]; nq];
    let mut tab_grads = vec![vec![[0.0; RD]; nn]; nq];
    for (q, xi) in rule.points.iter().enumerate() {
        basis.eval(xi, &mut tab_vals[q]);
        basis.eval_grad(xi, &mut tab_grads[q]);
    }

    let mut acc_full = 0.0;
    let mut acc_tan = 0.0;
    let mut acc_pen = 0.0;
    let mut acc_ah = 0.0;
    let mut acc_energy = 0.0;
    let mut acc_lifted = 0.0;
    let mut scratch = Vec::new();

    for elem in 0..cmesh.elem_count() {
        let pen_elem = normal_field.element_context(surface, cmesh, elem)?;
        for q in 0..nq {
            let xi = &rule.points[q];
            let geom = cmesh.eval(elem, xi)?;
            let lift = geom.lift(surface)?;
            let w = rule.weights[q] * geom.measure;

            let mut e_val = space.element_value(coeffs, elem, &tab_vals[q]);
            let mut e_deriv = space.element_gradient(coeffs, elem, &geom, &tab_grads[q]);
            let (u, du) = solution.exact_solution_with_gradient(&lift.point);
            // D_{Γh}(u∘π) = Du(π) B: contract the derivative slot with Bᵀ.
            let bt: [[f64; D]; D] =
                std::array::from_fn(|i| std::array::from_fn(|j| lift.b_matrix[j][i]));
            let du_h = du.apply_matrix_slot(&bt, space.rank);
            e_val.add_scaled(&u, -1.0);
            e_deriv.add_scaled(&du_h, -1.0);

            let proj = TensorProjector::new(&geom.n_h);
            let p_e = proj.project(&e_val);
            let cov_e = covariant_gradient_at_point(&e_val, &e_deriv, &geom.n_h, &geom.grad_n_h);
            let n_pen = pen_elem.eval(&geom, xi, &mut scratch)?;
            let pen_proj = TensorProjector::new(&n_pen);
            let q_e = pen_proj.complement(&e_val);

            let full2 = e_val.inner(&e_val);
            let tan2 = p_e.inner(&p_e);
            let pen2 = q_e.inner(&q_e);
            let ah2 = cov_e.inner(&cov_e) + tan2;
            acc_full += w * full2;
            acc_tan += w * tan2;
            acc_pen += w * pen2;
            acc_ah += w * ah2;
            acc_energy += w * (ah2 + prefactor * pen2);
            if lifted {
                acc_lifted += w * lift.det_b * full2;
            }
        }
    }

    Ok(ErrorReport {
        l2_full: acc_full.sqrt(),
        l2_tan: acc_tan.sqrt(),
        l2_norm_pen: acc_pen.sqrt(),
        energy_ah: acc_ah.sqrt(),
        energy_full: acc_energy.sqrt(),
        lifted_l2: lifted.then(|| acc_lifted.sqrt()),
    })
}

/// Least-squares fit of `log e = log C + p log h`, weighting level `ℓ` by
/// `2^ℓ` so the finer meshes dominate the estimated order.
#[derive(Debug, Clone, Copy)]
pub struct EocFit {
    pub order: f64,
    pub constant: f64,
}

pub fn eoc_fit(hs: &[f64], errors: &[f64]) -> Option<EocFit> {
    assert_eq!(hs.len(), errors.len());
    if hs.len() < 2 || errors.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let (mut sw, mut sh, mut shh, mut se, mut she) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (l, (&h, &e)) in hs.iter().zip(errors).enumerate() {
        let w = 2.0f64.powi(l as i32);
        let lh = h.ln();
        let le = e.ln();
        sw += w;
        sh += w * lh;
        shh += w * lh * lh;
        se += w * le;
        she += w * lh * le;
    }
    let det = sw * shh - sh * sh;
    if det.abs() < 1e-30 {
        return None;
    }
    let log_c = (shh * se - sh * she) / det;
    let order = (sw * she - sh * se) / det;
    Some(EocFit {
        order,
        constant: log_c.exp(),
    })
}

/// Orders between consecutive levels, `log(e_ℓ/e_{ℓ+1}) / log(h_ℓ/h_{ℓ+1})`.
pub fn pairwise_orders(hs: &[f64], errors: &[f64]) -> Vec<f64> {
    assert_eq!(hs.len(), errors.len());
    hs.windows(2)
        .zip(errors.windows(2))
        .map(|(h, e)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect()
}
