//! Curved surface meshes of geometry order `k_g`, reference quadrature, and
//! pointwise geometric data including the lift onto the exact surface.
//!
//! Each flat cell carries a componentwise Lagrange interpolant of the
//! closest-point projection at equispaced geometry nodes; `k_g = 1`
//! reproduces the flat mesh. The lift at a point `x̃ ∈ Γ_h` is
//! `B = P (Id + ρ W) P_h` with `dΓ = |det B| dΓ_h`.

use crate::levelset::{LevelSetError, LevelSetSurface};
use crate::linalg as la;
use crate::mesh::FlatMesh;
use crate::simplex::SimplexBasis;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurvedError {
    #[error("quadrature degree {0} is not supported")]
    UnsupportedDegree(usize),
    #[error("geometry order {0} is not supported (1..=4)")]
    UnsupportedOrder(usize),
    #[error("element {0} has a degenerate tangent map")]
    DegenerateElement(usize),
    #[error(transparent)]
    LevelSet(#[from] LevelSetError),
}

/// Quadrature rule on the reference simplex; weights sum to the reference
/// measure (1 for the segment, 1/2 for the triangle).
#[derive(Debug, Clone)]
pub struct QuadRule<const RD: usize> {
    pub points: Vec<[f64; RD]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss–Legendre nodes and weights on [0, 1].
fn gauss_legendre_01(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n and P_n'.
            let mut p0 = 1.0;
            let mut p1 = x;
            for m in 2..=n {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k] = 0.5 * (1.0 + x);
        weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    // Newton starts at descending cosines; sort ascending for determinism.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    (
        idx.iter().map(|&i| nodes[i]).collect(),
        idx.iter().map(|&i| weights[i]).collect(),
    )
}

/// Quadrature exact for polynomials of total degree `degree`. The segment
/// uses Gauss–Legendre; the triangle uses the barycenter rule (degree 1),
/// the symmetric three-point rule (degree 2), and a collapsed Gauss product
/// rule above that.
pub fn quad_rule<const RD: usize>(degree: usize) -> Result<QuadRule<RD>, CurvedError> {
    if degree == 0 {
        return Err(CurvedError::UnsupportedDegree(degree));
    }
    match RD {
        1 => {
            if degree > 20 {
                return Err(CurvedError::UnsupportedDegree(degree));
            }
            let n = degree / 2 + 1;
            let (nodes, weights) = gauss_legendre_01(n);
            let points = nodes
                .iter()
                .map(|&x| std::array::from_fn(|_| x))
                .collect();
            Ok(QuadRule {
                points,
                weights,
                degree,
            })
        }
        2 => {
            if degree > 14 {
                return Err(CurvedError::UnsupportedDegree(degree));
            }
            let mut points: Vec<[f64; RD]> = Vec::new();
            let mut weights = Vec::new();
            let mut push = |xi: f64, eta: f64, w: f64| {
                let mut p = [0.0; RD];
                p[0] = xi;
                p[RD - 1] = eta;
                points.push(p);
                weights.push(w);
            };
            match degree {
                1 => push(1.0 / 3.0, 1.0 / 3.0, 0.5),
                2 => {
                    push(1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0);
                    push(2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0);
                    push(1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0);
                }
                _ => {
                    // (u, v) → (u, v(1−u)) with Jacobian (1−u); the extra
                    // factor raises the u-degree by one.
                    let nu = (degree + 2) / 2 + 1;
                    let nv = (degree + 1) / 2 + 1;
                    let (un, uw) = gauss_legendre_01(nu);
                    let (vn, vw) = gauss_legendre_01(nv);
                    for (i, &u) in un.iter().enumerate() {
                        for (j, &v) in vn.iter().enumerate() {
                            push(u, v * (1.0 - u), uw[i] * vw[j] * (1.0 - u));
                        }
                    }
                }
            }
            Ok(QuadRule {
                points,
                weights,
                degree,
            })
        }
        _ => Err(CurvedError::UnsupportedDegree(degree)),
    }
}

/// Geometric data of a curved element map at one reference point.
#[derive(Debug, Clone)]
pub struct GeomEval<const D: usize, const RD: usize> {
    pub x: [f64; D],
    /// Tangent vectors `t_a = ∂x/∂ξ_a`.
    pub tangents: [[f64; D]; RD],
    /// Surface measure factor `√det(JᵀJ)`; quadrature weights multiply this.
    pub measure: f64,
    /// Outward unit normal of `Γ_h` at `x`.
    pub n_h: [f64; D],
    /// Tangential surface derivative of `n_h`: `G[i][j] = ∂ⱼ^Γ (n_h)_i`.
    pub grad_n_h: [[f64; D]; D],
    metric_inv: [[f64; RD]; RD],
}

/// Exact-surface data lifted from a point of `Γ_h`.
#[derive(Debug, Clone)]
pub struct LiftData<const D: usize> {
    pub point: [f64; D],
    pub rho: f64,
    pub normal: [f64; D],
    pub b_matrix: [[f64; D]; D],
    pub det_b: f64,
}

impl<const D: usize, const RD: usize> GeomEval<D, RD> {
    /// Push a reference gradient forward to the tangential surface gradient
    /// `J (JᵀJ)⁻¹ ∇_ξ`.
    pub fn surface_grad_scalar(&self, ref_grad: &[f64; RD]) -> [f64; D] {
        let mut coef = [0.0; RD];
        for a in 0..RD {
            for b in 0..RD {
                coef[a] += self.metric_inv[a][b] * ref_grad[b];
            }
        }
        let mut out = [0.0; D];
        for a in 0..RD {
            for i in 0..D {
                out[i] += self.tangents[a][i] * coef[a];
            }
        }
        out
    }

    /// Closest-point lift. `B = P (Id − ρ W)⁻¹ P_h` is the exact tangential
    /// derivative of `π` restricted to the tangent planes (on the unit
    /// sphere it reduces to `P P_h / |x|`), and `|det B|` is the measure
    /// ratio between `Γ` and `Γ_h` parametrizations. The tube guard of the
    /// projection keeps `Id − ρ W` invertible.
    pub fn lift(&self, surface: &LevelSetSurface<D>) -> Result<LiftData<D>, LevelSetError> {
        let data = surface.point_data(&self.x)?;
        let p = la::tangent_projector(&data.normal);
        let ph = la::tangent_projector(&self.n_h);
        let mut inner = la::identity::<D>();
        for i in 0..D {
            for j in 0..D {
                inner[i][j] -= data.rho * data.weingarten[i][j];
            }
        }
        let inner = invert_small(&inner).ok_or(LevelSetError::OutOfTube(data.rho))?;
        let b_matrix = la::mat_mul(&p, &la::mat_mul(&inner, &ph));
        // |det B| as the ratio of tangent Gram determinants of B J and J.
        let bt: [[f64; D]; RD] = std::array::from_fn(|a| la::mat_vec(&b_matrix, &self.tangents[a]));
        let gram = |t: &[[f64; D]; RD]| -> [[f64; RD]; RD] {
            std::array::from_fn(|a| std::array::from_fn(|b| la::dot(&t[a], &t[b])))
        };
        let det = |g: &[[f64; RD]; RD]| -> f64 {
            match RD {
                1 => g[0][0],
                2 => g[0][0] * g[RD - 1][RD - 1] - g[0][RD - 1] * g[RD - 1][0],
                _ => unreachable!(),
            }
        };
        let num = det(&gram(&bt));
        let den = det(&gram(&self.tangents));
        let det_b = (num / den).sqrt();
        Ok(LiftData {
            point: data.point,
            rho: data.rho,
            normal: data.normal,
            b_matrix,
            det_b,
        })
    }
}

impl<const D: usize> LiftData<D> {
    /// Pseudo-inverse of `B` between the tangent spaces: `B B⁻¹ = P` and
    /// `B⁻¹ B = P_h`. Computed as `Bᵀ (B Bᵀ + n ⊗ n)⁻¹`, using that `n`
    /// spans the complement of the range of `B`.
    pub fn b_inverse(&self) -> Option<[[f64; D]; D]> {
        let mut m = la::outer(&self.normal, &self.normal);
        for i in 0..D {
            for j in 0..D {
                for k in 0..D {
                    m[i][j] += self.b_matrix[i][k] * self.b_matrix[j][k];
                }
            }
        }
        let minv = invert_small(&m)?;
        let mut out = [[0.0; D]; D];
        for i in 0..D {
            for j in 0..D {
                for k in 0..D {
                    out[i][j] += self.b_matrix[k][i] * minv[k][j];
                }
            }
        }
        Some(out)
    }
}

fn invert_small<const D: usize>(m: &[[f64; D]; D]) -> Option<[[f64; D]; D]> {
    let n = D;
    let mut a: Vec<f64> = m.iter().flat_map(|row| row.iter().copied()).collect();
    let mut b = vec![0.0; n * n];
    for k in 0..n {
        b[k * n + k] = 1.0;
    }
    if !la::lu_solve(&mut a, n, &mut b, n) {
        return None;
    }
    // Solutions are stored column-major: column k solves for e_k.
    Some(std::array::from_fn(|i| std::array::from_fn(|j| b[j * n + i])))
}

/// Curved mesh: flat base plus per-element geometry interpolation nodes.
#[derive(Debug, Clone)]
pub struct CurvedMesh<const D: usize, const RD: usize> {
    pub base: FlatMesh<D>,
    pub k_g: usize,
    nodes_per_elem: usize,
    /// Element-major geometry dofs, `nodes_per_elem` points per element.
    geom_dofs: Vec<[f64; D]>,
    basis: SimplexBasis<RD>,
}

/// Interpolate the closest-point projection at equispaced geometry nodes of
/// order `k_g` on every flat cell.
pub fn build_curved<const D: usize, const RD: usize>(
    surface: &LevelSetSurface<D>,
    mesh: &FlatMesh<D>,
    k_g: usize,
) -> Result<CurvedMesh<D, RD>, CurvedError> {
    assert_eq!(RD + 1, D, "reference dimension must be D - 1");
    if k_g == 0 || k_g > 4 {
        return Err(CurvedError::UnsupportedOrder(k_g));
    }
    let basis = SimplexBasis::<RD>::new(k_g);
    let nodes_per_elem = basis.node_count();
    let vertex_nodes = basis.vertex_nodes();
    let mut geom_dofs = Vec::with_capacity(mesh.cells.len() * nodes_per_elem);
    for cell in 0..mesh.cells.len() {
        let verts = mesh.cell_vertices(cell);
        for (i, node) in basis.nodes().iter().enumerate() {
            if let Some(v) = vertex_nodes.iter().position(|&vn| vn == i) {
                // Vertex nodes keep the exact flat coordinates.
                geom_dofs.push(verts[v]);
                continue;
            }
            // Affine image of the reference node, then projected to Γ.
            let mut x = verts[0];
            for a in 0..RD {
                let edge = la::sub(&verts[a + 1], &verts[0]);
                x = la::axpy(&x, node[a], &edge);
            }
            let (p, _) = surface.closest_point(&x)?;
            geom_dofs.push(p);
        }
    }
    Ok(CurvedMesh {
        base: mesh.clone(),
        k_g,
        nodes_per_elem,
        geom_dofs,
        basis,
    })
}

impl<const D: usize, const RD: usize> CurvedMesh<D, RD> {
    pub fn elem_count(&self) -> usize {
        self.base.cells.len()
    }

    pub fn geometry_nodes(&self, elem: usize) -> &[[f64; D]] {
        &self.geom_dofs[elem * self.nodes_per_elem..(elem + 1) * self.nodes_per_elem]
    }

    pub fn geometry_basis(&self) -> &crate::simplex::SimplexBasis<RD> {
        &self.basis
    }

    /// Element map alone, without derivatives.
    pub fn map_point(&self, elem: usize, xi: &[f64; RD]) -> [f64; D] {
        let n = self.nodes_per_elem;
        let dofs = self.geometry_nodes(elem);
        let mut vals = vec![0.0; n];
        self.basis.eval(xi, &mut vals);
        let mut x = [0.0; D];
        for i in 0..n {
            for c in 0..D {
                x[c] += dofs[i][c] * vals[i];
            }
        }
        x
    }

    /// Evaluate the element map and its first-order geometric data at a
    /// reference point.
    pub fn eval(&self, elem: usize, xi: &[f64; RD]) -> Result<GeomEval<D, RD>, CurvedError> {
        let n = self.nodes_per_elem;
        let dofs = self.geometry_nodes(elem);
        let mut vals = vec![0.0; n];
        let mut grads = vec![[0.0; RD]; n];
        let mut hess = vec![[[0.0; RD]; RD]; n];
        self.basis.eval(xi, &mut vals);
        self.basis.eval_grad(xi, &mut grads);
        self.basis.eval_hess(xi, &mut hess);

        let mut x = [0.0; D];
        let mut tangents = [[0.0; D]; RD];
        let mut second = [[[0.0; D]; RD]; RD];
        for i in 0..n {
            for c in 0..D {
                x[c] += dofs[i][c] * vals[i];
                for a in 0..RD {
                    tangents[a][c] += dofs[i][c] * grads[i][a];
                    for b in 0..RD {
                        second[a][b][c] += dofs[i][c] * hess[i][a][b];
                    }
                }
            }
        }

        let m = conormal(&tangents);
        let mn = la::norm(&m);
        let gram: [[f64; RD]; RD] =
            std::array::from_fn(|a| std::array::from_fn(|b| la::dot(&tangents[a], &tangents[b])));
        let measure = match RD {
            1 => gram[0][0].sqrt(),
            2 => (gram[0][0] * gram[RD - 1][RD - 1] - gram[0][RD - 1] * gram[RD - 1][0]).sqrt(),
            _ => unreachable!(),
        };
        if !(measure > 1e-14) || mn < 1e-14 {
            return Err(CurvedError::DegenerateElement(elem));
        }
        let n_h = la::scale(&m, 1.0 / mn);
        let metric_inv =
            la::metric_inverse(&gram).ok_or(CurvedError::DegenerateElement(elem))?;

        // ∂n/∂ξ_a = (Id − n ⊗ n) ∂m/∂ξ_a / |m|, then convert the reference
        // derivative to a tangential surface derivative via J⁺ = g⁻¹ Jᵀ.
        let mut dn_dxi = [[0.0; D]; RD];
        for a in 0..RD {
            let dm = conormal_derivative(&tangents, &second, a);
            let proj = la::axpy(&dm, -la::dot(&n_h, &dm), &n_h);
            dn_dxi[a] = la::scale(&proj, 1.0 / mn);
        }
        let mut grad_n_h = [[0.0; D]; D];
        for a in 0..RD {
            // Row a of J⁺.
            let mut jp = [0.0; D];
            for b in 0..RD {
                for j in 0..D {
                    jp[j] += metric_inv[a][b] * tangents[b][j];
                }
            }
            for i in 0..D {
                for j in 0..D {
                    grad_n_h[i][j] += dn_dxi[a][i] * jp[j];
                }
            }
        }

        Ok(GeomEval {
            x,
            tangents,
            measure,
            n_h,
            grad_n_h,
            metric_inv,
        })
    }

    /// Total measure of `Γ_h` with the default rule of degree `2 k_g + 2`.
    pub fn total_area(&self) -> Result<f64, CurvedError> {
        let rule = quad_rule::<RD>(2 * self.k_g + 2)?;
        let mut area = 0.0;
        for elem in 0..self.elem_count() {
            for (q, xi) in rule.points.iter().enumerate() {
                let geom = self.eval(elem, xi)?;
                area += rule.weights[q] * geom.measure;
            }
        }
        Ok(area)
    }
}

/// Unnormalized conormal of the tangent frame: 90° rotation of the tangent
/// for curves, cross product for surfaces. Orientation follows the cell
/// ordering, which the generators keep outward.
fn conormal<const D: usize, const RD: usize>(t: &[[f64; D]; RD]) -> [f64; D] {
    let mut m = [0.0; D];
    if RD == 1 && D == 2 {
        m[0] = t[0][D - 1];
        m[D - 1] = -t[0][0];
    } else if RD == 2 && D == 3 {
        let a: &[f64] = &t[0];
        let b: &[f64] = &t[RD - 1];
        m[0] = a[1] * b[D - 1] - a[D - 1] * b[1];
        m[1] = a[D - 1] * b[0] - a[0] * b[D - 1];
        m[D - 1] = a[0] * b[1] - a[1] * b[0];
    } else {
        unreachable!("unsupported dimension pair");
    }
    m
}

/// `∂m/∂ξ_a` by the product rule on the conormal construction.
fn conormal_derivative<const D: usize, const RD: usize>(
    t: &[[f64; D]; RD],
    second: &[[[f64; D]; RD]; RD],
    a: usize,
) -> [f64; D] {
    let mut dm = [0.0; D];
    if RD == 1 && D == 2 {
        let s: &[f64] = &second[0][0];
        dm[0] = s[D - 1];
        dm[D - 1] = -s[0];
    } else if RD == 2 && D == 3 {
        let cross_into = |u: &[f64], v: &[f64], out: &mut [f64; D]| {
            out[0] += u[1] * v[D - 1] - u[D - 1] * v[1];
            out[1] += u[D - 1] * v[0] - u[0] * v[D - 1];
            out[D - 1] += u[0] * v[1] - u[1] * v[0];
        };
        cross_into(&second[0][a], &t[RD - 1], &mut dm);
        cross_into(&t[0], &second[RD - 1][a], &mut dm);
    } else {
        unreachable!("unsupported dimension pair");
    }
    dm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn segment_rules_integrate_monomials_exactly() {
        for degree in 1..=20usize {
            let rule = quad_rule::<1>(degree).unwrap();
            for a in 0..=degree {
                let integral: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[0].powi(a as i32))
                    .sum();
                let exact = 1.0 / (a as f64 + 1.0);
                assert!(
                    (integral - exact).abs() < 1e-13 * exact.max(1.0),
                    "degree {degree}, monomial {a}: {integral} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn triangle_rules_integrate_monomials_exactly() {
        for degree in 1..=14usize {
            let rule = quad_rule::<2>(degree).unwrap();
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            for a in 0..=degree {
                for b in 0..=(degree - a) {
                    let integral: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!(
                        (integral - exact).abs() < 1e-13 * exact.max(1.0),
                        "degree {degree}, x^{a} y^{b}: {integral} vs {exact}"
                    );
                }
            }
        }
        let bary = quad_rule::<2>(1).unwrap();
        assert_eq!(bary.points.len(), 1);
        assert!((bary.weights[0] - 0.5).abs() < 1e-15);
        assert!(quad_rule::<2>(15).is_err());
        assert!(quad_rule::<1>(21).is_err());
    }

    fn sphere() -> LevelSetSurface<3> {
        LevelSetSurface::sphere()
    }

    fn ellipsoid() -> LevelSetSurface<3> {
        LevelSetSurface::ellipsoid(0.75, 1.25, 1.0)
    }

    #[test]
    fn order_one_geometry_reproduces_flat_mesh() {
        let e = ellipsoid();
        let mesh = FlatMesh::<3>::generate(&e, 1).unwrap();
        let cm = build_curved::<3, 2>(&e, &mesh, 1).unwrap();
        for elem in 0..cm.elem_count() {
            let nodes = cm.geometry_nodes(elem);
            let verts = mesh.cell_vertices(elem);
            for v in 0..3 {
                assert_eq!(nodes[cm.geometry_basis().vertex_nodes()[v]], verts[v]);
            }
        }
        // The affine map must reproduce flat geometry: constant normal.
        let g1 = cm.eval(0, &[0.2, 0.3]).unwrap();
        let g2 = cm.eval(0, &[0.5, 0.1]).unwrap();
        for i in 0..3 {
            assert!((g1.n_h[i] - g2.n_h[i]).abs() < 1e-14);
            for j in 0..3 {
                assert!(g1.grad_n_h[i][j].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geometry_nodes_lie_on_surface_and_match_on_shared_edges() {
        let e = ellipsoid();
        let mesh = FlatMesh::<3>::generate(&e, 1).unwrap();
        let cm = build_curved::<3, 2>(&e, &mesh, 3).unwrap();
        for elem in 0..cm.elem_count() {
            for p in cm.geometry_nodes(elem) {
                assert!(e.phi(p).abs() < 1e-11);
            }
        }
        // Collect per-edge node sets and compare across the two elements.
        let tol = 1e-12 * mesh.h;
        let mut edge_nodes: std::collections::HashMap<(usize, usize), Vec<[f64; 3]>> =
            std::collections::HashMap::new();
        for (elem, cell) in mesh.cells.iter().enumerate() {
            let nodes = cm.geometry_nodes(elem);
            let basis = cm.geometry_basis();
            for (local, refn) in basis.nodes().iter().enumerate() {
                let on_edge = |c: f64| c.abs() < 1e-14;
                let (xi, eta) = (refn[0], refn[1]);
                // Strict edge-interior nodes only: vertices are shared by
                // many elements and are exact by construction.
                let zeros = [eta, xi, xi + eta - 1.0].map(on_edge);
                let edge = match (zeros[0], zeros[1], zeros[2]) {
                    (true, false, false) => Some((cell[0], cell[1])),
                    (false, true, false) => Some((cell[0], cell[2])),
                    (false, false, true) => Some((cell[1], cell[2])),
                    _ => None,
                };
                if let Some((a, b)) = edge {
                    let key = (a.min(b), a.max(b));
                    edge_nodes.entry(key).or_default().push(nodes[local]);
                }
            }
        }
        for ((_, _), pts) in edge_nodes {
            // Each closed-surface edge is visited by exactly two elements.
            assert_eq!(pts.len() % 2, 0);
            let half = pts.len() / 2;
            for p in &pts[..half] {
                let matched = pts[half..]
                    .iter()
                    .any(|q| la::norm(&la::sub(p, q)) < tol.max(1e-13));
                assert!(matched, "unmatched shared-edge node {p:?}");
            }
        }
    }

    #[test]
    fn sphere_area_converges_to_4pi() {
        let s = sphere();
        let mesh = FlatMesh::<3>::generate(&s, 3).unwrap();
        let cm = build_curved::<3, 2>(&s, &mesh, 2).unwrap();
        let area = cm.total_area().unwrap();
        let exact = 4.0 * std::f64::consts::PI;
        assert!(
            ((area - exact) / exact).abs() < 1e-5,
            "area {area} vs {exact}"
        );
    }

    #[test]
    fn ellipse_circumference_matches_composite_gauss_oracle() {
        let (a, b) = (0.75, 1.25);
        let e = LevelSetSurface::ellipse(a, b);
        // Composite Gauss arc-length oracle over 10^6 panels.
        let (gn, gw) = gauss_legendre_01(4);
        let panels = 1_000_000usize;
        let dt = std::f64::consts::TAU / panels as f64;
        let mut oracle = 0.0;
        for k in 0..panels {
            let t0 = k as f64 * dt;
            for (x, w) in gn.iter().zip(&gw) {
                let t = t0 + x * dt;
                oracle += w * dt * ((a * t.sin()).powi(2) + (b * t.cos()).powi(2)).sqrt();
            }
        }
        let mesh = FlatMesh::<2>::generate(&e, 5).unwrap();
        let cm = build_curved::<2, 1>(&e, &mesh, 3).unwrap();
        let len = cm.total_area().unwrap();
        assert!(
            ((len - oracle) / oracle).abs() < 1e-8,
            "curved length {len} vs oracle {oracle}"
        );
    }

    #[test]
    fn normals_match_exact_normals_at_rate_kg() {
        let e = ellipsoid();
        for k_g in [1usize, 2] {
            let mut sups = Vec::new();
            for level in 1..=3usize {
                let mesh = FlatMesh::<3>::generate(&e, level).unwrap();
                let cm = build_curved::<3, 2>(&e, &mesh, k_g).unwrap();
                let rule = quad_rule::<2>(4).unwrap();
                let mut sup: f64 = 0.0;
                for elem in 0..cm.elem_count() {
                    for xi in &rule.points {
                        let g = cm.eval(elem, xi).unwrap();
                        let n = e.exact_normal(&g.x).unwrap();
                        sup = sup.max(la::norm(&la::sub(&n, &g.n_h)));
                    }
                }
                sups.push(sup);
            }
            for w in sups.windows(2) {
                let rate = (w[0] / w[1]).log2();
                assert!(
                    (rate - k_g as f64).abs() < 0.45,
                    "k_g = {k_g}: observed rate {rate}, sups {sups:?}"
                );
            }
        }
    }

    #[test]
    fn det_b_tends_to_one_at_rate_kg_plus_one() {
        let e = ellipsoid();
        let k_g = 2usize;
        let mut sups = Vec::new();
        for level in 1..=3usize {
            let mesh = FlatMesh::<3>::generate(&e, level).unwrap();
            let cm = build_curved::<3, 2>(&e, &mesh, k_g).unwrap();
            let rule = quad_rule::<2>(4).unwrap();
            let mut sup: f64 = 0.0;
            for elem in 0..cm.elem_count() {
                for xi in &rule.points {
                    let g = cm.eval(elem, xi).unwrap();
                    let lift = g.lift(&e).unwrap();
                    sup = sup.max((1.0 - lift.det_b).abs());
                }
            }
            sups.push(sup);
        }
        for w in sups.windows(2) {
            let rate = (w[0] / w[1]).log2();
            assert!(
                (rate - (k_g + 1) as f64).abs() < 0.6,
                "observed rate {rate}, sups {sups:?}"
            );
        }
    }

    #[test]
    fn lift_b_matrix_inverts_between_tangent_planes() {
        let e = ellipsoid();
        let mesh = FlatMesh::<3>::generate(&e, 1).unwrap();
        let cm = build_curved::<3, 2>(&e, &mesh, 2).unwrap();
        for elem in [0usize, 17, 40] {
            let g = cm.eval(elem, &[0.25, 0.35]).unwrap();
            let lift = g.lift(&e).unwrap();
            let binv = lift.b_inverse().unwrap();
            let p = la::tangent_projector(&lift.normal);
            let ph = la::tangent_projector(&g.n_h);
            let bbinv = la::mat_mul(&lift.b_matrix, &binv);
            let binvb = la::mat_mul(&binv, &lift.b_matrix);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((bbinv[i][j] - p[i][j]).abs() < 1e-8);
                    assert!((binvb[i][j] - ph[i][j]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn lift_b_matrix_is_the_derivative_of_the_closest_point_map() {
        let e = ellipsoid();
        let mesh = FlatMesh::<3>::generate(&e, 1).unwrap();
        let cm = build_curved::<3, 2>(&e, &mesh, 2).unwrap();
        let eps = 1e-6;
        for elem in [2usize, 31] {
            let g = cm.eval(elem, &[0.4, 0.3]).unwrap();
            let lift = g.lift(&e).unwrap();
            for a in 0..2 {
                let t = la::scale(&g.tangents[a], 1.0 / la::norm(&g.tangents[a]));
                let (pp, _) = e.closest_point(&la::axpy(&g.x, eps, &t)).unwrap();
                let (pm, _) = e.closest_point(&la::axpy(&g.x, -eps, &t)).unwrap();
                let fd = la::scale(&la::sub(&pp, &pm), 1.0 / (2.0 * eps));
                let bt = la::mat_vec(&lift.b_matrix, &t);
                for i in 0..3 {
                    assert!(
                        (bt[i] - fd[i]).abs() < 1e-7,
                        "elem {elem} dir {a} comp {i}: {} vs {}",
                        bt[i],
                        fd[i]
                    );
                }
            }
        }
    }

    #[test]
    fn grad_n_h_matches_reference_finite_differences() {
        let e = ellipsoid();
        let mesh = FlatMesh::<3>::generate(&e, 1).unwrap();
        let cm = build_curved::<3, 2>(&e, &mesh, 3).unwrap();
        let xi = [0.3, 0.25];
        let delta = 1e-5;
        for elem in [3usize, 11] {
            let g = cm.eval(elem, &xi).unwrap();
            // n_h ⊥ both slots of grad_n_h.
            let gn = la::mat_vec(&g.grad_n_h, &g.n_h);
            assert!(la::norm(&gn) < 1e-10);
            for a in 0..2 {
                let mut xp = xi;
                xp[a] += delta;
                let mut xm = xi;
                xm[a] -= delta;
                let np = cm.eval(elem, &xp).unwrap().n_h;
                let nm = cm.eval(elem, &xm).unwrap().n_h;
                // d/dξ_a n_h = grad_n_h · t_a.
                let expected = la::mat_vec(&g.grad_n_h, &g.tangents[a]);
                for i in 0..3 {
                    let fd = (np[i] - nm[i]) / (2.0 * delta);
                    assert!(
                        (fd - expected[i]).abs() < 1e-6,
                        "elem {elem} dir {a} comp {i}: fd {fd} vs {}",
                        expected[i]
                    );
                }
            }
        }
    }

    #[test]
    fn flat_measure_reproduces_triangle_area() {
        let e = ellipsoid();
        let mesh = FlatMesh::<3>::generate(&e, 0).unwrap();
        let cm = build_curved::<3, 2>(&e, &mesh, 1).unwrap();
        let rule = quad_rule::<2>(2).unwrap();
        let mut total = 0.0;
        for elem in 0..cm.elem_count() {
            for (q, xi) in rule.points.iter().enumerate() {
                total += rule.weights[q] * cm.eval(elem, xi).unwrap().measure;
            }
        }
        let mut flat = 0.0;
        for elem in 0..mesh.cells.len() {
            let [v0, v1, v2] = mesh.cell_vertices(elem);
            let c = la::cross(&la::sub(&v1, &v0), &la::sub(&v2, &v0));
            flat += 0.5 * la::norm(&c);
        }
        assert!((total - flat).abs() < 1e-12 * flat);
    }
}
