//! Lagrange bases at equispaced nodes on the reference simplex.
//!
//! `RD = 1` is the unit segment `[0,1]`, `RD = 2` the unit triangle
//! `{ξ ≥ 0, η ≥ 0, ξ + η ≤ 1}`. Basis coefficients come from inverting the
//! monomial Vandermonde matrix once per order; orders up to 4 stay well
//! conditioned at equispaced nodes.

use crate::linalg as la;

pub fn node_count(rd: usize, order: usize) -> usize {
    match rd {
        1 => order + 1,
        2 => (order + 1) * (order + 2) / 2,
        _ => unreachable!("reference dimension must be 1 or 2"),
    }
}

#[derive(Debug, Clone)]
pub struct SimplexBasis<const RD: usize> {
    order: usize,
    nodes: Vec<[f64; RD]>,
    exponents: Vec<[usize; RD]>,
    /// `coeffs[k * n + b]`: coefficient of monomial `b` in basis function `k`.
    coeffs: Vec<f64>,
}

impl<const RD: usize> SimplexBasis<RD> {
    pub fn new(order: usize) -> Self {
        assert!(RD == 1 || RD == 2, "reference dimension must be 1 or 2");
        assert!(order <= 4, "orders above 4 are not supported");
        let (nodes, exponents) = Self::nodes_and_exponents(order);
        let n = nodes.len();
        if order == 0 {
            // Single constant basis function.
            return Self {
                order,
                nodes,
                exponents,
                coeffs: vec![1.0],
            };
        }
        let mut vandermonde = vec![0.0; n * n];
        for (a, node) in nodes.iter().enumerate() {
            for (b, exp) in exponents.iter().enumerate() {
                vandermonde[a * n + b] = mono_val(exp, node);
            }
        }
        let mut coeffs = vec![0.0; n * n];
        for k in 0..n {
            coeffs[k * n + k] = 1.0;
        }
        let ok = la::lu_solve(&mut vandermonde, n, &mut coeffs, n);
        assert!(ok, "Vandermonde matrix is singular");
        Self {
            order,
            nodes,
            exponents,
            coeffs,
        }
    }

    fn nodes_and_exponents(order: usize) -> (Vec<[f64; RD]>, Vec<[usize; RD]>) {
        let mut nodes = Vec::new();
        let mut exponents = Vec::new();
        match RD {
            1 => {
                if order == 0 {
                    nodes.push([0.5; RD]);
                    exponents.push([0; RD]);
                } else {
                    for i in 0..=order {
                        let mut node = [0.0; RD];
                        node[0] = i as f64 / order as f64;
                        nodes.push(node);
                        let mut exp = [0; RD];
                        exp[0] = i;
                        exponents.push(exp);
                    }
                }
            }
            2 => {
                if order == 0 {
                    let mut node = [0.0; RD];
                    node[0] = 1.0 / 3.0;
                    node[1] = 1.0 / 3.0;
                    nodes.push(node);
                    exponents.push([0; RD]);
                } else {
                    for j in 0..=order {
                        for i in 0..=(order - j) {
                            let mut node = [0.0; RD];
                            node[0] = i as f64 / order as f64;
                            node[1] = j as f64 / order as f64;
                            nodes.push(node);
                            let mut exp = [0; RD];
                            exp[0] = i;
                            exp[1] = j;
                            exponents.push(exp);
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
        (nodes, exponents)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[[f64; RD]] {
        &self.nodes
    }

    /// Indices of the basis nodes sitting at the reference vertices, in
    /// vertex order (origin, then unit points along each axis).
    pub fn vertex_nodes(&self) -> Vec<usize> {
        let k = self.order.max(1);
        match RD {
            1 => vec![0, self.nodes.len() - 1],
            2 => vec![0, k, self.nodes.len() - 1],
            _ => unreachable!(),
        }
    }

    pub fn eval(&self, xi: &[f64; RD], out: &mut [f64]) {
        let n = self.nodes.len();
        debug_assert_eq!(out.len(), n);
        for k in 0..n {
            let mut s = 0.0;
            for (b, exp) in self.exponents.iter().enumerate() {
                s += self.coeffs[k * n + b] * mono_val(exp, xi);
            }
            out[k] = s;
        }
    }

    pub fn eval_grad(&self, xi: &[f64; RD], out: &mut [[f64; RD]]) {
        let n = self.nodes.len();
        debug_assert_eq!(out.len(), n);
        for k in 0..n {
            let mut g = [0.0; RD];
            for (b, exp) in self.exponents.iter().enumerate() {
                let mg = mono_grad(exp, xi);
                for a in 0..RD {
                    g[a] += self.coeffs[k * n + b] * mg[a];
                }
            }
            out[k] = g;
        }
    }

    pub fn eval_hess(&self, xi: &[f64; RD], out: &mut [[[f64; RD]; RD]]) {
        let n = self.nodes.len();
        debug_assert_eq!(out.len(), n);
        for k in 0..n {
            let mut h = [[0.0; RD]; RD];
            for (b, exp) in self.exponents.iter().enumerate() {
                let mh = mono_hess(exp, xi);
                for a in 0..RD {
                    for c in 0..RD {
                        h[a][c] += self.coeffs[k * n + b] * mh[a][c];
                    }
                }
            }
            out[k] = h;
        }
    }
}

fn powi(x: f64, p: usize) -> f64 {
    match p {
        0 => 1.0,
        _ => x.powi(p as i32),
    }
}

fn mono_val<const RD: usize>(exp: &[usize; RD], xi: &[f64; RD]) -> f64 {
    let mut v = 1.0;
    for a in 0..RD {
        v *= powi(xi[a], exp[a]);
    }
    v
}

fn mono_grad<const RD: usize>(exp: &[usize; RD], xi: &[f64; RD]) -> [f64; RD] {
    std::array::from_fn(|a| {
        if exp[a] == 0 {
            return 0.0;
        }
        let mut v = exp[a] as f64 * powi(xi[a], exp[a] - 1);
        for c in 0..RD {
            if c != a {
                v *= powi(xi[c], exp[c]);
            }
        }
        v
    })
}

fn mono_hess<const RD: usize>(exp: &[usize; RD], xi: &[f64; RD]) -> [[f64; RD]; RD] {
    std::array::from_fn(|a| {
        std::array::from_fn(|c| {
            if a == c {
                if exp[a] < 2 {
                    return 0.0;
                }
                let mut v = (exp[a] * (exp[a] - 1)) as f64 * powi(xi[a], exp[a] - 2);
                for e in 0..RD {
                    if e != a {
                        v *= powi(xi[e], exp[e]);
                    }
                }
                v
            } else {
                if exp[a] == 0 || exp[c] == 0 {
                    return 0.0;
                }
                let mut v = (exp[a] * exp[c]) as f64
                    * powi(xi[a], exp[a] - 1)
                    * powi(xi[c], exp[c] - 1);
                for e in 0..RD {
                    if e != a && e != c {
                        v *= powi(xi[e], exp[e]);
                    }
                }
                v
            }
        })
    })
}
