//! Sparse symmetric positive definite linear algebra: CSR storage,
//! Jacobi-preconditioned conjugate gradients, and a dense Cholesky
//! factorization for small reference solves.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    pub n: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            y[i] = acc;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                if self.indices[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for i in 0..self.n {
            for k in self.indptr[i]..self.indptr[i + 1] {
                a[i * self.n + self.indices[k]] = self.values[k];
            }
        }
        a
    }
}

#[derive(Debug, Clone)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients. Convergence is declared on
/// the plain residual `‖Ax − b‖ ≤ rel_tol ‖b‖`, recomputed from scratch
/// whenever the recurrence residual suggests stopping.
pub fn solve_cg(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgResult, SolverError> {
    let n = a.n;
    assert_eq!(b.len(), n);
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm_b == 0.0 {
        return Ok(CgResult {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
        });
    }
    let diag = a.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return Err(SolverError::NotPositiveDefinite);
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut true_residual = norm_b;

    for iter in 0..max_iter {
        a.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(SolverError::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rec_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rec_norm <= rel_tol * norm_b {
            a.matvec(&x, &mut scratch);
            true_residual = scratch
                .iter()
                .zip(b)
                .map(|(axi, bi)| (axi - bi) * (axi - bi))
                .sum::<f64>()
                .sqrt();
            if true_residual <= rel_tol * norm_b {
                return Ok(CgResult {
                    x,
                    iterations: iter + 1,
                    residual: true_residual / norm_b,
                });
            }
            // Recurrence drifted: refresh the residual and continue.
            r.copy_from_slice(&scratch);
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri = bi - *ri;
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(SolverError::NoConvergence {
        iterations: max_iter,
        residual: true_residual / norm_b,
    })
}

/// Dense Cholesky solve for small systems, used as a reference pairing for
/// the iterative path.
pub fn solve_dense_cholesky(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = a.n;
    assert!(n <= 3000, "dense reference solve limited to small systems");
    let mut l = a.to_dense();
    // In-place LLᵀ factorization in the lower triangle.
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 {
            return Err(SolverError::NotPositiveDefinite);
        }
        let d = d.sqrt();
        l[j * n + j] = d;
        for i in j + 1..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Ok(y)
}
