//! Small fixed-size vector and matrix helpers shared across modules.

pub(crate) fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

pub(crate) fn norm<const D: usize>(a: &[f64; D]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn add<const D: usize>(a: &[f64; D], b: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|i| a[i] + b[i])
}

pub(crate) fn sub<const D: usize>(a: &[f64; D], b: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|i| a[i] - b[i])
}

pub(crate) fn scale<const D: usize>(a: &[f64; D], s: f64) -> [f64; D] {
    std::array::from_fn(|i| a[i] * s)
}

pub(crate) fn axpy<const D: usize>(a: &[f64; D], s: f64, b: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|i| a[i] + s * b[i])
}

pub(crate) fn normalize<const D: usize>(a: &[f64; D]) -> Option<[f64; D]> {
    let n = norm(a);
    if n < 1e-14 {
        None
    } else {
        Some(scale(a, 1.0 / n))
    }
}

pub(crate) fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn mat_vec<const D: usize>(m: &[[f64; D]; D], v: &[f64; D]) -> [f64; D] {
    std::array::from_fn(|i| dot(&m[i], v))
}

pub(crate) fn mat_mul<const D: usize>(a: &[[f64; D]; D], b: &[[f64; D]; D]) -> [[f64; D]; D] {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let mut s = 0.0;
            for k in 0..D {
                s += a[i][k] * b[k][j];
            }
            s
        })
    })
}

pub(crate) fn identity<const D: usize>() -> [[f64; D]; D] {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { 1.0 } else { 0.0 }))
}

pub(crate) fn outer<const D: usize>(a: &[f64; D], b: &[f64; D]) -> [[f64; D]; D] {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i] * b[j]))
}

/// `P = Id - n ⊗ n` for a unit vector `n`.
pub(crate) fn tangent_projector<const D: usize>(n: &[f64; D]) -> [[f64; D]; D] {
    std::array::from_fn(|i| std::array::from_fn(|j| (i == j) as u8 as f64 - n[i] * n[j]))
}

/// Inverse of the first fundamental form `g = Jᵀ J`; `RD` is 1 or 2.
pub(crate) fn metric_inverse<const RD: usize>(g: &[[f64; RD]; RD]) -> Option<[[f64; RD]; RD]> {
    match RD {
        1 => {
            if g[0][0].abs() < 1e-28 {
                return None;
            }
            let mut inv = [[0.0; RD]; RD];
            inv[0][0] = 1.0 / g[0][0];
            Some(inv)
        }
        2 => {
            let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
            if det.abs() < 1e-28 {
                return None;
            }
            let mut inv = [[0.0; RD]; RD];
            inv[0][0] = g[1][1] / det;
            inv[1][1] = g[0][0] / det;
            inv[0][1] = -g[0][1] / det;
            inv[1][0] = -g[1][0] / det;
            Some(inv)
        }
        _ => None,
    }
}

/// Solve `a x = b` in place by LU with partial pivoting; `a` is `n x n`
/// row-major, `b` holds `m` right-hand sides column-major (`b[k*n + i]`).
/// Used for small reference-element systems (n ≤ 15).
pub(crate) fn lu_solve(a: &mut [f64], n: usize, b: &mut [f64], m: usize) -> bool {
    let mut perm: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let mut piv = col;
        let mut best = a[perm[col] * n + col].abs();
        for row in col + 1..n {
            let v = a[perm[row] * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best < 1e-14 {
            return false;
        }
        perm.swap(col, piv);
        let pc = perm[col];
        for row in col + 1..n {
            let pr = perm[row];
            let f = a[pr * n + col] / a[pc * n + col];
            a[pr * n + col] = f;
            for j in col + 1..n {
                a[pr * n + j] -= f * a[pc * n + j];
            }
        }
    }
    for k in 0..m {
        let rhs = &mut b[k * n..(k + 1) * n];
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = rhs[perm[i]];
            for j in 0..i {
                s -= a[perm[i] * n + j] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= a[perm[i] * n + j] * rhs[j];
            }
            rhs[i] = s / a[perm[i] * n + i];
        }
    }
    true
}
