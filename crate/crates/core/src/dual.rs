//! Forward-mode automatic differentiation jets.
//!
//! `Dual1` carries value and gradient, `Dual2` additionally the Hessian.
//! Generic field expressions are written once against [`Scalar`] and
//! evaluated with `f64`, `Dual1`, or `Dual2` to obtain exact derivatives of
//! manufactured fields up to second order.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_f64(v: f64) -> Self;
    fn sqrt(self) -> Self;
    fn value(self) -> f64;

    fn powi(self, n: u32) -> Self {
        let mut out = Self::from_f64(1.0);
        for _ in 0..n {
            out = out * self;
        }
        out
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    fn value(self) -> f64 {
        self
    }
}

/// Value and gradient with respect to `D` independent variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual1<const D: usize> {
    pub v: f64,
    pub d: [f64; D],
}

impl<const D: usize> Dual1<D> {
    pub fn constant(v: f64) -> Self {
        Dual1 { v, d: [0.0; D] }
    }

    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = [0.0; D];
        d[i] = 1.0;
        Dual1 { v, d }
    }

    pub fn seed(x: &[f64; D]) -> [Self; D] {
        std::array::from_fn(|i| Dual1::variable(x[i], i))
    }
}

impl<const D: usize> Add for Dual1<D> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual1 {
            v: self.v + o.v,
            d: std::array::from_fn(|i| self.d[i] + o.d[i]),
        }
    }
}

impl<const D: usize> Sub for Dual1<D> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual1 {
            v: self.v - o.v,
            d: std::array::from_fn(|i| self.d[i] - o.d[i]),
        }
    }
}

impl<const D: usize> Mul for Dual1<D> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual1 {
            v: self.v * o.v,
            d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]),
        }
    }
}

impl<const D: usize> Div for Dual1<D> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        Dual1 {
            v,
            d: std::array::from_fn(|i| (self.d[i] - v * o.d[i]) * inv),
        }
    }
}

impl<const D: usize> Neg for Dual1<D> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual1 {
            v: -self.v,
            d: std::array::from_fn(|i| -self.d[i]),
        }
    }
}

impl<const D: usize> Scalar for Dual1<D> {
    fn from_f64(v: f64) -> Self {
        Dual1::constant(v)
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let half = 0.5 / s;
        Dual1 {
            v: s,
            d: std::array::from_fn(|i| self.d[i] * half),
        }
    }

    fn value(self) -> f64 {
        self.v
    }
}

/// Value, gradient, and Hessian with respect to `D` independent variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual2<const D: usize> {
    pub v: f64,
    pub d: [f64; D],
    pub h: [[f64; D]; D],
}

impl<const D: usize> Dual2<D> {
    pub fn constant(v: f64) -> Self {
        Dual2 {
            v,
            d: [0.0; D],
            h: [[0.0; D]; D],
        }
    }

    pub fn variable(v: f64, i: usize) -> Self {
        let mut d = [0.0; D];
        d[i] = 1.0;
        Dual2 {
            v,
            d,
            h: [[0.0; D]; D],
        }
    }

    pub fn seed(x: &[f64; D]) -> [Self; D] {
        std::array::from_fn(|i| Dual2::variable(x[i], i))
    }
}

impl<const D: usize> Add for Dual2<D> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Dual2 {
            v: self.v + o.v,
            d: std::array::from_fn(|i| self.d[i] + o.d[i]),
            h: std::array::from_fn(|i| std::array::from_fn(|j| self.h[i][j] + o.h[i][j])),
        }
    }
}

impl<const D: usize> Sub for Dual2<D> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Dual2 {
            v: self.v - o.v,
            d: std::array::from_fn(|i| self.d[i] - o.d[i]),
            h: std::array::from_fn(|i| std::array::from_fn(|j| self.h[i][j] - o.h[i][j])),
        }
    }
}

impl<const D: usize> Mul for Dual2<D> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Dual2 {
            v: self.v * o.v,
            d: std::array::from_fn(|i| self.d[i] * o.v + self.v * o.d[i]),
            h: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    self.h[i][j] * o.v
                        + self.d[i] * o.d[j]
                        + self.d[j] * o.d[i]
                        + self.v * o.h[i][j]
                })
            }),
        }
    }
}

impl<const D: usize> Div for Dual2<D> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        // a / b = a * inv(b) with inv(b) expanded to second order.
        let iv = 1.0 / o.v;
        let inv = Dual2 {
            v: iv,
            d: std::array::from_fn(|i| -o.d[i] * iv * iv),
            h: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    (2.0 * o.d[i] * o.d[j] * iv - o.h[i][j]) * iv * iv
                })
            }),
        };
        self * inv
    }
}

impl<const D: usize> Neg for Dual2<D> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual2 {
            v: -self.v,
            d: std::array::from_fn(|i| -self.d[i]),
            h: std::array::from_fn(|i| std::array::from_fn(|j| -self.h[i][j])),
        }
    }
}

impl<const D: usize> Scalar for Dual2<D> {
    fn from_f64(v: f64) -> Self {
        Dual2::constant(v)
    }

    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let g = 0.5 / s;
        Dual2 {
            v: s,
            d: std::array::from_fn(|i| self.d[i] * g),
            h: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    self.h[i][j] * g - self.d[i] * self.d[j] / (4.0 * s * s * s)
                })
            }),
        }
    }

    fn value(self) -> f64 {
        self.v
    }
}
