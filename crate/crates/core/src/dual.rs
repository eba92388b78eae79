//! Forward-mode dual numbers carrying one derivative slot per chart coordinate.
//!
//! Every metric coefficient, vector-field component and DSL expression is
//! evaluated generically over [`Scalar`], so the same code path produces plain
//! values (`f64`), exact first derivatives (`Dual<f64>`) and exact second
//! derivatives (`Dual<Dual<f64>>`).

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Hard cap on chart dimension. Charts use coordinates drawn from
/// `{u, v, x1..x9}`, so eleven partial slots always suffice.
pub const MAX_DIM: usize = 11;

/// Arithmetic closed under the operations the metric DSL needs.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + std::fmt::Debug
{
    fn from_f64(x: f64) -> Self;
    /// Real (value) part, recursing through nested duals.
    fn re(&self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
}

impl Scalar for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn re(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Inline, copyable derivative slots. A length of zero means "constant": it
/// broadcasts against any direction count, which lets `from_f64` stay
/// context-free.
#[derive(Clone, Copy, Debug)]
pub struct Partials<T: Scalar> {
    data: [T; MAX_DIM],
    len: usize,
}

impl<T: Scalar> Partials<T> {
    fn empty() -> Self {
        Partials {
            data: [T::zero(); MAX_DIM],
            len: 0,
        }
    }

    fn get(&self, k: usize) -> T {
        if k < self.len {
            self.data[k]
        } else {
            T::zero()
        }
    }
}

/// Dual number with a variable number of derivative directions (at most
/// [`MAX_DIM`]).
#[derive(Clone, Copy, Debug)]
pub struct Dual<T: Scalar> {
    pub re: T,
    eps: Partials<T>,
}

impl<T: Scalar> Dual<T> {
    pub fn constant(re: T) -> Self {
        Dual {
            re,
            eps: Partials::empty(),
        }
    }

    /// Variable seeded with unit derivative in direction `dir` out of `n`.
    pub fn variable(re: T, dir: usize, n: usize) -> Self {
        assert!(dir < n && n <= MAX_DIM, "direction {dir} out of {n}");
        let mut eps = Partials::empty();
        eps.len = n;
        eps.data[dir] = T::one();
        Dual { re, eps }
    }

    pub fn partial(&self, dir: usize) -> T {
        self.eps.get(dir)
    }

    fn zip<F: Fn(T, T) -> T>(a: &Partials<T>, b: &Partials<T>, f: F) -> Partials<T> {
        let mut out = Partials::empty();
        out.len = a.len.max(b.len);
        for k in 0..out.len {
            out.data[k] = f(a.get(k), b.get(k));
        }
        out
    }

    fn map<F: Fn(T) -> T>(&self, f: F) -> Partials<T> {
        let mut out = Partials::empty();
        out.len = self.eps.len;
        for k in 0..out.len {
            out.data[k] = f(self.eps.data[k]);
        }
        out
    }
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual {
            re: self.re + rhs.re,
            eps: Self::zip(&self.eps, &rhs.eps, |a, b| a + b),
        }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual {
            re: self.re - rhs.re,
            eps: Self::zip(&self.eps, &rhs.eps, |a, b| a - b),
        }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)] // product rule
    fn mul(self, rhs: Self) -> Self {
        Dual {
            re: self.re * rhs.re,
            eps: Self::zip(&self.eps, &rhs.eps, |da, db| da * rhs.re + self.re * db),
        }
    }
}

impl<T: Scalar> Div for Dual<T> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let inv = T::one() / rhs.re;
        let inv2 = inv * inv;
        Dual {
            re: self.re * inv,
            eps: Self::zip(&self.eps, &rhs.eps, |da, db| {
                (da * rhs.re - self.re * db) * inv2
            }),
        }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            re: -self.re,
            eps: self.map(|e| -e),
        }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn from_f64(x: f64) -> Self {
        Dual::constant(T::from_f64(x))
    }
    fn re(&self) -> f64 {
        self.re.re()
    }
    fn sin(self) -> Self {
        let c = self.re.cos();
        Dual {
            re: self.re.sin(),
            eps: self.map(|e| e * c),
        }
    }
    fn cos(self) -> Self {
        let s = self.re.sin();
        Dual {
            re: self.re.cos(),
            eps: self.map(|e| -(e * s)),
        }
    }
    fn exp(self) -> Self {
        let v = self.re.exp();
        Dual {
            re: v,
            eps: self.map(|e| e * v),
        }
    }
    fn ln(self) -> Self {
        let inv = T::one() / self.re;
        Dual {
            re: self.re.ln(),
            eps: self.map(|e| e * inv),
        }
    }
    fn sqrt(self) -> Self {
        let v = self.re.sqrt();
        let half_inv = T::from_f64(0.5) / v;
        Dual {
            re: v,
            eps: self.map(|e| e * half_inv),
        }
    }
    fn tanh(self) -> Self {
        let v = self.re.tanh();
        let sech2 = T::one() - v * v;
        Dual {
            re: v,
            eps: self.map(|e| e * sech2),
        }
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Dual::constant(T::one());
        }
        let dv = T::from_f64(n as f64) * self.re.powi(n - 1);
        Dual {
            re: self.re.powi(n),
            eps: self.map(|e| e * dv),
        }
    }
}

/// Seed a chart point so every coordinate carries its own derivative slot.
pub fn seed<T: Scalar>(point: &[T]) -> Vec<Dual<T>> {
    let n = point.len();
    point
        .iter()
        .enumerate()
        .map(|(i, &p)| Dual::variable(p, i, n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn first_derivatives_of_composite() {
        // f(x, y) = sin(x*y) + exp(x)/y at (0.7, 1.3)
        let (x0, y0) = (0.7_f64, 1.3_f64);
        let p = seed(&[x0, y0]);
        let (x, y) = (p[0], p[1]);
        let f = (x * y).sin() + x.exp() / y;
        let fx = y0 * (x0 * y0).cos() + x0.exp() / y0;
        let fy = x0 * (x0 * y0).cos() - x0.exp() / (y0 * y0);
        assert!(close(f.re, (x0 * y0).sin() + x0.exp() / y0, 1e-15));
        assert!(close(f.partial(0), fx, 1e-15));
        assert!(close(f.partial(1), fy, 1e-15));
    }

    #[test]
    fn nested_duals_give_hessian() {
        // f(x, y) = x^2 * y + y^3; H = [[2y, 2x], [2x, 6y]]
        let (x0, y0) = (1.5_f64, -0.4_f64);
        let outer = seed(&[x0, y0]);
        let inner: Vec<Dual<Dual<f64>>> = outer
            .iter()
            .enumerate()
            .map(|(i, &o)| Dual::variable(o, i, 2))
            .collect();
        let (x, y) = (inner[0], inner[1]);
        let f = x.powi(2) * y + y.powi(3);
        let hxx = f.partial(0).partial(0);
        let hxy = f.partial(0).partial(1);
        let hyx = f.partial(1).partial(0);
        let hyy = f.partial(1).partial(1);
        assert!(close(hxx, 2.0 * y0, 1e-14));
        assert!(close(hxy, 2.0 * x0, 1e-14));
        assert!(close(hyx, 2.0 * x0, 1e-14));
        assert!(close(hyy, 6.0 * y0, 1e-14));
    }

    #[test]
    fn constants_broadcast() {
        let p = seed(&[2.0_f64]);
        let c = Dual::from_f64(3.0);
        let f = c * p[0] + c;
        assert_eq!(f.re, 9.0);
        assert_eq!(f.partial(0), 3.0);
    }
}
