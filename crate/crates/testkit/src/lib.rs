//! Independent oracles for exercising brinkmann-core.
//!
//! Derivative-dependent quantities (Christoffel symbols, curvature) are
//! recomputed here from *symbolic* differentiation of the coefficient
//! expressions and from central finite differences — deliberately avoiding
//! the dual-number path the library uses — so tests compare two genuinely
//! different routes. Closed-form solutions for the catalog geodesics live
//! here as well.

use brinkmann_core::expr::{BinOp, Expr, ExprKind, Func};
use brinkmann_core::geometry::MetricField;
use brinkmann_core::linalg::{Rank3, Rank4};
use nalgebra::DMatrix;

fn node(kind: ExprKind) -> Expr {
    Expr { kind, span: (0, 0) }
}

fn constant(c: f64) -> Expr {
    node(ExprKind::Const(c))
}

fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
    node(ExprKind::Bin(op, Box::new(a), Box::new(b)))
}

fn func(f: Func, a: Expr) -> Expr {
    node(ExprKind::Func(f, Box::new(a)))
}

/// Structural derivative of an expression with respect to variable `var`.
pub fn symbolic_derivative(e: &Expr, var: usize) -> Expr {
    match &e.kind {
        ExprKind::Const(_) => constant(0.0),
        ExprKind::Var(i) => constant(if *i == var { 1.0 } else { 0.0 }),
        ExprKind::Neg(a) => node(ExprKind::Neg(Box::new(symbolic_derivative(a, var)))),
        ExprKind::Bin(op, a, b) => {
            let da = symbolic_derivative(a, var);
            let db = symbolic_derivative(b, var);
            match op {
                BinOp::Add => bin(BinOp::Add, da, db),
                BinOp::Sub => bin(BinOp::Sub, da, db),
                BinOp::Mul => bin(
                    BinOp::Add,
                    bin(BinOp::Mul, da, (**b).clone()),
                    bin(BinOp::Mul, (**a).clone(), db),
                ),
                BinOp::Div => bin(
                    BinOp::Div,
                    bin(
                        BinOp::Sub,
                        bin(BinOp::Mul, da, (**b).clone()),
                        bin(BinOp::Mul, (**a).clone(), db),
                    ),
                    bin(BinOp::Mul, (**b).clone(), (**b).clone()),
                ),
                BinOp::Pow => {
                    if b.is_constant() {
                        let c = b.eval_f64(&[]).expect("constant exponent");
                        bin(
                            BinOp::Mul,
                            bin(
                                BinOp::Mul,
                                constant(c),
                                bin(BinOp::Pow, (**a).clone(), constant(c - 1.0)),
                            ),
                            da,
                        )
                    } else {
                        // a^b = exp(b log a)
                        bin(
                            BinOp::Mul,
                            bin(BinOp::Pow, (**a).clone(), (**b).clone()),
                            bin(
                                BinOp::Add,
                                bin(BinOp::Mul, db, func(Func::Log, (**a).clone())),
                                bin(
                                    BinOp::Div,
                                    bin(BinOp::Mul, (**b).clone(), da),
                                    (**a).clone(),
                                ),
                            ),
                        )
                    }
                }
            }
        }
        ExprKind::Func(f, a) => {
            let da = symbolic_derivative(a, var);
            let inner = (**a).clone();
            match f {
                Func::Sin => bin(BinOp::Mul, func(Func::Cos, inner), da),
                Func::Cos => node(ExprKind::Neg(Box::new(bin(
                    BinOp::Mul,
                    func(Func::Sin, inner),
                    da,
                )))),
                Func::Exp => bin(BinOp::Mul, func(Func::Exp, inner), da),
                Func::Log => bin(BinOp::Div, da, inner),
                Func::Sqrt => bin(
                    BinOp::Div,
                    da,
                    bin(BinOp::Mul, constant(2.0), func(Func::Sqrt, inner)),
                ),
                Func::Tanh => {
                    let t = func(Func::Tanh, inner);
                    bin(
                        BinOp::Mul,
                        bin(BinOp::Sub, constant(1.0), bin(BinOp::Mul, t.clone(), t)),
                        da,
                    )
                }
            }
        }
    }
}

/// Central finite difference of an expression.
pub fn fd_partial(e: &Expr, point: &[f64], var: usize, h: f64) -> f64 {
    let mut hi = point.to_vec();
    let mut lo = point.to_vec();
    hi[var] += h;
    lo[var] -= h;
    (e.eval_f64(&hi).unwrap() - e.eval_f64(&lo).unwrap()) / (2.0 * h)
}

/// Metric matrix via plain evaluation of the declared coefficients.
pub fn oracle_metric_matrix(field: &MetricField, point: &[f64]) -> DMatrix<f64> {
    let n = field.dim();
    let mut g = DMatrix::zeros(n, n);
    if field.has_implicit_uv() {
        g[(0, 1)] = 1.0;
        g[(1, 0)] = 1.0;
    }
    for a in 0..n {
        for b in a..n {
            if let Some(e) = field.coeff_expr(a, b) {
                let v = e.eval_f64(point).unwrap();
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
    }
    g
}

/// Coordinate derivatives of the metric via symbolic differentiation of the
/// declared coefficients; `dg[(c, a, b)] = d_c g_ab`.
pub fn oracle_metric_partials(field: &MetricField, point: &[f64]) -> Rank3<f64> {
    let n = field.dim();
    let mut dg = Rank3::zeros(n);
    for a in 0..n {
        for b in a..n {
            if let Some(e) = field.coeff_expr(a, b) {
                for c in 0..n {
                    let d = symbolic_derivative(e, c).eval_f64(point).unwrap();
                    dg[(c, a, b)] = d;
                    dg[(c, b, a)] = d;
                }
            }
        }
    }
    dg
}

fn christoffel_from_partials(
    g: &DMatrix<f64>,
    dg: &Rank3<f64>,
) -> Rank3<f64> {
    let n = g.nrows();
    let ginv = g.clone().try_inverse().expect("oracle metric invertible");
    let mut gamma = Rank3::zeros(n);
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut s = 0.0;
                for d in 0..n {
                    s += 0.5 * ginv[(c, d)] * (dg[(a, b, d)] + dg[(b, a, d)] - dg[(d, a, b)]);
                }
                gamma[(c, a, b)] = s;
            }
        }
    }
    gamma
}

/// Christoffel symbols assembled from symbolic metric derivatives and a
/// numeric inverse; independent of the library's dual-number route.
pub fn oracle_christoffel(field: &MetricField, point: &[f64]) -> Rank3<f64> {
    let g = oracle_metric_matrix(field, point);
    let dg = oracle_metric_partials(field, point);
    christoffel_from_partials(&g, &dg)
}

/// Christoffel symbols from central finite differences of the metric.
pub fn fd_christoffel(field: &MetricField, point: &[f64], h: f64) -> Rank3<f64> {
    let n = field.dim();
    let g = oracle_metric_matrix(field, point);
    let mut dg = Rank3::zeros(n);
    for c in 0..n {
        let mut hi = point.to_vec();
        let mut lo = point.to_vec();
        hi[c] += h;
        lo[c] -= h;
        let ghi = oracle_metric_matrix(field, &hi);
        let glo = oracle_metric_matrix(field, &lo);
        for a in 0..n {
            for b in 0..n {
                dg[(c, a, b)] = (ghi[(a, b)] - glo[(a, b)]) / (2.0 * h);
            }
        }
    }
    christoffel_from_partials(&g, &dg)
}

/// Riemann tensor `R^d_abc` from central finite differences of the oracle
/// Christoffels, and its Ricci contraction.
pub fn oracle_curvature(field: &MetricField, point: &[f64], h: f64) -> (Rank4, DMatrix<f64>) {
    let n = field.dim();
    let gamma = oracle_christoffel(field, point);
    let mut dgamma = Rank4::zeros(n);
    for e in 0..n {
        let mut hi = point.to_vec();
        let mut lo = point.to_vec();
        hi[e] += h;
        lo[e] -= h;
        let ghi = oracle_christoffel(field, &hi);
        let glo = oracle_christoffel(field, &lo);
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    dgamma[(e, c, a, b)] = (ghi[(c, a, b)] - glo[(c, a, b)]) / (2.0 * h);
                }
            }
        }
    }
    let mut riemann = Rank4::zeros(n);
    for d in 0..n {
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let mut val = dgamma[(b, d, c, a)] - dgamma[(c, d, b, a)];
                    for e in 0..n {
                        val += gamma[(d, b, e)] * gamma[(e, c, a)]
                            - gamma[(d, c, e)] * gamma[(e, b, a)];
                    }
                    riemann[(d, a, b, c)] = val;
                }
            }
        }
    }
    let mut ricci = DMatrix::zeros(n, n);
    for a in 0..n {
        for c in 0..n {
            let mut val = 0.0;
            for b in 0..n {
                val += riemann[(b, a, b, c)];
            }
            ricci[(a, c)] = val;
        }
    }
    (riemann, ricci)
}

/// The closed-form incomplete Clifton-Pohl geodesic `x(t) = 1/(1 - t)`,
/// `y = 0`, starting at `(1, 0)` with velocity `(1, 0)`.
pub mod clifton_pohl {
    /// Position and velocity at parameter `t < 1`.
    pub fn state(t: f64) -> ([f64; 2], [f64; 2]) {
        let x = 1.0 / (1.0 - t);
        let xdot = 1.0 / ((1.0 - t) * (1.0 - t));
        ([x, 0.0], [xdot, 0.0])
    }

    /// Relative residual of `xddot = 2 xdot^2 / x` for the closed form at `t`.
    pub fn ode_residual(t: f64) -> f64 {
        let one = 1.0 - t;
        let xddot = 2.0 / (one * one * one);
        let (p, v) = state(t);
        (xddot - 2.0 * v[0] * v[0] / p[0]) / xddot.abs().max(1.0)
    }
}

/// Closed-form transverse motion of plane-wave geodesics with quadratic
/// profile and `g(v, V) = 1`: each component solves the linear oscillator
/// `zddot = a z`, with `a` read off the oracle Christoffels rather than
/// assumed.
pub struct OscillatorOracle {
    /// Per-component coefficient `a_k` in `zddot_k = a_k z_k`.
    pub coefficients: Vec<f64>,
}

impl OscillatorOracle {
    /// Measure the coefficients from the oracle Christoffels of a
    /// brinkmann-chart metric: `zddot_k = -Gamma^k_uu` with `udot = 1`,
    /// evaluated on each transverse axis.
    pub fn from_field(field: &MetricField) -> Self {
        let n = field.dim();
        let m = n - 2;
        let mut coefficients = Vec::with_capacity(m);
        for k in 0..m {
            let mut point = vec![0.0; n];
            point[2 + k] = 1.0;
            let gamma = oracle_christoffel(field, &point);
            coefficients.push(-gamma[(2 + k, 0, 0)]);
        }
        OscillatorOracle { coefficients }
    }

    /// Component solution with initial position `z0` and velocity `zdot0`.
    pub fn component(&self, k: usize, z0: f64, zdot0: f64, t: f64) -> f64 {
        let a = self.coefficients[k];
        if a > 1e-14 {
            let w = a.sqrt();
            z0 * (w * t).cosh() + zdot0 / w * (w * t).sinh()
        } else if a < -1e-14 {
            let w = (-a).sqrt();
            z0 * (w * t).cos() + zdot0 / w * (w * t).sin()
        } else {
            z0 + zdot0 * t
        }
    }
}

/// Absolute-plus-relative closeness assertion.
pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    let err = (actual - expected).abs();
    assert!(
        err <= tol * (1.0 + expected.abs()),
        "{what}: |{actual} - {expected}| = {err:e} > {tol:e}"
    );
}

/// Largest absolute difference between two rank-3 arrays.
pub fn rank3_max_diff(a: &Rank3<f64>, b: &Rank3<f64>) -> f64 {
    let n = a.dim;
    let mut worst = 0.0_f64;
    for c in 0..n {
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((a[(c, i, j)] - b[(c, i, j)]).abs());
            }
        }
    }
    worst
}
