//! Chart-level pseudo-Riemannian primitives: metric evaluation with exact
//! derivatives, Christoffel symbols, covariant derivatives, parallel
//! transport and curvature.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dual::{seed, Dual, Scalar, MAX_DIM};
use crate::expr::{EvalError, Expr};
use crate::linalg::{Rank3, Rank4, SquareMat};
use crate::ode::{self, OdeError};

/// Scale-aware degeneracy guard: |det g| below this multiple of the largest
/// entry to the dim-th power flags a degenerate sample.
pub const DEGENERACY_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point {point:?} lies outside the chart domain")]
    OutsideDomain { point: Vec<f64> },
    #[error("metric degenerate at {point:?} (|det| = {det:e})")]
    DegenerateMetric { point: Vec<f64>, det: f64 },
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("parallel transport failed at curve parameter {at}: {reason}")]
    Transport { at: f64, reason: String },
}

/// A point of a coordinate chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        ChartPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// A tangent vector attached to a chart point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    pub components: Vec<f64>,
    pub base: ChartPoint,
}

impl TangentVec {
    pub fn new(components: Vec<f64>, base: ChartPoint) -> Self {
        assert_eq!(
            components.len(),
            base.dim(),
            "tangent vector dimension must match its base point"
        );
        TangentVec { components, base }
    }
}

/// The metric matrix at a point together with its eigenvalue-sign signature
/// `(negative_count, positive_count)`.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub matrix: DMatrix<f64>,
    pub signature: (usize, usize),
}

/// Subset of the chart a metric is defined on.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    All,
    /// `coords[axis] > min`.
    HalfSpace { axis: usize, min: f64 },
    /// The listed axes must not vanish simultaneously.
    Punctured { axes: Vec<usize> },
}

impl Domain {
    pub fn contains(&self, coords: &[f64]) -> bool {
        match self {
            Domain::All => true,
            Domain::HalfSpace { axis, min } => coords[*axis] > *min,
            Domain::Punctured { axes } => axes.iter().any(|&a| coords[a] != 0.0),
        }
    }
}

/// Chart form of the metric. Rosen and Brinkmann charts order coordinates
/// `(u, v, transverse...)` and carry `g_uv = 1` implicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Brinkmann,
    Rosen,
    General,
}

/// Evaluatable symmetric-bilinear-form field on a chart. Coefficients are
/// stored as expressions on the upper triangle; evaluation is generic over
/// the scalar, which yields exact first and second derivatives via duals.
#[derive(Debug, Clone)]
pub struct MetricField {
    dim: usize,
    chart: ChartKind,
    /// Upper-triangular entries `(a, b, expr)` with `a <= b`.
    entries: Vec<(usize, usize, Expr)>,
    domain: Domain,
}

impl MetricField {
    pub fn new(
        dim: usize,
        chart: ChartKind,
        entries: Vec<(usize, usize, Expr)>,
        domain: Domain,
    ) -> Self {
        assert!((2..=MAX_DIM).contains(&dim), "chart dimension out of range");
        for (a, b, _) in &entries {
            assert!(a <= b && *b < dim, "coefficient index out of range");
        }
        MetricField {
            dim,
            chart,
            entries,
            domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chart_kind(&self) -> ChartKind {
        self.chart
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Coefficient expression for the `(a, b)` slot, if one was declared.
    pub fn coeff_expr(&self, a: usize, b: usize) -> Option<&Expr> {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        self.entries
            .iter()
            .find(|(ea, eb, _)| *ea == a && *eb == b)
            .map(|(_, _, e)| e)
    }

    /// Whether the chart carries the implicit `g_uv = 1` light-cone block.
    pub fn has_implicit_uv(&self) -> bool {
        matches!(self.chart, ChartKind::Brinkmann | ChartKind::Rosen)
    }

    pub fn check_domain(&self, coords: &[f64]) -> Result<(), GeometryError> {
        if coords.len() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                got: coords.len(),
            });
        }
        if !self.domain.contains(coords) {
            return Err(GeometryError::OutsideDomain {
                point: coords.to_vec(),
            });
        }
        Ok(())
    }

    /// Metric matrix over any scalar; `point` length must equal `dim`.
    pub fn matrix_at<S: Scalar>(&self, point: &[S]) -> Result<SquareMat<S>, EvalError> {
        let mut g = SquareMat::zeros(self.dim);
        if self.has_implicit_uv() {
            g[(0, 1)] = S::one();
            g[(1, 0)] = S::one();
        }
        for (a, b, expr) in &self.entries {
            let val = expr.eval(point)?;
            g[(*a, *b)] = val;
            g[(*b, *a)] = val;
        }
        Ok(g)
    }

    fn degeneracy_scale(&self, g: &SquareMat<f64>) -> f64 {
        let mut max = 0.0_f64;
        for r in 0..self.dim {
            for c in 0..self.dim {
                max = max.max(g[(r, c)].abs());
            }
        }
        DEGENERACY_REL_TOL * max.powi(self.dim as i32)
    }

    /// Evaluate the metric and its signature at a point.
    pub fn eval(&self, p: &ChartPoint) -> Result<MetricSample, GeometryError> {
        self.check_domain(&p.coords)?;
        let g = self.matrix_at(&p.coords)?;
        let n = self.dim;
        let mut matrix = DMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                matrix[(r, c)] = g[(r, c)];
            }
        }
        let det = g.det();
        if det.abs() <= self.degeneracy_scale(&g) {
            return Err(GeometryError::DegenerateMetric {
                point: p.coords.clone(),
                det,
            });
        }
        let eigen = matrix.clone().symmetric_eigen();
        let neg = eigen.eigenvalues.iter().filter(|&&l| l < 0.0).count();
        let pos = eigen.eigenvalues.iter().filter(|&&l| l > 0.0).count();
        Ok(MetricSample {
            matrix,
            signature: (neg, pos),
        })
    }

    /// Scalar product `g_p(x, y)` of two component vectors at `coords`.
    pub fn inner(&self, coords: &[f64], x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
        let g = self.matrix_at(coords)?;
        let mut s = 0.0;
        for a in 0..self.dim {
            for b in 0..self.dim {
                s += g[(a, b)] * x[a] * y[b];
            }
        }
        Ok(s)
    }

    /// Christoffel symbols over any scalar. With `S = Dual<f64>` the result
    /// carries the exact derivatives needed for curvature.
    pub fn christoffel_generic<S: Scalar>(&self, point: &[S]) -> Result<Rank3<S>, GeometryError> {
        let n = self.dim;
        let seeded: Vec<Dual<S>> = point
            .iter()
            .enumerate()
            .map(|(i, &p)| Dual::variable(p, i, n))
            .collect();
        let g_dual = self.matrix_at(&seeded).map_err(GeometryError::Eval)?;
        // Split value and derivative parts.
        let mut g = SquareMat::<S>::zeros(n);
        let mut dg = Rank3::<S>::zeros(n); // dg[(c, a, b)] = d_c g_ab
        for a in 0..n {
            for b in 0..n {
                g[(a, b)] = g_dual[(a, b)].re;
                for c in 0..n {
                    dg[(c, a, b)] = g_dual[(a, b)].partial(c);
                }
            }
        }
        let det = g.det();
        let mut max = 0.0_f64;
        for r in 0..n {
            for c in 0..n {
                max = max.max(g[(r, c)].re().abs());
            }
        }
        let tol = DEGENERACY_REL_TOL * max.powi(n as i32);
        if det.re().abs() <= tol {
            return Err(GeometryError::DegenerateMetric {
                point: point.iter().map(Scalar::re).collect(),
                det: det.re(),
            });
        }
        let ginv = g.inverse(f64::MIN_POSITIVE).ok_or(GeometryError::DegenerateMetric {
            point: point.iter().map(Scalar::re).collect(),
            det: det.re(),
        })?;
        let half = S::from_f64(0.5);
        let mut gamma = Rank3::<S>::zeros(n);
        for c in 0..n {
            for a in 0..n {
                for b in a..n {
                    let mut sum = S::zero();
                    for d in 0..n {
                        let term = dg[(a, b, d)] + dg[(b, a, d)] - dg[(d, a, b)];
                        sum = sum + ginv[(c, d)] * term;
                    }
                    let val = half * sum;
                    gamma[(c, a, b)] = val;
                    gamma[(c, b, a)] = val;
                }
            }
        }
        Ok(gamma)
    }

    /// Connection coefficients at a point.
    pub fn christoffel(&self, p: &ChartPoint) -> Result<ChristoffelAt, GeometryError> {
        self.check_domain(&p.coords)?;
        Ok(ChristoffelAt {
            gamma: self.christoffel_generic(&p.coords)?,
        })
    }

    /// Riemann and Ricci tensors at a point. Second derivatives of the metric
    /// are obtained by recomputing the Christoffels in a nested dual pass.
    pub fn curvature(&self, p: &ChartPoint) -> Result<CurvatureAt, GeometryError> {
        self.check_domain(&p.coords)?;
        let n = self.dim;
        let seeded = seed(&p.coords);
        let gamma_dual = self.christoffel_generic::<Dual<f64>>(&seeded)?;
        let mut gamma = Rank3::<f64>::zeros(n);
        let mut dgamma = Rank4::zeros(n); // dgamma[(e, c, a, b)] = d_e Gamma^c_ab
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    gamma[(c, a, b)] = gamma_dual[(c, a, b)].re;
                    for e in 0..n {
                        dgamma[(e, c, a, b)] = gamma_dual[(c, a, b)].partial(e);
                    }
                }
            }
        }
        // R^d_abc = d_b Gamma^d_ca - d_c Gamma^d_ba
        //           + Gamma^d_be Gamma^e_ca - Gamma^d_ce Gamma^e_ba
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
        Ok(CurvatureAt { riemann, ricci })
    }
}

/// Connection coefficients `Gamma^c_ab` at a point, symmetric in `(a, b)`.
#[derive(Debug, Clone)]
pub struct ChristoffelAt {
    pub gamma: Rank3<f64>,
}

impl ChristoffelAt {
    pub fn get(&self, c: usize, a: usize, b: usize) -> f64 {
        self.gamma[(c, a, b)]
    }
}

/// Riemann tensor `R^d_abc` (antisymmetric in its last two lower indices)
/// and the Ricci contraction `Ric_ac = R^b_abc`.
#[derive(Debug, Clone)]
pub struct CurvatureAt {
    pub riemann: Rank4,
    pub ricci: DMatrix<f64>,
}

impl CurvatureAt {
    /// Max residual of the first Bianchi identity over lower-index cycles.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.riemann.dim;
        let mut worst = 0.0_f64;
        for d in 0..n {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let cyc = self.riemann[(d, a, b, c)]
                            + self.riemann[(d, b, c, a)]
                            + self.riemann[(d, c, a, b)];
                        worst = worst.max(cyc.abs());
                    }
                }
            }
        }
        worst
    }

    pub fn ricci_max_abs(&self) -> f64 {
        self.ricci.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
    }
}

/// A vector field on a chart with expression components.
#[derive(Debug, Clone)]
pub struct VectorField {
    pub components: Vec<Expr>,
}

impl VectorField {
    pub fn new(components: Vec<Expr>) -> Self {
        VectorField { components }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn eval<S: Scalar>(&self, point: &[S]) -> Result<Vec<S>, EvalError> {
        self.components.iter().map(|e| e.eval(point)).collect()
    }

    pub fn eval_f64(&self, point: &[f64]) -> Result<Vec<f64>, EvalError> {
        self.eval(point)
    }

    /// Components and Jacobian `J[(c, a)] = d_a X^c` at a point.
    pub fn eval_with_jacobian(&self, point: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>), EvalError> {
        let n = point.len();
        let seeded = seed(point);
        let vals: Vec<Dual<f64>> = self
            .components
            .iter()
            .map(|e| e.eval(&seeded))
            .collect::<Result<_, _>>()?;
        let mut jac = DMatrix::zeros(self.components.len(), n);
        let mut out = Vec::with_capacity(self.components.len());
        for (c, d) in vals.iter().enumerate() {
            out.push(d.re);
            for a in 0..n {
                jac[(c, a)] = d.partial(a);
            }
        }
        Ok((out, jac))
    }
}

/// `(nabla_X Y)^c = X^a d_a Y^c + Gamma^c_ab X^a Y^b` at `p`.
pub fn covariant_derivative(
    field: &MetricField,
    x: &VectorField,
    y: &VectorField,
    p: &ChartPoint,
) -> Result<TangentVec, GeometryError> {
    field.check_domain(&p.coords)?;
    let n = field.dim();
    let gamma = field.christoffel_generic(&p.coords)?;
    let xv = x.eval_f64(&p.coords).map_err(GeometryError::Eval)?;
    let (yv, dy) = y.eval_with_jacobian(&p.coords).map_err(GeometryError::Eval)?;
    let mut out = vec![0.0; n];
    for c in 0..n {
        let mut val = 0.0;
        for a in 0..n {
            val += xv[a] * dy[(c, a)];
            for b in 0..n {
                val += gamma[(c, a, b)] * xv[a] * yv[b];
            }
        }
        out[c] = val;
    }
    Ok(TangentVec::new(out, p.clone()))
}

/// A curve given by parameter/position/velocity samples; interpolated with
/// cubic Hermite segments between consecutive samples.
#[derive(Debug, Clone)]
pub struct SampledCurve {
    pub params: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub velocities: Vec<Vec<f64>>,
}

impl SampledCurve {
    pub fn new(params: Vec<f64>, points: Vec<Vec<f64>>, velocities: Vec<Vec<f64>>) -> Self {
        assert!(params.len() >= 2, "need at least two samples");
        assert_eq!(params.len(), points.len());
        assert_eq!(params.len(), velocities.len());
        SampledCurve {
            params,
            points,
            velocities,
        }
    }

    /// Uniformly sampled curve from a closed-form path.
    pub fn from_path<F>(t0: f64, t1: f64, samples: usize, f: F) -> Self
    where
        F: Fn(f64) -> (Vec<f64>, Vec<f64>),
    {
        let mut params = Vec::with_capacity(samples);
        let mut points = Vec::with_capacity(samples);
        let mut velocities = Vec::with_capacity(samples);
        for i in 0..samples {
            let t = t0 + (t1 - t0) * (i as f64) / ((samples - 1) as f64);
            let (p, v) = f(t);
            params.push(t);
            points.push(p);
            velocities.push(v);
        }
        SampledCurve::new(params, points, velocities)
    }

    /// Hermite-interpolated position and velocity at parameter `t`.
    pub fn at(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let last = self.params.len() - 1;
        if t <= self.params[0] {
            return (self.points[0].clone(), self.velocities[0].clone());
        }
        if t >= self.params[last] {
            return (self.points[last].clone(), self.velocities[last].clone());
        }
        let seg = match self
            .params
            .binary_search_by(|p| p.partial_cmp(&t).unwrap())
        {
            Ok(i) => return (self.points[i].clone(), self.velocities[i].clone()),
            Err(i) => i - 1,
        };
        let (t0, t1) = (self.params[seg], self.params[seg + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let d00 = (6.0 * s2 - 6.0 * s) / h;
        let d10 = 3.0 * s2 - 4.0 * s + 1.0;
        let d01 = (-6.0 * s2 + 6.0 * s) / h;
        let d11 = 3.0 * s2 - 2.0 * s;
        let n = self.points[0].len();
        let mut p = vec![0.0; n];
        let mut v = vec![0.0; n];
        for k in 0..n {
            let (p0, p1) = (self.points[seg][k], self.points[seg + 1][k]);
            let (v0, v1) = (self.velocities[seg][k], self.velocities[seg + 1][k]);
            p[k] = h00 * p0 + h10 * h * v0 + h01 * p1 + h11 * h * v1;
            v[k] = d00 * p0 + d10 * v0 + d01 * p1 + d11 * v1;
        }
        (p, v)
    }
}

/// Result of transporting a vector along a curve.
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub vector: TangentVec,
    /// Max drift of `g(v, v)` along the curve relative to its initial value.
    pub norm_drift: f64,
}

/// Solve `vdot^c + Gamma^c_ab xdot^a v^b = 0` along the curve and return the
/// endpoint vector together with the `g(v,v)` drift.
pub fn parallel_transport(
    field: &MetricField,
    curve: &SampledCurve,
    v0: &TangentVec,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<TransportResult, GeometryError> {
    let n = field.dim();
    if v0.components.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            got: v0.components.len(),
        });
    }
    let t0 = curve.params[0];
    let t1 = *curve.params.last().unwrap();
    let g0 = field.inner(&curve.points[0], &v0.components, &v0.components)?;
    let mut drift = 0.0_f64;
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        let (x, xdot) = curve.at(t);
        let gamma = field
            .christoffel_generic(&x)
            .map_err(|e| e.to_string())?;
        for c in 0..n {
            let mut val = 0.0;
            for a in 0..n {
                for b in 0..n {
                    val -= gamma[(c, a, b)] * xdot[a] * y[b];
                }
            }
            dy[c] = val;
        }
        Ok(())
    };
    let opts = ode::Options {
        rel_tol,
        abs_tol,
        ..ode::Options::default()
    };
    let sol = ode::integrate(rhs, t0, v0.components.clone(), t1, &opts, |t, y| {
        let (x, _) = curve.at(t);
        if let Ok(g) = field.inner(&x, y, y) {
            drift = drift.max((g - g0).abs());
        }
        ode::Control::Continue
    })
    .map_err(|e| match e {
        OdeError::StepSizeCollapse { t } => GeometryError::Transport {
            at: t,
            reason: "step size collapsed".into(),
        },
        OdeError::Rhs { t, message } => GeometryError::Transport { at: t, reason: message },
    })?;
    let (end_point, _) = curve.at(t1);
    Ok(TransportResult {
        vector: TangentVec::new(sol.y, ChartPoint::new(end_point)),
        norm_drift: drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{coord_names, parse_expr};

    fn minkowski3() -> MetricField {
        // 2 du dv + dx1^2 with the u,v block implicit.
        let coords = coord_names(&["u", "v", "x1"]);
        MetricField::new(
            3,
            ChartKind::Rosen,
            vec![(2, 2, parse_expr("1", &coords).unwrap())],
            Domain::All,
        )
    }

    fn clifton_pohl() -> MetricField {
        let coords = coord_names(&["x1", "x2"]);
        MetricField::new(
            2,
            ChartKind::General,
            vec![(
                0,
                1,
                parse_expr("1/(2*(x1*x1 + x2*x2))", &coords).unwrap(),
            )],
            Domain::Punctured { axes: vec![0, 1] },
        )
    }

    #[test]
    fn minkowski_sample_and_signature() {
        let m = minkowski3();
        let s = m.eval(&ChartPoint::new(vec![0.0, 0.0, 0.0])).unwrap();
        assert_eq!(s.matrix[(0, 1)], 1.0);
        assert_eq!(s.matrix[(1, 0)], 1.0);
        assert_eq!(s.matrix[(2, 2)], 1.0);
        assert_eq!(s.signature, (1, 2));
    }

    #[test]
    fn clifton_pohl_sample() {
        let m = clifton_pohl();
        let s = m.eval(&ChartPoint::new(vec![1.0, 0.0])).unwrap();
        assert_eq!(s.matrix[(0, 1)], 0.5);
        assert_eq!(s.matrix[(1, 0)], 0.5);
        assert_eq!(s.signature, (1, 1));
    }

    #[test]
    fn pp_wave_sample() {
        // 2 du (dv + H du) + dx1^2 with H = x1^2: g_uu = 2 H.
        let coords = coord_names(&["u", "v", "x1"]);
        let m = MetricField::new(
            3,
            ChartKind::Brinkmann,
            vec![
                (0, 0, parse_expr("2*x1^2", &coords).unwrap()),
                (2, 2, parse_expr("1", &coords).unwrap()),
            ],
            Domain::All,
        );
        let s = m.eval(&ChartPoint::new(vec![0.0, 0.0, 2.0])).unwrap();
        assert_eq!(s.matrix[(0, 0)], 8.0);
        assert_eq!(s.matrix[(0, 1)], 1.0);
        assert_eq!(s.matrix[(2, 2)], 1.0);
    }

    #[test]
    fn minkowski_christoffels_vanish() {
        let m = minkowski3();
        let ch = m.christoffel(&ChartPoint::new(vec![0.3, -0.7, 2.0])).unwrap();
        for c in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    assert_eq!(ch.get(c, a, b), 0.0);
                }
            }
        }
    }

    #[test]
    fn clifton_pohl_christoffel_xxx() {
        let m = clifton_pohl();
        let ch = m.christoffel(&ChartPoint::new(vec![1.0, 0.0])).unwrap();
        assert!((ch.get(0, 0, 0) - (-2.0)).abs() < 1e-12);
        assert!(ch.get(1, 1, 1).abs() < 1e-12);
    }

    #[test]
    fn rosen_exponential_christoffels() {
        // 2 du dv + exp(2u) dx1^2
        let coords = coord_names(&["u", "v", "x1"]);
        let m = MetricField::new(
            3,
            ChartKind::Rosen,
            vec![(2, 2, parse_expr("exp(2*u)", &coords).unwrap())],
            Domain::All,
        );
        let ch = m.christoffel(&ChartPoint::new(vec![0.0, 0.0, 0.0])).unwrap();
        // Gamma^x_ux = 1, Gamma^v_xx = -1 at u = 0.
        assert!((ch.get(2, 0, 2) - 1.0).abs() < 1e-12);
        assert!((ch.get(1, 2, 2) - (-1.0)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_metric_detected() {
        let coords = coord_names(&["x1", "x2"]);
        let m = MetricField::new(
            2,
            ChartKind::General,
            vec![(0, 0, parse_expr("x1", &coords).unwrap())],
            Domain::All,
        );
        match m.eval(&ChartPoint::new(vec![1.0, 0.0])) {
            Err(GeometryError::DegenerateMetric { .. }) => {}
            other => panic!("expected degeneracy, got {other:?}"),
        }
    }

    #[test]
    fn outside_domain_rejected() {
        let m = clifton_pohl();
        match m.eval(&ChartPoint::new(vec![0.0, 0.0])) {
            Err(GeometryError::OutsideDomain { .. }) => {}
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn minkowski_curvature_zero() {
        let m = minkowski3();
        let c = m.curvature(&ChartPoint::new(vec![0.1, 0.2, 0.3])).unwrap();
        assert_eq!(c.ricci_max_abs(), 0.0);
        assert_eq!(c.bianchi_residual(), 0.0);
    }

    #[test]
    fn covariant_derivative_of_parallel_field() {
        // In 2 du dv + exp(2u) dx1^2 the field d_v is parallel.
        let coords = coord_names(&["u", "v", "x1"]);
        let m = MetricField::new(
            3,
            ChartKind::Rosen,
            vec![(2, 2, parse_expr("exp(2*u)", &coords).unwrap())],
            Domain::All,
        );
        let dv = VectorField::new(vec![
            parse_expr("0", &coords).unwrap(),
            parse_expr("1", &coords).unwrap(),
            parse_expr("0", &coords).unwrap(),
        ]);
        let x = VectorField::new(vec![
            parse_expr("1", &coords).unwrap(),
            parse_expr("u*x1", &coords).unwrap(),
            parse_expr("2", &coords).unwrap(),
        ]);
        let r = covariant_derivative(&m, &x, &dv, &ChartPoint::new(vec![0.4, -1.0, 0.9])).unwrap();
        for c in r.components {
            assert!(c.abs() < 1e-12);
        }
    }

    #[test]
    fn flat_transport_is_identity() {
        let m = minkowski3();
        let curve = SampledCurve::from_path(0.0, 1.0, 9, |t| {
            (vec![t, 2.0 * t, t * t], vec![1.0, 2.0, 2.0 * t])
        });
        let v0 = TangentVec::new(vec![0.5, -1.0, 2.0], ChartPoint::new(vec![0.0, 0.0, 0.0]));
        let r = parallel_transport(&m, &curve, &v0, 1e-10, 1e-12).unwrap();
        for (a, b) in r.vector.components.iter().zip(&v0.components) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(r.norm_drift < 1e-10);
    }
}
