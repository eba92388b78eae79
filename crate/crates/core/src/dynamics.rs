//! Flows of vector fields on quotient spacetimes, their variational
//! (linearized) flows, and the equicontinuity diagnostic separating bounded
//! from exponentially growing differentials.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geometry::{GeometryError, VectorField};
use crate::ode::{Dopri5, Options};
use crate::sampling::trajectory_rng;
use crate::spacetime::Spacetime;
use rand::Rng;

/// Log-norm threshold under which a flow counts as bounded over the horizon.
pub const BOUNDED_MARGIN: f64 = 0.01;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("flow left the chart domain at t = {t}")]
    LeftDomain { t: f64 },
    #[error("integration failed at t = {t}: {message}")]
    Integration { t: f64, message: String },
    #[error("deck normalization failed at t = {t}")]
    Normalization { t: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Point and deck-corrected differential of the flow at a given time.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub point: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub time: f64,
}

/// Integrate `xdot = field(x)` together with the variational equation
/// `Jdot = Dfield(x) J`, `J(0) = I`, conjugating `J` by the deck derivative on
/// every normalization.
pub fn integrate_flow(
    spacetime: &Spacetime,
    field: &VectorField,
    start: &[f64],
    horizon: f64,
) -> Result<FlowState, FlowError> {
    integrate_flow_from(
        spacetime,
        field,
        FlowState {
            point: start.to_vec(),
            jacobian: DMatrix::identity(start.len(), start.len()),
            time: 0.0,
        },
        horizon,
    )
}

/// Continue a flow from a previous state for `duration` more time units.
pub fn integrate_flow_from(
    spacetime: &Spacetime,
    field: &VectorField,
    state: FlowState,
    duration: f64,
) -> Result<FlowState, FlowError> {
    let n = spacetime.dim();
    assert_eq!(field.dim(), n, "field dimension must match the chart");
    let metric = spacetime.metric();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        let coords = &y[..n];
        let (f, df) = field.eval_with_jacobian(coords).map_err(|e| e.to_string())?;
        dy[..n].copy_from_slice(&f);
        // Column-major Jacobian block: y[n + c*n + r] = J[(r, c)].
        for c in 0..n {
            for r in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += df[(r, k)] * y[n + c * n + k];
                }
                dy[n + c * n + r] = s;
            }
        }
        Ok(())
    };
    let mut y0 = Vec::with_capacity(n + n * n);
    y0.extend_from_slice(&state.point);
    for c in 0..n {
        for r in 0..n {
            y0.push(state.jacobian[(r, c)]);
        }
    }
    let opts = Options::default();
    let t_end = state.time + duration;
    let mut stepper = Dopri5::new(rhs, state.time, y0, t_end, &opts);
    let chart_bounded = metric.domain() != &crate::geometry::Domain::All;
    while !stepper.done() {
        stepper.step().map_err(|e| FlowError::Integration {
            t: state.time,
            message: e.to_string(),
        })?;
        if chart_bounded && !metric.domain().contains(&stepper.y[..n]) {
            return Err(FlowError::LeftDomain { t: stepper.t });
        }
        if !spacetime.deck().is_empty()
            && !spacetime.fundamental_domain().contains(&stepper.y[..n])
        {
            let coords = stepper.y[..n].to_vec();
            let norm = crate::deck::normalize(
                spacetime.deck(),
                spacetime.fundamental_domain(),
                &coords,
                &[],
                64,
            )
            .map_err(|_| FlowError::Normalization { t: stepper.t })?;
            let mut y = norm.point;
            // J <- D(word) * J, column by column.
            for c in 0..n {
                let col: Vec<f64> = (0..n).map(|r| stepper.y[n + c * n + r]).collect();
                y.extend(norm.map.push(&col));
            }
            stepper.set_state(y);
        }
    }
    let point = stepper.y[..n].to_vec();
    let jacobian = DMatrix::from_fn(n, n, |r, c| stepper.y[n + c * n + r]);
    Ok(FlowState {
        point,
        jacobian,
        time: t_end,
    })
}

fn operator_norm(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values[0]
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowClassification {
    Bounded,
    ExponentialGrowth { rate: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct EquicontinuityReport {
    pub spacetime: String,
    pub seed: u64,
    pub horizon: f64,
    pub probes: usize,
    /// `(t, max over probes of log operator norm of the jacobian)`.
    pub samples: Vec<(f64, f64)>,
    /// Sup of the log norm over all probes and checkpoint times.
    pub max_log_norm: f64,
    /// Least-squares slope of the max curve over `[T/2, T]`.
    pub fitted_rate: f64,
    pub classification: FlowClassification,
    /// Probes whose orbits failed to integrate.
    pub failures: usize,
}

const CHECKPOINTS: usize = 32;

/// Aggregate per-probe jacobian-norm growth curves and classify the flow.
pub fn equicontinuity_diagnostic(
    spacetime: &Spacetime,
    field: &VectorField,
    probes: usize,
    horizon: f64,
    seed: u64,
) -> EquicontinuityReport {
    let dim = spacetime.dim();
    let times: Vec<f64> = (1..=CHECKPOINTS)
        .map(|k| horizon * k as f64 / CHECKPOINTS as f64)
        .collect();
    let curves: Vec<Option<Vec<f64>>> = (0..probes as u64)
        .into_par_iter()
        .map(|index| {
            let mut rng = trajectory_rng(seed, index);
            let region = &spacetime.sample_region;
            let mut start = None;
            for _ in 0..256 {
                let unit: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
                let p = region.lerp(&unit);
                let in_fd = spacetime.fundamental_domain().factors.is_empty()
                    || spacetime.fundamental_domain().contains(&p);
                if in_fd && spacetime.metric().domain().contains(&p) {
                    start = Some(p);
                    break;
                }
            }
            let start = start?;
            let mut state = FlowState {
                point: start,
                jacobian: DMatrix::identity(dim, dim),
                time: 0.0,
            };
            let mut curve = Vec::with_capacity(times.len());
            for &t in &times {
                let duration = t - state.time;
                state = integrate_flow_from(spacetime, field, state, duration).ok()?;
                curve.push(operator_norm(&state.jacobian).ln());
            }
            Some(curve)
        })
        .collect();
    let failures = curves.iter().filter(|c| c.is_none()).count();
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let max = curves
            .iter()
            .flatten()
            .map(|c| c[k])
            .fold(f64::NEG_INFINITY, f64::max);
        samples.push((t, max));
    }
    let max_log_norm = samples
        .iter()
        .map(|(_, l)| *l)
        .fold(f64::NEG_INFINITY, f64::max);
    let fit_pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(t, _)| *t >= horizon / 2.0)
        .cloned()
        .collect();
    let fitted_rate = fit_slope(&fit_pts);
    let classification = if max_log_norm < (1.0 + BOUNDED_MARGIN).ln() {
        FlowClassification::Bounded
    } else {
        FlowClassification::ExponentialGrowth { rate: fitted_rate }
    };
    EquicontinuityReport {
        spacetime: spacetime.name().to_string(),
        seed,
        horizon,
        probes,
        samples,
        max_log_norm,
        fitted_rate,
        classification,
        failures,
    }
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pts.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build, Params};
    use crate::expr::{coord_names, parse_expr};

    fn const_field(components: &[&str], coords: &[&str]) -> VectorField {
        let names = coord_names(coords);
        VectorField::new(
            components
                .iter()
                .map(|c| parse_expr(c, &names).unwrap())
                .collect(),
        )
    }

    #[test]
    fn rosen_torus_v_flow_has_identity_jacobian() {
        let st = build("rosen_torus", &Params::new()).unwrap();
        let field = const_field(&["0", "1", "0", "0"], &["u", "v", "x1", "x2"]);
        let f = integrate_flow(&st, &field, &[0.2, 0.1, 0.3, 0.4], 100.0).unwrap();
        // Point translated in v modulo the lattice; jacobian exactly identity.
        assert!((f.point[1] - 0.1).abs() < 1e-7, "v = {}", f.point[1]);
        let id = DMatrix::identity(4, 4);
        assert_eq!(f.jacobian, id);
    }

    #[test]
    fn minkowski_translation_flow() {
        let st = build("minkowski", &Params::new()).unwrap();
        let field = const_field(&["0", "1", "0"], &["u", "v", "x1"]);
        let f = integrate_flow(&st, &field, &[0.0, 0.0, 0.0], 5.0).unwrap();
        assert!((f.point[1] - 5.0).abs() < 1e-9);
        assert_eq!(f.jacobian, DMatrix::identity(3, 3));
    }

    #[test]
    fn suspension_fibre_flow_stretches_by_eigenvalue() {
        let st = build("suspension_anosov", &Params::new()).unwrap();
        let field = const_field(&["0", "0", "1"], &["x1", "x2", "x3"]);
        let f = integrate_flow(&st, &field, &[0.13, 0.27, 0.4], 10.0).unwrap();
        let lambda = crate::catalog::anosov_eigenvalue([2, 1, 1, 1]);
        let norm = operator_norm(&f.jacobian);
        let expected = lambda.powi(10);
        assert!(
            (norm / expected - 1.0).abs() < 0.02,
            "norm {norm} vs lambda^10 {expected}"
        );
    }

    #[test]
    fn flow_group_law() {
        let st = build("suspension_anosov", &Params::new()).unwrap();
        let field = const_field(&["0", "0", "1"], &["x1", "x2", "x3"]);
        let start = [0.05, 0.11, 0.3];
        let full = integrate_flow(&st, &field, &start, 7.0).unwrap();
        let half = integrate_flow(&st, &field, &start, 3.0).unwrap();
        let rest = integrate_flow(&st, &field, &half.point, 4.0).unwrap();
        let composed = &rest.jacobian * &half.jacobian;
        let residual = (&composed - &full.jacobian).norm() / full.jacobian.norm();
        assert!(residual < 1e-7, "group law residual {residual}");
    }

    #[test]
    fn torus_flow_classified_bounded() {
        let st = build("rosen_torus", &Params::new()).unwrap();
        let field = const_field(&["0", "1", "0", "0"], &["u", "v", "x1", "x2"]);
        let rep = equicontinuity_diagnostic(&st, &field, 10, 100.0, 3);
        assert!(matches!(rep.classification, FlowClassification::Bounded));
        assert!(rep.fitted_rate.abs() < 1e-6);
        assert_eq!(rep.failures, 0);
    }

    #[test]
    fn anosov_flow_classified_exponential() {
        let st = build("suspension_anosov", &Params::new()).unwrap();
        let field = const_field(&["0", "0", "1"], &["x1", "x2", "x3"]);
        let rep = equicontinuity_diagnostic(&st, &field, 10, 20.0, 3);
        let lambda = crate::catalog::anosov_eigenvalue([2, 1, 1, 1]);
        match rep.classification {
            FlowClassification::ExponentialGrowth { rate } => {
                assert!(
                    (rate / lambda.ln() - 1.0).abs() < 0.02,
                    "rate {rate} vs ln lambda {}",
                    lambda.ln()
                );
            }
            other => panic!("expected exponential growth, got {other:?}"),
        }
    }
}
