//! Geodesic ODE assembly, adaptive integration with deck normalization,
//! completeness probing and scanning, and the reduction of the transverse
//! geodesic equation to a mechanical system.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dual::Dual;
use crate::geometry::{ChartKind, ChartPoint, GeometryError, TangentVec};
use crate::ode::{Dopri5, OdeError, Options};
use crate::sampling::{standard_normal, trajectory_rng};
use crate::spacetime::Spacetime;

#[derive(Debug, Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("operation requires a rosen or brinkmann chart, got {0:?}")]
    WrongChart(ChartKind),
    #[error("initial state dimension mismatch")]
    BadInit,
}

/// Position, velocity and affine parameter along a geodesic.
#[derive(Debug, Clone, Serialize)]
pub struct GeodesicState {
    pub point: Vec<f64>,
    pub velocity: Vec<f64>,
    pub affine_param: f64,
}

impl GeodesicState {
    pub fn new(point: Vec<f64>, velocity: Vec<f64>, affine_param: f64) -> Self {
        assert_eq!(point.len(), velocity.len());
        GeodesicState {
            point,
            velocity,
            affine_param,
        }
    }

    pub fn tangent(&self) -> TangentVec {
        TangentVec::new(self.velocity.clone(), ChartPoint::new(self.point.clone()))
    }
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub min_step: f64,
    pub max_step: f64,
    /// Reference-norm speed above which a collapsing step counts as blow-up.
    pub blowup_speed: f64,
    pub max_deck_word: usize,
    /// Per-step pullback into the fundamental domain (disable only on charts
    /// that remain valid globally).
    pub deck_normalization: bool,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            min_step: 1e-12,
            max_step: 1.0,
            blowup_speed: 1e8,
            // Large steps legitimately cross many lattice cells when a
            // conserved quantity forces a big coordinate velocity; runaway
            // detection is the blow-up classifier's job, so the per-step
            // word budget stays generous.
            max_deck_word: 1 << 24,
            deck_normalization: true,
            max_steps: 20_000_000,
        }
    }
}

impl IntegratorConfig {
    fn validate(&self) {
        assert!(self.min_step > 0.0 && self.min_step < self.max_step);
        assert!(self.rel_tol > 0.0 && self.abs_tol > 0.0);
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CompletenessVerdict {
    /// Reached the requested horizon.
    CompleteUpTo { t: f64 },
    /// Step collapse with reference-norm velocity blow-up; carries the fitted
    /// power-law exponent of speed against (t_star - t) and the extrapolated
    /// escape parameter.
    EscapeAt { t_star: f64, exponent: f64 },
    /// Trajectory crossed the chart-domain boundary.
    LeftDomain { t_star: f64 },
    /// Integrator failure without the blow-up signature.
    Stalled { t: f64 },
}

impl CompletenessVerdict {
    pub fn is_complete(&self) -> bool {
        matches!(self, CompletenessVerdict::CompleteUpTo { .. })
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            CompletenessVerdict::CompleteUpTo { .. } => "complete",
            CompletenessVerdict::EscapeAt { .. } => "escape",
            CompletenessVerdict::LeftDomain { .. } => "left_domain",
            CompletenessVerdict::Stalled { .. } => "stalled",
        }
    }

    pub fn t_star(&self) -> f64 {
        match self {
            CompletenessVerdict::CompleteUpTo { t } => *t,
            CompletenessVerdict::EscapeAt { t_star, .. } => *t_star,
            CompletenessVerdict::LeftDomain { t_star } => *t_star,
            CompletenessVerdict::Stalled { t } => *t,
        }
    }
}

/// Maximum drift of the conserved quantities along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct ConservedDrift {
    pub energy: f64,
    pub clairaut: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub samples: Vec<GeodesicState>,
    pub conserved_drift: ConservedDrift,
    pub termination: CompletenessVerdict,
    /// Fitted slope of log reference speed against log t over the second half
    /// of the trajectory; `None` when too few samples exist.
    pub growth_exponent: Option<f64>,
    pub accepted_steps: usize,
}

fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Geodesic right-hand side: `(xdot, -Gamma^c_ab xdot^a xdot^b)`.
///
/// On rosen/brinkmann charts the u-acceleration vanishes identically; the
/// returned value is checked against that bound.
pub fn geodesic_rhs(
    spacetime: &Spacetime,
    state: &GeodesicState,
) -> Result<(Vec<f64>, Vec<f64>), GeodesicError> {
    let metric = spacetime.metric();
    metric.check_domain(&state.point)?;
    let n = metric.dim();
    let gamma = metric.christoffel_generic::<f64>(&state.point)?;
    let v = &state.velocity;
    let mut acc = vec![0.0; n];
    for c in 0..n {
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                s -= gamma[(c, a, b)] * v[a] * v[b];
            }
        }
        acc[c] = s;
    }
    if metric.has_implicit_uv() {
        let speed2: f64 = v.iter().map(|x| x * x).sum();
        debug_assert!(
            acc[0].abs() <= 1e-12 * (1.0 + speed2),
            "u-acceleration {} should vanish on a null-adapted chart",
            acc[0]
        );
    }
    Ok((v.clone(), acc))
}

/// Fit `log(speed) ~ exponent * log(t_star - t)` on tail samples over a grid
/// of candidate escape times; returns `(t_star, exponent)` with the best
/// coefficient of determination.
fn fit_blowup(tail: &[(f64, f64)]) -> Option<(f64, f64)> {
    // Keep one sample per distinct parameter value.
    let mut tail: Vec<(f64, f64)> = tail.to_vec();
    tail.dedup_by(|a, b| a.0 == b.0);
    let tail = &tail[..];
    if tail.len() < 8 {
        return None;
    }
    let t_last = tail.last().unwrap().0;
    let scale = t_last.abs().max(1.0);
    let mut best: Option<(f64, f64, f64)> = None;
    let mut delta = 1e-13 * scale;
    while delta <= 0.1 * scale {
        let t_star = t_last + delta;
        let pts: Vec<(f64, f64)> = tail
            .iter()
            .filter(|(t, s)| *s > 0.0 && t_star - *t > 0.0)
            .map(|(t, s)| ((t_star - t).ln(), s.ln()))
            .collect();
        if pts.len() >= 8 {
            if let Some((slope, r2)) = linear_fit(&pts) {
                if best.is_none_or(|(_, _, br2)| r2 > br2) {
                    best = Some((t_star, slope, r2));
                }
            }
        }
        delta *= 2.0;
    }
    best.map(|(t, s, _)| (t, s))
}

/// Least-squares slope and R^2 of y against x.
fn linear_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (x, y) in pts {
        sx += x;
        sy += y;
    }
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some((slope, r2))
}

const TAIL_CAPACITY: usize = 96;
const SAMPLE_CAPACITY: usize = 4096;

/// Integrate a geodesic with per-step deck normalization and conserved-drift
/// tracking; all failure modes are classified into the termination verdict.
pub fn integrate_geodesic(
    spacetime: &Spacetime,
    init: &GeodesicState,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, GeodesicError> {
    cfg.validate();
    let metric = spacetime.metric();
    let n = metric.dim();
    if init.point.len() != n || init.velocity.len() != n {
        return Err(GeodesicError::BadInit);
    }
    metric.check_domain(&init.point)?;

    let energy0 = spacetime.inner(&init.point, &init.velocity, &init.velocity)?;
    let clairaut0 = spacetime.clairaut(&init.point, &init.velocity)?;
    let mut energy_drift = 0.0_f64;
    let mut clairaut_drift = clairaut0.map(|_| 0.0_f64);

    let mut y0 = Vec::with_capacity(2 * n);
    y0.extend_from_slice(&init.point);
    y0.extend_from_slice(&init.velocity);

    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        let (coords, vel) = y.split_at(n);
        let gamma = metric
            .christoffel_generic::<f64>(coords)
            .map_err(|e| e.to_string())?;
        dy[..n].copy_from_slice(vel);
        for c in 0..n {
            let mut s = 0.0;
            for a in 0..n {
                for b in 0..n {
                    s -= gamma[(c, a, b)] * vel[a] * vel[b];
                }
            }
            dy[n + c] = s;
        }
        Ok(())
    };

    let opts = Options {
        rel_tol: cfg.rel_tol,
        abs_tol: cfg.abs_tol,
        h_min: cfg.min_step,
        h_max: cfg.max_step,
        max_steps: cfg.max_steps,
        h_init: None,
    };
    let mut stepper = Dopri5::new(rhs, init.affine_param, y0, init.affine_param + horizon, &opts);

    let mut samples: Vec<GeodesicState> = vec![GeodesicState::new(
        init.point.clone(),
        init.velocity.clone(),
        init.affine_param,
    )];
    let mut tail: Vec<(f64, f64)> = vec![(init.affine_param, euclid_norm(&init.velocity))];
    let mut speed_log: Vec<(f64, f64)> = tail.clone();

    let chart_bounded = metric.domain() != &crate::geometry::Domain::All;
    let mut termination: Option<CompletenessVerdict> = None;

    while !stepper.done() {
        if stepper.accepted >= cfg.max_steps {
            termination = Some(CompletenessVerdict::Stalled { t: stepper.t });
            break;
        }
        let step = match stepper.step() {
            Ok(s) => s,
            Err(err) => {
                let t = match err {
                    OdeError::StepSizeCollapse { t } => t,
                    OdeError::Rhs { t, .. } => t,
                };
                termination = Some(classify_stall(t, &tail, cfg));
                break;
            }
        };

        // Domain exit: locate the crossing with the dense interpolant.
        if chart_bounded && !metric.domain().contains(&stepper.y[..n]) {
            let mut lo = step.t_old;
            let mut hi = step.t_new;
            let mut buf = vec![0.0; 2 * n];
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                stepper.dense(mid, &mut buf);
                if metric.domain().contains(&buf[..n]) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            termination = Some(CompletenessVerdict::LeftDomain {
                t_star: 0.5 * (lo + hi),
            });
            break;
        }

        // Deck normalization after the accepted step.
        if cfg.deck_normalization
            && !spacetime.deck().is_empty()
            && !spacetime.fundamental_domain().contains(&stepper.y[..n])
        {
            let (coords, vel) = stepper.y.split_at(n);
            match crate::deck::normalize(
                spacetime.deck(),
                spacetime.fundamental_domain(),
                coords,
                &[vel.to_vec()],
                cfg.max_deck_word,
            ) {
                Ok(norm) => {
                    let mut y = norm.point;
                    y.extend_from_slice(&norm.vectors[0]);
                    stepper.set_state(y);
                }
                Err(_) => {
                    termination = Some(classify_stall(stepper.t, &tail, cfg));
                    break;
                }
            }
        }

        let (coords, vel) = stepper.y.split_at(n);
        let speed = euclid_norm(vel);
        let t = stepper.t;
        if tail.len() == TAIL_CAPACITY {
            tail.remove(0);
        }
        tail.push((t, speed));
        speed_log.push((t, speed));
        if speed_log.len() >= SAMPLE_CAPACITY {
            let last = *speed_log.last().unwrap();
            let mut kept: Vec<(f64, f64)> = speed_log.iter().step_by(2).copied().collect();
            if kept.last() != Some(&last) {
                kept.push(last);
            }
            speed_log = kept;
        }

        if let Ok(e) = spacetime.inner(coords, vel, vel) {
            energy_drift = energy_drift.max((e - energy0).abs());
        }
        if let (Some(c0), Some(drift)) = (clairaut0, clairaut_drift.as_mut()) {
            if let Ok(Some(c)) = spacetime.clairaut(coords, vel) {
                *drift = drift.max((c - c0).abs());
            }
        }

        samples.push(GeodesicState::new(coords.to_vec(), vel.to_vec(), t));
        if samples.len() >= SAMPLE_CAPACITY {
            // Thin by half but never drop the newest state.
            let last = samples.last().unwrap().clone();
            let mut kept: Vec<GeodesicState> = samples.iter().step_by(2).cloned().collect();
            if kept.last().map(|s| s.affine_param) != Some(last.affine_param) {
                kept.push(last);
            }
            samples = kept;
        }
    }

    let termination = termination.unwrap_or(CompletenessVerdict::CompleteUpTo {
        t: stepper.t - init.affine_param,
    });

    // Velocity-growth exponent: log speed against log t on the second half.
    let t_end = speed_log.last().map(|(t, _)| *t).unwrap_or(0.0);
    let pts: Vec<(f64, f64)> = speed_log
        .iter()
        .filter(|(t, s)| *t > 0.0 && *t >= 0.5 * t_end && *s > 0.0)
        .map(|(t, s)| (t.ln(), s.ln()))
        .collect();
    let growth_exponent = linear_fit(&pts).map(|(slope, _)| slope);

    Ok(Trajectory {
        samples,
        conserved_drift: ConservedDrift {
            energy: energy_drift,
            clairaut: clairaut_drift,
        },
        termination,
        growth_exponent,
        accepted_steps: stepper.accepted,
    })
}

/// A stalled integrator is an escape only when the speed blew up in the
/// reference norm and the tail fits a power law in (t_star - t) with
/// exponent below -1/2.
fn classify_stall(t: f64, tail: &[(f64, f64)], cfg: &IntegratorConfig) -> CompletenessVerdict {
    let last_speed = tail.last().map(|(_, s)| *s).unwrap_or(0.0);
    if last_speed >= cfg.blowup_speed {
        if let Some((t_star, exponent)) = fit_blowup(tail) {
            if exponent < -0.5 {
                return CompletenessVerdict::EscapeAt { t_star, exponent };
            }
        }
    }
    CompletenessVerdict::Stalled { t }
}

/// One row of a completeness scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub index: u64,
    pub init_point: Vec<f64>,
    pub init_velocity: Vec<f64>,
    pub verdict: CompletenessVerdict,
    pub energy_drift: f64,
    pub clairaut_drift: Option<f64>,
    pub growth_exponent: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub spacetime: String,
    pub seed: u64,
    pub horizon: f64,
    pub complete_fraction: f64,
    /// `(index, t_star)` of every escape.
    pub escapes: Vec<(u64, f64)>,
    pub max_growth_exponent: Option<f64>,
    pub rows: Vec<ScanRow>,
}

/// Seeded random initial state: position quasi-uniform over the sampling
/// region intersected with the fundamental domain, unit-speed Gaussian
/// velocity direction.
pub fn sample_initial_state(spacetime: &Spacetime, seed: u64, index: u64) -> GeodesicState {
    let mut rng = trajectory_rng(seed, index);
    let dim = spacetime.dim();
    let region = &spacetime.sample_region;
    let mut point = None;
    for _ in 0..100_000 {
        let unit: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let p = region.lerp(&unit);
        let in_chart = spacetime.metric().domain().contains(&p);
        let in_fd = spacetime.fundamental_domain().factors.is_empty()
            || spacetime.fundamental_domain().contains(&p);
        if in_chart && in_fd && spacetime.metric().matrix_at(&p).is_ok() {
            point = Some(p);
            break;
        }
    }
    let point = point.unwrap_or_else(|| {
        panic!(
            "sampling region of `{}` has negligible overlap with its domain",
            spacetime.name()
        )
    });
    let mut velocity: Vec<f64> = (0..dim).map(|_| standard_normal(&mut rng)).collect();
    let norm = euclid_norm(&velocity).max(1e-9);
    for v in &mut velocity {
        *v /= norm;
    }
    GeodesicState::new(point, velocity, 0.0)
}

/// Integrate `count` seeded trajectories in parallel and summarize.
pub fn completeness_scan(
    spacetime: &Spacetime,
    seed: u64,
    count: usize,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> ScanReport {
    let mut rows: Vec<ScanRow> = (0..count as u64)
        .into_par_iter()
        .map(|index| {
            let init = sample_initial_state(spacetime, seed, index);
            match integrate_geodesic(spacetime, &init, horizon, cfg) {
                Ok(traj) => ScanRow {
                    index,
                    init_point: init.point,
                    init_velocity: init.velocity,
                    verdict: traj.termination,
                    energy_drift: traj.conserved_drift.energy,
                    clairaut_drift: traj.conserved_drift.clairaut,
                    growth_exponent: traj.growth_exponent,
                },
                Err(_) => ScanRow {
                    index,
                    init_point: init.point,
                    init_velocity: init.velocity,
                    verdict: CompletenessVerdict::Stalled { t: 0.0 },
                    energy_drift: f64::NAN,
                    clairaut_drift: None,
                    growth_exponent: None,
                },
            }
        })
        .collect();
    rows.sort_by_key(|r| r.index);
    let complete = rows.iter().filter(|r| r.verdict.is_complete()).count();
    let escapes: Vec<(u64, f64)> = rows
        .iter()
        .filter_map(|r| match r.verdict {
            CompletenessVerdict::EscapeAt { t_star, .. } => Some((r.index, t_star)),
            _ => None,
        })
        .collect();
    let max_growth_exponent = rows
        .iter()
        .filter_map(|r| r.growth_exponent)
        .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.max(g))));
    ScanReport {
        spacetime: spacetime.name().to_string(),
        seed,
        horizon,
        complete_fraction: complete as f64 / count.max(1) as f64,
        escapes,
        max_growth_exponent,
        rows,
    }
}

/// Which of the two geodesic classes the reduction is taken in: tangent to
/// the lightlike foliation (`g(v, V) = 0`) or transverse normalized to
/// `g(v, V) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeodesicClass {
    TangentToLeaves,
    Transverse,
}

/// The transverse geodesic equation written as a mechanical system
/// `nabla^t_xdot xdot = A xdot + B` against the Levi-Civita connection of
/// the slice metric h_t.
#[derive(Debug, Clone)]
pub struct MechanicalForm {
    /// `A_ik = -2 Gamma^k_{iu}` acting on transverse velocities (zero for the
    /// tangent class).
    pub a: DMatrix<f64>,
    /// `B_k = -Gamma^k_{uu}` (zero for the tangent class).
    pub b: DVector<f64>,
    /// `Gamma(h_t)^k_ij xdot^i xdot^j`, the slice-connection term.
    pub h_connection: DVector<f64>,
}

/// Extract the mechanical-system coefficients at slice time `t` and
/// transverse position/velocity `x`, `xdot`.
pub fn mechanical_form(
    spacetime: &Spacetime,
    t: f64,
    x: &[f64],
    xdot: &[f64],
    class: GeodesicClass,
) -> Result<MechanicalForm, GeodesicError> {
    let metric = spacetime.metric();
    if !metric.has_implicit_uv() {
        return Err(GeodesicError::WrongChart(metric.chart_kind()));
    }
    let n = metric.dim();
    let m = n - 2;
    if x.len() != m || xdot.len() != m {
        return Err(GeodesicError::BadInit);
    }
    let mut point = vec![0.0; n];
    point[0] = t;
    point[2..].copy_from_slice(x);
    let gamma = metric.christoffel_generic::<f64>(&point)?;
    let mut a = DMatrix::zeros(m, m);
    let mut b = DVector::zeros(m);
    if class == GeodesicClass::Transverse {
        for k in 0..m {
            for i in 0..m {
                // Both symmetric slots of the (i, u) pair feed the velocity
                // coupling, hence the factor 2.
                a[(k, i)] = -2.0 * gamma[(k + 2, i + 2, 0)];
            }
            b[k] = -gamma[(k + 2, 0, 0)];
        }
    }
    // Slice-metric connection computed from the transverse block alone,
    // seeding duals only in the transverse directions.
    let seeded: Vec<Dual<f64>> = point
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if i >= 2 {
                Dual::variable(p, i - 2, m)
            } else {
                Dual::constant(p)
            }
        })
        .collect();
    let g_dual = metric.matrix_at(&seeded).map_err(GeometryError::Eval)?;
    let mut h = crate::linalg::SquareMat::<f64>::zeros(m);
    let mut dh = crate::linalg::Rank3::<f64>::zeros(m);
    for i in 0..m {
        for j in 0..m {
            h[(i, j)] = g_dual[(i + 2, j + 2)].re;
            for k in 0..m {
                dh[(k, i, j)] = g_dual[(i + 2, j + 2)].partial(k);
            }
        }
    }
    let hinv = h.inverse(f64::MIN_POSITIVE).ok_or_else(|| {
        GeometryError::DegenerateMetric {
            point: point.clone(),
            det: 0.0,
        }
    })?;
    let mut conn = DVector::zeros(m);
    for k in 0..m {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let mut gam = 0.0;
                for l in 0..m {
                    gam += 0.5 * hinv[(k, l)] * (dh[(i, j, l)] + dh[(j, i, l)] - dh[(l, i, j)]);
                }
                s += gam * xdot[i] * xdot[j];
            }
        }
        conn[k] = s;
    }
    Ok(MechanicalForm {
        a,
        b,
        h_connection: conn,
    })
}
