//! Embedded Dormand-Prince 5(4) integrator with dense output.
//!
//! The stepper exposes accepted steps one at a time so callers can interleave
//! event location (via the dense interpolant) and state rewrites such as deck
//! normalization. A closure-driven [`integrate`] wrapper covers the simple
//! cases.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size collapsed below the floor at t = {t}")]
    StepSizeCollapse { t: f64 },
    #[error("right-hand side failed at t = {t}: {message}")]
    Rhs { t: f64, message: String },
}

#[derive(Debug, Clone)]
pub struct Options {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: Option<f64>,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_init: None,
            h_min: 1e-13,
            h_max: 1.0,
            max_steps: 50_000_000,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// What the observer asks the driver to do after an accepted step.
pub enum Control {
    Continue,
    Stop,
}

pub struct Solution {
    pub t: f64,
    pub y: Vec<f64>,
    pub accepted_steps: usize,
    pub stopped_early: bool,
}

pub struct Dopri5<'a, F> {
    rhs: F,
    pub t: f64,
    pub y: Vec<f64>,
    pub t_end: f64,
    dir: f64,
    h: f64,
    opts: &'a Options,
    k1: Vec<f64>,
    k1_valid: bool,
    pub accepted: usize,
    // Dense-output coefficients for the most recent accepted step.
    t_old: f64,
    h_old: f64,
    cont: [Vec<f64>; 5],
}

/// Outcome of one accepted step: the interval it covers.
#[derive(Debug, Clone, Copy)]
pub struct AcceptedStep {
    pub t_old: f64,
    pub t_new: f64,
}

impl<'a, F> Dopri5<'a, F>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), String>,
{
    pub fn new(rhs: F, t0: f64, y0: Vec<f64>, t_end: f64, opts: &'a Options) -> Self {
        let n = y0.len();
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        Dopri5 {
            rhs,
            t: t0,
            y: y0,
            t_end,
            dir,
            h: 0.0,
            opts,
            k1: vec![0.0; n],
            k1_valid: false,
            accepted: 0,
            t_old: t0,
            h_old: 0.0,
            cont: [
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
                vec![0.0; n],
            ],
        }
    }

    pub fn done(&self) -> bool {
        (self.t - self.t_end) * self.dir >= 0.0
    }

    /// Replace the state (deck normalization); invalidates the FSAL slot but
    /// keeps the dense output of the already-accepted step intact.
    pub fn set_state(&mut self, y: Vec<f64>) {
        assert_eq!(y.len(), self.y.len());
        self.y = y;
        self.k1_valid = false;
    }

    fn error_norm(&self, err: &[f64], y0: &[f64], y1: &[f64]) -> f64 {
        let n = err.len();
        let mut s = 0.0;
        for i in 0..n {
            let sc = self.opts.abs_tol + self.opts.rel_tol * y0[i].abs().max(y1[i].abs());
            let q = err[i] / sc;
            s += q * q;
        }
        (s / n as f64).sqrt()
    }

    fn initial_step(&mut self) -> Result<f64, OdeError> {
        if let Some(h0) = self.opts.h_init {
            return Ok(h0.min(self.opts.h_max));
        }
        let n = self.y.len();
        let mut f0 = vec![0.0; n];
        (self.rhs)(self.t, &self.y, &mut f0).map_err(|m| OdeError::Rhs {
            t: self.t,
            message: m,
        })?;
        let mut d0 = 0.0_f64;
        let mut d1 = 0.0_f64;
        for (yi, fi) in self.y.iter().zip(&f0) {
            let sc = self.opts.abs_tol + self.opts.rel_tol * yi.abs();
            d0 += (yi / sc).powi(2);
            d1 += (fi / sc).powi(2);
        }
        let (d0, d1) = ((d0 / n as f64).sqrt(), (d1 / n as f64).sqrt());
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        self.k1 = f0;
        self.k1_valid = true;
        Ok(h0.min(self.opts.h_max).min((self.t_end - self.t).abs()))
    }

    /// Advance by one accepted step (retrying with smaller h on rejection).
    pub fn step(&mut self) -> Result<AcceptedStep, OdeError> {
        let n = self.y.len();
        if self.h == 0.0 {
            self.h = self.initial_step()?.max(self.opts.h_min);
        }
        if !self.k1_valid {
            let mut f0 = vec![0.0; n];
            (self.rhs)(self.t, &self.y, &mut f0).map_err(|m| OdeError::Rhs {
                t: self.t,
                message: m,
            })?;
            self.k1 = f0;
            self.k1_valid = true;
        }
        let mut k = vec![vec![0.0; n]; 7];
        k[0].copy_from_slice(&self.k1);
        let mut ytmp = vec![0.0; n];
        loop {
            // Clamp to land exactly on t_end.
            let remaining = (self.t_end - self.t).abs();
            let h = self.h.min(remaining).min(self.opts.h_max);
            let hs = h * self.dir;
            let mut failed: Option<String> = None;
            for stage in 1..7 {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(stage) {
                        let a = A[stage - 1][j];
                        if a != 0.0 {
                            acc += a * kj[i];
                        }
                    }
                    ytmp[i] = self.y[i] + hs * acc;
                }
                let tst = self.t + C[stage] * hs;
                let (head, tail) = k.split_at_mut(stage);
                let _ = head;
                if let Err(m) = (self.rhs)(tst, &ytmp, &mut tail[0]) {
                    failed = Some(m);
                    break;
                }
            }
            if let Some(msg) = failed {
                // Treat as a rejected step; shrink and retry.
                if h <= self.opts.h_min {
                    return Err(OdeError::Rhs {
                        t: self.t,
                        message: msg,
                    });
                }
                self.h = (h * 0.25).max(self.opts.h_min);
                continue;
            }
            // k[6] (stage 6 in 0-based) was computed with the 5th-order
            // weights, so ytmp now holds the candidate y1 and k[6] = f(t+h, y1).
            let y1 = ytmp.clone();
            let mut err = vec![0.0; n];
            for i in 0..n {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += E[j] * kj[i];
                    }
                }
                err[i] = hs * e;
            }
            let errn = self.error_norm(&err, &self.y, &y1);
            if errn <= 1.0 {
                // Accept: fill dense output, rotate FSAL, update state.
                let ydiff: Vec<f64> = (0..n).map(|i| y1[i] - self.y[i]).collect();
                for i in 0..n {
                    let bspl = hs * k[0][i] - ydiff[i];
                    self.cont[0][i] = self.y[i];
                    self.cont[1][i] = ydiff[i];
                    self.cont[2][i] = bspl;
                    self.cont[3][i] = ydiff[i] - hs * k[6][i] - bspl;
                    let mut d = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        if D[j] != 0.0 {
                            d += D[j] * kj[i];
                        }
                    }
                    self.cont[4][i] = hs * d;
                }
                self.t_old = self.t;
                self.h_old = hs;
                self.t += hs;
                if self.t == self.t_old {
                    // Step too small to advance t in floating point.
                    return Err(OdeError::StepSizeCollapse { t: self.t });
                }
                self.y = y1;
                self.k1.copy_from_slice(&k[6]);
                self.k1_valid = true;
                self.accepted += 1;
                let fac = (0.9 * errn.powf(-0.2)).clamp(0.2, 10.0);
                // Keep the controller at or above the floor: a sub-floor
                // demand must surface as a rejected h_min step (collapse),
                // not as silent acceptance of steps too small to advance t.
                self.h = (h * fac).clamp(self.opts.h_min, self.opts.h_max);
                return Ok(AcceptedStep {
                    t_old: self.t_old,
                    t_new: self.t,
                });
            }
            // Reject.
            if h <= self.opts.h_min {
                return Err(OdeError::StepSizeCollapse { t: self.t });
            }
            let fac = (0.9 * errn.powf(-0.2)).clamp(0.1, 0.9);
            self.h = (h * fac).max(self.opts.h_min);
        }
    }

    /// Evaluate the dense interpolant of the last accepted step at `t`.
    pub fn dense(&self, t: f64, out: &mut [f64]) {
        let theta = if self.h_old == 0.0 {
            0.0
        } else {
            (t - self.t_old) / self.h_old
        };
        let th1 = 1.0 - theta;
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + th1
                            * (self.cont[2][i]
                                + theta * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
    }

    pub fn last_step_size(&self) -> f64 {
        self.h_old.abs()
    }

    /// Step size the controller plans for the next step.
    pub fn next_step_size(&self) -> f64 {
        self.h
    }
}

/// Drive the stepper from `t0` to `t_end`, invoking `observer` after each
/// accepted step. The observer may stop the run early.
pub fn integrate<F, O>(
    rhs: F,
    t0: f64,
    y0: Vec<f64>,
    t_end: f64,
    opts: &Options,
    mut observer: O,
) -> Result<Solution, OdeError>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), String>,
    O: FnMut(f64, &[f64]) -> Control,
{
    let mut stepper = Dopri5::new(rhs, t0, y0, t_end, opts);
    let mut stopped = false;
    while !stepper.done() {
        if stepper.accepted >= opts.max_steps {
            return Err(OdeError::StepSizeCollapse { t: stepper.t });
        }
        stepper.step()?;
        match observer(stepper.t, &stepper.y) {
            Control::Continue => {}
            Control::Stop => {
                stopped = true;
                break;
            }
        }
    }
    Ok(Solution {
        t: stepper.t,
        y: stepper.y,
        accepted_steps: stepper.accepted,
        stopped_early: stopped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let sol = integrate(
            |_t, y, dy| {
                dy[0] = -y[0];
                Ok(())
            },
            0.0,
            vec![1.0],
            5.0,
            &Options::default(),
            |_, _| Control::Continue,
        )
        .unwrap();
        assert!((sol.y[0] - (-5.0_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let opts = Options {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            ..Options::default()
        };
        let sol = integrate(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
                Ok(())
            },
            0.0,
            vec![1.0, 0.0],
            50.0,
            &opts,
            |_, _| Control::Continue,
        )
        .unwrap();
        let energy = sol.y[0] * sol.y[0] + sol.y[1] * sol.y[1];
        assert!((energy - 1.0).abs() < 1e-9, "energy drift {energy}");
        assert!((sol.y[0] - 50.0_f64.cos()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_matches_solution_inside_step() {
        let opts = Options {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_max: 0.5,
            ..Options::default()
        };
        let mut stepper = Dopri5::new(
            |_t, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            vec![1.0],
            2.0,
            &opts,
        );
        let mut checked = 0;
        while !stepper.done() {
            let step = stepper.step().unwrap();
            let tm = 0.5 * (step.t_old + step.t_new);
            let mut ym = [0.0];
            stepper.dense(tm, &mut ym);
            assert!((ym[0] - tm.exp()).abs() < 1e-8);
            checked += 1;
        }
        assert!(checked > 2);
    }

    #[test]
    fn backwards_integration() {
        let sol = integrate(
            |t, _y, dy| {
                dy[0] = 2.0 * t;
                Ok(())
            },
            1.0,
            vec![1.0],
            -1.0,
            &Options::default(),
            |_, _| Control::Continue,
        )
        .unwrap();
        // y(t) = t^2, so y(-1) = 1.
        assert!((sol.y[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rhs_singularity_reports_failure() {
        let res = integrate(
            |t, y, dy| {
                if y[0] >= 1e12 {
                    return Err("blow-up".into());
                }
                let _ = t;
                dy[0] = y[0] * y[0];
                Ok(())
            },
            0.0,
            vec![1.0],
            2.0,
            &Options {
                h_min: 1e-12,
                ..Options::default()
            },
            |_, _| Control::Continue,
        );
        assert!(res.is_err());
    }
}
