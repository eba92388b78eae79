//! Deterministic sampling: a low-discrepancy Kronecker sequence for
//! certificate coverage and seeded Gaussian draws for scan initial data.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Additive Kronecker sequence based on powers of the d-dimensional
/// plastic-ratio generalization of the golden ratio. Deterministic,
/// well-spread, and trivially reproducible.
pub struct Kronecker {
    alphas: Vec<f64>,
    state: Vec<f64>,
}

impl Kronecker {
    pub fn new(dim: usize) -> Self {
        // phi_d is the unique real root of x^(d+1) = x + 1.
        let mut phi = 2.0_f64;
        for _ in 0..40 {
            phi = (1.0 + phi).powf(1.0 / (dim as f64 + 1.0));
        }
        let alphas: Vec<f64> = (1..=dim).map(|k| (1.0 / phi.powi(k as i32)) % 1.0).collect();
        Kronecker {
            alphas,
            state: vec![0.5; dim],
        }
    }

    /// Next point in the unit cube `[0,1)^d`.
    pub fn next_point(&mut self) -> Vec<f64> {
        for (s, a) in self.state.iter_mut().zip(&self.alphas) {
            *s = (*s + a) % 1.0;
        }
        self.state.clone()
    }
}

/// Axis-aligned box used as a sampling region.
#[derive(Debug, Clone)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        BoxRegion { lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lerp(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(&t, (&lo, &hi))| lo + t * (hi - lo))
            .collect()
    }

    /// `count` quasi-random points inside the box.
    pub fn quasi_random(&self, count: usize) -> Vec<Vec<f64>> {
        let mut seq = Kronecker::new(self.dim());
        (0..count).map(|_| self.lerp(&seq.next_point())).collect()
    }
}

/// Seeded RNG for the trajectory with the given index; deterministic and
/// independent across indices so scans can be distributed over workers.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index.wrapping_add(1));
    r
}

/// Standard normal via Box-Muller (avoids distribution-crate dependency).
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}
