//! Deck transformations (affine isometries generating the covering group of a
//! quotient spacetime) and normalization of points into a fundamental domain.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DeckError {
    #[error("deck word length bound {bound} exceeded while normalizing {point:?}")]
    WordLengthExceeded { point: Vec<f64>, bound: usize },
    #[error("no deck generator reduces the domain violation at {point:?}")]
    Stuck { point: Vec<f64> },
    #[error("deck generator matrix is not invertible")]
    SingularGenerator,
}

/// Affine chart map `p -> linear p + translation`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    pub linear: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl AffineMap {
    pub fn identity(dim: usize) -> Self {
        AffineMap {
            linear: DMatrix::identity(dim, dim),
            translation: DVector::zeros(dim),
        }
    }

    pub fn new(linear: DMatrix<f64>, translation: DVector<f64>) -> Self {
        assert_eq!(linear.nrows(), linear.ncols());
        assert_eq!(linear.nrows(), translation.len());
        AffineMap { linear, translation }
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(p);
        (&self.linear * x + &self.translation).data.into()
    }

    /// Pushforward of a tangent vector (the derivative of an affine map is its
    /// linear part).
    pub fn push(&self, v: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(v);
        (&self.linear * x).data.into()
    }

    /// `self` after `other`: `(self ∘ other)(p) = self(other(p))`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap {
            linear: &self.linear * &other.linear,
            translation: &self.linear * &other.translation + &self.translation,
        }
    }

    pub fn inverse(&self) -> Option<AffineMap> {
        let inv = self.linear.clone().try_inverse()?;
        let t = -(&inv * &self.translation);
        Some(AffineMap {
            linear: inv,
            translation: t,
        })
    }
}

/// A deck generator with its cached inverse.
#[derive(Debug, Clone)]
pub struct DeckTransform {
    pub forward: AffineMap,
    pub inverse: AffineMap,
}

impl DeckTransform {
    pub fn new(map: AffineMap) -> Result<Self, DeckError> {
        let inverse = map.inverse().ok_or(DeckError::SingularGenerator)?;
        Ok(DeckTransform {
            forward: map,
            inverse,
        })
    }

    pub fn power(&self, n: i64) -> &AffineMap {
        if n >= 0 {
            &self.forward
        } else {
            &self.inverse
        }
    }
}

/// One constraint of a fundamental domain. Factors are normalized in order;
/// earlier factors take lexicographic priority during greedy descent (needed
/// when a generator, like the Anosov twist, shears later factors).
#[derive(Debug, Clone)]
pub enum DomainFactor {
    /// Lattice coordinates of the selected axes lie in `[0, 1)`.
    Cell {
        axes: Vec<usize>,
        basis: DMatrix<f64>,
        basis_inv: DMatrix<f64>,
    },
    /// Sup-norm over the selected axes lies in `[1, ratio)`.
    Shell { axes: Vec<usize>, ratio: f64 },
}

impl DomainFactor {
    pub fn cell(axes: Vec<usize>, basis: DMatrix<f64>) -> Result<Self, DeckError> {
        let basis_inv = basis.clone().try_inverse().ok_or(DeckError::SingularGenerator)?;
        Ok(DomainFactor::Cell {
            axes,
            basis,
            basis_inv,
        })
    }

    pub fn unit_cell(axes: Vec<usize>) -> Self {
        let n = axes.len();
        DomainFactor::Cell {
            axes,
            basis: DMatrix::identity(n, n),
            basis_inv: DMatrix::identity(n, n),
        }
    }

    pub fn shell(axes: Vec<usize>, ratio: f64) -> Self {
        assert!(ratio > 1.0);
        DomainFactor::Shell { axes, ratio }
    }

    /// Zero iff the point satisfies this factor; otherwise a positive measure
    /// of how far outside it lies (roughly, generator applications needed).
    fn violation(&self, p: &[f64]) -> f64 {
        match self {
            DomainFactor::Cell { axes, basis_inv, .. } => {
                let x = DVector::from_iterator(axes.len(), axes.iter().map(|&a| p[a]));
                let c = basis_inv * x;
                c.iter()
                    .map(|&ci| {
                        if ci < 0.0 {
                            -ci
                        } else if ci >= 1.0 {
                            ci - 1.0 + f64::EPSILON
                        } else {
                            0.0
                        }
                    })
                    .sum()
            }
            DomainFactor::Shell { axes, ratio } => {
                let r = axes.iter().fold(0.0_f64, |m, &a| m.max(p[a].abs()));
                if r == 0.0 {
                    return f64::INFINITY;
                }
                let lr = r.ln() / ratio.ln();
                if lr < 0.0 {
                    -lr
                } else if lr >= 1.0 {
                    lr - 1.0 + f64::EPSILON
                } else {
                    0.0
                }
            }
        }
    }
}

/// Fundamental domain as an ordered conjunction of factors.
#[derive(Debug, Clone, Default)]
pub struct FundamentalDomain {
    pub factors: Vec<DomainFactor>,
}

impl FundamentalDomain {
    pub fn whole() -> Self {
        FundamentalDomain { factors: vec![] }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        self.factors.iter().all(|f| f.violation(p) == 0.0)
    }

    fn violations(&self, p: &[f64]) -> Vec<f64> {
        self.factors.iter().map(|f| f.violation(p)).collect()
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Result of pulling a point back into the fundamental domain.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub point: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Generator applications as `(generator index, power)` in order.
    pub word: Vec<(usize, i64)>,
    /// Composed affine map actually applied.
    pub map: AffineMap,
}

impl Normalized {
    pub fn word_length(&self) -> usize {
        self.word.iter().map(|(_, p)| p.unsigned_abs() as usize).sum()
    }
}

/// Candidate move: generator index, signed power, its map, the image point
/// and the image's violation vector.
type Candidate = (usize, i64, AffineMap, Vec<f64>, Vec<f64>);

/// Greedy lexicographic descent with binary power lifting: each round tests
/// generator powers `+-2^j` and applies the one that most reduces the domain
/// violation, so a displacement of N cells costs O(log N) map evaluations.
/// Tangent vectors ride along under the word's derivative. The word length
/// (sum of absolute powers) is bounded by `max_word`.
pub fn normalize(
    deck: &[DeckTransform],
    domain: &FundamentalDomain,
    point: &[f64],
    vectors: &[Vec<f64>],
    max_word: usize,
) -> Result<Normalized, DeckError> {
    let dim = point.len();
    let mut p = point.to_vec();
    let mut map = AffineMap::identity(dim);
    let mut word: Vec<(usize, i64)> = Vec::new();
    let mut letters = 0usize;
    if deck.is_empty() || domain.factors.is_empty() {
        return Ok(Normalized {
            point: p,
            vectors: vectors.to_vec(),
            word,
            map,
        });
    }
    let mut current = domain.violations(&p);
    while current.iter().any(|&v| v > 0.0) {
        let remaining = max_word.saturating_sub(letters);
        if remaining == 0 {
            return Err(DeckError::WordLengthExceeded {
                point: point.to_vec(),
                bound: max_word,
            });
        }
        let mut best: Option<Candidate> = None;
        for (gi, g) in deck.iter().enumerate() {
            for sign in [1i64, -1] {
                let mut step = g.power(sign).clone();
                let mut power = 1i64;
                let mut prev: Option<Vec<f64>> = None;
                loop {
                    let q = step.apply(&p);
                    let viol = domain.violations(&q);
                    let better_than_best = match &best {
                        Some((.., bv)) => lex_less(&viol, bv),
                        None => true,
                    };
                    if lex_less(&viol, &current) && better_than_best {
                        best = Some((gi, sign * power, step.clone(), q, viol.clone()));
                    }
                    // The violation is unimodal in the power for every factor
                    // kind; stop doubling once it turns upward.
                    if let Some(pv) = &prev {
                        if lex_less(pv, &viol) {
                            break;
                        }
                    }
                    if 2 * power as u128 > remaining as u128 {
                        break;
                    }
                    prev = Some(viol);
                    step = step.compose(&step);
                    power *= 2;
                }
            }
        }
        match best {
            Some((gi, signed_power, step, q, viol)) => {
                map = step.compose(&map);
                match word.last_mut() {
                    Some((last_gi, power))
                        if *last_gi == gi && power.signum() == signed_power.signum() =>
                    {
                        *power += signed_power;
                    }
                    _ => word.push((gi, signed_power)),
                }
                letters += signed_power.unsigned_abs() as usize;
                p = q;
                current = viol;
            }
            None => {
                return Err(DeckError::Stuck {
                    point: point.to_vec(),
                })
            }
        }
    }
    let vectors = vectors.iter().map(|v| map.push(v)).collect();
    Ok(Normalized {
        point: p,
        vectors,
        word,
        map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    fn translation(dim: usize, axis: usize, by: f64) -> DeckTransform {
        let mut t = DVector::zeros(dim);
        t[axis] = by;
        DeckTransform::new(AffineMap::new(DMatrix::identity(dim, dim), t)).unwrap()
    }

    #[test]
    fn lattice_translation_normalizes_coordinate() {
        let deck = vec![translation(2, 0, 1.0), translation(2, 1, 1.0)];
        let domain = FundamentalDomain {
            factors: vec![DomainFactor::unit_cell(vec![0, 1])],
        };
        let n = normalize(&deck, &domain, &[2.3, -0.4], &[vec![1.0, 2.0]], 64).unwrap();
        assert!((n.point[0] - 0.3).abs() < 1e-12);
        assert!((n.point[1] - 0.6).abs() < 1e-12);
        // Translations leave tangent vectors unchanged.
        assert_eq!(n.vectors[0], vec![1.0, 2.0]);
        assert_eq!(n.word_length(), 3);
    }

    #[test]
    fn homothety_normalizes_into_shell() {
        let linear = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 2.0]);
        let deck = vec![DeckTransform::new(AffineMap::new(linear, dvector![0.0, 0.0])).unwrap()];
        let domain = FundamentalDomain {
            factors: vec![DomainFactor::shell(vec![0, 1], 2.0)],
        };
        let n = normalize(&deck, &domain, &[4.0, 0.0], &[vec![1.0, 0.0]], 64).unwrap();
        assert!((n.point[0] - 1.0).abs() < 1e-12);
        assert_eq!(n.vectors[0][0], 0.25);
        assert_eq!(n.word, vec![(0, -2)]);
    }

    #[test]
    fn word_bound_flags_runaway() {
        let deck = vec![translation(1, 0, 1.0)];
        let domain = FundamentalDomain {
            factors: vec![DomainFactor::unit_cell(vec![0])],
        };
        match normalize(&deck, &domain, &[1000.5], &[], 64) {
            Err(DeckError::WordLengthExceeded { .. }) => {}
            other => panic!("expected word bound error, got {other:?}"),
        }
    }

    #[test]
    fn empty_deck_is_identity() {
        let domain = FundamentalDomain::whole();
        let n = normalize(&[], &domain, &[5.0, 5.0], &[], 64).unwrap();
        assert_eq!(n.point, vec![5.0, 5.0]);
        assert!(n.word.is_empty());
    }
}
