//! A spacetime: compiled spec, distinguished vector field, deck group and
//! fundamental domain, with construction-time sanity checks (Lorentzian
//! signature at the base point, deck transforms isometric to sampled
//! tolerance).

use thiserror::Error;

use crate::deck::{self, DeckError, DeckTransform, FundamentalDomain};
use crate::geometry::{ChartPoint, GeometryError, MetricField, TangentVec, VectorField};
use crate::sampling::{BoxRegion, Kronecker};
use crate::schema::SpacetimeSpec;

/// Residual bound for the sampled deck-isometry check.
pub const DECK_ISOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SpacetimeError {
    #[error("metric signature at base point {point:?} is {signature:?}, not Lorentzian")]
    NotLorentzian {
        point: Vec<f64>,
        signature: (usize, usize),
    },
    #[error("deck generator {index} is not an isometry: pullback residual {residual:e} at {point:?}")]
    DeckNotIsometric {
        index: usize,
        residual: f64,
        point: Vec<f64>,
    },
    #[error("no usable base point found inside the chart domain")]
    NoBasePoint,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Deck(#[from] DeckError),
}

#[derive(Debug, Clone)]
pub struct Spacetime {
    pub spec: SpacetimeSpec,
    pub base_point: Vec<f64>,
    pub sample_region: BoxRegion,
}

impl Spacetime {
    pub fn new(spec: SpacetimeSpec) -> Result<Self, SpacetimeError> {
        let sample_region = derive_sample_region(&spec);
        let base_point = match &spec.doc.base_point {
            Some(p) => p.clone(),
            None => find_base_point(&spec, &sample_region)?,
        };
        let st = Spacetime {
            spec,
            base_point,
            sample_region,
        };
        st.check_signature()?;
        st.check_deck_isometry()?;
        Ok(st)
    }

    pub fn name(&self) -> &str {
        self.spec.name()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn metric(&self) -> &MetricField {
        &self.spec.metric
    }

    pub fn v_field(&self) -> Option<&VectorField> {
        self.spec.v_field.as_ref()
    }

    pub fn deck(&self) -> &[DeckTransform] {
        &self.spec.deck
    }

    pub fn fundamental_domain(&self) -> &FundamentalDomain {
        &self.spec.fundamental_domain
    }

    pub fn claims_brinkmann(&self) -> bool {
        self.spec.doc.claims_brinkmann
    }

    pub fn claims_compact_quotient(&self) -> bool {
        self.spec.doc.claims_compact_quotient
    }

    fn check_signature(&self) -> Result<(), SpacetimeError> {
        let sample = self
            .spec
            .metric
            .eval(&ChartPoint::new(self.base_point.clone()))?;
        // Either overall-sign convention counts as Lorentzian; the
        // Levi-Civita connection is insensitive to the global sign.
        let n = self.dim();
        if sample.signature != (1, n - 1) && sample.signature != (n - 1, 1) {
            return Err(SpacetimeError::NotLorentzian {
                point: self.base_point.clone(),
                signature: sample.signature,
            });
        }
        Ok(())
    }

    fn check_deck_isometry(&self) -> Result<(), SpacetimeError> {
        let dim = self.dim();
        let metric = &self.spec.metric;
        let mut seq = Kronecker::new(2 * dim);
        let mut checked = 0usize;
        let mut tries = 0usize;
        while checked < 20 && tries < 400 {
            tries += 1;
            let q = seq.next_point();
            let p = self.sample_region.lerp(&q[..dim]);
            if !metric.domain().contains(&p) {
                continue;
            }
            let v: Vec<f64> = q[dim..].iter().map(|&t| 2.0 * t - 1.0).collect();
            let w: Vec<f64> = v.iter().rev().map(|&t| 0.5 - t).collect();
            let g_vw = match metric.inner(&p, &v, &w) {
                Ok(x) => x,
                Err(_) => continue,
            };
            for (index, d) in self.spec.deck.iter().enumerate() {
                let fp = d.forward.apply(&p);
                if !metric.domain().contains(&fp) {
                    continue;
                }
                let fv = d.forward.push(&v);
                let fw = d.forward.push(&w);
                let g_f = metric.inner(&fp, &fv, &fw)?;
                let scale = 1.0 + g_vw.abs();
                let residual = (g_f - g_vw).abs() / scale;
                if residual > DECK_ISOMETRY_TOL {
                    return Err(SpacetimeError::DeckNotIsometric {
                        index,
                        residual,
                        point: p,
                    });
                }
            }
            checked += 1;
        }
        Ok(())
    }

    /// Pull a point (with attached tangent vectors) back into the fundamental
    /// domain by a deck word; metric quantities are preserved because deck
    /// transforms are isometries.
    pub fn normalize(
        &self,
        p: &ChartPoint,
        vs: &[TangentVec],
        max_word: usize,
    ) -> Result<(ChartPoint, Vec<TangentVec>, deck::Normalized), SpacetimeError> {
        let vectors: Vec<Vec<f64>> = vs.iter().map(|v| v.components.clone()).collect();
        let n = deck::normalize(
            self.deck(),
            self.fundamental_domain(),
            &p.coords,
            &vectors,
            max_word,
        )?;
        let point = ChartPoint::new(n.point.clone());
        let tangents = n
            .vectors
            .iter()
            .map(|c| TangentVec::new(c.clone(), point.clone()))
            .collect();
        Ok((point, tangents, n))
    }

    /// Components of the distinguished field at chart coordinates.
    pub fn v_at(&self, coords: &[f64]) -> Result<Option<Vec<f64>>, GeometryError> {
        match self.v_field() {
            None => Ok(None),
            Some(f) => Ok(Some(f.eval_f64(coords).map_err(GeometryError::Eval)?)),
        }
    }

    /// `g(x, y)` at `coords`.
    pub fn inner(&self, coords: &[f64], x: &[f64], y: &[f64]) -> Result<f64, GeometryError> {
        self.spec.metric.inner(coords, x, y)
    }

    /// `g(vel, V)` at `coords`; `None` when no distinguished field is set.
    pub fn clairaut(&self, coords: &[f64], vel: &[f64]) -> Result<Option<f64>, GeometryError> {
        match self.v_at(coords)? {
            None => Ok(None),
            Some(v) => Ok(Some(self.inner(coords, vel, &v)?)),
        }
    }
}

fn derive_sample_region(spec: &SpacetimeSpec) -> BoxRegion {
    if let Some((lo, hi)) = &spec.doc.sample_region {
        return BoxRegion::new(lo.clone(), hi.clone());
    }
    let dim = spec.dim();
    let mut lo = vec![-1.0; dim];
    let mut hi = vec![1.0; dim];
    for factor in &spec.fundamental_domain.factors {
        match factor {
            crate::deck::DomainFactor::Cell { axes, basis, .. } => {
                // Bounding box of the cell {B c : c in [0,1)^k}.
                let k = axes.len();
                for (row, &axis) in axes.iter().enumerate() {
                    let mut mn = 0.0_f64;
                    let mut mx = 0.0_f64;
                    for corner in 0..(1usize << k) {
                        let mut val = 0.0;
                        for col in 0..k {
                            if corner & (1 << col) != 0 {
                                val += basis[(row, col)];
                            }
                        }
                        mn = mn.min(val);
                        mx = mx.max(val);
                    }
                    lo[axis] = mn;
                    hi[axis] = mx.max(mn + 1e-9);
                }
            }
            crate::deck::DomainFactor::Shell { axes, ratio } => {
                for &axis in axes {
                    lo[axis] = -*ratio;
                    hi[axis] = *ratio;
                }
            }
        }
    }
    BoxRegion::new(lo, hi)
}

fn find_base_point(spec: &SpacetimeSpec, region: &BoxRegion) -> Result<Vec<f64>, SpacetimeError> {
    let center: Vec<f64> = region
        .lo
        .iter()
        .zip(&region.hi)
        .map(|(a, b)| 0.5 * (a + b))
        .collect();
    let usable = |p: &[f64]| {
        spec.metric.domain().contains(p)
            && (spec.fundamental_domain.factors.is_empty() || spec.fundamental_domain.contains(p))
            && spec.metric.eval(&ChartPoint::new(p.to_vec())).is_ok()
    };
    if usable(&center) {
        return Ok(center);
    }
    let mut seq = Kronecker::new(spec.dim());
    for _ in 0..512 {
        let p = region.lerp(&seq.next_point());
        if usable(&p) {
            return Ok(p);
        }
    }
    Err(SpacetimeError::NoBasePoint)
}
