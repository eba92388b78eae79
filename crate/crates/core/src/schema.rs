//! JSON ingestion format for spacetime specifications and its compilation
//! into evaluatable metric fields, deck groups and fundamental domains.
//!
//! Coefficient keys:
//! - `"i,j"` (0-based coordinate indices, `i <= j`): the metric matrix entry
//!   `g_ij`. In `rosen`/`brinkmann` charts only transverse pairs (both
//!   indices >= 2) are accepted; the light-cone block `g_uv = 1` is implicit.
//! - `"H"` (brinkmann only): the `du^2` coefficient, stored as `g_uu = H`.
//! - `"Wk"` (brinkmann only, `k >= 1`): the `du dx^k` coefficient; the
//!   symmetric matrix entries are `g_{u,x^k} = W_k / 2`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deck::{AffineMap, DeckTransform, DomainFactor, FundamentalDomain};
use crate::expr::{parse_expr, Expr, ParseError, RESERVED_COORDS};
use crate::geometry::{ChartKind, Domain, MetricField, VectorField};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {source}")]
    Expr {
        path: String,
        #[source]
        source: ParseError,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn schema_err<T>(path: &str, message: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError::Schema {
        path: path.to_string(),
        message: message.into(),
    })
}

/// Raw JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecDoc {
    pub name: String,
    pub chart_kind: ChartKind,
    pub dimension: usize,
    pub coordinates: Vec<String>,
    /// Expression strings keyed as documented on this module.
    pub coefficients: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub deck: Vec<DeckDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fundamental_domain: Vec<DomainFactorDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart_domain: Option<Domain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distinguished_field: Option<Vec<String>>,
    #[serde(default)]
    pub claims_brinkmann: bool,
    #[serde(default)]
    pub claims_compact_quotient: bool,
    /// Optional axis-aligned sampling box `[lo, hi]` per coordinate, used by
    /// certificates and scans on non-compact charts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_region: Option<(Vec<f64>, Vec<f64>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeckDoc {
    pub linear: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainFactorDoc {
    Cell {
        axes: Vec<usize>,
        /// Lattice basis given column-wise; identity if omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        basis: Option<Vec<Vec<f64>>>,
    },
    Shell {
        axes: Vec<usize>,
        ratio: f64,
    },
}

/// Validated and compiled spacetime specification.
#[derive(Debug, Clone)]
pub struct SpacetimeSpec {
    pub doc: SpecDoc,
    pub metric: MetricField,
    pub v_field: Option<VectorField>,
    pub deck: Vec<DeckTransform>,
    pub fundamental_domain: FundamentalDomain,
}

impl SpacetimeSpec {
    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn dim(&self) -> usize {
        self.doc.dimension
    }
}

fn parse_coeff_key(
    key: &str,
    kind: ChartKind,
    dim: usize,
) -> Result<(usize, usize, bool), SpecError> {
    let path = format!("coefficients.{key}");
    if key == "H" {
        return match kind {
            ChartKind::Brinkmann => Ok((0, 0, false)),
            _ => schema_err(&path, "key \"H\" is only valid in a brinkmann chart"),
        };
    }
    if let Some(ks) = key.strip_prefix('W') {
        if let Ok(k) = ks.parse::<usize>() {
            if kind != ChartKind::Brinkmann {
                return schema_err(&path, format!("key \"{key}\" is only valid in a brinkmann chart"));
            }
            if k == 0 || k + 1 >= dim {
                return schema_err(&path, format!("transverse index {k} out of range for dimension {dim}"));
            }
            return Ok((0, k + 1, true));
        }
    }
    let parts: Vec<&str> = key.split(',').collect();
    if parts.len() != 2 {
        return schema_err(
            &path,
            "expected an index pair \"i,j\", \"H\", or \"Wk\"",
        );
    }
    let i: usize = parts[0]
        .trim()
        .parse()
        .map_err(|_| SpecError::Schema {
            path: path.clone(),
            message: "index pair components must be integers".into(),
        })?;
    let j: usize = parts[1]
        .trim()
        .parse()
        .map_err(|_| SpecError::Schema {
            path: path.clone(),
            message: "index pair components must be integers".into(),
        })?;
    if i > j || j >= dim {
        return schema_err(&path, format!("index pair ({i},{j}) out of range (need i <= j < {dim})"));
    }
    if matches!(kind, ChartKind::Rosen | ChartKind::Brinkmann) && i < 2 {
        return schema_err(
            &path,
            format!(
                "index pair ({i},{j}) touches the u,v block, which is implicit in a {} chart",
                if kind == ChartKind::Rosen { "rosen" } else { "brinkmann" }
            ),
        );
    }
    Ok((i, j, false))
}

/// Validate and compile a JSON document.
pub fn load_spacetime_spec(json: &str) -> Result<SpacetimeSpec, SpecError> {
    let doc: SpecDoc = serde_json::from_str(json)?;
    compile_spec(doc)
}

pub fn compile_spec(doc: SpecDoc) -> Result<SpacetimeSpec, SpecError> {
    let dim = doc.dimension;
    if !(2..=crate::dual::MAX_DIM).contains(&dim) {
        return schema_err("dimension", format!("dimension {dim} outside supported range 2..=11"));
    }
    if doc.coordinates.len() != dim {
        return schema_err(
            "coordinates",
            format!("{} names for dimension {dim}", doc.coordinates.len()),
        );
    }
    for (i, name) in doc.coordinates.iter().enumerate() {
        if !RESERVED_COORDS.contains(&name.as_str()) {
            return schema_err(
                &format!("coordinates[{i}]"),
                format!("`{name}` is not one of the reserved coordinate names u, v, x1..x9"),
            );
        }
        if doc.coordinates[..i].contains(name) {
            return schema_err(&format!("coordinates[{i}]"), format!("duplicate coordinate `{name}`"));
        }
    }
    if matches!(doc.chart_kind, ChartKind::Rosen | ChartKind::Brinkmann)
        && (doc.coordinates[0] != "u" || doc.coordinates[1] != "v")
    {
        return schema_err(
            "coordinates",
            "rosen/brinkmann charts must order coordinates (u, v, transverse...)",
        );
    }

    let mut entries: Vec<(usize, usize, Expr)> = Vec::new();
    let mut w_halved: Vec<(usize, usize, String)> = Vec::new();
    for (key, text) in &doc.coefficients {
        let (a, b, is_w) = parse_coeff_key(key, doc.chart_kind, dim)?;
        if is_w {
            // W_k du dx^k splits across the two symmetric slots.
            w_halved.push((a, b, format!("({text})/2")));
            continue;
        }
        let expr = parse_expr(text, &doc.coordinates).map_err(|source| SpecError::Expr {
            path: format!("coefficients.{key}"),
            source,
        })?;
        if entries.iter().any(|(ea, eb, _)| *ea == a && *eb == b) {
            return schema_err(&format!("coefficients.{key}"), "duplicate coefficient slot");
        }
        entries.push((a, b, expr));
    }
    for (a, b, text) in w_halved {
        let expr = parse_expr(&text, &doc.coordinates).map_err(|source| SpecError::Expr {
            path: format!("coefficients.W{}", b - 1),
            source,
        })?;
        entries.push((a, b, expr));
    }

    let chart_domain = doc.chart_domain.clone().unwrap_or(Domain::All);
    if let Domain::HalfSpace { axis, .. } = &chart_domain {
        if *axis >= dim {
            return schema_err("chart_domain.axis", "axis out of range");
        }
    }
    let metric = MetricField::new(dim, doc.chart_kind, entries, chart_domain);

    let v_field = match &doc.distinguished_field {
        None => None,
        Some(components) => {
            if components.len() != dim {
                return schema_err(
                    "distinguished_field",
                    format!("{} components for dimension {dim}", components.len()),
                );
            }
            let mut exprs = Vec::with_capacity(dim);
            for (i, text) in components.iter().enumerate() {
                exprs.push(parse_expr(text, &doc.coordinates).map_err(|source| SpecError::Expr {
                    path: format!("distinguished_field[{i}]"),
                    source,
                })?);
            }
            Some(VectorField::new(exprs))
        }
    };

    let mut deck = Vec::with_capacity(doc.deck.len());
    for (i, d) in doc.deck.iter().enumerate() {
        if d.linear.len() != dim || d.linear.iter().any(|row| row.len() != dim) {
            return schema_err(&format!("deck[{i}].linear"), format!("expected a {dim}x{dim} matrix"));
        }
        if d.translation.len() != dim {
            return schema_err(&format!("deck[{i}].translation"), format!("expected {dim} entries"));
        }
        let linear = DMatrix::from_fn(dim, dim, |r, c| d.linear[r][c]);
        let translation = DVector::from_column_slice(&d.translation);
        let map = AffineMap::new(linear, translation);
        deck.push(DeckTransform::new(map).map_err(|_| SpecError::Schema {
            path: format!("deck[{i}].linear"),
            message: "deck generator matrix is not invertible".into(),
        })?);
    }

    let mut factors = Vec::with_capacity(doc.fundamental_domain.len());
    for (i, f) in doc.fundamental_domain.iter().enumerate() {
        let path = format!("fundamental_domain[{i}]");
        match f {
            DomainFactorDoc::Cell { axes, basis } => {
                if axes.iter().any(|&a| a >= dim) {
                    return schema_err(&path, "axis out of range");
                }
                let n = axes.len();
                let basis_mat = match basis {
                    None => DMatrix::identity(n, n),
                    Some(cols) => {
                        if cols.len() != n || cols.iter().any(|c| c.len() != n) {
                            return schema_err(&path, format!("basis must be {n}x{n}"));
                        }
                        DMatrix::from_fn(n, n, |r, c| cols[c][r])
                    }
                };
                factors.push(DomainFactor::cell(axes.clone(), basis_mat).map_err(|_| {
                    SpecError::Schema {
                        path: path.clone(),
                        message: "cell basis is not invertible".into(),
                    }
                })?);
            }
            DomainFactorDoc::Shell { axes, ratio } => {
                if axes.iter().any(|&a| a >= dim) {
                    return schema_err(&path, "axis out of range");
                }
                if *ratio <= 1.0 {
                    return schema_err(&path, "shell ratio must exceed 1");
                }
                factors.push(DomainFactor::shell(axes.clone(), *ratio));
            }
        }
    }

    if let Some((lo, hi)) = &doc.sample_region {
        if lo.len() != dim || hi.len() != dim {
            return schema_err("sample_region", format!("bounds must each have {dim} entries"));
        }
        if lo.iter().zip(hi).any(|(a, b)| a >= b) {
            return schema_err("sample_region", "lower bound must be strictly below upper bound");
        }
    }
    if let Some(bp) = &doc.base_point {
        if bp.len() != dim {
            return schema_err("base_point", format!("expected {dim} coordinates"));
        }
    }

    Ok(SpacetimeSpec {
        doc,
        metric,
        v_field,
        deck,
        fundamental_domain: FundamentalDomain { factors },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minkowski_document_loads() {
        let json = r#"{
            "name": "mink3",
            "chart_kind": "rosen",
            "dimension": 3,
            "coordinates": ["u", "v", "x1"],
            "coefficients": {"2,2": "1"}
        }"#;
        let spec = load_spacetime_spec(json).unwrap();
        assert_eq!(spec.name(), "mink3");
        let s = spec
            .metric
            .eval(&crate::geometry::ChartPoint::new(vec![0.0, 0.0, 0.0]))
            .unwrap();
        assert_eq!(s.matrix[(0, 1)], 1.0);
        assert_eq!(s.signature, (1, 2));
    }

    #[test]
    fn rosen_exponential_coefficient() {
        let json = r#"{
            "name": "exp-rosen",
            "chart_kind": "rosen",
            "dimension": 3,
            "coordinates": ["u", "v", "x1"],
            "coefficients": {"2,2": "exp(2*u)"}
        }"#;
        let spec = load_spacetime_spec(json).unwrap();
        let s = spec
            .metric
            .eval(&crate::geometry::ChartPoint::new(vec![0.0, 0.0, 0.0]))
            .unwrap();
        assert_eq!(s.matrix[(2, 2)], 1.0);
    }

    #[test]
    fn rosen_chart_rejects_h_key() {
        let json = r#"{
            "name": "bad",
            "chart_kind": "rosen",
            "dimension": 3,
            "coordinates": ["u", "v", "x1"],
            "coefficients": {"H": "1", "2,2": "1"}
        }"#;
        match load_spacetime_spec(json) {
            Err(SpecError::Schema { path, .. }) => assert!(path.contains('H'), "path {path}"),
            other => panic!("expected schema violation naming H, got {other:?}"),
        }
    }

    #[test]
    fn singular_deck_matrix_rejected() {
        let json = r#"{
            "name": "bad-deck",
            "chart_kind": "rosen",
            "dimension": 3,
            "coordinates": ["u", "v", "x1"],
            "coefficients": {"2,2": "1"},
            "deck": [{"linear": [[0,0,0],[0,1,0],[0,0,1]], "translation": [0,0,0]}]
        }"#;
        match load_spacetime_spec(json) {
            Err(SpecError::Schema { path, .. }) => assert!(path.contains("deck")),
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn parse_error_carries_field_path() {
        let json = r#"{
            "name": "bad-expr",
            "chart_kind": "rosen",
            "dimension": 3,
            "coordinates": ["u", "v", "x1"],
            "coefficients": {"2,2": "2*+u"}
        }"#;
        match load_spacetime_spec(json) {
            Err(SpecError::Expr { path, .. }) => assert_eq!(path, "coefficients.2,2"),
            other => panic!("expected expression error with path, got {other:?}"),
        }
    }

    #[test]
    fn unknown_coordinate_name_rejected() {
        let json = r#"{
            "name": "bad-coord",
            "chart_kind": "general",
            "dimension": 2,
            "coordinates": ["x1", "w"],
            "coefficients": {"0,1": "1"}
        }"#;
        assert!(matches!(
            load_spacetime_spec(json),
            Err(SpecError::Schema { .. })
        ));
    }

    #[test]
    fn brinkmann_w_coefficient_splits_symmetrically() {
        let json = r#"{
            "name": "with-w",
            "chart_kind": "brinkmann",
            "dimension": 4,
            "coordinates": ["u", "v", "x1", "x2"],
            "coefficients": {"H": "0", "W1": "2*x2", "2,2": "1", "3,3": "1"}
        }"#;
        let spec = load_spacetime_spec(json).unwrap();
        let s = spec
            .metric
            .eval(&crate::geometry::ChartPoint::new(vec![0.0, 0.0, 0.0, 3.0]))
            .unwrap();
        assert_eq!(s.matrix[(0, 2)], 3.0);
        assert_eq!(s.matrix[(2, 0)], 3.0);
    }
}
