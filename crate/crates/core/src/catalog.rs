//! Built-in spacetime constructors: Minkowski, the Clifton-Pohl torus and its
//! 3-dimensional variant, the homogeneous-but-incomplete half plane, pp-waves,
//! Cahen-Wallach spaces, plane-wave tori in Rosen form, and the suspension of
//! a hyperbolic toral automorphism.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::expr::{parse_expr, ExprKind};
use crate::geometry::{ChartKind, Domain};
use crate::schema::{compile_spec, DeckDoc, DomainFactorDoc, SpecDoc, SpecError};
use crate::spacetime::{Spacetime, SpacetimeError};

pub type Params = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog key `{name}`; valid keys: {valid}")]
    UnknownName { name: String, valid: String },
    #[error("invalid parameter `{param}` for `{name}`: {message}")]
    InvalidParam {
        name: String,
        param: String,
        message: String,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
}

/// Description of one tunable parameter of a catalog entry.
pub struct ParamInfo {
    pub name: &'static str,
    pub default: &'static str,
    pub description: &'static str,
}

/// Catalog entry metadata for listings.
pub struct EntryInfo {
    pub key: &'static str,
    pub description: &'static str,
    pub params: &'static [ParamInfo],
}

pub const ENTRIES: &[EntryInfo] = &[
    EntryInfo {
        key: "minkowski",
        description: "flat 2 du dv + sum dx_i^2 on R^(n+1), parallel null field d_v",
        params: &[ParamInfo {
            name: "n",
            default: "2",
            description: "n in R^(n+1); chart dimension is n+1",
        }],
    },
    EntryInfo {
        key: "clifton_pohl",
        description: "dx dy/(x^2+y^2) on R^2 minus the origin, quotient by (x,y) -> (2x,2y)",
        params: &[],
    },
    EntryInfo {
        key: "clifton_pohl_3d",
        description: "dx dy/(x^2+y^2) + (dx+dy) dz/sqrt(x^2+y^2) 3-torus; d_z is null Killing, not parallel",
        params: &[],
    },
    EntryInfo {
        key: "half_plane",
        description: "2 dx dy on {y > 0}: homogeneous, Brinkmann, incomplete",
        params: &[],
    },
    EntryInfo {
        key: "pp_wave",
        description: "2 du (dv + H(u,x) du) + sum dx_i^2 with parallel null field d_v",
        params: &[
            ParamInfo {
                name: "H",
                default: "x1^3",
                description: "wave profile H(u, x1..xn); must not involve v",
            },
            ParamInfo {
                name: "n",
                default: "2",
                description: "number of transverse coordinates",
            },
        ],
    },
    EntryInfo {
        key: "cahen_wallach",
        description: "symmetric plane wave: pp-wave with H(x) = sum lambda_i x_i^2",
        params: &[ParamInfo {
            name: "lambda",
            default: "-1,-1",
            description: "comma-separated quadratic-form coefficients",
        }],
    },
    EntryInfo {
        key: "rosen_torus",
        description: "2 du dv + a_ij(u) dx^i dx^j on a torus (plane wave in Rosen form)",
        params: &[
            ParamInfo {
                name: "a11",
                default: "2+sin(2*pi*u)",
                description: "transverse coefficient a_11(u), 1-periodic in u",
            },
            ParamInfo {
                name: "a12",
                default: "0",
                description: "transverse coefficient a_12(u), 1-periodic in u",
            },
            ParamInfo {
                name: "a22",
                default: "1",
                description: "transverse coefficient a_22(u), 1-periodic in u",
            },
        ],
    },
    EntryInfo {
        key: "suspension_anosov",
        description: "suspension of a hyperbolic A in SL(2,Z): flat Lorentz 3-manifold, spacelike parallel d_s",
        params: &[ParamInfo {
            name: "A",
            default: "2,1,1,1",
            description: "row-major integer 2x2 matrix with det 1 and |trace| > 2",
        }],
    },
];

pub fn valid_keys() -> String {
    ENTRIES
        .iter()
        .map(|e| e.key)
        .collect::<Vec<_>>()
        .join(", ")
}

fn invalid_param(name: &str, param: &str, message: impl Into<String>) -> CatalogError {
    CatalogError::InvalidParam {
        name: name.into(),
        param: param.into(),
        message: message.into(),
    }
}

fn get<'a>(params: &'a Params, key: &str, default: &'a str) -> &'a str {
    params.get(key).map(String::as_str).unwrap_or(default)
}

fn check_params_known(name: &str, params: &Params, allowed: &[&str]) -> Result<(), CatalogError> {
    for k in params.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(invalid_param(
                name,
                k,
                format!("unknown parameter; allowed: {}", allowed.join(", ")),
            ));
        }
    }
    Ok(())
}

/// Build a catalog spacetime.
pub fn build(name: &str, params: &Params) -> Result<Spacetime, CatalogError> {
    match name {
        "minkowski" => minkowski(params),
        "clifton_pohl" => clifton_pohl(params),
        "clifton_pohl_3d" => clifton_pohl_3d(params),
        "half_plane" => half_plane(params),
        "pp_wave" => pp_wave(params),
        "cahen_wallach" => cahen_wallach(params),
        "rosen_torus" => rosen_torus(params),
        "suspension_anosov" => suspension_anosov(params),
        _ => Err(CatalogError::UnknownName {
            name: name.into(),
            valid: valid_keys(),
        }),
    }
}

fn transverse_coords(n: usize) -> Vec<String> {
    let mut coords = vec!["u".to_string(), "v".to_string()];
    for i in 1..=n {
        coords.push(format!("x{i}"));
    }
    coords
}

fn dv_field(dim: usize) -> Vec<String> {
    (0..dim)
        .map(|i| if i == 1 { "1".into() } else { "0".into() })
        .collect()
}

fn minkowski(params: &Params) -> Result<Spacetime, CatalogError> {
    check_params_known("minkowski", params, &["n"])?;
    let n: usize = get(params, "n", "2")
        .parse()
        .map_err(|_| invalid_param("minkowski", "n", "must be a positive integer"))?;
    if !(1..=9).contains(&n) {
        return Err(invalid_param("minkowski", "n", "need 1 <= n <= 9"));
    }
    let dim = n + 1;
    let mut coefficients = BTreeMap::new();
    for i in 2..dim {
        coefficients.insert(format!("{i},{i}"), "1".to_string());
    }
    let doc = SpecDoc {
        name: "minkowski".into(),
        chart_kind: ChartKind::Rosen,
        dimension: dim,
        coordinates: transverse_coords(n.saturating_sub(1)),
        coefficients,
        deck: vec![],
        fundamental_domain: vec![],
        chart_domain: None,
        distinguished_field: Some(dv_field(dim)),
        claims_brinkmann: true,
        claims_compact_quotient: false,
        sample_region: None,
        base_point: Some(vec![0.0; dim]),
    };
    Ok(Spacetime::new(compile_spec(doc)?)?)
}

fn clifton_pohl(params: &Params) -> Result<Spacetime, CatalogError> {
    check_params_known("clifton_pohl", params, &[])?;
    let doc = SpecDoc {
        name: "clifton_pohl".into(),
        chart_kind: ChartKind::General,
        dimension: 2,
        coordinates: vec!["x1".into(), "x2".into()],
        coefficients: BTreeMap::from([("0,1".to_string(), "1/(2*(x1*x1 + x2*x2))".to_string())]),
        deck: vec![DeckDoc {
            linear: vec![vec![2.0, 0.0], vec![0.0, 2.0]],
            translation: vec![0.0, 0.0],
        }],
        fundamental_domain: vec![DomainFactorDoc::Shell {
            axes: vec![0, 1],
            ratio: 2.0,
        }],
        chart_domain: Some(Domain::Punctured { axes: vec![0, 1] }),
        distinguished_field: None,
        claims_brinkmann: false,
        claims_compact_quotient: true,
        sample_region: None,
        base_point: Some(vec![1.5, 0.25]),
    };
    Ok(Spacetime::new(compile_spec(doc)?)?)
}

fn clifton_pohl_3d(params: &Params) -> Result<Spacetime, CatalogError> {
    check_params_known("clifton_pohl_3d", params, &[])?;
    // The dz cross terms must scale like 1/r (not 1/r^2) for the doubling
    // map to be an isometry; otherwise the metric does not descend to the
    // quotient torus.
    let plane = "1/(2*(x1*x1 + x2*x2))".to_string();
    let cross = "1/(2*sqrt(x1*x1 + x2*x2))".to_string();
    let doc = SpecDoc {
        name: "clifton_pohl_3d".into(),
        chart_kind: ChartKind::General,
        dimension: 3,
        coordinates: vec!["x1".into(), "x2".into(), "x3".into()],
        coefficients: BTreeMap::from([
            ("0,1".to_string(), plane),
            ("0,2".to_string(), cross.clone()),
            ("1,2".to_string(), cross),
        ]),
        deck: vec![
            DeckDoc {
                linear: vec![
                    vec![2.0, 0.0, 0.0],
                    vec![0.0, 2.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                ],
                translation: vec![0.0, 0.0, 0.0],
            },
            DeckDoc {
                linear: vec![
                    vec![1.0, 0.0, 0.0],
                    vec![0.0, 1.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                ],
                translation: vec![0.0, 0.0, 1.0],
            },
        ],
        fundamental_domain: vec![
            DomainFactorDoc::Shell {
                axes: vec![0, 1],
                ratio: 2.0,
            },
            DomainFactorDoc::Cell {
                axes: vec![2],
                basis: None,
            },
        ],
        chart_domain: Some(Domain::Punctured { axes: vec![0, 1] }),
        distinguished_field: Some(vec!["0".into(), "0".into(), "1".into()]),
        claims_brinkmann: false,
        claims_compact_quotient: true,
        sample_region: None,
        base_point: Some(vec![1.5, 0.25, 0.5]),
    };
    Ok(Spacetime::new(compile_spec(doc)?)?)
}

fn half_plane(params: &Params) -> Result<Spacetime, CatalogError> {
    check_params_known("half_plane", params, &[])?;
    let doc = SpecDoc {
        name: "half_plane".into(),
        chart_kind: ChartKind::General,
        dimension: 2,
        coordinates: vec!["x1".into(), "x2".into()],
        coefficients: BTreeMap::from([("0,1".to_string(), "1".to_string())]),
        deck: vec![],
        fundamental_domain: vec![],
        chart_domain: Some(Domain::HalfSpace { axis: 1, min: 0.0 }),
        distinguished_field: Some(vec!["1".into(), "0".into()]),
        claims_brinkmann: true,
        claims_compact_quotient: false,
        sample_region: Some((vec![-1.0, 0.1], vec![1.0, 2.1])),
        base_point: Some(vec![0.0, 1.0]),
    };
    Ok(Spacetime::new(compile_spec(doc)?)?)
}

fn expr_uses_var(kind: &ExprKind, var: usize) -> bool {
    match kind {
        ExprKind::Const(_) => false,
        ExprKind::Var(i) => *i == var,
        ExprKind::Neg(e) => expr_uses_var(&e.kind, var),
        ExprKind::Bin(_, a, b) => expr_uses_var(&a.kind, var) || expr_uses_var(&b.kind, var),
        ExprKind::Func(_, a) => expr_uses_var(&a.kind, var),
    }
}

fn pp_wave_doc(name: &str, h: &str, n: usize) -> Result<SpecDoc, CatalogError> {
    if !(1..=9).contains(&n) {
        return Err(invalid_param(name, "n", "need 1 <= n <= 9"));
    }
    let dim = n + 2;
    let coords = transverse_coords(n);
    let parsed = parse_expr(h, &coords)
        .map_err(|e| invalid_param(name, "H", format!("cannot parse profile: {e}")))?;
    if expr_uses_var(&parsed.kind, 1) {
        return Err(invalid_param(name, "H", "profile must not depend on v"));
    }
    let mut coefficients = BTreeMap::from([("H".to_string(), format!("2*({h})"))]);
    for i in 2..dim {
        coefficients.insert(format!("{i},{i}"), "1".to_string());
    }
    Ok(SpecDoc {
        name: name.into(),
        chart_kind: ChartKind::Brinkmann,
        dimension: dim,
        coordinates: coords,
        coefficients,
        deck: vec![],
        fundamental_domain: vec![],
        chart_domain: None,
        distinguished_field: Some(dv_field(dim)),
        claims_brinkmann: true,
        claims_compact_quotient: false,
        sample_region: None,
        base_point: Some(vec![0.0; dim]),
    })
}

fn pp_wave(params: &Params) -> Result<Spacetime, CatalogError> {
    check_params_known("pp_wave", params, &["H", "n"])?;
    let h = get(params, "H", "x1^3");
    let n: usize = get(params, "n", "2")
        .parse()
        .map_err(|_| invalid_param("pp_wave", "n", "must be a positive integer"))?;
    Ok(Spacetime::new(compile_spec(pp_wave_doc("pp_wave", h, n)?)?)?)
}

/// pp-wave with an arbitrary profile, for callers that already hold the
/// expression text.
pub fn pp_wave_custom(h: &str, transverse: usize) -> Result<Spacetime, CatalogError> {
    Ok(Spacetime::new(compile_spec(pp_wave_doc(
        "pp_wave", h, transverse,
    )?)?)?)
}

fn cahen_wallach(params: &Params) -> Result<Spacetime, CatalogError> {
    check_params_known("cahen_wallach", params, &["lambda"])?;
    let raw = get(params, "lambda", "-1,-1");
    let lambdas: Vec<f64> = raw
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid_param("cahen_wallach", "lambda", "must be a comma-separated list of reals"))?;
    if lambdas.is_empty() {
        return Err(invalid_param("cahen_wallach", "lambda", "need at least one coefficient"));
    }
    let h = lambdas
        .iter()
        .enumerate()
        .map(|(i, l)| format!("({l})*x{}^2", i + 1))
        .collect::<Vec<_>>()
        .join(" + ");
    Ok(Spacetime::new(compile_spec(pp_wave_doc(
        "cahen_wallach",
        &h,
        lambdas.len(),
    )?)?)?)
}

fn rosen_torus(params: &Params) -> Result<Spacetime, CatalogError> {
    check_params_known("rosen_torus", params, &["a11", "a12", "a22"])?;
    let a11 = get(params, "a11", "2+sin(2*pi*u)");
    let a12 = get(params, "a12", "0");
    let a22 = get(params, "a22", "1");
    let coords = transverse_coords(2);
    // The torus closes only if the transverse coefficients are 1-periodic.
    for (key, text) in [("a11", a11), ("a12", a12), ("a22", a22)] {
        let expr = parse_expr(text, &coords)
            .map_err(|e| invalid_param("rosen_torus", key, format!("cannot parse: {e}")))?;
        for var in [1usize, 2, 3] {
            if expr_uses_var(&expr.kind, var) {
                return Err(invalid_param(
                    "rosen_torus",
                    key,
                    "coefficients may only depend on u",
                ));
            }
        }
        for k in 0..16 {
            let u = k as f64 / 16.0 * 3.0 - 1.0;
            let a = expr
                .eval_f64(&[u, 0.0, 0.0, 0.0])
                .map_err(|e| invalid_param("rosen_torus", key, format!("evaluation failed: {e}")))?;
            let b = expr
                .eval_f64(&[u + 1.0, 0.0, 0.0, 0.0])
                .map_err(|e| invalid_param("rosen_torus", key, format!("evaluation failed: {e}")))?;
            if (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(invalid_param(
                    "rosen_torus",
                    key,
                    format!("not 1-periodic in u: value differs at u = {u}"),
                ));
            }
        }
    }
    let mut deck = Vec::new();
    // u-period and lattice translations of (v, x1, x2).
    for axis in 0..4 {
        let mut translation = vec![0.0; 4];
        translation[axis] = 1.0;
        deck.push(DeckDoc {
            linear: vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 0.0, 1.0],
            ],
            translation,
        });
    }
    let doc = SpecDoc {
        name: "rosen_torus".into(),
        chart_kind: ChartKind::Rosen,
        dimension: 4,
        coordinates: coords,
        coefficients: BTreeMap::from([
            ("2,2".to_string(), a11.to_string()),
            ("2,3".to_string(), a12.to_string()),
            ("3,3".to_string(), a22.to_string()),
        ]),
        deck,
        fundamental_domain: vec![
            DomainFactorDoc::Cell {
                axes: vec![0],
                basis: None,
            },
            DomainFactorDoc::Cell {
                axes: vec![1, 2, 3],
                basis: None,
            },
        ],
        chart_domain: None,
        distinguished_field: Some(dv_field(4)),
        claims_brinkmann: true,
        claims_compact_quotient: true,
        sample_region: None,
        base_point: Some(vec![0.5, 0.5, 0.5, 0.5]),
    };
    Ok(Spacetime::new(compile_spec(doc)?)?)
}

fn suspension_anosov(params: &Params) -> Result<Spacetime, CatalogError> {
    check_params_known("suspension_anosov", params, &["A"])?;
    let raw = get(params, "A", "2,1,1,1");
    let entries: Vec<i64> = raw
        .split(',')
        .map(|s| s.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid_param("suspension_anosov", "A", "must be four comma-separated integers"))?;
    if entries.len() != 4 {
        return Err(invalid_param("suspension_anosov", "A", "must have exactly four entries"));
    }
    let (a, b, c, d) = (entries[0], entries[1], entries[2], entries[3]);
    if a * d - b * c != 1 {
        return Err(invalid_param("suspension_anosov", "A", "determinant must be 1 (A in SL(2,Z))"));
    }
    let trace = a + d;
    if trace.abs() <= 2 {
        return Err(invalid_param(
            "suspension_anosov",
            "A",
            format!("matrix must be hyperbolic (|trace| > 2, got {trace})"),
        ));
    }
    let tr = trace as f64;
    let lambda = (tr.abs() + (tr * tr - 4.0).sqrt()) / 2.0;
    let (af, bf, cf, df) = (a as f64, b as f64, c as f64, d as f64);
    // Eigenvectors for lambda and 1/lambda (signs follow trace).
    let (l_big, l_small) = if tr >= 0.0 {
        (lambda, 1.0 / lambda)
    } else {
        (-lambda, -1.0 / lambda)
    };
    let eigvec = |l: f64| -> (f64, f64) {
        if bf.abs() > 1e-12 {
            (bf, l - af)
        } else if cf.abs() > 1e-12 {
            (l - df, cf)
        } else {
            (1.0, 0.0)
        }
    };
    let (p11, p21) = eigvec(l_big);
    let (p12, p22) = eigvec(l_small);
    let basis_change = DMatrix::from_row_slice(2, 2, &[p11, p12, p21, p22]);
    let into_eigen = basis_change.clone().try_inverse().ok_or_else(|| {
        invalid_param("suspension_anosov", "A", "eigenbasis is degenerate")
    })?;
    // Lattice Z^2 expressed in eigenbasis coordinates.
    let lat = &into_eigen;
    let doc = SpecDoc {
        name: "suspension_anosov".into(),
        chart_kind: ChartKind::General,
        dimension: 3,
        coordinates: vec!["x1".into(), "x2".into(), "x3".into()],
        coefficients: BTreeMap::from([
            ("0,1".to_string(), "1".to_string()),
            ("2,2".to_string(), "1".to_string()),
        ]),
        deck: vec![
            // The twist: diag(lambda, 1/lambda) on the fibre, s -> s + 1.
            DeckDoc {
                linear: vec![
                    vec![l_big, 0.0, 0.0],
                    vec![0.0, l_small, 0.0],
                    vec![0.0, 0.0, 1.0],
                ],
                translation: vec![0.0, 0.0, 1.0],
            },
            DeckDoc {
                linear: vec![
                    vec![1.0, 0.0, 0.0],
                    vec![0.0, 1.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                ],
                translation: vec![lat[(0, 0)], lat[(1, 0)], 0.0],
            },
            DeckDoc {
                linear: vec![
                    vec![1.0, 0.0, 0.0],
                    vec![0.0, 1.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                ],
                translation: vec![lat[(0, 1)], lat[(1, 1)], 0.0],
            },
        ],
        fundamental_domain: vec![
            DomainFactorDoc::Cell {
                axes: vec![2],
                basis: None,
            },
            DomainFactorDoc::Cell {
                axes: vec![0, 1],
                basis: Some(vec![
                    vec![lat[(0, 0)], lat[(1, 0)]],
                    vec![lat[(0, 1)], lat[(1, 1)]],
                ]),
            },
        ],
        chart_domain: None,
        distinguished_field: Some(vec!["0".into(), "0".into(), "1".into()]),
        claims_brinkmann: false,
        claims_compact_quotient: true,
        sample_region: None,
        base_point: None,
    };
    Ok(Spacetime::new(compile_spec(doc)?)?)
}

/// Large eigenvalue of a hyperbolic SL(2,Z) matrix given row-major.
pub fn anosov_eigenvalue(entries: [i64; 4]) -> f64 {
    let tr = (entries[0] + entries[3]) as f64;
    (tr.abs() + (tr * tr - 4.0).sqrt()) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ChartPoint;

    #[test]
    fn clifton_pohl_metric_value() {
        let st = build("clifton_pohl", &Params::new()).unwrap();
        let s = st.metric().eval(&ChartPoint::new(vec![1.0, 0.0])).unwrap();
        assert_eq!(s.matrix[(0, 1)], 0.5);
        assert_eq!(s.signature, (1, 1));
    }

    #[test]
    fn cahen_wallach_guu() {
        let mut p = Params::new();
        p.insert("lambda".into(), "-1,-1".into());
        let st = build("cahen_wallach", &p).unwrap();
        let s = st
            .metric()
            .eval(&ChartPoint::new(vec![0.0, 0.0, 1.0, 0.0]))
            .unwrap();
        assert_eq!(s.matrix[(0, 0)], -2.0);
    }

    #[test]
    fn suspension_eigenvalue_golden() {
        let st = build("suspension_anosov", &Params::new()).unwrap();
        let lambda = anosov_eigenvalue([2, 1, 1, 1]);
        assert!((lambda - (3.0 + 5.0_f64.sqrt()) / 2.0).abs() < 1e-14);
        // The twist generator scales x1 by lambda.
        assert!((st.deck()[0].forward.linear[(0, 0)] - lambda).abs() < 1e-14);
    }

    #[test]
    fn non_hyperbolic_matrix_rejected() {
        let mut p = Params::new();
        p.insert("A".into(), "1,1,0,1".into());
        match build("suspension_anosov", &p) {
            Err(CatalogError::InvalidParam { param, .. }) => assert_eq!(param, "A"),
            other => panic!("expected invalid param, got {other:?}"),
        }
    }

    #[test]
    fn non_periodic_alpha_rejected() {
        let mut p = Params::new();
        p.insert("a11".into(), "2+u".into());
        match build("rosen_torus", &p) {
            Err(CatalogError::InvalidParam { param, .. }) => assert_eq!(param, "a11"),
            other => panic!("expected invalid param, got {other:?}"),
        }
    }

    #[test]
    fn unknown_name_lists_valid_keys() {
        match build("nosuch", &Params::new()) {
            Err(CatalogError::UnknownName { valid, .. }) => {
                assert!(valid.contains("clifton_pohl"));
                assert!(valid.contains("rosen_torus"));
            }
            other => panic!("expected unknown name, got {other:?}"),
        }
    }

    #[test]
    fn rosen_torus_normalize_translates_v() {
        let st = build("rosen_torus", &Params::new()).unwrap();
        let p = ChartPoint::new(vec![0.4, 2.3, 0.1, 0.9]);
        let v = crate::geometry::TangentVec::new(vec![1.0, 0.5, -0.25, 0.0], p.clone());
        let (q, vs, norm) = st.normalize(&p, &[v], 64).unwrap();
        assert!((q.coords[1] - 0.3).abs() < 1e-12);
        assert_eq!(vs[0].components, vec![1.0, 0.5, -0.25, 0.0]);
        assert_eq!(norm.word_length(), 2);
    }

    #[test]
    fn minkowski_normalize_is_identity() {
        let st = build("minkowski", &Params::new()).unwrap();
        let p = ChartPoint::new(vec![3.0, -4.0, 5.0]);
        let (q, _, norm) = st.normalize(&p, &[], 64).unwrap();
        assert_eq!(q.coords, vec![3.0, -4.0, 5.0]);
        assert!(norm.word.is_empty());
    }

    #[test]
    fn all_entries_build_with_defaults() {
        for e in ENTRIES {
            build(e.key, &Params::new()).unwrap_or_else(|err| panic!("{}: {err}", e.key));
        }
    }

    #[test]
    fn clifton_pohl_deck_preserves_inner_products() {
        let st = build("clifton_pohl", &Params::new()).unwrap();
        let g = &st.deck()[0];
        let p = vec![1.3, 0.4];
        let v = vec![0.7, -0.2];
        let w = vec![-0.1, 1.1];
        let before = st.inner(&p, &v, &w).unwrap();
        let after = st
            .inner(&g.forward.apply(&p), &g.forward.push(&v), &g.forward.push(&w))
            .unwrap();
        assert!((before - after).abs() < 1e-14);
    }
}
