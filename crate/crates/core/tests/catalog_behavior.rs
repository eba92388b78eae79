//! Cross-module behavior on the catalog spacetimes: quotient normalization,
//! incompleteness statistics, the mechanical reduction, frame transport and
//! flow isometry.

use brinkmann_core::catalog::{build, Params};
use brinkmann_core::dynamics::integrate_flow;
use brinkmann_core::expr::{coord_names, parse_expr};
use brinkmann_core::geodesic::{
    completeness_scan, mechanical_form, CompletenessVerdict, GeodesicClass, IntegratorConfig,
};
use brinkmann_core::geometry::{ChartPoint, TangentVec, VectorField};
use brinkmann_core::verify::{frame_transport_along_v, orthonormal_frame};
use brinkmann_testkit as oracle;

fn params(pairs: &[(&str, &str)]) -> Params {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn clifton_pohl_normalize_preserves_metric_quantities() {
    let st = build("clifton_pohl", &Params::new()).unwrap();
    let p = ChartPoint::new(vec![4.0, 0.0]);
    let v = TangentVec::new(vec![1.0, 0.3], p.clone());
    let g_before = st.inner(&p.coords, &v.components, &v.components).unwrap();
    let (q, vs, norm) = st.normalize(&p, &[v], 64).unwrap();
    assert!((q.coords[0] - 1.0).abs() < 1e-12);
    assert_eq!(q.coords[1], 0.0);
    // Two inverse homothety applications: vectors scale by 1/4.
    assert_eq!(norm.word_length(), 2);
    assert!((vs[0].components[0] - 0.25).abs() < 1e-15);
    let g_after = st.inner(&q.coords, &vs[0].components, &vs[0].components).unwrap();
    assert!(
        (g_before - g_after).abs() < 1e-10 * (1.0 + g_before.abs()),
        "normalization changed g(v,v): {g_before} -> {g_after}"
    );
}

#[test]
fn clifton_pohl_scan_shows_incompleteness_with_superlinear_blowup() {
    let st = build("clifton_pohl", &Params::new()).unwrap();
    let report = completeness_scan(&st, 1, 200, 100.0, &IntegratorConfig::default());
    let escapes: Vec<_> = report
        .rows
        .iter()
        .filter(|r| matches!(r.verdict, CompletenessVerdict::EscapeAt { .. }))
        .collect();
    assert!(
        !escapes.is_empty(),
        "expected a strictly positive escape fraction, fractions: complete {}",
        report.complete_fraction
    );
    for row in &escapes {
        let g = row.growth_exponent.expect("escapes have a growth fit");
        assert!(
            g > 1.0,
            "escape {} should blow up superlinearly, exponent {g}",
            row.index
        );
        if let CompletenessVerdict::EscapeAt { exponent, .. } = row.verdict {
            assert!(exponent < -0.5);
        }
    }
    // No trajectory may end in an unclassified stall.
    assert!(
        !report
            .rows
            .iter()
            .any(|r| matches!(r.verdict, CompletenessVerdict::Stalled { .. })),
        "stalled trajectories present"
    );
}

#[test]
fn mechanical_form_b_matches_profile_gradient() {
    // For the pp-wave with H = x1^2 the oracle pins B_1 = -Gamma^1_uu, which
    // equals the transverse gradient of the profile.
    let st = build("pp_wave", &params(&[("H", "x1^2"), ("n", "1")])).unwrap();
    for x1 in [0.3, -0.8, 1.4] {
        let mf = mechanical_form(&st, 0.0, &[x1], &[0.5], GeodesicClass::Transverse).unwrap();
        let gamma = oracle::oracle_christoffel(st.metric(), &[0.0, 0.0, x1]);
        oracle::assert_close(mf.b[0], -gamma[(2, 0, 0)], 1e-12, "B against oracle");
        oracle::assert_close(mf.b[0], 2.0 * x1, 1e-12, "B = dH/dx1");
    }
    // Minkowski: every coefficient vanishes.
    let mink = build("minkowski", &Params::new()).unwrap();
    let mf = mechanical_form(&mink, 0.3, &[0.7], &[1.0], GeodesicClass::Transverse).unwrap();
    assert_eq!(mf.a[(0, 0)], 0.0);
    assert_eq!(mf.b[0], 0.0);
    assert_eq!(mf.h_connection[0], 0.0);
}

#[test]
fn minkowski_frame_transport_is_identity() {
    let st = build("minkowski", &Params::new()).unwrap();
    let p = ChartPoint::new(vec![0.2, -0.4, 0.9]);
    let frame = orthonormal_frame(&st, &p).unwrap();
    let out = frame_transport_along_v(&st, &frame, 3.0).unwrap();
    assert!(out.horizontality_residual < 1e-10);
    assert!(out.gram_deviation < 1e-10);
    for (a, b) in out.frame.vectors.iter().zip(&frame.vectors) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}

#[test]
fn timelike_parallel_field_flow_is_bounded() {
    use brinkmann_core::dynamics::{equicontinuity_diagnostic, FlowClassification};
    // A constant timelike field on Minkowski: translations, trivially
    // equicontinuous.
    let st = build("minkowski", &Params::new()).unwrap();
    let coords = coord_names(&["u", "v", "x1"]);
    let c = 1.0 / 2.0_f64.sqrt();
    let field = VectorField::new(
        [c.to_string(), (-c).to_string(), "0".to_string()]
            .iter()
            .map(|t| parse_expr(t, &coords).unwrap())
            .collect(),
    );
    // Confirm the field is timelike at the base point.
    let v = field.eval_f64(&st.base_point).unwrap();
    let norm = st.inner(&st.base_point, &v, &v).unwrap();
    assert!(norm < 0.0, "g(V,V) = {norm} should be negative");
    let rep = equicontinuity_diagnostic(&st, &field, 10, 50.0, 2);
    assert!(matches!(rep.classification, FlowClassification::Bounded));
    assert!(rep.fitted_rate.abs() < 1e-6);
}

#[test]
fn flow_jacobian_preserves_inner_products_for_isometric_fields() {
    // g-Gram matrices of jacobian-pushed frames stay constant in time for
    // the catalog distinguished fields.
    for (name, comps) in [
        ("rosen_torus", vec!["0", "1", "0", "0"]),
        ("suspension_anosov", vec!["0", "0", "1"]),
        ("pp_wave", vec!["0", "1", "0", "0"]),
    ] {
        let st = build(name, &Params::new()).unwrap();
        let coords = st.spec.doc.coordinates.clone();
        let field = VectorField::new(
            comps
                .iter()
                .map(|c| parse_expr(c, &coords).unwrap())
                .collect(),
        );
        let n = st.dim();
        let start = st.base_point.clone();
        let flow = integrate_flow(&st, &field, &start, 12.0).unwrap();
        // Push the coordinate frame and compare Gram matrices.
        let mut before = vec![vec![0.0; n]; n];
        let mut after = vec![vec![0.0; n]; n];
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            before[i] = e.clone();
            let pushed: Vec<f64> = (0..n).map(|r| flow.jacobian[(r, i)]).collect();
            after[i] = pushed;
        }
        for i in 0..n {
            for j in 0..n {
                let a = st.inner(&start, &before[i], &before[j]).unwrap();
                let b = st.inner(&flow.point, &after[i], &after[j]).unwrap();
                assert!(
                    (a - b).abs() < 1e-6 * (1.0 + a.abs()),
                    "{name}: Gram drift at ({i},{j}): {a} vs {b}"
                );
            }
        }
    }
}
