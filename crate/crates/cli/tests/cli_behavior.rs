//! Exercises the remaining CLI surfaces: spec-file ingestion, argument
//! validation, custom fields, and CSV outputs.

mod common;

use common::run;

#[test]
fn list_prints_catalog_and_parameters() {
    let o = run(&["list"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for key in [
        "minkowski",
        "clifton_pohl",
        "clifton_pohl_3d",
        "half_plane",
        "pp_wave",
        "cahen_wallach",
        "rosen_torus",
        "suspension_anosov",
    ] {
        assert!(text.contains(key), "list output misses {key}");
    }
    assert!(text.contains("--param lambda"));
}

#[test]
fn custom_spec_file_drives_a_geodesic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("wave.json");
    std::fs::write(
        &spec,
        r#"{
            "name": "my-wave",
            "chart_kind": "rosen",
            "dimension": 3,
            "coordinates": ["u", "v", "x1"],
            "coefficients": {"2,2": "2 + sin(2*pi*u)"},
            "distinguished_field": ["0", "1", "0"],
            "claims_brinkmann": true
        }"#,
    )
    .unwrap();
    let out = dir.path().join("traj.json");
    let o = run(&[
        "geodesic",
        "--spec",
        spec.to_str().unwrap(),
        "--init",
        "0,0,0;1,0,0.5",
        "--tmax",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["spacetime"], "my-wave");
    assert_eq!(v["trajectory"]["termination"]["kind"], "complete_up_to");
}

#[test]
fn malformed_spec_file_exits_1_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    std::fs::write(
        &spec,
        r#"{
            "name": "bad",
            "chart_kind": "rosen",
            "dimension": 3,
            "coordinates": ["u", "v", "x1"],
            "coefficients": {"H": "1", "2,2": "1"}
        }"#,
    )
    .unwrap();
    let out = dir.path().join("x.json");
    let o = run(&[
        "certify",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains('H'), "stderr should name the offending key: {err}");
}

#[test]
fn certify_without_distinguished_field_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = run(&[
        "certify",
        "--spacetime",
        "clifton_pohl",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("distinguished"));
}

#[test]
fn custom_quotient_spec_scans_cleanly() {
    // A torus built from a user file: exercises schema -> deck ->
    // normalization -> scan end to end.
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("torus.json");
    std::fs::write(
        &spec,
        r#"{
            "name": "user-torus",
            "chart_kind": "rosen",
            "dimension": 3,
            "coordinates": ["u", "v", "x1"],
            "coefficients": {"2,2": "2 + cos(2*pi*u)"},
            "deck": [
                {"linear": [[1,0,0],[0,1,0],[0,0,1]], "translation": [1,0,0]},
                {"linear": [[1,0,0],[0,1,0],[0,0,1]], "translation": [0,1,0]},
                {"linear": [[1,0,0],[0,1,0],[0,0,1]], "translation": [0,0,1]}
            ],
            "fundamental_domain": [
                {"kind": "cell", "axes": [0]},
                {"kind": "cell", "axes": [1, 2]}
            ],
            "distinguished_field": ["0", "1", "0"],
            "claims_brinkmann": true,
            "claims_compact_quotient": true
        }"#,
    )
    .unwrap();
    let out = dir.path().join("scan.json");
    let o = run(&[
        "scan",
        "--spec",
        spec.to_str().unwrap(),
        "--samples",
        "10",
        "--seed",
        "4",
        "--tmax",
        "30",
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["complete_fraction"].as_f64().unwrap(), 1.0);
    for row in v["rows"].as_array().unwrap() {
        assert!(row["clairaut_drift"].as_f64().unwrap() < 1e-6);
    }
}

#[test]
fn bad_init_syntax_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    for init in ["1,0", "1,0;1,0;1,0", "1,zebra;0,1", "1;1,0"] {
        let o = run(&[
            "geodesic",
            "--spacetime",
            "clifton_pohl",
            "--init",
            init,
            "--tmax",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(2), "init {init:?}");
    }
}

#[test]
fn invalid_catalog_parameter_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = run(&[
        "certify",
        "--spacetime",
        "suspension_anosov",
        "--param",
        "A=1,1,0,1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hyperbolic"));
}

#[test]
fn missing_arguments_exit_2() {
    let o = run(&["geodesic", "--spacetime", "minkowski"]);
    assert_eq!(o.status.code(), Some(2), "clap argument error");
}

#[test]
fn flow_detects_anosov_rate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("flow.json");
    let o = run(&[
        "flow",
        "--spacetime",
        "suspension_anosov",
        "--samples",
        "10",
        "--tmax",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["classification"]["kind"], "exponential_growth");
    let rate = v["classification"]["rate"].as_f64().unwrap();
    let expected = ((3.0 + 5.0_f64.sqrt()) / 2.0).ln();
    assert!((rate / expected - 1.0).abs() < 0.02, "rate {rate}");
}

#[test]
fn flow_with_missing_field_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.json");
    let o = run(&[
        "flow",
        "--spacetime",
        "clifton_pohl",
        "--samples",
        "2",
        "--tmax",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("distinguished field"));
}

#[test]
fn trajectory_csv_has_coordinate_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    let o = run(&[
        "geodesic",
        "--spacetime",
        "minkowski",
        "--init",
        "0,0,0;1,2,3",
        "--tmax",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "t,u,v,x1,d_u,d_v,d_x1");
    assert!(text.lines().count() > 2);
}

#[test]
fn certify_full_writes_patch_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let patch = dir.path().join("patch.csv");
    let o = run(&[
        "certify",
        "--spacetime",
        "pp_wave",
        "--full",
        "--patch-csv",
        patch.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&patch).unwrap();
    assert!(text.starts_with("i,j,u,v,x1,x2,ii_norm,induced_curvature\n"));
    assert_eq!(text.lines().count(), 1 + 21 * 21);
}

#[test]
fn jobs_env_variable_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = common::bin()
        .env("BRINKMANN_JOBS", "1")
        .args([
            "scan",
            "--spacetime",
            "minkowski",
            "--samples",
            "4",
            "--tmax",
            "2",
            "--format",
            "json",
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn flow_csv_is_a_growth_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.csv");
    let o = run(&[
        "flow",
        "--spacetime",
        "rosen_torus",
        "--samples",
        "4",
        "--tmax",
        "8",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,max_log_norm\n"));
    assert!(text.lines().count() > 8);
}
