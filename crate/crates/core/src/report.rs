//! Deterministic serialization: canonical JSON (sorted keys, floats at 17
//! significant digits) and fixed-column CSV writers. Identical inputs must
//! produce byte-identical artifacts.

use serde::Serialize;
use serde_json::Value;

use crate::dynamics::EquicontinuityReport;
use crate::geodesic::{ScanReport, Trajectory};
use crate::verify::SurfacePatch;

/// 17 significant digits round-trips every f64 exactly.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

fn write_canonical(value: &Value, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(f) = n.as_f64() {
                if n.is_f64() {
                    out.push_str(&fmt_float(f));
                } else {
                    out.push_str(&n.to_string());
                }
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => {
            out.push_str(&serde_json::to_string(s).expect("string serializes"));
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        // serde_json's default map is a BTreeMap, so iteration is key-sorted.
        Value::Object(map) => {
            out.push('{');
            for (i, (k, v)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push(':');
                write_canonical(v, out);
            }
            out.push('}');
        }
    }
}

/// Canonical JSON for any serializable report.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report serializes to a JSON tree");
    let mut out = String::new();
    write_canonical(&v, &mut out);
    out.push('\n');
    out
}

fn push_components(out: &mut String, components: &[f64]) {
    for (i, c) in components.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&fmt_float(*c));
    }
}

/// CSV: one row per trajectory.
/// Columns: `seed,index,verdict,t_star,energy_drift,clairaut_drift,growth_exponent,init_point,init_velocity`.
/// Vector-valued fields are space-separated component lists.
pub fn scan_to_csv(report: &ScanReport) -> String {
    let mut out = String::from(
        "seed,index,verdict,t_star,energy_drift,clairaut_drift,growth_exponent,init_point,init_velocity\n",
    );
    for row in &report.rows {
        out.push_str(&report.seed.to_string());
        out.push(',');
        out.push_str(&row.index.to_string());
        out.push(',');
        out.push_str(row.verdict.kind_str());
        out.push(',');
        out.push_str(&fmt_float(row.verdict.t_star()));
        out.push(',');
        out.push_str(&fmt_float(row.energy_drift));
        out.push(',');
        if let Some(c) = row.clairaut_drift {
            out.push_str(&fmt_float(c));
        }
        out.push(',');
        if let Some(g) = row.growth_exponent {
            out.push_str(&fmt_float(g));
        }
        out.push(',');
        push_components(&mut out, &row.init_point);
        out.push(',');
        push_components(&mut out, &row.init_velocity);
        out.push('\n');
    }
    out
}

/// CSV: one row per retained sample.
/// Columns: `t`, one per coordinate, then one `d_<coord>` per coordinate.
pub fn trajectory_to_csv(traj: &Trajectory, coords: &[String]) -> String {
    let mut out = String::from("t");
    for c in coords {
        out.push(',');
        out.push_str(c);
    }
    for c in coords {
        out.push_str(",d_");
        out.push_str(c);
    }
    out.push('\n');
    for s in &traj.samples {
        out.push_str(&fmt_float(s.affine_param));
        for x in &s.point {
            out.push(',');
            out.push_str(&fmt_float(*x));
        }
        for v in &s.velocity {
            out.push(',');
            out.push_str(&fmt_float(*v));
        }
        out.push('\n');
    }
    out
}

/// CSV of the flow-growth curve. Columns: `t,max_log_norm`.
pub fn flow_to_csv(report: &EquicontinuityReport) -> String {
    let mut out = String::from("t,max_log_norm\n");
    for (t, l) in &report.samples {
        out.push_str(&fmt_float(*t));
        out.push(',');
        out.push_str(&fmt_float(*l));
        out.push('\n');
    }
    out
}

/// CSV of a surface patch for plotting.
/// Columns: `i,j,<coords...>,ii_norm,induced_curvature` (empty on the margin).
pub fn patch_to_csv(patch: &SurfacePatch, coords: &[String]) -> String {
    let mut out = String::from("i,j");
    for c in coords {
        out.push(',');
        out.push_str(c);
    }
    out.push_str(",ii_norm,induced_curvature\n");
    for (i, row) in patch.points.iter().enumerate() {
        for (j, p) in row.iter().enumerate() {
            out.push_str(&i.to_string());
            out.push(',');
            out.push_str(&j.to_string());
            for x in p {
                out.push(',');
                out.push_str(&fmt_float(*x));
            }
            out.push(',');
            if let Some(v) = patch.ii_norms[i][j] {
                out.push_str(&fmt_float(v));
            }
            out.push(',');
            if let Some(v) = patch.induced_curvature[i][j] {
                out.push_str(&fmt_float(v));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Serialize;

    #[derive(Serialize)]
    struct Demo {
        zeta: f64,
        alpha: u32,
        name: String,
        values: Vec<f64>,
    }

    #[test]
    fn canonical_json_sorts_keys_and_pins_floats() {
        let d = Demo {
            zeta: 0.5,
            alpha: 3,
            name: "x".into(),
            values: vec![1.0, -2.25],
        };
        let s = to_canonical_json(&d);
        assert_eq!(
            s,
            "{\"alpha\":3,\"name\":\"x\",\"values\":[1.0000000000000000e0,-2.2500000000000000e0],\"zeta\":5.0000000000000000e-1}\n"
        );
    }

    #[test]
    fn canonical_json_is_reproducible() {
        let d = Demo {
            zeta: std::f64::consts::PI,
            alpha: 1,
            name: "pi".into(),
            values: vec![f64::MIN_POSITIVE, f64::MAX],
        };
        assert_eq!(to_canonical_json(&d), to_canonical_json(&d));
    }

    #[test]
    fn float_format_round_trips() {
        for &x in &[std::f64::consts::PI, 1.0 / 3.0, 1e-300, -7.25e17] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }
}
