//! Certification of Brinkmann structure and the geometric constructions that
//! come with it: parallel null field, closed dual 1-form, totally geodesic
//! flat surfaces swept by the distinguished flow, quotient-bundle frame
//! transport, the pp-wave Ricci/harmonic equivalence, and the norm-growth
//! bound behind the completeness argument.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::catalog;
use crate::dual::{seed, Dual};
use crate::expr::parse_expr;
use crate::geometry::{ChartKind, ChartPoint, GeometryError, TangentVec, VectorField};
use crate::geodesic::{GeodesicError, GeodesicState, IntegratorConfig};
use crate::ode::{Dopri5, Options};
use crate::sampling::{standard_normal, trajectory_rng, Kronecker};
use crate::spacetime::Spacetime;

/// Residual tolerance for certificate checks.
pub const CERTIFICATE_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("spacetime `{0}` has no distinguished vector field")]
    MissingField(String),
    #[error("spacetime `{0}` does not certify as Brinkmann (required by this operation)")]
    CertificateFailed(String),
    #[error("operation requires a rosen chart, got {0:?}")]
    WrongChart(ChartKind),
    #[error("operation requires a compact quotient")]
    NotCompactQuotient,
    #[error("construction left the chart domain at parameter {0}")]
    LeftDomain(f64),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Catalog(#[from] Box<catalog::CatalogError>),
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Residual maxima over the sampled domain for the Brinkmann checks, plus the
/// Killing residual as a side diagnostic (a field can be Killing without
/// being parallel, as on the 3-dimensional Clifton-Pohl variant).
#[derive(Debug, Clone, Serialize)]
pub struct BrinkmannCertificate {
    pub spacetime: String,
    pub sample_count: usize,
    pub max_nabla_v: f64,
    pub max_g_vv: f64,
    pub max_d_alpha: f64,
    pub max_killing: f64,
    pub checks: Vec<CheckResult>,
    /// The Brinkmann verdict: parallel, null and closed all under tolerance.
    pub pass: bool,
}

fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Sample at least `count` quasi-random points of the sampling region that
/// lie in the chart domain.
fn domain_samples(spacetime: &Spacetime, count: usize) -> Vec<Vec<f64>> {
    let mut seq = Kronecker::new(spacetime.dim());
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count && tries < 100 * count {
        tries += 1;
        let p = spacetime.sample_region.lerp(&seq.next_point());
        if spacetime.metric().domain().contains(&p)
            && spacetime.metric().matrix_at(&p).is_ok()
        {
            out.push(p);
        }
    }
    out
}

/// Evaluate covariant derivative, nullity, closedness of `alpha = g(V, .)`
/// and the Killing residual of the distinguished field at quasi-random
/// domain points.
pub fn brinkmann_certificate(spacetime: &Spacetime) -> Result<BrinkmannCertificate, VerifyError> {
    let field = spacetime
        .v_field()
        .ok_or_else(|| VerifyError::MissingField(spacetime.name().to_string()))?;
    let metric = spacetime.metric();
    let n = metric.dim();
    let points = domain_samples(spacetime, 128);
    let mut max_nabla_v = 0.0_f64;
    let mut max_g_vv = 0.0_f64;
    let mut max_d_alpha = 0.0_f64;
    let mut max_killing = 0.0_f64;
    for p in &points {
        let seeded = seed(p);
        let g_dual = metric.matrix_at(&seeded).map_err(GeometryError::Eval)?;
        let v_dual: Vec<Dual<f64>> = field.eval(&seeded).map_err(GeometryError::Eval)?;
        let gamma = metric.christoffel_generic::<f64>(p)?;
        let v: Vec<f64> = v_dual.iter().map(|d| d.re).collect();
        // nabla_a V^c = d_a V^c + Gamma^c_ab V^b, one column per direction a.
        for a in 0..n {
            let mut col = vec![0.0; n];
            for c in 0..n {
                let mut s = v_dual[c].partial(a);
                for b in 0..n {
                    s += gamma[(c, a, b)] * v[b];
                }
                col[c] = s;
            }
            max_nabla_v = max_nabla_v.max(euclid(&col));
        }
        // g(V, V)
        let mut gvv = 0.0;
        for a in 0..n {
            for b in 0..n {
                gvv += g_dual[(a, b)].re * v[a] * v[b];
            }
        }
        max_g_vv = max_g_vv.max(gvv.abs());
        // alpha_b = g_bc V^c carried as a dual, so d alpha is exact.
        let mut alpha = vec![Dual::<f64>::constant(0.0); n];
        for b in 0..n {
            let mut s = Dual::<f64>::constant(0.0);
            for c in 0..n {
                s = s + g_dual[(b, c)] * v_dual[c];
            }
            alpha[b] = s;
        }
        for a in 0..n {
            for b in (a + 1)..n {
                let d_ab = alpha[b].partial(a) - alpha[a].partial(b);
                max_d_alpha = max_d_alpha.max(d_ab.abs());
            }
        }
        // (L_V g)_ab = V^c d_c g_ab + g_cb d_a V^c + g_ac d_b V^c
        for a in 0..n {
            for b in a..n {
                let mut s = 0.0;
                for c in 0..n {
                    s += v[c] * g_dual[(a, b)].partial(c)
                        + g_dual[(c, b)].re * v_dual[c].partial(a)
                        + g_dual[(a, c)].re * v_dual[c].partial(b);
                }
                max_killing = max_killing.max(s.abs());
            }
        }
    }
    let mk_check = |name: &str, residual: f64| CheckResult {
        name: name.to_string(),
        residual,
        tolerance: CERTIFICATE_TOL,
        pass: residual < CERTIFICATE_TOL,
    };
    let checks = vec![
        mk_check("parallel", max_nabla_v),
        mk_check("null", max_g_vv),
        mk_check("closed_alpha", max_d_alpha),
        mk_check("killing", max_killing),
    ];
    let pass = checks[0].pass && checks[1].pass && checks[2].pass;
    Ok(BrinkmannCertificate {
        spacetime: spacetime.name().to_string(),
        sample_count: points.len(),
        max_nabla_v,
        max_g_vv,
        max_d_alpha,
        max_killing,
        checks,
        pass,
    })
}

/// Grid patch of a candidate totally geodesic surface with measured second
/// fundamental form and induced-connection curvature.
#[derive(Debug, Clone, Serialize)]
pub struct SurfacePatch {
    /// `points[i][j]`: i along the geodesic direction, j along the sweep.
    pub points: Vec<Vec<Vec<f64>>>,
    pub tangent_s: Vec<Vec<Vec<f64>>>,
    pub tangent_t: Vec<Vec<Vec<f64>>>,
    /// Second-fundamental-form norm at interior nodes (`None` on the margin).
    pub ii_norms: Vec<Vec<Option<f64>>>,
    /// Induced-connection curvature norm at interior nodes.
    pub induced_curvature: Vec<Vec<Option<f64>>>,
    pub max_ii: f64,
    pub max_induced_curvature: f64,
}

const SURFACE_TOL: Options = Options {
    rel_tol: 1e-12,
    abs_tol: 1e-13,
    h_init: None,
    h_min: 1e-13,
    h_max: 0.05,
    max_steps: 10_000_000,
};

/// Integrate the geodesic from `init` without deck normalization, returning
/// dense states at the requested strictly increasing times.
fn geodesic_states_at(
    spacetime: &Spacetime,
    init: &GeodesicState,
    times: &[f64],
) -> Result<Vec<GeodesicState>, VerifyError> {
    let metric = spacetime.metric();
    let n = metric.dim();
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
    let mut y0 = init.point.clone();
    y0.extend_from_slice(&init.velocity);
    let t_end = *times.last().unwrap();
    let mut stepper = Dopri5::new(rhs, init.affine_param, y0, t_end, &SURFACE_TOL);
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0usize;
    while next < times.len() && times[next] <= init.affine_param {
        out.push(GeodesicState::new(
            init.point.clone(),
            init.velocity.clone(),
            init.affine_param,
        ));
        next += 1;
    }
    let mut buf = vec![0.0; 2 * n];
    while !stepper.done() && next < times.len() {
        let step = stepper
            .step()
            .map_err(|e| VerifyError::Integration(e.to_string()))?;
        if !metric.domain().contains(&stepper.y[..n]) {
            return Err(VerifyError::LeftDomain(stepper.t));
        }
        while next < times.len() && times[next] <= step.t_new {
            stepper.dense(times[next], &mut buf);
            out.push(GeodesicState::new(
                buf[..n].to_vec(),
                buf[n..].to_vec(),
                times[next],
            ));
            next += 1;
        }
    }
    if next < times.len() {
        return Err(VerifyError::Integration(
            "geodesic ended before requested extent".into(),
        ));
    }
    Ok(out)
}

/// Point of a flow orbit together with a pushed-forward tangent vector.
type PushedState = (Vec<f64>, Vec<f64>);

/// Integrate the flow of `field` from `x0` carrying a pushed-forward vector
/// `w0` by the variational equation; dense states at the requested times.
fn flow_with_pushforward(
    spacetime: &Spacetime,
    field: &VectorField,
    x0: &[f64],
    w0: &[f64],
    times: &[f64],
) -> Result<Vec<PushedState>, VerifyError> {
    let metric = spacetime.metric();
    let n = metric.dim();
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        let coords = &y[..n];
        let (f, df) = field.eval_with_jacobian(coords).map_err(|e| e.to_string())?;
        dy[..n].copy_from_slice(&f);
        for r in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += df[(r, k)] * y[n + k];
            }
            dy[n + r] = s;
        }
        Ok(())
    };
    let mut y0 = x0.to_vec();
    y0.extend_from_slice(w0);
    let t_end = *times.last().unwrap();
    let mut stepper = Dopri5::new(rhs, 0.0, y0, t_end, &SURFACE_TOL);
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0usize;
    while next < times.len() && times[next] <= 0.0 {
        out.push((x0.to_vec(), w0.to_vec()));
        next += 1;
    }
    let mut buf = vec![0.0; 2 * n];
    while !stepper.done() && next < times.len() {
        let step = stepper
            .step()
            .map_err(|e| VerifyError::Integration(e.to_string()))?;
        if !metric.domain().contains(&stepper.y[..n]) {
            return Err(VerifyError::LeftDomain(stepper.t));
        }
        while next < times.len() && times[next] <= step.t_new {
            stepper.dense(times[next], &mut buf);
            out.push((buf[..n].to_vec(), buf[n..].to_vec()));
            next += 1;
        }
    }
    if next < times.len() {
        return Err(VerifyError::Integration(
            "flow ended before requested extent".into(),
        ));
    }
    Ok(out)
}

/// Extend `[t_s, t_t]` to a full chart basis with Euclidean-orthonormalized
/// coordinate directions.
fn complete_basis(t_s: &[f64], t_t: &[f64]) -> Option<DMatrix<f64>> {
    let n = t_s.len();
    let mut cols: Vec<Vec<f64>> = vec![t_s.to_vec(), t_t.to_vec()];
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    let push_ortho = |v: &[f64], ortho: &mut Vec<Vec<f64>>| -> bool {
        let mut w = v.to_vec();
        for u in ortho.iter() {
            let d: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= d * ui;
            }
        }
        let norm = euclid(&w);
        if norm > 1e-7 {
            for wi in &mut w {
                *wi /= norm;
            }
            ortho.push(w);
            true
        } else {
            false
        }
    };
    if !push_ortho(t_s, &mut ortho) || !push_ortho(t_t, &mut ortho) {
        return None;
    }
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        if push_ortho(&e, &mut ortho) {
            cols.push(ortho.last().unwrap().clone());
        }
    }
    if cols.len() != n {
        return None;
    }
    Some(DMatrix::from_fn(n, n, |r, c| cols[c][r]))
}

/// Five-point first derivative along a slice of vectors.
fn fd5_first(values: [&Vec<f64>; 4], h: f64) -> Vec<f64> {
    // values = [f(i-2), f(i-1), f(i+1), f(i+2)]
    let n = values[0].len();
    (0..n)
        .map(|c| {
            (values[0][c] - 8.0 * values[1][c] + 8.0 * values[2][c] - values[3][c]) / (12.0 * h)
        })
        .collect()
}

/// Five-point second derivative of positions.
fn fd5_second(values: [&Vec<f64>; 5], h: f64) -> Vec<f64> {
    let n = values[0].len();
    (0..n)
        .map(|c| {
            (-values[0][c] + 16.0 * values[1][c] - 30.0 * values[2][c] + 16.0 * values[3][c]
                - values[4][c])
                / (12.0 * h * h)
        })
        .collect()
}

struct DerivGrid {
    /// nabla_{T_s} T_s, nabla_{T_t} T_s (= nabla_{T_s} T_t), nabla_{T_t} T_t.
    nabla_ss: Vec<Vec<Option<Vec<f64>>>>,
    nabla_ts: Vec<Vec<Option<Vec<f64>>>>,
    nabla_tt: Vec<Vec<Option<Vec<f64>>>>,
}

/// Decompose the measured derivatives into tangential connection
/// coefficients and normal parts; fill the patch metrics.
fn measure_patch(
    spacetime: &Spacetime,
    points: Vec<Vec<Vec<f64>>>,
    tangent_s: Vec<Vec<Vec<f64>>>,
    tangent_t: Vec<Vec<Vec<f64>>>,
    deriv: DerivGrid,
    h_s: f64,
    h_t: f64,
) -> Result<SurfacePatch, VerifyError> {
    let _ = spacetime;
    let m = points.len();
    let k = points[0].len();
    let mut ii_norms: Vec<Vec<Option<f64>>> = vec![vec![None; k]; m];
    // Tangential connection matrices C_s, C_t (2x2) where defined.
    let mut c_s: Vec<Vec<Option<DMatrix<f64>>>> = vec![vec![None; k]; m];
    let mut c_t: Vec<Vec<Option<DMatrix<f64>>>> = vec![vec![None; k]; m];
    let mut max_ii = 0.0_f64;
    for i in 0..m {
        for j in 0..k {
            let (Some(nss), Some(nts), Some(ntt)) = (
                deriv.nabla_ss[i][j].as_ref(),
                deriv.nabla_ts[i][j].as_ref(),
                deriv.nabla_tt[i][j].as_ref(),
            ) else {
                continue;
            };
            let ts = &tangent_s[i][j];
            let tt = &tangent_t[i][j];
            let Some(basis) = complete_basis(ts, tt) else {
                continue;
            };
            let lu = basis.clone().lu();
            let mut node_ii = 0.0_f64;
            let mut tang = [[0.0_f64; 2]; 3];
            for (slot, w) in [nss, nts, ntt].into_iter().enumerate() {
                let rhs = DVector::from_column_slice(w);
                let Some(c) = lu.solve(&rhs) else { continue };
                // Normal part: w minus its tangential reconstruction.
                let mut normal = w.clone();
                for (idx, val) in normal.iter_mut().enumerate() {
                    *val -= c[0] * ts[idx] + c[1] * tt[idx];
                }
                node_ii = node_ii.max(euclid(&normal));
                tang[slot] = [c[0], c[1]];
            }
            ii_norms[i][j] = Some(node_ii);
            max_ii = max_ii.max(node_ii);
            // Connection matrices in the (T_s, T_t) frame: column b of C_a
            // holds the tangential coefficients of nabla_{T_a} T_b.
            c_s[i][j] = Some(DMatrix::from_column_slice(
                2,
                2,
                &[tang[0][0], tang[0][1], tang[1][0], tang[1][1]],
            ));
            c_t[i][j] = Some(DMatrix::from_column_slice(
                2,
                2,
                &[tang[1][0], tang[1][1], tang[2][0], tang[2][1]],
            ));
        }
    }
    // Induced-connection curvature: F = d_s C_t - d_t C_s + [C_s, C_t].
    let mut induced: Vec<Vec<Option<f64>>> = vec![vec![None; k]; m];
    let mut max_curv = 0.0_f64;
    for i in 0..m {
        for j in 0..k {
            let (Some(cs), Some(ct)) = (c_s[i][j].as_ref(), c_t[i][j].as_ref()) else {
                continue;
            };
            if i == 0 || i + 1 >= m || j == 0 || j + 1 >= k {
                continue;
            }
            let (Some(ct_p), Some(ct_m), Some(cs_p), Some(cs_m)) = (
                c_t[i + 1][j].as_ref(),
                c_t[i - 1][j].as_ref(),
                c_s[i][j + 1].as_ref(),
                c_s[i][j - 1].as_ref(),
            ) else {
                continue;
            };
            let d_s_ct = (ct_p - ct_m) / (2.0 * h_s);
            let d_t_cs = (cs_p - cs_m) / (2.0 * h_t);
            let f = d_s_ct - d_t_cs + cs * ct - ct * cs;
            let norm = f.norm();
            induced[i][j] = Some(norm);
            max_curv = max_curv.max(norm);
        }
    }
    Ok(SurfacePatch {
        points,
        tangent_s,
        tangent_t,
        ii_norms,
        induced_curvature: induced,
        max_ii,
        max_induced_curvature: max_curv,
    })
}

/// Build the surface swept from the geodesic tangent to `q` by the flow of
/// the distinguished field, and measure its second fundamental form and
/// induced curvature on an `(m, k)` grid.
pub fn totally_geodesic_surface(
    spacetime: &Spacetime,
    p: &ChartPoint,
    q: &TangentVec,
    extent: (f64, f64),
    grid: (usize, usize),
) -> Result<SurfacePatch, VerifyError> {
    let cert = brinkmann_certificate(spacetime)?;
    if !cert.pass {
        return Err(VerifyError::CertificateFailed(spacetime.name().to_string()));
    }
    let field = spacetime
        .v_field()
        .ok_or_else(|| VerifyError::MissingField(spacetime.name().to_string()))?
        .clone();
    let (m, k) = grid;
    assert!(m >= 7 && k >= 3, "grid too coarse for the interior stencils");
    let n = spacetime.dim();
    // The sweep degenerates when q is proportional to V(p).
    {
        let v = field.eval_f64(&p.coords).map_err(GeometryError::Eval)?;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let qv: f64 = q.components.iter().zip(&v).map(|(a, b)| a * b).sum();
        let qq: f64 = q.components.iter().map(|x| x * x).sum();
        let residual = qq - if vv > 0.0 { qv * qv / vv } else { 0.0 };
        if residual <= 1e-12 * qq.max(1.0) {
            return Err(VerifyError::Integration(
                "sweep direction must be linearly independent of the distinguished field".into(),
            ));
        }
    }
    let h_s = extent.0 / (m - 1) as f64;
    let h_t = extent.1 / (k - 1) as f64;
    let s_times: Vec<f64> = (0..m).map(|i| i as f64 * h_s).collect();
    let t_times: Vec<f64> = (0..k).map(|j| j as f64 * h_t).collect();
    let init = GeodesicState::new(p.coords.clone(), q.components.clone(), 0.0);
    let spine = geodesic_states_at(spacetime, &init, &s_times)?;
    let metric = spacetime.metric();

    let mut points = vec![vec![Vec::new(); k]; m];
    let mut tangent_s = vec![vec![Vec::new(); k]; m];
    let mut tangent_t = vec![vec![Vec::new(); k]; m];
    for (i, st) in spine.iter().enumerate() {
        let states = flow_with_pushforward(spacetime, &field, &st.point, &st.velocity, &t_times)?;
        for (j, (x, w)) in states.into_iter().enumerate() {
            let v_here = field.eval_f64(&x).map_err(GeometryError::Eval)?;
            points[i][j] = x;
            tangent_s[i][j] = w;
            tangent_t[i][j] = v_here;
        }
    }

    // Covariant derivatives. Along the sweep direction everything is exact:
    // d_t T_t = DV T_t and d_t T_s = DV T_s by the flow and variational
    // equations. Along the geodesic direction d_s T_s comes from a five-point
    // stencil across columns.
    let mut nabla_ss: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; k]; m];
    let mut nabla_ts: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; k]; m];
    let mut nabla_tt: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; k]; m];
    for i in 0..m {
        for j in 0..k {
            let x = &points[i][j];
            let gamma = metric.christoffel_generic::<f64>(x)?;
            let (_, dv) = field.eval_with_jacobian(x).map_err(GeometryError::Eval)?;
            let ts = &tangent_s[i][j];
            let tt = &tangent_t[i][j];
            let gamma_term = |a: &[f64], b: &[f64]| -> Vec<f64> {
                (0..n)
                    .map(|c| {
                        let mut s = 0.0;
                        for x1 in 0..n {
                            for x2 in 0..n {
                                s += gamma[(c, x1, x2)] * a[x1] * b[x2];
                            }
                        }
                        s
                    })
                    .collect()
            };
            // nabla_{T_t} T_t = DV T_t + Gamma(T_t, T_t)
            let mut ntt: Vec<f64> = gamma_term(tt, tt);
            for (c, val) in ntt.iter_mut().enumerate() {
                for a in 0..n {
                    *val += dv[(c, a)] * tt[a];
                }
            }
            nabla_tt[i][j] = Some(ntt);
            // nabla_{T_t} T_s = DV T_s + Gamma(T_t, T_s)
            let mut nts: Vec<f64> = gamma_term(tt, ts);
            for (c, val) in nts.iter_mut().enumerate() {
                for a in 0..n {
                    *val += dv[(c, a)] * ts[a];
                }
            }
            nabla_ts[i][j] = Some(nts);
            // nabla_{T_s} T_s = d_s T_s + Gamma(T_s, T_s), interior in i.
            if i >= 2 && i + 2 < m {
                let d_s = fd5_first(
                    [
                        &tangent_s[i - 2][j],
                        &tangent_s[i - 1][j],
                        &tangent_s[i + 1][j],
                        &tangent_s[i + 2][j],
                    ],
                    h_s,
                );
                let mut nss = gamma_term(ts, ts);
                for (c, val) in nss.iter_mut().enumerate() {
                    *val += d_s[c];
                }
                nabla_ss[i][j] = Some(nss);
            }
        }
    }
    measure_patch(
        spacetime,
        points,
        tangent_s,
        tangent_t,
        DerivGrid {
            nabla_ss,
            nabla_ts,
            nabla_tt,
        },
        h_s,
        h_t,
    )
}

/// Control construction: the surface spanned by geodesics in the plane of
/// `q1`, `q2` (exp of the plane), measured with the same machinery. Used to
/// show that generic planes are not totally geodesic.
pub fn geodesic_spanned_surface(
    spacetime: &Spacetime,
    p: &ChartPoint,
    q1: &TangentVec,
    q2: &TangentVec,
    extent: (f64, f64),
    grid: (usize, usize),
) -> Result<SurfacePatch, VerifyError> {
    let (m, k) = grid;
    assert!(m >= 7 && k >= 7, "grid too coarse for the interior stencils");
    let n = spacetime.dim();
    let metric = spacetime.metric();
    let h_s = extent.0 / (m - 1) as f64;
    let h_t = extent.1 / (k - 1) as f64;
    let s_times: Vec<f64> = (0..m).map(|i| i as f64 * h_s).collect();
    let t_times: Vec<f64> = (0..k).map(|j| j as f64 * h_t).collect();

    // Spine geodesic along q1 carrying q2 by parallel transport.
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        let coords = &y[..n];
        let vel = &y[n..2 * n];
        let w = &y[2 * n..];
        let gamma = metric
            .christoffel_generic::<f64>(coords)
            .map_err(|e| e.to_string())?;
        dy[..n].copy_from_slice(vel);
        for c in 0..n {
            let mut sv = 0.0;
            let mut sw = 0.0;
            for a in 0..n {
                for b in 0..n {
                    sv -= gamma[(c, a, b)] * vel[a] * vel[b];
                    sw -= gamma[(c, a, b)] * vel[a] * w[b];
                }
            }
            dy[n + c] = sv;
            dy[2 * n + c] = sw;
        }
        Ok(())
    };
    let mut y0 = p.coords.clone();
    y0.extend_from_slice(&q1.components);
    y0.extend_from_slice(&q2.components);
    let mut stepper = Dopri5::new(rhs, 0.0, y0, extent.0, &SURFACE_TOL);
    let mut spine: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(m);
    spine.push((p.coords.clone(), q2.components.clone()));
    let mut next = 1usize;
    let mut buf = vec![0.0; 3 * n];
    while !stepper.done() && next < m {
        let step = stepper
            .step()
            .map_err(|e| VerifyError::Integration(e.to_string()))?;
        while next < m && s_times[next] <= step.t_new {
            stepper.dense(s_times[next], &mut buf);
            spine.push((buf[..n].to_vec(), buf[2 * n..].to_vec()));
            next += 1;
        }
    }
    if next < m {
        return Err(VerifyError::Integration(
            "spine geodesic ended before requested extent".into(),
        ));
    }

    let mut points = vec![vec![Vec::new(); k]; m];
    let mut tangent_t = vec![vec![Vec::new(); k]; m];
    for (i, (x0, w0)) in spine.iter().enumerate() {
        let init = GeodesicState::new(x0.clone(), w0.clone(), 0.0);
        let column = geodesic_states_at(spacetime, &init, &t_times)?;
        for (j, st) in column.into_iter().enumerate() {
            points[i][j] = st.point;
            tangent_t[i][j] = st.velocity;
        }
    }
    // T_s from a five-point stencil of positions across columns.
    let mut tangent_s = vec![vec![Vec::new(); k]; m];
    for i in 2..m - 2 {
        for j in 0..k {
            tangent_s[i][j] = fd5_first(
                [
                    &points[i - 2][j],
                    &points[i - 1][j],
                    &points[i + 1][j],
                    &points[i + 2][j],
                ],
                h_s,
            );
        }
    }
    let mut nabla_ss: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; k]; m];
    let mut nabla_ts: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; k]; m];
    let mut nabla_tt: Vec<Vec<Option<Vec<f64>>>> = vec![vec![None; k]; m];
    for i in 2..m - 2 {
        for j in 2..k - 2 {
            let x = &points[i][j];
            let gamma = metric.christoffel_generic::<f64>(x)?;
            let ts = &tangent_s[i][j];
            let tt = &tangent_t[i][j];
            let gamma_term = |a: &[f64], b: &[f64]| -> Vec<f64> {
                (0..n)
                    .map(|c| {
                        let mut s = 0.0;
                        for x1 in 0..n {
                            for x2 in 0..n {
                                s += gamma[(c, x1, x2)] * a[x1] * b[x2];
                            }
                        }
                        s
                    })
                    .collect()
            };
            let d_ss = fd5_second(
                [
                    &points[i - 2][j],
                    &points[i - 1][j],
                    &points[i][j],
                    &points[i + 1][j],
                    &points[i + 2][j],
                ],
                h_s,
            );
            let mut nss = gamma_term(ts, ts);
            for (c, val) in nss.iter_mut().enumerate() {
                *val += d_ss[c];
            }
            nabla_ss[i][j] = Some(nss);
            let d_t_ts = fd5_first(
                [
                    &tangent_s[i][j - 2],
                    &tangent_s[i][j - 1],
                    &tangent_s[i][j + 1],
                    &tangent_s[i][j + 2],
                ],
                h_t,
            );
            let mut nts = gamma_term(tt, ts);
            for (c, val) in nts.iter_mut().enumerate() {
                *val += d_t_ts[c];
            }
            nabla_ts[i][j] = Some(nts);
            let d_t_tt = fd5_first(
                [
                    &tangent_t[i][j - 2],
                    &tangent_t[i][j - 1],
                    &tangent_t[i][j + 1],
                    &tangent_t[i][j + 2],
                ],
                h_t,
            );
            let mut ntt = gamma_term(tt, tt);
            for (c, val) in ntt.iter_mut().enumerate() {
                *val += d_t_tt[c];
            }
            nabla_tt[i][j] = Some(ntt);
        }
    }
    measure_patch(
        spacetime,
        points,
        tangent_s,
        tangent_t,
        DerivGrid {
            nabla_ss,
            nabla_ts,
            nabla_tt,
        },
        h_s,
        h_t,
    )
}

/// Orthonormal frame of `E = V^perp / R V` represented by vectors in
/// `V^perp`.
#[derive(Debug, Clone)]
pub struct FrameOnE {
    pub base: ChartPoint,
    pub vectors: Vec<Vec<f64>>,
}

impl FrameOnE {
    /// Gram matrix of the representatives under g (should be the identity).
    pub fn gram(&self, spacetime: &Spacetime) -> Result<DMatrix<f64>, GeometryError> {
        let r = self.vectors.len();
        let mut gram = DMatrix::zeros(r, r);
        for i in 0..r {
            for j in 0..r {
                gram[(i, j)] =
                    spacetime.inner(&self.base.coords, &self.vectors[i], &self.vectors[j])?;
            }
        }
        Ok(gram)
    }
}

/// Build a g_E-orthonormal frame of `V^perp / R V` at `p` by projecting
/// coordinate directions into `V^perp` and Gram-Schmidting under g.
pub fn orthonormal_frame(spacetime: &Spacetime, p: &ChartPoint) -> Result<FrameOnE, VerifyError> {
    let field = spacetime
        .v_field()
        .ok_or_else(|| VerifyError::MissingField(spacetime.name().to_string()))?;
    let n = spacetime.dim();
    let v = field.eval_f64(&p.coords).map_err(GeometryError::Eval)?;
    // Transverse direction with g(Z, V) != 0 used to project onto V^perp.
    let mut z_axis = 0;
    let mut z_pair = 0.0_f64;
    let mut axis = vec![0.0; n];
    for k in 0..n {
        axis.fill(0.0);
        axis[k] = 1.0;
        let pair = spacetime.inner(&p.coords, &axis, &v)?;
        if pair.abs() > z_pair.abs() {
            z_pair = pair;
            z_axis = k;
        }
    }
    if z_pair.abs() < 1e-12 {
        return Err(VerifyError::Integration(
            "distinguished field is orthogonal to every coordinate direction".into(),
        ));
    }
    let mut z = vec![0.0; n];
    z[z_axis] = 1.0;
    let mut frame: Vec<Vec<f64>> = Vec::new();
    for k in 0..n {
        if frame.len() == n - 2 {
            break;
        }
        let mut w = vec![0.0; n];
        w[k] = 1.0;
        // Project into V^perp.
        let pair = spacetime.inner(&p.coords, &w, &v)?;
        for (wi, zi) in w.iter_mut().zip(&z) {
            *wi -= pair / z_pair * zi;
        }
        // Gram-Schmidt under g against the accepted frame vectors.
        for f in &frame {
            let d = spacetime.inner(&p.coords, &w, f)?;
            for (wi, fi) in w.iter_mut().zip(f) {
                *wi -= d * fi;
            }
        }
        let norm2 = spacetime.inner(&p.coords, &w, &w)?;
        if norm2 > 1e-10 {
            let norm = norm2.sqrt();
            for wi in &mut w {
                *wi /= norm;
            }
            frame.push(w);
        }
    }
    if frame.len() != n - 2 {
        return Err(VerifyError::Integration(
            "failed to assemble a full frame of V^perp / V".into(),
        ));
    }
    Ok(FrameOnE {
        base: p.clone(),
        vectors: frame,
    })
}

#[derive(Debug, Clone)]
pub struct FrameTransport {
    pub frame: FrameOnE,
    /// Max over frame vectors of the distance (mod R V) between parallel
    /// transport along the orbit and the flow pushforward.
    pub horizontality_residual: f64,
    /// Max deviation of the transported Gram matrix from the identity.
    pub gram_deviation: f64,
}

/// Parallel transport a frame of `E` along the orbit of the distinguished
/// field for time `t`; the result must agree with the flow pushforward
/// modulo `R V` when the field is parallel.
pub fn frame_transport_along_v(
    spacetime: &Spacetime,
    frame: &FrameOnE,
    t: f64,
) -> Result<FrameTransport, VerifyError> {
    let cert = brinkmann_certificate(spacetime)?;
    if !cert.pass {
        return Err(VerifyError::CertificateFailed(spacetime.name().to_string()));
    }
    frame_transport_unchecked(spacetime, frame, t)
}

/// Transport without the certificate gate (used internally and by tests on
/// fields that are not parallel).
pub fn frame_transport_unchecked(
    spacetime: &Spacetime,
    frame: &FrameOnE,
    t: f64,
) -> Result<FrameTransport, VerifyError> {
    let field = spacetime
        .v_field()
        .ok_or_else(|| VerifyError::MissingField(spacetime.name().to_string()))?
        .clone();
    let metric = spacetime.metric();
    let n = metric.dim();
    let r = frame.vectors.len();
    // State: orbit point, r parallel-transported vectors, r pushed vectors.
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), String> {
        let coords = &y[..n];
        let (v, dv) = field.eval_with_jacobian(coords).map_err(|e| e.to_string())?;
        let gamma = metric
            .christoffel_generic::<f64>(coords)
            .map_err(|e| e.to_string())?;
        dy[..n].copy_from_slice(&v);
        for i in 0..r {
            let e = &y[n + i * n..n + (i + 1) * n];
            let w = &y[n + (r + i) * n..n + (r + i + 1) * n];
            for c in 0..n {
                let mut se = 0.0;
                let mut sw = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        se -= gamma[(c, a, b)] * v[a] * e[b];
                    }
                    sw += dv[(c, a)] * w[a];
                }
                dy[n + i * n + c] = se;
                dy[n + (r + i) * n + c] = sw;
            }
        }
        Ok(())
    };
    let mut y0 = frame.base.coords.clone();
    for e in &frame.vectors {
        y0.extend_from_slice(e);
    }
    for e in &frame.vectors {
        y0.extend_from_slice(e);
    }
    let opts = Options {
        rel_tol: 1e-12,
        abs_tol: 1e-13,
        ..Options::default()
    };
    let sol = crate::ode::integrate(rhs, 0.0, y0, t, &opts, |_, _| crate::ode::Control::Continue)
        .map_err(|e| VerifyError::Integration(e.to_string()))?;
    let endpoint = sol.y[..n].to_vec();
    let v_end = field.eval_f64(&endpoint).map_err(GeometryError::Eval)?;
    // Reproject transported vectors into V^perp before comparing.
    let mut z_axis = 0;
    let mut z_pair = 0.0_f64;
    let mut axis = vec![0.0; n];
    for k in 0..n {
        axis.fill(0.0);
        axis[k] = 1.0;
        let pair = spacetime.inner(&endpoint, &axis, &v_end)?;
        if pair.abs() > z_pair.abs() {
            z_pair = pair;
            z_axis = k;
        }
    }
    let mut transported: Vec<Vec<f64>> = Vec::with_capacity(r);
    let mut horizontality = 0.0_f64;
    let v_norm2: f64 = v_end.iter().map(|x| x * x).sum();
    for i in 0..r {
        let mut e = sol.y[n + i * n..n + (i + 1) * n].to_vec();
        let pushed = &sol.y[n + (r + i) * n..n + (r + i + 1) * n];
        let pair = spacetime.inner(&endpoint, &e, &v_end)?;
        if z_pair.abs() > 1e-12 {
            e[z_axis] -= pair / z_pair;
        }
        // Distance between transport and pushforward modulo R V.
        let d: Vec<f64> = e.iter().zip(pushed).map(|(a, b)| a - b).collect();
        let c = if v_norm2 > 0.0 {
            d.iter().zip(&v_end).map(|(a, b)| a * b).sum::<f64>() / v_norm2
        } else {
            0.0
        };
        let res: f64 = d
            .iter()
            .zip(&v_end)
            .map(|(a, b)| (a - c * b) * (a - c * b))
            .sum::<f64>()
            .sqrt();
        horizontality = horizontality.max(res);
        transported.push(e);
    }
    let out_frame = FrameOnE {
        base: ChartPoint::new(endpoint),
        vectors: transported,
    };
    let gram = out_frame.gram(spacetime)?;
    let mut gram_dev = 0.0_f64;
    for i in 0..r {
        for j in 0..r {
            let expect = if i == j { 1.0 } else { 0.0 };
            gram_dev = gram_dev.max((gram[(i, j)] - expect).abs());
        }
    }
    Ok(FrameTransport {
        frame: out_frame,
        horizontality_residual: horizontality,
        gram_deviation: gram_dev,
    })
}

/// Per-sample data for the Ricci/harmonic comparison.
#[derive(Debug, Clone, Serialize)]
pub struct RicciSample {
    pub point: Vec<f64>,
    pub ricci_uu: f64,
    pub laplacian: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RicciHarmonicReport {
    pub profile: String,
    pub transverse_dim: usize,
    pub max_ricci_residual: f64,
    pub max_laplacian_residual: f64,
    pub samples: Vec<RicciSample>,
}

/// For the pp-wave with profile `H`, compare the full Ricci tensor against
/// the transverse Laplacian of `H` at quasi-random sample points: the two
/// vanish together.
pub fn ppwave_ricci_harmonic(
    h_text: &str,
    transverse_dim: usize,
    sample_count: usize,
) -> Result<RicciHarmonicReport, VerifyError> {
    assert!(transverse_dim >= 1);
    let spacetime = catalog::pp_wave_custom(h_text, transverse_dim).map_err(Box::new)?;
    let n = spacetime.dim();
    let coords: Vec<String> = spacetime.spec.doc.coordinates.clone();
    let h_expr = parse_expr(h_text, &coords).map_err(|e| {
        VerifyError::Integration(format!("profile failed to parse: {e}"))
    })?;
    let points = domain_samples(&spacetime, sample_count.max(1));
    let mut max_ricci = 0.0_f64;
    let mut max_lap = 0.0_f64;
    let mut samples = Vec::with_capacity(points.len());
    for p in points {
        let curv = spacetime.metric().curvature(&ChartPoint::new(p.clone()))?;
        max_ricci = max_ricci.max(curv.ricci_max_abs());
        // Transverse Laplacian via nested duals.
        let outer = seed(&p);
        let nested: Vec<Dual<Dual<f64>>> = outer
            .iter()
            .enumerate()
            .map(|(i, &o)| Dual::variable(o, i, n))
            .collect();
        let h_val = h_expr.eval(&nested).map_err(GeometryError::Eval)?;
        let mut lap = 0.0;
        for i in 2..n {
            lap += h_val.partial(i).partial(i);
        }
        max_lap = max_lap.max(lap.abs());
        samples.push(RicciSample {
            point: p,
            ricci_uu: curv.ricci[(0, 0)],
            laplacian: lap,
        });
    }
    Ok(RicciHarmonicReport {
        profile: h_text.to_string(),
        transverse_dim,
        max_ricci_residual: max_ricci,
        max_laplacian_residual: max_lap,
        samples,
    })
}

/// Fitted slope bound for the transverse-velocity growth of geodesics with
/// `g(v, V) = 1`, uniform across initial speeds.
#[derive(Debug, Clone, Serialize)]
pub struct NormGrowthReport {
    pub epsilon: f64,
    /// Max over fit trials of `(|xdot(t)|_0 / |xdot(0)|_0 - 1) / t`.
    pub fitted_c: f64,
    pub per_speed_max: Vec<(f64, f64)>,
    /// Trials among the check speeds that exceed `1 + 1.05 fitted_c t`.
    pub violations: usize,
    pub trials_per_speed: usize,
}

/// Transverse norm of a velocity under the slice metric frozen at `u0`.
fn slice_norm(spacetime: &Spacetime, u0: f64, x: &[f64], xdot: &[f64]) -> Result<f64, VerifyError> {
    let n = spacetime.dim();
    let mut point = vec![0.0; n];
    point[0] = u0;
    point[2..].copy_from_slice(x);
    let g = spacetime
        .metric()
        .matrix_at(&point)
        .map_err(GeometryError::Eval)?;
    let mut s = 0.0;
    for i in 0..n - 2 {
        for j in 0..n - 2 {
            s += g[(i + 2, j + 2)] * xdot[i] * xdot[j];
        }
    }
    Ok(s.max(0.0).sqrt())
}

struct GrowthCurve {
    /// `(t, ratio)` samples with `ratio = |xdot(t)|_0 / |xdot(0)|_0`.
    samples: Vec<(f64, f64)>,
}

fn growth_trial(
    spacetime: &Spacetime,
    speed: f64,
    epsilon: f64,
    seed_val: u64,
    index: u64,
) -> Result<GrowthCurve, VerifyError> {
    let n = spacetime.dim();
    let m = n - 2;
    let mut rng = trajectory_rng(seed_val, index);
    let u0: f64 = rng.gen::<f64>();
    let x0: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let mut dir: Vec<f64> = (0..m).map(|_| standard_normal(&mut rng)).collect();
    let norm0 = slice_norm(spacetime, u0, &x0, &dir)?;
    for d in &mut dir {
        *d *= speed / norm0.max(1e-12);
    }
    let mut point = vec![0.0; n];
    point[0] = u0;
    point[2..].copy_from_slice(&x0);
    let mut velocity = vec![0.0; n];
    velocity[0] = 1.0;
    velocity[2..].copy_from_slice(&dir);
    let init = GeodesicState::new(point, velocity, 0.0);
    let horizon = epsilon / speed;
    let cfg = IntegratorConfig {
        deck_normalization: false,
        ..IntegratorConfig::default()
    };
    let traj = crate::geodesic::integrate_geodesic(spacetime, &init, horizon, &cfg)?;
    let mut samples = Vec::with_capacity(traj.samples.len());
    for st in &traj.samples {
        if st.affine_param <= 0.0 {
            continue;
        }
        let xdot: Vec<f64> = st.velocity[2..].to_vec();
        let x: Vec<f64> = st.point[2..].to_vec();
        let norm = slice_norm(spacetime, u0, &x, &xdot)?;
        samples.push((st.affine_param, norm / speed));
    }
    Ok(GrowthCurve { samples })
}

/// Fit the lemma constant `C` on `fit_speeds` and count violations of the
/// envelope `1 + 1.05 C t` on `check_speeds`, with `epsilon` fixed at 0.1.
pub fn norm_growth_bound(
    spacetime: &Spacetime,
    fit_speeds: &[f64],
    check_speeds: &[f64],
    trials_per_speed: usize,
    seed_val: u64,
) -> Result<NormGrowthReport, VerifyError> {
    if spacetime.metric().chart_kind() != ChartKind::Rosen {
        return Err(VerifyError::WrongChart(spacetime.metric().chart_kind()));
    }
    if !spacetime.claims_compact_quotient() {
        return Err(VerifyError::NotCompactQuotient);
    }
    let epsilon = 0.1;
    let mut fitted_c = 0.0_f64;
    let mut per_speed_max = Vec::new();
    let mut curves: Vec<GrowthCurve> = Vec::new();
    for (si, &speed) in fit_speeds.iter().enumerate() {
        let mut speed_max = 0.0_f64;
        for k in 0..trials_per_speed {
            let curve = growth_trial(
                spacetime,
                speed,
                epsilon,
                seed_val,
                (si * trials_per_speed + k) as u64,
            )?;
            for &(t, ratio) in &curve.samples {
                speed_max = speed_max.max((ratio - 1.0) / t);
            }
            curves.push(curve);
        }
        per_speed_max.push((speed, speed_max.max(0.0)));
        fitted_c = fitted_c.max(speed_max);
    }
    let fitted_c = fitted_c.max(0.0);
    // Violation count against the fitted envelope over the check speeds,
    // drawn from an independent seed stream.
    let envelope_violated = |curve: &GrowthCurve| {
        curve
            .samples
            .iter()
            .any(|&(t, ratio)| ratio > 1.0 + 1.05 * fitted_c * t + 1e-9)
    };
    let mut violations = curves.iter().filter(|c| envelope_violated(c)).count();
    for (si, &speed) in check_speeds.iter().enumerate() {
        if fit_speeds.contains(&speed) {
            continue;
        }
        for k in 0..trials_per_speed {
            let curve = growth_trial(
                spacetime,
                speed,
                epsilon,
                seed_val.wrapping_add(1),
                (si * trials_per_speed + k) as u64,
            )?;
            if envelope_violated(&curve) {
                violations += 1;
            }
        }
    }
    Ok(NormGrowthReport {
        epsilon,
        fitted_c,
        per_speed_max,
        violations,
        trials_per_speed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build, Params};

    #[test]
    fn minkowski_certificate_is_exact() {
        let st = build("minkowski", &Params::new()).unwrap();
        let cert = brinkmann_certificate(&st).unwrap();
        assert!(cert.pass);
        assert!(cert.max_nabla_v < 1e-13);
        assert!(cert.max_g_vv < 1e-13);
        assert!(cert.max_d_alpha < 1e-13);
        assert!(cert.sample_count >= 100);
    }

    #[test]
    fn pp_wave_certificate_passes() {
        let st = build("pp_wave", &Params::new()).unwrap();
        let cert = brinkmann_certificate(&st).unwrap();
        assert!(cert.pass, "residuals: {:?}", cert.checks);
        assert!(cert.max_nabla_v < 1e-10);
    }

    #[test]
    fn clifton_pohl_3d_null_killing_but_not_parallel() {
        let st = build("clifton_pohl_3d", &Params::new()).unwrap();
        let cert = brinkmann_certificate(&st).unwrap();
        assert!(!cert.pass);
        assert!(cert.max_g_vv < 1e-12, "null residual {}", cert.max_g_vv);
        assert!(cert.max_killing < 1e-8, "killing residual {}", cert.max_killing);
        assert!(cert.max_nabla_v > 0.1, "parallel residual {}", cert.max_nabla_v);
    }

    #[test]
    fn certificate_requires_field() {
        let st = build("clifton_pohl", &Params::new()).unwrap();
        assert!(matches!(
            brinkmann_certificate(&st),
            Err(VerifyError::MissingField(_))
        ));
    }

    #[test]
    fn minkowski_plane_with_v_is_flat() {
        let st = build("minkowski", &Params::new()).unwrap();
        let p = ChartPoint::new(vec![0.0, 0.0, 0.0]);
        let q = TangentVec::new(vec![0.4, -0.3, 1.0], p.clone());
        let patch = totally_geodesic_surface(&st, &p, &q, (0.2, 0.2), (11, 11)).unwrap();
        assert!(patch.max_ii < 1e-11, "II {}", patch.max_ii);
        assert!(
            patch.max_induced_curvature < 1e-9,
            "curvature {}",
            patch.max_induced_curvature
        );
    }

    #[test]
    fn pp_wave_v_plane_is_totally_geodesic_flat() {
        let mut params = Params::new();
        params.insert("H".into(), "x1^3".into());
        params.insert("n".into(), "1".into());
        let st = build("pp_wave", &params).unwrap();
        let p = ChartPoint::new(vec![0.1, 0.0, 0.8]);
        // Q transverse to the leaves (udot nonzero) and independent of V.
        let q = TangentVec::new(vec![1.0, -0.2, 0.7], p.clone());
        let patch = totally_geodesic_surface(&st, &p, &q, (0.2, 0.2), (21, 21)).unwrap();
        assert!(patch.max_ii < 1e-6, "II {}", patch.max_ii);
        assert!(
            patch.max_induced_curvature < 1e-6,
            "curvature {}",
            patch.max_induced_curvature
        );
    }

    #[test]
    fn pp_wave_control_plane_is_not_totally_geodesic() {
        let mut params = Params::new();
        params.insert("H".into(), "x1^3".into());
        params.insert("n".into(), "1".into());
        let st = build("pp_wave", &params).unwrap();
        let p = ChartPoint::new(vec![0.1, 0.0, 0.8]);
        let q1 = TangentVec::new(vec![1.0, -0.3, 0.0], p.clone());
        let q2 = TangentVec::new(vec![0.0, 0.0, 1.0], p.clone());
        let patch = geodesic_spanned_surface(&st, &p, &q1, &q2, (0.2, 0.2), (21, 21)).unwrap();
        assert!(patch.max_ii > 1e-3, "control II {}", patch.max_ii);
    }

    #[test]
    fn rosen_coordinate_frame_transports_to_itself() {
        let st = build("rosen_torus", &Params::new()).unwrap();
        let p = ChartPoint::new(vec![0.3, 0.2, 0.4, 0.6]);
        let frame = orthonormal_frame(&st, &p).unwrap();
        let before = frame.vectors.clone();
        let out = frame_transport_along_v(&st, &frame, 2.5).unwrap();
        assert!(out.horizontality_residual < 1e-8, "res {}", out.horizontality_residual);
        assert!(out.gram_deviation < 1e-8);
        for (a, b) in out.frame.vectors.iter().zip(&before) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-8, "frame moved: {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn frame_transport_roundtrip() {
        let mut params = Params::new();
        params.insert("H".into(), "u*x1^2".into());
        params.insert("n".into(), "2".into());
        let st = build("pp_wave", &params).unwrap();
        let p = ChartPoint::new(vec![0.2, 0.0, 0.5, -0.3]);
        let frame = orthonormal_frame(&st, &p).unwrap();
        let fwd = frame_transport_along_v(&st, &frame, 1.0).unwrap();
        assert!(fwd.gram_deviation < 1e-8);
        assert!(fwd.horizontality_residual < 1e-8);
        let back = frame_transport_along_v(&st, &fwd.frame, -1.0).unwrap();
        for (a, b) in back.frame.vectors.iter().zip(&frame.vectors) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn harmonic_profile_is_ricci_flat() {
        let rep = ppwave_ricci_harmonic("x1^2 - x2^2", 2, 40).unwrap();
        assert!(rep.max_ricci_residual < 1e-8, "ricci {}", rep.max_ricci_residual);
        assert!(rep.max_laplacian_residual < 1e-8);
    }

    #[test]
    fn nonharmonic_profile_has_matching_residuals() {
        let rep = ppwave_ricci_harmonic("x1^2 + x2^2", 2, 40).unwrap();
        assert_eq!(rep.max_laplacian_residual, 4.0);
        assert!(rep.max_ricci_residual > 1.0);
        // ricci_uu / laplacian is the same at every sample.
        let ratios: Vec<f64> = rep
            .samples
            .iter()
            .map(|s| s.ricci_uu / s.laplacian)
            .collect();
        for r in &ratios {
            assert!((r - ratios[0]).abs() < 1e-10, "ratios {ratios:?}");
        }
    }

    #[test]
    fn zero_profile_is_flat() {
        let rep = ppwave_ricci_harmonic("0", 2, 10).unwrap();
        assert_eq!(rep.max_ricci_residual, 0.0);
        assert_eq!(rep.max_laplacian_residual, 0.0);
    }

    #[test]
    fn norm_growth_on_static_torus_is_flat() {
        let mut params = Params::new();
        params.insert("a11".into(), "1".into());
        let st = build("rosen_torus", &params).unwrap();
        let rep = norm_growth_bound(&st, &[1.0, 10.0], &[1.0, 10.0], 5, 11).unwrap();
        assert!(rep.fitted_c < 1e-9, "C {}", rep.fitted_c);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn norm_growth_speed_uniform() {
        let st = build("rosen_torus", &Params::new()).unwrap();
        let rep = norm_growth_bound(&st, &[1.0, 10.0, 100.0], &[1000.0], 8, 11).unwrap();
        assert!(rep.fitted_c > 0.0);
        assert_eq!(rep.violations, 0, "C = {}", rep.fitted_c);
    }

    #[test]
    fn norm_growth_requires_rosen_chart() {
        let st = build("suspension_anosov", &Params::new()).unwrap();
        assert!(matches!(
            norm_growth_bound(&st, &[1.0], &[1.0], 2, 0),
            Err(VerifyError::WrongChart(_))
        ));
    }
}
