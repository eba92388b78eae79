//! Command-line surface: catalog listing, geodesic runs, completeness scans,
//! Brinkmann certification, flow diagnostics and custom spec ingestion.
//!
//! Exit codes: 0 on success (a failing certificate is still a successful
//! run — the verdict is data), 1 on domain/library errors, 2 on argument
//! errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use brinkmann_core::catalog::{self, CatalogError, Params};
use brinkmann_core::dynamics::equicontinuity_diagnostic;
use brinkmann_core::expr::parse_expr;
use brinkmann_core::geodesic::{
    completeness_scan, integrate_geodesic, GeodesicState, IntegratorConfig,
};
use brinkmann_core::geometry::{ChartPoint, TangentVec, VectorField};
use brinkmann_core::report;
use brinkmann_core::schema::load_spacetime_spec;
use brinkmann_core::spacetime::Spacetime;
use brinkmann_core::verify::{
    brinkmann_certificate, frame_transport_unchecked, orthonormal_frame, ppwave_ricci_harmonic,
    totally_geodesic_surface,
};

#[derive(Parser)]
#[command(
    name = "brinkmann",
    about = "Numerical laboratory for Brinkmann spacetimes: geodesics, completeness scans, structure certificates and flow diagnostics",
    version
)]
struct Cli {
    /// Worker threads for scan/flow subcommands (env: BRINKMANN_JOBS;
    /// default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SpacetimeSource {
    /// Catalog key (see `brinkmann list`).
    #[arg(long)]
    spacetime: Option<String>,
    /// Path to a JSON spacetime specification.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Catalog parameter `key=value`; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print catalog keys with descriptions and parameter schemas.
    List,
    /// Integrate one geodesic and write the trajectory.
    Geodesic {
        #[command(flatten)]
        source: SpacetimeSource,
        /// Initial state "p;v": two semicolon-separated coordinate lists.
        #[arg(long)]
        init: String,
        /// Affine-parameter horizon.
        #[arg(long)]
        tmax: f64,
        /// Relative integration tolerance.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        /// Output format (json or csv); inferred from the extension if omitted.
        #[arg(long)]
        format: Option<String>,
    },
    /// Run a seeded completeness scan.
    Scan {
        #[command(flatten)]
        source: SpacetimeSource,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<String>,
    },
    /// Evaluate the Brinkmann structure certificate.
    Certify {
        #[command(flatten)]
        source: SpacetimeSource,
        /// Also build the swept-surface and frame-transport sub-reports.
        #[arg(long)]
        full: bool,
        /// With --full, also write the surface grid as CSV for plotting.
        #[arg(long)]
        patch_csv: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Diagnose equicontinuity of a vector-field flow.
    Flow {
        #[command(flatten)]
        source: SpacetimeSource,
        /// "V" for the distinguished field, or comma-separated component
        /// expressions.
        #[arg(long, default_value = "V")]
        field: String,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Option<String>,
    },
    /// Compare pp-wave Ricci curvature against the transverse laplacian of H.
    Ricci {
        /// Wave profile H(u, x1..xn).
        #[arg(long = "H")]
        profile: String,
        /// Number of transverse coordinates.
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Argument-level failure: exits with status 2 and usage-style text.
struct ArgError(String);
/// Library/domain failure: exits with status 1.
struct RunError(String);

enum CliError {
    Arg(ArgError),
    Run(RunError),
}

impl From<ArgError> for CliError {
    fn from(e: ArgError) -> Self {
        CliError::Arg(e)
    }
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError::Run(e)
    }
}

fn run_error<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Run(RunError(e.to_string()))
}

fn parse_params(pairs: &[String]) -> Result<Params, CliError> {
    let mut params = Params::new();
    for pair in pairs {
        match pair.split_once('=') {
            Some((k, v)) => {
                params.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => {
                return Err(ArgError(format!("--param expects KEY=VALUE, got `{pair}`")).into())
            }
        }
    }
    Ok(params)
}

fn load_spacetime(source: &SpacetimeSource) -> Result<Spacetime, CliError> {
    match (&source.spacetime, &source.spec) {
        (Some(_), Some(_)) => {
            Err(ArgError("supply exactly one of --spacetime and --spec".into()).into())
        }
        (None, None) => Err(ArgError(
            "a spacetime is required: --spacetime KEY or --spec FILE".into(),
        )
        .into()),
        (Some(key), None) => {
            let params = parse_params(&source.params)?;
            catalog::build(key, &params).map_err(|e| match e {
                CatalogError::UnknownName { name, valid } => CliError::Arg(ArgError(format!(
                    "unknown spacetime `{name}`\n\nusage: --spacetime <KEY>\nvalid keys: {valid}"
                ))),
                CatalogError::InvalidParam { .. } => CliError::Arg(ArgError(e.to_string())),
                other => run_error(other),
            })
        }
        (None, Some(path)) => {
            if !source.params.is_empty() {
                return Err(ArgError("--param only applies to catalog spacetimes".into()).into());
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| run_error(format!("cannot read {}: {e}", path.display())))?;
            let spec = load_spacetime_spec(&text).map_err(run_error)?;
            Spacetime::new(spec).map_err(run_error)
        }
    }
}

fn parse_init(init: &str, dim: usize) -> Result<GeodesicState, CliError> {
    let mut halves = init.split(';');
    let (p, v) = match (halves.next(), halves.next(), halves.next()) {
        (Some(p), Some(v), None) => (p, v),
        _ => {
            return Err(ArgError(format!(
                "--init expects \"p;v\" (e.g. \"1,0;1,0\"), got `{init}`"
            ))
            .into())
        }
    };
    let parse_list = |s: &str| -> Result<Vec<f64>, CliError> {
        s.split(',')
            .map(|x| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|_| ArgError(format!("`{x}` is not a number in --init")).into())
            })
            .collect()
    };
    let p = parse_list(p)?;
    let v = parse_list(v)?;
    if p.len() != dim || v.len() != dim {
        return Err(ArgError(format!(
            "--init lists must each have {dim} entries for this chart, got {} and {}",
            p.len(),
            v.len()
        ))
        .into());
    }
    Ok(GeodesicState::new(p, v, 0.0))
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Json,
    Csv,
}

fn pick_format(flag: &Option<String>, out: &Path) -> Result<Format, CliError> {
    if let Some(f) = flag {
        return match f.as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(ArgError(format!("--format must be json or csv, got `{other}`")).into()),
        };
    }
    match out.extension().and_then(|e| e.to_str()) {
        Some("csv") => Ok(Format::Csv),
        _ => Ok(Format::Json),
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| run_error(format!("cannot write {}: {e}", path.display())))
}

fn resolve_field(spacetime: &Spacetime, spec: &str) -> Result<VectorField, CliError> {
    if spec == "V" {
        return spacetime.v_field().cloned().ok_or_else(|| {
            run_error(format!(
                "spacetime `{}` has no distinguished field; pass --field with explicit components",
                spacetime.name()
            ))
        });
    }
    let coords = spacetime.spec.doc.coordinates.clone();
    let comps: Result<Vec<_>, _> = spec
        .split(',')
        .map(|text| parse_expr(text.trim(), &coords))
        .collect();
    let comps = comps.map_err(|e| ArgError(format!("--field component failed to parse: {e}")))?;
    if comps.len() != spacetime.dim() {
        return Err(ArgError(format!(
            "--field needs {} components for this chart, got {}",
            spacetime.dim(),
            comps.len()
        ))
        .into());
    }
    Ok(VectorField::new(comps))
}

#[derive(Serialize)]
struct TrajectoryReport<'a> {
    spacetime: &'a str,
    coordinates: &'a [String],
    tmax: f64,
    rel_tol: f64,
    init_point: &'a [f64],
    init_velocity: &'a [f64],
    trajectory: &'a brinkmann_core::geodesic::Trajectory,
}

#[derive(Serialize)]
struct FrameTransportReport {
    time: f64,
    horizontality_residual: f64,
    gram_deviation: f64,
    base: Vec<f64>,
    vectors: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct CertifyReport<'a> {
    certificate: &'a brinkmann_core::verify::BrinkmannCertificate,
    #[serde(skip_serializing_if = "Option::is_none")]
    surface: Option<brinkmann_core::verify::SurfacePatch>,
    #[serde(skip_serializing_if = "Option::is_none")]
    frame_transport: Option<FrameTransportReport>,
}

fn cmd_list() {
    println!("available spacetimes:");
    for e in catalog::ENTRIES {
        println!("  {:<18} {}", e.key, e.description);
        for p in e.params {
            println!(
                "      --param {}=<value>   {} (default: {})",
                p.name, p.description, p.default
            );
        }
    }
}

fn integrator_config(tol: f64) -> IntegratorConfig {
    IntegratorConfig {
        rel_tol: tol,
        abs_tol: tol * 1e-2,
        ..IntegratorConfig::default()
    }
}

fn cmd_geodesic(
    source: &SpacetimeSource,
    init: &str,
    tmax: f64,
    tol: f64,
    out: &Path,
    format: &Option<String>,
) -> Result<(), CliError> {
    if tmax <= 0.0 {
        return Err(ArgError("--tmax must be positive".into()).into());
    }
    let st = load_spacetime(source)?;
    let init = parse_init(init, st.dim())?;
    let cfg = integrator_config(tol);
    let traj = integrate_geodesic(&st, &init, tmax, &cfg).map_err(run_error)?;
    match pick_format(format, out)? {
        Format::Json => {
            let rep = TrajectoryReport {
                spacetime: st.name(),
                coordinates: &st.spec.doc.coordinates,
                tmax,
                rel_tol: tol,
                init_point: &init.point,
                init_velocity: &init.velocity,
                trajectory: &traj,
            };
            write_out(out, &report::to_canonical_json(&rep))?;
        }
        Format::Csv => {
            write_out(
                out,
                &report::trajectory_to_csv(&traj, &st.spec.doc.coordinates),
            )?;
        }
    }
    eprintln!(
        "geodesic on {}: {} after {} accepted steps",
        st.name(),
        traj.termination.kind_str(),
        traj.accepted_steps
    );
    Ok(())
}

fn cmd_scan(
    source: &SpacetimeSource,
    samples: usize,
    seed: u64,
    tmax: f64,
    tol: f64,
    out: &Path,
    format: &Option<String>,
) -> Result<(), CliError> {
    if samples == 0 {
        return Err(ArgError("--samples must be at least 1".into()).into());
    }
    if tmax <= 0.0 {
        return Err(ArgError("--tmax must be positive".into()).into());
    }
    let st = load_spacetime(source)?;
    let cfg = integrator_config(tol);
    let report_data = completeness_scan(&st, seed, samples, tmax, &cfg);
    match pick_format(format, out)? {
        Format::Json => write_out(out, &report::to_canonical_json(&report_data))?,
        Format::Csv => write_out(out, &report::scan_to_csv(&report_data))?,
    }
    eprintln!(
        "scan on {}: {}/{} complete to T={}",
        st.name(),
        (report_data.complete_fraction * samples as f64).round() as usize,
        samples,
        tmax
    );
    Ok(())
}

fn cmd_certify(
    source: &SpacetimeSource,
    full: bool,
    patch_csv: &Option<PathBuf>,
    out: &Path,
) -> Result<(), CliError> {
    if patch_csv.is_some() && !full {
        return Err(ArgError("--patch-csv requires --full".into()).into());
    }
    let st = load_spacetime(source)?;
    let cert = brinkmann_certificate(&st).map_err(run_error)?;
    let mut surface = None;
    let mut frame = None;
    if full && cert.pass {
        // Sweep a generic transverse direction from the base point.
        let p = ChartPoint::new(st.base_point.clone());
        let mut q = vec![0.0; st.dim()];
        q[0] = 1.0;
        if st.dim() > 2 {
            q[2] = 0.6;
        }
        let q = TangentVec::new(q, p.clone());
        surface =
            Some(totally_geodesic_surface(&st, &p, &q, (0.2, 0.2), (21, 21)).map_err(run_error)?);
        let f = orthonormal_frame(&st, &p).map_err(run_error)?;
        let t = 1.0;
        let transported = frame_transport_unchecked(&st, &f, t).map_err(run_error)?;
        frame = Some(FrameTransportReport {
            time: t,
            horizontality_residual: transported.horizontality_residual,
            gram_deviation: transported.gram_deviation,
            base: transported.frame.base.coords.clone(),
            vectors: transported.frame.vectors.clone(),
        });
    }
    if let (Some(path), Some(patch)) = (patch_csv, &surface) {
        write_out(path, &report::patch_to_csv(patch, &st.spec.doc.coordinates))?;
    }
    let rep = CertifyReport {
        certificate: &cert,
        surface,
        frame_transport: frame,
    };
    write_out(out, &report::to_canonical_json(&rep))?;
    eprintln!(
        "certificate for {}: {}",
        st.name(),
        if cert.pass { "pass" } else { "fail" }
    );
    Ok(())
}

fn cmd_flow(
    source: &SpacetimeSource,
    field: &str,
    samples: usize,
    tmax: f64,
    seed: u64,
    out: &Path,
    format: &Option<String>,
) -> Result<(), CliError> {
    if samples == 0 {
        return Err(ArgError("--samples must be at least 1".into()).into());
    }
    if tmax <= 0.0 {
        return Err(ArgError("--tmax must be positive".into()).into());
    }
    let st = load_spacetime(source)?;
    let field = resolve_field(&st, field)?;
    let rep = equicontinuity_diagnostic(&st, &field, samples, tmax, seed);
    match pick_format(format, out)? {
        Format::Json => write_out(out, &report::to_canonical_json(&rep))?,
        Format::Csv => write_out(out, &report::flow_to_csv(&rep))?,
    }
    eprintln!(
        "flow on {}: {:?} (max log-norm {:.3e})",
        st.name(),
        rep.classification,
        rep.max_log_norm
    );
    Ok(())
}

fn cmd_ricci(profile: &str, dim: usize, samples: usize, out: &Path) -> Result<(), CliError> {
    if dim == 0 || dim > 9 {
        return Err(ArgError("--dim must be between 1 and 9".into()).into());
    }
    let rep = ppwave_ricci_harmonic(profile, dim, samples).map_err(run_error)?;
    write_out(out, &report::to_canonical_json(&rep))?;
    eprintln!(
        "ricci check: max |Ric| {:.3e}, max |laplacian H| {:.3e}",
        rep.max_ricci_residual, rep.max_laplacian_residual
    );
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let jobs = cli
        .jobs
        .or_else(|| {
            std::env::var("BRINKMANN_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(run_error)?;
    pool.install(|| match &cli.command {
        Command::List => {
            cmd_list();
            Ok(())
        }
        Command::Geodesic {
            source,
            init,
            tmax,
            tol,
            out,
            format,
        } => cmd_geodesic(source, init, *tmax, *tol, out, format),
        Command::Scan {
            source,
            samples,
            seed,
            tmax,
            tol,
            out,
            format,
        } => cmd_scan(source, *samples, *seed, *tmax, *tol, out, format),
        Command::Certify {
            source,
            full,
            patch_csv,
            out,
        } => cmd_certify(source, *full, patch_csv, out),
        Command::Flow {
            source,
            field,
            samples,
            tmax,
            seed,
            out,
            format,
        } => cmd_flow(source, field, *samples, *tmax, *seed, out, format),
        Command::Ricci {
            profile,
            dim,
            samples,
            out,
        } => cmd_ricci(profile, *dim, *samples, out),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Arg(ArgError(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Run(RunError(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
