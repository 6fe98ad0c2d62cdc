//! Command-line surface: reproducible model runs producing CSV/OBJ/JSON
//! artifacts.
//!
//! Exit codes are a stable contract: 0 on success, 1 on runtime or numeric
//! failure (integration blow-up, empty extraction, failing verification),
//! 2 on usage errors (bad flags, unknown models, malformed arguments).
//!
//! Every artifact-writing subcommand drops a `<out>.meta.json` sidecar with
//! the full configuration; re-running with the values from a sidecar
//! reproduces the artifact byte-for-byte on one platform.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::csvio;
use crate::geom::Vector;
use crate::kinematics::{self, JerkMode};
use crate::levelset::{self, GridSpec, SurfaceMode};
use crate::manifold::{FieldKind, ImplicitField, Normalization};
use crate::model::{builtin, catalog, parse_model, ModelSpec};
use crate::trajectory::{self, Control, CrossingDirection, SectionSpec};
use crate::verify;

const EXIT_OK: i32 = 0;
const EXIT_RUNTIME: i32 = 1;
const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "slowman",
    version,
    about = "Slow-manifold analysis of slow-fast dynamical systems",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// List built-in models with dimensions and default parameters
    Models(ModelsArgs),
    /// Integrate a model and write the trajectory as CSV
    Integrate(IntegrateArgs),
    /// Integrate and write per-node curve kinematics as CSV
    Kinematics(KinematicsArgs),
    /// Extract a slow-manifold level set over a grid
    Manifold(ManifoldArgs),
    /// Append a slow/fast/boundary column to a trajectory CSV
    Domains(DomainsArgs),
    /// Intersect a slow-manifold surface with a Poincaré section
    Singular(SingularArgs),
    /// Deploy a singular-manifold curve over time horizons
    Deploy(DeployArgs),
    /// Run the seeded cross-module identity suite
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct ModelSource {
    /// Built-in model name (see `models`)
    #[arg(long)]
    model: Option<String>,
    /// Path to a model definition file
    #[arg(long)]
    model_file: Option<PathBuf>,
    /// Parameter override k=v (repeatable)
    #[arg(long = "set", value_name = "K=V")]
    set: Vec<String>,
}

#[derive(Debug, Args)]
struct ModelsArgs {
    /// Show a single model
    #[arg(long)]
    model: Option<String>,
    /// Machine-readable output
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct IntegrationArgs {
    /// Initial state, comma-separated
    #[arg(long, value_name = "A,B[,C]", allow_hyphen_values = true)]
    x0: String,
    /// Start time
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    /// End time
    #[arg(long, allow_negative_numbers = true)]
    t1: f64,
    /// Fixed step size (mutually exclusive with --rtol/--atol)
    #[arg(long)]
    dt: Option<f64>,
    /// Adaptive relative tolerance
    #[arg(long)]
    rtol: Option<f64>,
    /// Adaptive absolute tolerance
    #[arg(long)]
    atol: Option<f64>,
}

#[derive(Debug, Args)]
struct IntegrateArgs {
    #[command(flatten)]
    source: ModelSource,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Print the run metadata to stdout as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct KinematicsArgs {
    #[command(flatten)]
    source: ModelSource,
    #[command(flatten)]
    integration: IntegrationArgs,
    /// Jerk computation mode
    #[arg(long, default_value = "exact", value_parser = parse_jerk)]
    jerk: JerkMode,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Print the run metadata to stdout as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ManifoldArgs {
    #[command(flatten)]
    source: ModelSource,
    /// Manifold condition: curvature | torsion | singular | tls-poly
    #[arg(long)]
    method: String,
    /// Grid bounds per axis
    #[arg(long, value_name = "A:B,C:D[,E:F]", allow_hyphen_values = true)]
    bounds: String,
    /// Cells per axis (single value broadcasts)
    #[arg(long, value_name = "N[,M[,P]]")]
    grid: String,
    /// Keep only the attractive subset (3D)
    #[arg(long)]
    attractive_only: bool,
    /// Jerk computation mode for torsion fields
    #[arg(long, default_value = "exact", value_parser = parse_jerk)]
    jerk: JerkMode,
    /// Output path; .obj extension selects triangle-soup output (3D)
    #[arg(long)]
    out: PathBuf,
    /// Print the run metadata to stdout as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct DomainsArgs {
    #[command(flatten)]
    source: ModelSource,
    /// Input trajectory CSV (header t,x,y[,z])
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Print the run metadata to stdout as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SectionArgs {
    /// Poincaré section: plane point and normal
    #[arg(long, value_name = "PX,PY,PZ:NX,NY,NZ", allow_hyphen_values = true)]
    section: String,
    /// Half-width of the selection band (default 1.5 cell diagonals)
    #[arg(long)]
    band: Option<f64>,
}

#[derive(Debug, Args)]
struct SingularArgs {
    #[command(flatten)]
    source: ModelSource,
    #[command(flatten)]
    section: SectionArgs,
    /// Grid bounds per axis
    #[arg(long, value_name = "A:B,C:D,E:F", allow_hyphen_values = true)]
    bounds: String,
    /// Cells per axis (single value broadcasts)
    #[arg(long, value_name = "N[,M[,P]]")]
    grid: String,
    /// Jerk computation mode for the torsion field
    #[arg(long, default_value = "exact", value_parser = parse_jerk)]
    jerk: JerkMode,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Print the run metadata to stdout as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct DeployArgs {
    #[command(flatten)]
    source: ModelSource,
    #[command(flatten)]
    section: SectionArgs,
    /// Grid bounds per axis
    #[arg(long, value_name = "A:B,C:D,E:F", allow_hyphen_values = true)]
    bounds: String,
    /// Cells per axis (single value broadcasts)
    #[arg(long, value_name = "N[,M[,P]]")]
    grid: String,
    /// Deployment horizons, comma-separated
    #[arg(long, value_name = "T1,T2,...", allow_hyphen_values = true)]
    times: String,
    /// Jerk computation mode for the torsion field
    #[arg(long, default_value = "exact", value_parser = parse_jerk)]
    jerk: JerkMode,
    /// Adaptive relative tolerance for vertex integration
    #[arg(long, default_value = "1e-9")]
    rtol: f64,
    /// Adaptive absolute tolerance for vertex integration
    #[arg(long, default_value = "1e-12")]
    atol: f64,
    /// Output prefix; one `<prefix>_t<T>.csv` per horizon
    #[arg(long)]
    out: PathBuf,
    /// Print the run metadata to stdout as JSON
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Base seed for the per-check generators
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trials per randomized check
    #[arg(long, default_value_t = verify::DEFAULT_TRIALS)]
    trials: u64,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its process exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: msg.into() }
}

fn runtime(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_RUNTIME, message: msg.into() }
}

/// Entry point used by the binary: parses real process arguments.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version are successful terminations; anything else is a
            // usage error.
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Cmd::Models(a) => cmd_models(a),
        Cmd::Integrate(a) => cmd_integrate(a),
        Cmd::Kinematics(a) => cmd_kinematics(a),
        Cmd::Manifold(a) => cmd_manifold(a),
        Cmd::Domains(a) => cmd_domains(a),
        Cmd::Singular(a) => cmd_singular(a),
        Cmd::Deploy(a) => cmd_deploy(a),
        Cmd::Verify(a) => cmd_verify(a),
    }
}

// ---------------------------------------------------------------------------
// argument parsing helpers

fn parse_jerk(s: &str) -> Result<JerkMode, String> {
    JerkMode::from_label(s).ok_or_else(|| format!("unknown jerk mode {s:?} (exact | stationary)"))
}

fn load_model(src: &ModelSource) -> Result<ModelSpec, Failure> {
    let overrides = src
        .set
        .iter()
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| usage(format!("--set needs k=v, got {kv:?}")))?;
            let x: f64 = v
                .trim()
                .parse()
                .map_err(|_| usage(format!("--set {k}: bad number {v:?}")))?;
            Ok((k.trim().to_string(), x))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut model = match (&src.model, &src.model_file) {
        (Some(name), None) => {
            builtin(name, &[]).map_err(|e| usage(e.to_string()))?
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let mut m = parse_model(&text).map_err(|e| usage(e.to_string()))?;
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                m.rename(stem);
            }
            m
        }
        _ => return Err(usage("provide exactly one of --model or --model-file")),
    };
    model.set_params(&overrides).map_err(|e| usage(e.to_string()))?;
    Ok(model)
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad number {p:?} in {s:?}")))
        })
        .collect()
}

fn parse_state(s: &str, model: &ModelSpec) -> Result<Vector, Failure> {
    let xs = parse_list(s)?;
    model.state_from_slice(&xs).map_err(|e| usage(e.to_string()))
}

fn parse_bounds(s: &str, dim: usize) -> Result<Vec<(f64, f64)>, Failure> {
    let axes: Vec<&str> = s.split(',').collect();
    if axes.len() != dim {
        return Err(usage(format!("--bounds needs {dim} axes, got {}", axes.len())));
    }
    axes.iter()
        .map(|axis| {
            let (a, b) = axis
                .split_once(':')
                .ok_or_else(|| usage(format!("bad bounds range {axis:?} (want a:b)")))?;
            let lo: f64 =
                a.trim().parse().map_err(|_| usage(format!("bad number {a:?}")))?;
            let hi: f64 =
                b.trim().parse().map_err(|_| usage(format!("bad number {b:?}")))?;
            Ok((lo, hi))
        })
        .collect()
}

fn parse_grid(s: &str, dim: usize) -> Result<Vec<usize>, Failure> {
    let ns = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| usage(format!("bad cell count {p:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match ns.len() {
        1 => Ok(vec![ns[0]; dim]),
        n if n == dim => Ok(ns),
        n => Err(usage(format!("--grid needs 1 or {dim} values, got {n}"))),
    }
}

fn parse_section(s: &str) -> Result<SectionSpec, Failure> {
    let (p, n) = s
        .split_once(':')
        .ok_or_else(|| usage("--section needs px,py,pz:nx,ny,nz"))?;
    let pv = parse_list(p)?;
    let nv = parse_list(n)?;
    if pv.len() != 3 || nv.len() != 3 {
        return Err(usage("--section needs three point and three normal components"));
    }
    SectionSpec::from_unnormalized(
        Vector::new3(pv[0], pv[1], pv[2]),
        Vector::new3(nv[0], nv[1], nv[2]),
        CrossingDirection::Both,
    )
    .map_err(|e| usage(e.to_string()))
}

fn control_from(args: &IntegrationArgs) -> Result<Control, Failure> {
    match (args.dt, args.rtol, args.atol) {
        (Some(dt), None, None) => Ok(Control::Fixed { dt }),
        (None, rtol, atol) => {
            let d = Control::adaptive_default();
            let (drtol, datol) = match d {
                Control::Adaptive { rtol, atol } => (rtol, atol),
                _ => unreachable!(),
            };
            Ok(Control::Adaptive {
                rtol: rtol.unwrap_or(drtol),
                atol: atol.unwrap_or(datol),
            })
        }
        _ => Err(usage("--dt is mutually exclusive with --rtol/--atol")),
    }
}

// ---------------------------------------------------------------------------
// output helpers

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn model_meta(model: &ModelSpec) -> serde_json::Value {
    json!({
        "name": model.name(),
        "dim": model.dim(),
        "params": model.params(),
    })
}

fn write_sidecar(out: &Path, meta: &serde_json::Value, to_stdout: bool) -> Result<(), Failure> {
    let text = format!("{:#}\n", meta);
    let side = sidecar_path(out);
    std::fs::write(&side, &text)
        .map_err(|e| runtime(format!("{}: {e}", side.display())))?;
    if to_stdout {
        print!("{text}");
    }
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".meta.json");
    PathBuf::from(os)
}

// ---------------------------------------------------------------------------
// subcommands

fn cmd_models(args: ModelsArgs) -> Result<(), Failure> {
    let models = match &args.model {
        Some(name) => vec![builtin(name, &[]).map_err(|e| usage(e.to_string()))?],
        None => catalog(),
    };
    if args.json {
        let rows: Vec<serde_json::Value> = models.iter().map(model_meta).collect();
        println!("{:#}", serde_json::Value::Array(rows));
    } else {
        for m in &models {
            let params: Vec<String> =
                m.params().iter().map(|(k, v)| format!("{k}={v}")).collect();
            println!("{} dim={} {}", m.name(), m.dim(), params.join(" "));
        }
    }
    Ok(())
}

fn integrate_common(
    source: &ModelSource,
    integration: &IntegrationArgs,
) -> Result<(ModelSpec, trajectory::Trajectory, Control, Vector), Failure> {
    let model = load_model(source)?;
    let x0 = parse_state(&integration.x0, &model)?;
    let control = control_from(integration)?;
    if !(integration.t1 > integration.t0) {
        return Err(usage("--t1 must be greater than --t0"));
    }
    let traj = trajectory::integrate(&model, &x0, integration.t0, integration.t1, control)
        .map_err(|e| runtime(e.to_string()))?;
    Ok((model, traj, control, x0))
}

fn control_meta(control: Control) -> serde_json::Value {
    match control {
        Control::Fixed { dt } => json!({"dt": dt}),
        Control::Adaptive { rtol, atol } => json!({"rtol": rtol, "atol": atol}),
    }
}

fn cmd_integrate(args: IntegrateArgs) -> Result<(), Failure> {
    let (model, traj, control, x0) = integrate_common(&args.source, &args.integration)?;
    csvio::write_trajectory_csv(create(&args.out)?, &traj)
        .map_err(|e| runtime(e.to_string()))?;
    let meta = json!({
        "command": "integrate",
        "model": model_meta(&model),
        "x0": x0.as_slice(),
        "t0": args.integration.t0,
        "t1": args.integration.t1,
        "control": control_meta(control),
        "nodes": traj.len(),
        "accepted": traj.stats.accepted,
        "rejected": traj.stats.rejected,
        "out": args.out,
    });
    write_sidecar(&args.out, &meta, args.json)?;
    if !args.json {
        println!("wrote {} nodes to {}", traj.len(), args.out.display());
    }
    Ok(())
}

fn cmd_kinematics(args: KinematicsArgs) -> Result<(), Failure> {
    let (model, traj, control, x0) = integrate_common(&args.source, &args.integration)?;
    let samples = traj
        .states
        .iter()
        .map(|s| kinematics::sample(&model, s, args.jerk))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| runtime(e.to_string()))?;
    csvio::write_kinematics_csv(create(&args.out)?, &traj.times, &samples)
        .map_err(|e| runtime(e.to_string()))?;
    let meta = json!({
        "command": "kinematics",
        "model": model_meta(&model),
        "x0": x0.as_slice(),
        "t0": args.integration.t0,
        "t1": args.integration.t1,
        "control": control_meta(control),
        "jerk": args.jerk.label(),
        "nodes": traj.len(),
        "out": args.out,
    });
    write_sidecar(&args.out, &meta, args.json)?;
    if !args.json {
        println!("wrote {} samples to {}", samples.len(), args.out.display());
    }
    Ok(())
}

fn field_for_method(
    model: &ModelSpec,
    method: &str,
    jerk: JerkMode,
) -> Result<(FieldKind, Normalization), Failure> {
    let _ = jerk;
    let kind = match (method, model.dim()) {
        ("curvature", 2) => FieldKind::Curvature2d,
        ("curvature", d) => {
            return Err(usage(format!("curvature method needs a 2D model, got dim={d}")))
        }
        ("torsion", 3) => FieldKind::Torsion3d,
        ("torsion", d) => {
            return Err(usage(format!("torsion method needs a 3D model, got dim={d}")))
        }
        ("singular", _) => FieldKind::SingularApprox,
        ("tls-poly", 2) => FieldKind::TlsPoly2d,
        ("tls-poly", _) => FieldKind::TlsPoly3d,
        (m, _) => {
            return Err(usage(format!(
                "unknown method {m:?} (curvature | torsion | singular | tls-poly)"
            )))
        }
    };
    // Torsion and singular-approximation fields carry huge timescale
    // prefactors; extract them with unit-gradient normalization.
    let norm = match kind {
        FieldKind::Curvature2d | FieldKind::TlsPoly2d => Normalization::Raw,
        _ => Normalization::UnitGradient,
    };
    Ok((kind, norm))
}

fn residual_stats(ls: &levelset::LevelSet) -> serde_json::Value {
    let finite: Vec<f64> = ls.residuals.iter().copied().filter(|r| r.is_finite()).collect();
    let max = finite.iter().fold(0.0f64, |a, b| a.max(*b));
    let mean = if finite.is_empty() {
        0.0
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    };
    json!({"vertices": ls.len(), "max": max, "mean": mean})
}

fn cmd_manifold(args: ManifoldArgs) -> Result<(), Failure> {
    let model = load_model(&args.source)?;
    let dim = model.dim();
    let (kind, norm) = field_for_method(&model, &args.method, args.jerk)?;
    let field = ImplicitField::new(&model, kind)
        .map_err(|e| runtime(e.to_string()))?
        .with_jerk_mode(args.jerk)
        .with_normalization(norm);
    let grid = GridSpec::new(parse_bounds(&args.bounds, dim)?, parse_grid(&args.grid, dim)?)
        .map_err(|e| usage(e.to_string()))?;

    let want_obj = args
        .out
        .extension()
        .map(|e| e.eq_ignore_ascii_case("obj"))
        .unwrap_or(false);
    let ls = if dim == 2 {
        if want_obj {
            return Err(usage("OBJ output is for 3D surfaces; use .csv for polylines"));
        }
        levelset::extract_zero_2d(&field, &grid)
    } else {
        let mode = if want_obj { SurfaceMode::Triangles } else { SurfaceMode::Points };
        levelset::extract_zero_3d(&field, &grid, mode)
    }
    .map_err(|e| runtime(e.to_string()))?;

    let ls = if args.attractive_only {
        if dim != 3 {
            return Err(usage("--attractive-only applies to 3D torsion surfaces"));
        }
        levelset::filter_attractive(&ls, &model).map_err(|e| runtime(e.to_string()))?
    } else {
        ls
    };
    if ls.is_empty() {
        return Err(runtime("extraction produced no vertices in the given box"));
    }

    if want_obj {
        csvio::write_levelset_obj(create(&args.out)?, &ls)
    } else {
        csvio::write_levelset_csv(create(&args.out)?, &ls)
    }
    .map_err(|e| runtime(e.to_string()))?;

    let meta = json!({
        "command": "manifold",
        "model": model_meta(&model),
        "method": args.method,
        "field": field.kind().label(),
        "normalization": field.normalization().label(),
        "jerk": args.jerk.label(),
        "bounds": grid.bounds(),
        "grid": grid.resolution(),
        "attractive_only": args.attractive_only,
        "residuals": residual_stats(&ls),
        "out": args.out,
    });
    write_sidecar(&args.out, &meta, args.json)?;
    if !args.json {
        println!("wrote {} vertices to {}", ls.len(), args.out.display());
    }
    Ok(())
}

fn cmd_domains(args: DomainsArgs) -> Result<(), Failure> {
    let model = load_model(&args.source)?;
    let input = File::open(&args.input)
        .map_err(|e| usage(format!("{}: {e}", args.input.display())))?;
    let rows = csvio::append_domain_column(input, create(&args.out)?, &model)
        .map_err(|e| runtime(e.to_string()))?;
    let meta = json!({
        "command": "domains",
        "model": model_meta(&model),
        "in": args.input,
        "rows": rows,
        "out": args.out,
    });
    write_sidecar(&args.out, &meta, args.json)?;
    if !args.json {
        println!("annotated {rows} rows into {}", args.out.display());
    }
    Ok(())
}

/// Shared front half of `singular` and `deploy`: extract the torsion
/// surface and slice it with the section.
fn singular_curve(
    model: &ModelSpec,
    bounds: &str,
    grid: &str,
    jerk: JerkMode,
    section_args: &SectionArgs,
) -> Result<(levelset::LevelSet, GridSpec, SectionSpec, f64), Failure> {
    if model.dim() != 3 {
        return Err(usage("singular-manifold commands need a 3D model"));
    }
    let grid = GridSpec::new(parse_bounds(bounds, 3)?, parse_grid(grid, 3)?)
        .map_err(|e| usage(e.to_string()))?;
    let section = parse_section(&section_args.section)?;
    let band = section_args.band.unwrap_or_else(|| levelset::default_band(&grid));
    let field = ImplicitField::new(model, FieldKind::Torsion3d)
        .map_err(|e| runtime(e.to_string()))?
        .with_jerk_mode(jerk)
        .with_normalization(Normalization::UnitGradient);
    let surface = levelset::extract_zero_3d(&field, &grid, SurfaceMode::Points)
        .map_err(|e| runtime(e.to_string()))?;
    let curve = levelset::singular_manifold(&surface, &section, band)
        .map_err(|e| runtime(e.to_string()))?;
    Ok((curve, grid, section, band))
}

fn section_meta(section: &SectionSpec, band: f64) -> serde_json::Value {
    json!({
        "point": section.point().as_slice(),
        "normal": section.normal().as_slice(),
        "band": band,
    })
}

fn cmd_singular(args: SingularArgs) -> Result<(), Failure> {
    let model = load_model(&args.source)?;
    let (curve, grid, section, band) =
        singular_curve(&model, &args.bounds, &args.grid, args.jerk, &args.section)?;
    csvio::write_levelset_csv(create(&args.out)?, &curve)
        .map_err(|e| runtime(e.to_string()))?;
    let meta = json!({
        "command": "singular",
        "model": model_meta(&model),
        "bounds": grid.bounds(),
        "grid": grid.resolution(),
        "jerk": args.jerk.label(),
        "section": section_meta(&section, band),
        "vertices": curve.len(),
        "out": args.out,
    });
    write_sidecar(&args.out, &meta, args.json)?;
    if !args.json {
        println!("wrote {} curve points to {}", curve.len(), args.out.display());
    }
    Ok(())
}

fn cmd_deploy(args: DeployArgs) -> Result<(), Failure> {
    let model = load_model(&args.source)?;
    let (curve, grid, section, band) =
        singular_curve(&model, &args.bounds, &args.grid, args.jerk, &args.section)?;
    let times = parse_list(&args.times)?;
    let control = Control::Adaptive { rtol: args.rtol, atol: args.atol };
    let deployment = levelset::deploy(&model, &curve, &times, control)
        .map_err(|e| runtime(e.to_string()))?;

    let mut files = Vec::new();
    for (t, set) in deployment.horizons.iter().zip(&deployment.sets) {
        let path = horizon_path(&args.out, *t);
        csvio::write_levelset_csv(create(&path)?, set).map_err(|e| runtime(e.to_string()))?;
        files.push(path);
    }
    let meta = json!({
        "command": "deploy",
        "model": model_meta(&model),
        "bounds": grid.bounds(),
        "grid": grid.resolution(),
        "jerk": args.jerk.label(),
        "section": section_meta(&section, band),
        "control": control_meta(control),
        "times": deployment.horizons,
        "curve_points": curve.len(),
        "skipped": deployment.skipped,
        "files": files,
    });
    write_sidecar(&args.out, &meta, args.json)?;
    if !args.json {
        println!(
            "deployed {} points over {} horizons ({} skipped)",
            curve.len() - deployment.skipped.len(),
            deployment.horizons.len(),
            deployment.skipped.len()
        );
    }
    Ok(())
}

fn horizon_path(prefix: &Path, t: f64) -> PathBuf {
    let mut os = prefix.as_os_str().to_owned();
    os.push(format!("_t{t}.csv"));
    PathBuf::from(os)
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let reports = verify::run_suite(args.seed, args.trials);
    let text = verify::report_json(&reports);
    match &args.out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| runtime(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if let Some(f) = verify::first_failure(&reports) {
        return Err(runtime(format!(
            "check {:?} failed (max residual {:e} over {} trials)",
            f.check, f.max_residual, f.trials
        )));
    }
    Ok(())
}
