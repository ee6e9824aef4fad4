//! The `fairpia` subcommands. Each command returns the text for standard
//! output and an exit status so that it can be driven from tests.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairpia_core::baseline::{compare_runs, energy_fair_direct};
use fairpia_core::engine::{fair, FairingConfig, FairingRun, StopReason, WeightPolicy};
use fairpia_core::model_file::ModelFile;
use fairpia_core::models::{add_noise, bump_surface, make_spiral_model, straight_line, NoiseSpec, NoiseTarget, SpiralSpec};
use fairpia_core::select::{auto_fair, AutoFairOptions, RankedPoint};
use fairpia_core::weights::{parse_index_set, RangeSpec};
use fairpia_core::{Error, FunctionalKind, Geometry, Result};
use serde::Serialize;

use crate::io::{parse_weight_file, pretty_json, read_text, trace_csv, write_text};

/// Weight used when neither flags nor the model file provide one.
pub const DEFAULT_OMEGA: f64 = 1e-6;

const RANGE_HELP: &str = "\
WEIGHT RANGE SPECS:
  --omega takes a scalar or a comma separated list of entries:
    START-END:VALUE   points START..=END (1-based, inclusive)
    N:VALUE           the single point N
    default:VALUE     every point not covered by a range
  Later entries override earlier ones where ranges overlap.
  Example: --omega 25-32:1e-5,46-57:8e-6,default:1e-6

EXIT STATUS:
  0 converged, 2 iteration cap reached, 1 error";

#[derive(Debug, Parser)]
#[command(name = "fairpia", version, about = "Weighted progressive-iterative fairing of B-spline curves and surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fair a model with per-point weights.
    #[command(after_help = RANGE_HELP)]
    Fair(FairArgs),
    /// Rank control points by energy impact and fair the top m.
    #[command(after_help = RANGE_HELP)]
    Autofair(AutoArgs),
    /// Compare the iterative fairing with the direct energy solve.
    Compare(CompareArgs),
    /// Write a test model.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Serve the HTTP session API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PolicyArg {
    Clamp,
    Strict,
    Permissive,
}

impl From<PolicyArg> for WeightPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Clamp => WeightPolicy::Clamp,
            PolicyArg::Strict => WeightPolicy::Strict,
            PolicyArg::Permissive => WeightPolicy::Permissive,
        }
    }
}

#[derive(Debug, Args)]
pub struct FunctionalArgs {
    /// Fairing functional: r1, r2, r3, surface-first or surface-second.
    #[arg(long, conflicts_with = "order")]
    pub kind: Option<FunctionalKind>,
    /// Curve derivative order, shorthand for --kind rN.
    #[arg(short = 'r', long = "order")]
    pub order: Option<u8>,
}

impl FunctionalArgs {
    fn resolve(&self, geometry: &Geometry) -> FunctionalKind {
        match (self.kind, self.order) {
            (Some(k), _) => k,
            (None, Some(r)) => FunctionalKind::CurveOrder(r),
            (None, None) => geometry.default_kind(),
        }
    }
}

#[derive(Debug, Args)]
pub struct IterationArgs {
    #[arg(long, default_value_t = fairpia_core::engine::DEFAULT_MAX_ITERATIONS)]
    pub max_iter: usize,
    #[arg(long, default_value_t = fairpia_core::engine::DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// How to treat weights above the convergence bound.
    #[arg(long, value_enum, default_value_t = PolicyArg::Clamp)]
    pub policy: PolicyArg,
}

#[derive(Debug, Args)]
pub struct FairArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub functional: FunctionalArgs,
    /// Scalar weight or weight range spec.
    #[arg(long, conflicts_with = "omega_file")]
    pub omega: Option<String>,
    /// File with one weight per control point.
    #[arg(long)]
    pub omega_file: Option<PathBuf>,
    /// Only move these points (1-based list such as 1-5,9).
    #[arg(long)]
    pub active: Option<String>,
    #[command(flatten)]
    pub iteration: IterationArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// CSV trace (k,e_dev,e_iter,e_abs,e_rel).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AutoArgs {
    pub input: PathBuf,
    /// Number of points to select.
    #[arg(short)]
    pub m: usize,
    #[command(flatten)]
    pub functional: FunctionalArgs,
    /// One weight for all selected points, or m comma separated weights in
    /// rank order.
    #[arg(long, default_value_t = DEFAULT_OMEGA.to_string())]
    pub omega: String,
    /// Re-rank every this many iterations.
    #[arg(long)]
    pub rerank_every: Option<usize>,
    #[command(flatten)]
    pub iteration: IterationArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub input: PathBuf,
    #[command(flatten)]
    pub functional: FunctionalArgs,
    #[arg(long, default_value_t = DEFAULT_OMEGA)]
    pub omega: f64,
    #[command(flatten)]
    pub iteration: IterationArgs,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NoiseTargetArg {
    ControlPoints,
    Samples,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Noisy Archimedean spiral fitted with a cubic B-spline.
    Spiral {
        #[arg(long, default_value_t = 30)]
        n_control: usize,
        #[arg(long, default_value_t = 0.02)]
        variance: f64,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = NoiseTargetArg::ControlPoints)]
        noise_target: NoiseTargetArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Bump-shaped height field with optional noise on the heights.
    Surface {
        #[arg(long, default_value_t = 10)]
        n1: usize,
        #[arg(long, default_value_t = 10)]
        n2: usize,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long, default_value_t = 0.3)]
        height: f64,
        #[arg(long, default_value_t = 0.0)]
        variance: f64,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Straight segment with control points at the Greville abscissae.
    Line {
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory served under / (for the studio build).
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

/// Output of a command.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub exit_code: i32,
}

pub fn exit_code(stop: StopReason) -> i32 {
    if stop.is_converged() {
        0
    } else {
        2
    }
}

fn load(path: &Path) -> Result<(ModelFile, Geometry)> {
    let file = ModelFile::load(path)?;
    let geometry = file.to_geometry()?;
    Ok((file, geometry))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct OmegaEcho {
    source: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<String>,
}

fn resolve_omega(args: &FairArgs, file: &ModelFile, n: usize) -> Result<(Vec<f64>, OmegaEcho)> {
    if let Some(spec) = &args.omega {
        let parsed: RangeSpec = spec.parse()?;
        return Ok((
            parsed.resolve(n, None)?,
            OmegaEcho {
                source: "range-spec",
                spec: Some(spec.clone()),
                path: None,
            },
        ));
    }
    if let Some(path) = &args.omega_file {
        let w = parse_weight_file(&read_text(path)?)?;
        if w.len() != n {
            return Err(Error::DimensionMismatch {
                what: "weights in --omega-file",
                expected: n,
                actual: w.len(),
            });
        }
        return Ok((
            w,
            OmegaEcho {
                source: "file",
                spec: None,
                path: Some(path.display().to_string()),
            },
        ));
    }
    if let Some(w) = &file.weights {
        return Ok((
            w.clone(),
            OmegaEcho {
                source: "model",
                spec: None,
                path: None,
            },
        ));
    }
    Ok((
        vec![DEFAULT_OMEGA; n],
        OmegaEcho {
            source: "default",
            spec: Some(DEFAULT_OMEGA.to_string()),
            path: None,
        },
    ))
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct FinalMetrics {
    e_dev: f64,
    e_abs: f64,
    e_rel: Option<f64>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct RunManifest {
    command: &'static str,
    input: String,
    kind: FunctionalKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega: Option<OmegaEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    omega_by_rank: Option<Vec<f64>>,
    policy: WeightPolicy,
    max_iter: usize,
    tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    active: Option<String>,
    warnings: Vec<String>,
    stop_reason: StopReason,
    iterations: usize,
    #[serde(rename = "final")]
    final_metrics: FinalMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    ranking: Option<Vec<RankedPoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selected: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
}

fn write_results(run: &FairingRun, file: &ModelFile, output: Option<&Path>, trace: Option<&Path>) -> Result<()> {
    if let Some(path) = output {
        let mut out = ModelFile::from_geometry(&run.geometry);
        out.weights = file.weights.clone();
        out.metadata = file.metadata.clone();
        out.save(path)?;
    }
    if let Some(path) = trace {
        write_text(path, &trace_csv(&run.trace))?;
    }
    Ok(())
}

fn final_metrics(run: &FairingRun) -> FinalMetrics {
    let last = run.trace.last().expect("trace holds the initial record");
    FinalMetrics {
        e_dev: last.e_dev,
        e_abs: last.e_abs,
        e_rel: last.e_rel,
    }
}

fn log_warnings(run: &FairingRun) -> Vec<String> {
    for w in &run.warnings {
        tracing::debug!("{w}");
    }
    if !run.warnings.is_empty() {
        tracing::warn!(
            "{} of {} weights exceed their convergence bound (set FAIRPIA_LOG=debug to list them)",
            run.warnings.len(),
            run.weights.len()
        );
    }
    run.warnings.iter().map(ToString::to_string).collect()
}

pub fn run_fair(args: &FairArgs) -> Result<Outcome> {
    let (file, geometry) = load(&args.input)?;
    let kind = args.functional.resolve(&geometry);
    let (weights, omega) = resolve_omega(args, &file, geometry.len())?;
    let active = args
        .active
        .as_deref()
        .map(|s| parse_index_set(s, geometry.len()))
        .transpose()?;
    let config = FairingConfig {
        kind,
        weights,
        active_set: active,
        max_iterations: args.iteration.max_iter,
        tolerance: args.iteration.tol,
        policy: args.iteration.policy.into(),
    };
    let run = fair(&geometry, &config)?;
    tracing::info!(iterations = run.iterations, stop = %run.stop, "fairing finished");
    write_results(&run, &file, args.output.as_deref(), args.trace.as_deref())?;
    let manifest = RunManifest {
        command: "fair",
        input: args.input.display().to_string(),
        kind,
        omega: Some(omega),
        omega_by_rank: None,
        policy: config.policy,
        max_iter: config.max_iterations,
        tol: config.tolerance,
        active: args.active.clone(),
        warnings: log_warnings(&run),
        stop_reason: run.stop,
        iterations: run.iterations,
        final_metrics: final_metrics(&run),
        ranking: None,
        selected: None,
        output: args.output.as_ref().map(|p| p.display().to_string()),
        trace: args.trace.as_ref().map(|p| p.display().to_string()),
    };
    Ok(Outcome {
        stdout: pretty_json(&manifest),
        exit_code: exit_code(run.stop),
    })
}

fn parse_rank_weights(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad weight `{t}` in --omega")))
        })
        .collect()
}

pub fn run_autofair(args: &AutoArgs) -> Result<Outcome> {
    let (file, geometry) = load(&args.input)?;
    let kind = args.functional.resolve(&geometry);
    let weights = parse_rank_weights(&args.omega)?;
    let options = AutoFairOptions {
        kind,
        max_iterations: args.iteration.max_iter,
        tolerance: args.iteration.tol,
        policy: args.iteration.policy.into(),
        rerank_every: args.rerank_every,
    };
    let result = auto_fair(&geometry, args.m, &weights, &options)?;
    write_results(&result.run, &file, args.output.as_deref(), args.trace.as_deref())?;
    let manifest = RunManifest {
        command: "autofair",
        input: args.input.display().to_string(),
        kind,
        omega: None,
        omega_by_rank: Some(weights),
        policy: options.policy,
        max_iter: options.max_iterations,
        tol: options.tolerance,
        active: None,
        warnings: log_warnings(&result.run),
        stop_reason: result.run.stop,
        iterations: result.run.iterations,
        final_metrics: final_metrics(&result.run),
        ranking: Some(result.ranking.clone()),
        selected: Some(result.selected.clone()),
        output: args.output.as_ref().map(|p| p.display().to_string()),
        trace: args.trace.as_ref().map(|p| p.display().to_string()),
    };
    Ok(Outcome {
        stdout: pretty_json(&manifest),
        exit_code: exit_code(result.run.stop),
    })
}

pub fn run_compare(args: &CompareArgs) -> Result<Outcome> {
    let (_, geometry) = load(&args.input)?;
    let kind = args.functional.resolve(&geometry);
    let config = FairingConfig::uniform(kind, geometry.len(), args.omega)
        .with_max_iterations(args.iteration.max_iter)
        .with_tolerance(args.iteration.tol)
        .with_policy(args.iteration.policy.into());
    let mut run = fair(&geometry, &config)?;
    log_warnings(&run);
    // Clamping can leave per-point weights; both methods then use the
    // smallest applied weight so that they solve the same problem.
    let applied = run.weights.iter().copied().fold(f64::INFINITY, f64::min);
    if run.weights.iter().any(|&w| w != applied) {
        tracing::warn!("weights differ after clamping; comparing with the uniform weight {applied:e}");
        run = fair(&geometry, &FairingConfig { weights: vec![applied; geometry.len()], ..config })?;
    }
    let direct = energy_fair_direct(&geometry, applied, kind)?;
    let report = compare_runs(&geometry, kind, &run, &direct)?;
    let stdout = if args.json {
        pretty_json(&report)
    } else {
        report.to_string()
    };
    Ok(Outcome { stdout, exit_code: 0 })
}

pub fn run_gen(cmd: &GenCommand) -> Result<Outcome> {
    let (geometry, output, label): (Geometry, &PathBuf, &str) = match cmd {
        GenCommand::Spiral {
            n_control,
            variance,
            seed,
            noise_target,
            output,
        } => {
            let noise = NoiseSpec {
                variance: *variance,
                seed: *seed,
                target: match noise_target {
                    NoiseTargetArg::ControlPoints => NoiseTarget::ControlPoints,
                    NoiseTargetArg::Samples => NoiseTarget::Samples,
                },
            };
            let spec = SpiralSpec {
                n_control: *n_control,
                sample_noise: Some(noise),
                ..SpiralSpec::default()
            };
            let curve: Geometry = make_spiral_model(&spec)?.curve.into();
            let g = match noise.target {
                NoiseTarget::ControlPoints => add_noise(&curve, &noise)?,
                NoiseTarget::Samples => curve,
            };
            (g, output, "spiral")
        }
        GenCommand::Surface {
            n1,
            n2,
            degree,
            height,
            variance,
            seed,
            output,
        } => {
            let noise = (*variance > 0.0).then(|| NoiseSpec::new(*variance, *seed));
            (bump_surface(*n1, *n2, *degree, *height, noise)?.into(), output, "surface")
        }
        GenCommand::Line { n, degree, output } => (
            straight_line(*n, *degree, &[0.0, 0.0], &[1.0, 0.5])?.into(),
            output,
            "line",
        ),
    };
    let mut file = ModelFile::from_geometry(&geometry);
    let mut meta = serde_json::Map::new();
    meta.insert("name".into(), label.into());
    file.metadata = Some(meta);
    file.save(output)?;
    Ok(Outcome {
        stdout: String::new(),
        exit_code: 0,
    })
}
