//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when an analysis fails (bad input data,
//! failed validation, I/O), 2 on usage errors.
//!
//! Defaults come from three layers: built-ins, then an optional TOML config
//! file (`--config <path>` or the `KINFORM_CONFIG` environment variable),
//! then command-line flags. Recognized config keys:
//!
//! ```toml
//! half_width = 2          # moving-average half width
//! passes = 2              # moving-average passes
//! tolerance_deg = 10.0    # pose-match tolerance
//! weights = "1,1,1"       # score weights w_p,w_s,w_b
//! origin_joint = "SpineBase"
//! lenient = false         # accept streams that fail validation
//! ```

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::analysis::{
    balance_analyze, compare_full, match_pose, performance_score, rom_analyze, rom_standard,
    JointRegion, MotionType, PerformanceScore, PoseMatchConfig, ScoreWeights,
};
use crate::error::Error;
use crate::io::report::{
    summarize, ComparisonResults, Inputs, PoseFrameResult, PoseMatchResults, Report,
};
use crate::io::{export_errors_csv, read_stream, render_plot, write_stream, write_stream_to};
use crate::io::{PlotKind, PlotSelection};
use crate::kinematics::{AdjacencyMap, FilterConfig};
use crate::normalization::{height_scale_factor, NormalizationConfig};
use crate::skeleton::{validate_stream, JointId, MotionStream};
use crate::synthgen::{generate, DefectSpec, ExerciseKind, ExerciseTemplate};

pub const CONFIG_ENV: &str = "KINFORM_CONFIG";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ANALYSIS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const FORMAT_HELP: &str = "\
Stream files are newline-delimited JSON. Line 1 is metadata:
  {\"format_version\":\"1\",\"subject_id\":\"s1\",\"height_m\":1.8,\"frame_rate_hz\":30,\"exercise_tag\":\"bicep_curl\"}
Each further line is a frame with positions in meters (y up, z depth, x lateral):
  {\"t\":0.0,\"joints\":{\"SpineBase\":[0.0,0.95,2.5],\"Head\":[0.0,1.70,2.5],...}}";

#[derive(Debug, Parser)]
#[command(name = "kinform", version, about = "Weight-training motion analysis", after_help = FORMAT_HELP)]
struct Cli {
    /// TOML file with default settings (overrides KINFORM_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Accept input streams that fail validation (issues are logged).
    #[arg(long, global = true)]
    lenient: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic exercise stream.
    Gen(GenArgs),
    /// Validate a stream file and print the issues found.
    Validate { file: PathBuf },
    /// Compare joint angles of test frames against one reference frame.
    PoseMatch(PoseMatchArgs),
    /// Range of motion of one joint against the adult standards table.
    Rom(RomArgs),
    /// Left/right height and depth imbalance of paired joints.
    Balance {
        file: PathBuf,
        /// Subject height in meters; defaults to the stream metadata or an estimate.
        #[arg(long)]
        height: Option<f64>,
    },
    /// Normalize a test stream against a reference and report errors and score.
    Compare(CompareArgs),
    /// Compute the performance score from a comparison report or a stream pair.
    Score(ScoreArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TemplateArg {
    BicepCurl,
    PushPress,
    BenchPress,
}

impl From<TemplateArg> for ExerciseKind {
    fn from(t: TemplateArg) -> Self {
        match t {
            TemplateArg::BicepCurl => ExerciseKind::BicepCurl,
            TemplateArg::PushPress => ExerciseKind::PushPress,
            TemplateArg::BenchPress => ExerciseKind::BenchPress,
        }
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value = "bicep-curl")]
    template: TemplateArg,
    #[arg(long, default_value_t = 4.0)]
    duration: f64,
    #[arg(long, default_value_t = 30.0)]
    rate: f64,
    #[arg(long, default_value_t = 1.8)]
    height: f64,
    #[arg(long, default_value = "synthetic")]
    subject: String,
    /// Curl elbow angle at start/end, degrees.
    #[arg(long, default_value_t = 10.0)]
    min_deg: f64,
    /// Curl elbow angle at mid-repetition, degrees.
    #[arg(long, default_value_t = 150.0)]
    max_deg: f64,
    /// Share of the repetition spent on the outbound half.
    #[arg(long, default_value_t = 0.5)]
    up_fraction: f64,
    /// Over-reach of the motion extreme (fraction).
    #[arg(long, default_value_t = 0.0)]
    amplitude: f64,
    /// Lateral hand drift at the extreme (m).
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    /// Outbound-phase rush (fraction).
    #[arg(long, default_value_t = 0.0)]
    tempo: f64,
    /// Left shoulder raise (m).
    #[arg(long, default_value_t = 0.0)]
    asymmetry: f64,
    /// Gaussian position jitter sigma (m).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FilterArgs {
    /// Moving-average half width n (window 2n+1).
    #[arg(long)]
    half_width: Option<usize>,
    /// Moving-average passes.
    #[arg(long)]
    passes: Option<usize>,
}

#[derive(Debug, Args)]
struct PoseMatchArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    ref_frame: usize,
    /// Only compare this test frame; all frames when omitted.
    #[arg(long)]
    test_frame: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Comma-separated angle-bearing joints.
    #[arg(long, value_delimiter = ',')]
    joints: Vec<JointId>,
}

#[derive(Debug, Args)]
struct RomArgs {
    file: PathBuf,
    #[arg(long)]
    joint: JointId,
    #[arg(long)]
    motion: MotionType,
    #[command(flatten)]
    filter: FilterArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PlotArg {
    Position,
    Axes,
    SpeedError,
    Speed,
}

impl From<PlotArg> for PlotKind {
    fn from(p: PlotArg) -> Self {
        match p {
            PlotArg::Position => PlotKind::Position,
            PlotArg::Axes => PlotKind::Axes,
            PlotArg::SpeedError => PlotKind::SpeedError,
            PlotArg::Speed => PlotKind::Speed,
        }
    }
}

#[derive(Debug, Args)]
struct PairArgs {
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    no_scale: bool,
    #[arg(long)]
    no_recenter: bool,
    #[arg(long)]
    no_resample: bool,
    #[arg(long)]
    origin_joint: Option<JointId>,
    /// Comma-separated joints to score; defaults to the exercise's arm joints.
    #[arg(long, value_delimiter = ',')]
    joints: Vec<JointId>,
    #[command(flatten)]
    filter: FilterArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Score weights w_p,w_s,w_b.
    #[arg(long)]
    weights: Option<ScoreWeights>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
    #[arg(long)]
    out_svg: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "position")]
    plot: PlotArg,
    /// Joints drawn in the plot; all scored joints when omitted.
    #[arg(long, value_delimiter = ',')]
    plot_joints: Vec<JointId>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    /// Score weights w_p,w_s,w_b.
    #[arg(long)]
    weights: Option<ScoreWeights>,
    /// Report (or object) carrying e_p_m, e_s_mps and e_b.
    #[arg(long, conflicts_with_all = ["reference", "test"])]
    report: Option<PathBuf>,
    #[command(flatten)]
    pair: PairArgs,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    half_width: Option<usize>,
    passes: Option<usize>,
    tolerance_deg: Option<f64>,
    weights: Option<String>,
    origin_joint: Option<String>,
    lenient: Option<bool>,
}

/// Settings after merging built-ins, config file and flags.
struct Settings {
    file: FileConfig,
    lenient: bool,
}

impl Settings {
    fn filter(&self, args: &FilterArgs) -> Result<FilterConfig, CliError> {
        let n = args
            .half_width
            .or(self.file.half_width)
            .unwrap_or(FilterConfig::DEFAULT_HALF_WIDTH);
        let passes = args
            .passes
            .or(self.file.passes)
            .unwrap_or(FilterConfig::DEFAULT_PASSES);
        FilterConfig::new(n, passes).map_err(CliError::usage)
    }

    fn weights(&self, flag: Option<ScoreWeights>) -> Result<ScoreWeights, CliError> {
        if let Some(w) = flag {
            return Ok(w);
        }
        match &self.file.weights {
            Some(s) => s
                .parse()
                .map_err(|e| CliError::Usage(format!("config weights: {e}"))),
            None => Ok(ScoreWeights::default()),
        }
    }

    fn tolerance(&self, flag: Option<f64>) -> f64 {
        flag.or(self.file.tolerance_deg)
            .unwrap_or(PoseMatchConfig::DEFAULT_TOLERANCE_DEG)
    }

    fn normalization(&self, pair: &PairArgs) -> Result<NormalizationConfig, CliError> {
        let origin_joint = match (pair.origin_joint, &self.file.origin_joint) {
            (Some(j), _) => j,
            (None, Some(name)) => name
                .parse()
                .map_err(|e| CliError::Usage(format!("config origin_joint: {e}")))?,
            (None, None) => NormalizationConfig::default().origin_joint,
        };
        Ok(NormalizationConfig {
            origin_joint,
            scale_enabled: !pair.no_scale,
            recenter_enabled: !pair.no_recenter,
            resample_enabled: !pair.no_resample,
        })
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Analysis(Error),
}

impl CliError {
    fn usage(e: impl ToString) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Analysis(e)
    }
}

/// Runs the CLI with `argv` (including the program name), writing reports to
/// `out` and diagnostics to `err`. Returns the process exit code.
pub fn cli_main<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match run(cli, out) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n\n{FORMAT_HELP}");
            EXIT_USAGE
        }
        Err(CliError::Analysis(e)) => {
            let _ = writeln!(err, "error: {e}");
            if let Error::ValidationFailed(report) = &e {
                for issue in &report.issues {
                    let _ = writeln!(
                        err,
                        "  frame {:?}: {:?} {}",
                        issue.frame_index, issue.code, issue.detail
                    );
                }
            }
            EXIT_ANALYSIS
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let path = match path {
        Some(p) => p.to_path_buf(),
        None => match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => return Ok(FileConfig::default()),
        },
    };
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let file = load_config(cli.config.as_deref())?;
    let settings = Settings {
        lenient: cli.lenient || file.lenient.unwrap_or(false),
        file,
    };
    match cli.command {
        Command::Gen(args) => cmd_gen(args, out),
        Command::Validate { file } => cmd_validate(&file, out),
        Command::PoseMatch(args) => cmd_pose_match(args, &settings, out),
        Command::Rom(args) => cmd_rom(args, &settings, out),
        Command::Balance { file, height } => cmd_balance(&file, height, &settings, out),
        Command::Compare(args) => cmd_compare(args, &settings, out),
        Command::Score(args) => cmd_score(args, &settings, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Analysis(Error::io("<stdout>", e)))
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_gen(args: GenArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let template = ExerciseTemplate {
        kind: args.template.into(),
        duration_s: args.duration,
        frame_rate_hz: args.rate,
        subject_height_m: args.height,
        subject_id: args.subject,
        min_deg: args.min_deg,
        max_deg: args.max_deg,
        up_fraction: args.up_fraction,
    };
    let defects = DefectSpec {
        amplitude_error: args.amplitude,
        lateral_drift_m: args.drift,
        tempo_error: args.tempo,
        asymmetry_m: args.asymmetry,
        noise_sigma_m: args.noise,
    };
    let stream = generate(&template, &defects, args.seed)?;
    match args.out {
        Some(path) => write_stream(&stream, path)?,
        None => write_stream_to(&stream, out)
            .map_err(|e| CliError::Analysis(Error::io("<stdout>", e)))?,
    }
    Ok(EXIT_OK)
}

fn cmd_validate(file: &Path, out: &mut dyn Write) -> Result<i32, CliError> {
    let stream = read_stream(file, true)?;
    let report = validate_stream(&stream);
    let ok = report.ok;
    let mut inputs = Inputs::default();
    inputs.files.insert("stream".into(), path_str(file));
    inputs.config = json!({});
    emit(out, &Report::new("validation", inputs, report).to_json())?;
    Ok(if ok { EXIT_OK } else { EXIT_ANALYSIS })
}

fn cmd_pose_match(
    args: PoseMatchArgs,
    settings: &Settings,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let tolerance = settings.tolerance(args.tolerance);
    let config = if args.joints.is_empty() {
        PoseMatchConfig {
            tolerance_deg: tolerance,
            ..PoseMatchConfig::default()
        }
    } else {
        PoseMatchConfig::new(args.joints.iter().copied(), tolerance).map_err(CliError::usage)?
    };
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(CliError::Usage(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    let reference = read_stream(&args.reference, settings.lenient)?;
    let test = read_stream(&args.test, settings.lenient)?;
    let ref_frame = reference.frames.get(args.ref_frame).ok_or_else(|| {
        CliError::Usage(format!(
            "--ref-frame {} out of range (stream has {} frames)",
            args.ref_frame,
            reference.len()
        ))
    })?;
    let indices: Vec<usize> = match args.test_frame {
        Some(i) if i < test.len() => vec![i],
        Some(i) => {
            return Err(CliError::Usage(format!(
                "--test-frame {i} out of range (stream has {} frames)",
                test.len()
            )))
        }
        None => (0..test.len()).collect(),
    };
    let adjacency = AdjacencyMap::default();
    let frames = indices
        .iter()
        .map(|&i| {
            let f = &test.frames[i];
            match_pose(f, ref_frame, &adjacency, &config)
                .map(|r| PoseFrameResult::new(i, f.t, r))
                .map_err(|e| e.at_frame(i))
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let results = PoseMatchResults {
        reference_frame: args.ref_frame,
        tolerance_deg: tolerance,
        matched_frames: frames
            .iter()
            .filter(|f| f.matched)
            .map(|f| f.frame_index)
            .collect(),
        frames,
    };
    let mut inputs = Inputs::default();
    inputs
        .files
        .insert("reference".into(), path_str(&args.reference));
    inputs.files.insert("test".into(), path_str(&args.test));
    inputs.config = json!({
        "joints": config.joints,
        "ref_frame": args.ref_frame,
        "test_frame": args.test_frame,
        "tolerance_deg": tolerance,
    });
    emit(out, &Report::new("pose_match", inputs, results).to_json())?;
    Ok(EXIT_OK)
}

fn cmd_rom(args: RomArgs, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let filter = settings.filter(&args.filter)?;
    let region = JointRegion::of_joint(args.joint).ok_or_else(|| {
        CliError::Usage(format!(
            "{} has no range-of-motion standards; use SpineMid, an elbow, shoulder or ankle",
            args.joint
        ))
    })?;
    let standard = rom_standard(region, args.motion).ok_or_else(|| {
        CliError::Usage(format!(
            "no {:?} standard for motion {}",
            region, args.motion
        ))
    })?;
    let stream = read_stream(&args.file, settings.lenient)?;
    let report = rom_analyze(
        &stream,
        args.joint,
        standard,
        &AdjacencyMap::default(),
        filter,
    )?;
    let mut inputs = Inputs::default();
    inputs.files.insert("stream".into(), path_str(&args.file));
    inputs.config = json!({
        "joint": args.joint,
        "motion": args.motion,
        "filter": filter,
    });
    emit(out, &Report::new("rom", inputs, report).to_json())?;
    Ok(EXIT_OK)
}

fn cmd_balance(
    file: &Path,
    height: Option<f64>,
    settings: &Settings,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let stream = read_stream(file, settings.lenient)?;
    let height_m = match height {
        Some(h) => h,
        None => stream.resolve_height()?,
    };
    let report = balance_analyze(&stream, height_m)?;
    let mut inputs = Inputs::default();
    inputs.files.insert("stream".into(), path_str(file));
    inputs.config = json!({ "height_m": height_m });
    emit(out, &Report::new("balance", inputs, report).to_json())?;
    Ok(EXIT_OK)
}

struct PairOutcome {
    comparison: crate::analysis::Comparison,
    score: PerformanceScore,
    scale_factor: Option<f64>,
    inputs: Inputs,
}

fn run_pair(
    pair: &PairArgs,
    weights: ScoreWeights,
    settings: &Settings,
) -> Result<PairOutcome, CliError> {
    let (Some(ref_path), Some(test_path)) = (&pair.reference, &pair.test) else {
        return Err(CliError::Usage("both --ref and --test are required".into()));
    };
    let filter = settings.filter(&pair.filter)?;
    let norm = settings.normalization(pair)?;
    let reference = read_stream(ref_path, settings.lenient)?;
    let test = read_stream(test_path, settings.lenient)?;
    let joints: BTreeSet<JointId> = if pair.joints.is_empty() {
        default_joints(&reference)
    } else {
        pair.joints.iter().copied().collect()
    };
    let comparison = compare_full(&reference, &test, &joints, &norm, filter)?;
    let score = performance_score(&comparison.errors, &comparison.balance, weights)?;
    let scale_factor = if norm.scale_enabled {
        Some(height_scale_factor(reference.resolve_height()?, test.resolve_height()?)?.value())
    } else {
        None
    };
    let mut inputs = Inputs::default();
    inputs.files.insert("reference".into(), path_str(ref_path));
    inputs.files.insert("test".into(), path_str(test_path));
    inputs.config = json!({
        "filter": filter,
        "joints": joints,
        "normalization": norm,
        "weights": weights,
    });
    Ok(PairOutcome {
        comparison,
        score,
        scale_factor,
        inputs,
    })
}

fn default_joints(reference: &MotionStream) -> BTreeSet<JointId> {
    ExerciseKind::from_tag(&reference.meta.exercise_tag)
        .unwrap_or(ExerciseKind::BicepCurl)
        .relevant_joints()
}

fn cmd_compare(
    args: CompareArgs,
    settings: &Settings,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let weights = settings.weights(args.weights)?;
    let outcome = run_pair(&args.pair, weights, settings)?;
    let errors = &outcome.comparison.errors;
    let mut inputs = outcome.inputs;
    if let Some(path) = &args.out_csv {
        export_errors_csv(errors, path)?;
        inputs.files.insert("out_csv".into(), path_str(path));
    }
    if let Some(path) = &args.out_svg {
        let selection = PlotSelection {
            kind: args.plot.into(),
            joints: args.plot_joints.clone(),
        };
        render_plot(errors, &selection, path)?;
        inputs.files.insert("out_svg".into(), path_str(path));
    }
    let results = ComparisonResults {
        frame_count: errors.frame_count(),
        scale_factor: outcome.scale_factor,
        joints: summarize(errors),
        balance: outcome.comparison.balance,
        score: outcome.score,
    };
    let text = Report::new("comparison", inputs, results).to_json();
    match &args.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Analysis(Error::io(path, e)))?,
        None => emit(out, &text)?,
    }
    Ok(EXIT_OK)
}

/// Pulls `(e_p_m, e_s_mps, e_b)` out of a comparison report, a score report
/// or a bare object.
fn score_components(value: &Value) -> Option<(f64, f64, f64)> {
    let candidates = [
        value.pointer("/results/score"),
        value.pointer("/results"),
        Some(value),
    ];
    candidates.into_iter().flatten().find_map(|v| {
        Some((
            v.get("e_p_m")?.as_f64()?,
            v.get("e_s_mps")?.as_f64()?,
            v.get("e_b")?.as_f64()?,
        ))
    })
}

fn cmd_score(args: ScoreArgs, settings: &Settings, out: &mut dyn Write) -> Result<i32, CliError> {
    let weights = settings.weights(args.weights)?;
    let (score, inputs) = match &args.report {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
                line: e.line(),
                detail: e.to_string(),
            })?;
            let (e_p, e_s, e_b) = score_components(&value).ok_or_else(|| Error::Parse {
                line: 1,
                detail: "report lacks numeric e_p_m, e_s_mps and e_b".into(),
            })?;
            for v in [e_p, e_s, e_b] {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(CliError::Analysis(Error::InvalidConfig(format!(
                        "error components must be non-negative, got {v}"
                    ))));
                }
            }
            let mut inputs = Inputs::default();
            inputs.files.insert("report".into(), path_str(path));
            inputs.config = json!({ "weights": weights });
            (
                PerformanceScore::from_components(e_p, e_s, e_b, weights),
                inputs,
            )
        }
        None => {
            let outcome = run_pair(&args.pair, weights, settings)?;
            (outcome.score, outcome.inputs)
        }
    };
    emit(out, &Report::new("score", inputs, score).to_json())?;
    Ok(EXIT_OK)
}
