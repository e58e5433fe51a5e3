//! The `recall` command line.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use recall_core::evaluation::{evaluate_model, EvaluateOptions, EvaluationReport, Segmenter};
use recall_core::mlr::{select_windows, MlrModel, MlrTrainingSet, Windows};
use recall_core::optim::OptimizerConfig;
use recall_core::replay::{CausalModel, Query};
use recall_core::rpl::{fit_rpl, RplFitConfig, RplModel, DEFAULT_COLD_START};
use recall_core::simulator::{simulate, SimulationConfig};
use recall_core::{group_histories, Direction, FormatKind, KcHistory, QuestionFormat};

use crate::error::{EngineError, Result, EXIT_OK, EXIT_USAGE};
use crate::files::{self, ModelKind, ParamsFile, TrialLog};
use crate::plot::{segment_csv, segment_svg, Series};
use crate::report::{MlrFitReport, RplFitReport};
use crate::service;

#[derive(Debug, Parser)]
#[command(name = "recall", version, about = "Fit, evaluate and serve recall-probability models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the logistic trial-history model.
    FitMlr(FitMlrArgs),
    /// Fit the recurrent power-law model.
    FitRpl(FitRplArgs),
    /// Predict recall for one card from its history.
    Predict(PredictArgs),
    /// Score a model on a trial log.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic trial log.
    Simulate(SimulateArgs),
    /// Run the HTTP study-session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct FitMlrArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Significance level for window selection.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Fixed window sizes `n,m,l`; skips selection.
    #[arg(long, value_parser = parse_windows)]
    pub windows: Option<Windows>,
    /// Largest window sizes tried during selection.
    #[arg(long, value_parser = parse_windows, default_value = "8,8,6")]
    pub max_windows: Windows,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Newton iterations as JSONL.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitRplArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Random starts in addition to the neutral one.
    #[arg(long, default_value_t = 3)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Simplex iterations per run.
    #[arg(long, default_value_t = 4_000)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 2)]
    pub polish_rounds: usize,
    /// Prediction for cards with no trials in either direction.
    #[arg(long, default_value_t = DEFAULT_COLD_START)]
    pub cold_start: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long)]
    pub params: PathBuf,
    /// Trials of a single (student, card) pair; may be empty.
    #[arg(long)]
    pub history: PathBuf,
    /// Prediction time, unix seconds.
    #[arg(long)]
    pub at: i64,
    #[arg(long, value_parser = parse_direction, default_value = "forward")]
    pub direction: Direction,
    #[arg(long, value_parser = parse_format_kind, default_value = "cued_recall")]
    pub format: FormatKind,
    /// Number of options for choice formats.
    #[arg(long)]
    pub options: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SegmentBy {
    PastTrials,
    Format,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Bar chart of segment AUCs.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SegmentBy::PastTrials)]
    pub segment: SegmentBy,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Generating probabilities, one line per trial. Defaults to
    /// `<out stem>.truth.jsonl` beside the log.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Directory for decks, sessions and answer logs; in-memory when absent.
    #[arg(long)]
    pub state_dir: Option<PathBuf>,
    /// Deck JSON files to load at startup.
    #[arg(long)]
    pub deck: Vec<PathBuf>,
    /// Named parameter sets, `name=path`.
    #[arg(long, value_parser = parse_named_path)]
    pub params: Vec<(String, PathBuf)>,
    /// Grade typed answers ignoring case unless a request says otherwise.
    #[arg(long)]
    pub case_insensitive: bool,
}

fn parse_windows(s: &str) -> std::result::Result<Windows, String> {
    s.parse::<Windows>().map_err(|e| e.to_string())
}

fn parse_direction(s: &str) -> std::result::Result<Direction, String> {
    Direction::parse(s).ok_or_else(|| format!("unknown direction {s:?}; expected forward or backward"))
}

fn parse_format_kind(s: &str) -> std::result::Result<FormatKind, String> {
    FormatKind::parse(s).ok_or_else(|| {
        let known: Vec<&str> = FormatKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("unknown format {s:?}; expected one of {}", known.join(", "))
    })
}

fn parse_named_path(s: &str) -> std::result::Result<(String, PathBuf), String> {
    match s.split_once('=') {
        Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok((name.to_string(), PathBuf::from(path))),
        _ => Err(format!("expected name=path, got {s:?}")),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            } else {
                let _ = write!(stderr, "{text}");
                EXIT_USAGE
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    match command {
        Command::FitMlr(a) => fit_mlr(a, stdout, stderr),
        Command::FitRpl(a) => fit_rpl_cmd(a, stdout, stderr),
        Command::Predict(a) => predict(a, stdout),
        Command::Evaluate(a) => evaluate(a, stdout, stderr),
        Command::Simulate(a) => simulate_cmd(a, stdout),
        Command::Serve(a) => serve(a, stderr),
    }
}

fn load_log(path: &Path, stderr: &mut dyn Write) -> Result<(Vec<KcHistory>, TrialLog)> {
    let mut log = files::read_trial_log(path)?;
    for s in log.skipped.iter().take(5) {
        let _ = writeln!(stderr, "warning: {}:{}: skipped: {}", path.display(), s.line, s.reason);
    }
    if log.skipped.len() > 5 {
        let _ = writeln!(stderr, "warning: {} more malformed lines skipped", log.skipped.len() - 5);
    }
    if log.records.is_empty() {
        return Err(EngineError::Data(format!(
            "{}: no valid trials ({} malformed lines)",
            path.display(),
            log.skipped.len()
        )));
    }
    let records = std::mem::take(&mut log.records);
    Ok((group_histories(records).into_values().collect(), log))
}

fn fit_mlr(a: FitMlrArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let (histories, log) = load_log(&a.log, stderr)?;
    let training = MlrTrainingSet::new(histories);
    let config = OptimizerConfig::default();
    let (windows, selected, mut warnings) = match a.windows {
        Some(w) => (w, false, Vec::new()),
        None => {
            let sel = select_windows(&training, a.alpha, a.max_windows, &config)?;
            (sel.windows, true, sel.warnings)
        }
    };
    let fit = training.fit(windows, &config)?;
    if !fit.converged {
        warnings.push(format!("Newton-Raphson stopped after {} iterations without converging", fit.iterations));
    }
    files::save_params(&ParamsFile::Mlr(fit.params.clone()), &a.out)?;
    let report = MlrFitReport::new(&fit, selected, warnings, log.skipped.len());
    if let Some(path) = &a.report {
        files::write_json(path, &report)?;
    }
    if let Some(path) = &a.trace {
        files::write_trace(path, &fit.trace)?;
    }
    let _ = write!(stdout, "{}", report.table());
    Ok(())
}

fn fit_rpl_cmd(a: FitRplArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let (histories, log) = load_log(&a.log, stderr)?;
    let mut config = RplFitConfig { restarts: a.restarts, polish_rounds: a.polish_rounds, seed: a.seed, cold_start: a.cold_start, ..RplFitConfig::default() };
    config.optimizer.max_iterations = a.max_iterations;
    let fit = fit_rpl(&histories, &config)?;
    files::save_params(&ParamsFile::Rpl(fit.params.clone()), &a.out)?;
    let report = RplFitReport::new(&fit, log.skipped.len());
    if let Some(path) = &a.report {
        files::write_json(path, &report)?;
    }
    if let Some(path) = &a.trace {
        files::write_trace(path, &fit.trace)?;
    }
    let _ = write!(stdout, "{}", report.table());
    Ok(())
}

fn predict(a: PredictArgs, stdout: &mut dyn Write) -> Result<()> {
    let params = files::load_params(&a.params, a.model)?;
    let log = files::read_trial_log(&a.history)?;
    if let Some(s) = log.skipped.first() {
        return Err(EngineError::Data(format!("{}:{}: {}", a.history.display(), s.line, s.reason)));
    }
    let mut groups = group_histories(log.records).into_values();
    let history = groups.next();
    if groups.next().is_some() {
        return Err(EngineError::Data(format!(
            "{}: history mixes several (student, card) pairs",
            a.history.display()
        )));
    }
    let format = QuestionFormat::new(a.format, a.options)?;
    let query = Query { direction: a.direction, format, now: a.at };
    let trials = history.as_ref().map(KcHistory::trials).unwrap_or(&[]);
    let p = match params {
        ParamsFile::Mlr(p) => predict_after(&MlrModel::new(p)?, trials, &query)?,
        ParamsFile::Rpl(p) => predict_after(&RplModel::new(p)?, trials, &query)?,
    };
    let _ = writeln!(stdout, "{p:.6}");
    Ok(())
}

fn predict_after<M: CausalModel>(model: &M, trials: &[recall_core::TrialRecord], query: &Query) -> Result<f64> {
    let mut state = model.initial_state();
    for t in trials {
        model.observe(&mut state, t)?;
    }
    Ok(model.predict(&state, query)?.probability)
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    model: ModelKind,
    skipped_lines: usize,
    #[serde(flatten)]
    report: &'a EvaluationReport,
}

fn evaluate(a: EvaluateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<()> {
    let params = files::load_params(&a.params, a.model)?;
    let (histories, log) = load_log(&a.log, stderr)?;
    let options = EvaluateOptions {
        segmenter: match a.segment {
            SegmentBy::PastTrials => Segmenter::default(),
            SegmentBy::Format => Segmenter::Format,
        },
        ..EvaluateOptions::default()
    };
    let report = match params {
        ParamsFile::Mlr(p) => evaluate_model(&MlrModel::new(p)?, &histories, &options)?,
        ParamsFile::Rpl(p) => evaluate_model(&RplModel::new(p)?, &histories, &options)?,
    };
    files::write_json(&a.report, &EvaluateOutput { model: a.model, skipped_lines: log.skipped.len(), report: &report })?;
    let series = [Series { name: a.model.as_str(), segments: &report.segments }];
    if let Some(path) = &a.plot {
        let svg = segment_svg(&format!("AUC by segment, {} trials", report.n), &series);
        files::write_atomic(path, svg.as_bytes())?;
    }
    if let Some(path) = &a.csv {
        let text = segment_csv(&series).map_err(|e| EngineError::Data(e.to_string()))?;
        files::write_atomic(path, text.as_bytes())?;
    }
    let _ = writeln!(
        stdout,
        "auc {:.4} (se {:.4})  mean log-likelihood {:.4}  trials {}",
        report.auc, report.auc_se, report.mean_log_likelihood, report.n
    );
    for s in &report.segments {
        match (s.auc, s.se) {
            (Some(auc), Some(se)) => {
                let _ = writeln!(stdout, "  {:<20} auc {auc:.4} (se {se:.4})  n {}", s.label, s.n);
            }
            _ => {
                let _ = writeln!(stdout, "  {:<20} auc -  n {}", s.label, s.n);
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct TruthLine {
    trial_index: usize,
    p_true: f64,
}

fn simulate_cmd(a: SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let config: SimulationConfig = files::read_json(&a.config)?;
    let log = simulate(&config)?;
    files::write_jsonl(&a.out, &log.records)?;
    let truth = a.truth.unwrap_or_else(|| truth_path(&a.out));
    files::write_jsonl(&truth, log.p_true.iter().enumerate().map(|(trial_index, &p_true)| TruthLine { trial_index, p_true }))?;
    let _ = writeln!(stdout, "wrote {} trials to {}", log.records.len(), a.out.display());
    Ok(())
}

fn truth_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "log".into());
    out.with_file_name(format!("{stem}.truth.jsonl"))
}

fn serve(a: ServeArgs, stderr: &mut dyn Write) -> Result<()> {
    let mut registry = service::ParamsRegistry::default();
    for (name, path) in &a.params {
        let text = std::fs::read_to_string(path).map_err(|e| EngineError::io(path, e))?;
        let params = ParamsFile::parse_any(&text).map_err(|e| EngineError::Data(format!("{}: {e}", path.display())))?;
        registry.insert(name.clone(), params).map_err(EngineError::Usage)?;
    }
    let options = service::ServiceOptions { case_insensitive: a.case_insensitive };
    let state = service::AppState::open(a.state_dir.clone(), registry, service::system_clock(), options)?;
    for path in &a.deck {
        let deck = files::read_json(path)?;
        state.add_deck(deck).map_err(|e| EngineError::Data(format!("{}: {}", path.display(), e.message)))?;
    }
    let runtime = tokio::runtime::Runtime::new().map_err(|e| EngineError::io("tokio runtime", e))?;
    let _ = writeln!(stderr, "listening on http://{}", a.addr);
    runtime.block_on(service::serve(state, a.addr)).map_err(|e| EngineError::io(a.addr.to_string(), e))
}
