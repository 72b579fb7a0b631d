//! Command implementations behind the `armloop` binary. Each returns an
//! [`ExitCode`]-compatible integer so the binary only parses flags.
//!
//! Exit codes: 0 success, 1 replay found violations, 2 usage or
//! configuration error, 3 backend failure, 4 corrupt trace.

use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use armloop::control_loop::{replay, run_episode, trajectory_svg, EpisodeOutcome, EpisodeTrace, LoopConfig};
use armloop::controller::{BackendError, ContextAblation, ControllerBackend, HttpChat, HttpChatConfig};
use armloop::exec::Execution;
use armloop::frame::ParseMode;
use armloop::harness::{aggregate, builtin_tasks, oracle_backend, run_tasks, run_trial, HarnessConfig, TaskDef, TaskInstance, TableLayout, TrialResult};
use armloop::preprocess::build_plan;
use armloop::robot::{RobotKind, RobotSpec};
use armloop::scene::Scenario;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_CORRUPT: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Oracle,
    Http,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(BackendKind::Oracle),
            "http" => Ok(BackendKind::Http),
            other => Err(format!("unknown backend {other:?} (expected oracle or http)")),
        }
    }
}

/// Flat configuration shared by every subcommand. Unset keys keep their
/// defaults; command-line flags override the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub robot: RobotKind,
    /// TOML robot description replacing the built-in spec for `robot`.
    pub robot_spec: Option<PathBuf>,
    pub backend: BackendKind,
    pub seed: u64,
    pub trials: usize,
    pub noise_sigma: f64,
    pub dropout_prob: f64,
    /// Worker threads for `bench`: unset runs sequentially, 0 uses every core.
    pub workers: Option<usize>,
    pub tick_dt: f64,
    pub feedback_every: u64,
    pub max_ticks_per_action: u64,
    pub max_consecutive_rejections: u32,
    pub max_delta: f64,
    pub negative_cap: usize,
    pub persist_negatives: bool,
    pub parse_mode: ParseMode,
    pub drop_basic_movement: bool,
    pub drop_pick_move: bool,
    pub drop_interaction: bool,
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub key_var: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        let l = LoopConfig::default();
        let h = HarnessConfig::default();
        let http = HttpChatConfig::default();
        Self {
            robot: RobotKind::Scara,
            robot_spec: None,
            backend: BackendKind::Oracle,
            seed: 0,
            trials: 5,
            noise_sigma: h.noise_sigma,
            dropout_prob: h.dropout_prob,
            workers: None,
            tick_dt: l.tick_dt,
            feedback_every: l.feedback_every,
            max_ticks_per_action: l.max_ticks_per_action,
            max_consecutive_rejections: l.max_consecutive_rejections,
            max_delta: l.max_delta,
            negative_cap: l.negative_cap,
            persist_negatives: l.persist_negatives,
            parse_mode: l.parse_mode,
            drop_basic_movement: false,
            drop_pick_move: false,
            drop_interaction: false,
            base_url: http.base_url,
            model: http.model,
            temperature: http.temperature,
            key_var: http.key_var,
        }
    }
}

/// Flag values; `None` leaves the config-file or default value alone.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub robot: Option<RobotKind>,
    pub backend: Option<BackendKind>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub workers: Option<usize>,
    pub no_noise: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Backend(String),
    #[error("corrupt trace: {0}")]
    Corrupt(String),
    #[error("{0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Backend(_) => EXIT_BACKEND,
            CliError::Corrupt(_) => EXIT_CORRUPT,
        }
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::MissingCredential(var) => {
                CliError::Backend(format!("missing credential: set the {var} environment variable for the http backend"))
            }
            other => CliError::Backend(other.to_string()),
        }
    }
}

impl RunConfig {
    /// Defaults, then the optional TOML file, then the flags.
    pub fn resolve(file: Option<&Path>, flags: &Overrides) -> Result<Self, CliError> {
        let mut c = match file {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(r) = flags.robot {
            c.robot = r;
        }
        if let Some(b) = flags.backend {
            c.backend = b;
        }
        if let Some(s) = flags.seed {
            c.seed = s;
        }
        if let Some(t) = flags.trials {
            c.trials = t;
        }
        if flags.workers.is_some() {
            c.workers = flags.workers;
        }
        if flags.no_noise {
            c.noise_sigma = 0.0;
            c.dropout_prob = 0.0;
        }
        c.harness().loop_config.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(c)
    }

    pub fn spec(&self) -> Result<RobotSpec, CliError> {
        match &self.robot_spec {
            None => Ok(RobotSpec::for_kind(self.robot)),
            Some(p) => {
                let spec = RobotSpec::load(p).map_err(|e| CliError::Usage(e.to_string()))?;
                if spec.kind != self.robot {
                    return Err(CliError::Usage(format!("{} describes a {} robot", p.display(), spec.kind.name())));
                }
                Ok(spec)
            }
        }
    }

    pub fn harness(&self) -> HarnessConfig {
        let loop_config = LoopConfig {
            tick_dt: self.tick_dt,
            feedback_every: self.feedback_every,
            max_ticks_per_action: self.max_ticks_per_action,
            max_consecutive_rejections: self.max_consecutive_rejections,
            seed: self.seed,
            ablation: ContextAblation {
                drop_basic_movement: self.drop_basic_movement,
                drop_pick_move: self.drop_pick_move,
                drop_interaction: self.drop_interaction,
            },
            persist_negatives: self.persist_negatives,
            negative_cap: self.negative_cap,
            max_delta: self.max_delta,
            parse_mode: self.parse_mode,
            ..LoopConfig::default()
        };
        let execution = self.workers.map_or(Execution::Sequential, Execution::Parallel);
        HarnessConfig { loop_config, noise_sigma: self.noise_sigma, dropout_prob: self.dropout_prob, execution }
    }

    pub fn http_config(&self) -> HttpChatConfig {
        HttpChatConfig {
            base_url: self.base_url.clone(),
            model: self.model.clone(),
            temperature: self.temperature,
            key_var: self.key_var.clone(),
            ..HttpChatConfig::default()
        }
    }

    /// Fails early with a credential message instead of once per trial.
    fn check_backend(&self) -> Result<(), CliError> {
        if self.backend == BackendKind::Http {
            HttpChat::from_env(self.http_config())?;
        }
        Ok(())
    }

    fn factory(&self) -> impl Fn(&TaskInstance, &TableLayout) -> Result<Box<dyn ControllerBackend>, BackendError> + Sync + '_ {
        move |inst, layout| match self.backend {
            BackendKind::Oracle => oracle_backend(inst, layout),
            BackendKind::Http => Ok(Box::new(HttpChat::from_env(self.http_config())?)),
        }
    }
}

/// Parses `1-7`, `1,3,8-12` or `all`.
pub fn parse_task_selection(s: &str) -> Result<Vec<TaskDef>, CliError> {
    let all = builtin_tasks();
    if s.trim() == "all" {
        return Ok(all);
    }
    let bad = || CliError::Usage(format!("bad task selection {s:?}"));
    let mut ids = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a.trim().parse::<u32>().map_err(|_| bad())?, b.trim().parse::<u32>().map_err(|_| bad())?),
            None => {
                let v = part.parse::<u32>().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(bad());
        }
        ids.extend(lo..=hi);
    }
    ids.sort_unstable();
    ids.dedup();
    ids.into_iter()
        .map(|id| all.iter().find(|t| t.id == id).cloned().ok_or_else(|| CliError::Usage(format!("unknown task id {id}"))))
        .collect()
}

fn write_trace(trace: &EpisodeTrace, path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    trace.write_jsonl(&mut f)?;
    f.flush()?;
    Ok(())
}

fn write_svg(trace: &EpisodeTrace, path: &Path) -> Result<(), CliError> {
    match trajectory_svg(trace) {
        Some(svg) => Ok(fs::write(path, svg)?),
        None => Err(CliError::Usage("trace has no robot states to plot".into())),
    }
}

pub enum RunSource {
    Task(u32),
    Scenario { path: PathBuf, prompt: String },
}

pub struct RunArgs {
    pub source: RunSource,
    pub trace: PathBuf,
    pub svg: Option<PathBuf>,
}

/// One episode. Exit 0 whenever the episode ran to an outcome; whether the
/// task succeeded is reported, not signalled.
pub fn cmd_run(config: &RunConfig, args: &RunArgs, out: &mut impl Write) -> Result<i32, CliError> {
    config.check_backend()?;
    let spec = config.spec()?;
    let harness = config.harness();
    let (trace, summary) = match &args.source {
        RunSource::Task(id) => {
            let task = parse_task_selection(&id.to_string())?.remove(0);
            let r = run_trial(&task, 0, &spec, &config.factory(), &harness);
            if let Some(e) = &r.error {
                return Err(CliError::Backend(e.clone()));
            }
            let line = format!(
                "task {} seed {}: {} after {} queries, success={}",
                r.task_id, r.seed, r.outcome, r.queries, r.success
            );
            (r.trace.expect("trace present without error"), line)
        }
        RunSource::Scenario { path, prompt } => {
            if config.backend == BackendKind::Oracle {
                return Err(CliError::Usage("the oracle backend needs --task; use --backend http with --scenario".into()));
            }
            let scenario = Scenario::load(path).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut backend = HttpChat::from_env(config.http_config())?;
            let plan = build_plan(prompt, &mut backend).map_err(|e| CliError::Backend(e.to_string()))?;
            let ep = run_episode(&plan, &spec, &scenario, &mut backend, &harness.loop_config).map_err(|e| CliError::Usage(e.to_string()))?;
            let line = format!("{}: {} at t={:.1}s", path.display(), ep.outcome.name(), ep.sim_time);
            (ep.trace, line)
        }
    };
    write_trace(&trace, &args.trace)?;
    if let Some(svg) = &args.svg {
        write_svg(&trace, svg)?;
    }
    writeln!(out, "{summary}")?;
    writeln!(out, "trace: {}", args.trace.display())?;
    let failed_backend = matches!(trace.end(), Some((EpisodeOutcome::BackendFailure, _)));
    Ok(if failed_backend { EXIT_BACKEND } else { EXIT_OK })
}

#[derive(Debug, Serialize)]
struct BenchSummary<'a> {
    robot: RobotKind,
    backend: BackendKind,
    config: &'a RunConfig,
    metrics: armloop::harness::Metrics,
    trials: &'a [TrialResult],
}

/// Batch run. Writes `metrics.csv`, `metrics.json` and one JSONL trace per
/// trial under `out_dir/traces`, all ordered by (task, trial index).
pub fn cmd_bench(config: &RunConfig, tasks: &[TaskDef], out_dir: &Path, out: &mut impl Write) -> Result<i32, CliError> {
    config.check_backend()?;
    if config.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let spec = config.spec()?;
    let results = run_tasks(tasks, config.trials, &spec, &config.factory(), &config.harness()).map_err(|e| CliError::Usage(e.to_string()))?;
    let metrics = aggregate(&results).map_err(|e| CliError::Usage(e.to_string()))?;

    fs::create_dir_all(out_dir.join("traces"))?;
    for r in &results {
        if let Some(t) = &r.trace {
            write_trace(t, &out_dir.join("traces").join(format!("task{:02}_trial{:02}.jsonl", r.task_id, r.trial_index)))?;
        }
    }
    fs::write(out_dir.join("metrics.csv"), metrics.to_csv())?;
    let summary = BenchSummary { robot: config.robot, backend: config.backend, config, metrics: metrics.clone(), trials: &results };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Usage(e.to_string()))?;
    fs::write(out_dir.join("metrics.json"), json + "\n")?;

    write!(out, "{}", metrics.to_csv())?;
    writeln!(out, "{}", metrics.overall_line())?;
    let backend_errors: Vec<&TrialResult> = results.iter().filter(|r| r.error.is_some()).collect();
    if let Some(first) = backend_errors.first() {
        writeln!(out, "{} trials failed to run; first error: {}", backend_errors.len(), first.error.as_deref().unwrap_or_default())?;
        return Ok(EXIT_BACKEND);
    }
    Ok(EXIT_OK)
}

/// Verifies a trace; exit 1 when it has violations.
pub fn cmd_replay(path: &Path, svg: Option<&Path>, out: &mut impl Write) -> Result<i32, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::Corrupt(format!("{}: {e}", path.display())))?;
    let trace = EpisodeTrace::read_jsonl(BufReader::new(file)).map_err(|e| CliError::Corrupt(e.to_string()))?;
    let report = replay(&trace).map_err(|e| CliError::Corrupt(e.to_string()))?;
    writeln!(out, "{report}")?;
    if let Some(p) = svg {
        write_svg(&trace, p)?;
    }
    Ok(if report.violations.is_empty() { EXIT_OK } else { EXIT_VIOLATIONS })
}
