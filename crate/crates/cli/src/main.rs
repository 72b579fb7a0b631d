use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use armloop::robot::RobotKind;
use armloop_cli::{cmd_bench, cmd_replay, cmd_run, parse_task_selection, BackendKind, CliError, Overrides, RunArgs, RunConfig, RunSource};

#[derive(Parser)]
#[command(name = "armloop", version, about = "Simulated closed-loop language-model robot control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    robot: Option<RobotKind>,
    /// oracle or http.
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long)]
    seed: Option<u64>,
    /// Disable camera jitter and detection dropout.
    #[arg(long)]
    no_noise: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and write its trace.
    Run {
        #[command(flatten)]
        common: Common,
        /// Built-in task id (1-12).
        #[arg(long, conflicts_with = "scenario")]
        task: Option<u32>,
        /// Scenario TOML; needs --prompt and the http backend.
        #[arg(long, requires = "prompt")]
        scenario: Option<PathBuf>,
        #[arg(long)]
        prompt: Option<String>,
        #[arg(long, default_value = "trace.jsonl")]
        trace: PathBuf,
        /// Also write a top-down trajectory plot.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run seeded trials per task and write metrics plus traces.
    Bench {
        #[command(flatten)]
        common: Common,
        /// Task ids: `all`, `1-7`, `1,3,8-12`.
        #[arg(long, default_value = "all")]
        tasks: String,
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads; 0 uses every core. Sequential when omitted.
        #[arg(long)]
        parallel: Option<usize>,
        #[arg(long, default_value = "bench_out")]
        out: PathBuf,
    },
    /// Verify a trace and optionally plot it.
    Replay {
        trace: PathBuf,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn overrides(c: &Common) -> Overrides {
    Overrides { robot: c.robot, backend: c.backend, seed: c.seed, no_noise: c.no_noise, ..Overrides::default() }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Run { common, task, scenario, prompt, trace, svg } => {
            let config = RunConfig::resolve(common.config.as_deref(), &overrides(&common))?;
            let source = match (task, scenario) {
                (Some(id), None) => RunSource::Task(id),
                (None, Some(path)) => RunSource::Scenario { path, prompt: prompt.unwrap_or_default() },
                _ => return Err(CliError::Usage("give either --task or --scenario".into())),
            };
            cmd_run(&config, &RunArgs { source, trace, svg }, &mut out)
        }
        Command::Bench { common, tasks, trials, parallel, out: dir } => {
            let flags = Overrides { trials, workers: parallel, ..overrides(&common) };
            let config = RunConfig::resolve(common.config.as_deref(), &flags)?;
            let tasks = parse_task_selection(&tasks)?;
            cmd_bench(&config, &tasks, &dir, &mut out)
        }
        Command::Replay { trace, svg } => cmd_replay(&trace, svg.as_deref(), &mut out),
    }
}

fn main() -> ExitCode {
    let code = match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
