//! Benchmark tasks, trial batches and success-rate / completion-time metrics.

mod layout;
mod predicates;
mod tasks;

pub use layout::{TableLayout, CORNERS, SIDES};
pub use predicates::{success, tolerance, Goal};
pub use tasks::TaskInstance;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::control_loop::{run_episode, EpisodeTrace, LoopConfig};
use crate::controller::{BackendError, ControllerBackend, OracleSolver};
use crate::exec::Execution;
use crate::hash::Fnv64;
use crate::preprocess::build_plan;
use crate::robot::RobotSpec;

#[derive(Debug, Clone)]
pub struct TaskDef {
    pub id: u32,
    /// Template with the varying parts in angle brackets.
    pub description: &'static str,
    pub dynamic: bool,
    generate: tasks::Generator,
}

impl TaskDef {
    pub fn generate(&self, layout: &TableLayout, seed: u64) -> TaskInstance {
        (self.generate)(layout, seed)
    }
}

pub fn builtin_tasks() -> Vec<TaskDef> {
    let t = |id, description, dynamic, generate| TaskDef { id, description, dynamic, generate };
    vec![
        t(1, "Stack all the blocks", false, tasks::stack_blocks as tasks::Generator),
        t(2, "Put all the blocks on the <corner/side>", false, tasks::blocks_to_region),
        t(3, "Put the blocks in the <receptacle-bowl>", false, tasks::blocks_into_bowl),
        t(4, "Put all the blocks in the bowls with matching colors", false, tasks::matching_bowls),
        t(5, "Pick up the block to the <direction> of the <receptacle-bowl> and place it on the <corner/side>", false, tasks::block_by_direction),
        t(6, "Pick up the block <distance> to the <receptacle-bowl> and place it on the <corner/side>", false, tasks::block_by_distance),
        t(7, "Pick up the <nth> block from the <direction> and place it on the <corner/side>", false, tasks::nth_block),
        t(8, "Follow and pick-up the ball", true, tasks::moving_ball),
        t(9, "Go ahead and take the ball and then give it back to me (I am the hand)", true, tasks::ball_handover),
        t(10, "Find and pick-up the <round/any> object and put it into the <bucket/any location>", true, tasks::hidden_bucket),
        t(11, "Order everything in a logical way (objects are moved during the run)", true, tasks::zones_with_disturbance),
        t(12, "Give me the <screwdriver/any object> when you see my hand", true, tasks::tool_to_hand),
    ]
}

pub fn task(id: u32) -> Option<TaskDef> {
    builtin_tasks().into_iter().find(|t| t.id == id)
}

/// Seed for trial `index` of task `task_id` under a batch seed.
pub fn trial_seed(seed: u64, task_id: u32, index: usize) -> u64 {
    let mut h = Fnv64::new();
    h.write(&seed.to_le_bytes());
    h.write(&task_id.to_le_bytes());
    h.write(&(index as u64).to_le_bytes());
    h.finish()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub loop_config: LoopConfig,
    /// Camera jitter, mm; applied to every generated scenario.
    pub noise_sigma: f64,
    pub dropout_prob: f64,
    pub execution: Execution,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self { loop_config: LoopConfig::default(), noise_sigma: 2.0, dropout_prob: 0.05, execution: Execution::Sequential }
    }
}

impl HarnessConfig {
    pub fn noiseless(mut self) -> Self {
        self.noise_sigma = 0.0;
        self.dropout_prob = 0.0;
        self
    }
}

/// Builds the controller for one trial.
pub type BackendFactory<'a> =
    dyn Fn(&TaskInstance, &TableLayout) -> Result<Box<dyn ControllerBackend>, BackendError> + Sync + 'a;

pub fn oracle_backend(inst: &TaskInstance, layout: &TableLayout) -> Result<Box<dyn ControllerBackend>, BackendError> {
    Ok(Box::new(OracleSolver::new(layout.oracle_layout(inst.scan_view), &inst.plan_reply, &inst.objects_reply)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub task_id: u32,
    pub trial_index: usize,
    pub seed: u64,
    pub prompt: String,
    pub success: bool,
    /// Simulated seconds; present only on success.
    pub completion_time: Option<f64>,
    pub outcome: String,
    pub error: Option<String>,
    pub queries: usize,
    #[serde(skip)]
    pub trace: Option<EpisodeTrace>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("trial count must be at least 1")]
    NoTrials,
    #[error("no results to aggregate")]
    Empty,
    #[error("unknown task id {0}")]
    UnknownTask(u32),
}

pub fn run_trial(task: &TaskDef, index: usize, spec: &RobotSpec, factory: &BackendFactory<'_>, config: &HarnessConfig) -> TrialResult {
    let layout = TableLayout::for_spec(spec);
    let seed = trial_seed(config.loop_config.seed, task.id, index);
    let mut inst = task.generate(&layout, seed);
    inst.scenario.seed = seed;
    inst.scenario.camera.noise_sigma = config.noise_sigma;
    inst.scenario.camera.dropout_prob = config.dropout_prob;
    let mut result = TrialResult {
        task_id: task.id,
        trial_index: index,
        seed,
        prompt: inst.prompt.clone(),
        success: false,
        completion_time: None,
        outcome: "error".into(),
        error: None,
        queries: 0,
        trace: None,
    };
    let mut backend = match factory(&inst, &layout) {
        Ok(b) => b,
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    };
    let plan = match build_plan(&inst.prompt, backend.as_mut()) {
        Ok(p) => p,
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    };
    let loop_config = LoopConfig { seed, ..config.loop_config.clone() };
    match run_episode(&plan, spec, &inst.scenario, backend.as_mut(), &loop_config) {
        Ok(ep) => {
            result.success = success(&inst.goal, &ep.world, &ep.trace);
            result.completion_time = result.success.then_some(ep.sim_time);
            result.outcome = ep.outcome.name().to_string();
            result.queries = ep.trace.query_count();
            result.trace = Some(ep.trace);
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result
}

/// Runs `trials` seeded trials; per-trial failures are recorded, not raised.
pub fn run_batch(
    task: &TaskDef,
    trials: usize,
    spec: &RobotSpec,
    factory: &BackendFactory<'_>,
    config: &HarnessConfig,
) -> Result<Vec<TrialResult>, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    Ok(config.execution.map(trials, |i| run_trial(task, i, spec, factory, config)))
}

/// Runs every (task, trial) pair as one flat job list.
pub fn run_tasks(
    tasks: &[TaskDef],
    trials: usize,
    spec: &RobotSpec,
    factory: &BackendFactory<'_>,
    config: &HarnessConfig,
) -> Result<Vec<TrialResult>, HarnessError> {
    if trials == 0 {
        return Err(HarnessError::NoTrials);
    }
    Ok(config.execution.map(tasks.len() * trials, |k| run_trial(&tasks[k / trials], k % trials, spec, factory, config)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub task_id: u32,
    pub description: String,
    pub successes: usize,
    pub trials: usize,
    pub sr_percent: f64,
    /// Mean completion time over successful trials.
    pub act_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub per_task: Vec<TaskMetrics>,
    pub successes: usize,
    pub trials: usize,
    /// Pooled successes over pooled trials.
    pub overall_sr_percent: f64,
}

fn percent(successes: usize, trials: usize) -> f64 {
    let p = 100.0 * successes as f64 / trials as f64;
    (p * 10.0).round() / 10.0
}

impl Metrics {
    /// From (task id, successes, trials, mean completion time) tallies.
    pub fn from_tallies(tallies: &[(u32, usize, usize, Option<f64>)]) -> Result<Self, HarnessError> {
        if tallies.is_empty() || tallies.iter().any(|t| t.2 == 0) {
            return Err(HarnessError::Empty);
        }
        let descriptions = builtin_tasks();
        let per_task: Vec<TaskMetrics> = tallies
            .iter()
            .map(|&(id, s, n, act)| TaskMetrics {
                task_id: id,
                description: descriptions.iter().find(|t| t.id == id).map_or_else(String::new, |t| t.description.to_string()),
                successes: s,
                trials: n,
                sr_percent: percent(s, n),
                act_s: act.map(|a| (a * 10.0).round() / 10.0),
            })
            .collect();
        let successes = per_task.iter().map(|t| t.successes).sum();
        let trials = per_task.iter().map(|t| t.trials).sum();
        Ok(Self { per_task, successes, trials, overall_sr_percent: percent(successes, trials) })
    }

    pub fn overall_line(&self) -> String {
        format!("Overall SR: {:.1}% ({}/{})", self.overall_sr_percent, self.successes, self.trials)
    }

    /// Columns: task_id, description, sr_fraction, sr_percent, act_s.
    pub fn write_csv(&self, out: impl Write) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["task_id", "description", "sr_fraction", "sr_percent", "act_s"])?;
        for t in &self.per_task {
            w.write_record([
                t.task_id.to_string(),
                t.description.clone(),
                format!("{}/{}", t.successes, t.trials),
                format!("{:.1}", t.sr_percent),
                t.act_s.map_or_else(String::new, |a| format!("{a:.1}")),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is UTF-8")
    }
}

/// Per-task tallies in ascending task order.
pub fn aggregate(results: &[TrialResult]) -> Result<Metrics, HarnessError> {
    let mut ids: Vec<u32> = results.iter().map(|r| r.task_id).collect();
    ids.sort_unstable();
    ids.dedup();
    let tallies: Vec<(u32, usize, usize, Option<f64>)> = ids
        .into_iter()
        .map(|id| {
            let rs: Vec<&TrialResult> = results.iter().filter(|r| r.task_id == id).collect();
            let times: Vec<f64> = rs.iter().filter_map(|r| r.completion_time).collect();
            let act = (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64);
            (id, rs.iter().filter(|r| r.success).count(), rs.len(), act)
        })
        .collect();
    Metrics::from_tallies(&tallies)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tallies(s: &[usize]) -> Vec<(u32, usize, usize, Option<f64>)> {
        s.iter().enumerate().map(|(i, &k)| (i as u32 + 1, k, 25, None)).collect()
    }

    #[test]
    fn pooled_overall_rates() {
        let m = Metrics::from_tallies(&tallies(&[23, 25, 22, 24, 23, 24, 21])).unwrap();
        assert_eq!((m.successes, m.trials), (162, 175));
        assert_eq!(format!("{:.1}", m.overall_sr_percent), "92.6");
        let d = Metrics::from_tallies(&tallies(&[24, 20, 19, 20, 21])).unwrap();
        assert_eq!(format!("{:.1}", d.overall_sr_percent), "83.2");
        assert!(Metrics::from_tallies(&[]).is_err());
    }

    #[test]
    fn csv_layout() {
        let m = Metrics::from_tallies(&[(1, 5, 5, Some(12.34)), (9, 0, 5, None)]).unwrap();
        let csv = m.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "task_id,description,sr_fraction,sr_percent,act_s");
        assert_eq!(lines[1], "1,Stack all the blocks,5/5,100.0,12.3");
        assert!(lines[2].ends_with(",0/5,0.0,"));
    }

    #[test]
    fn trial_seeds_differ() {
        assert_ne!(trial_seed(1, 1, 0), trial_seed(1, 1, 1));
        assert_ne!(trial_seed(1, 1, 0), trial_seed(1, 2, 0));
        assert_eq!(trial_seed(7, 3, 2), trial_seed(7, 3, 2));
    }

    #[test]
    fn zero_trials_rejected() {
        let t = task(1).unwrap();
        let r = run_batch(&t, 0, &RobotSpec::scara(), &oracle_backend, &HarnessConfig::default());
        assert_eq!(r, Err(HarnessError::NoTrials));
    }
}
