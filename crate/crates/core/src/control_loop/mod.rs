//! Perceive, prompt, filter, act: one episode at a time.

mod plot;
mod replay;
mod trace;

pub use plot::trajectory_svg;
pub use replay::{replay, ReplayReport, Violation, ViolationKind};
pub use trace::{
    ActionOutcome, CorruptTrace, EpisodeOutcome, EpisodeTrace, Event, SnapshotRecord, TraceEvent, SCHEMA_VERSION,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{
    assemble_context, catalog_with, pre_execution_filter, recycle, ContextAblation, ControllerBackend,
    ControllerContext, FilterConfig, Observation, DEFAULT_MAX_DELTA, DEFAULT_NEGATIVE_CAP,
};
use crate::frame::{CommandFrame, ParseMode};
use crate::hash::{fnv1a, hex};
use crate::preprocess::{AtomicAction, TaskPlan};
use crate::robot::{gripper_command, step, RobotSpec, RobotState};
use crate::scene::{scene_to_text, Perception, PerceptionConfig, Scenario, WorldModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoopConfig {
    /// Simulated seconds per tick.
    pub tick_dt: f64,
    /// Ticks between controller queries.
    pub feedback_every: u64,
    pub max_ticks_per_action: u64,
    pub max_consecutive_rejections: u32,
    pub seed: u64,
    pub ablation: ContextAblation,
    pub perception: PerceptionConfig,
    /// Keep rejected outputs across atomic actions instead of clearing them.
    pub persist_negatives: bool,
    pub negative_cap: usize,
    pub max_delta: f64,
    pub parse_mode: ParseMode,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            tick_dt: 0.1,
            feedback_every: 2,
            max_ticks_per_action: 3000,
            max_consecutive_rejections: 10,
            seed: 0,
            ablation: ContextAblation::default(),
            perception: PerceptionConfig::default(),
            persist_negatives: false,
            negative_cap: DEFAULT_NEGATIVE_CAP,
            max_delta: DEFAULT_MAX_DELTA,
            parse_mode: ParseMode::Permissive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoopError {
    #[error("invalid loop config: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

impl LoopConfig {
    pub fn validate(&self) -> Result<(), LoopError> {
        if !(self.tick_dt > 0.0 && self.tick_dt.is_finite()) {
            return Err(LoopError::InvalidConfig("tick_dt must be positive".into()));
        }
        if self.feedback_every == 0 {
            return Err(LoopError::InvalidConfig("feedback_every must be at least 1".into()));
        }
        if self.max_ticks_per_action == 0 || self.max_consecutive_rejections == 0 {
            return Err(LoopError::InvalidConfig("limits must be at least 1".into()));
        }
        if !(self.max_delta > 0.0) {
            return Err(LoopError::InvalidConfig("max_delta must be positive".into()));
        }
        Ok(())
    }

    pub fn filter_config(&self, spec: &RobotSpec) -> FilterConfig {
        FilterConfig { max_delta: self.max_delta, parse_mode: self.parse_mode, ..FilterConfig::for_spec(spec) }
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub trace: EpisodeTrace,
    pub outcome: EpisodeOutcome,
    pub world: WorldModel,
    pub robot: RobotState,
    pub sim_time: f64,
}

/// Mutable state of one running episode.
pub struct Episode<'a> {
    pub spec: &'a RobotSpec,
    pub plan: &'a TaskPlan,
    pub config: &'a LoopConfig,
    pub filter: FilterConfig,
    pub world: WorldModel,
    pub robot: RobotState,
    pub perception: Perception,
    pub context: ControllerContext,
    pub trace: EpisodeTrace,
    /// Current motion target; the robot keeps moving toward it between queries.
    pub target: CommandFrame,
    pub tick: u64,
    rng: ChaCha8Rng,
    failure: Option<String>,
}

impl<'a> Episode<'a> {
    pub fn new(
        plan: &'a TaskPlan,
        spec: &'a RobotSpec,
        scenario: &Scenario,
        backend_name: &str,
        config: &'a LoopConfig,
    ) -> Result<Self, LoopError> {
        config.validate()?;
        spec.validate().map_err(|e| LoopError::InvalidConfig(e.to_string()))?;
        scenario.world.validate().map_err(|e| LoopError::InvalidScenario(e.to_string()))?;
        scenario.camera.validate().map_err(|e| LoopError::InvalidScenario(e.to_string()))?;
        let filter = config.filter_config(spec);
        let robot = RobotState::home(spec);
        let p = robot.pose;
        let mut context = ControllerContext::new(filter.limits.header(), catalog_with(config.ablation));
        context.negative_cap = config.negative_cap;
        let mut trace = EpisodeTrace::default();
        trace.push(
            0,
            Event::EpisodeStart {
                schema_version: SCHEMA_VERSION,
                prompt: plan.user_prompt.clone(),
                actions: plan.executable().iter().map(|a| a.verb_phrase.clone()).collect(),
                spec: spec.clone(),
                filter: filter.clone(),
                tick_dt: config.tick_dt,
                seed: config.seed,
                backend: backend_name.to_string(),
            },
        );
        Ok(Self {
            spec,
            plan,
            config,
            filter,
            world: scenario.world.clone(),
            robot,
            perception: Perception::new(scenario.camera.clone(), config.perception.clone()),
            context,
            trace,
            target: CommandFrame::motion(p.x, p.y, p.z, p.rotation, false),
            tick: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            failure: None,
        })
    }

    pub fn sim_time(&self) -> f64 {
        self.tick as f64 * self.config.tick_dt
    }

    /// Runs one atomic action to its halting signal, timeout, or rejection limit.
    pub fn run_action(&mut self, action: &AtomicAction, backend: &mut dyn ControllerBackend) -> ActionOutcome {
        if !self.config.persist_negatives {
            self.context.negatives.clear();
        }
        self.context.atomic_action = action.verb_phrase.clone();
        let mut previous: Option<CommandFrame> = None;
        let mut rejections = 0;
        let mut ticks = 0;
        loop {
            if ticks % self.config.feedback_every == 0 {
                let ee = self.robot.pose.position();
                let snapshot = self.perception.observe(&self.world, self.tick, ee, &mut self.rng);
                self.trace.push(
                    self.tick,
                    Event::SnapshotEmitted { action: action.index, snapshot: SnapshotRecord::from_snapshot(&snapshot) },
                );
                self.context.scene_text = scene_to_text(&snapshot, self.plan.object_filter());
                self.context.robot_state_text = self.robot.describe();
                let text = assemble_context(&self.context);
                self.trace.push(
                    self.tick,
                    Event::ContextAssembled {
                        action: action.index,
                        chars: text.len(),
                        hash: hex(fnv1a(text.as_bytes())),
                        negatives: self.context.negatives.len(),
                    },
                );
                backend.observe(&Observation {
                    tick: self.tick,
                    action,
                    world: &self.world,
                    robot: &self.robot,
                    spec: self.spec,
                    snapshot: &snapshot,
                    last_accepted: previous.as_ref(),
                    filter: &self.filter,
                });
                let raw = match backend.query(&text) {
                    Ok(r) => r,
                    Err(e) => {
                        self.failure = Some(e.to_string());
                        return ActionOutcome::BackendFailure;
                    }
                };
                self.trace.push(self.tick, Event::ControllerOutput { raw: raw.clone() });
                let verdict = pre_execution_filter(&raw, self.spec, previous.as_ref(), &self.filter);
                self.trace.push(self.tick, Event::Verdict { verdict: verdict.clone(), previous });
                if verdict.accepted {
                    rejections = 0;
                    if let Some(frame) = verdict.frame {
                        self.target = frame;
                        previous = Some(frame);
                        self.trace.push(self.tick, Event::FrameDispatched { frame });
                    }
                    if verdict.halt {
                        return ActionOutcome::Halted;
                    }
                } else {
                    self.context = recycle(&verdict, &self.context).expect("verdict is a rejection");
                    rejections += 1;
                    if rejections >= self.config.max_consecutive_rejections {
                        return ActionOutcome::RejectionLimit;
                    }
                }
            }
            let feedback_next = (ticks + 1) % self.config.feedback_every == 0;
            self.advance(feedback_next);
            ticks += 1;
            if ticks >= self.config.max_ticks_per_action {
                return ActionOutcome::Timeout;
            }
        }
    }

    /// One simulation tick: robot, gripper contact, world motion.
    fn advance(&mut self, record_poses: bool) {
        let dt = self.config.tick_dt;
        let out = step(&self.robot, self.spec, &self.target, dt);
        self.robot = out.state;
        if let Some(id) = out.released {
            self.world.release(id);
        }
        if out.close_completed {
            self.robot = gripper_command(&self.robot, self.spec, true, &self.world);
            if let Some(id) = self.robot.holding {
                self.world.attach_to_gripper(id, self.robot.pose.position());
            }
        }
        self.world.advance(dt, &mut self.rng);
        self.world.sync_held(self.robot.pose.position());
        self.tick += 1;
        self.trace.push(self.tick, Event::RobotState { state: self.robot.clone() });
        let poses = record_poses.then(|| self.world.objects.iter().map(|o| (o.id, o.pose)).collect());
        self.trace.push(self.tick, Event::WorldStateHash { hash: hex(self.world.state_hash()), poses });
    }

    pub fn finish(mut self, outcome: EpisodeOutcome) -> EpisodeResult {
        let sim_time = self.sim_time();
        let error = self.failure.take();
        self.trace.push(self.tick, Event::EpisodeEnd { outcome, sim_time, error });
        EpisodeResult { trace: self.trace, outcome, world: self.world, robot: self.robot, sim_time }
    }
}

/// Runs every executable action in order, stopping at the first one that
/// does not halt.
pub fn run_episode(
    plan: &TaskPlan,
    spec: &RobotSpec,
    scenario: &Scenario,
    backend: &mut dyn ControllerBackend,
    config: &LoopConfig,
) -> Result<EpisodeResult, LoopError> {
    let name = backend.name().to_string();
    let mut episode = Episode::new(plan, spec, scenario, &name, config)?;
    let mut outcome = EpisodeOutcome::Completed;
    for action in plan.executable() {
        let result = episode.run_action(action, backend);
        episode.trace.push(
            episode.tick,
            Event::ActionAdvanced { index: action.index, phrase: action.verb_phrase.clone(), outcome: result },
        );
        outcome = match result {
            ActionOutcome::Halted => continue,
            ActionOutcome::Timeout => EpisodeOutcome::Timeout,
            ActionOutcome::RejectionLimit => EpisodeOutcome::RejectionLimit,
            ActionOutcome::BackendFailure => EpisodeOutcome::BackendFailure,
        };
        break;
    }
    Ok(episode.finish(outcome))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::controller::MockScripted;
    use crate::geometry::{Point2, Rect};
    use crate::scene::{CameraModel, Color, Shape, WorldObject};
    use std::collections::BTreeSet;

    fn scenario() -> Scenario {
        let world = WorldModel::new(vec![WorldObject::new(
            1,
            "block",
            Color::Red,
            Shape::Rectangle { width: 36.0, depth: 36.0 },
            36.0,
            [250.0, 50.0, 0.0],
        )])
        .unwrap();
        let camera = CameraModel::overhead(Rect::new(Point2::new(0.0, -300.0), Point2::new(400.0, 300.0)), 1.0);
        Scenario { seed: 0, camera, world }
    }

    fn plan(actions: &[&str]) -> TaskPlan {
        let mut a: Vec<AtomicAction> = actions.iter().enumerate().map(|(i, s)| AtomicAction::new(i + 1, s)).collect();
        a.push(AtomicAction::new(actions.len() + 1, "done"));
        TaskPlan { user_prompt: "test".into(), actions: a, objects: BTreeSet::new() }
    }

    fn run(p: &TaskPlan, backend: &mut dyn ControllerBackend) -> EpisodeResult {
        run_episode(p, &RobotSpec::scara(), &scenario(), backend, &LoopConfig::default()).unwrap()
    }

    #[test]
    fn immediate_halt_leaves_robot_home() {
        let mut b = MockScripted::constant("[1]");
        let r = run(&plan(&["wait"]), &mut b);
        assert_eq!(r.outcome, EpisodeOutcome::Completed);
        assert_eq!(r.sim_time, 0.0);
        assert_eq!(r.robot, RobotState::home(&RobotSpec::scara()));
    }

    #[test]
    fn rejection_limit_counts_queries() {
        let mut b = MockScripted::constant("[1, 500, 0, 50, 0, 0, 0]");
        let r = run(&plan(&["go"]), &mut b);
        assert_eq!(r.outcome, EpisodeOutcome::RejectionLimit);
        assert_eq!(b.call_count(), 10);
        assert_eq!(r.trace.dispatched_frames().count(), 0);
    }

    #[test]
    fn one_advance_per_action_and_empty_plan() {
        let mut b = MockScripted::constant("[1]");
        let r = run(&plan(&["a", "b"]), &mut b);
        let advanced = r.trace.events.iter().filter(|e| matches!(e.event, Event::ActionAdvanced { .. })).count();
        assert_eq!(advanced, 2);
        let r = run(&plan(&[]), &mut b);
        assert_eq!(r.trace.events.len(), 2);
        assert_eq!(r.outcome, EpisodeOutcome::Completed);
    }

    #[test]
    fn timeout_and_backend_failure() {
        let cfg = LoopConfig { max_ticks_per_action: 20, ..Default::default() };
        let mut b = MockScripted::constant("[1, 250, 0, 100, 0, 0, 0]");
        let r = run_episode(&plan(&["hover"]), &RobotSpec::scara(), &scenario(), &mut b, &cfg).unwrap();
        assert_eq!(r.outcome, EpisodeOutcome::Timeout);
        assert_eq!(b.call_count(), 10);
        let mut empty = MockScripted::default();
        let r = run(&plan(&["x"]), &mut empty);
        assert_eq!(r.outcome, EpisodeOutcome::BackendFailure);
        assert!(r.trace.to_jsonl().contains("no reply for call 0"));
    }

    #[test]
    fn rejected_outputs_are_recycled_into_context() {
        let mut b = MockScripted::sequence(vec!["[1, 500, 0, 50, 0, 0, 0]".into(), "[1]".into()]);
        let r = run(&plan(&["go"]), &mut b);
        let negs: Vec<usize> = r
            .trace
            .events
            .iter()
            .filter_map(|e| match e.event {
                Event::ContextAssembled { negatives, .. } => Some(negatives),
                _ => None,
            })
            .collect();
        assert_eq!(negs, vec![0, 1]);
    }

    #[test]
    fn config_validation() {
        assert!(LoopConfig { tick_dt: 0.0, ..Default::default() }.validate().is_err());
        assert!(LoopConfig { feedback_every: 0, ..Default::default() }.validate().is_err());
        let cfg: LoopConfig = toml::from_str("feedback_every = 3\n[perception]\ntracking = false").unwrap();
        assert_eq!(cfg.feedback_every, 3);
        assert!(cfg.perception.segmentation && !cfg.perception.tracking);
    }
}
