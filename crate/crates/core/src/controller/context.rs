use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::catalog::ContextExample;
use super::filter::{FilterVerdict, RejectReason};
use crate::robot::RobotSpec;

const HEADER_TEMPLATE: &str = include_str!("../../templates/header.txt");
pub const DEFAULT_NEGATIVE_CAP: usize = 5;

/// Axis-aligned command limits. Reachability is checked separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceLimits {
    pub min: [f64; 4],
    pub max: [f64; 4],
}

impl WorkspaceLimits {
    /// Box around the reach disc and vertical band; rotation comes from the
    /// wrist joint range.
    pub fn from_spec(spec: &RobotSpec) -> Self {
        let r = spec.workspace_radius;
        let wrist = spec.joint_ranges[3];
        Self { min: [-r, -r, spec.z_min, wrist[0]], max: [r, r, spec.z_max, wrist[1]] }
    }

    pub fn contains(&self, v: [f64; 4]) -> bool {
        (0..4).all(|i| self.min[i] <= v[i] && v[i] <= self.max[i])
    }

    pub fn header(&self) -> String {
        let n = |v: f64| format!("{}", v);
        HEADER_TEMPLATE
            .trim_end()
            .replace("{max_x}", &n(self.max[0]))
            .replace("{max_y}", &n(self.max[1]))
            .replace("{max_z}", &n(self.max[2]))
            .replace("{min_x}", &n(self.min[0]))
            .replace("{min_y}", &n(self.min[1]))
            .replace("{min_z}", &n(self.min[2]))
            .replace("{max_r}", &n(self.max[3]))
            .replace("{min_r}", &n(self.min[3]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Negative {
    pub raw_text: String,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerContext {
    pub limits_header: String,
    pub examples: Vec<ContextExample>,
    pub atomic_action: String,
    pub scene_text: String,
    pub robot_state_text: String,
    pub negatives: VecDeque<Negative>,
    pub negative_cap: usize,
}

impl ControllerContext {
    pub fn new(limits_header: String, examples: Vec<ContextExample>) -> Self {
        Self {
            limits_header,
            examples,
            atomic_action: String::new(),
            scene_text: String::new(),
            robot_state_text: String::new(),
            negatives: VecDeque::new(),
            negative_cap: DEFAULT_NEGATIVE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("only rejected verdicts can be recycled")]
pub struct RecycleError;

/// The prompt text: header, examples, rejected outputs, scene, robot state,
/// then the action.
pub fn assemble_context(ctx: &ControllerContext) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(ctx.examples.len() + ctx.negatives.len() + 4);
    parts.push(ctx.limits_header.clone());
    parts.extend(ctx.examples.iter().map(|e| e.text.clone()));
    parts.extend(ctx.negatives.iter().map(|n| format!("REJECTED: {} ({})", one_line(&n.raw_text), n.reason)));
    if !ctx.scene_text.is_empty() {
        parts.push(ctx.scene_text.clone());
    }
    parts.push(ctx.robot_state_text.clone());
    parts.push(format!("Atomic action: {}", ctx.atomic_action));
    parts.join("\n\n")
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Appends a rejected output to the negatives, evicting the oldest past the cap.
pub fn recycle(verdict: &FilterVerdict, ctx: &ControllerContext) -> Result<ControllerContext, RecycleError> {
    if verdict.accepted {
        return Err(RecycleError);
    }
    let mut next = ctx.clone();
    next.negatives.push_back(Negative { raw_text: verdict.raw_text.clone(), reason: verdict.reason });
    while next.negatives.len() > next.negative_cap {
        next.negatives.pop_front();
    }
    Ok(next)
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
