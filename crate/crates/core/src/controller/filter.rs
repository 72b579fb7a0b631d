//! Gate between controller replies and the robot: structure, hardware
//! limits, then appropriateness against the previous accepted frame.

use serde::{Deserialize, Serialize};

use super::context::WorkspaceLimits;
use crate::frame::{parse_controller_text, CommandFrame, ControllerOutput, ParseMode};
use crate::robot::{is_reachable, RobotSpec};

pub const DEFAULT_MAX_DELTA: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    None,
    MalformedStructure,
    HardwareLimit,
    ExcessiveDelta,
}

impl RejectReason {
    pub fn name(self) -> &'static str {
        match self {
            RejectReason::None => "none",
            RejectReason::MalformedStructure => "malformed_structure",
            RejectReason::HardwareLimit => "hardware_limit",
            RejectReason::ExcessiveDelta => "excessive_delta",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub limits: WorkspaceLimits,
    /// Largest per-axis step from the previous accepted frame, mm.
    pub max_delta: f64,
    pub max_grip_toggles: u32,
    pub parse_mode: ParseMode,
}

impl FilterConfig {
    pub fn for_spec(spec: &RobotSpec) -> Self {
        Self {
            limits: WorkspaceLimits::from_spec(spec),
            max_delta: DEFAULT_MAX_DELTA,
            max_grip_toggles: 1,
            parse_mode: ParseMode::Permissive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub reason: RejectReason,
    /// The checked frame; `None` for unparseable replies and pure halts.
    pub frame: Option<CommandFrame>,
    pub halt: bool,
    pub raw_text: String,
    pub detail: String,
}

impl FilterVerdict {
    fn reject(raw: &str, reason: RejectReason, frame: Option<CommandFrame>, detail: String) -> Self {
        Self { accepted: false, reason, frame, halt: false, raw_text: raw.to_string(), detail }
    }
}

/// At least one well-formed frame, or a bare halting signal.
pub fn check_structure(output: &ControllerOutput) -> bool {
    output.is_pure_halt() || (!output.frames.is_empty() && output.frames.iter().all(CommandFrame::is_well_formed))
}

pub fn check_hardware_constraints(frame: &CommandFrame, limits: &WorkspaceLimits, spec: &RobotSpec) -> bool {
    limits.contains([frame.x, frame.y, frame.z, frame.rotation]) && is_reachable(spec, frame.position())
}

pub fn check_task_appropriateness(
    frame: &CommandFrame,
    previous: Option<&CommandFrame>,
    max_delta: f64,
    max_grip_toggles: u32,
) -> bool {
    let Some(prev) = previous else { return true };
    let small = (frame.x - prev.x).abs() <= max_delta
        && (frame.y - prev.y).abs() <= max_delta
        && (frame.z - prev.z).abs() <= max_delta;
    let toggles = u32::from(frame.grip_a != prev.grip_a) + u32::from(frame.grip_b != prev.grip_b);
    small && toggles <= max_grip_toggles
}

/// Parses `raw` and runs the three checks on its first frame. The first
/// failing check names the reason.
pub fn pre_execution_filter(
    raw: &str,
    spec: &RobotSpec,
    previous: Option<&CommandFrame>,
    config: &FilterConfig,
) -> FilterVerdict {
    let output = match parse_controller_text(raw, config.parse_mode) {
        Ok(o) => o,
        Err(e) => return FilterVerdict::reject(raw, RejectReason::MalformedStructure, None, e.to_string()),
    };
    filter_output(&output, spec, previous, config)
}

pub fn filter_output(
    output: &ControllerOutput,
    spec: &RobotSpec,
    previous: Option<&CommandFrame>,
    config: &FilterConfig,
) -> FilterVerdict {
    let raw = output.raw_text.as_str();
    if !check_structure(output) {
        let frame = output.frames.iter().find(|f| !f.is_well_formed()).copied();
        return FilterVerdict::reject(raw, RejectReason::MalformedStructure, frame, "invalid field values".into());
    }
    let Some(frame) = output.first_frame().copied() else {
        return FilterVerdict {
            accepted: true,
            reason: RejectReason::None,
            frame: None,
            halt: true,
            raw_text: raw.to_string(),
            detail: String::new(),
        };
    };
    if !check_hardware_constraints(&frame, &config.limits, spec) {
        let detail = format!("({}, {}, {}) rotation {} is outside the workspace", frame.x, frame.y, frame.z, frame.rotation);
        return FilterVerdict::reject(raw, RejectReason::HardwareLimit, Some(frame), detail);
    }
    if !check_task_appropriateness(&frame, previous, config.max_delta, config.max_grip_toggles) {
        let detail = format!("step exceeds {} mm or toggles the gripper twice", config.max_delta);
        return FilterVerdict::reject(raw, RejectReason::ExcessiveDelta, Some(frame), detail);
    }
    FilterVerdict {
        accepted: true,
        reason: RejectReason::None,
        frame: Some(frame),
        halt: output.halt,
        raw_text: raw.to_string(),
        detail: String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scara() -> (RobotSpec, FilterConfig) {
        let s = RobotSpec::scara();
        let c = FilterConfig::for_spec(&s);
        (s, c)
    }

    fn verdict(raw: &str, prev: Option<&CommandFrame>) -> FilterVerdict {
        let (s, c) = scara();
        pre_execution_filter(raw, &s, prev, &c)
    }

    #[test]
    fn structure_examples() {
        let ok = parse_controller_text("Execution Step:\n[1, 86, 60, 110, 0, 0, 0]", ParseMode::Strict).unwrap();
        assert!(check_structure(&ok));
        let bad_grip = parse_controller_text("[1, 86, 60, 110, 0, 2, 0]", ParseMode::Strict).unwrap();
        assert!(!check_structure(&bad_grip));
        let halt = parse_controller_text("[1]", ParseMode::Strict).unwrap();
        assert!(check_structure(&halt));
    }

    #[test]
    fn hardware_examples() {
        let (s, c) = scara();
        let f = |x, y, z| CommandFrame::motion(x, y, z, 0.0, false);
        assert!(!check_hardware_constraints(&f(500.0, 0.0, 100.0), &c.limits, &s));
        assert!(check_hardware_constraints(&f(250.0, 250.0, 100.0), &c.limits, &s));
        assert!(!check_hardware_constraints(&f(300.0, 300.0, 100.0), &c.limits, &s));
        assert!(!check_hardware_constraints(&f(250.0, 0.0, -1.0), &c.limits, &s));
    }

    #[test]
    fn appropriateness_examples() {
        let prev = CommandFrame::motion(100.0, 0.0, 100.0, 0.0, false);
        let at = |x| CommandFrame::motion(x, 0.0, 100.0, 0.0, false);
        assert!(check_task_appropriateness(&at(250.0), None, 100.0, 1));
        assert!(!check_task_appropriateness(&at(250.0), Some(&prev), 100.0, 1));
        assert!(check_task_appropriateness(&at(199.0), Some(&prev), 100.0, 1));
        let mut both = at(100.0);
        both.grip_a = 1;
        both.grip_b = 1;
        assert!(!check_task_appropriateness(&both, Some(&prev), 100.0, 1));
    }

    #[test]
    fn verdicts_and_first_failure() {
        let v = verdict("[1, 200, 60, 110, 0, 0, 0]", None);
        assert!(v.accepted && v.reason == RejectReason::None && v.frame.is_some());
        assert_eq!(verdict("[1, 500, 60, 110, 0, 0, 0]", None).reason, RejectReason::HardwareLimit);
        assert_eq!(verdict("no frames here", None).reason, RejectReason::MalformedStructure);
        let far = CommandFrame::motion(250.0, 0.0, 10.0, 0.0, false);
        // Out of limits and too far: hardware is reported first.
        assert_eq!(verdict("[1, 500, 60, 110, 0, 0, 0]", Some(&far)).reason, RejectReason::HardwareLimit);
        assert_eq!(verdict("[1, 100, 60, 110, 0, 0, 0]", Some(&far)).reason, RejectReason::ExcessiveDelta);
        let halt = verdict("[1]", Some(&far));
        assert!(halt.accepted && halt.halt && halt.frame.is_none());
        let with_frame = verdict("[1, 250, 0, 20, 0, 0, 0], [1]", Some(&far));
        assert!(with_frame.accepted && with_frame.halt);
    }
}
