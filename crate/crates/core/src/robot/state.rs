use serde::{Deserialize, Serialize};

use super::kinematics::{forward_kinematics, inverse_kinematics, JointState, Pose};
use super::spec::RobotSpec;
use crate::frame::CommandFrame;
use crate::scene::WorldModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "phase", content = "remaining")]
pub enum GripperState {
    Open,
    Closing(u32),
    Closed,
    Opening(u32),
}

impl GripperState {
    pub fn is_settled(self) -> bool {
        matches!(self, GripperState::Open | GripperState::Closed)
    }

    pub fn name(self) -> &'static str {
        match self {
            GripperState::Open => "open",
            GripperState::Closing(_) => "closing",
            GripperState::Closed => "closed",
            GripperState::Opening(_) => "opening",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub pose: Pose,
    pub joints: JointState,
    pub gripper: GripperState,
    pub holding: Option<u32>,
    pub busy: bool,
}

impl RobotState {
    /// Idle, open-gripper state at `spec.home`.
    pub fn home(spec: &RobotSpec) -> Self {
        let [x, y, z, r] = spec.home;
        let joints = inverse_kinematics(spec, &Pose::new(x, y, z, r))
            .expect("home pose must be reachable");
        Self {
            pose: forward_kinematics(spec, &joints),
            joints,
            gripper: GripperState::Open,
            holding: None,
            busy: false,
        }
    }

    /// Controller-facing state line.
    pub fn describe(&self) -> String {
        let holding = match self.holding {
            Some(id) => format!("object {id}"),
            None => "nothing".to_string(),
        };
        format!(
            "Robot state: position ({:.0}, {:.0}, {:.0}), rotation {:.0}, gripper {}, holding {}, {}",
            self.pose.x,
            self.pose.y,
            self.pose.z,
            self.pose.rotation,
            self.gripper.name(),
            holding,
            if self.busy { "moving" } else { "idle" }
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: RobotState,
    pub arrived: bool,
    /// The jaws finished closing this tick; the caller resolves the grasp.
    pub close_completed: bool,
    /// Object let go when the jaws started opening this tick.
    pub released: Option<u32>,
}

const ROTATION_TOLERANCE_DEG: f64 = 1.0;

/// Advances the arm one tick toward `target`.
pub fn step(state: &RobotState, spec: &RobotSpec, target: &CommandFrame, dt: f64) -> StepOutcome {
    let mut next = state.clone();
    let mut released = None;
    let mut close_completed = false;

    let want_closed = target.closes_gripper();
    match (want_closed, next.gripper) {
        (true, GripperState::Open | GripperState::Opening(_)) => {
            next.gripper = GripperState::Closing(spec.gripper_cycle_ticks);
        }
        (false, GripperState::Closed | GripperState::Closing(_)) => {
            released = next.holding.take();
            next.gripper = GripperState::Opening(spec.gripper_cycle_ticks);
        }
        _ => {}
    }
    next.gripper = match next.gripper {
        GripperState::Closing(n) if n <= 1 => {
            close_completed = true;
            GripperState::Closed
        }
        GripperState::Closing(n) => GripperState::Closing(n - 1),
        GripperState::Opening(n) if n <= 1 => GripperState::Open,
        GripperState::Opening(n) => GripperState::Opening(n - 1),
        settled => settled,
    };

    let goal = Pose::new(target.x, target.y, target.z, target.rotation);
    if let Ok(q_goal) = inverse_kinematics(spec, &goal) {
        let moved: Vec<f64> = next
            .joints
            .joint_values
            .iter()
            .zip(&q_goal.joint_values)
            .zip(&spec.joint_velocity_limits)
            .map(|((q, g), v)| {
                let max = v * dt;
                q + (g - q).clamp(-max, max)
            })
            .collect();
        next.joints = JointState::new(moved);
        next.pose = forward_kinematics(spec, &next.joints);
    }

    let arrived = next.pose.distance(&goal) <= spec.position_tolerance
        && (next.pose.rotation - goal.rotation).abs() <= ROTATION_TOLERANCE_DEG
        && next.gripper.is_settled();
    next.busy = !arrived;
    StepOutcome { state: next, arrived, close_completed, released }
}

/// Completes a gripper actuation against the world. Closing grasps the
/// best candidate under the end-effector, if any; opening lets go.
pub fn gripper_command(
    state: &RobotState,
    spec: &RobotSpec,
    close: bool,
    world: &WorldModel,
) -> RobotState {
    let mut next = state.clone();
    if close {
        next.gripper = GripperState::Closed;
        if next.holding.is_none() {
            next.holding =
                world.grasp_candidate(next.pose.position(), spec.grasp_tolerance, spec.jaw_limit);
        }
    } else {
        next.gripper = GripperState::Open;
        next.holding = None;
    }
    next
}
