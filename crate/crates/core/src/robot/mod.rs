//! Simulated SCARA and DELTA arms.

mod kinematics;
mod spec;
mod state;

pub use kinematics::{
    forward_kinematics, inverse_kinematics, is_reachable, JointState, KinematicsError, Pose,
};
pub use spec::{RobotKind, RobotSpec, SpecError, JOINT_COUNT};
pub use state::{gripper_command, step, GripperState, RobotState, StepOutcome};
