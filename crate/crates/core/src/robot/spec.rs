use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobotKind {
    Scara,
    Delta,
}

impl RobotKind {
    pub fn name(self) -> &'static str {
        match self {
            RobotKind::Scara => "scara",
            RobotKind::Delta => "delta",
        }
    }
}

impl std::str::FromStr for RobotKind {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "scara" => Ok(RobotKind::Scara),
            "delta" => Ok(RobotKind::Delta),
            other => Err(SpecError::Invalid(format!("unknown robot kind {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("invalid robot spec: {0}")]
    Invalid(String),
    #[error("cannot read robot spec: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse robot spec: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Kinematic parameters, limits and gripper properties of a simulated arm.
///
/// Config file keys (TOML): `kind`, `workspace_radius`, `edge_radius`,
/// `z_min`, `z_max`, `mount_height`, `link_lengths`, `joint_ranges`,
/// `joint_velocity_limits`, `home`, `gripper_cycle_ticks`, `jaw_limit`,
/// `grasp_tolerance`, `position_tolerance`, `payload`. Missing keys take the
/// defaults of the selected `kind`.
///
/// SCARA joints are `[shoulder deg, elbow deg, z-slide mm, wrist deg]` and
/// `link_lengths` holds the two planar links. DELTA joints are the three
/// upper-arm angles followed by the wrist, and `link_lengths` holds
/// `[base radius, effector radius, upper arm, lower arm]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSpec {
    pub kind: RobotKind,
    /// Reach in the xy-plane. For DELTA this is the working-envelope radius
    /// at mid-height.
    pub workspace_radius: f64,
    /// DELTA working-envelope radius at `z_min` and `z_max`; the envelope
    /// narrows linearly from mid-height. Equal to `workspace_radius` for SCARA.
    pub edge_radius: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Table height of the DELTA base plane. Unused for SCARA.
    pub mount_height: f64,
    pub link_lengths: Vec<f64>,
    pub joint_ranges: Vec<[f64; 2]>,
    /// deg/s for revolute joints, mm/s for the SCARA z-slide.
    pub joint_velocity_limits: Vec<f64>,
    /// Start pose `[x, y, z, rotation]`.
    pub home: [f64; 4],
    pub gripper_cycle_ticks: u32,
    /// Largest object footprint side the jaws accept, mm.
    pub jaw_limit: f64,
    pub grasp_tolerance: f64,
    /// Settling band for "arrived", mm.
    pub position_tolerance: f64,
    pub payload: f64,
}

pub const JOINT_COUNT: usize = 4;

impl RobotSpec {
    pub fn scara() -> Self {
        Self {
            kind: RobotKind::Scara,
            workspace_radius: 400.0,
            edge_radius: 400.0,
            z_min: 0.0,
            z_max: 180.0,
            mount_height: 0.0,
            link_lengths: vec![200.0, 200.0],
            joint_ranges: vec![[-180.0, 180.0], [-180.0, 180.0], [0.0, 180.0], [-360.0, 360.0]],
            joint_velocity_limits: vec![180.0, 180.0, 200.0, 180.0],
            home: [250.0, 0.0, 120.0, 0.0],
            gripper_cycle_ticks: 5,
            jaw_limit: 100.0,
            grasp_tolerance: 10.0,
            position_tolerance: 1.0,
            payload: 3.0,
        }
    }

    pub fn delta() -> Self {
        Self {
            kind: RobotKind::Delta,
            workspace_radius: 260.0,
            edge_radius: 200.0,
            z_min: 0.0,
            z_max: 200.0,
            mount_height: 420.0,
            link_lengths: vec![200.0, 50.0, 200.0, 400.0],
            joint_ranges: vec![[-75.0, 110.0], [-75.0, 110.0], [-75.0, 110.0], [-360.0, 360.0]],
            joint_velocity_limits: vec![120.0, 120.0, 120.0, 120.0],
            home: [0.0, 0.0, 150.0, 0.0],
            gripper_cycle_ticks: 5,
            jaw_limit: 100.0,
            grasp_tolerance: 10.0,
            position_tolerance: 1.0,
            payload: 5.0,
        }
    }

    pub fn for_kind(kind: RobotKind) -> Self {
        match kind {
            RobotKind::Scara => Self::scara(),
            RobotKind::Delta => Self::delta(),
        }
    }

    pub fn z_mid(&self) -> f64 {
        (self.z_min + self.z_max) / 2.0
    }

    /// Radius of the reachable disc at height `z` (zero outside the z band).
    pub fn envelope_radius(&self, z: f64) -> f64 {
        if z < self.z_min || z > self.z_max {
            return 0.0;
        }
        match self.kind {
            RobotKind::Scara => self.workspace_radius,
            RobotKind::Delta => {
                let half = (self.z_max - self.z_min) / 2.0;
                let t = ((z - self.z_mid()).abs() / half).min(1.0);
                self.workspace_radius - (self.workspace_radius - self.edge_radius) * t
            }
        }
    }

    /// Smallest envelope radius over the whole z band.
    pub fn min_envelope_radius(&self) -> f64 {
        self.workspace_radius.min(self.edge_radius)
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        let fail = |m: String| Err(SpecError::Invalid(m));
        if !(self.workspace_radius > 0.0) {
            return fail("workspace_radius must be positive".into());
        }
        if !(self.z_max > self.z_min) {
            return fail("z_max must exceed z_min".into());
        }
        if !(self.edge_radius > 0.0 && self.edge_radius <= self.workspace_radius) {
            return fail("edge_radius must be in (0, workspace_radius]".into());
        }
        if self.joint_ranges.len() != JOINT_COUNT || self.joint_velocity_limits.len() != JOINT_COUNT
        {
            return fail(format!("expected {JOINT_COUNT} joint ranges and velocity limits"));
        }
        if self.joint_ranges.iter().any(|[lo, hi]| !(hi >= lo)) {
            return fail("joint range with max < min".into());
        }
        if self.joint_velocity_limits.iter().any(|v| !(*v > 0.0)) {
            return fail("joint velocity limits must be positive".into());
        }
        match self.kind {
            RobotKind::Scara => {
                if self.link_lengths.len() != 2 {
                    return fail("SCARA needs two link lengths".into());
                }
                let reach = self.link_lengths[0] + self.link_lengths[1];
                if (reach - self.workspace_radius).abs() > 1e-9 {
                    return fail(format!(
                        "SCARA link lengths sum to {reach}, workspace_radius is {}",
                        self.workspace_radius
                    ));
                }
            }
            RobotKind::Delta => {
                if self.link_lengths.len() != 4 || self.link_lengths.iter().any(|l| !(*l > 0.0)) {
                    return fail("DELTA needs four positive link lengths".into());
                }
            }
        }
        Ok(())
    }

    /// Loads a spec from TOML; keys not present fall back to the defaults of
    /// the file's `kind`.
    pub fn from_toml_str(text: &str) -> Result<Self, SpecError> {
        let table: toml::Table = toml::from_str(text)?;
        let kind = match table.get("kind").and_then(|v| v.as_str()) {
            Some(k) => k.parse()?,
            None => return Err(SpecError::Invalid("missing key `kind`".into())),
        };
        let mut merged = toml::Table::try_from(Self::for_kind(kind))
            .map_err(|e| SpecError::Invalid(e.to_string()))?;
        for (k, v) in table {
            if !merged.contains_key(&k) {
                return Err(SpecError::Invalid(format!("unknown key `{k}`")));
            }
            merged.insert(k, v);
        }
        let spec: RobotSpec = merged.try_into()?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, SpecError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}
