use std::path::Path;

use serde::{Deserialize, Serialize};

use super::camera::CameraModel;
use super::world::WorldModel;

/// A world plus the camera observing it, loadable from TOML.
///
/// Keys: `seed`, `camera` (`displacement`, `fov_rect`, `resolution`,
/// `dropout_prob`, `noise_sigma`, `mount`), `world.objects` (`id`, `label`,
/// `color`, `shape`, `height`, `pose`, `motion`, `role`), `world.zones`,
/// `world.disturbances`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    pub camera: CameraModel,
    pub world: WorldModel,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read scenario: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    World(#[from] super::world::WorldError),
    #[error(transparent)]
    Camera(#[from] super::camera::CameraError),
}

impl Scenario {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let mut s: Scenario = toml::from_str(text)?;
        s.world.objects.sort_by_key(|o| o.id);
        s.world.validate()?;
        s.camera.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}
