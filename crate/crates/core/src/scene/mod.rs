//! Tabletop world simulation and the simulated perception pipeline.

mod camera;
mod perception;
mod scenario;
mod text;
mod tracker;
mod world;

pub use camera::{project_to_robot, unproject_to_image, CameraError, CameraModel, CameraMount};
pub use perception::{
    render_detections, segment, Detection, Perception, PerceptionConfig, SceneSnapshot,
    SegmentedPolygon,
};
pub use scenario::{Scenario, ScenarioError};
pub use text::{filter_admits, parse_scene_line, scene_to_text};
pub use tracker::{track, Tracker, Tracklet, TRACKLET_LEN};
pub use world::{
    advance_world, path_length, point_along, Color, Disturbance, Motion, Role, Shape, WorldError,
    WorldModel, WorldObject, Zone,
};
