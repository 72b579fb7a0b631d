use serde::{Deserialize, Serialize};

use crate::controller::{OracleLayout, Region};
use crate::geometry::{Point2, Rect};
use crate::robot::{RobotKind, RobotSpec};
use crate::scene::{CameraModel, CameraMount};

pub const CORNERS: [&str; 4] = ["top left corner", "top right corner", "bottom left corner", "bottom right corner"];
pub const SIDES: [&str; 4] = ["left side", "right side", "top side", "bottom side"];

/// Per-robot table geometry the task generators draw from. "Top" is +y and
/// "left" is -x, as seen by the overhead camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableLayout {
    pub spec: RobotSpec,
    /// Area where objects are placed; reachable at every working height.
    pub work: Rect,
    /// Edge length of the square corner/side regions.
    pub region_size: f64,
    pub block_size: f64,
    pub bowl_radius: f64,
    pub overhead: CameraModel,
    /// Edge length of the wrist camera's square view.
    pub wrist_view: f64,
}

impl TableLayout {
    pub fn for_spec(spec: &RobotSpec) -> Self {
        let (work, region_size, bowl_radius, wrist_view) = match spec.kind {
            RobotKind::Scara => (Rect::new(Point2::new(90.0, -200.0), Point2::new(330.0, 200.0)), 100.0, 45.0, 160.0),
            RobotKind::Delta => (Rect::new(Point2::new(-135.0, -135.0), Point2::new(135.0, 135.0)), 75.0, 40.0, 100.0),
        };
        let view = Rect::new(work.min.offset(-40.0, -40.0), work.max.offset(40.0, 40.0));
        Self { spec: spec.clone(), work, region_size, block_size: 36.0, bowl_radius, overhead: CameraModel::overhead(view, 1.0), wrist_view }
    }

    pub fn region(&self, name: &str) -> Option<Rect> {
        let (w, s) = (self.work, self.region_size);
        let c = w.center();
        let sq = |x: f64, y: f64| Some(Rect::from_center(Point2::new(x, y), s / 2.0, s / 2.0));
        let (left, right, bottom, top) = (w.min.x + s / 2.0, w.max.x - s / 2.0, w.min.y + s / 2.0, w.max.y - s / 2.0);
        match name {
            "top left corner" => sq(left, top),
            "top right corner" => sq(right, top),
            "bottom left corner" => sq(left, bottom),
            "bottom right corner" => sq(right, bottom),
            "left side" => sq(left, c.y),
            "right side" => sq(right, c.y),
            "top side" => sq(c.x, top),
            "bottom side" => sq(c.x, bottom),
            _ => None,
        }
    }

    pub fn regions(&self) -> Vec<Region> {
        CORNERS
            .iter()
            .chain(SIDES.iter())
            .map(|n| Region { name: n.to_string(), rect: self.region(n).expect("known region") })
            .collect()
    }

    /// Wrist camera with the configured view size, centered on the home pose.
    pub fn wrist_camera(&self) -> CameraModel {
        let h = self.wrist_view / 2.0;
        let home = Point2::new(self.spec.home[0], self.spec.home[1]);
        let mut cam = CameraModel::overhead(Rect::from_center(home, h, h), 1.0);
        cam.mount = CameraMount::Wrist;
        cam
    }

    /// Serpentine over the work area with rows `0.75 * view` apart.
    pub fn scan_path(&self, view: f64) -> Vec<Point2> {
        let w = self.work;
        let (x0, x1) = (w.min.x + view / 2.0, w.max.x - view / 2.0);
        let (y0, y1) = (w.min.y + view / 2.0, w.max.y - view / 2.0);
        let rows = (((y1 - y0) / (0.75 * view)).ceil() as usize).max(1) + 1;
        let mut out = Vec::with_capacity(2 * rows);
        for r in 0..rows {
            let y = y0 + (y1 - y0) * r as f64 / (rows - 1) as f64;
            if r % 2 == 0 {
                out.extend([Point2::new(x0, y), Point2::new(x1, y)]);
            } else {
                out.extend([Point2::new(x1, y), Point2::new(x0, y)]);
            }
        }
        out
    }

    pub fn oracle_layout(&self, scan_view: f64) -> OracleLayout {
        OracleLayout::for_spec(&self.spec, self.regions(), self.scan_path(scan_view))
    }
}
