use std::collections::BTreeSet;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::camera::{project_to_robot, unproject_to_image, CameraModel};
use super::tracker::{Tracker, Tracklet};
use super::world::{Color, Shape, WorldModel, WorldObject};
use crate::geometry::{simplify_polygon, Point2, Rect};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Ground-truth source, kept for offline verification.
    pub object_id: u32,
    pub label: String,
    pub color: Color,
    /// Image pixels, bottom-left origin.
    pub bbox: Rect,
    /// Positional jitter applied to this object, mm.
    #[serde(skip)]
    pub jitter: [f64; 2],
}

impl Detection {
    pub fn display_name(&self) -> String {
        format!("{} {}", self.color.name(), self.label)
    }

    pub fn corners(&self) -> [Point2; 4] {
        self.bbox.corners()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentedPolygon {
    pub object_id: u32,
    pub label: String,
    /// Image pixels; every vertex lies inside the detection bbox.
    pub vertices: Vec<Point2>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSnapshot {
    pub tick: u64,
    /// Camera as placed for this snapshot.
    pub camera: CameraModel,
    pub detections: Vec<Detection>,
    pub polygons: Vec<SegmentedPolygon>,
    pub tracklets: Vec<Tracklet>,
    pub visible_ids: BTreeSet<u32>,
}

impl SceneSnapshot {
    pub fn detection_centroid(&self, d: &Detection) -> Point2 {
        project_to_robot(d.bbox.center(), &self.camera)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerceptionConfig {
    pub max_vertices: usize,
    /// Association gate between consecutive snapshots, mm.
    pub gate_mm: f64,
    /// Run segmentation; when off, scene text falls back to bbox corners.
    pub segmentation: bool,
    /// Run the tracker; when off no tracklets are produced.
    pub tracking: bool,
}

impl Default for PerceptionConfig {
    fn default() -> Self {
        Self { max_vertices: 4, gate_mm: 50.0, segmentation: true, tracking: true }
    }
}

/// Axis-aligned boxes for every object overlapping the view that survives
/// dropout, jittered by `noise_sigma` and clipped to the image.
pub fn render_detections(world: &WorldModel, camera: &CameraModel, rng: &mut impl Rng) -> Vec<Detection> {
    let fov = camera.fov_rect;
    let noise = (camera.noise_sigma > 0.0).then(|| Normal::new(0.0, camera.noise_sigma).expect("finite sigma"));
    let mut out = Vec::new();
    for o in &world.objects {
        let footprint = o.footprint_bbox();
        if !footprint.intersects(&fov) {
            continue;
        }
        let dropped = rng.random::<f64>() < camera.dropout_prob;
        let jitter = match &noise {
            Some(n) => [n.sample(rng), n.sample(rng)],
            None => [0.0, 0.0],
        };
        if dropped {
            continue;
        }
        let shifted = Rect::new(footprint.min.offset(jitter[0], jitter[1]), footprint.max.offset(jitter[0], jitter[1]));
        let Some(visible) = shifted.clip(&fov) else { continue };
        let bbox = Rect::new(unproject_to_image(visible.min, camera), unproject_to_image(visible.max, camera));
        out.push(Detection { object_id: o.id, label: o.label.clone(), color: o.color, bbox, jitter });
    }
    out
}

/// Silhouette reduced to at most `max_vertices` points, in image pixels,
/// clamped into the detection box. Circles become the inscribed regular
/// polygon (a square for four vertices).
pub fn segment(detection: &Detection, object: &WorldObject, camera: &CameraModel, max_vertices: usize) -> Vec<Point2> {
    let c = object.center();
    let outline: Vec<Point2> = match &object.shape {
        Shape::Circle { radius } => {
            let n = max_vertices.max(3);
            (0..n)
                .map(|k| {
                    let a = std::f64::consts::TAU * k as f64 / n as f64;
                    c.offset(radius * a.cos(), radius * a.sin())
                })
                .collect()
        }
        Shape::Rectangle { .. } => {
            let corners = object.footprint_bbox().corners().to_vec();
            simplify_polygon(&corners, max_vertices)
        }
        Shape::Polygon { vertices } => {
            let abs: Vec<Point2> = vertices.iter().map(|v| v.offset(c.x, c.y)).collect();
            simplify_polygon(&abs, max_vertices)
        }
    };
    let mut px: Vec<Point2> = outline
        .into_iter()
        .map(|p| detection.bbox.clamp(unproject_to_image(p.offset(detection.jitter[0], detection.jitter[1]), camera)))
        .collect();
    while px.len() < 4 {
        let last = *px.last().expect("outline has vertices");
        px.push(last);
    }
    px
}

/// Stateful perception pipeline: detect, segment, track.
#[derive(Debug, Clone)]
pub struct Perception {
    pub camera: CameraModel,
    pub config: PerceptionConfig,
    tracker: Tracker,
}

impl Perception {
    pub fn new(camera: CameraModel, config: PerceptionConfig) -> Self {
        let tracker = Tracker::new(config.gate_mm, true);
        Self { camera, config, tracker }
    }

    pub fn observe(&mut self, world: &WorldModel, tick: u64, ee: [f64; 3], rng: &mut impl Rng) -> SceneSnapshot {
        let camera = self.camera.placed_at(ee);
        let detections = render_detections(world, &camera, rng);
        let polygons = if self.config.segmentation {
            detections
                .iter()
                .filter_map(|d| {
                    let o = world.object(d.object_id)?;
                    Some(SegmentedPolygon {
                        object_id: d.object_id,
                        label: d.label.clone(),
                        vertices: segment(d, o, &camera, self.config.max_vertices),
                    })
                })
                .collect()
        } else {
            Vec::new()
        };
        let mut snapshot = SceneSnapshot {
            tick,
            visible_ids: detections.iter().map(|d| d.object_id).collect(),
            camera,
            detections,
            polygons,
            tracklets: Vec::new(),
        };
        if self.config.tracking {
            snapshot.tracklets = self.tracker.update(&snapshot);
        }
        snapshot
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::signed_area;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cam() -> CameraModel {
        CameraModel::overhead(Rect::new(Point2::new(0.0, -200.0), Point2::new(400.0, 200.0)), 2.0)
    }

    fn world() -> WorldModel {
        WorldModel::new(vec![
            WorldObject::new(1, "block", Color::Red, Shape::Rectangle { width: 40.0, depth: 40.0 }, 40.0, [200.0, 0.0, 0.0]),
            WorldObject::new(2, "ball", Color::Blue, Shape::Circle { radius: 25.0 }, 50.0, [100.0, 100.0, 0.0]),
            WorldObject::new(3, "bucket", Color::Gray, Shape::Circle { radius: 60.0 }, 80.0, [-300.0, 0.0, 0.0]),
        ])
        .unwrap()
    }

    #[test]
    fn exact_box_without_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = cam();
        let dets = render_detections(&world(), &c, &mut rng);
        assert_eq!(dets.iter().map(|d| d.object_id).collect::<Vec<_>>(), vec![1, 2]);
        let b = dets[0].bbox;
        assert_eq!((b.width(), b.height()), (80.0, 80.0));
        assert_eq!(project_to_robot(b.center(), &c), Point2::new(200.0, 0.0));
    }

    #[test]
    fn circle_segments_to_inscribed_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = cam();
        let w = world();
        let dets = render_detections(&w, &c, &mut rng);
        let poly = segment(&dets[1], w.object(2).unwrap(), &c, 4);
        assert_eq!(poly.len(), 4);
        // Inscribed square of a radius-25 disc has area 2r², here in px (2 px/mm).
        assert!((signed_area(&poly) - 2.0 * 50.0 * 50.0).abs() < 1e-9);
        assert!(poly.iter().all(|p| dets[1].bbox.contains(*p)));
    }

    #[test]
    fn dropout_rate_is_close_to_configured() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = cam().with_noise(0.0, 0.5);
        let single = WorldModel::new(vec![world().objects[0].clone()]).unwrap();
        let seen: usize = (0..10_000).map(|_| render_detections(&single, &c, &mut rng).len()).sum();
        let rate = 1.0 - seen as f64 / 10_000.0;
        assert!((rate - 0.5).abs() < 0.02, "{rate}");
    }

    #[test]
    fn noisy_polygons_stay_in_their_boxes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = Perception::new(cam().with_noise(8.0, 0.1), PerceptionConfig::default());
        let w = world();
        for t in 0..200 {
            let s = p.observe(&w, t, [0.0; 3], &mut rng);
            for poly in &s.polygons {
                let d = s.detections.iter().find(|d| d.object_id == poly.object_id).unwrap();
                assert!(poly.vertices.iter().all(|v| d.bbox.contains(*v)));
            }
            assert!(s.tracklets.iter().all(|t| t.points.len() == 4));
        }
    }
}
