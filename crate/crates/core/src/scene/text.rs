use std::collections::BTreeSet;
use std::fmt::Write;

use super::camera::project_to_robot;
use super::perception::{Detection, SceneSnapshot};
use crate::geometry::Point2;

/// True when the detection's label (`"block"`) or color-qualified name
/// (`"red block"`) is in the filter. `None` admits everything.
pub fn filter_admits(filter: Option<&BTreeSet<String>>, d: &Detection) -> bool {
    match filter {
        None => true,
        Some(f) => f.contains(&d.label.to_lowercase()) || f.contains(&d.display_name().to_lowercase()),
    }
}

fn round_mm(v: f64) -> i64 {
    v.round() as i64
}

fn format_point(p: Point2) -> String {
    format!("({}, {})", round_mm(p.x), round_mm(p.y))
}

fn format_points(points: &[Point2]) -> String {
    let parts: Vec<String> = points.iter().map(|p| format_point(*p)).collect();
    format!("[{}]", parts.join(", "))
}

/// One `Input:` line per visible object in ascending id order, using the
/// segmentation polygon (bbox corners when segmentation is off) in robot
/// millimeters. Objects whose tracklet moved at least 1 mm get a following
/// `Motion:` line.
pub fn scene_to_text(snapshot: &SceneSnapshot, filter: Option<&BTreeSet<String>>) -> String {
    let mut dets: Vec<&Detection> = snapshot.detections.iter().filter(|d| filter_admits(filter, d)).collect();
    dets.sort_by_key(|d| d.object_id);
    let mut out = String::new();
    for d in dets {
        let px: Vec<Point2> = match snapshot.polygons.iter().find(|p| p.object_id == d.object_id) {
            Some(poly) => poly.vertices.clone(),
            None => d.corners().to_vec(),
        };
        let robot: Vec<Point2> = px.iter().map(|p| project_to_robot(*p, &snapshot.camera)).collect();
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = write!(out, "Input: {} at {}", d.display_name(), format_points(&robot));
        if let Some(t) = snapshot.tracklets.iter().find(|t| t.object_id == d.object_id && !t.coasted) {
            if t.displacement().norm() >= 1.0 {
                let _ = write!(
                    out,
                    "\nMotion: {} from {} to {}",
                    d.display_name(),
                    format_point(t.points[0]),
                    format_point(t.points[3])
                );
            }
        }
    }
    out
}

/// Parses an `Input:` line back into (name, rounded points).
pub fn parse_scene_line(line: &str) -> Option<(String, Vec<(i64, i64)>)> {
    let rest = line.strip_prefix("Input: ")?;
    let at = rest.rfind(" at [")?;
    let name = rest[..at].to_string();
    let list = rest[at + 5..].strip_suffix(']')?;
    let mut points = Vec::new();
    for chunk in list.split("), (") {
        let chunk = chunk.trim_matches(|c| c == '(' || c == ')');
        let (x, y) = chunk.split_once(", ")?;
        points.push((x.parse().ok()?, y.parse().ok()?));
    }
    Some((name, points))
}
