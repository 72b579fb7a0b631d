//! Static top-down SVG of an episode: the end-effector path and each
//! object's path, drawn in robot millimeters with +y up.

use std::collections::BTreeMap;
use std::fmt::Write;

use super::trace::{EpisodeTrace, Event};

const PALETTE: [&str; 8] = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const MARGIN: f64 = 20.0;

fn polyline(points: &[[f64; 2]], class: &str, id: Option<u32>, color: &str, width: f64) -> String {
    let coords: Vec<String> = points.iter().map(|p| format!("{:.1},{:.1}", p[0], -p[1])).collect();
    let id_attr = id.map(|i| format!(" data-object=\"{i}\"")).unwrap_or_default();
    format!(
        "  <polyline class=\"{class}\"{id_attr} fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\" points=\"{}\"/>\n",
        coords.join(" ")
    )
}

/// Renders the trace; `None` when it holds no robot state at all.
pub fn trajectory_svg(trace: &EpisodeTrace) -> Option<String> {
    let ee: Vec<[f64; 2]> = trace.robot_states().map(|(_, s)| [s.pose.x, s.pose.y]).collect();
    if ee.is_empty() {
        return None;
    }
    let mut objects: BTreeMap<u32, Vec<[f64; 2]>> = BTreeMap::new();
    for e in &trace.events {
        if let Event::WorldStateHash { poses: Some(poses), .. } = &e.event {
            for (id, p) in poses {
                let path = objects.entry(*id).or_default();
                if path.last() != Some(&[p[0], p[1]]) {
                    path.push([p[0], p[1]]);
                }
            }
        }
    }
    let radius = trace.header().map_or(0.0, |(spec, _)| spec.workspace_radius);
    let all = ee.iter().chain(objects.values().flatten());
    let (mut x0, mut x1, mut y0, mut y1) = (-radius, radius, -radius, radius);
    for p in all {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let (w, h) = (x1 - x0 + 2.0 * MARGIN, y1 - y0 + 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.1} {:.1} {w:.1} {h:.1}\" width=\"{:.0}\" height=\"{:.0}\">",
        x0 - MARGIN,
        -y1 - MARGIN,
        w.max(1.0),
        h.max(1.0)
    );
    let _ = writeln!(svg, "  <rect x=\"{:.1}\" y=\"{:.1}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"white\"/>", x0 - MARGIN, -y1 - MARGIN);
    if radius > 0.0 {
        let _ = writeln!(svg, "  <circle class=\"envelope\" cx=\"0\" cy=\"0\" r=\"{radius}\" fill=\"none\" stroke=\"#cccccc\" stroke-dasharray=\"6 4\"/>");
    }
    for (k, (id, path)) in objects.iter().enumerate() {
        svg.push_str(&polyline(path, "object", Some(*id), PALETTE[k % PALETTE.len()], 2.0));
    }
    svg.push_str(&polyline(&ee, "end-effector", None, "#000000", 1.0));
    let start = ee[0];
    let _ = writeln!(svg, "  <circle class=\"start\" cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"#000000\"/>", start[0], -start[1]);
    svg.push_str("</svg>\n");
    Some(svg)
}
