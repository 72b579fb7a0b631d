use std::collections::VecDeque;

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use super::perception::SceneSnapshot;
use crate::geometry::Point2;

pub const TRACKLET_LEN: usize = 4;

/// Per-object track over the current and three preceding snapshots,
/// oldest first, in robot millimeters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracklet {
    pub track_id: u32,
    pub label: String,
    /// Detection most recently associated with this track.
    pub object_id: u32,
    pub points: Vec<Point2>,
    /// True when this snapshot had no detection and the last point was held.
    pub coasted: bool,
}

impl Tracklet {
    /// Displacement from the oldest to the newest point.
    pub fn displacement(&self) -> Point2 {
        let (a, b) = (self.points[0], self.points[TRACKLET_LEN - 1]);
        Point2::new(b.x - a.x, b.y - a.y)
    }
}

#[derive(Debug, Clone)]
struct Track {
    id: u32,
    name: String,
    label: String,
    object_id: u32,
    points: VecDeque<Point2>,
    missed: u32,
}

impl Track {
    fn push(&mut self, p: Point2) {
        if self.points.len() == TRACKLET_LEN {
            self.points.pop_front();
        }
        self.points.push_back(p);
    }

    fn tracklet(&self, coasted: bool) -> Tracklet {
        let mut points: Vec<Point2> = self.points.iter().copied().collect();
        while points.len() < TRACKLET_LEN {
            points.insert(0, points[0]);
        }
        Tracklet { track_id: self.id, label: self.label.clone(), object_id: self.object_id, points, coasted }
    }
}

/// Gated optimal-assignment tracker over detection centroids. Only
/// detections with the same color and label can continue a track; a track
/// survives one missed snapshot when coasting is enabled.
#[derive(Debug, Clone)]
pub struct Tracker {
    gate: f64,
    coasting: bool,
    tracks: Vec<Track>,
    next_id: u32,
}

const GATED_OUT: i64 = 1_000_000_000_000;
const MICRONS: f64 = 1_000.0;

impl Tracker {
    pub fn new(gate: f64, coasting: bool) -> Self {
        Self { gate, coasting, tracks: Vec::new(), next_id: 1 }
    }

    pub fn update(&mut self, snapshot: &SceneSnapshot) -> Vec<Tracklet> {
        let dets: Vec<(String, String, u32, Point2)> = snapshot
            .detections
            .iter()
            .map(|d| (d.display_name(), d.label.clone(), d.object_id, snapshot.detection_centroid(d)))
            .collect();
        let pairs = self.assign(&dets);

        let mut det_used = vec![false; dets.len()];
        let mut track_hit = vec![false; self.tracks.len()];
        for (ti, di) in pairs {
            let track = &mut self.tracks[ti];
            track.push(dets[di].3);
            track.object_id = dets[di].2;
            track.missed = 0;
            det_used[di] = true;
            track_hit[ti] = true;
        }

        let mut out = Vec::new();
        let mut kept = Vec::with_capacity(self.tracks.len());
        for (track, hit) in self.tracks.drain(..).zip(track_hit) {
            if hit {
                out.push(track.tracklet(false));
                kept.push(track);
            } else if self.coasting && track.missed == 0 {
                let mut t = track;
                t.missed = 1;
                let last = *t.points.back().expect("tracks are never empty");
                t.push(last);
                out.push(t.tracklet(true));
                kept.push(t);
            }
        }
        self.tracks = kept;

        for (di, (name, label, object_id, p)) in dets.into_iter().enumerate() {
            if det_used[di] {
                continue;
            }
            let track = Track {
                id: self.next_id,
                name,
                label,
                object_id,
                points: VecDeque::from([p]),
                missed: 0,
            };
            self.next_id += 1;
            out.push(track.tracklet(false));
            self.tracks.push(track);
        }
        out.sort_by_key(|t| t.track_id);
        out
    }

    /// Minimum-total-distance matching of tracks to detections under the gate.
    fn assign(&self, dets: &[(String, String, u32, Point2)]) -> Vec<(usize, usize)> {
        let (nt, nd) = (self.tracks.len(), dets.len());
        if nt == 0 || nd == 0 {
            return Vec::new();
        }
        let cost = |ti: usize, di: usize| -> Option<f64> {
            let t = &self.tracks[ti];
            let d = t.points.back().expect("tracks are never empty").distance(dets[di].3);
            (t.name == dets[di].0 && d <= self.gate).then_some(d)
        };
        let weight = |ti: usize, di: usize| -> i64 {
            match cost(ti, di) {
                Some(d) => -((d * MICRONS).round() as i64),
                None => -GATED_OUT,
            }
        };
        // The solver needs rows <= columns.
        let transpose = nt > nd;
        let (rows, cols) = if transpose { (nd, nt) } else { (nt, nd) };
        let m = Matrix::from_fn(rows, cols, |(r, c)| if transpose { weight(c, r) } else { weight(r, c) });
        let (_, assignment) = kuhn_munkres(&m);
        assignment
            .into_iter()
            .enumerate()
            .map(|(r, c)| if transpose { (c, r) } else { (r, c) })
            .filter(|&(ti, di)| cost(ti, di).is_some())
            .collect()
    }
}

/// Runs a fresh tracker over `history` (oldest first) and returns the
/// tracklets for the newest snapshot.
pub fn track(history: &[SceneSnapshot], gate: f64) -> Vec<Tracklet> {
    let mut tracker = Tracker::new(gate, true);
    let mut last = Vec::new();
    for s in history {
        last = tracker.update(s);
    }
    last
}
