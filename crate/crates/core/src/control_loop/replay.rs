use std::fmt;

use serde::{Deserialize, Serialize};

use super::trace::{CorruptTrace, EpisodeTrace, Event};
use crate::controller::{check_hardware_constraints, check_task_appropriateness, FilterVerdict};
use crate::robot::forward_kinematics;
use crate::scene::TRACKLET_LEN;

const POSE_TOLERANCE_MM: f64 = 1e-6;
const FOV_TOLERANCE_MM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    EventOrder,
    DispatchWithoutAcceptance,
    FilterSoundness,
    TrackletLength,
    FovSoundness,
    PoseConsistency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub tick: u64,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReplayReport {
    pub events: usize,
    pub frames_checked: usize,
    pub snapshots_checked: usize,
    pub states_checked: usize,
    pub violations: Vec<Violation>,
}

impl ReplayReport {
    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }
}

impl fmt::Display for ReplayReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} events, {} frames, {} snapshots, {} robot states checked",
            self.events, self.frames_checked, self.snapshots_checked, self.states_checked
        )?;
        for v in &self.violations {
            writeln!(f, "tick {}: {:?}: {}", v.tick, v.kind, v.detail)?;
        }
        write!(f, "{} violations", self.violations.len())
    }
}

/// Re-checks a recorded episode offline: event order, dispatch only after
/// acceptance, every dispatched frame against the filter predicates,
/// tracklet lengths, detections inside the view, and pose/joint agreement.
pub fn replay(trace: &EpisodeTrace) -> Result<ReplayReport, CorruptTrace> {
    let (spec, filter) = trace.header().ok_or(CorruptTrace::MissingHeader)?;
    match trace.events.last().map(|e| &e.event) {
        Some(Event::EpisodeEnd { .. }) => {}
        _ => return Err(CorruptTrace::MissingEnd),
    }
    let mut report = ReplayReport { events: trace.events.len(), ..Default::default() };
    let push = |r: &mut ReplayReport, tick, kind, detail: String| r.violations.push(Violation { tick, kind, detail });

    let mut last_key: Option<(u64, u32)> = None;
    let mut last_verdict: Option<(u64, &FilterVerdict, Option<crate::frame::CommandFrame>)> = None;
    for e in &trace.events {
        let key = (e.tick, e.seq);
        if last_key.is_some_and(|k| k >= key) {
            push(&mut report, e.tick, ViolationKind::EventOrder, format!("event ({}, {}) out of order", e.tick, e.seq));
        }
        last_key = Some(key);
        match &e.event {
            Event::Verdict { verdict, previous } => last_verdict = Some((e.tick, verdict, *previous)),
            Event::FrameDispatched { frame } => {
                report.frames_checked += 1;
                let previous = match last_verdict {
                    Some((tick, v, previous)) if tick == e.tick && v.accepted => previous,
                    _ => {
                        push(&mut report, e.tick, ViolationKind::DispatchWithoutAcceptance, format!("{frame}"));
                        None
                    }
                };
                let why = if !frame.is_well_formed() {
                    Some("malformed")
                } else if !check_hardware_constraints(frame, &filter.limits, spec) {
                    Some("outside hardware limits")
                } else if !check_task_appropriateness(frame, previous.as_ref(), filter.max_delta, filter.max_grip_toggles) {
                    Some("step too large")
                } else {
                    None
                };
                if let Some(why) = why {
                    push(&mut report, e.tick, ViolationKind::FilterSoundness, format!("{frame}: {why}"));
                }
            }
            Event::SnapshotEmitted { snapshot, .. } => {
                report.snapshots_checked += 1;
                for t in &snapshot.tracklets {
                    if t.points.len() != TRACKLET_LEN {
                        push(
                            &mut report,
                            e.tick,
                            ViolationKind::TrackletLength,
                            format!("track {} has {} points", t.track_id, t.points.len()),
                        );
                    }
                }
                for (id, b) in &snapshot.boxes {
                    let f = snapshot.fov;
                    let inside = b.min.x >= f.min.x - FOV_TOLERANCE_MM
                        && b.min.y >= f.min.y - FOV_TOLERANCE_MM
                        && b.max.x <= f.max.x + FOV_TOLERANCE_MM
                        && b.max.y <= f.max.y + FOV_TOLERANCE_MM;
                    if !inside {
                        push(&mut report, e.tick, ViolationKind::FovSoundness, format!("object {id} box leaves the view"));
                    }
                }
            }
            Event::RobotState { state } => {
                report.states_checked += 1;
                let fk = forward_kinematics(spec, &state.joints);
                let err = fk.distance(&state.pose);
                if !(err <= POSE_TOLERANCE_MM) {
                    push(&mut report, e.tick, ViolationKind::PoseConsistency, format!("pose differs from FK by {err} mm"));
                }
            }
            _ => {}
        }
    }
    Ok(report)
}
