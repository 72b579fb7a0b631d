//! JSON-lines episode trace. The first line is an `episode_start` header
//! carrying `schema_version`; the last is `episode_end`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::controller::{FilterConfig, FilterVerdict};
use crate::frame::CommandFrame;
use crate::geometry::Rect;
use crate::robot::{RobotSpec, RobotState};
use crate::scene::{SceneSnapshot, Tracklet};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionOutcome {
    Halted,
    Timeout,
    RejectionLimit,
    BackendFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeOutcome {
    /// Every atomic action reached its halting signal.
    Completed,
    Timeout,
    RejectionLimit,
    BackendFailure,
}

impl EpisodeOutcome {
    pub fn name(self) -> &'static str {
        match self {
            EpisodeOutcome::Completed => "halted",
            EpisodeOutcome::Timeout => "timeout",
            EpisodeOutcome::RejectionLimit => "rejection_limit",
            EpisodeOutcome::BackendFailure => "backend_failure",
        }
    }
}

/// Snapshot content kept in the trace: view, boxes in robot millimeters
/// and tracklets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub fov: Rect,
    pub visible: Vec<u32>,
    pub boxes: Vec<(u32, Rect)>,
    pub tracklets: Vec<Tracklet>,
}

impl SnapshotRecord {
    pub fn from_snapshot(s: &SceneSnapshot) -> Self {
        use crate::scene::project_to_robot;
        Self {
            fov: s.camera.fov_rect,
            visible: s.visible_ids.iter().copied().collect(),
            boxes: s
                .detections
                .iter()
                .map(|d| {
                    let r = Rect::new(project_to_robot(d.bbox.min, &s.camera), project_to_robot(d.bbox.max, &s.camera));
                    (d.object_id, r)
                })
                .collect(),
            tracklets: s.tracklets.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    EpisodeStart {
        schema_version: u32,
        prompt: String,
        actions: Vec<String>,
        spec: RobotSpec,
        filter: FilterConfig,
        tick_dt: f64,
        seed: u64,
        backend: String,
    },
    SnapshotEmitted { action: usize, snapshot: SnapshotRecord },
    ContextAssembled { action: usize, chars: usize, hash: String, negatives: usize },
    ControllerOutput { raw: String },
    Verdict { verdict: FilterVerdict, previous: Option<CommandFrame> },
    FrameDispatched { frame: CommandFrame },
    RobotState { state: RobotState },
    WorldStateHash {
        hash: String,
        /// Object poses, recorded on feedback ticks only.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        poses: Option<Vec<(u32, [f64; 3])>>,
    },
    ActionAdvanced { index: usize, phrase: String, outcome: ActionOutcome },
    EpisodeEnd {
        outcome: EpisodeOutcome,
        sim_time: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: u64,
    /// Position within the tick.
    pub seq: u32,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub events: Vec<TraceEvent>,
}

#[derive(Debug, thiserror::Error)]
pub enum CorruptTrace {
    #[error("cannot read trace: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("trace is empty")]
    Empty,
    #[error("first event is not an episode_start header")]
    MissingHeader,
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    WrongVersion(u32),
    #[error("trace ends without episode_end (truncated?)")]
    MissingEnd,
}

impl EpisodeTrace {
    pub(crate) fn push(&mut self, tick: u64, event: Event) {
        let seq = match self.events.last() {
            Some(e) if e.tick == tick => e.seq + 1,
            _ => 0,
        };
        self.events.push(TraceEvent { tick, seq, event });
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> std::io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    /// Parses one episode, checking the header version and the terminal event.
    pub fn read_jsonl(input: impl BufRead) -> Result<Self, CorruptTrace> {
        let mut events = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let e: TraceEvent = serde_json::from_str(&line)
                .map_err(|err| CorruptTrace::BadLine { line: i + 1, message: err.to_string() })?;
            events.push(e);
        }
        let trace = Self { events };
        trace.check_envelope()?;
        Ok(trace)
    }

    pub fn from_jsonl(text: &str) -> Result<Self, CorruptTrace> {
        Self::read_jsonl(text.as_bytes())
    }

    fn check_envelope(&self) -> Result<(), CorruptTrace> {
        let first = self.events.first().ok_or(CorruptTrace::Empty)?;
        match &first.event {
            Event::EpisodeStart { schema_version, .. } if *schema_version == SCHEMA_VERSION => {}
            Event::EpisodeStart { schema_version, .. } => return Err(CorruptTrace::WrongVersion(*schema_version)),
            _ => return Err(CorruptTrace::MissingHeader),
        }
        match self.events.last().map(|e| &e.event) {
            Some(Event::EpisodeEnd { .. }) => Ok(()),
            _ => Err(CorruptTrace::MissingEnd),
        }
    }

    pub fn header(&self) -> Option<(&RobotSpec, &FilterConfig)> {
        self.events.iter().find_map(|e| match &e.event {
            Event::EpisodeStart { spec, filter, .. } => Some((spec, filter)),
            _ => None,
        })
    }

    pub fn end(&self) -> Option<(EpisodeOutcome, f64)> {
        self.events.iter().rev().find_map(|e| match &e.event {
            Event::EpisodeEnd { outcome, sim_time, .. } => Some((*outcome, *sim_time)),
            _ => None,
        })
    }

    pub fn dispatched_frames(&self) -> impl Iterator<Item = (u64, &CommandFrame)> {
        self.events.iter().filter_map(|e| match &e.event {
            Event::FrameDispatched { frame } => Some((e.tick, frame)),
            _ => None,
        })
    }

    pub fn robot_states(&self) -> impl Iterator<Item = (u64, &RobotState)> {
        self.events.iter().filter_map(|e| match &e.event {
            Event::RobotState { state } => Some((e.tick, state)),
            _ => None,
        })
    }

    pub fn snapshots(&self) -> impl Iterator<Item = (u64, &SnapshotRecord)> {
        self.events.iter().filter_map(|e| match &e.event {
            Event::SnapshotEmitted { snapshot, .. } => Some((e.tick, snapshot)),
            _ => None,
        })
    }

    pub fn query_count(&self) -> usize {
        self.events.iter().filter(|e| matches!(e.event, Event::ControllerOutput { .. })).count()
    }
}
