//! Ground-truth scripted controller used to measure the harness ceiling.
//!
//! It answers the two planning passes with fixed text and, for each atomic
//! action, runs a small pick/place/search state machine against the true
//! world. Objects are only targeted once the camera has seen them.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::backend::{BackendError, ControllerBackend, Observation};
use crate::frame::CommandFrame;
use crate::geometry::{Point2, Rect};
use crate::preprocess::{decompose_marker, extract_marker};
use crate::robot::{is_reachable, GripperState, RobotSpec};
use crate::scene::{Motion, Role, WorldModel, WorldObject};

/// Named table region ("top left corner").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub rect: Rect,
}

/// Task-level knowledge the oracle is given up front.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleLayout {
    /// Height for horizontal moves.
    pub travel_z: f64,
    pub regions: Vec<Region>,
    /// Search path, visited cyclically at `travel_z`.
    pub scan_path: Vec<Point2>,
}

impl OracleLayout {
    pub fn for_spec(spec: &RobotSpec, regions: Vec<Region>, scan_path: Vec<Point2>) -> Self {
        let travel_z = (spec.z_min + 0.7 * (spec.z_max - spec.z_min)).round();
        Self { travel_z, regions, scan_path }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Destination {
    Region(String),
    Zone(String),
    Object(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Intent {
    Find(String),
    Pick(String),
    Place(String, Destination),
    Arrange,
    Unknown,
}

fn parse_intent(phrase: &str, regions: &[Region]) -> Intent {
    let p = phrase.trim().trim_end_matches('.').to_lowercase();
    let strip_the = |s: &str| s.trim().trim_start_matches("the ").trim().to_string();
    if p.starts_with("arrange") || p.contains("every object") {
        return Intent::Arrange;
    }
    if let Some(rest) = p.strip_prefix("find ") {
        return Intent::Find(strip_the(rest));
    }
    if let Some(rest) = p.strip_prefix("pick up ") {
        return Intent::Pick(strip_the(rest));
    }
    let rest = ["put ", "place ", "give "].iter().find_map(|v| p.strip_prefix(v));
    let Some(rest) = rest else { return Intent::Unknown };
    for sep in [" next to ", " on ", " in ", " into ", " to "] {
        if let Some((obj, dest)) = rest.split_once(sep) {
            let obj = strip_the(obj);
            let dest = strip_the(dest);
            let d = if regions.iter().any(|r| r.name == dest) {
                Destination::Region(dest)
            } else if let Some(label) = dest.strip_suffix(" zone") {
                Destination::Zone(label.to_string())
            } else {
                Destination::Object(dest)
            };
            return Intent::Place(obj, d);
        }
    }
    Intent::Unknown
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Step {
    Move([f64; 3], bool),
    Done,
}

#[derive(Debug, Clone, Default)]
struct Phase {
    target: Option<u32>,
    closing: bool,
    descending: bool,
    released: bool,
}

/// Deterministic ground-truth controller.
#[derive(Debug, Clone)]
pub struct OracleSolver {
    layout: OracleLayout,
    plan_reply: String,
    objects_reply: String,
    seen: BTreeSet<u32>,
    action: Option<String>,
    phase: Phase,
    scan_index: usize,
    pending: Option<String>,
}

const XY_READY: f64 = 3.0;
const XY_READY_MOVING: f64 = 10.0;
const Z_READY: f64 = 3.0;
const RELEASE_CLEARANCE: f64 = 3.0;

impl OracleSolver {
    pub fn new(layout: OracleLayout, plan_reply: &str, objects_reply: &str) -> Self {
        Self {
            layout,
            plan_reply: plan_reply.to_string(),
            objects_reply: objects_reply.to_string(),
            seen: BTreeSet::new(),
            action: None,
            phase: Phase::default(),
            scan_index: 0,
            pending: None,
        }
    }

    fn resolve(&self, name: &str, world: &WorldModel) -> Option<u32> {
        world
            .objects
            .iter()
            .filter(|o| self.seen.contains(&o.id))
            .find(|o| o.display_name() == name || o.label == name)
            .map(|o| o.id)
    }

    fn decide(&mut self, o: &Observation<'_>) -> Step {
        match parse_intent(&o.action.verb_phrase, &self.layout.regions) {
            Intent::Find(name) => {
                let visible = o.world.objects.iter().any(|w| {
                    o.snapshot.visible_ids.contains(&w.id) && (w.display_name() == name || w.label == name)
                });
                if visible {
                    Step::Done
                } else {
                    self.scan(o)
                }
            }
            Intent::Pick(name) => match self.resolve(&name, o.world) {
                Some(id) => self.pick(o, id),
                None => self.scan(o),
            },
            Intent::Place(name, dest) => {
                let held = o.robot.holding.filter(|h| o.world.object(*h).is_some_and(|w| matches_name(w, &name)));
                let Some(id) = held.or_else(|| self.resolve(&name, o.world)) else { return self.scan(o) };
                match self.destination(o, id, &dest) {
                    Some(point) => self.place(o, id, point),
                    None => self.carry_while_scanning(o, id),
                }
            }
            Intent::Arrange => self.arrange(o),
            Intent::Unknown => Step::Done,
        }
    }

    /// Table point where the held object's center should end up.
    fn destination(&self, o: &Observation<'_>, id: u32, dest: &Destination) -> Option<Point2> {
        match dest {
            Destination::Region(name) => {
                let rect = self.layout.regions.iter().find(|r| &r.name == name)?.rect;
                Some(free_slot(o.world, id, rect))
            }
            Destination::Zone(label) => {
                let zone = o.world.zones.iter().find(|z| &z.accepts == label)?;
                Some(free_slot(o.world, id, zone.rect))
            }
            Destination::Object(name) => {
                let target = o.world.object(self.resolve(name, o.world)?)?;
                match target.role {
                    Role::Receptacle => Some(free_slot(o.world, id, target.footprint_bbox())),
                    _ => Some(target.center()),
                }
            }
        }
    }

    fn pick(&mut self, o: &Observation<'_>, id: u32) -> Step {
        let robot = o.robot;
        let travel = self.layout.travel_z;
        let pose = robot.pose;
        if robot.holding == Some(id) {
            self.phase.closing = false;
            self.phase.descending = false;
            return if pose.z >= travel - Z_READY { Step::Done } else { Step::Move([pose.x, pose.y, travel], true) };
        }
        let Some(obj) = o.world.object(id) else { return Step::Done };
        let c = obj.center();
        let grasp_z = obj.centroid3()[2];
        if robot.holding.is_some() {
            // Holding the wrong thing: put it down where it is.
            return Step::Move([pose.x, pose.y, pose.z], false);
        }
        if self.phase.closing {
            if robot.gripper == GripperState::Closed {
                self.phase.closing = false;
                return Step::Move([c.x, c.y, travel], false);
            }
            return Step::Move([c.x, c.y, grasp_z], true);
        }
        if robot.gripper != GripperState::Open {
            return Step::Move([c.x, c.y, pose.z.max(grasp_z)], false);
        }
        let xy_err = Point2::new(pose.x, pose.y).distance(c);
        let ready = if is_moving(obj) { XY_READY_MOVING } else { XY_READY };
        if xy_err <= ready && (pose.z - grasp_z).abs() <= Z_READY {
            self.phase.closing = true;
            return Step::Move([c.x, c.y, grasp_z], true);
        }
        let keep = if self.phase.descending { 2.5 * ready } else { ready };
        // Joint-space motion bows away from the vertical; a static target
        // keeps the descent until the arm stops.
        let committed = self.phase.descending && robot.busy && !is_moving(obj);
        self.phase.descending = committed || xy_err <= keep;
        let z = if self.phase.descending { grasp_z } else { travel };
        Step::Move([c.x, c.y, z], false)
    }

    fn place(&mut self, o: &Observation<'_>, id: u32, dest: Point2) -> Step {
        let robot = o.robot;
        let pose = robot.pose;
        let travel = self.layout.travel_z;
        if self.phase.released {
            if robot.gripper != GripperState::Open {
                return Step::Move([pose.x, pose.y, pose.z], false);
            }
            return if pose.z >= travel - Z_READY { Step::Done } else { Step::Move([pose.x, pose.y, travel], false) };
        }
        if robot.holding != Some(id) {
            match self.pick(o, id) {
                Step::Done => {}
                step => return step,
            }
        }
        let Some(obj) = o.world.object(id) else { return Step::Done };
        // Keep the grasp offset so the object, not the tool, lands on `dest`.
        let (dx, dy, dz) = (obj.pose[0] - pose.x, obj.pose[1] - pose.y, obj.pose[2] - pose.z);
        let surface = surface_height(o.world, id, dest);
        let release_z = surface + RELEASE_CLEARANCE - dz;
        let goal = Point2::new(dest.x - dx, dest.y - dy);
        let xy_err = Point2::new(pose.x, pose.y).distance(goal);
        let moving = dest_is_moving(o.world, id, dest);
        let ready = if moving { XY_READY_MOVING } else { XY_READY };
        if xy_err <= ready && (pose.z - release_z).abs() <= Z_READY {
            self.phase.released = true;
            return Step::Move([goal.x, goal.y, release_z], false);
        }
        let keep = if self.phase.descending { 2.5 * ready } else { ready };
        let committed = self.phase.descending && robot.busy && !moving;
        self.phase.descending = committed || xy_err <= keep;
        let z = if self.phase.descending { release_z } else { travel.max(release_z) };
        Step::Move([goal.x, goal.y, z], true)
    }

    fn carry_while_scanning(&mut self, o: &Observation<'_>, id: u32) -> Step {
        if o.robot.holding != Some(id) {
            if let step @ Step::Move(..) = self.pick(o, id) {
                return step;
            }
        }
        self.scan(o)
    }

    fn scan(&mut self, o: &Observation<'_>) -> Step {
        let close = o.robot.holding.is_some();
        let pose = o.robot.pose;
        if self.layout.scan_path.is_empty() {
            return Step::Move([pose.x, pose.y, self.layout.travel_z], close);
        }
        let n = self.layout.scan_path.len();
        let wp = self.layout.scan_path[self.scan_index % n];
        if Point2::new(pose.x, pose.y).distance(wp) <= 5.0 && (pose.z - self.layout.travel_z).abs() <= Z_READY {
            self.scan_index = (self.scan_index + 1) % n;
        }
        let wp = self.layout.scan_path[self.scan_index % n];
        Step::Move([wp.x, wp.y, self.layout.travel_z], close)
    }

    fn arrange(&mut self, o: &Observation<'_>) -> Step {
        let world = o.world;
        if let Some(id) = self.phase.target {
            let settled = self.phase.released && o.robot.holding.is_none();
            if settled && in_zone(world, id) {
                let step = self.place(o, id, Point2::new(0.0, 0.0));
                if step != Step::Done {
                    return step;
                }
                self.phase = Phase::default();
            } else if !self.phase.released || o.robot.holding == Some(id) {
                return match zone_slot(world, id) {
                    Some(dest) => self.place(o, id, dest),
                    None => Step::Done,
                };
            } else {
                self.phase = Phase::default();
            }
        }
        let next = world
            .objects
            .iter()
            .filter(|w| w.role == Role::Item && self.seen.contains(&w.id))
            .find(|w| world.zones.iter().any(|z| z.accepts == w.label) && !in_zone(world, w.id))
            .map(|w| w.id);
        match next {
            Some(id) => {
                self.phase = Phase { target: Some(id), ..Phase::default() };
                let dest = zone_slot(world, id).expect("zone exists");
                self.place(o, id, dest)
            }
            None => {
                let pending = world.disturbances.iter().any(|d| d.at >= world.time - 0.5);
                if pending {
                    let p = o.robot.pose;
                    Step::Move([p.x, p.y, self.layout.travel_z], false)
                } else {
                    Step::Done
                }
            }
        }
    }

    fn render(&self, o: &Observation<'_>, step: Step) -> String {
        let Step::Move(goal, close) = step else { return "[1]".to_string() };
        let reference = match o.last_accepted {
            Some(f) => f.position(),
            None => o.robot.pose.position(),
        };
        let limit = 0.9 * o.filter.max_delta;
        let d = [goal[0] - reference[0], goal[1] - reference[1], goal[2] - reference[2]];
        let largest = d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let scale = if largest > limit { limit / largest } else { 1.0 };
        let mut p = [0.0; 3];
        for k in 0..3 {
            p[k] = round_tenth(reference[k] + d[k] * scale);
        }
        p[2] = p[2].clamp(o.spec.z_min, o.spec.z_max);
        if !is_reachable(o.spec, p) {
            let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let allowed = (o.spec.envelope_radius(p[2]) - 1.0).max(0.0);
            if r > allowed && r > 0.0 {
                p[0] = round_tenth(p[0] * allowed / r * 0.999);
                p[1] = round_tenth(p[1] * allowed / r * 0.999);
            }
        }
        CommandFrame::motion(p[0], p[1], p[2], 0.0, close).to_string()
    }
}

fn round_tenth(v: f64) -> f64 {
    let r = (v * 10.0).round() / 10.0;
    if r == 0.0 { 0.0 } else { r }
}

fn matches_name(o: &WorldObject, name: &str) -> bool {
    o.display_name() == name || o.label == name
}

fn is_moving(o: &WorldObject) -> bool {
    !matches!(o.motion, Motion::Static)
}

fn dest_is_moving(world: &WorldModel, held: u32, dest: Point2) -> bool {
    world
        .objects
        .iter()
        .any(|w| w.id != held && w.footprint_contains(dest) && is_moving(w) && !matches!(w.motion, Motion::Held { .. }))
}

/// Highest top among objects under `p`, other than the carried one.
fn surface_height(world: &WorldModel, held: u32, p: Point2) -> f64 {
    world
        .objects
        .iter()
        .filter(|w| w.id != held && !matches!(w.motion, Motion::Held { .. }) && w.footprint_contains(p))
        .map(|w| w.top())
        .fold(0.0, f64::max)
}

/// 2x2 grid of slots in `rect`; the first one not occupied by another item.
fn free_slot(world: &WorldModel, held: u32, rect: Rect) -> Point2 {
    let c = rect.center();
    let (qx, qy) = (rect.width() / 4.0, rect.height() / 4.0);
    let slots = [(-qx, -qy), (qx, -qy), (-qx, qy), (qx, qy)].map(|(dx, dy)| c.offset(dx, dy));
    let occupied = |p: Point2| {
        world
            .objects
            .iter()
            .any(|w| w.id != held && w.role == Role::Item && w.footprint_distance(p) < 2.0)
    };
    slots.into_iter().find(|p| !occupied(*p)).unwrap_or(c)
}

fn in_zone(world: &WorldModel, id: u32) -> bool {
    let Some(o) = world.object(id) else { return false };
    world.zones.iter().any(|z| z.accepts == o.label && z.rect.contains(o.center()))
}

fn zone_slot(world: &WorldModel, id: u32) -> Option<Point2> {
    let o = world.object(id)?;
    let zone = world.zones.iter().find(|z| z.accepts == o.label)?;
    Some(free_slot(world, id, zone.rect))
}

impl ControllerBackend for OracleSolver {
    fn name(&self) -> &str {
        "oracle"
    }

    fn observe(&mut self, o: &Observation<'_>) {
        self.seen.extend(o.snapshot.visible_ids.iter().copied());
        if self.action.as_deref() != Some(o.action.verb_phrase.as_str()) {
            self.action = Some(o.action.verb_phrase.clone());
            self.phase = Phase::default();
        }
        let step = self.decide(o);
        self.pending = Some(self.render(o, step));
    }

    fn query(&mut self, context: &str) -> Result<String, BackendError> {
        if context.starts_with(decompose_marker()) {
            return Ok(self.plan_reply.clone());
        }
        if context.starts_with(extract_marker()) {
            return Ok(self.objects_reply.clone());
        }
        self.pending
            .take()
            .ok_or_else(|| BackendError::InvalidResponse("oracle queried without an observation".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn regions() -> Vec<Region> {
        vec![Region { name: "top left corner".into(), rect: Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)) }]
    }

    #[test]
    fn intents() {
        let r = regions();
        assert_eq!(parse_intent("find the bucket", &r), Intent::Find("bucket".into()));
        assert_eq!(parse_intent("pick up the red block", &r), Intent::Pick("red block".into()));
        assert_eq!(
            parse_intent("put the red block on the top left corner", &r),
            Intent::Place("red block".into(), Destination::Region("top left corner".into()))
        );
        assert_eq!(
            parse_intent("put the ball in the ball zone", &r),
            Intent::Place("ball".into(), Destination::Zone("ball".into()))
        );
        assert_eq!(
            parse_intent("give the screwdriver to the hand", &r),
            Intent::Place("screwdriver".into(), Destination::Object("hand".into()))
        );
        assert_eq!(parse_intent("arrange every object in its zone", &r), Intent::Arrange);
    }

    #[test]
    fn free_slots_skip_occupied_positions() {
        use crate::scene::{Color, Shape};
        let block = |id, x, y| WorldObject::new(id, "block", Color::Red, Shape::Rectangle { width: 36.0, depth: 36.0 }, 36.0, [x, y, 0.0]);
        let rect = Rect::new(Point2::new(0.0, 0.0), Point2::new(100.0, 100.0));
        let w = WorldModel::new(vec![block(1, 25.0, 25.0), block(2, 300.0, 0.0)]).unwrap();
        assert_eq!(free_slot(&w, 2, rect), Point2::new(75.0, 25.0));
    }
}
