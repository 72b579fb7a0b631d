//! Seeded scenario generators for the twelve benchmark tasks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layout::{TableLayout, CORNERS, SIDES};
use super::predicates::Goal;
use crate::geometry::{Point2, Rect};
use crate::robot::is_reachable;
use crate::scene::{Color, Disturbance, Motion, Role, Scenario, Shape, WorldModel, WorldObject, Zone};

/// A generated trial: the user prompt, the world, the scripted planning
/// replies an oracle gives, and the success goal.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskInstance {
    pub prompt: String,
    pub scenario: Scenario,
    pub bindings: BTreeMap<String, String>,
    pub plan_reply: String,
    pub objects_reply: String,
    pub goal: Goal,
    /// View size the oracle scans with.
    pub scan_view: f64,
}

pub type Generator = fn(&TableLayout, u64) -> TaskInstance;

const BLOCK_COLORS: [Color; 6] = [Color::Red, Color::Blue, Color::Green, Color::Yellow, Color::Orange, Color::Purple];
const CLEARANCE: f64 = 15.0;
const BALL_RADIUS: f64 = 20.0;
const HAND_RADIUS: f64 = 35.0;

struct Builder<'a> {
    layout: &'a TableLayout,
    rng: ChaCha8Rng,
    objects: Vec<WorldObject>,
    keep_out: Vec<Rect>,
}

impl<'a> Builder<'a> {
    fn new(layout: &'a TableLayout, seed: u64) -> Self {
        Self { layout, rng: ChaCha8Rng::seed_from_u64(seed), objects: Vec::new(), keep_out: Vec::new() }
    }

    fn next_id(&self) -> u32 {
        self.objects.len() as u32 + 1
    }

    fn block(&self, color: Color) -> WorldObject {
        let s = self.layout.block_size;
        WorldObject::new(self.next_id(), "block", color, Shape::Rectangle { width: s, depth: s }, s, [0.0; 3])
    }

    fn round(&self, label: &str, color: Color, radius: f64, height: f64) -> WorldObject {
        WorldObject::new(self.next_id(), label, color, Shape::Circle { radius }, height, [0.0; 3])
    }

    fn free(&self, o: &WorldObject, at: Point2) -> bool {
        let mut probe = o.clone();
        probe.pose = [at.x, at.y, 0.0];
        let b = probe.footprint_bbox();
        let grown = Rect::new(b.min.offset(-CLEARANCE, -CLEARANCE), b.max.offset(CLEARANCE, CLEARANCE));
        is_reachable(&self.layout.spec, [at.x, at.y, 0.0])
            && self.keep_out.iter().all(|r| !r.intersects(&b))
            && self.objects.iter().all(|other| !other.footprint_bbox().intersects(&grown))
    }

    /// Random free spot satisfying `accept`.
    fn sample(&mut self, o: &WorldObject, accept: impl Fn(Point2) -> bool) -> Point2 {
        let work = self.layout.work;
        self.sample_in(o, work, accept)
    }

    /// Random free spot with the whole footprint inside `work`.
    fn sample_in(&mut self, o: &WorldObject, work: Rect, accept: impl Fn(Point2) -> bool) -> Point2 {
        self.try_sample_in(o, work, &accept, 10_000)
            .unwrap_or_else(|| panic!("no free position for {} after 10000 draws", o.display_name()))
    }

    fn try_sample_in(&mut self, o: &WorldObject, work: Rect, accept: &impl Fn(Point2) -> bool, draws: usize) -> Option<Point2> {
        let (w, d) = o.shape.extent();
        for _ in 0..draws {
            let p = Point2::new(
                self.rng.random_range(work.min.x + w / 2.0..=work.max.x - w / 2.0),
                self.rng.random_range(work.min.y + d / 2.0..=work.max.y - d / 2.0),
            );
            if accept(p) && self.free(o, p) {
                return Some(p);
            }
        }
        None
    }

    /// Scatters a group, restarting the whole group when sequential
    /// placement paints itself into a corner.
    fn scatter_all(&mut self, group: Vec<WorldObject>) -> Vec<u32> {
        let base = self.objects.len();
        for _ in 0..200 {
            let work = self.layout.work;
            let placed = group.iter().all(|o| {
                let mut o = o.clone();
                o.id = self.next_id();
                match self.try_sample_in(&o, work, &|_| true, 200) {
                    Some(p) => {
                        self.put(o, p);
                        true
                    }
                    None => false,
                }
            });
            if placed {
                return self.objects[base..].iter().map(|o| o.id).collect();
            }
            self.objects.truncate(base);
        }
        panic!("could not place a group of {} objects", group.len());
    }

    fn put(&mut self, mut o: WorldObject, at: Point2) -> u32 {
        o.pose = [at.x, at.y, 0.0];
        let id = o.id;
        self.objects.push(o);
        id
    }

    fn scatter(&mut self, o: WorldObject) -> u32 {
        let p = self.sample(&o, |_| true);
        self.put(o, p)
    }

    fn colors(&mut self, n: usize) -> Vec<Color> {
        let mut c = BLOCK_COLORS.to_vec();
        c.shuffle(&mut self.rng);
        c.truncate(n);
        c
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        items[self.rng.random_range(0..items.len())]
    }

    fn world(&self) -> WorldModel {
        WorldModel::new(self.objects.clone()).expect("generated worlds are valid")
    }

    fn name(&self, id: u32) -> String {
        self.objects.iter().find(|o| o.id == id).expect("known id").display_name()
    }
}

fn numbered(actions: &[String]) -> String {
    let mut lines: Vec<String> = actions.iter().enumerate().map(|(i, a)| format!("{}. {a}", i + 1)).collect();
    lines.push(format!("{}. done", actions.len() + 1));
    lines.join("\n")
}

fn instance(b: &Builder<'_>, prompt: String, actions: Vec<String>, objects: &str, goal: Goal) -> TaskInstance {
    TaskInstance {
        prompt,
        scenario: Scenario { seed: 0, camera: b.layout.overhead.clone(), world: b.world() },
        bindings: BTreeMap::new(),
        plan_reply: numbered(&actions),
        objects_reply: objects.to_string(),
        goal,
        scan_view: b.layout.overhead.fov_rect.width().min(b.layout.overhead.fov_rect.height()),
    }
}

fn move_actions(name: &str, dest: &str, preposition: &str) -> [String; 2] {
    [format!("pick up the {name}"), format!("put the {name} {preposition} the {dest}")]
}

fn bind(mut t: TaskInstance, pairs: &[(&str, &str)]) -> TaskInstance {
    for (k, v) in pairs {
        t.bindings.insert(k.to_string(), v.to_string());
    }
    t
}

pub fn stack_blocks(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let n = b.rng.random_range(2..=3);
    let ids: Vec<u32> = b.colors(n).into_iter().map(|c| {
        let o = b.block(c);
        b.scatter(o)
    }).collect();
    let base = b.name(ids[0]);
    let actions = ids[1..].iter().flat_map(|&id| move_actions(&b.name(id), &base, "on")).collect();
    instance(&b, "Stack all the blocks".into(), actions, "block", Goal::Stacked { ids })
}

pub fn blocks_to_region(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let all: Vec<&str> = CORNERS.iter().chain(SIDES.iter()).copied().collect();
    let region = b.pick(&all);
    let rect = layout.region(region).expect("known region");
    b.keep_out.push(rect);
    let n = b.rng.random_range(2..=3);
    let ids: Vec<u32> = b.colors(n).into_iter().map(|c| {
        let o = b.block(c);
        b.scatter(o)
    }).collect();
    let actions = ids.iter().flat_map(|&id| move_actions(&b.name(id), region, "on")).collect();
    let t = instance(&b, format!("Put all the blocks on the {region}"), actions, "block", Goal::InRect { ids, rect });
    bind(t, &[("region", region)])
}

pub fn blocks_into_bowl(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let colors = b.colors(4);
    let bowl = b.round("bowl", colors[0], b.layout.bowl_radius, 40.0).with_role(Role::Receptacle);
    let bowl = b.scatter(bowl);
    let n = b.rng.random_range(2..=3);
    let ids: Vec<u32> = colors[1..=n].iter().map(|&c| {
        let o = b.block(c);
        b.scatter(o)
    }).collect();
    let bowl_name = b.name(bowl);
    let actions = ids.iter().flat_map(|&id| move_actions(&b.name(id), &bowl_name, "in")).collect();
    let pairs = ids.iter().map(|&id| (id, bowl)).collect();
    let t = instance(&b, format!("Put the blocks in the {bowl_name}"), actions, "block, bowl", Goal::InReceptacle { pairs });
    bind(t, &[("receptacle", &bowl_name)])
}

pub fn matching_bowls(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    // Three bowl/block pairs only fit on the larger table.
    let most = if layout.work.width() * layout.work.height() > 80_000.0 { 3 } else { 2 };
    let n = b.rng.random_range(2..=most);
    let colors = b.colors(n);
    let group = colors
        .iter()
        .map(|&c| b.round("bowl", c, b.layout.bowl_radius, 40.0).with_role(Role::Receptacle))
        .chain(colors.iter().map(|&c| b.block(c)))
        .collect();
    let ids = b.scatter_all(group);
    let (bowls, blocks) = ids.split_at(n);
    let (bowls, blocks) = (bowls.to_vec(), blocks.to_vec());
    let actions = blocks
        .iter()
        .zip(&bowls)
        .flat_map(|(&k, &w)| move_actions(&b.name(k), &b.name(w), "in"))
        .collect();
    let pairs = blocks.into_iter().zip(bowls).collect();
    instance(
        &b,
        "Put all the blocks in the bowls with matching colors".into(),
        actions,
        "block, bowl",
        Goal::InReceptacle { pairs },
    )
}

const DIRECTIONS: [(&str, f64, f64); 4] = [("left", -1.0, 0.0), ("right", 1.0, 0.0), ("top", 0.0, 1.0), ("bottom", 0.0, -1.0)];

/// Corner whose region does not overlap any placed object; also reserves it.
fn free_corner(b: &mut Builder<'_>) -> (&'static str, Rect) {
    let mut corners = CORNERS.to_vec();
    corners.shuffle(&mut b.rng);
    for c in corners {
        let rect = b.layout.region(c).expect("known region");
        if b.objects.iter().all(|o| !o.footprint_bbox().intersects(&rect)) {
            b.keep_out.push(rect);
            return (c, rect);
        }
    }
    panic!("every corner is occupied");
}

fn bowl_at_center(b: &mut Builder<'_>) -> (u32, Point2) {
    let c = b.pick(&BLOCK_COLORS);
    let bowl = b.round("bowl", c, b.layout.bowl_radius, 40.0).with_role(Role::Receptacle);
    let center = b.layout.work.center();
    (b.put(bowl, center), center)
}

pub fn block_by_direction(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let (bowl, center) = bowl_at_center(&mut b);
    let (dir, dx, dy) = b.pick(&DIRECTIONS);
    let colors: Vec<Color> = b.colors(6).into_iter().filter(|c| Some(*c) != b.objects.first().map(|o| o.color)).collect();
    let first = b.block(colors[0]);
    let reach = b.rng.random_range(95.0..=110.0);
    let target = b.put(first, center.offset(dx * reach, dy * reach));
    let (corner, rect) = free_corner(&mut b);
    // Other blocks stay out of the named direction's cone.
    let in_cone = move |p: Point2| {
        let (rx, ry) = (p.x - center.x, p.y - center.y);
        let along = rx * dx + ry * dy;
        along > 0.0 && along >= (rx * dy - ry * dx).abs()
    };
    let others = b.rng.random_range(1..=2);
    for &c in &colors[1..=others] {
        let o = b.block(c);
        let p = b.sample(&o, |p| !in_cone(p));
        b.put(o, p);
    }
    let bowl_name = b.name(bowl);
    let actions = move_actions(&b.name(target), corner, "on").to_vec();
    let prompt = format!("Pick up the block to the {dir} of the {bowl_name} and place it on the {corner}");
    let t = instance(&b, prompt, actions, "block, bowl", Goal::InRect { ids: vec![target], rect });
    bind(t, &[("direction", dir), ("receptacle", &bowl_name), ("region", corner)])
}

pub fn block_by_distance(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let (bowl, center) = bowl_at_center(&mut b);
    let (corner, rect) = free_corner(&mut b);
    let bowl_color = b.objects[0].color;
    let colors: Vec<Color> = b.colors(6).into_iter().filter(|c| *c != bowl_color).collect();
    let n = b.rng.random_range(2..=3);
    let mut placed: Vec<(f64, u32)> = Vec::new();
    for &c in &colors[..n] {
        let o = b.block(c);
        let taken: Vec<f64> = placed.iter().map(|(d, _)| *d).collect();
        let p = b.sample(&o, |p| taken.iter().all(|d| (p.distance(center) - d).abs() >= 20.0));
        let id = b.put(o, p);
        placed.push((p.distance(center), id));
    }
    placed.sort_by(|a, c| a.0.total_cmp(&c.0));
    let closest = b.rng.random_bool(0.5);
    let (word, target) = if closest { ("closest", placed[0].1) } else { ("farthest", placed[placed.len() - 1].1) };
    let bowl_name = b.name(bowl);
    let actions = move_actions(&b.name(target), corner, "on").to_vec();
    let prompt = format!("Pick up the block {word} to the {bowl_name} and place it on the {corner}");
    let t = instance(&b, prompt, actions, "block, bowl", Goal::InRect { ids: vec![target], rect });
    bind(t, &[("distance", word), ("receptacle", &bowl_name), ("region", corner)])
}

pub fn nth_block(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let (dir, dx, dy) = b.pick(&DIRECTIONS);
    let (corner, rect) = free_corner(&mut b);
    let n = b.rng.random_range(3..=4);
    let colors = b.colors(n);
    // Rank along the direction: "from the left" counts from the smallest x.
    let rank_key = move |p: Point2| -(p.x * dx + p.y * dy);
    let mut placed: Vec<(f64, u32)> = Vec::new();
    for &c in &colors {
        let o = b.block(c);
        let taken: Vec<f64> = placed.iter().map(|(k, _)| *k).collect();
        let p = b.sample(&o, |p| taken.iter().all(|k| (rank_key(p) - k).abs() >= 25.0));
        let id = b.put(o, p);
        placed.push((rank_key(p), id));
    }
    placed.sort_by(|a, c| a.0.total_cmp(&c.0));
    let ordinals = ["first", "second", "third"];
    let k = b.rng.random_range(0..3);
    let target = placed[k].1;
    let actions = move_actions(&b.name(target), corner, "on").to_vec();
    let prompt = format!("Pick up the {} block from the {dir} and place it on the {corner}", ordinals[k]);
    let t = instance(&b, prompt, actions, "block", Goal::InRect { ids: vec![target], rect });
    bind(t, &[("nth", ordinals[k]), ("direction", dir), ("region", corner)])
}

fn inner(work: Rect, margin: f64) -> Rect {
    Rect::new(work.min.offset(margin, margin), work.max.offset(-margin, -margin))
}

fn heading(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (a.cos(), a.sin())
}

pub fn moving_ball(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let color = b.pick(&BLOCK_COLORS);
    let speed = b.rng.random_range(15.0..=30.0);
    let (hx, hy) = heading(&mut b.rng);
    let bounds = inner(layout.work, 40.0);
    let ball = b.round("ball", color, BALL_RADIUS, 2.0 * BALL_RADIUS);
    let p = b.sample(&ball, |p| bounds.contains(p));
    let ball = ball.with_motion(Motion::Linear { velocity: [hx * speed, hy * speed, 0.0], bounds: Some(bounds) });
    let id = b.put(ball, p);
    let actions = vec!["find the ball".to_string(), "pick up the ball".to_string()];
    instance(&b, "Follow and pick-up the ball".into(), actions, "ball", Goal::Held { id })
}

pub fn ball_handover(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let bounds = inner(layout.work, 50.0);
    let hand = b.round("hand", Color::Brown, HAND_RADIUS, 30.0).with_role(Role::Hand);
    let p = b.sample(&hand, |p| bounds.contains(p));
    let speed = b.rng.random_range(10.0..=20.0);
    let start_heading = b.rng.random_range(0.0..std::f64::consts::TAU);
    let hand = hand.with_motion(Motion::RandomWalk { speed, bounds, heading: start_heading, turn_sigma: 0.3 });
    let hand = b.put(hand, p);
    let color = b.pick(&BLOCK_COLORS);
    let ball = b.round("ball", color, BALL_RADIUS, 2.0 * BALL_RADIUS);
    let ball = b.put(ball.with_motion(Motion::Attached { parent: hand, offset: [0.0; 3] }), p);
    let actions = vec!["pick up the ball".to_string(), "give the ball to the hand".to_string()];
    instance(
        &b,
        "Go ahead and take the ball and then give it back to me (I am the hand)".into(),
        actions,
        "ball, hand",
        Goal::HandedOver { object: ball, hand, hand_seen: false },
    )
}

pub fn hidden_bucket(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let camera = layout.wrist_camera();
    let view = camera.fov_rect;
    let home = view.center();
    // Ball drifts slowly inside the initial view.
    let color = b.pick(&BLOCK_COLORS);
    let ball = b.round("ball", color, BALL_RADIUS, 2.0 * BALL_RADIUS);
    let drift_box = Rect::from_center(home, view.width() / 2.0 - 20.0, view.height() / 2.0 - 20.0);
    let p = b.sample(&ball, |p| drift_box.contains(p));
    let (hx, hy) = heading(&mut b.rng);
    let ball = b.put(ball.with_motion(Motion::Linear { velocity: [hx * 8.0, hy * 8.0, 0.0], bounds: Some(drift_box) }), p);
    let bucket = b.round("bucket", Color::Gray, 45.0, 60.0).with_role(Role::Receptacle);
    let margin = 10.0;
    let far = Rect::new(view.min.offset(-margin, -margin), view.max.offset(margin, margin));
    let spec = layout.spec.clone();
    let area = inner(layout.work, -40.0);
    let q = b.sample_in(&bucket, area, |q| {
        let bb = Rect::from_center(q, 45.0, 45.0);
        !bb.intersects(&far) && spec.envelope_radius(100.0) - q.norm() > 40.0
    });
    let bucket = b.put(bucket, q);
    let mut t = instance(
        &b,
        "Find and pick-up the round object and put it into the bucket".into(),
        vec![
            "find the ball".into(),
            "pick up the ball".into(),
            "find the bucket".into(),
            "put the ball in the bucket".into(),
        ],
        "ball, bucket",
        Goal::InReceptacle { pairs: vec![(ball, bucket)] },
    );
    t.scenario.camera = camera;
    t.scan_view = layout.wrist_view;
    bind(t, &[("object", "round"), ("location", "bucket")])
}

pub fn zones_with_disturbance(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let left = b.pick(&[true, false]);
    let (block_zone, ball_zone) = if left { ("top left corner", "top right corner") } else { ("top right corner", "top left corner") };
    let zones = vec![
        Zone { name: "block zone".into(), rect: layout.region(block_zone).expect("region"), accepts: "block".into() },
        Zone { name: "ball zone".into(), rect: layout.region(ball_zone).expect("region"), accepts: "ball".into() },
    ];
    b.keep_out.extend(zones.iter().map(|z| z.rect));
    let colors = b.colors(4);
    let mut ids = Vec::new();
    for (i, &c) in colors.iter().enumerate() {
        let o = if i < 2 { b.block(c) } else { b.round("ball", c, BALL_RADIUS, 2.0 * BALL_RADIUS) };
        ids.push(b.scatter(o));
    }
    // Two scripted displacements into currently free table spots.
    let mut disturbances = Vec::new();
    for (at, id) in [(5.0, ids[0]), (10.0, ids[2])] {
        let probe = b.objects.iter().find(|o| o.id == id).expect("id").clone();
        let to = b.sample(&WorldObject { id: u32::MAX, ..probe }, |_| true);
        b.keep_out.push(Rect::from_center(to, 30.0, 30.0));
        disturbances.push(Disturbance { at, object: id, to: [to.x, to.y] });
    }
    let mut t = instance(
        &b,
        "Order everything in a logical way".into(),
        vec!["arrange every object in its zone".into()],
        "block, ball",
        Goal::InZones,
    );
    t.scenario.world.zones = zones;
    t.scenario.world.disturbances = disturbances;
    t
}

pub fn tool_to_hand(layout: &TableLayout, seed: u64) -> TaskInstance {
    let mut b = Builder::new(layout, seed);
    let view = layout.overhead.fov_rect;
    let work = layout.work;
    let tool = WorldObject::new(b.next_id(), "screwdriver", Color::Yellow, Shape::Rectangle { width: 20.0, depth: 90.0 }, 20.0, [0.0; 3]);
    let tool = b.scatter(tool);
    let hand = b.round("hand", Color::Brown, HAND_RADIUS, 30.0).with_role(Role::Hand);
    let rest = b.sample(&hand, |p| inner(work, 45.0).contains(p));
    let from_top = b.rng.random_bool(0.5);
    let outside_y = if from_top { view.max.y + HAND_RADIUS + 60.0 } else { view.min.y - HAND_RADIUS - 60.0 };
    let start = [rest.x, outside_y, 0.0];
    let speed = b.rng.random_range(40.0..=60.0);
    let hand = hand.with_motion(Motion::Waypoints { points: vec![start, [rest.x, rest.y, 0.0]], speed, looped: false, travelled: 0.0 });
    let hand = b.put(hand, Point2::new(start[0], start[1]));
    instance(
        &b,
        "Give me the screwdriver when you see my hand".into(),
        vec!["pick up the screwdriver".into(), "find the hand".into(), "give the screwdriver to the hand".into()],
        "screwdriver, hand",
        Goal::HandedOver { object: tool, hand, hand_seen: true },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::builtin_tasks;
    use crate::robot::RobotSpec;

    #[test]
    fn generators_place_everything_for_many_seeds() {
        for spec in [RobotSpec::scara(), RobotSpec::delta()] {
            let layout = TableLayout::for_spec(&spec);
            for task in builtin_tasks() {
                for seed in 0..300 {
                    let t = task.generate(&layout, seed);
                    assert!(!t.scenario.world.objects.is_empty(), "task {} seed {seed}", task.id);
                }
            }
        }
    }
}
