use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::{distance_to_polygon, Point2, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Green,
    Blue,
    Yellow,
    Orange,
    Purple,
    White,
    Black,
    Gray,
    Brown,
}

impl Color {
    pub const ALL: [Color; 10] = [
        Color::Red,
        Color::Green,
        Color::Blue,
        Color::Yellow,
        Color::Orange,
        Color::Purple,
        Color::White,
        Color::Black,
        Color::Gray,
        Color::Brown,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Color::Red => "red",
            Color::Green => "green",
            Color::Blue => "blue",
            Color::Yellow => "yellow",
            Color::Orange => "orange",
            Color::Purple => "purple",
            Color::White => "white",
            Color::Black => "black",
            Color::Gray => "gray",
            Color::Brown => "brown",
        }
    }

    pub fn from_name(s: &str) -> Option<Color> {
        Color::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Footprint in the table plane, centered on the object's pose.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Circle { radius: f64 },
    Rectangle { width: f64, depth: f64 },
    /// Vertices relative to the pose, counter-clockwise.
    Polygon { vertices: Vec<Point2> },
}

impl Shape {
    pub fn is_valid(&self) -> bool {
        match self {
            Shape::Circle { radius } => *radius > 0.0,
            Shape::Rectangle { width, depth } => *width > 0.0 && *depth > 0.0,
            Shape::Polygon { vertices } => {
                vertices.len() >= 3 && crate::geometry::signed_area(vertices).abs() > 0.0
            }
        }
    }

    /// Width and depth of the axis-aligned extent.
    pub fn extent(&self) -> (f64, f64) {
        match self {
            Shape::Circle { radius } => (2.0 * radius, 2.0 * radius),
            Shape::Rectangle { width, depth } => (*width, *depth),
            Shape::Polygon { vertices } => {
                let r = Rect::bounding(vertices).expect("non-empty polygon");
                (r.width(), r.height())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    /// Graspable item.
    #[default]
    Item,
    /// Container; released objects sit at its base.
    Receptacle,
    /// Scripted human hand; catches objects released over it.
    Hand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Motion {
    Static,
    /// Constant velocity, reflecting off `bounds` when given.
    Linear { velocity: [f64; 3], bounds: Option<Rect> },
    /// Piecewise-linear path at constant speed. A looped path closes back
    /// to its first point; otherwise the object stops at the last one.
    Waypoints { points: Vec<[f64; 3]>, speed: f64, looped: bool, travelled: f64 },
    /// Heading diffuses by `turn_sigma` rad per tick; reflects off `bounds`.
    RandomWalk { speed: f64, bounds: Rect, heading: f64, turn_sigma: f64 },
    /// Follows another object at a fixed offset.
    Attached { parent: u32, offset: [f64; 3] },
    /// Carried by the gripper at a fixed offset from the end-effector.
    Held { offset: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub id: u32,
    pub label: String,
    pub color: Color,
    pub shape: Shape,
    pub height: f64,
    /// Footprint center; z is the bottom face.
    pub pose: [f64; 3],
    #[serde(default = "static_motion")]
    pub motion: Motion,
    #[serde(default)]
    pub role: Role,
}

fn static_motion() -> Motion {
    Motion::Static
}

impl WorldObject {
    pub fn new(id: u32, label: &str, color: Color, shape: Shape, height: f64, pose: [f64; 3]) -> Self {
        Self {
            id,
            label: label.to_string(),
            color,
            shape,
            height,
            pose,
            motion: Motion::Static,
            role: Role::Item,
        }
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn with_motion(mut self, motion: Motion) -> Self {
        self.motion = motion;
        self
    }

    /// "red block"
    pub fn display_name(&self) -> String {
        format!("{} {}", self.color.name(), self.label)
    }

    pub fn center(&self) -> Point2 {
        Point2::new(self.pose[0], self.pose[1])
    }

    pub fn centroid3(&self) -> [f64; 3] {
        [self.pose[0], self.pose[1], self.pose[2] + self.height / 2.0]
    }

    pub fn top(&self) -> f64 {
        self.pose[2] + self.height
    }

    pub fn footprint_bbox(&self) -> Rect {
        let (w, d) = self.shape.extent();
        match &self.shape {
            Shape::Polygon { vertices } => {
                let r = Rect::bounding(vertices).expect("non-empty polygon");
                Rect::new(
                    r.min.offset(self.pose[0], self.pose[1]),
                    r.max.offset(self.pose[0], self.pose[1]),
                )
            }
            _ => Rect::from_center(self.center(), w / 2.0, d / 2.0),
        }
    }

    /// Distance from a table point to the footprint; zero inside.
    pub fn footprint_distance(&self, p: Point2) -> f64 {
        match &self.shape {
            Shape::Circle { radius } => (p.distance(self.center()) - radius).max(0.0),
            Shape::Rectangle { .. } => {
                let b = self.footprint_bbox();
                p.distance(b.clamp(p))
            }
            Shape::Polygon { vertices } => {
                let abs: Vec<Point2> =
                    vertices.iter().map(|v| v.offset(self.pose[0], self.pose[1])).collect();
                distance_to_polygon(p, &abs)
            }
        }
    }

    pub fn footprint_contains(&self, p: Point2) -> bool {
        self.footprint_distance(p) <= 0.0
    }
}

/// Class-designated table region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub name: String,
    pub rect: Rect,
    /// Object label that belongs in this zone.
    pub accepts: String,
}

/// Scripted displacement of an object at a fixed simulated time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub at: f64,
    pub object: u32,
    pub to: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldModel {
    pub objects: Vec<WorldObject>,
    #[serde(default)]
    pub zones: Vec<Zone>,
    #[serde(default)]
    pub disturbances: Vec<Disturbance>,
    #[serde(default)]
    pub time: f64,
    /// Release distance within which a hand catches an object.
    #[serde(default = "default_catch_radius")]
    pub catch_radius: f64,
}

fn default_catch_radius() -> f64 {
    30.0
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("duplicate object id {0}")]
    DuplicateId(u32),
    #[error("object {0} has a degenerate shape or height")]
    BadDimensions(u32),
    #[error("object {0} is attached to missing parent {1}")]
    MissingParent(u32, u32),
}

impl WorldModel {
    pub fn new(mut objects: Vec<WorldObject>) -> Result<Self, WorldError> {
        objects.sort_by_key(|o| o.id);
        let world = Self {
            objects,
            zones: Vec::new(),
            disturbances: Vec::new(),
            time: 0.0,
            catch_radius: default_catch_radius(),
        };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        for w in self.objects.windows(2) {
            if w[0].id == w[1].id {
                return Err(WorldError::DuplicateId(w[0].id));
            }
        }
        for o in &self.objects {
            if !o.shape.is_valid() || !(o.height > 0.0) {
                return Err(WorldError::BadDimensions(o.id));
            }
            if let Motion::Attached { parent, .. } = o.motion {
                if self.object(parent).is_none() {
                    return Err(WorldError::MissingParent(o.id, parent));
                }
            }
        }
        Ok(())
    }

    pub fn object(&self, id: u32) -> Option<&WorldObject> {
        self.objects.binary_search_by_key(&id, |o| o.id).ok().map(|i| &self.objects[i])
    }

    fn object_mut(&mut self, id: u32) -> Option<&mut WorldObject> {
        self.objects.binary_search_by_key(&id, |o| o.id).ok().map(move |i| &mut self.objects[i])
    }

    pub fn held_object(&self) -> Option<u32> {
        self.objects.iter().find(|o| matches!(o.motion, Motion::Held { .. })).map(|o| o.id)
    }

    /// Advances motion scripts by `dt`, then applies due disturbances.
    pub fn advance(&mut self, dt: f64, rng: &mut impl Rng) {
        let t0 = self.time;
        self.time += dt;
        for o in &mut self.objects {
            advance_motion(o, dt, rng);
        }
        // Attached objects follow parents already moved this tick.
        let parents: Vec<(u32, [f64; 3])> = self.objects.iter().map(|o| (o.id, o.pose)).collect();
        for o in &mut self.objects {
            if let Motion::Attached { parent, offset } = o.motion {
                if let Some((_, p)) = parents.iter().find(|(id, _)| *id == parent) {
                    o.pose = [p[0] + offset[0], p[1] + offset[1], p[2] + offset[2]];
                }
            }
        }
        let due: Vec<Disturbance> = self
            .disturbances
            .iter()
            .filter(|d| d.at > t0 && d.at <= self.time)
            .cloned()
            .collect();
        for d in due {
            if let Some(o) = self.object_mut(d.object) {
                if !matches!(o.motion, Motion::Held { .. }) {
                    o.pose = [d.to[0], d.to[1], 0.0];
                    o.motion = Motion::Static;
                }
            }
        }
    }

    /// Best graspable object under the end-effector: footprint within
    /// `tolerance` of the tool point in xy, tool height within the object's
    /// vertical extent (same tolerance), footprint no larger than `jaw_limit`.
    /// Ties go to the nearest 3D centroid, then the lowest id.
    pub fn grasp_candidate(&self, ee: [f64; 3], tolerance: f64, jaw_limit: f64) -> Option<u32> {
        let p = Point2::new(ee[0], ee[1]);
        self.objects
            .iter()
            .filter(|o| o.role == Role::Item && !matches!(o.motion, Motion::Held { .. }))
            .filter(|o| {
                let (w, d) = o.shape.extent();
                w <= jaw_limit && d <= jaw_limit
            })
            .filter(|o| o.footprint_distance(p) <= tolerance)
            .filter(|o| ee[2] >= o.pose[2] - tolerance && ee[2] <= o.top() + tolerance)
            .map(|o| (dist3(o.centroid3(), ee), o.id))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, id)| id)
    }

    /// Marks `id` as carried; its offset to the end-effector is frozen.
    pub fn attach_to_gripper(&mut self, id: u32, ee: [f64; 3]) {
        if let Some(o) = self.object_mut(id) {
            o.motion = Motion::Held {
                offset: [o.pose[0] - ee[0], o.pose[1] - ee[1], o.pose[2] - ee[2]],
            };
        }
    }

    /// Moves the carried object with the end-effector.
    pub fn sync_held(&mut self, ee: [f64; 3]) {
        for o in &mut self.objects {
            if let Motion::Held { offset } = o.motion {
                o.pose = [ee[0] + offset[0], ee[1] + offset[1], ee[2] + offset[2]];
            }
        }
    }

    /// Lets go of `id`: a nearby hand catches it, otherwise it drops onto
    /// the highest item below it (or the table/receptacle base).
    pub fn release(&mut self, id: u32) {
        let Some(obj) = self.object(id).cloned() else { return };
        let p = obj.center();
        let catcher = self
            .objects
            .iter()
            .filter(|o| o.role == Role::Hand && o.id != id)
            .map(|o| (o.footprint_distance(p), o.id, o.pose))
            .filter(|(d, _, _)| *d <= self.catch_radius)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if let Some((_, hand, hp)) = catcher {
            let o = self.object_mut(id).expect("object exists");
            o.pose[2] = hp[2];
            o.motion = Motion::Attached {
                parent: hand,
                offset: [o.pose[0] - hp[0], o.pose[1] - hp[1], 0.0],
            };
            return;
        }
        let support = self
            .objects
            .iter()
            .filter(|o| o.id != id && o.role == Role::Item)
            .filter(|o| !matches!(o.motion, Motion::Held { .. }))
            .filter(|o| o.footprint_contains(p) && o.top() <= obj.pose[2] + 1e-6)
            .map(|o| o.top())
            .fold(None, |acc: Option<f64>, t| Some(acc.map_or(t, |a| a.max(t))));
        let floor = self
            .objects
            .iter()
            .filter(|o| o.id != id && o.role == Role::Receptacle && o.footprint_contains(p))
            .map(|o| o.pose[2])
            .fold(0.0, f64::max);
        let o = self.object_mut(id).expect("object exists");
        o.pose[2] = support.unwrap_or(floor).max(floor);
        o.motion = Motion::Static;
    }

    /// Stable 64-bit fingerprint of all object poses.
    pub fn state_hash(&self) -> u64 {
        let mut h = crate::hash::Fnv64::new();
        for o in &self.objects {
            h.write(&o.id.to_le_bytes());
            for v in o.pose {
                h.write(&v.to_bits().to_le_bytes());
            }
        }
        h.finish()
    }
}

fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn reflect(pos: &mut f64, vel: &mut f64, lo: f64, hi: f64) {
    if *pos < lo {
        *pos = 2.0 * lo - *pos;
        *vel = vel.abs();
    } else if *pos > hi {
        *pos = 2.0 * hi - *pos;
        *vel = -vel.abs();
    }
}

fn advance_motion(o: &mut WorldObject, dt: f64, rng: &mut impl Rng) {
    match &mut o.motion {
        Motion::Static | Motion::Attached { .. } | Motion::Held { .. } => {}
        Motion::Linear { velocity, bounds } => {
            for (p, v) in o.pose.iter_mut().zip(velocity.iter()) {
                *p += v * dt;
            }
            if let Some(b) = bounds {
                reflect(&mut o.pose[0], &mut velocity[0], b.min.x, b.max.x);
                reflect(&mut o.pose[1], &mut velocity[1], b.min.y, b.max.y);
            }
        }
        Motion::Waypoints { points, speed, looped, travelled } => {
            *travelled += *speed * dt;
            o.pose = point_along(points, *looped, *travelled);
        }
        Motion::RandomWalk { speed, bounds, heading, turn_sigma } => {
            let turn = Normal::new(0.0, *turn_sigma).map(|n| n.sample(rng)).unwrap_or(0.0);
            *heading += turn;
            let (mut vx, mut vy) = (heading.cos() * *speed, heading.sin() * *speed);
            o.pose[0] += vx * dt;
            o.pose[1] += vy * dt;
            reflect(&mut o.pose[0], &mut vx, bounds.min.x, bounds.max.x);
            reflect(&mut o.pose[1], &mut vy, bounds.min.y, bounds.max.y);
            *heading = vy.atan2(vx);
        }
    }
}

pub fn path_length(points: &[[f64; 3]], looped: bool) -> f64 {
    let n = points.len();
    let segs = if looped { n } else { n.saturating_sub(1) };
    (0..segs).map(|i| dist3(points[i], points[(i + 1) % n])).sum()
}

/// Position after travelling `s` mm along the path.
pub fn point_along(points: &[[f64; 3]], looped: bool, s: f64) -> [f64; 3] {
    let n = points.len();
    if n == 0 {
        return [0.0; 3];
    }
    let total = path_length(points, looped);
    if total == 0.0 {
        return points[0];
    }
    let mut s = if looped { s.rem_euclid(total) } else { s.min(total) };
    let segs = if looped { n } else { n - 1 };
    for i in 0..segs {
        let (a, b) = (points[i], points[(i + 1) % n]);
        let len = dist3(a, b);
        if s <= len && len > 0.0 {
            let t = s / len;
            return [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])];
        }
        s -= len;
    }
    if looped {
        points[0]
    } else {
        points[n - 1]
    }
}

/// Functional form of [`WorldModel::advance`].
pub fn advance_world(world: &WorldModel, dt: f64, rng: &mut impl Rng) -> WorldModel {
    let mut next = world.clone();
    next.advance(dt, rng);
    next
}
