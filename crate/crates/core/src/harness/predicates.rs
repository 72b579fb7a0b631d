use serde::{Deserialize, Serialize};

use crate::control_loop::EpisodeTrace;
use crate::geometry::Rect;
use crate::scene::{Motion, WorldModel};

/// Geometric tolerances used by the success checks.
pub mod tolerance {
    /// Largest xy offset between stacked blocks and the base block, mm.
    pub const STACK_XY: f64 = 15.0;
    /// Smallest height step between consecutive stack levels, mm.
    pub const STACK_LEVEL: f64 = 1.0;
    /// Largest distance from a handed-over object to the hand footprint, mm.
    pub const HANDOVER: f64 = 30.0;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Goal {
    /// One stack, bottom first in any order.
    Stacked { ids: Vec<u32> },
    /// Centroids inside `rect`.
    InRect { ids: Vec<u32>, rect: Rect },
    /// (object, receptacle): centroid inside the receptacle footprint.
    InReceptacle { pairs: Vec<(u32, u32)> },
    /// Held by the gripper at the end.
    Held { id: u32 },
    /// Carried by the robot, then released onto the hand. With `hand_seen`
    /// the hand must also have been detected at some point.
    HandedOver { object: u32, hand: u32, hand_seen: bool },
    /// Every object with a zone for its label lies inside that zone.
    InZones,
}

fn resting(world: &WorldModel, id: u32) -> bool {
    world.object(id).is_some_and(|o| !matches!(o.motion, Motion::Held { .. }))
}

pub fn success(goal: &Goal, world: &WorldModel, trace: &EpisodeTrace) -> bool {
    match goal {
        Goal::Stacked { ids } => {
            let Some(mut objs) = ids.iter().map(|id| world.object(*id).filter(|_| resting(world, *id))).collect::<Option<Vec<_>>>() else {
                return false;
            };
            objs.sort_by(|a, b| a.pose[2].total_cmp(&b.pose[2]));
            let base = objs[0].center();
            objs.iter().all(|o| o.center().distance(base) <= tolerance::STACK_XY)
                && objs.windows(2).all(|w| w[1].pose[2] >= w[0].pose[2] + tolerance::STACK_LEVEL)
        }
        Goal::InRect { ids, rect } => {
            ids.iter().all(|id| resting(world, *id) && world.object(*id).is_some_and(|o| rect.contains(o.center())))
        }
        Goal::InReceptacle { pairs } => pairs.iter().all(|(id, r)| {
            match (world.object(*id), world.object(*r)) {
                (Some(o), Some(rec)) => resting(world, *id) && rec.footprint_contains(o.center()),
                _ => false,
            }
        }),
        Goal::Held { id } => world.object(*id).is_some_and(|o| matches!(o.motion, Motion::Held { .. })),
        Goal::HandedOver { object, hand, hand_seen } => {
            let (Some(o), Some(h)) = (world.object(*object), world.object(*hand)) else { return false };
            let on_hand = matches!(o.motion, Motion::Attached { parent, .. } if parent == *hand)
                && h.footprint_distance(o.center()) <= tolerance::HANDOVER;
            let carried = trace.robot_states().any(|(_, s)| s.holding == Some(*object));
            let seen = !hand_seen || trace.snapshots().any(|(_, s)| s.visible.contains(hand));
            on_hand && carried && seen
        }
        Goal::InZones => world.objects.iter().all(|o| {
            match world.zones.iter().find(|z| z.accepts == o.label) {
                Some(z) => resting(world, o.id) && z.rect.contains(o.center()),
                None => true,
            }
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2;
    use crate::scene::{Color, Role, Shape, WorldObject};

    fn block(id: u32, color: Color, pose: [f64; 3]) -> WorldObject {
        WorldObject::new(id, "block", color, Shape::Rectangle { width: 36.0, depth: 36.0 }, 36.0, pose)
    }

    fn bowl(id: u32, color: Color, x: f64, y: f64) -> WorldObject {
        WorldObject::new(id, "bowl", color, Shape::Circle { radius: 55.0 }, 40.0, [x, y, 0.0]).with_role(Role::Receptacle)
    }

    #[test]
    fn stacked_versus_side_by_side() {
        let t = EpisodeTrace::default();
        let goal = Goal::Stacked { ids: vec![1, 2] };
        let stacked = WorldModel::new(vec![block(1, Color::Red, [200.0, 0.0, 0.0]), block(2, Color::Blue, [205.0, 3.0, 36.0])]).unwrap();
        assert!(success(&goal, &stacked, &t));
        let apart = WorldModel::new(vec![block(1, Color::Red, [200.0, 0.0, 0.0]), block(2, Color::Blue, [240.0, 0.0, 0.0])]).unwrap();
        assert!(!success(&goal, &apart, &t));
        let offset = WorldModel::new(vec![block(1, Color::Red, [200.0, 0.0, 0.0]), block(2, Color::Blue, [216.0, 0.0, 36.0])]).unwrap();
        assert!(!success(&goal, &offset, &t));
    }

    #[test]
    fn matching_bowls() {
        let t = EpisodeTrace::default();
        let goal = Goal::InReceptacle { pairs: vec![(1, 3), (2, 4)] };
        let w = WorldModel::new(vec![
            block(1, Color::Red, [100.0, 10.0, 0.0]),
            block(2, Color::Blue, [300.0, -20.0, 0.0]),
            bowl(3, Color::Red, 100.0, 0.0),
            bowl(4, Color::Blue, 300.0, 0.0),
        ])
        .unwrap();
        assert!(success(&goal, &w, &t));
        let swapped = Goal::InReceptacle { pairs: vec![(1, 4), (2, 3)] };
        assert!(!success(&swapped, &w, &t));
    }

    #[test]
    fn region_membership() {
        let rect = Rect::new(Point2::new(0.0, 0.0), Point2::new(100.0, 100.0));
        let w = WorldModel::new(vec![block(1, Color::Red, [90.0, 90.0, 0.0])]).unwrap();
        assert!(success(&Goal::InRect { ids: vec![1], rect }, &w, &EpisodeTrace::default()));
        let out = WorldModel::new(vec![block(1, Color::Red, [110.0, 90.0, 0.0])]).unwrap();
        assert!(!success(&Goal::InRect { ids: vec![1], rect }, &out, &EpisodeTrace::default()));
    }
}
