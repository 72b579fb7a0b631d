use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::spec::{RobotKind, RobotSpec};

/// End-effector pose in robot coordinates: mm plus wrist rotation in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub rotation: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, z: f64, rotation: f64) -> Self {
        Self { x, y, z, rotation }
    }

    pub fn position(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn distance(&self, other: &Pose) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointState {
    pub joint_values: Vec<f64>,
}

impl JointState {
    pub fn new(joint_values: Vec<f64>) -> Self {
        Self { joint_values }
    }

    pub fn within_ranges(&self, spec: &RobotSpec) -> bool {
        self.joint_values.len() == spec.joint_ranges.len()
            && self
                .joint_values
                .iter()
                .zip(&spec.joint_ranges)
                .all(|(v, [lo, hi])| *v >= *lo && *v <= *hi)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("target ({x:.3}, {y:.3}, {z:.3}) is unreachable: {why}")]
    Unreachable { x: f64, y: f64, z: f64, why: &'static str },
}

fn unreachable(target: &Pose, why: &'static str) -> KinematicsError {
    KinematicsError::Unreachable { x: target.x, y: target.y, z: target.z, why }
}

// Relative slack on the radius test so points computed on the boundary
// (e.g. 400·cos θ, 400·sin θ) are not rejected by rounding.
const RADIUS_SLACK: f64 = 1e-12;

pub fn forward_kinematics(spec: &RobotSpec, joints: &JointState) -> Pose {
    let q = &joints.joint_values;
    match spec.kind {
        RobotKind::Scara => {
            let (l1, l2) = (spec.link_lengths[0], spec.link_lengths[1]);
            let t1 = q[0].to_radians();
            let t12 = (q[0] + q[1]).to_radians();
            Pose::new(l1 * t1.cos() + l2 * t12.cos(), l1 * t1.sin() + l2 * t12.sin(), q[2], q[3])
        }
        RobotKind::Delta => {
            let p = delta_fk(spec, [q[0], q[1], q[2]]);
            Pose::new(p.x, p.y, p.z + spec.mount_height, q[3])
        }
    }
}

pub fn inverse_kinematics(spec: &RobotSpec, target: &Pose) -> Result<JointState, KinematicsError> {
    if !(target.x.is_finite() && target.y.is_finite() && target.z.is_finite()) {
        return Err(unreachable(target, "non-finite coordinate"));
    }
    if target.z < spec.z_min || target.z > spec.z_max {
        return Err(unreachable(target, "outside z range"));
    }
    let r = target.x.hypot(target.y);
    if r > spec.envelope_radius(target.z) * (1.0 + RADIUS_SLACK) {
        return Err(unreachable(target, "outside workspace radius"));
    }
    let joints = match spec.kind {
        RobotKind::Scara => scara_ik(spec, target, r),
        RobotKind::Delta => delta_ik(spec, target)?,
    };
    if !joints.within_ranges(spec) {
        return Err(unreachable(target, "joint limit"));
    }
    Ok(joints)
}

pub fn is_reachable(spec: &RobotSpec, point: [f64; 3]) -> bool {
    inverse_kinematics(spec, &Pose::new(point[0], point[1], point[2], 0.0)).is_ok()
}

fn scara_ik(spec: &RobotSpec, target: &Pose, r: f64) -> JointState {
    let (l1, l2) = (spec.link_lengths[0], spec.link_lengths[1]);
    let c2 = ((r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)).clamp(-1.0, 1.0);
    // Elbow-right: non-negative elbow angle.
    let t2 = c2.acos();
    let t1 = target.y.atan2(target.x) - (l2 * t2.sin()).atan2(l1 + l2 * t2.cos());
    JointState::new(vec![normalize_deg(t1.to_degrees()), t2.to_degrees(), target.z, target.rotation])
}

/// Wraps an angle into (-180, 180].
fn normalize_deg(a: f64) -> f64 {
    let w = a.rem_euclid(360.0);
    if w > 180.0 {
        w - 360.0
    } else {
        w
    }
}

const DELTA_ARM_ANGLES: [f64; 3] = [0.0, 120.0, 240.0];

struct DeltaGeometry {
    base: f64,
    effector: f64,
    upper: f64,
    lower: f64,
}

impl DeltaGeometry {
    fn of(spec: &RobotSpec) -> Self {
        let l = &spec.link_lengths;
        Self { base: l[0], effector: l[1], upper: l[2], lower: l[3] }
    }
}

fn delta_ik(spec: &RobotSpec, target: &Pose) -> Result<JointState, KinematicsError> {
    let g = DeltaGeometry::of(spec);
    let z = target.z - spec.mount_height;
    let mut q = Vec::with_capacity(4);
    for phi in DELTA_ARM_ANGLES {
        let (s, c) = phi.to_radians().sin_cos();
        // Target expressed in the arm's own vertical plane.
        let xa = target.x * c + target.y * s - (g.base - g.effector);
        let ya = -target.x * s + target.y * c;
        let a = -2.0 * g.upper * xa;
        let b = 2.0 * g.upper * z;
        let k = g.lower * g.lower - g.upper * g.upper - xa * xa - ya * ya - z * z;
        let m = a.hypot(b);
        if m == 0.0 || (k / m).abs() > 1.0 {
            return Err(unreachable(target, "arm cannot close the loop"));
        }
        let base = b.atan2(a);
        let spread = (k / m).acos();
        let (t_a, t_b) = (base + spread, base - spread);
        // Elbow-out branch: the one with the elbow further from the axis.
        let theta = if t_a.cos() >= t_b.cos() { t_a } else { t_b };
        q.push(normalize_deg(theta.to_degrees()));
    }
    q.push(target.rotation);
    Ok(JointState::new(q))
}

/// Effector position relative to the base plane (z negative below it).
fn delta_fk(spec: &RobotSpec, angles: [f64; 3]) -> Vector3<f64> {
    let g = DeltaGeometry::of(spec);
    let centers: Vec<Vector3<f64>> = DELTA_ARM_ANGLES
        .iter()
        .zip(angles)
        .map(|(phi, theta)| {
            let (s, c) = phi.to_radians().sin_cos();
            let t = theta.to_radians();
            let radial = g.base - g.effector + g.upper * t.cos();
            Vector3::new(radial * c, radial * s, -g.upper * t.sin())
        })
        .collect();
    trilaterate_lower(&centers[0], &centers[1], &centers[2], g.lower)
}

/// Lower intersection of three equal-radius spheres.
fn trilaterate_lower(p1: &Vector3<f64>, p2: &Vector3<f64>, p3: &Vector3<f64>, r: f64) -> Vector3<f64> {
    let d_vec = p2 - p1;
    let d = d_vec.norm();
    let ex = d_vec / d;
    let i = ex.dot(&(p3 - p1));
    let ey = (p3 - p1 - ex * i).normalize();
    let ez = ex.cross(&ey);
    let j = ey.dot(&(p3 - p1));
    let x = d / 2.0;
    let y = (i * i + j * j) / (2.0 * j) - i * x / j;
    let h = (r * r - x * x - y * y).max(0.0).sqrt();
    let base = p1 + ex * x + ey * y;
    let (a, b) = (base + ez * h, base - ez * h);
    if a.z <= b.z {
        a
    } else {
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fk(spec: &RobotSpec, q: &[f64]) -> Pose {
        forward_kinematics(spec, &JointState::new(q.to_vec()))
    }

    #[test]
    fn scara_fk_cases() {
        let s = RobotSpec::scara();
        let p = fk(&s, &[0.0, 0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(p.x, 400.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-12);

        // Independent oracle: compose planar rotation matrices for each link.
        let rot = |deg: f64| nalgebra::Rotation2::new(deg.to_radians());
        let oracle = rot(90.0) * nalgebra::Vector2::new(200.0, 0.0)
            + rot(90.0) * rot(-90.0) * nalgebra::Vector2::new(200.0, 0.0);
        let p = fk(&s, &[90.0, -90.0, 50.0, 0.0]);
        assert_abs_diff_eq!(p.x, oracle.x, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, oracle.y, epsilon = 1e-9);
        assert_abs_diff_eq!(p.x, 200.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, 200.0, epsilon = 1e-9);
        assert_eq!(p.z, 50.0);
    }

    #[test]
    fn scara_ik_boundary() {
        let s = RobotSpec::scara();
        let q = inverse_kinematics(&s, &Pose::new(400.0, 0.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(q.joint_values[0], 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(q.joint_values[1], 0.0, epsilon = 1e-9);
        assert!(inverse_kinematics(&s, &Pose::new(401.0, 0.0, 0.0, 0.0)).is_err());
        assert!(is_reachable(&s, [0.0, 399.0, 90.0]));
        assert!(!is_reachable(&s, [0.0, 399.0, 181.0]));
        assert!(is_reachable(&s, [0.0, 0.0, 0.0]));
    }

    #[test]
    fn scara_prefers_elbow_right() {
        let s = RobotSpec::scara();
        let q = inverse_kinematics(&s, &Pose::new(200.0, 200.0, 10.0, 0.0)).unwrap();
        assert!(q.joint_values[1] > 0.0);
        let p = fk(&s, &q.joint_values);
        assert_abs_diff_eq!(p.x, 200.0, epsilon = 1e-9);
        assert_abs_diff_eq!(p.y, 200.0, epsilon = 1e-9);
    }

    #[test]
    fn delta_symmetric_angles_stay_on_axis() {
        let d = RobotSpec::delta();
        for t in [-40.0, 0.0, 30.0, 75.0] {
            let p = fk(&d, &[t, t, t, 0.0]);
            assert_abs_diff_eq!(p.x, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-9);
        }
        for z in 0..=200 {
            assert!(is_reachable(&d, [0.0, 0.0, z as f64]), "z={z}");
        }
    }

    #[test]
    fn delta_round_trip_on_envelope_edge() {
        let d = RobotSpec::delta();
        for z in [0.0, 50.0, 100.0, 150.0, 200.0] {
            let r = d.envelope_radius(z);
            for k in 0..24 {
                let a = (k as f64 * 15.0).to_radians();
                let target = Pose::new(r * a.cos(), r * a.sin(), z, 10.0);
                let q = inverse_kinematics(&d, &target).unwrap();
                let p = forward_kinematics(&d, &q);
                assert!(p.distance(&target) < 1e-6, "{target:?} -> {p:?}");
            }
        }
        assert!(!is_reachable(&d, [261.0, 0.0, 100.0]));
        assert!(!is_reachable(&d, [0.0, 0.0, -0.5]));
    }

    #[test]
    fn normalization_range() {
        assert_eq!(normalize_deg(180.0), 180.0);
        assert_eq!(normalize_deg(-180.0), 180.0);
        assert_eq!(normalize_deg(270.0), -90.0);
    }
}
