//! Geometric surrogate for the robot: SE(2) base transforms, local arm
//! trajectories as polylines, and swept-sphere collision tests against
//! vertical cylinders. Used only when precompiling tables and validating plans.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCENE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn dist(&self, o: &Point3) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }

    pub fn planar_dist(&self, o: &Point3) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    pub fn planar_norm(&self) -> f64 {
        self.x.hypot(self.y)
    }

    fn lerp(&self, o: &Point3, t: f64) -> Point3 {
        Point3::new(
            self.x + (o.x - self.x) * t,
            self.y + (o.y - self.y) * t,
            self.z + (o.z - self.z) * t,
        )
    }

    fn key(&self) -> (f64, f64, f64) {
        (self.x, self.y, self.z)
    }
}

/// Object configuration: center of mass of a resting object.
pub type ObjectConfig = Point3;

/// Normalizes an angle into `[-π, π)`.
pub fn normalize_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r >= PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl BasePose {
    pub const ORIGIN: BasePose = BasePose {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        BasePose {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }
}

/// Maps a point in the virtual-base frame into the world frame for base `b`.
pub fn t_b(b: &BasePose, c: &Point3) -> Point3 {
    let (s, co) = b.theta.sin_cos();
    Point3::new(b.x + c.x * co - c.y * s, b.y + c.x * s + c.y * co, c.z)
}

/// Inverse of [`t_b`].
pub fn t_b_inverse(b: &BasePose, c: &Point3) -> Point3 {
    let (s, co) = b.theta.sin_cos();
    let (dx, dy) = (c.x - b.x, c.y - b.y);
    Point3::new(dx * co + dy * s, -dx * s + dy * co, c.z)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmRole {
    Resting,
    Grasping,
}

/// End-effector configuration in the base-local frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmConf {
    pub position: Point3,
    pub yaw: f64,
    pub role: ArmRole,
}

/// Axis-aligned table top. All tables share the scene's table height.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Table {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectShape {
    pub radius: f64,
    pub height: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    /// Sweep radius of the empty gripper.
    pub gripper_radius: f64,
    /// Sweep radius while carrying an object.
    pub holding_radius: f64,
    pub reach_min: f64,
    pub reach_max: f64,
    /// Distance from an object's axis to the end effector when grasping it.
    pub standoff: f64,
    /// Resting end-effector position, `z` measured above the table top.
    pub rest: [f64; 3],
    /// Range of via-point heights above the object top.
    pub lift_min: f64,
    pub lift_max: f64,
    /// Sampling step of the swept-volume test.
    pub sweep_step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    /// Virtual object configurations.
    pub d: usize,
    /// Grasping poses per virtual configuration.
    pub k: usize,
    /// Trajectories per grasping pose.
    pub k_prime: usize,
    /// Base configurations.
    pub n_base: usize,
    /// Neighbours per base configuration.
    pub k_base: usize,
    /// Distance band from table edges for base sampling.
    pub base_band: [f64; 2],
}

/// World description. `declared_objects` is informational only; it never
/// affects the precompiled tables or the scene hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub table_height: f64,
    pub tables: Vec<Table>,
    pub object: ObjectShape,
    pub robot: RobotModel,
    pub sampling: Sampling,
    /// Grid size for identifying real configurations (x, y).
    pub quantization: f64,
    /// Maximum distance for snapping instance placements to configurations.
    pub snap_distance: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub declared_objects: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid scene: {0}")]
pub struct SceneError(pub String);

impl Scene {
    /// A single 1.6 m × 0.9 m table with the default robot and the
    /// D=15, k=4, k′=4 sampling used for benchmarking.
    pub fn one_table() -> Scene {
        Scene {
            version: SCENE_VERSION,
            name: "one-table".into(),
            table_height: 0.75,
            tables: vec![Table {
                x_min: -0.8,
                x_max: 0.8,
                y_min: -0.45,
                y_max: 0.45,
            }],
            object: ObjectShape {
                radius: 0.03,
                height: 0.12,
            },
            robot: RobotModel {
                gripper_radius: 0.04,
                holding_radius: 0.13,
                reach_min: 0.35,
                reach_max: 0.95,
                standoff: 0.10,
                rest: [0.15, 0.0, 0.45],
                lift_min: 0.10,
                lift_max: 0.40,
                sweep_step: 0.01,
            },
            sampling: Sampling {
                d: 15,
                k: 4,
                k_prime: 4,
                n_base: 60,
                k_base: 12,
                base_band: [0.4, 0.7],
            },
            quantization: 0.005,
            snap_distance: 0.02,
            seed: 7,
            declared_objects: Vec::new(),
        }
    }

    /// A tiny scene (D=4, k=2, k'=2, six bases) small enough for exhaustive
    /// checks.
    pub fn micro() -> Scene {
        let mut s = Scene::one_table();
        s.name = "micro".into();
        s.sampling.d = 4;
        s.sampling.k = 2;
        s.sampling.k_prime = 2;
        s.sampling.n_base = 6;
        s.sampling.k_base = 3;
        s
    }

    /// Three tables side by side.
    pub fn three_tables() -> Scene {
        let mut s = Scene::one_table();
        s.name = "three-tables".into();
        s.tables = vec![
            Table {
                x_min: -0.8,
                x_max: 0.8,
                y_min: -0.45,
                y_max: 0.45,
            },
            Table {
                x_min: -0.8,
                x_max: 0.8,
                y_min: 2.0,
                y_max: 2.9,
            },
            Table {
                x_min: 2.6,
                x_max: 3.5,
                y_min: -0.8,
                y_max: 0.8,
            },
        ];
        s.sampling.n_base = 160;
        s
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let bad = |m: &str| Err(SceneError(m.to_string()));
        if self.version != SCENE_VERSION {
            return Err(SceneError(format!(
                "unsupported scene version {} (expected {SCENE_VERSION})",
                self.version
            )));
        }
        if self.tables.is_empty() {
            return bad("at least one table is required");
        }
        for t in &self.tables {
            if !(t.x_min < t.x_max && t.y_min < t.y_max) {
                return bad("table rectangles must have positive extent");
            }
        }
        let r = &self.robot;
        let positive = [
            self.object.radius,
            self.object.height,
            r.gripper_radius,
            r.holding_radius,
            r.standoff,
            r.sweep_step,
            self.quantization,
            self.snap_distance,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("shape, radii, step and tolerances must be positive");
        }
        if r.holding_radius < r.gripper_radius {
            return bad("holding radius must be at least the gripper radius");
        }
        if !(0.0 <= r.reach_min && r.reach_min < r.reach_max) {
            return bad("workspace annulus must satisfy 0 <= reach_min < reach_max");
        }
        if r.lift_min < 0.0 || r.lift_max < r.lift_min {
            return bad("lift range must satisfy 0 <= lift_min <= lift_max");
        }
        let s = &self.sampling;
        if s.d == 0 || s.k == 0 || s.k_prime == 0 || s.n_base == 0 || s.k_base == 0 {
            return bad("D, k, k', N_B and k_B must be at least 1");
        }
        if !(0.0 <= s.base_band[0] && s.base_band[0] <= s.base_band[1]) {
            return bad("base band must satisfy 0 <= near <= far");
        }
        Ok(())
    }

    /// Hex SHA-256 over the geometric content (name and declared objects excluded).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.name.clear();
        canon.declared_objects.clear();
        let bytes = serde_json::to_vec(&canon).expect("scene serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Height of a resting object's center of mass.
    pub fn object_z(&self) -> f64 {
        self.table_height + self.object.height / 2.0
    }

    /// Half side of the square virtual table centered at the virtual base.
    ///
    /// Any point farther out cannot be touched by a local arm motion, which
    /// stays within `reach_max` of the base.
    pub fn virtual_half_extent(&self) -> f64 {
        let r = &self.robot;
        (1.1 * r.reach_max).max(r.reach_max + r.holding_radius + self.object.radius + 1e-6)
    }

    pub fn within_virtual_table(&self, p: &Point3) -> bool {
        let h = self.virtual_half_extent();
        p.x.abs() <= h && p.y.abs() <= h
    }

    pub fn within_any_table(&self, p: &ObjectConfig) -> bool {
        self.tables.iter().any(|t| t.contains(p.x, p.y))
    }

    pub fn resting_conf(&self) -> ArmConf {
        let [x, y, dz] = self.robot.rest;
        ArmConf {
            position: Point3::new(x, y, self.table_height + dz),
            yaw: 0.0,
            role: ArmRole::Resting,
        }
    }

    pub fn in_workspace(&self, p: &Point3) -> bool {
        let d = p.planar_norm();
        d >= self.robot.reach_min && d <= self.robot.reach_max
    }

    /// Up to k′ polylines rest → via → target, each via a vertical lift above
    /// the target. Empty when the target is out of reach or every candidate
    /// dips below the table top.
    pub fn plan_arm_trajectories(&self, target: &ArmConf) -> Vec<Vec<Point3>> {
        if !self.in_workspace(&target.position) {
            return Vec::new();
        }
        let rest = self.resting_conf().position;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(self.seed, &target.position));
        let k = self.sampling.k_prime;
        let (lo, hi) = (self.robot.lift_min, self.robot.lift_max);
        let top = self.table_height + self.object.height;
        let mut out = Vec::with_capacity(k);
        for j in 0..k {
            let u: f64 = rng.gen();
            let lift = lo + (j as f64 + u) * (hi - lo) / k as f64;
            let via = Point3::new(target.position.x, target.position.y, top + lift);
            let poly = vec![rest, via, target.position];
            if self.polyline_clear_of_table(&poly) && self.polyline_in_reach(&poly) {
                out.push(poly);
            }
        }
        out
    }

    fn polyline_clear_of_table(&self, poly: &[Point3]) -> bool {
        // segments are straight, so checking the vertices bounds every sample
        poly.iter().all(|p| p.z >= self.table_height)
    }

    fn polyline_in_reach(&self, poly: &[Point3]) -> bool {
        poly.iter().all(|p| p.planar_norm() <= self.robot.reach_max)
    }

    pub fn sweep_radius(&self, holding: bool) -> f64 {
        if holding {
            self.robot.holding_radius
        } else {
            self.robot.gripper_radius
        }
    }

    /// Swept-volume test of a polyline against an object at `obstacle`.
    pub fn trajectory_collides(&self, waypoints: &[Point3], obstacle: &Point3, holding: bool) -> bool {
        polyline_hits_cylinder(
            waypoints,
            obstacle,
            self.sweep_radius(holding),
            &self.object,
            self.robot.sweep_step,
        )
    }

    /// Grasping poses around a virtual configuration: `k` poses at angles
    /// 2πj/k, at the standoff distance, yawed to face the object.
    pub fn grasp_poses(&self, v: &ObjectConfig) -> Vec<ArmConf> {
        let k = self.sampling.k;
        (0..k)
            .map(|j| {
                let a = 2.0 * PI * j as f64 / k as f64;
                ArmConf {
                    position: Point3::new(
                        v.x + self.robot.standoff * a.cos(),
                        v.y + self.robot.standoff * a.sin(),
                        v.z,
                    ),
                    yaw: normalize_angle(a + PI),
                    role: ArmRole::Grasping,
                }
            })
            .collect()
    }

    /// Object position a grasping pose reaches: one standoff ahead along its yaw.
    pub fn grasped_point(&self, a: &ArmConf) -> ObjectConfig {
        Point3::new(
            a.position.x + self.robot.standoff * a.yaw.cos(),
            a.position.y + self.robot.standoff * a.yaw.sin(),
            a.position.z,
        )
    }
}

fn mix_seed(seed: u64, p: &Point3) -> u64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for v in [p.x, p.y, p.z] {
        h ^= v.to_bits();
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9).rotate_left(31);
    }
    h
}

/// Exact distance from a point to a solid vertical cylinder centered at `c`.
pub fn point_cylinder_distance(p: &Point3, c: &Point3, shape: &ObjectShape) -> f64 {
    let dr = (p.planar_dist(c) - shape.radius).max(0.0);
    let dz = ((p.z - c.z).abs() - shape.height / 2.0).max(0.0);
    dr.hypot(dz)
}

/// Samples each segment at spacing ≤ `step` (endpoints included) and tests
/// the sphere of `radius` at each sample against the cylinder.
///
/// Segments are sampled in a canonical endpoint order, so a polyline and its
/// reversal test exactly the same points.
pub fn polyline_hits_cylinder(
    waypoints: &[Point3],
    obstacle: &Point3,
    radius: f64,
    shape: &ObjectShape,
    step: f64,
) -> bool {
    let reach = radius + shape.radius;
    let zreach = radius + shape.height / 2.0;
    let r2 = radius * radius;
    for w in waypoints.windows(2) {
        let (a, b) = if w[0].key() <= w[1].key() {
            (&w[0], &w[1])
        } else {
            (&w[1], &w[0])
        };
        if obstacle.x < a.x.min(b.x) - reach
            || obstacle.x > a.x.max(b.x) + reach
            || obstacle.y < a.y.min(b.y) - reach
            || obstacle.y > a.y.max(b.y) + reach
            || obstacle.z < a.z.min(b.z) - zreach
            || obstacle.z > a.z.max(b.z) + zreach
        {
            continue;
        }
        let n = ((a.dist(b) / step).ceil() as usize).max(1);
        for i in 0..=n {
            let p = a.lerp(b, i as f64 / n as f64);
            let d = point_cylinder_distance(&p, obstacle, shape);
            if d * d <= r2 {
                return true;
            }
        }
    }
    if waypoints.len() == 1 {
        return point_cylinder_distance(&waypoints[0], obstacle, shape) <= radius;
    }
    false
}
