//! Offline tables that replace motion planning and collision checking at plan
//! time: virtual configurations, arm and base graphs, the vplace map, real and
//! relative object configurations, and the holding/non-holding overlap tables.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{t_b, t_b_inverse, ArmConf, BasePose, Point3, Scene, SceneError};

pub const TABLES_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PrecompileError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("every virtual configuration was pruned; no grasping pose is reachable")]
    NoReachablePoses,
    #[error("no real object configuration falls on a table")]
    NoRealConfigs,
    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: u32 },
    #[error("table cache was built for scene {found}, expected {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("unsupported table cache version {0}")]
    Version(u32),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed table cache: {0}")]
    Format(#[from] serde_json::Error),
}

/// Virtual object configurations that survived pruning, with their index in
/// the original D-point grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VirtualConfigSet {
    pub configs: Vec<Point3>,
    pub grid_index: Vec<u32>,
}

impl VirtualConfigSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }
}

/// Directed arm trajectory between two arm-graph nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmTrajectory {
    pub id: u32,
    pub source: u32,
    pub target: u32,
    /// Id of the same motion reversed.
    pub twin: u32,
    pub waypoints: Vec<Point3>,
}

/// Node 0 is the resting configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmGraph {
    pub nodes: Vec<ArmConf>,
    pub edges: Vec<ArmTrajectory>,
}

impl ArmGraph {
    pub const REST: u32 = 0;
}

/// `vplace`: grasping node → virtual configuration (index into the pruned set).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VPlaceTable {
    pub entries: Vec<(u32, u32)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseEdge {
    pub id: u32,
    pub source: u32,
    pub target: u32,
    pub path: Vec<[f64; 2]>,
}

/// Directed edges; ids `2m` and `2m+1` are the two directions of one connection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseGraph {
    pub nodes: Vec<BasePose>,
    pub edges: Vec<BaseEdge>,
}

impl BaseGraph {
    /// Fraction of nodes in the largest connected component.
    pub fn largest_component_fraction(&self) -> f64 {
        let comps = self.components();
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for c in &comps {
            *counts.entry(*c).or_default() += 1;
        }
        let best = counts.values().copied().max().unwrap_or(0);
        best as f64 / self.nodes.len().max(1) as f64
    }

    /// Component representative per node (union-find).
    pub fn components(&self) -> Vec<usize> {
        let n = self.nodes.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.source as usize), find(&mut parent, e.target as usize));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        (0..n).map(|i| find(&mut parent, i)).collect()
    }

    pub fn degree(&self, node: u32) -> usize {
        self.edges.iter().filter(|e| e.source == node).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealConfigSet {
    pub configs: Vec<Point3>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeConfigSet {
    pub configs: Vec<Point3>,
}

/// Pairs ⟨trajectory id, relative configuration id⟩, sorted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlapTables {
    pub ht: Vec<(u32, u32)>,
    pub nt: Vec<(u32, u32)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecompiledTables {
    pub version: u32,
    pub scene_hash: String,
    /// The scene the tables were built from (name and declared objects cleared).
    pub scene: Scene,
    pub virtual_grid: Vec<Point3>,
    pub virtual_configs: VirtualConfigSet,
    pub arm_graph: ArmGraph,
    pub vplace: VPlaceTable,
    pub base_graph: BaseGraph,
    pub real_configs: RealConfigSet,
    pub relative_configs: RelativeConfigSet,
    pub overlap: OverlapTables,
    pub collision_scans: usize,
}

/// Counts mirroring the compilation-data columns of the benchmark report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrecompileSummary {
    pub tables: usize,
    pub trajectories: usize,
    pub arm_confs: usize,
    pub base_confs: usize,
    pub total_confs: usize,
    pub virtual_confs: usize,
    pub virtual_gp: usize,
    pub relative_confs: usize,
    pub real_confs: usize,
    pub build_seconds: f64,
    pub collision_scans: usize,
    pub base_edges: usize,
    pub largest_component: f64,
}

impl PrecompileSummary {
    pub const HEADER: [&'static str; 10] = [
        "tables",
        "trajectories",
        "arm conf.",
        "base conf.",
        "total conf.",
        "virtual conf.",
        "virtual GP",
        "relative conf.",
        "real conf.",
        "Time(s)",
    ];

    pub fn row(&self) -> [String; 10] {
        [
            self.tables.to_string(),
            self.trajectories.to_string(),
            self.arm_confs.to_string(),
            self.base_confs.to_string(),
            self.total_confs.to_string(),
            self.virtual_confs.to_string(),
            self.virtual_gp.to_string(),
            self.relative_confs.to_string(),
            self.real_confs.to_string(),
            format!("{:.2}", self.build_seconds),
        ]
    }
}

/// Regular D-point grid over the virtual table, cell centers, row-major.
pub fn build_virtual_configs(scene: &Scene) -> Vec<Point3> {
    let d = scene.sampling.d;
    let cols = (1..=d)
        .find(|c| d.is_multiple_of(*c) && c * c >= d)
        .unwrap_or(d);
    let rows = d / cols;
    let h = scene.virtual_half_extent();
    let z = scene.object_z();
    let mut out = Vec::with_capacity(d);
    for r in 0..rows {
        for c in 0..cols {
            let x = -h + (c as f64 + 0.5) * 2.0 * h / cols as f64;
            let y = -h + (r as f64 + 0.5) * 2.0 * h / rows as f64;
            out.push(Point3::new(x, y, z));
        }
    }
    out
}

/// Arm graph, vplace map, and the virtual configurations that keep at least
/// one reachable grasping pose.
pub fn build_arm_graph(
    scene: &Scene,
    grid: &[Point3],
) -> Result<(ArmGraph, VPlaceTable, VirtualConfigSet), PrecompileError> {
    let mut nodes = vec![scene.resting_conf()];
    let mut edges: Vec<ArmTrajectory> = Vec::new();
    let mut vplace = Vec::new();
    let mut kept = VirtualConfigSet {
        configs: Vec::new(),
        grid_index: Vec::new(),
    };
    for (gi, v) in grid.iter().enumerate() {
        let mut any = false;
        for pose in scene.grasp_poses(v) {
            let trajs = scene.plan_arm_trajectories(&pose);
            if trajs.is_empty() {
                continue;
            }
            if !any {
                any = true;
                kept.configs.push(*v);
                kept.grid_index.push(gi as u32);
            }
            let node = nodes.len() as u32;
            nodes.push(pose);
            vplace.push((node, kept.configs.len() as u32 - 1));
            for poly in trajs {
                let id = edges.len() as u32;
                let reversed: Vec<Point3> = poly.iter().rev().copied().collect();
                edges.push(ArmTrajectory {
                    id,
                    source: ArmGraph::REST,
                    target: node,
                    twin: id + 1,
                    waypoints: poly,
                });
                edges.push(ArmTrajectory {
                    id: id + 1,
                    source: node,
                    target: ArmGraph::REST,
                    twin: id,
                    waypoints: reversed,
                });
            }
        }
    }
    if kept.is_empty() {
        return Err(PrecompileError::NoReachablePoses);
    }
    Ok((ArmGraph { nodes, edges }, VPlaceTable { entries: vplace }, kept))
}

fn rect_distance(t: &crate::geometry::Table, x: f64, y: f64) -> f64 {
    let dx = (t.x_min - x).max(0.0).max(x - t.x_max);
    let dy = (t.y_min - y).max(0.0).max(y - t.y_max);
    dx.hypot(dy)
}

/// Seeded base poses in a band around the table edges, each facing its edge,
/// connected greedily to at most k_B nearest neighbours.
pub fn build_base_graph(scene: &Scene) -> BaseGraph {
    let s = &scene.sampling;
    let mut rng = ChaCha8Rng::seed_from_u64(scene.seed ^ 0x6261_7365);
    let perims: Vec<f64> = scene
        .tables
        .iter()
        .map(|t| 2.0 * ((t.x_max - t.x_min) + (t.y_max - t.y_min)))
        .collect();
    let total: f64 = perims.iter().sum();
    let mut nodes = Vec::with_capacity(s.n_base);
    let mut attempts = 0;
    while nodes.len() < s.n_base && attempts < 1000 * s.n_base {
        attempts += 1;
        let mut u = rng.gen_range(0.0..total);
        let mut ti = 0;
        while ti + 1 < perims.len() && u >= perims[ti] {
            u -= perims[ti];
            ti += 1;
        }
        let t = &scene.tables[ti];
        let (w, h) = (t.x_max - t.x_min, t.y_max - t.y_min);
        // walk the perimeter: bottom, right, top, left
        let (px, py, nx, ny) = if u < w {
            (t.x_min + u, t.y_min, 0.0, -1.0)
        } else if u < w + h {
            (t.x_max, t.y_min + (u - w), 1.0, 0.0)
        } else if u < 2.0 * w + h {
            (t.x_max - (u - w - h), t.y_max, 0.0, 1.0)
        } else {
            (t.x_min, t.y_max - (u - 2.0 * w - h), -1.0, 0.0)
        };
        let d = rng.gen_range(s.base_band[0]..=s.base_band[1]);
        let (x, y) = (px + nx * d, py + ny * d);
        if scene
            .tables
            .iter()
            .any(|t| rect_distance(t, x, y) < s.base_band[0] - 1e-9)
        {
            continue;
        }
        let theta = (-ny).atan2(-nx);
        nodes.push(BasePose::new(x, y, theta));
    }

    let n = nodes.len();
    let mut degree = vec![0usize; n];
    let mut connected = std::collections::HashSet::new();
    let mut edges = Vec::new();
    for i in 0..n {
        let mut nbrs: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| ((nodes[i].x - nodes[j].x).hypot(nodes[i].y - nodes[j].y), j))
            .collect();
        nbrs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (_, j) in nbrs.into_iter().take(s.k_base) {
            if degree[i] >= s.k_base {
                break;
            }
            let key = (i.min(j), i.max(j));
            if degree[j] >= s.k_base || connected.contains(&key) {
                continue;
            }
            connected.insert(key);
            degree[i] += 1;
            degree[j] += 1;
            let id = edges.len() as u32;
            let (a, b) = (&nodes[i], &nodes[j]);
            edges.push(BaseEdge {
                id,
                source: i as u32,
                target: j as u32,
                path: vec![[a.x, a.y], [b.x, b.y]],
            });
            edges.push(BaseEdge {
                id: id + 1,
                source: j as u32,
                target: i as u32,
                path: vec![[b.x, b.y], [a.x, a.y]],
            });
        }
    }
    BaseGraph { nodes, edges }
}

/// Grid cell of a point for real-configuration identity.
pub fn quantize(p: &Point3, q: f64) -> (i64, i64) {
    ((p.x / q).round() as i64, (p.y / q).round() as i64)
}

/// `{T_B(C)}` over all bases and virtual configurations that land on a table.
/// The first pair reaching a grid cell provides its representative point.
pub fn build_real_configs(
    scene: &Scene,
    base: &BaseGraph,
    virtuals: &VirtualConfigSet,
) -> Result<RealConfigSet, PrecompileError> {
    let mut index: HashMap<(i64, i64), u32> = HashMap::new();
    let mut configs = Vec::new();
    for b in &base.nodes {
        for c in &virtuals.configs {
            let p = t_b(b, c);
            if !scene.within_any_table(&p) {
                continue;
            }
            index.entry(quantize(&p, scene.quantization)).or_insert_with(|| {
                configs.push(p);
                configs.len() as u32 - 1
            });
        }
    }
    if configs.is_empty() {
        return Err(PrecompileError::NoRealConfigs);
    }
    Ok(RealConfigSet { configs })
}

fn exact_key(p: &Point3) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

/// `{T_B⁻¹(C)}` over all bases and real configurations, restricted to the
/// virtual table. Points are kept exactly, so table lookups reproduce direct
/// geometry bit for bit.
pub fn build_relative_configs(
    scene: &Scene,
    base: &BaseGraph,
    real: &RealConfigSet,
) -> RelativeConfigSet {
    let mut seen = std::collections::HashSet::new();
    let mut configs = Vec::new();
    for b in &base.nodes {
        for c in &real.configs {
            let p = t_b_inverse(b, c);
            if scene.within_virtual_table(&p) && seen.insert(exact_key(&p)) {
                configs.push(p);
            }
        }
    }
    RelativeConfigSet { configs }
}

/// One scan per (trajectory, holding flag), each testing every relative
/// configuration. Returns the tables and the number of scans performed.
pub fn build_overlap_tables(
    scene: &Scene,
    arm: &ArmGraph,
    relative: &RelativeConfigSet,
) -> (OverlapTables, usize) {
    let scans = AtomicUsize::new(0);
    let scan = |t: &ArmTrajectory, holding: bool| -> Vec<(u32, u32)> {
        scans.fetch_add(1, Ordering::Relaxed);
        relative
            .configs
            .iter()
            .enumerate()
            .filter(|(_, c)| scene.trajectory_collides(&t.waypoints, c, holding))
            .map(|(i, _)| (t.id, i as u32))
            .collect()
    };
    let per_traj: Vec<(Vec<(u32, u32)>, Vec<(u32, u32)>)> = arm
        .edges
        .par_iter()
        .map(|t| (scan(t, true), scan(t, false)))
        .collect();
    let mut ht = Vec::new();
    let mut nt = Vec::new();
    for (h, n) in per_traj {
        ht.extend(h);
        nt.extend(n);
    }
    ht.sort_unstable();
    nt.sort_unstable();
    (OverlapTables { ht, nt }, scans.into_inner())
}

impl PrecompiledTables {
    /// Runs the whole preprocessing pipeline. Deterministic for a given scene.
    pub fn build(scene: &Scene) -> Result<(PrecompiledTables, PrecompileSummary), PrecompileError> {
        scene.validate()?;
        let start = Instant::now();
        let mut canon = scene.clone();
        canon.name.clear();
        canon.declared_objects.clear();
        let grid = build_virtual_configs(&canon);
        let (arm_graph, vplace, virtual_configs) = build_arm_graph(&canon, &grid)?;
        let base_graph = build_base_graph(&canon);
        let real_configs = build_real_configs(&canon, &base_graph, &virtual_configs)?;
        let relative_configs = build_relative_configs(&canon, &base_graph, &real_configs);
        let (overlap, collision_scans) = build_overlap_tables(&canon, &arm_graph, &relative_configs);
        let tables = PrecompiledTables {
            version: TABLES_VERSION,
            scene_hash: scene.hash(),
            scene: canon,
            virtual_grid: grid,
            virtual_configs,
            arm_graph,
            vplace,
            base_graph,
            real_configs,
            relative_configs,
            overlap,
            collision_scans,
        };
        let summary = tables.summary(start.elapsed().as_secs_f64());
        log::info!(
            "precompiled {} trajectories, {} bases ({:.0}% in largest component), {} real / {} relative configurations",
            summary.trajectories,
            summary.base_confs,
            100.0 * summary.largest_component,
            summary.real_confs,
            summary.relative_confs
        );
        Ok((tables, summary))
    }

    pub fn summary(&self, build_seconds: f64) -> PrecompileSummary {
        let arm_confs = self.arm_graph.nodes.len();
        let base_confs = self.base_graph.nodes.len();
        PrecompileSummary {
            tables: self.scene.tables.len(),
            trajectories: self.arm_graph.edges.len(),
            arm_confs,
            base_confs,
            total_confs: arm_confs * base_confs,
            virtual_confs: self.virtual_configs.len(),
            virtual_gp: arm_confs - 1,
            relative_confs: self.relative_configs.configs.len(),
            real_confs: self.real_configs.configs.len(),
            build_seconds,
            collision_scans: self.collision_scans,
            base_edges: self.base_graph.edges.len(),
            largest_component: self.base_graph.largest_component_fraction(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("tables serialize")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PrecompiledTables, PrecompileError> {
        let t: PrecompiledTables = serde_json::from_slice(bytes)?;
        if t.version != TABLES_VERSION {
            return Err(PrecompileError::Version(t.version));
        }
        Ok(t)
    }

    pub fn save(&self, path: &Path) -> Result<(), PrecompileError> {
        std::fs::write(path, self.to_bytes()).map_err(|source| PrecompileError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<PrecompiledTables, PrecompileError> {
        let bytes = std::fs::read(path).map_err(|source| PrecompileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }

    pub fn check_scene(&self, scene: &Scene) -> Result<(), PrecompileError> {
        let expected = scene.hash();
        if expected != self.scene_hash {
            return Err(PrecompileError::HashMismatch {
                expected,
                found: self.scene_hash.clone(),
            });
        }
        Ok(())
    }
}

/// Dense bit matrix `rows × cols`.
#[derive(Clone, Debug)]
struct BitMatrix {
    cols: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    fn new(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            words: vec![0; (rows * cols).div_ceil(64)],
        }
    }

    fn set(&mut self, r: usize, c: usize) {
        let i = r * self.cols + c;
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, r: usize, c: usize) -> bool {
        let i = r * self.cols + c;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
}

/// Configuration argument of the `@nonoverlap` procedure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConfArg {
    /// The object is in the gripper and moves with it.
    Held,
    Real(u32),
}

/// Loaded tables with the constant-time indexes the planner queries.
#[derive(Clone, Debug)]
pub struct PlanningTables {
    pub data: PrecompiledTables,
    vplace: Vec<Option<u32>>,
    pose: Vec<Option<u32>>,
    relative_of: Vec<Option<u32>>,
    real_index: HashMap<(i64, i64), u32>,
    ht: BitMatrix,
    nt: BitMatrix,
}

impl PlanningTables {
    pub fn new(data: PrecompiledTables) -> PlanningTables {
        let scene = &data.scene;
        let n_arm = data.arm_graph.nodes.len();
        let n_base = data.base_graph.nodes.len();
        let n_real = data.real_configs.configs.len();
        let n_rel = data.relative_configs.configs.len();
        let n_traj = data.arm_graph.edges.len();

        let mut vplace = vec![None; n_arm];
        for &(a, v) in &data.vplace.entries {
            vplace[a as usize] = Some(v);
        }
        let real_index: HashMap<(i64, i64), u32> = data
            .real_configs
            .configs
            .iter()
            .enumerate()
            .map(|(i, p)| (quantize(p, scene.quantization), i as u32))
            .collect();
        let mut pose = vec![None; n_base * n_arm];
        for (b, bp) in data.base_graph.nodes.iter().enumerate() {
            for a in 0..n_arm {
                if let Some(v) = vplace[a] {
                    let p = t_b(bp, &data.virtual_configs.configs[v as usize]);
                    if scene.within_any_table(&p) {
                        pose[b * n_arm + a] = real_index.get(&quantize(&p, scene.quantization)).copied();
                    }
                }
            }
        }
        let rel_index: HashMap<(u64, u64), u32> = data
            .relative_configs
            .configs
            .iter()
            .enumerate()
            .map(|(i, p)| (exact_key(p), i as u32))
            .collect();
        let mut relative_of = vec![None; n_base * n_real];
        for (b, bp) in data.base_graph.nodes.iter().enumerate() {
            for (c, cp) in data.real_configs.configs.iter().enumerate() {
                let p = t_b_inverse(bp, cp);
                relative_of[b * n_real + c] = rel_index.get(&exact_key(&p)).copied();
            }
        }
        let mut ht = BitMatrix::new(n_traj, n_rel);
        let mut nt = BitMatrix::new(n_traj, n_rel);
        for &(t, c) in &data.overlap.ht {
            ht.set(t as usize, c as usize);
        }
        for &(t, c) in &data.overlap.nt {
            nt.set(t as usize, c as usize);
        }
        PlanningTables {
            data,
            vplace,
            pose,
            relative_of,
            real_index,
            ht,
            nt,
        }
    }

    pub fn scene(&self) -> &Scene {
        &self.data.scene
    }

    pub fn n_bases(&self) -> usize {
        self.data.base_graph.nodes.len()
    }

    pub fn n_arm_confs(&self) -> usize {
        self.data.arm_graph.nodes.len()
    }

    pub fn n_trajectories(&self) -> usize {
        self.data.arm_graph.edges.len()
    }

    pub fn n_real(&self) -> usize {
        self.data.real_configs.configs.len()
    }

    pub fn real_point(&self, c: u32) -> Point3 {
        self.data.real_configs.configs[c as usize]
    }

    fn check(&self, kind: &'static str, id: u32, n: usize) -> Result<(), PrecompileError> {
        if (id as usize) < n {
            Ok(())
        } else {
            Err(PrecompileError::UnknownId { kind, id })
        }
    }

    pub fn vplace(&self, a: u32) -> Result<Option<u32>, PrecompileError> {
        self.check("arm configuration", a, self.n_arm_confs())?;
        Ok(self.vplace[a as usize])
    }

    /// `@pose(B, A)`: real configuration reached by arm conf `A` at base `B`,
    /// `None` for ⊥.
    pub fn proc_pose(&self, b: u32, a: u32) -> Result<Option<u32>, PrecompileError> {
        self.check("base", b, self.n_bases())?;
        self.check("arm configuration", a, self.n_arm_confs())?;
        Ok(self.pose[b as usize * self.n_arm_confs() + a as usize])
    }

    pub fn proc_graspable(&self, b: u32, a: u32, c: ConfArg) -> Result<bool, PrecompileError> {
        let pose = self.proc_pose(b, a)?;
        Ok(match c {
            ConfArg::Held => false,
            ConfArg::Real(c) => {
                self.check("real configuration", c, self.n_real())?;
                pose == Some(c)
            }
        })
    }

    pub fn proc_placeable(&self, b: u32, a: u32) -> Result<bool, PrecompileError> {
        Ok(self.proc_pose(b, a)?.is_some())
    }

    /// Relative configuration of real configuration `c` seen from base `b`.
    pub fn relative_of(&self, b: u32, c: u32) -> Result<Option<u32>, PrecompileError> {
        self.check("base", b, self.n_bases())?;
        self.check("real configuration", c, self.n_real())?;
        Ok(self.relative_of[b as usize * self.n_real() + c as usize])
    }

    /// `@nonoverlap(B, Tr, C, Hold)` by table lookup. `traj = None` is the
    /// dummy initial trajectory.
    pub fn proc_nonoverlap(
        &self,
        b: u32,
        traj: Option<u32>,
        c: ConfArg,
        holding: bool,
    ) -> Result<bool, PrecompileError> {
        self.check("base", b, self.n_bases())?;
        let Some(t) = traj else { return Ok(true) };
        self.check("trajectory", t, self.n_trajectories())?;
        let ConfArg::Real(c) = c else { return Ok(true) };
        let Some(rel) = self.relative_of(b, c)? else {
            return Ok(true);
        };
        let table = if holding { &self.ht } else { &self.nt };
        Ok(!table.get(t as usize, rel as usize))
    }

    /// The same predicate computed from geometry, without the tables.
    pub fn geometric_nonoverlap(
        &self,
        b: u32,
        traj: Option<u32>,
        c: ConfArg,
        holding: bool,
    ) -> Result<bool, PrecompileError> {
        self.check("base", b, self.n_bases())?;
        let Some(t) = traj else { return Ok(true) };
        self.check("trajectory", t, self.n_trajectories())?;
        let ConfArg::Real(c) = c else { return Ok(true) };
        self.check("real configuration", c, self.n_real())?;
        let base = &self.data.base_graph.nodes[b as usize];
        let local = t_b_inverse(base, &self.real_point(c));
        let wp = &self.data.arm_graph.edges[t as usize].waypoints;
        Ok(!self.scene().trajectory_collides(wp, &local, holding))
    }

    /// Nearest real configuration within the snap distance.
    pub fn snap(&self, x: f64, y: f64) -> Option<(u32, f64)> {
        let q = Point3::new(x, y, self.scene().object_z());
        if let Some(&id) = self.real_index.get(&quantize(&q, self.scene().quantization)) {
            let d = self.real_point(id).planar_dist(&q);
            if d <= self.scene().snap_distance {
                // an exact cell hit can still have a closer neighbour
                let best = self.nearest(&q);
                return Some(best.filter(|b| b.1 <= d).unwrap_or((id, d)));
            }
        }
        self.nearest(&q).filter(|(_, d)| *d <= self.scene().snap_distance)
    }

    fn nearest(&self, q: &Point3) -> Option<(u32, f64)> {
        self.data
            .real_configs
            .configs
            .iter()
            .enumerate()
            .map(|(i, p)| (i as u32, p.planar_dist(q)))
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }
}
