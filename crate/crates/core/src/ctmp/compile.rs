use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::instance::{valid_object_name, CompileError, CtmpInstance};
use crate::fstrips::{
    parse_problem_with, ActionId, FsError, GroundProblem, ProcedureRegistry, State, SymId, Symbols,
    Value, VarId,
};
use crate::precompile::{ArmGraph, ConfArg, PlanningTables};

/// How `@non-overlap` is answered.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcMode {
    /// Precompiled overlap tables (planning).
    Lookup,
    /// Swept-volume geometry on every call (validation).
    DirectGeometry,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Block {
    start: u32,
    len: u32,
}

impl Block {
    fn index(&self, v: Value) -> Option<u32> {
        let Value::Sym(SymId(s)) = v else { return None };
        (s >= self.start && s < self.start + self.len).then(|| s - self.start)
    }

    fn sym(&self, i: u32) -> Value {
        debug_assert!(i < self.len);
        Value::Sym(SymId(self.start + i))
    }
}

/// Where each kind of constant lives in the symbol table. Constants are
/// interned in contiguous blocks so procedures decode ids by subtraction.
#[derive(Clone, Debug)]
pub struct SymbolLayout {
    bases: Block,
    arms: Block,
    base_edges: Block,
    trajs: Block,
    objects: Block,
    confs: Block,
    dummy: Value,
    none: Value,
    held: Value,
}

pub fn arm_name(i: u32) -> String {
    if i == ArmGraph::REST {
        "ca0".into()
    } else {
        format!("a{i}")
    }
}

fn block(sy: &mut Symbols, names: impl IntoIterator<Item = String>) -> Block {
    let start = sy.len() as u32;
    let mut len = 0;
    for n in names {
        let id = sy.intern(&n);
        debug_assert_eq!(id.0, start + len, "{n} already interned");
        len += 1;
    }
    Block { start, len }
}

impl SymbolLayout {
    fn build(tables: &PlanningTables, objects: &[String]) -> Result<(SymbolLayout, Symbols), CompileError> {
        let d = &tables.data;
        let mut sy = Symbols::new();
        let bases = block(&mut sy, (0..d.base_graph.nodes.len()).map(|i| format!("b{i}")));
        let arms = block(&mut sy, (0..d.arm_graph.nodes.len() as u32).map(arm_name));
        let base_edges = block(&mut sy, (0..d.base_graph.edges.len()).map(|i| format!("e{i}")));
        let dummy = Value::Sym(sy.intern("t-dummy"));
        let trajs = block(&mut sy, (0..d.arm_graph.edges.len()).map(|i| format!("t{i}")));
        let none = Value::Sym(sy.intern("None"));
        let held = Value::Sym(sy.intern("c-held"));
        let confs = block(&mut sy, (0..d.real_configs.configs.len()).map(|i| format!("c{i}")));
        for o in objects {
            if !valid_object_name(o) || sy.get(o).is_some() {
                return Err(CompileError::BadName(o.clone()));
            }
        }
        let objects = block(&mut sy, objects.iter().cloned());
        Ok((
            SymbolLayout {
                bases,
                arms,
                base_edges,
                trajs,
                objects,
                confs,
                dummy,
                none,
                held,
            },
            sy,
        ))
    }

    pub fn base(&self, v: Value) -> Option<u32> {
        self.bases.index(v)
    }

    pub fn base_sym(&self, b: u32) -> Value {
        self.bases.sym(b)
    }

    pub fn arm(&self, v: Value) -> Option<u32> {
        self.arms.index(v)
    }

    pub fn arm_sym(&self, a: u32) -> Value {
        self.arms.sym(a)
    }

    pub fn base_edge(&self, v: Value) -> Option<u32> {
        self.base_edges.index(v)
    }

    /// `Some(None)` for the dummy trajectory.
    pub fn traj(&self, v: Value) -> Option<Option<u32>> {
        if v == self.dummy {
            Some(None)
        } else {
            self.trajs.index(v).map(Some)
        }
    }

    pub fn object(&self, v: Value) -> Option<u32> {
        self.objects.index(v)
    }

    pub fn object_sym(&self, o: u32) -> Value {
        self.objects.sym(o)
    }

    /// `Some(None)` when the gripper is empty.
    pub fn holding(&self, v: Value) -> Option<Option<u32>> {
        if v == self.none {
            Some(None)
        } else {
            self.objects.index(v).map(Some)
        }
    }

    pub fn none(&self) -> Value {
        self.none
    }

    pub fn conf(&self, v: Value) -> Option<ConfArg> {
        if v == self.held {
            Some(ConfArg::Held)
        } else {
            self.confs.index(v).map(ConfArg::Real)
        }
    }

    pub fn conf_sym(&self, c: ConfArg) -> Value {
        match c {
            ConfArg::Held => self.held,
            ConfArg::Real(i) => self.confs.sym(i),
        }
    }
}

fn registry(layout: &Arc<SymbolLayout>, tables: &Arc<PlanningTables>, mode: ProcMode) -> ProcedureRegistry {
    let mut reg = ProcedureRegistry::new();
    let (l, t) = (layout.clone(), tables.clone());
    reg.register("@source-b", move |a: &[Value]| {
        let e = t.data.base_graph.edges.get(l.base_edge(a[0])? as usize)?;
        Some(l.base_sym(e.source))
    });
    let (l, t) = (layout.clone(), tables.clone());
    reg.register("@target-b", move |a: &[Value]| {
        let e = t.data.base_graph.edges.get(l.base_edge(a[0])? as usize)?;
        Some(l.base_sym(e.target))
    });
    let (l, t) = (layout.clone(), tables.clone());
    reg.register("@source-a", move |a: &[Value]| {
        let e = t.data.arm_graph.edges.get(l.traj(a[0])?? as usize)?;
        Some(l.arm_sym(e.source))
    });
    let (l, t) = (layout.clone(), tables.clone());
    reg.register("@target-a", move |a: &[Value]| {
        let e = t.data.arm_graph.edges.get(l.traj(a[0])?? as usize)?;
        Some(l.arm_sym(e.target))
    });
    let (l, t) = (layout.clone(), tables.clone());
    reg.register("@graspable", move |a: &[Value]| {
        let ok = t
            .proc_graspable(l.base(a[0])?, l.arm(a[1])?, l.conf(a[2])?)
            .ok()?;
        Some(Value::Bool(ok))
    });
    let (l, t) = (layout.clone(), tables.clone());
    reg.register("@placeable", move |a: &[Value]| {
        Some(Value::Bool(t.proc_placeable(l.base(a[0])?, l.arm(a[1])?).ok()?))
    });
    let (l, t) = (layout.clone(), tables.clone());
    reg.register("@place", move |a: &[Value]| {
        let c = t.proc_pose(l.base(a[0])?, l.arm(a[1])?).ok()??;
        Some(l.conf_sym(ConfArg::Real(c)))
    });
    let (l, t) = (layout.clone(), tables.clone());
    reg.register("@non-overlap", move |a: &[Value]| {
        let (b, tr, c) = (l.base(a[0])?, l.traj(a[1])?, l.conf(a[2])?);
        let holding = l.holding(a[3])?.is_some();
        let ok = match mode {
            ProcMode::Lookup => t.proc_nonoverlap(b, tr, c, holding),
            ProcMode::DirectGeometry => t.geometric_nonoverlap(b, tr, c, holding),
        };
        Some(Value::Bool(ok.ok()?))
    });
    reg
}

/// Ground action of the compiled problem, decoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtmpAction {
    MoveBase(u32),
    MoveArm(u32),
    Grasp(u32),
    Place(u32),
}

/// Distance an instance point moved when snapped to a real configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapReport {
    pub what: String,
    pub config: u32,
    pub distance: f64,
}

/// State variable ids of the compiled problem.
#[derive(Clone, Debug)]
pub struct CtmpVars {
    pub base: VarId,
    pub arm: VarId,
    pub hold: VarId,
    pub traj: VarId,
    pub conf: Vec<VarId>,
}

/// A compiled instance: the ground Functional STRIPS problem plus the
/// bookkeeping needed to read CTMP quantities off its states.
#[derive(Clone)]
pub struct CompiledInstance {
    pub ground: GroundProblem,
    pub layout: Arc<SymbolLayout>,
    pub tables: Arc<PlanningTables>,
    pub mode: ProcMode,
    pub objects: Vec<String>,
    pub initial_base: u32,
    pub initial_configs: Vec<u32>,
    /// (object index, goal real configuration).
    pub goals: Vec<(u32, u32)>,
    pub snaps: Vec<SnapReport>,
    pub vars: CtmpVars,
    pub text: String,
    kinds: Vec<CtmpAction>,
}

impl std::fmt::Debug for CompiledInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompiledInstance")
            .field("objects", &self.objects)
            .field("goals", &self.goals)
            .field("actions", &self.ground.actions.len())
            .finish()
    }
}

fn problem_text(
    t: &PlanningTables,
    objects: &[String],
    initial_base: u32,
    initial_configs: &[u32],
    goals: &[(u32, u32)],
) -> String {
    let d = &t.data;
    let join = |it: &mut dyn Iterator<Item = String>| it.collect::<Vec<_>>().join(" ");
    let bases = join(&mut (0..d.base_graph.nodes.len()).map(|i| format!("b{i}")));
    let arms = join(&mut (0..d.arm_graph.nodes.len() as u32).map(arm_name));
    let edges = join(&mut (0..d.base_graph.edges.len()).map(|i| format!("e{i}")));
    let trajs = join(&mut (0..d.arm_graph.edges.len()).map(|i| format!("t{i}")));
    let confs = join(&mut (0..d.real_configs.configs.len()).map(|i| format!("c{i}")));
    let objs = objects.join(" ");
    let has_objects = !objects.is_empty();

    let mut s = String::new();
    let _ = writeln!(s, "(:types");
    let _ = writeln!(s, "  (base {bases})");
    let _ = writeln!(s, "  (arm {arms})");
    let _ = writeln!(s, "  (base-edge {edges})");
    let _ = writeln!(s, "  (arm-traj {trajs})");
    let _ = writeln!(s, "  (traj t-dummy {trajs})");
    if has_objects {
        let _ = writeln!(s, "  (object-id {objs})");
        let _ = writeln!(s, "  (holding None {objs})");
    } else {
        let _ = writeln!(s, "  (holding None)");
    }
    let _ = writeln!(s, "  (conf c-held {confs}))");
    let _ = writeln!(s);
    let _ = writeln!(s, "(:fluents (Base - base) (Arm - arm) (Hold - holding) (Traj - traj)");
    if has_objects {
        let _ = writeln!(s, "  (Conf object-id - conf))");
    } else {
        let _ = writeln!(s, ")");
    }
    s.push_str(
        r#"
(:procedures
  (@source-b base-edge - base) (@target-b base-edge - base)
  (@source-a arm-traj - arm) (@target-a arm-traj - arm)
  (@placeable base arm - bool)
  (@graspable base arm conf - bool)
  (@place base arm - conf)
  (@non-overlap base traj conf holding - bool))

(:action MoveBase
  :parameters (?e - base-edge)
  :prec (and (= Arm ca0)
             (= Base (@source-b ?e)))
  :eff (:= Base (@target-b ?e)))

(:action MoveArm
  :parameters (?t - arm-traj)
  :prec (and (= Arm (@source-a ?t))
             (or (= (@target-a ?t) ca0) (@placeable Base (@target-a ?t))))
  :eff (and (:= Arm (@target-a ?t))
            (:= Traj ?t)))
"#,
    );
    if has_objects {
        s.push_str(
            r#"
(:action Grasp
  :parameters (?o - object-id)
  :prec (and (= Hold None)
             (@graspable Base Arm (Conf ?o)))
  :eff (and (:= Hold ?o)
            (:= (Conf ?o) c-held)))

(:action Place
  :parameters (?o - object-id)
  :prec (and (= Hold ?o)
             (@placeable Base Arm))
  :eff (and (:= Hold None)
            (:= (Conf ?o) (@place Base Arm))))

(:state-constraint
  :parameter (?o - object-id)
  (@non-overlap Base Traj (Conf ?o) Hold))
"#,
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "(:init");
    let _ = writeln!(s, "  (= Base b{initial_base}) (= Arm ca0) (= Hold None) (= Traj t-dummy)");
    for (o, c) in objects.iter().zip(initial_configs) {
        let _ = writeln!(s, "  (= (Conf {o}) c{c})");
    }
    let _ = writeln!(s, ")");
    let _ = writeln!(s);
    let _ = write!(s, "(:goal (and");
    for &(o, c) in goals {
        let _ = write!(s, " (= (Conf {}) c{c})", objects[o as usize]);
    }
    let _ = writeln!(s, "))");
    s
}

/// Builds the planning problem for `instance` over `tables`.
pub fn compile(
    instance: &CtmpInstance,
    tables: Arc<PlanningTables>,
    mode: ProcMode,
) -> Result<CompiledInstance, CompileError> {
    if instance.scene_hash != tables.data.scene_hash {
        return Err(CompileError::HashMismatch {
            expected: tables.data.scene_hash.clone(),
            found: instance.scene_hash.clone(),
        });
    }
    if instance.initial_base as usize >= tables.n_bases() {
        return Err(CompileError::UnknownBase(instance.initial_base));
    }

    let mut snaps = Vec::new();
    let mut objects = Vec::new();
    let mut initial_configs = Vec::new();
    let mut taken: HashMap<u32, usize> = HashMap::new();
    for (i, o) in instance.objects.iter().enumerate() {
        if objects.contains(&o.name) {
            return Err(CompileError::DuplicateObject(o.name.clone()));
        }
        let [x, y] = o.position;
        let (c, dist) = tables.snap(x, y).ok_or_else(|| CompileError::Snap {
            what: format!("object `{}`", o.name),
            x,
            y,
        })?;
        if let Some(&j) = taken.get(&c) {
            return Err(CompileError::SharedConfig {
                first: instance.objects[j].name.clone(),
                second: o.name.clone(),
                config: c,
            });
        }
        taken.insert(c, i);
        snaps.push(SnapReport {
            what: format!("object `{}`", o.name),
            config: c,
            distance: dist,
        });
        objects.push(o.name.clone());
        initial_configs.push(c);
    }

    let mut goals: Vec<(u32, u32)> = Vec::new();
    for g in &instance.goals {
        let o = objects
            .iter()
            .position(|n| *n == g.object)
            .ok_or_else(|| CompileError::UnknownObject(g.object.clone()))? as u32;
        if goals.iter().any(|&(p, _)| p == o) {
            return Err(CompileError::DuplicateGoal(g.object.clone()));
        }
        let c = match (g.config, g.point) {
            (Some(c), None) => {
                if c as usize >= tables.n_real() {
                    return Err(CompileError::GoalConfig {
                        object: g.object.clone(),
                        config: c,
                    });
                }
                c
            }
            (None, Some([x, y])) => {
                let what = format!("goal of `{}`", g.object);
                let (c, dist) = tables
                    .snap(x, y)
                    .ok_or_else(|| CompileError::Snap { what: what.clone(), x, y })?;
                snaps.push(SnapReport {
                    what,
                    config: c,
                    distance: dist,
                });
                c
            }
            _ => {
                return Err(CompileError::GoalSpec {
                    object: g.object.clone(),
                    msg: "give exactly one of `config` and `point`".into(),
                })
            }
        };
        goals.push((o, c));
    }

    let (layout, symbols) = SymbolLayout::build(&tables, &objects)?;
    let layout = Arc::new(layout);
    let text = problem_text(&tables, &objects, instance.initial_base, &initial_configs, &goals);
    let reg = registry(&layout, &tables, mode);
    let problem = parse_problem_with(&text, symbols, &reg)?;
    let ground = problem.ground().map_err(|e| match e {
        FsError::Initial(msg) => CompileError::InitialViolation(msg),
        e => CompileError::Fs(e),
    })?;

    let p = &ground.problem;
    let var = |name: &str, args: &[&str]| p.var_id(name, args).expect("declared state variable");
    let vars = CtmpVars {
        base: var("Base", &[]),
        arm: var("Arm", &[]),
        hold: var("Hold", &[]),
        traj: var("Traj", &[]),
        conf: objects.iter().map(|o| var("Conf", &[o.as_str()])).collect(),
    };
    let kinds = ground
        .actions
        .iter()
        .map(|a| {
            let arg = a.args[0];
            let name = &ground.problem.actions[a.schema].name;
            match name.as_str() {
                "MoveBase" => CtmpAction::MoveBase(layout.base_edge(arg).unwrap()),
                "MoveArm" => CtmpAction::MoveArm(layout.traj(arg).flatten().unwrap()),
                "Grasp" => CtmpAction::Grasp(layout.object(arg).unwrap()),
                _ => CtmpAction::Place(layout.object(arg).unwrap()),
            }
        })
        .collect();

    Ok(CompiledInstance {
        ground,
        layout,
        tables,
        mode,
        objects,
        initial_base: instance.initial_base,
        initial_configs,
        goals,
        snaps,
        vars,
        text,
        kinds,
    })
}

impl CompiledInstance {
    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn kind(&self, a: ActionId) -> CtmpAction {
        self.kinds[a.0 as usize]
    }

    /// |E_base| + |E_arm| + 2n.
    pub fn expected_action_count(&self) -> usize {
        self.tables.data.base_graph.edges.len() + self.tables.n_trajectories() + 2 * self.n_objects()
    }

    pub fn base(&self, s: &State) -> u32 {
        self.layout.base(s.get(self.vars.base)).expect("base value")
    }

    pub fn arm(&self, s: &State) -> u32 {
        self.layout.arm(s.get(self.vars.arm)).expect("arm value")
    }

    pub fn traj(&self, s: &State) -> Option<u32> {
        self.layout.traj(s.get(self.vars.traj)).expect("traj value")
    }

    pub fn held(&self, s: &State) -> Option<u32> {
        self.layout.holding(s.get(self.vars.hold)).expect("hold value")
    }

    pub fn conf(&self, s: &State, o: u32) -> ConfArg {
        self.layout
            .conf(s.get(self.vars.conf[o as usize]))
            .expect("conf value")
    }

    pub fn object_index(&self, name: &str) -> Option<u32> {
        self.objects.iter().position(|n| n == name).map(|i| i as u32)
    }

    /// Resolves plan action names (`(MoveArm t17)` or `MoveArm t17`).
    pub fn parse_plan<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<ActionId>, CompileError> {
        names
            .iter()
            .map(|n| {
                self.ground
                    .action_by_name(n.as_ref())
                    .ok_or_else(|| CompileError::UnknownAction(n.as_ref().to_string()))
            })
            .collect()
    }

    pub fn action_names(&self, plan: &[ActionId]) -> Vec<String> {
        plan.iter().map(|&a| self.ground.action(a).name.clone()).collect()
    }

    /// Action ids by schema, for the derived search features.
    pub fn grasp_action(&self, o: u32) -> ActionId {
        self.find(CtmpAction::Grasp(o))
    }

    pub fn place_action(&self, o: u32) -> ActionId {
        self.find(CtmpAction::Place(o))
    }

    fn find(&self, k: CtmpAction) -> ActionId {
        ActionId(self.kinds.iter().position(|&x| x == k).expect("action exists") as u32)
    }
}
