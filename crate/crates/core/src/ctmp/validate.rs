use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::compile::{compile, CompiledInstance, CtmpAction, ProcMode};
use super::instance::{read_json, write_json, CompileError, CtmpInstance};
use crate::fstrips::{ActionId, Formula};
use crate::geometry::{t_b, Point3};
use crate::precompile::{ConfArg, PlanningTables};

/// One executable step of a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum TraceStep {
    MoveBase {
        action: String,
        edge: u32,
        path: Vec<[f64; 2]>,
    },
    MoveArm {
        action: String,
        trajectory: u32,
        base: u32,
        /// World-frame waypoints of the gripper.
        waypoints: Vec<Point3>,
    },
    Grasp {
        action: String,
        object: String,
    },
    Place {
        action: String,
        object: String,
    },
}

/// Plan as written to disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    #[serde(default)]
    pub instance: String,
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStep>>,
}

impl PlanFile {
    pub fn load(path: &Path) -> Result<PlanFile, CompileError> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<(), CompileError> {
        write_json(path, self)
    }
}

/// Outcome of replaying a plan with direct geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub valid: bool,
    pub steps: usize,
    /// 0-based index of the first failing step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    pub reason: String,
    pub goal_reached: bool,
}

/// Replays `actions` under the compiled semantics, answering every
/// `@non-overlap` query from geometry rather than the overlap tables.
pub fn validate_plan<S: AsRef<str>>(
    instance: &CtmpInstance,
    tables: Arc<PlanningTables>,
    actions: &[S],
) -> Result<Verdict, CompileError> {
    let ci = compile(instance, tables, ProcMode::DirectGeometry)?;
    let plan = ci.parse_plan(actions)?;
    replay_verdict(&ci, &plan)
}

pub fn replay_verdict(ci: &CompiledInstance, plan: &[ActionId]) -> Result<Verdict, CompileError> {
    let g = &ci.ground;
    let p = &g.problem;
    let mut s = g.init().clone();
    let fail = |step: usize, a: ActionId, reason: String| Verdict {
        valid: false,
        steps: plan.len(),
        failed_step: Some(step),
        action: Some(g.action(a).name.clone()),
        reason,
        goal_reached: false,
    };
    for (step, &a) in plan.iter().enumerate() {
        let act = g.action(a);
        if !g.precondition_holds(&s, a)? {
            let mut failing = Vec::new();
            for c in act.pre.conjuncts() {
                if !p.eval_formula(&s, c)? {
                    failing.push(p.show_formula(c));
                }
            }
            if matches!(act.pre, Formula::Const(false)) {
                failing.push("false".into());
            }
            return Ok(fail(
                step,
                a,
                format!("precondition false: {}", failing.join(", ")),
            ));
        }
        let next = g.apply_effects(&s, a)?;
        if let Some(i) = g.violated_constraint(&next)? {
            let o = i as u32;
            let conf = match ci.conf(&next, o) {
                ConfArg::Held => "c-held".to_string(),
                ConfArg::Real(c) => format!("c{c}"),
            };
            let traj = ci.traj(&next).map_or("t-dummy".to_string(), |t| format!("t{t}"));
            return Ok(fail(
                step,
                a,
                format!(
                    "collision: trajectory {traj} at base b{} hits object `{}` at {conf}{}",
                    ci.base(&next),
                    ci.objects[o as usize],
                    if ci.held(&next).is_some() { " while holding" } else { "" }
                ),
            ));
        }
        s = next;
    }
    let goal = g.goal_satisfied(&s)?;
    Ok(Verdict {
        valid: goal,
        steps: plan.len(),
        failed_step: None,
        action: None,
        reason: if goal {
            "ok".into()
        } else {
            let missing: Vec<_> = g
                .goal
                .conjuncts()
                .into_iter()
                .filter(|c| !p.eval_formula(&s, c).unwrap_or(false))
                .map(|c| p.show_formula(c))
                .collect();
            format!("goal not reached: {}", missing.join(", "))
        },
        goal_reached: goal,
    })
}

/// Replaces motion ids by the stored paths, tracking the base so arm
/// waypoints come out in the world frame.
pub fn expand_plan(ci: &CompiledInstance, plan: &[ActionId]) -> Result<Vec<TraceStep>, CompileError> {
    let d = &ci.tables.data;
    let mut base = ci.initial_base;
    let mut out = Vec::with_capacity(plan.len());
    for &a in plan {
        if a.0 as usize >= ci.ground.actions.len() {
            return Err(CompileError::UnknownId { kind: "action", id: a.0 });
        }
        let action = ci.ground.action(a).name.clone();
        out.push(match ci.kind(a) {
            CtmpAction::MoveBase(e) => {
                let edge = d
                    .base_graph
                    .edges
                    .get(e as usize)
                    .ok_or(CompileError::UnknownId { kind: "base edge", id: e })?;
                base = edge.target;
                TraceStep::MoveBase {
                    action,
                    edge: e,
                    path: edge.path.clone(),
                }
            }
            CtmpAction::MoveArm(t) => {
                let traj = d
                    .arm_graph
                    .edges
                    .get(t as usize)
                    .ok_or(CompileError::UnknownId { kind: "trajectory", id: t })?;
                let pose = &d.base_graph.nodes[base as usize];
                TraceStep::MoveArm {
                    action,
                    trajectory: t,
                    base,
                    waypoints: traj.waypoints.iter().map(|w| t_b(pose, w)).collect(),
                }
            }
            CtmpAction::Grasp(o) => TraceStep::Grasp {
                action,
                object: ci.objects[o as usize].clone(),
            },
            CtmpAction::Place(o) => TraceStep::Place {
                action,
                object: ci.objects[o as usize].clone(),
            },
        });
    }
    Ok(out)
}
