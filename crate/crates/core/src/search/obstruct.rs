use std::collections::{BTreeSet, HashMap};

use super::bfws::{breadth_first_to, SearchOutcome};
use super::features::FeatureMap;
use super::iw::{iw_run, IwOutcome, SearchTree, Visit};
use super::Limits;
use crate::ctmp::{CompiledInstance, CtmpAction};
use crate::fstrips::{ActionId, FsError, State};
use crate::precompile::ConfArg;

/// Real configurations that block the least-colliding relaxed plans, fixed
/// once from the initial state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ObstructingSet {
    pub configs: BTreeSet<u32>,
    /// Goal atoms `(object, config)` proven unreachable even without
    /// collision constraints.
    pub unreachable_goals: Vec<(u32, u32)>,
    /// Goal atoms with no relaxed plan found and no unreachability proof
    /// within the budget.
    pub unconfirmed_goals: Vec<(u32, u32)>,
    pub expanded: usize,
    pub generated: usize,
    /// False when the IW(2) pass stopped on a resource limit.
    pub complete: bool,
}

impl ObstructingSet {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn contains(&self, c: u32) -> bool {
        self.configs.contains(&c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    Goal(u32, u32),
    Hold(u32),
}

impl Target {
    fn holds(self, ci: &CompiledInstance, s: &State) -> bool {
        match self {
            Target::Goal(o, c) => ci.conf(s, o) == ConfArg::Real(c),
            Target::Hold(o) => ci.held(s) == Some(o),
        }
    }
}

/// Relaxed plans longer than IW(2) can find are searched for breadth-first
/// up to this many stored states.
const RELAXED_BFS_NODES: usize = 300_000;

/// Objects (with their configurations) whose collision constraint is false
/// in `s`.
fn violations(ci: &CompiledInstance, s: &State) -> Result<Vec<(u32, u32)>, FsError> {
    let mut out = Vec::new();
    for (o, c) in ci.ground.constraints.iter().enumerate() {
        if !ci.ground.eval_formula(s, &c.body)? {
            if let ConfArg::Real(conf) = ci.conf(s, o as u32) {
                out.push((o as u32, conf));
            }
        }
    }
    Ok(out)
}

/// Configurations hit by MoveArm steps on the path to `node`, and the
/// number of distinct objects involved.
fn path_collisions(
    ci: &CompiledInstance,
    tree: &SearchTree,
    node: u32,
    memo: &mut HashMap<u32, Vec<(u32, u32)>>,
) -> Result<(usize, BTreeSet<u32>), FsError> {
    let mut objects = BTreeSet::new();
    let mut configs = BTreeSet::new();
    for n in tree.path(node) {
        let tn = &tree.nodes[n as usize];
        let Some(a) = tn.action else { continue };
        if !matches!(ci.kind(a), CtmpAction::MoveArm(_)) {
            continue;
        }
        if let std::collections::hash_map::Entry::Vacant(e) = memo.entry(n) {
            e.insert(violations(ci, &tn.state)?);
        }
        for &(o, c) in &memo[&n] {
            objects.insert(o);
            configs.insert(c);
        }
    }
    Ok((objects.len(), configs))
}

/// Configurations hit by MoveArm steps along `plan` from the initial state.
fn plan_collisions(ci: &CompiledInstance, plan: &[ActionId]) -> Result<BTreeSet<u32>, FsError> {
    let mut s = ci.ground.init().clone();
    let mut configs = BTreeSet::new();
    for &a in plan {
        s = ci.ground.apply_effects(&s, a)?;
        if matches!(ci.kind(a), CtmpAction::MoveArm(_)) {
            configs.extend(violations(ci, &s)?.into_iter().map(|(_, c)| c));
        }
    }
    Ok(configs)
}

/// Runs one IW(2) pass on the problem without state constraints and reads
/// the obstructing configurations off its search tree.
///
/// For every goal atom, the relaxed plans are the tree paths to nodes where
/// the atom first becomes true; the one colliding with the fewest distinct
/// objects is selected (ties: shorter, then earlier). The configurations it
/// collides with are obstructing. Targets IW(2) misses fall back to a
/// bounded breadth-first search on the same relaxation, whose plan is then
/// used as the relaxed plan. Objects initially resting on an obstructing
/// configuration add the configurations blocking the relaxed plans for
/// holding them, up to a fixpoint.
pub fn compute_obstructing_set(
    ci: &CompiledInstance,
    features: &FeatureMap,
    limits: &Limits,
) -> Result<ObstructingSet, FsError> {
    let g = &ci.ground;
    let n = ci.n_objects() as u32;
    let mut targets: Vec<Target> = ci.goals.iter().map(|&(o, c)| Target::Goal(o, c)).collect();
    targets.extend((0..n).map(Target::Hold));

    let mut first_depth: Vec<Option<u32>> = vec![None; targets.len()];
    let mut hits: Vec<Vec<u32>> = vec![Vec::new(); targets.len()];
    let mut horizon: Option<u32> = None;
    let run = iw_run(g, features, g.init(), 2, false, limits, &mut |tree, node| {
        if let Some(h) = horizon {
            if node.depth > h {
                return Ok(Visit::Halt);
            }
        }
        let index = tree.len() as u32;
        let parent = node.parent.map(|p| &tree.nodes[p as usize].state);
        let mut keep = false;
        for (t, target) in targets.iter().enumerate() {
            if target.holds(ci, &node.state) && !parent.is_some_and(|p| target.holds(ci, p)) {
                hits[t].push(index);
                first_depth[t].get_or_insert(node.depth);
                keep = true;
            }
        }
        if horizon.is_none() && first_depth.iter().all(Option::is_some) {
            horizon = first_depth.iter().flatten().max().copied();
        }
        Ok(if keep { Visit::Keep } else { Visit::Continue })
    })?;

    let mut out = ObstructingSet {
        expanded: run.expanded,
        generated: run.generated,
        complete: matches!(run.outcome, IwOutcome::Exhausted | IwOutcome::Halted),
        ..ObstructingSet::default()
    };
    // A Keep verdict can be overridden by the node limit; drop such ids.
    let stored = run.tree.len() as u32;
    let mut memo = HashMap::new();
    let mut chosen: Vec<Option<BTreeSet<u32>>> = Vec::with_capacity(targets.len());
    for nodes in &hits {
        let mut best: Option<((usize, u32, u32), BTreeSet<u32>)> = None;
        for &node in nodes.iter().filter(|&&i| i < stored) {
            let (count, configs) = path_collisions(ci, &run.tree, node, &mut memo)?;
            let key = (count, run.tree.nodes[node as usize].depth, node);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, configs));
            }
        }
        chosen.push(best.map(|(_, c)| c));
    }

    let bfs_limits = Limits {
        max_nodes: Some(limits.max_nodes.map_or(RELAXED_BFS_NODES, |m| m.min(RELAXED_BFS_NODES))),
        deadline: limits.deadline,
    };
    let fallback = |target: Target| -> Result<(SearchOutcome, Option<BTreeSet<u32>>), FsError> {
        let goal = |s: &State| Ok(target.holds(ci, s));
        let (verdict, _) = breadth_first_to(g, g.init(), false, &goal, &bfs_limits)?;
        let configs = match verdict.plan() {
            Some(plan) => Some(plan_collisions(ci, plan)?),
            None => None,
        };
        Ok((verdict, configs))
    };

    for (t, target) in targets.iter().enumerate() {
        let Target::Goal(o, c) = *target else { continue };
        if chosen[t].is_none() {
            let (verdict, configs) = fallback(*target)?;
            match verdict {
                SearchOutcome::Solved(_) => chosen[t] = configs,
                SearchOutcome::Unsolvable => out.unreachable_goals.push((o, c)),
                _ => {
                    log::warn!(
                        "no relaxed plan found for {} at c{c} within the budget",
                        ci.objects[o as usize]
                    );
                    out.unconfirmed_goals.push((o, c));
                }
            }
        }
        if let Some(configs) = &chosen[t] {
            out.configs.extend(configs);
        }
    }

    let mut expanded_holds = BTreeSet::new();
    loop {
        let mut grew = false;
        for o in 0..n {
            let start = ci.initial_configs[o as usize];
            if out.configs.contains(&start) && expanded_holds.insert(o) {
                let t = ci.goals.len() + o as usize;
                if chosen[t].is_none() {
                    chosen[t] = fallback(targets[t])?.1;
                }
                if let Some(configs) = &chosen[t] {
                    let before = out.configs.len();
                    out.configs.extend(configs);
                    grew |= out.configs.len() > before;
                }
            }
        }
        if !grew {
            break;
        }
    }
    Ok(out)
}
