use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::time::Instant;

use super::features::FeatureMap;
use super::novelty::NoveltyTable;
use super::Limits;
use crate::fstrips::{ActionId, FsError, GroundProblem, State};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Solved(Vec<ActionId>),
    /// The reachable state space was exhausted: no plan exists.
    Unsolvable,
    /// An incomplete search (IW, SIW, or BFWS pruning nodes) ended
    /// without a plan.
    Failed,
    NodeLimit,
    TimeLimit,
}

impl SearchOutcome {
    pub fn plan(&self) -> Option<&[ActionId]> {
        match self {
            SearchOutcome::Solved(p) => Some(p),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BfwsStats {
    pub expanded: usize,
    pub generated: usize,
    /// Generated nodes by novelty: index 0 ↦ w=1, 1 ↦ w=2, 2 ↦ w=3.
    pub novelty_histogram: [usize; 3],
    pub duplicates: usize,
    pub pruned: usize,
    pub initial_heuristics: Vec<i64>,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct BfwsOptions {
    /// Novelty arity cap (1 or 2).
    pub arity: u8,
    /// Discard nodes of novelty above the cap instead of ordering them last.
    pub prune_above_arity: bool,
    pub limits: Limits,
}

impl Default for BfwsOptions {
    fn default() -> Self {
        BfwsOptions {
            arity: 2,
            prune_above_arity: false,
            limits: Limits::default(),
        }
    }
}

struct Node {
    state: State,
    parent: u32,
    action: Option<ActionId>,
}

fn plan_to(nodes: &[Node], mut n: u32) -> Vec<ActionId> {
    let mut plan = Vec::new();
    while let Some(a) = nodes[n as usize].action {
        plan.push(a);
        n = nodes[n as usize].parent;
    }
    plan.reverse();
    plan
}

/// Best-first width search. Nodes are ordered by novelty, then by the
/// heuristic tuple `heuristics(s)` lexicographically, then by generation
/// order. Novelty is measured within the partition of states sharing the
/// same heuristic tuple. Duplicate states are discarded.
pub fn bfws(
    g: &GroundProblem,
    features: &FeatureMap,
    heuristics: &dyn Fn(&State) -> Result<Vec<i64>, FsError>,
    options: &BfwsOptions,
) -> Result<(SearchOutcome, BfwsStats), FsError> {
    let start = Instant::now();
    let mut stats = BfwsStats::default();
    let mut table = NoveltyTable::new(features.n_atoms(), options.arity);
    let mut atoms = Vec::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut seen: HashSet<State> = HashSet::new();
    let mut open: BinaryHeap<Reverse<(u8, Vec<i64>, u32)>> = BinaryHeap::new();
    let limits = &options.limits;

    let done = |outcome, mut stats: BfwsStats| {
        stats.seconds = start.elapsed().as_secs_f64();
        Ok((outcome, stats))
    };

    let init = g.init().clone();
    let h0 = heuristics(&init)?;
    stats.initial_heuristics = h0.clone();
    if g.goal_satisfied(&init)? {
        return done(SearchOutcome::Solved(Vec::new()), stats);
    }
    features.atoms(g, &init, &mut atoms)?;
    let w0 = table.evaluate(&h0, &atoms);
    seen.insert(init.clone());
    nodes.push(Node {
        state: init,
        parent: 0,
        action: None,
    });
    open.push(Reverse((w0, h0, 0)));

    while let Some(Reverse((_, _, n))) = open.pop() {
        if limits.time_exceeded(stats.expanded) {
            return done(SearchOutcome::TimeLimit, stats);
        }
        stats.expanded += 1;
        let state = nodes[n as usize].state.clone();
        for (a, next) in g.successors(&state)? {
            stats.generated += 1;
            if seen.contains(&next) {
                stats.duplicates += 1;
                continue;
            }
            if limits.nodes_exceeded(nodes.len()) {
                return done(SearchOutcome::NodeLimit, stats);
            }
            let goal = g.goal_satisfied(&next)?;
            seen.insert(next.clone());
            nodes.push(Node {
                state: next,
                parent: n,
                action: Some(a),
            });
            let id = nodes.len() as u32 - 1;
            if goal {
                return done(SearchOutcome::Solved(plan_to(&nodes, id)), stats);
            }
            let next = &nodes[id as usize].state;
            let h = heuristics(next)?;
            features.atoms(g, next, &mut atoms)?;
            let w = table.evaluate(&h, &atoms);
            stats.novelty_histogram[(w as usize - 1).min(2)] += 1;
            if w > options.arity && options.prune_above_arity {
                stats.pruned += 1;
                continue;
            }
            open.push(Reverse((w, h, id)));
        }
    }
    if stats.pruned > 0 {
        done(SearchOutcome::Failed, stats)
    } else {
        done(SearchOutcome::Unsolvable, stats)
    }
}

/// Blind breadth-first search with duplicate detection; a complete
/// solvability oracle for small problems. Returns the outcome and the
/// number of expanded states.
pub fn breadth_first(
    g: &GroundProblem,
    check_constraints: bool,
    limits: &Limits,
) -> Result<(SearchOutcome, usize), FsError> {
    breadth_first_to(g, g.init(), check_constraints, &|s| g.goal_satisfied(s), limits)
}

/// Breadth-first search from `start` towards an arbitrary goal test.
pub fn breadth_first_to(
    g: &GroundProblem,
    start: &State,
    check_constraints: bool,
    goal: &dyn Fn(&State) -> Result<bool, FsError>,
    limits: &Limits,
) -> Result<(SearchOutcome, usize), FsError> {
    if goal(start)? {
        return Ok((SearchOutcome::Solved(Vec::new()), 0));
    }
    let mut nodes = vec![Node {
        state: start.clone(),
        parent: 0,
        action: None,
    }];
    let mut seen: HashSet<State> = HashSet::from([start.clone()]);
    let mut head = 0usize;
    while head < nodes.len() {
        if limits.time_exceeded(head) {
            return Ok((SearchOutcome::TimeLimit, head));
        }
        let state = nodes[head].state.clone();
        for (a, next) in g.successors_with(&state, check_constraints)? {
            if !seen.insert(next.clone()) {
                continue;
            }
            if limits.nodes_exceeded(nodes.len()) {
                return Ok((SearchOutcome::NodeLimit, head));
            }
            let reached = goal(&next)?;
            nodes.push(Node {
                state: next,
                parent: head as u32,
                action: Some(a),
            });
            if reached {
                let plan = plan_to(&nodes, nodes.len() as u32 - 1);
                return Ok((SearchOutcome::Solved(plan), head + 1));
            }
        }
        head += 1;
    }
    Ok((SearchOutcome::Unsolvable, head))
}
