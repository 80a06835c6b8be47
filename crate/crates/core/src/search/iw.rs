use std::collections::VecDeque;

use super::features::FeatureMap;
use super::novelty::NoveltyTable;
use super::Limits;
use crate::fstrips::{ActionId, Formula, FsError, GroundProblem, State};

/// A node of the breadth-first tree built by IW.
#[derive(Clone, Debug)]
pub struct TreeNode {
    pub state: State,
    pub parent: Option<u32>,
    pub action: Option<ActionId>,
    pub depth: u32,
    pub novelty: u8,
    /// Kept in the tree but not expanded (novelty above the bound).
    pub pruned: bool,
}

#[derive(Clone, Debug, Default)]
pub struct SearchTree {
    pub nodes: Vec<TreeNode>,
}

impl SearchTree {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Actions from the root to `node`.
    pub fn plan_to(&self, node: u32) -> Vec<ActionId> {
        self.path(node)
            .iter()
            .filter_map(|&n| self.nodes[n as usize].action)
            .collect()
    }

    /// Node ids from the root to `node`, inclusive.
    pub fn path(&self, node: u32) -> Vec<u32> {
        let mut out = vec![node];
        let mut cur = node;
        while let Some(p) = self.nodes[cur as usize].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }
}

/// What an IW observer wants done with a freshly generated node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Visit {
    /// Apply the usual novelty rule.
    Continue,
    /// Store the node even if its novelty prunes it.
    Keep,
    /// The node satisfies the goal; stop with the plan to it.
    Solved,
    /// Stop without a plan.
    Halt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IwOutcome {
    Solved(Vec<ActionId>),
    /// Every non-pruned node was expanded.
    Exhausted,
    Halted,
    NodeLimit,
    TimeLimit,
}

#[derive(Clone, Debug)]
pub struct IwRun {
    pub outcome: IwOutcome,
    pub tree: SearchTree,
    pub expanded: usize,
    pub generated: usize,
}

/// IW(k) from `start`: breadth-first search that prunes nodes whose novelty
/// (single partition) exceeds `k`. `observe` sees every generated node
/// before pruning, the root included.
pub fn iw_run(
    g: &GroundProblem,
    features: &FeatureMap,
    start: &State,
    k: u8,
    check_constraints: bool,
    limits: &Limits,
    observe: &mut dyn FnMut(&SearchTree, &TreeNode) -> Result<Visit, FsError>,
) -> Result<IwRun, FsError> {
    let mut table = NoveltyTable::new(features.n_atoms(), k);
    let mut atoms = Vec::new();
    let mut tree = SearchTree::default();
    let mut queue = VecDeque::new();
    let (mut expanded, mut generated) = (0, 0);
    let finish = |outcome, tree, expanded, generated| {
        Ok(IwRun {
            outcome,
            tree,
            expanded,
            generated,
        })
    };

    features.atoms(g, start, &mut atoms)?;
    let root = TreeNode {
        state: start.clone(),
        parent: None,
        action: None,
        depth: 0,
        novelty: table.evaluate(&[], &atoms),
        pruned: false,
    };
    match observe(&tree, &root)? {
        Visit::Solved => {
            tree.nodes.push(root);
            return finish(IwOutcome::Solved(Vec::new()), tree, 0, 0);
        }
        Visit::Halt => return finish(IwOutcome::Halted, tree, 0, 0),
        _ => {}
    }
    tree.nodes.push(root);
    queue.push_back(0u32);

    while let Some(n) = queue.pop_front() {
        if limits.time_exceeded(expanded) {
            return finish(IwOutcome::TimeLimit, tree, expanded, generated);
        }
        expanded += 1;
        let (state, depth) = {
            let node = &tree.nodes[n as usize];
            (node.state.clone(), node.depth)
        };
        for (a, next) in g.successors_with(&state, check_constraints)? {
            generated += 1;
            features.atoms(g, &next, &mut atoms)?;
            let novelty = table.evaluate(&[], &atoms);
            let mut node = TreeNode {
                state: next,
                parent: Some(n),
                action: Some(a),
                depth: depth + 1,
                novelty,
                pruned: novelty > k,
            };
            match observe(&tree, &node)? {
                Visit::Solved => {
                    node.pruned = false;
                    tree.nodes.push(node);
                    let plan = tree.plan_to(tree.len() as u32 - 1);
                    return finish(IwOutcome::Solved(plan), tree, expanded, generated);
                }
                Visit::Halt => return finish(IwOutcome::Halted, tree, expanded, generated),
                Visit::Keep => {}
                Visit::Continue if node.pruned => continue,
                Visit::Continue => {}
            }
            if limits.nodes_exceeded(tree.len()) {
                return finish(IwOutcome::NodeLimit, tree, expanded, generated);
            }
            if !node.pruned {
                queue.push_back(tree.len() as u32);
            }
            tree.nodes.push(node);
        }
    }
    finish(IwOutcome::Exhausted, tree, expanded, generated)
}

/// IW(k) towards `goal`.
pub fn iw(
    g: &GroundProblem,
    features: &FeatureMap,
    start: &State,
    k: u8,
    goal: &dyn Fn(&State) -> Result<bool, FsError>,
    limits: &Limits,
) -> Result<IwRun, FsError> {
    iw_run(g, features, start, k, true, limits, &mut |_, node| {
        Ok(if goal(&node.state)? {
            Visit::Solved
        } else {
            Visit::Continue
        })
    })
}

/// Totals over a sequence of IW calls.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IwStats {
    pub expanded: usize,
    pub generated: usize,
    pub calls: usize,
}

/// IW(1) then IW(2) until one solves.
pub fn iw_driver(
    g: &GroundProblem,
    features: &FeatureMap,
    start: &State,
    goal: &dyn Fn(&State) -> Result<bool, FsError>,
    limits: &Limits,
    stats: &mut IwStats,
) -> Result<IwOutcome, FsError> {
    let mut last = IwOutcome::Exhausted;
    for k in 1..=2 {
        let run = iw(g, features, start, k, goal, limits)?;
        stats.expanded += run.expanded;
        stats.generated += run.generated;
        stats.calls += 1;
        match run.outcome {
            IwOutcome::Solved(p) => return Ok(IwOutcome::Solved(p)),
            o @ (IwOutcome::TimeLimit | IwOutcome::NodeLimit) => return Ok(o),
            o => last = o,
        }
    }
    Ok(last)
}

/// SIW: one IW episode per additional goal atom, never losing an achieved one.
pub fn siw(
    g: &GroundProblem,
    features: &FeatureMap,
    limits: &Limits,
    stats: &mut IwStats,
) -> Result<IwOutcome, FsError> {
    let p = &g.problem;
    let atoms: Vec<&Formula> = g.goal.conjuncts();
    let holds = |s: &State| -> Result<Vec<bool>, FsError> {
        atoms.iter().map(|f| p.eval_formula(s, f)).collect()
    };
    let mut state = g.init().clone();
    let mut plan = Vec::new();
    loop {
        let achieved = holds(&state)?;
        let count = achieved.iter().filter(|&&b| b).count();
        if count == atoms.len() {
            return Ok(IwOutcome::Solved(plan));
        }
        let goal = |s: &State| -> Result<bool, FsError> {
            let now = holds(s)?;
            let kept = achieved.iter().zip(&now).all(|(&was, &is)| !was || is);
            Ok(kept && now.iter().filter(|&&b| b).count() > count)
        };
        match iw_driver(g, features, &state, &goal, limits, stats)? {
            IwOutcome::Solved(episode) => {
                for &a in &episode {
                    state = g.apply_effects(&state, a)?;
                }
                plan.extend(episode);
            }
            other => return Ok(other),
        }
    }
}
