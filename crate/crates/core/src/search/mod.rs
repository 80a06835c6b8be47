//! Width-based search: novelty tables, IW(k), IW, SIW and best-first width
//! search (BFWS) with the pick-and-place counters.
//!
//! Every search works on a [`GroundProblem`](crate::fstrips::GroundProblem).
//! The CTMP-specific parts (counters, obstructing configurations, derived
//! features) read states through a [`CompiledInstance`](crate::ctmp::CompiledInstance).

use std::time::{Duration, Instant};

mod bfws;
mod counters;
mod features;
mod iw;
mod novelty;
mod obstruct;
mod planner;

pub use bfws::{bfws, breadth_first, breadth_first_to, BfwsOptions, BfwsStats, SearchOutcome};
pub use counters::{goal_count, misplaced_count, obstructed_count, Counter};
pub use features::FeatureMap;
pub use iw::{iw, iw_driver, iw_run, siw, IwOutcome, IwRun, IwStats, SearchTree, TreeNode, Visit};
pub use novelty::NoveltyTable;
pub use obstruct::{compute_obstructing_set, ObstructingSet};
pub use planner::{ctmp_features, plan, Algorithm, PlanReport, PlannerConfig};

/// Cooperative resource budget checked inside search loops.
#[derive(Clone, Debug, Default)]
pub struct Limits {
    /// Maximum number of stored nodes per search.
    pub max_nodes: Option<usize>,
    pub deadline: Option<Instant>,
}

impl Limits {
    pub fn unlimited() -> Limits {
        Limits::default()
    }

    pub fn new(max_nodes: Option<usize>, time_budget: Option<Duration>) -> Limits {
        Limits {
            max_nodes,
            deadline: time_budget.map(|d| Instant::now() + d),
        }
    }

    /// Reads the clock only every 64 expansions.
    pub fn time_exceeded(&self, expanded: usize) -> bool {
        match self.deadline {
            Some(d) => expanded.is_multiple_of(64) && Instant::now() >= d,
            None => false,
        }
    }

    /// True when storing one more node would exceed the budget.
    pub fn nodes_exceeded(&self, stored: usize) -> bool {
        self.max_nodes.is_some_and(|m| stored >= m)
    }
}
