use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ctmp::CompiledInstance;
use crate::fstrips::State;
use crate::precompile::ConfArg;

/// The three pick-and-place counters used to break novelty ties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Counter {
    /// `#c`: objects resting on an obstructing configuration.
    Obstructed,
    /// `h_M`: twice the misplaced goal objects, minus one if one is held.
    Misplaced,
    /// `#g`: goal atoms not yet true.
    Goals,
}

impl Counter {
    pub fn label(self) -> &'static str {
        match self {
            Counter::Obstructed => "#c",
            Counter::Misplaced => "h_M",
            Counter::Goals => "#g",
        }
    }

    pub fn eval(self, ci: &CompiledInstance, s: &State, obstructing: &BTreeSet<u32>) -> i64 {
        match self {
            Counter::Obstructed => obstructed_count(ci, s, obstructing),
            Counter::Misplaced => misplaced_count(ci, s),
            Counter::Goals => goal_count(ci, s),
        }
    }
}

/// Number of goal atoms `Conf(o) = c` false in `s`.
pub fn goal_count(ci: &CompiledInstance, s: &State) -> i64 {
    ci.goals
        .iter()
        .filter(|&&(o, c)| ci.conf(s, o) != ConfArg::Real(c))
        .count() as i64
}

/// `2·|misplaced goal objects| − [the held object is one of them]`.
pub fn misplaced_count(ci: &CompiledInstance, s: &State) -> i64 {
    let held = ci.held(s);
    let mut total = 0;
    for &(o, c) in &ci.goals {
        if ci.conf(s, o) != ConfArg::Real(c) {
            total += 2;
            if held == Some(o) {
                total -= 1;
            }
        }
    }
    total
}

/// Number of objects whose configuration lies in `obstructing`.
pub fn obstructed_count(ci: &CompiledInstance, s: &State, obstructing: &BTreeSet<u32>) -> i64 {
    (0..ci.n_objects() as u32)
        .filter(|&o| matches!(ci.conf(s, o), ConfArg::Real(c) if obstructing.contains(&c)))
        .count() as i64
}
