use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::bfws::{bfws, BfwsOptions, SearchOutcome};
use super::counters::Counter;
use super::features::FeatureMap;
use super::iw::{iw_driver, siw, IwOutcome, IwStats};
use super::obstruct::{compute_obstructing_set, ObstructingSet};
use super::Limits;
use crate::ctmp::CompiledInstance;
use crate::fstrips::{Formula, FsError, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Iw,
    Siw,
    Bfws,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Iw => "iw",
            Algorithm::Siw => "siw",
            Algorithm::Bfws => "bfws",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub algorithm: Algorithm,
    /// Novelty arity cap for BFWS (1 or 2).
    pub arity: u8,
    /// BFWS tie-breakers after novelty, most significant first.
    pub counters: Vec<Counter>,
    /// Discard BFWS nodes whose novelty exceeds the arity cap.
    pub prune_w3: bool,
    /// Run BFWS when IW or SIW ends without a plan.
    pub fallback: bool,
    pub node_budget: Option<usize>,
    /// Wall-clock budget in seconds for preprocessing plus search.
    pub time_budget: Option<f64>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            algorithm: Algorithm::Bfws,
            arity: 2,
            counters: vec![Counter::Obstructed, Counter::Misplaced, Counter::Goals],
            prune_w3: false,
            fallback: true,
            node_budget: None,
            time_budget: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PlanReport {
    pub outcome: SearchOutcome,
    /// The search that produced the outcome (differs from the configured
    /// one after a fallback).
    pub algorithm: Algorithm,
    pub obstructing: ObstructingSet,
    /// `#c`, `h_M` and `#g` of the initial state.
    pub initial_obstructed: i64,
    pub initial_misplaced: i64,
    pub initial_goals: i64,
    pub expanded: usize,
    pub generated: usize,
    pub novelty_histogram: [usize; 3],
    pub prep_seconds: f64,
    pub search_seconds: f64,
}

/// State-variable atoms plus `graspable*(o)` and `placeable*(o)`, the
/// preconditions of Grasp(o) and Place(o).
pub fn ctmp_features(ci: &CompiledInstance) -> FeatureMap {
    let mut derived: Vec<Formula> = Vec::new();
    for o in 0..ci.n_objects() as u32 {
        derived.push(ci.ground.action(ci.grasp_action(o)).pre.clone());
        derived.push(ci.ground.action(ci.place_action(o)).pre.clone());
    }
    FeatureMap::new(&ci.ground, derived)
}

fn from_iw(o: IwOutcome) -> SearchOutcome {
    match o {
        IwOutcome::Solved(p) => SearchOutcome::Solved(p),
        IwOutcome::NodeLimit => SearchOutcome::NodeLimit,
        IwOutcome::TimeLimit => SearchOutcome::TimeLimit,
        IwOutcome::Exhausted | IwOutcome::Halted => SearchOutcome::Failed,
    }
}

/// Computes the obstructing configurations, then runs the configured search.
pub fn plan(ci: &CompiledInstance, config: &PlannerConfig) -> Result<PlanReport, FsError> {
    let start = Instant::now();
    let limits = Limits::new(
        config.node_budget,
        config.time_budget.map(Duration::from_secs_f64),
    );
    let features = ctmp_features(ci);
    let obstructing = compute_obstructing_set(ci, &features, &limits)?;
    let s0 = ci.ground.init();
    let mut report = PlanReport {
        outcome: SearchOutcome::Failed,
        algorithm: config.algorithm,
        initial_obstructed: Counter::Obstructed.eval(ci, s0, &obstructing.configs),
        initial_misplaced: Counter::Misplaced.eval(ci, s0, &obstructing.configs),
        initial_goals: Counter::Goals.eval(ci, s0, &obstructing.configs),
        obstructing,
        expanded: 0,
        generated: 0,
        novelty_histogram: [0; 3],
        prep_seconds: start.elapsed().as_secs_f64(),
        search_seconds: 0.0,
    };
    let search_start = Instant::now();

    if !report.obstructing.unreachable_goals.is_empty() {
        report.outcome = SearchOutcome::Unsolvable;
        return Ok(report);
    }

    let goal = |s: &State| ci.ground.goal_satisfied(s);
    if config.algorithm != Algorithm::Bfws {
        let mut stats = IwStats::default();
        let outcome = match config.algorithm {
            Algorithm::Iw => iw_driver(&ci.ground, &features, s0, &goal, &limits, &mut stats)?,
            _ => siw(&ci.ground, &features, &limits, &mut stats)?,
        };
        report.expanded = stats.expanded;
        report.generated = stats.generated;
        report.outcome = from_iw(outcome);
        if report.outcome != SearchOutcome::Failed || !config.fallback {
            report.search_seconds = search_start.elapsed().as_secs_f64();
            return Ok(report);
        }
        log::info!("{} found no plan; falling back to BFWS", config.algorithm);
        report.algorithm = Algorithm::Bfws;
    }

    let configs = &report.obstructing.configs;
    let heuristics = |s: &State| -> Result<Vec<i64>, FsError> {
        Ok(config.counters.iter().map(|c| c.eval(ci, s, configs)).collect())
    };
    let options = BfwsOptions {
        arity: config.arity,
        prune_above_arity: config.prune_w3,
        limits,
    };
    let (outcome, stats) = bfws(&ci.ground, &features, &heuristics, &options)?;
    report.outcome = outcome;
    report.expanded += stats.expanded;
    report.generated += stats.generated;
    report.novelty_histogram = stats.novelty_histogram;
    report.search_seconds = search_start.elapsed().as_secs_f64();
    Ok(report)
}
