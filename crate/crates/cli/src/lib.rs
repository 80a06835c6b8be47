//! Command implementations behind the `ctmp` binary: table precompilation,
//! instance generation, planning, validation and benchmark tables.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ctmp_core::ctmp::{compile, expand_plan, generate_instance, validate_plan, CtmpInstance, PlanFile, ProcMode, Verdict};
use ctmp_core::geometry::Scene;
use ctmp_core::precompile::{PlanningTables, PrecompileSummary, PrecompiledTables};
use ctmp_core::search::{
    compute_obstructing_set, ctmp_features, obstructed_count, plan, Limits, PlannerConfig, SearchOutcome,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Solved,
    Timeout,
    MemoryOut,
    Unsolvable,
    /// An incomplete search ended without a plan.
    Failed,
    /// The run could not be set up (bad file, hash mismatch, ...).
    Error,
}

impl Outcome {
    fn of(o: &SearchOutcome) -> Outcome {
        match o {
            SearchOutcome::Solved(_) => Outcome::Solved,
            SearchOutcome::Unsolvable => Outcome::Unsolvable,
            SearchOutcome::Failed => Outcome::Failed,
            SearchOutcome::NodeLimit => Outcome::MemoryOut,
            SearchOutcome::TimeLimit => Outcome::Timeout,
        }
    }

    /// Short form used in result tables.
    pub fn code(self) -> &'static str {
        match self {
            Outcome::Solved => "ok",
            Outcome::Timeout => "TO",
            Outcome::MemoryOut => "MO",
            Outcome::Unsolvable => "UNS",
            Outcome::Failed => "FAIL",
            Outcome::Error => "ERR",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Solved => "solved",
            Outcome::Timeout => "timeout",
            Outcome::MemoryOut => "memory-out",
            Outcome::Unsolvable => "unsolvable",
            Outcome::Failed => "failed",
            Outcome::Error => "error",
        })
    }
}

/// One planning run, in the shape of a benchmark table row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub objects: usize,
    pub goals: usize,
    /// `#c` of the initial state.
    pub obstructed: i64,
    /// Plan length, present iff solved.
    pub length: Option<usize>,
    pub expanded: usize,
    pub prep_seconds: f64,
    pub search_seconds: f64,
    pub total_seconds: f64,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    fn error(id: &str, e: &anyhow::Error) -> RunRecord {
        RunRecord {
            id: id.to_string(),
            objects: 0,
            goals: 0,
            obstructed: 0,
            length: None,
            expanded: 0,
            prep_seconds: 0.0,
            search_seconds: 0.0,
            total_seconds: 0.0,
            outcome: Outcome::Error,
            error: Some(format!("{e:#}")),
        }
    }
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scene: Scene = serde_json::from_str(&text).with_context(|| format!("parsing scene {}", path.display()))?;
    scene.validate()?;
    Ok(scene)
}

/// Loads a table cache and refuses it unless it was built from `scene`.
pub fn load_tables(scene: &Scene, path: &Path) -> Result<Arc<PlanningTables>> {
    let data = PrecompiledTables::load(path)?;
    data.check_scene(scene)?;
    Ok(Arc::new(PlanningTables::new(data)))
}

pub fn load_config(path: Option<&Path>) -> Result<PlannerConfig> {
    match path {
        None => Ok(PlannerConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

pub fn cmd_precompile(scene: &Scene, out: &Path) -> Result<PrecompileSummary> {
    let (tables, summary) = PrecompiledTables::build(scene)?;
    tables.save(out)?;
    Ok(summary)
}

/// Precompilation summary: one header line and one line per scene.
pub fn summary_table(rows: &[PrecompileSummary]) -> String {
    let mut out = String::new();
    let header = PrecompileSummary::HEADER;
    let cells: Vec<[String; 10]> = rows.iter().map(PrecompileSummary::row).collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| cells.iter().map(|r| r[i].len()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cols: Vec<&str>| -> String {
        let padded: Vec<String> = cols.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        padded.join("  ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(header.to_vec()));
    for r in &cells {
        let _ = writeln!(out, "{}", line(r.iter().map(String::as_str).collect()));
    }
    out
}

/// Candidate draws tried when a minimum clutter is requested.
pub const CLUTTER_TRIES: u64 = 500;

/// `#c` of the initial state of `instance`.
pub fn initial_obstructed(tables: Arc<PlanningTables>, instance: &CtmpInstance) -> Result<i64> {
    let ci = compile(instance, tables, ProcMode::Lookup)?;
    let set = compute_obstructing_set(&ci, &ctmp_features(&ci), &Limits::default())?;
    Ok(obstructed_count(&ci, ci.ground.init(), &set.configs))
}

/// Seeded instance. With `min_obstructed > 0`, draws are repeated (with
/// seeds derived from `seed`) until the initial state has at least that many
/// objects on obstructing configurations.
pub fn cmd_gen_instance(
    tables: Arc<PlanningTables>,
    name: &str,
    n_objects: usize,
    n_goals: usize,
    seed: u64,
    min_obstructed: usize,
) -> Result<CtmpInstance> {
    for k in 0..CLUTTER_TRIES {
        let draw = seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let inst = generate_instance(&tables, name, n_objects, n_goals, draw)?;
        if min_obstructed == 0 || initial_obstructed(tables.clone(), &inst)? >= min_obstructed as i64 {
            return Ok(inst);
        }
    }
    bail!("no draw out of {CLUTTER_TRIES} has {min_obstructed} obstructed objects")
}

/// Compiles and plans one instance. The returned plan file carries the
/// expanded trace.
pub fn cmd_plan(
    tables: Arc<PlanningTables>,
    instance: &CtmpInstance,
    config: &PlannerConfig,
) -> Result<(RunRecord, Option<PlanFile>)> {
    let start = Instant::now();
    let ci = compile(instance, tables, ProcMode::Lookup)?;
    let compile_seconds = start.elapsed().as_secs_f64();
    let report = plan(&ci, config)?;
    let outcome = Outcome::of(&report.outcome);
    let plan_file = match report.outcome.plan() {
        Some(p) => Some(PlanFile {
            instance: instance.name.clone(),
            actions: ci.action_names(p),
            trace: Some(expand_plan(&ci, p)?),
        }),
        None => None,
    };
    for goal in &report.obstructing.unconfirmed_goals {
        log::warn!("goal {goal:?} has no relaxed plan within the budget");
    }
    let record = RunRecord {
        id: instance.name.clone(),
        objects: ci.n_objects(),
        goals: ci.goals.len(),
        obstructed: report.initial_obstructed,
        length: report.outcome.plan().map(<[_]>::len),
        expanded: report.expanded,
        prep_seconds: compile_seconds + report.prep_seconds,
        search_seconds: report.search_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        outcome,
        error: None,
    };
    Ok((record, plan_file))
}

pub fn cmd_validate(tables: Arc<PlanningTables>, instance: &CtmpInstance, plan: &PlanFile) -> Result<Verdict> {
    Ok(validate_plan(instance, tables, &plan.actions)?)
}

/// A benchmark run: paths are relative to the suite file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteEntry {
    pub scene: PathBuf,
    /// Table cache; built in memory from the scene when absent.
    #[serde(default)]
    pub tables: Option<PathBuf>,
    pub instance: PathBuf,
    #[serde(default)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    pub runs: Vec<SuiteEntry>,
}

impl Suite {
    pub fn load(path: &Path) -> Result<Suite> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing suite {}", path.display()))
    }
}

/// Runs every suite entry; a failing entry becomes an `error` row. Rows
/// come back sorted by (#o, #g), ties in suite order.
pub fn cmd_bench(suite: &Suite, root: &Path, overrides: &dyn Fn(&mut PlannerConfig)) -> Vec<RunRecord> {
    let mut tables: HashMap<(PathBuf, Option<PathBuf>), Arc<PlanningTables>> = HashMap::new();
    let mut rows = Vec::with_capacity(suite.runs.len());
    for entry in &suite.runs {
        let id = entry.instance.display().to_string();
        let row = (|| -> Result<RunRecord> {
            let scene_path = root.join(&entry.scene);
            let key = (scene_path.clone(), entry.tables.clone());
            let t = match tables.get(&key) {
                Some(t) => t.clone(),
                None => {
                    let scene = load_scene(&scene_path)?;
                    let t = match &entry.tables {
                        Some(p) => load_tables(&scene, &root.join(p))?,
                        None => Arc::new(PlanningTables::new(PrecompiledTables::build(&scene)?.0)),
                    };
                    tables.insert(key, t.clone());
                    t
                }
            };
            let instance = CtmpInstance::load(&root.join(&entry.instance))?;
            let mut config = load_config(entry.config.as_ref().map(|p| root.join(p)).as_deref())?;
            overrides(&mut config);
            let (mut record, _) = cmd_plan(t, &instance, &config)?;
            record.id = id.clone();
            Ok(record)
        })();
        rows.push(row.unwrap_or_else(|e| RunRecord::error(&id, &e)));
    }
    rows.sort_by_key(|r| (r.objects, r.goals));
    rows
}

/// Results layout: id, `#o #g #c L E Prep Search Total`, outcome.
pub fn results_table(rows: &[RunRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:>4} {:>4} {:>4} {:>6} {:>9} {:>9} {:>9} {:>9}  outcome",
        "id", "#o", "#g", "#c", "L", "E", "Prep", "Search", "Total"
    );
    for r in rows {
        let length = r.length.map_or("-".to_string(), |l| l.to_string());
        let _ = writeln!(
            out,
            "{:<24} {:>4} {:>4} {:>4} {:>6} {:>9} {:>9.2} {:>9.2} {:>9.2}  {}",
            r.id,
            r.objects,
            r.goals,
            r.obstructed,
            length,
            r.expanded,
            r.prep_seconds,
            r.search_seconds,
            r.total_seconds,
            r.outcome.code()
        );
    }
    out
}

/// Writes `value` as pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}
