use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};

use ctmp_cli::*;
use ctmp_core::ctmp::{CtmpInstance, PlanFile};
use ctmp_core::geometry::Scene;
use ctmp_core::search::PlannerConfig;

/// Pick-and-place task and motion planning with width-based search.
#[derive(Parser)]
#[command(name = "ctmp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    shared: Shared,
}

#[derive(Args)]
struct Shared {
    /// Seed for sampling (scene seed for `precompile`, instance seed for
    /// `gen-instance`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Wall-clock budget per planning run, in seconds.
    #[arg(long, global = true)]
    time_budget: Option<f64>,
    /// Maximum number of stored search nodes.
    #[arg(long, global = true)]
    node_budget: Option<usize>,
    /// Planner configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Shared {
    fn apply(&self, c: &mut PlannerConfig) {
        if let Some(t) = self.time_budget {
            c.time_budget = Some(t);
        }
        if let Some(n) = self.node_budget {
            c.node_budget = Some(n);
        }
    }

    fn planner_config(&self) -> Result<PlannerConfig> {
        let mut c = load_config(self.config.as_deref())?;
        self.apply(&mut c);
        Ok(c)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    OneTable,
    ThreeTables,
    Micro,
}

#[derive(Subcommand)]
enum Command {
    /// Write a built-in scene file.
    Scene {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the lookup tables for a scene and print the summary row.
    Precompile {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded instance.
    GenInstance {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        objects: usize,
        #[arg(long)]
        goals: usize,
        #[arg(long)]
        name: Option<String>,
        /// Redraw until at least this many objects start on obstructing
        /// configurations (`#c`).
        #[arg(long, default_value_t = 0)]
        min_obstructed: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan an instance; writes the plan file and prints the run record.
    Plan {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        /// Plan file to write when solved.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run record (JSON) to write.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Replay a plan with direct collision checking.
    Validate {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        tables: PathBuf,
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        /// Verdict (JSON) to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a suite and print the results table.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        /// Result rows (JSON) to write.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn tables_for(scene: &Path, tables: &Path) -> Result<Arc<ctmp_core::precompile::PlanningTables>> {
    let scene = load_scene(scene)?;
    load_tables(&scene, tables)
}

fn run(cli: Cli) -> Result<bool> {
    let shared = &cli.shared;
    match &cli.command {
        Command::Scene { preset, out } => {
            let scene = match preset {
                Preset::OneTable => Scene::one_table(),
                Preset::ThreeTables => Scene::three_tables(),
                Preset::Micro => Scene::micro(),
            };
            write_json(out, &scene)?;
            Ok(true)
        }
        Command::Precompile { scene, out } => {
            let mut scene = load_scene(scene)?;
            if let Some(seed) = shared.seed {
                scene.seed = seed;
            }
            let summary = cmd_precompile(&scene, out)?;
            print!("{}", summary_table(&[summary]));
            Ok(true)
        }
        Command::GenInstance {
            scene,
            tables,
            objects,
            goals,
            name,
            min_obstructed,
            out,
        } => {
            let t = tables_for(scene, tables)?;
            let seed = shared.seed.unwrap_or(0);
            let name = name.clone().unwrap_or_else(|| format!("o{objects}-g{goals}-s{seed}"));
            let inst = cmd_gen_instance(t, &name, *objects, *goals, seed, *min_obstructed)?;
            inst.save(out)?;
            Ok(true)
        }
        Command::Plan {
            scene,
            tables,
            instance,
            out,
            record,
        } => {
            let t = tables_for(scene, tables)?;
            let inst = CtmpInstance::load(instance)?;
            let (rec, plan) = cmd_plan(t, &inst, &shared.planner_config()?)?;
            if let (Some(path), Some(plan)) = (out, &plan) {
                plan.save(path)?;
            }
            if let Some(path) = record {
                write_json(path, &rec)?;
            }
            print!("{}", results_table(std::slice::from_ref(&rec)));
            Ok(plan.is_some())
        }
        Command::Validate {
            scene,
            tables,
            instance,
            plan,
            out,
        } => {
            let t = tables_for(scene, tables)?;
            let inst = CtmpInstance::load(instance)?;
            let plan = PlanFile::load(plan)?;
            let verdict = cmd_validate(t, &inst, &plan)?;
            if let Some(path) = out {
                write_json(path, &verdict)?;
            }
            println!("{}", serde_json::to_string_pretty(&verdict)?);
            Ok(verdict.valid)
        }
        Command::Bench { suite, out } => {
            let root = suite.parent().unwrap_or(Path::new("."));
            let rows = cmd_bench(&Suite::load(suite)?, root, &|c| shared.apply(c));
            if let Some(path) = out {
                write_json(path, &rows)?;
            }
            print!("{}", results_table(&rows));
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
