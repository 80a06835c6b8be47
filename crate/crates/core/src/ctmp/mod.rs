//! Pick-and-place instances compiled into Functional STRIPS with state
//! constraints. Four action schemas (MoveBase, MoveArm, Grasp, Place), one
//! collision constraint per object, and procedures answered by the
//! precompiled tables.

mod compile;
mod generate;
mod instance;
mod validate;

pub use compile::{arm_name, compile, CompiledInstance, CtmpAction, CtmpVars, ProcMode, SnapReport, SymbolLayout};
pub use generate::{generate_instance, reachable_configs, separation, GenerateError};
pub use instance::{CompileError, CtmpInstance, GoalSpec, ObjectPlacement};
pub use validate::{expand_plan, replay_verdict, validate_plan, PlanFile, TraceStep, Verdict};

#[cfg(test)]
mod tests;
