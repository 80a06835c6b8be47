use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fstrips::FsError;

/// An object and where it initially stands on a table (world x, y).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectPlacement {
    pub name: String,
    pub position: [f64; 2],
}

/// Target for one object: either a real configuration id or a world point
/// that is snapped to the nearest real configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub object: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<[f64; 2]>,
}

/// A pick-and-place task over a precompiled scene. The arm starts at rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CtmpInstance {
    #[serde(default)]
    pub name: String,
    pub scene_hash: String,
    pub initial_base: u32,
    pub objects: Vec<ObjectPlacement>,
    pub goals: Vec<GoalSpec>,
}

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error("instance was generated for scene {found}, tables are for {expected}")]
    HashMismatch { expected: String, found: String },
    #[error("initial base b{0} does not exist")]
    UnknownBase(u32),
    #[error("invalid object name `{0}`")]
    BadName(String),
    #[error("object `{0}` declared twice")]
    DuplicateObject(String),
    #[error("goal refers to unknown object `{0}`")]
    UnknownObject(String),
    #[error("object `{0}` has more than one goal")]
    DuplicateGoal(String),
    #[error("goal for `{object}`: {msg}")]
    GoalSpec { object: String, msg: String },
    #[error("goal configuration c{config} for `{object}` is not a real configuration")]
    GoalConfig { object: String, config: u32 },
    #[error("{what} at ({x:.4}, {y:.4}) is not within snapping distance of any real configuration")]
    Snap { what: String, x: f64, y: f64 },
    #[error("objects `{first}` and `{second}` snap to the same configuration c{config}")]
    SharedConfig {
        first: String,
        second: String,
        config: u32,
    },
    #[error("initial state violates a state constraint: {0}")]
    InitialViolation(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: u32 },
    #[error(transparent)]
    Fs(#[from] FsError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed file: {0}")]
    Format(#[from] serde_json::Error),
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CompileError> {
    let text = std::fs::read_to_string(path).map_err(|source| CompileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CompileError> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|source| CompileError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl CtmpInstance {
    pub fn load(path: &Path) -> Result<CtmpInstance, CompileError> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<(), CompileError> {
        write_json(path, self)
    }
}

/// Object names become constants of the problem text.
pub(crate) fn valid_object_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    name.chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        && !matches!(name, "true" | "false" | "and" | "or" | "not")
}
