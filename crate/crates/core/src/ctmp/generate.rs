use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::instance::{CtmpInstance, GoalSpec, ObjectPlacement};
use crate::precompile::PlanningTables;

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("more goals ({goals}) than objects ({objects})")]
    TooManyGoals { goals: usize, objects: usize },
    #[error("could only place {placed} of {wanted} {what} without overlap")]
    Crowded {
        what: &'static str,
        placed: usize,
        wanted: usize,
    },
}

/// Minimum centre distance between two placed objects.
pub fn separation(tables: &PlanningTables) -> f64 {
    2.0 * tables.scene().object.radius + 0.01
}

/// Real configurations some arm pose can reach from a base in the largest
/// connected component of the base graph, with that component's bases.
pub fn reachable_configs(tables: &PlanningTables) -> (Vec<u32>, Vec<u32>) {
    let comps = tables.data.base_graph.components();
    let mut sizes = std::collections::HashMap::new();
    for &c in &comps {
        *sizes.entry(c).or_insert(0usize) += 1;
    }
    let best = sizes
        .iter()
        .max_by_key(|(c, n)| (**n, std::cmp::Reverse(**c)))
        .map(|(c, _)| *c)
        .unwrap_or(0);
    let bases: Vec<u32> = (0..comps.len() as u32)
        .filter(|&b| comps[b as usize] == best)
        .collect();
    let mut configs = BTreeSet::new();
    for &b in &bases {
        for a in 0..tables.n_arm_confs() as u32 {
            if let Ok(Some(c)) = tables.proc_pose(b, a) {
                configs.insert(c);
            }
        }
    }
    (configs.into_iter().collect(), bases)
}

/// Seeded instance: objects on distinct, non-overlapping reachable real
/// configurations; `n_goals` distinct objects get distinct free goal
/// configurations. Uniform over the candidates.
pub fn generate_instance(
    tables: &PlanningTables,
    name: &str,
    n_objects: usize,
    n_goals: usize,
    seed: u64,
) -> Result<CtmpInstance, GenerateError> {
    if n_goals > n_objects {
        return Err(GenerateError::TooManyGoals {
            goals: n_goals,
            objects: n_objects,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut configs, bases) = reachable_configs(tables);
    let initial_base = bases[rng.gen_range(0..bases.len())];
    configs.shuffle(&mut rng);
    let sep = separation(tables);
    let far = |placed: &[u32], c: u32| {
        let p = tables.real_point(c);
        placed.iter().all(|&q| tables.real_point(q).planar_dist(&p) >= sep)
    };

    let mut placed: Vec<u32> = Vec::new();
    for &c in &configs {
        if placed.len() == n_objects {
            break;
        }
        if far(&placed, c) {
            placed.push(c);
        }
    }
    if placed.len() < n_objects {
        return Err(GenerateError::Crowded {
            what: "objects",
            placed: placed.len(),
            wanted: n_objects,
        });
    }

    let mut goal_objects: Vec<usize> = (0..n_objects).collect();
    goal_objects.shuffle(&mut rng);
    goal_objects.truncate(n_goals);
    let mut blocked = placed.clone();
    let mut goal_configs = Vec::new();
    for &c in &configs {
        if goal_configs.len() == n_goals {
            break;
        }
        if far(&blocked, c) {
            blocked.push(c);
            goal_configs.push(c);
        }
    }
    if goal_configs.len() < n_goals {
        return Err(GenerateError::Crowded {
            what: "goals",
            placed: goal_configs.len(),
            wanted: n_goals,
        });
    }

    let objects = placed
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let p = tables.real_point(c);
            ObjectPlacement {
                name: format!("o{}", i + 1),
                position: [p.x, p.y],
            }
        })
        .collect();
    let goals = goal_objects
        .iter()
        .zip(&goal_configs)
        .map(|(&o, &c)| GoalSpec {
            object: format!("o{}", o + 1),
            config: Some(c),
            point: None,
        })
        .collect();
    Ok(CtmpInstance {
        name: name.to_string(),
        scene_hash: tables.data.scene_hash.clone(),
        initial_base,
        objects,
        goals,
    })
}
