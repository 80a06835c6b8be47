use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::fstrips::{State, Value};
use crate::geometry::Scene;
use crate::precompile::{ConfArg, PlanningTables, PrecompiledTables};
use crate::search::{breadth_first, Limits, SearchOutcome};

fn micro_tables() -> Arc<PlanningTables> {
    let (data, _) = PrecompiledTables::build(&Scene::micro()).unwrap();
    Arc::new(PlanningTables::new(data))
}

/// Objects `o1..` resting exactly on the given real configurations.
fn instance_at(t: &PlanningTables, base: u32, configs: &[u32], goals: &[(usize, u32)]) -> CtmpInstance {
    CtmpInstance {
        name: "t".into(),
        scene_hash: t.data.scene_hash.clone(),
        initial_base: base,
        objects: configs
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let p = t.real_point(c);
                ObjectPlacement {
                    name: format!("o{}", i + 1),
                    position: [p.x, p.y],
                }
            })
            .collect(),
        goals: goals
            .iter()
            .map(|&(o, c)| GoalSpec {
                object: format!("o{}", o + 1),
                config: Some(c),
                point: None,
            })
            .collect(),
    }
}

/// A compilable three-object instance on the micro scene.
fn three_objects(t: &Arc<PlanningTables>) -> CompiledInstance {
    let inst = instance_at(t, 0, &[0, 2, 4], &[(0, 1)]);
    compile(&inst, t.clone(), ProcMode::Lookup).unwrap()
}

fn random_walk(ci: &CompiledInstance, steps: usize, seed: u64) -> Vec<State> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = ci.ground.init().clone();
    let mut out = vec![s.clone()];
    for _ in 0..steps {
        let succ = ci.ground.successors(&s).unwrap();
        let Some((_, next)) = succ.choose(&mut rng) else { break };
        s = next.clone();
        out.push(s.clone());
    }
    out
}

#[test]
fn ground_action_count_matches_closed_form() {
    let t = micro_tables();
    for n in 0..=3usize {
        let configs: Vec<u32> = [0, 2, 4][..n].to_vec();
        let ci = compile(&instance_at(&t, 0, &configs, &[]), t.clone(), ProcMode::Lookup).unwrap();
        let expected = t.data.base_graph.edges.len() + t.data.arm_graph.edges.len() + 2 * n;
        assert_eq!(ci.ground.actions.len(), expected);
        assert_eq!(ci.expected_action_count(), expected);
        assert_eq!(ci.ground.constraints.len(), n);
    }
}

#[test]
fn zero_objects_has_no_grasp_place_or_constraints() {
    let t = micro_tables();
    let inst = instance_at(&t, 0, &[], &[]);
    let ci = compile(&inst, t.clone(), ProcMode::Lookup).unwrap();
    assert!(ci
        .ground
        .actions
        .iter()
        .all(|a| !a.name.starts_with("(Grasp") && !a.name.starts_with("(Place")));
    assert!(ci.ground.constraints.is_empty());
    assert!(ci.ground.goal_satisfied(ci.ground.init()).unwrap());
    let v = validate_plan::<&str>(&inst, t, &[]).unwrap();
    assert!(v.valid, "{v:?}");
}

#[test]
fn initial_state_moves_the_base_but_cannot_grasp() {
    let t = micro_tables();
    let ci = three_objects(&t);
    let succ = ci.ground.successors(ci.ground.init()).unwrap();
    assert!(succ.iter().any(|(a, _)| matches!(ci.kind(*a), CtmpAction::MoveBase(_))));
    assert!(succ.iter().all(|(a, _)| !matches!(ci.kind(*a), CtmpAction::Grasp(_))));
}

#[test]
fn hold_and_held_configuration_agree_on_random_walks() {
    let t = micro_tables();
    let ci = three_objects(&t);
    for seed in 0..20 {
        for s in random_walk(&ci, 150, seed) {
            let held: Vec<u32> = (0..3).filter(|&o| ci.conf(&s, o) == ConfArg::Held).collect();
            match ci.held(&s) {
                None => assert!(held.is_empty()),
                Some(o) => assert_eq!(held, vec![o]),
            }
            assert_eq!(ci.ground.violated_constraint(&s).unwrap(), None);
        }
    }
}

#[test]
fn grasp_then_place_restores_the_configuration() {
    let t = micro_tables();
    let ci = three_objects(&t);
    let mut checked = 0;
    for seed in 0..30 {
        for s in random_walk(&ci, 100, seed) {
            for o in 0..3 {
                let grasp = ci.grasp_action(o);
                if !ci.ground.precondition_holds(&s, grasp).unwrap() {
                    continue;
                }
                let held = ci.ground.apply_effects(&s, grasp).unwrap();
                let place = ci.place_action(o);
                assert!(ci.ground.precondition_holds(&held, place).unwrap());
                let back = ci.ground.apply_effects(&held, place).unwrap();
                assert_eq!(ci.conf(&back, o), ci.conf(&s, o));
                assert_eq!(back, s.clone());
                checked += 1;
            }
        }
    }
    assert!(checked > 0, "no grasp was ever applicable");
}

#[test]
fn lookup_and_geometry_successors_agree() {
    let t = micro_tables();
    let inst = instance_at(&t, 0, &[0, 2, 4], &[(0, 1)]);
    let fast = compile(&inst, t.clone(), ProcMode::Lookup).unwrap();
    let slow = compile(&inst, t.clone(), ProcMode::DirectGeometry).unwrap();
    assert_eq!(fast.text, slow.text);
    for seed in 0..10 {
        for s in random_walk(&fast, 80, seed) {
            assert_eq!(
                fast.ground.successors(&s).unwrap(),
                slow.ground.successors(&s).unwrap()
            );
        }
    }
}

fn solved_plan(ci: &CompiledInstance) -> Vec<crate::fstrips::ActionId> {
    match breadth_first(&ci.ground, true, &Limits::default()).unwrap().0 {
        SearchOutcome::Solved(p) => p,
        other => panic!("micro instance not solved: {other:?}"),
    }
}

#[test]
fn breadth_first_plan_validates_with_geometry() {
    let t = micro_tables();
    let inst = instance_at(&t, 0, &[0, 2, 4], &[(0, 1)]);
    let ci = compile(&inst, t.clone(), ProcMode::Lookup).unwrap();
    let plan = solved_plan(&ci);
    assert!(!plan.is_empty());
    let v = validate_plan(&inst, t, &ci.action_names(&plan)).unwrap();
    assert!(v.valid && v.goal_reached, "{v:?}");
    assert_eq!(v.steps, plan.len());
}

#[test]
fn premature_grasp_is_diagnosed() {
    let t = micro_tables();
    let inst = instance_at(&t, 0, &[0, 2, 4], &[(0, 1)]);
    let ci = compile(&inst, t.clone(), ProcMode::Lookup).unwrap();
    let plan = solved_plan(&ci);
    let first_grasp = plan
        .iter()
        .position(|&a| matches!(ci.kind(a), CtmpAction::Grasp(_)))
        .unwrap();
    // drop the motion that brought the arm to the grasp pose
    let mut broken = plan[..first_grasp].to_vec();
    broken.pop();
    broken.push(plan[first_grasp]);
    let v = validate_plan(&inst, t, &ci.action_names(&broken)).unwrap();
    assert!(!v.valid);
    assert_eq!(v.failed_step, Some(broken.len() - 1));
    assert!(v.reason.contains("@graspable"), "{}", v.reason);
}

#[test]
fn incomplete_plan_reports_unreached_goal() {
    let t = micro_tables();
    let inst = instance_at(&t, 0, &[0, 2, 4], &[(0, 1)]);
    let v = validate_plan::<&str>(&inst, t, &[]).unwrap();
    assert!(!v.valid && !v.goal_reached);
    assert!(v.reason.starts_with("goal not reached"), "{}", v.reason);
}

#[test]
fn unknown_plan_action_is_rejected() {
    let t = micro_tables();
    let inst = instance_at(&t, 0, &[0], &[]);
    let e = validate_plan(&inst, t, &["(MoveArm t9999)"]).unwrap_err();
    assert!(matches!(e, CompileError::UnknownAction(_)));
}

#[test]
fn plan_names_parse_with_or_without_parentheses() {
    let t = micro_tables();
    let ci = three_objects(&t);
    let a = ci.parse_plan(&["MoveArm t0", "(MoveArm  t0)"]).unwrap();
    assert_eq!(a[0], a[1]);
    assert_eq!(ci.kind(a[0]), CtmpAction::MoveArm(0));
}

#[test]
fn expanded_trace_has_one_step_per_action() {
    let t = micro_tables();
    let ci = three_objects(&t);
    assert!(expand_plan(&ci, &[]).unwrap().is_empty());
    let plan = solved_plan(&ci);
    let trace = expand_plan(&ci, &plan).unwrap();
    assert_eq!(trace.len(), plan.len());
    let mut base = ci.initial_base;
    for step in &trace {
        match step {
            TraceStep::MoveBase { edge, path, .. } => {
                assert!(path.len() >= 2);
                base = t.data.base_graph.edges[*edge as usize].target;
            }
            TraceStep::MoveArm {
                trajectory,
                base: b,
                waypoints,
                ..
            } => {
                assert_eq!(*b, base);
                assert_eq!(
                    waypoints.len(),
                    t.data.arm_graph.edges[*trajectory as usize].waypoints.len()
                );
            }
            TraceStep::Grasp { object, .. } | TraceStep::Place { object, .. } => {
                assert!(ci.object_index(object).is_some())
            }
        }
    }
    let file = PlanFile {
        instance: "t".into(),
        actions: ci.action_names(&plan),
        trace: Some(trace),
    };
    let json = serde_json::to_string(&file).unwrap();
    let back: PlanFile = serde_json::from_str(&json).unwrap();
    assert_eq!(back.actions, file.actions);
}

#[test]
fn compile_errors() {
    let t = micro_tables();
    let ok = instance_at(&t, 0, &[0, 2], &[(0, 1)]);
    let err = |inst: &CtmpInstance| compile(inst, t.clone(), ProcMode::Lookup).unwrap_err();

    let mut bad = ok.clone();
    bad.scene_hash = "0".into();
    assert!(matches!(err(&bad), CompileError::HashMismatch { .. }));

    let mut bad = ok.clone();
    bad.initial_base = 999;
    assert!(matches!(err(&bad), CompileError::UnknownBase(999)));

    let mut bad = ok.clone();
    bad.objects[1].name = "o1".into();
    assert!(matches!(err(&bad), CompileError::DuplicateObject(_)));

    let mut bad = ok.clone();
    bad.objects[1].name = "2x".into();
    assert!(matches!(err(&bad), CompileError::BadName(_)));

    let mut bad = ok.clone();
    bad.objects[1].position = bad.objects[0].position;
    assert!(matches!(err(&bad), CompileError::SharedConfig { .. }));

    let mut bad = ok.clone();
    bad.objects[1].position = [25.0, 25.0];
    assert!(matches!(err(&bad), CompileError::Snap { .. }));

    let mut bad = ok.clone();
    bad.goals[0].object = "o9".into();
    assert!(matches!(err(&bad), CompileError::UnknownObject(_)));

    let mut bad = ok.clone();
    bad.goals.push(bad.goals[0].clone());
    assert!(matches!(err(&bad), CompileError::DuplicateGoal(_)));

    let mut bad = ok.clone();
    bad.goals[0].config = Some(10_000);
    assert!(matches!(err(&bad), CompileError::GoalConfig { .. }));

    let mut bad = ok.clone();
    bad.goals[0].point = Some([0.0, 0.0]);
    assert!(matches!(err(&bad), CompileError::GoalSpec { .. }));
}

#[test]
fn goal_points_snap_and_are_reported() {
    let t = micro_tables();
    let mut inst = instance_at(&t, 0, &[0], &[]);
    let p = t.real_point(3);
    inst.goals.push(GoalSpec {
        object: "o1".into(),
        config: None,
        point: Some([p.x + 0.004, p.y]),
    });
    let ci = compile(&inst, t.clone(), ProcMode::Lookup).unwrap();
    assert_eq!(ci.goals, vec![(0, 3)]);
    let report = ci.snaps.iter().find(|r| r.what.contains("goal")).unwrap();
    assert_eq!(report.config, 3);
    assert!((report.distance - 0.004).abs() < 1e-9);
}

#[test]
fn overlapping_goal_placement_still_compiles() {
    let t = micro_tables();
    // o1 must go where o2 sits
    let inst = instance_at(&t, 0, &[0, 1], &[(0, 1)]);
    assert!(compile(&inst, t, ProcMode::Lookup).is_ok());
}

#[test]
fn instance_file_round_trip() {
    let t = micro_tables();
    let inst = instance_at(&t, 1, &[0, 2], &[(1, 3)]);
    let dir = std::env::temp_dir().join(format!("ctmp-inst-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("i.json");
    inst.save(&path).unwrap();
    assert_eq!(CtmpInstance::load(&path).unwrap(), inst);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn generated_instances_compile_and_are_deterministic() {
    let (data, _) = PrecompiledTables::build(&Scene::one_table()).unwrap();
    let t = Arc::new(PlanningTables::new(data));
    for seed in 0..10 {
        let n = 5 + seed as usize % 6;
        let goals = 1 + seed as usize % 3;
        let inst = generate_instance(&t, "g", n, goals, seed).unwrap();
        assert_eq!(inst, generate_instance(&t, "g", n, goals, seed).unwrap());
        assert_eq!(inst.objects.len(), n);
        assert_eq!(inst.goals.len(), goals);
        let ci = compile(&inst, t.clone(), ProcMode::Lookup).unwrap();
        assert!(ci.snaps.iter().all(|r| r.distance < 1e-9));
        let mut goal_configs: Vec<u32> = ci.goals.iter().map(|g| g.1).collect();
        goal_configs.sort_unstable();
        goal_configs.dedup();
        assert_eq!(goal_configs.len(), goals);
        assert!(goal_configs.iter().all(|c| !ci.initial_configs.contains(c)));
    }
    assert_ne!(
        generate_instance(&t, "g", 8, 2, 1).unwrap(),
        generate_instance(&t, "g", 8, 2, 2).unwrap()
    );
    let trivial = generate_instance(&t, "g", 6, 0, 3).unwrap();
    let ci = compile(&trivial, t.clone(), ProcMode::Lookup).unwrap();
    assert!(ci.ground.goal_satisfied(ci.ground.init()).unwrap());
    assert!(matches!(
        generate_instance(&t, "g", 2, 3, 0),
        Err(GenerateError::TooManyGoals { .. })
    ));
    assert!(matches!(
        generate_instance(&t, "g", 5000, 1, 0),
        Err(GenerateError::Crowded { .. })
    ));
}

#[test]
fn held_and_dummy_values_decode() {
    let t = micro_tables();
    let ci = three_objects(&t);
    let s = ci.ground.init();
    assert_eq!(ci.traj(s), None);
    assert_eq!(ci.held(s), None);
    assert_eq!(ci.arm(s), 0);
    assert_eq!(ci.base(s), 0);
    assert_eq!(ci.conf(s, 1), ConfArg::Real(2));
    assert_eq!(ci.layout.conf(ci.layout.conf_sym(ConfArg::Held)), Some(ConfArg::Held));
    assert!(matches!(ci.layout.none(), Value::Sym(_)));
}
