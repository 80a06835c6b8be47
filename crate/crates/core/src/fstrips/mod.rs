//! Functional STRIPS with state constraints and externally defined procedures.
//!
//! States assign values to state variables `f(c)`; terms such as
//! `clear(loc(b))` are evaluated through nested fluents. An action is
//! applicable when its precondition holds in the source state and every
//! ground state constraint holds in the resulting state.

mod ground;
mod parse;
mod problem;
mod syntax;

pub use ground::{normalize_action_name, GroundProblem, Replay};
pub use parse::{parse_problem, parse_problem_with, read_sexprs, SExpr};
pub use problem::{Problem, Procedure, ProcedureRegistry, Signature, State, StateVar, VarTable};
pub use syntax::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FsError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("type error: {0}")]
    Type(String),
    #[error("procedure `{0}` is not registered")]
    UnregisteredProcedure(String),
    #[error("procedure `{name}` is undefined for ({args})")]
    ProcedureUndefined { name: String, args: String },
    #[error("fixed symbol `{name}` has no table entry for ({args})")]
    TableMiss { name: String, args: String },
    #[error("action {action} writes {var} twice ({first} vs {second})")]
    EffectConflict {
        action: String,
        var: String,
        first: String,
        second: String,
    },
    #[error("value outside its domain: {what}")]
    OutOfDomain { what: String },
    #[error("empty type `{0}` used as a parameter domain")]
    EmptyType(String),
    #[error("invalid initial situation: {0}")]
    Initial(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTER: &str = r#"
        (:types (num :range 0 5) (flag on off))
        (:fluents (X - num) (Y - num) (F - flag))
        (:action inc :prec (= F on) :eff (:= X (+ X 1)))
        (:action both :eff (and (:= X Y) (:= Y X)))
        (:action clash :eff (and (:= X 1) (:= X 2)))
        (:action same :eff (and (:= X 1) (:= X 1)))
        (:action noop)
        (:init (= X 2) (= Y 4) (= F on))
        (:goal (or (= X 3) (= X 2)))
    "#;

    const BLOCKS: &str = r#"
        (:types (block a b c) (place a b c table))
        (:fluents (loc block - place) (clear place - bool))
        (:action move
          :parameters (?b - block ?to - block)
          :prec (and (= (clear ?b) true) (= (clear ?to) true) (not (= ?b ?to)))
          :eff (and (:= (loc ?b) ?to) (:= (clear ?to) false) (:= (clear (loc ?b)) true)))
        (:init (= (loc a) b) (= (loc b) table) (= (loc c) table)
               (= (clear a) true) (= (clear b) false) (= (clear c) true) (= (clear table) true))
        (:goal (= (loc a) c))
    "#;

    fn counter() -> GroundProblem {
        parse_problem(COUNTER, &ProcedureRegistry::new())
            .unwrap()
            .ground()
            .unwrap()
    }

    fn act(g: &GroundProblem, name: &str) -> ActionId {
        g.action_by_name(name).unwrap()
    }

    #[test]
    fn increment_uses_source_state_and_keeps_frame() {
        let g = counter();
        let p = &g.problem;
        let s = g.init().clone();
        let x = p.var_id("X", &[]).unwrap();
        let y = p.var_id("Y", &[]).unwrap();
        assert_eq!(s.get(x), Value::Int(2));
        let t = g.apply_effects(&s, act(&g, "inc")).unwrap();
        assert_eq!(t.get(x), Value::Int(3));
        assert_eq!(t.get(y), s.get(y));
        // X + 1 as a term
        let term = Term::Arith {
            op: ArithOp::Add,
            lhs: Box::new(Term::Var(x)),
            rhs: Box::new(Term::Const(Value::Int(1))),
        };
        assert_eq!(p.eval_term(&s, &term).unwrap(), Value::Int(3));
    }

    #[test]
    fn simultaneous_swap() {
        let g = counter();
        let p = &g.problem;
        let t = g.apply_effects(g.init(), act(&g, "both")).unwrap();
        assert_eq!(t.get(p.var_id("X", &[]).unwrap()), Value::Int(4));
        assert_eq!(t.get(p.var_id("Y", &[]).unwrap()), Value::Int(2));
    }

    #[test]
    fn conflicting_writes_are_an_error() {
        let g = counter();
        let e = g.apply_effects(g.init(), act(&g, "clash")).unwrap_err();
        assert!(matches!(e, FsError::EffectConflict { .. }), "{e}");
        // agreeing duplicate writes are fine
        assert!(g.apply_effects(g.init(), act(&g, "same")).is_ok());
    }

    #[test]
    fn empty_effects_leave_state_unchanged() {
        let g = counter();
        let t = g.apply_effects(g.init(), act(&g, "noop")).unwrap();
        assert_eq!(&t, g.init());
    }

    #[test]
    fn disjunctive_goal_and_constant_equality() {
        let g = counter();
        assert!(g.goal_satisfied(g.init()).unwrap());
        let c = Term::Const(Value::Int(4));
        assert!(g
            .eval_formula(g.init(), &Formula::Eq(c.clone(), c.clone()))
            .unwrap());
        assert_eq!(g.eval_term(g.init(), &c).unwrap(), Value::Int(4));
    }

    #[test]
    fn out_of_range_write_is_rejected() {
        let g = counter();
        let mut s = g.init().clone();
        for _ in 0..3 {
            s = g.apply_effects(&s, act(&g, "inc")).unwrap();
        }
        // X = 5 now
        assert!(matches!(
            g.apply_effects(&s, act(&g, "inc")),
            Err(FsError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn nested_fluent_denotation() {
        let g = parse_problem(BLOCKS, &ProcedureRegistry::new())
            .unwrap()
            .ground()
            .unwrap();
        let p = &g.problem;
        let s = g.init();
        let clear = p.signature.fn_id("clear").unwrap();
        let loc = p.signature.fn_id("loc").unwrap();
        let a = p.parse_value("a").unwrap();
        // clear(loc(a)) with loc(a)=b is clear(b)
        let t = Term::App {
            func: clear,
            args: vec![Term::App {
                func: loc,
                args: vec![Term::Const(a)],
            }],
        };
        assert_eq!(p.eval_term(s, &t).unwrap(), Value::Bool(false));

        // effect clear(loc(a)) := true behaves like clear(b) := true
        let via_nested = p
            .apply_effects(
                s,
                "t",
                &[Effect {
                    lhs: t.clone(),
                    rhs: Term::Const(Value::Bool(true)),
                }],
            )
            .unwrap();
        let direct = p
            .apply_effects(
                s,
                "t",
                &[Effect {
                    lhs: Term::Var(p.var_id("clear", &["b"]).unwrap()),
                    rhs: Term::Const(Value::Bool(true)),
                }],
            )
            .unwrap();
        assert_eq!(via_nested, direct);
        assert_eq!(via_nested.get(p.var_id("clear", &["b"]).unwrap()), Value::Bool(true));
    }

    #[test]
    fn blocks_move_frees_old_location() {
        let g = parse_problem(BLOCKS, &ProcedureRegistry::new())
            .unwrap()
            .ground()
            .unwrap();
        let p = &g.problem;
        let succ = g.successors(g.init()).unwrap();
        let names: Vec<_> = succ.iter().map(|(a, _)| g.action(*a).name.clone()).collect();
        assert_eq!(names, vec!["(move a c)", "(move c a)"]);
        let (_, t) = &succ[0];
        assert_eq!(t.get(p.var_id("loc", &["a"]).unwrap()), p.parse_value("c").unwrap());
        assert_eq!(t.get(p.var_id("clear", &["b"]).unwrap()), Value::Bool(true));
        assert_eq!(t.get(p.var_id("clear", &["c"]).unwrap()), Value::Bool(false));
        assert!(g.goal_satisfied(t).unwrap());
        assert!(!g.goal_satisfied(g.init()).unwrap());
    }

    #[test]
    fn single_move_has_one_successor() {
        let text = r#"
            (:types (block b1 b2))
            (:fluents (clear block - bool))
            (:action move :parameters (?b - block ?c - block)
               :prec (and (= (clear ?b) true) (= (clear ?c) true) (= ?b b1) (= ?c b2))
               :eff (:= (clear ?c) false))
            (:init (= (clear b1) true) (= (clear b2) true))
        "#;
        let g = parse_problem(text, &ProcedureRegistry::new())
            .unwrap()
            .ground()
            .unwrap();
        assert_eq!(g.actions.len(), 4);
        assert_eq!(g.successors(g.init()).unwrap().len(), 1);
    }

    #[test]
    fn state_constraint_blocks_action() {
        let text = r#"
            (:types (n :range 0 3))
            (:fluents (X - n))
            (:action up :eff (:= X (+ X 1)))
            (:state-constraint (not (= X 2)))
            (:init (= X 1))
        "#;
        let g = parse_problem(text, &ProcedureRegistry::new())
            .unwrap()
            .ground()
            .unwrap();
        let up = act(&g, "up");
        assert!(g.precondition_holds(g.init(), up).unwrap());
        assert!(!g.is_applicable(g.init(), up).unwrap());
        assert!(g.successors(g.init()).unwrap().is_empty());
        assert_eq!(g.constraints.len(), 1);
    }

    #[test]
    fn false_precondition_is_never_applicable() {
        let text = r#"
            (:types (n :range 0 3))
            (:fluents (X - n))
            (:action up :prec (= X 3) :eff (:= X 0))
            (:init (= X 1))
        "#;
        let g = parse_problem(text, &ProcedureRegistry::new())
            .unwrap()
            .ground()
            .unwrap();
        assert!(!g.is_applicable(g.init(), act(&g, "up")).unwrap());
    }

    #[test]
    fn initial_constraint_violation_is_reported() {
        let text = r#"
            (:types (n :range 0 3))
            (:fluents (X - n))
            (:state-constraint (= X 0))
            (:init (= X 1))
        "#;
        let e = parse_problem(text, &ProcedureRegistry::new())
            .unwrap()
            .ground()
            .unwrap_err();
        assert!(matches!(e, FsError::Initial(_)));
    }

    #[test]
    fn procedures_bind_by_name() {
        let text = r#"
            (:types (obj o1 o2 o3))
            (:fluents (sel - obj))
            (:procedures (@next obj - obj) (@ok obj - bool))
            (:action step :prec (@ok sel) :eff (:= sel (@next sel)))
            (:state-constraint :parameter (?o - obj) (or (= ?o o3) (not (= sel ?o)) (@ok ?o)))
            (:init (= sel o1))
            (:goal (= sel o3))
        "#;
        assert!(matches!(
            parse_problem(text, &ProcedureRegistry::new()),
            Err(FsError::UnregisteredProcedure(_))
        ));
        let mut reg = ProcedureRegistry::new();
        // symbols are interned in declaration order: o1=0, o2=1, o3=2
        reg.register("@next", |a: &[Value]| match a[0] {
            Value::Sym(SymId(i)) if i < 2 => Some(Value::Sym(SymId(i + 1))),
            _ => None,
        });
        reg.register("@ok", |a: &[Value]| Some(Value::Bool(a[0] != Value::Sym(SymId(2)))));
        let g = parse_problem(text, &reg).unwrap().ground().unwrap();
        assert_eq!(g.constraints.len(), 3);
        let (a, s1) = g.successors(g.init()).unwrap().remove(0);
        assert_eq!(g.action(a).name, "(step)");
        let (_, s2) = g.successors(&s1).unwrap().remove(0);
        assert!(g.goal_satisfied(&s2).unwrap());
        assert!(g.successors(&s2).unwrap().is_empty());
    }

    #[test]
    fn extensional_tables_must_be_total() {
        let text = r#"
            (:types (n :range 0 2))
            (:fluents (X - n))
            (:fixed (succ n - n))
            (:init (= X 0) (= (succ 0) 1) (= (succ 1) 2))
        "#;
        assert!(matches!(
            parse_problem(text, &ProcedureRegistry::new()),
            Err(FsError::Initial(_))
        ));
        let full = text.replace("(= (succ 1) 2))", "(= (succ 1) 2) (= (succ 2) 0))");
        let text2 = format!("{full}\n(:action s :eff (:= X (succ X)))");
        let g = parse_problem(&text2, &ProcedureRegistry::new())
            .unwrap()
            .ground()
            .unwrap();
        let s = g.apply_effects(g.init(), act(&g, "s")).unwrap();
        assert_eq!(s.get(VarId(0)), Value::Int(1));
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = parse_problem("(:types (a x))\n(:fluents (f - a)\n", &ProcedureRegistry::new())
            .unwrap_err();
        assert!(matches!(e, FsError::Parse { line: 2, .. }), "{e}");
        let e = parse_problem("(:types (a x))\n(:bogus)", &ProcedureRegistry::new()).unwrap_err();
        assert!(matches!(e, FsError::Parse { line: 2, .. }));
        let e = parse_problem(
            "(:types (a x))\n(:fluents (f - a))\n(:init (= f y))",
            &ProcedureRegistry::new(),
        )
        .unwrap_err();
        assert!(matches!(e, FsError::Parse { line: 3, .. }), "{e}");
    }

    #[test]
    fn procedure_prefix_is_enforced() {
        let e = parse_problem("(:types (a x))\n(:procedures (f a - a))", &ProcedureRegistry::new())
            .unwrap_err();
        assert!(matches!(e, FsError::Parse { .. }));
        let e = parse_problem("(:types (a x))\n(:fixed (@f a - a))", &ProcedureRegistry::new())
            .unwrap_err();
        assert!(matches!(e, FsError::Parse { .. }));
    }

    #[test]
    fn type_mismatch_is_rejected() {
        let text = r#"
            (:types (a x) (b y))
            (:fluents (f a - bool))
            (:action bad :parameters (?v - b) :eff (:= (f ?v) true))
            (:init (= (f x) true))
        "#;
        assert!(matches!(
            parse_problem(text, &ProcedureRegistry::new()),
            Err(FsError::Type(_))
        ));
    }

    #[test]
    fn zero_parameter_schema_grounds_once() {
        let g = counter();
        assert_eq!(g.actions.iter().filter(|a| a.name == "(noop)").count(), 1);
        assert_eq!(g.actions.len(), 5);
    }

    #[test]
    fn empty_parameter_domain_errors() {
        // a :range with lo > hi is rejected at parse time; an empty symbolic
        // type cannot be declared at all
        let e = parse_problem("(:types (n :range 3 1))", &ProcedureRegistry::new()).unwrap_err();
        assert!(matches!(e, FsError::Parse { .. }));
        let e = parse_problem("(:types (n))", &ProcedureRegistry::new()).unwrap_err();
        assert!(matches!(e, FsError::Parse { .. }));
    }

    #[test]
    fn grounding_order_is_lexicographic() {
        let text = r#"
            (:types (t p q r))
            (:fluents (v - t))
            (:action go :parameters (?x - t ?y - t) :prec (= v ?x) :eff (:= v ?y))
            (:state-constraint :parameters (?z - t) (or (= v ?z) (not (= v ?z))))
            (:init (= v p))
        "#;
        let g = parse_problem(text, &ProcedureRegistry::new())
            .unwrap()
            .ground()
            .unwrap();
        let names: Vec<_> = g.actions.iter().map(|a| a.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "(go p p)", "(go p q)", "(go p r)", "(go q p)", "(go q q)", "(go q r)",
                "(go r p)", "(go r q)", "(go r r)"
            ]
        );
        assert_eq!(g.constraints.len(), 3);
    }

    #[test]
    fn state_encoding_is_injective_on_values() {
        let g = counter();
        let s = g.init().clone();
        let t = g.apply_effects(&s, act(&g, "inc")).unwrap();
        assert_ne!(s.encode(), t.encode());
        assert_eq!(s.encode(), g.init().encode());
        assert_eq!(s.encode().len(), 9 * s.len());
    }
}
