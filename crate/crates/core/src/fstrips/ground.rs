use std::collections::HashMap;

use super::problem::{cartesian, Problem, State};
use super::syntax::*;
use super::FsError;

/// A fully instantiated problem: ground actions, ground constraints, goal.
///
/// Immutable after construction; evaluation and successor generation are pure.
#[derive(Debug, Clone)]
pub struct GroundProblem {
    pub problem: Problem,
    pub actions: Vec<GroundAction>,
    pub constraints: Vec<GroundConstraint>,
    pub goal: Formula,
    guards: Vec<Option<(VarId, Value)>>,
    guard_index: Vec<HashMap<Value, Vec<u32>>>,
    guard_vars: Vec<VarId>,
    unguarded: Vec<u32>,
}

/// Outcome of replaying an action sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Replay {
    Valid,
    /// Step `step` (0-based) had a false precondition.
    PreconditionFailed { step: usize },
    /// Step `step` led to a state violating ground constraint `constraint`.
    ConstraintViolated { step: usize, constraint: usize },
    GoalNotReached,
}

impl Problem {
    /// Instantiates every schema over its parameter domains.
    ///
    /// Ordering is schema order, then lexicographic in member order. Fixed
    /// symbols applied to constants are folded; fluents with constant
    /// arguments become state variables.
    pub fn ground(self) -> Result<GroundProblem, FsError> {
        let mut actions = Vec::new();
        for (si, schema) in self.actions.iter().enumerate() {
            for args in self.instantiations(&schema.params)? {
                let pre = self.ground_formula(&schema.pre, &args);
                let effects = schema
                    .effects
                    .iter()
                    .map(|e| Effect {
                        lhs: self.ground_term(&e.lhs, &args),
                        rhs: self.ground_term(&e.rhs, &args),
                    })
                    .collect();
                let name = ground_name(&self, &schema.name, &args);
                actions.push(GroundAction {
                    schema: si,
                    args,
                    name,
                    pre,
                    effects,
                });
            }
        }
        let mut constraints = Vec::new();
        for (si, schema) in self.constraints.iter().enumerate() {
            for args in self.instantiations(&schema.params)? {
                let body = self.ground_formula(&schema.body, &args);
                constraints.push(GroundConstraint {
                    schema: si,
                    args,
                    body,
                });
            }
        }
        let goal = self.ground_formula(&self.goal, &[]);

        for (i, c) in constraints.iter().enumerate() {
            if !self.eval_formula(&self.init, &c.body)? {
                return Err(FsError::Initial(format!(
                    "state constraint #{i} ({}) is false in the initial state",
                    self.show_args_pub(&c.args)
                )));
            }
        }

        let guards = choose_guards(&actions);
        let mut guard_index = vec![HashMap::new(); self.vars.len()];
        let mut guard_vars = Vec::new();
        let mut unguarded = Vec::new();
        for (i, g) in guards.iter().enumerate() {
            match g {
                Some((var, val)) => {
                    let slot: &mut HashMap<Value, Vec<u32>> = &mut guard_index[var.0 as usize];
                    if slot.is_empty() {
                        guard_vars.push(*var);
                    }
                    slot.entry(*val).or_default().push(i as u32);
                }
                None => unguarded.push(i as u32),
            }
        }
        guard_vars.sort();

        Ok(GroundProblem {
            problem: self,
            actions,
            constraints,
            goal,
            guards,
            guard_index,
            guard_vars,
            unguarded,
        })
    }

    pub(crate) fn show_args_pub(&self, args: &[Value]) -> String {
        args.iter()
            .map(|&a| self.symbols.show(a))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn instantiations(&self, params: &[Parameter]) -> Result<Vec<Vec<Value>>, FsError> {
        let domains: Vec<&TypeDef> = params.iter().map(|p| self.signature.ty(p.ty)).collect();
        if let Some(d) = domains.iter().find(|d| d.size() == 0) {
            return Err(FsError::EmptyType(d.name.clone()));
        }
        let sizes: Vec<usize> = domains.iter().map(|d| d.size()).collect();
        Ok(cartesian(&sizes)
            .into_iter()
            .map(|t| t.iter().zip(&domains).map(|(&i, d)| d.member(i)).collect())
            .collect())
    }

    pub(crate) fn ground_term(&self, t: &Term, args: &[Value]) -> Term {
        match t {
            Term::Param(i) => Term::Const(args[*i]),
            Term::Const(_) | Term::Var(_) => t.clone(),
            Term::App { func, args: sub } => {
                let sub: Vec<Term> = sub.iter().map(|a| self.ground_term(a, args)).collect();
                let consts: Option<Vec<Value>> = sub
                    .iter()
                    .map(|a| match a {
                        Term::Const(v) => Some(*v),
                        _ => None,
                    })
                    .collect();
                if let Some(vals) = consts {
                    if self.signature.func(*func).kind == FunctionKind::Fluent {
                        if let Some(var) = self.vars.resolve(&self.signature, *func, &vals) {
                            return Term::Var(var);
                        }
                    } else if let Ok(v) = self.eval_fixed(*func, &vals) {
                        return Term::Const(v);
                    }
                }
                Term::App {
                    func: *func,
                    args: sub,
                }
            }
            Term::Arith { op, lhs, rhs } => {
                let l = self.ground_term(lhs, args);
                let r = self.ground_term(rhs, args);
                if let (Term::Const(a), Term::Const(b)) = (&l, &r) {
                    let folded = Term::Arith {
                        op: *op,
                        lhs: Box::new(Term::Const(*a)),
                        rhs: Box::new(Term::Const(*b)),
                    };
                    if let Ok(v) = self.eval_term(&self.init, &folded) {
                        return Term::Const(v);
                    }
                }
                Term::Arith {
                    op: *op,
                    lhs: Box::new(l),
                    rhs: Box::new(r),
                }
            }
        }
    }

    pub(crate) fn ground_formula(&self, f: &Formula, args: &[Value]) -> Formula {
        match f {
            Formula::Const(b) => Formula::Const(*b),
            Formula::Eq(a, b) => {
                let a = self.ground_term(a, args);
                let b = self.ground_term(b, args);
                match (&a, &b) {
                    (Term::Const(x), Term::Const(y)) => Formula::Const(x == y),
                    _ => Formula::Eq(a, b),
                }
            }
            Formula::Atom(t) => match self.ground_term(t, args) {
                Term::Const(Value::Bool(b)) => Formula::Const(b),
                t => Formula::Atom(t),
            },
            Formula::Not(g) => match self.ground_formula(g, args) {
                Formula::Const(b) => Formula::Const(!b),
                g => Formula::Not(Box::new(g)),
            },
            Formula::And(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    match self.ground_formula(p, args) {
                        Formula::Const(true) => {}
                        Formula::Const(false) => return Formula::Const(false),
                        Formula::And(inner) => out.extend(inner),
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => Formula::Const(true),
                    1 => out.pop().unwrap(),
                    _ => Formula::And(out),
                }
            }
            Formula::Or(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    match self.ground_formula(p, args) {
                        Formula::Const(false) => {}
                        Formula::Const(true) => return Formula::Const(true),
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => Formula::Const(false),
                    1 => out.pop().unwrap(),
                    _ => Formula::Or(out),
                }
            }
        }
    }
}

fn ground_name(p: &Problem, schema: &str, args: &[Value]) -> String {
    if args.is_empty() {
        format!("({schema})")
    } else {
        let a: Vec<_> = args.iter().map(|&v| p.symbols.show(v)).collect();
        format!("({} {})", schema, a.join(" "))
    }
}

/// `var = const` conjuncts of a precondition.
fn guard_candidates(pre: &Formula) -> Vec<(VarId, Value)> {
    pre.conjuncts()
        .into_iter()
        .filter_map(|c| match c {
            Formula::Eq(Term::Var(v), Term::Const(x)) | Formula::Eq(Term::Const(x), Term::Var(v)) => {
                Some((*v, *x))
            }
            _ => None,
        })
        .collect()
}

/// Per action, the `var = const` conjunct shared by the fewest actions.
fn choose_guards(actions: &[GroundAction]) -> Vec<Option<(VarId, Value)>> {
    let cands: Vec<_> = actions.iter().map(|a| guard_candidates(&a.pre)).collect();
    let mut counts: HashMap<(VarId, Value), usize> = HashMap::new();
    for c in cands.iter().flatten() {
        *counts.entry(*c).or_default() += 1;
    }
    cands
        .iter()
        .map(|cs| cs.iter().copied().min_by_key(|c| counts[c]))
        .collect()
}

impl GroundProblem {
    pub fn init(&self) -> &State {
        &self.problem.init
    }

    pub fn action(&self, id: ActionId) -> &GroundAction {
        &self.actions[id.0 as usize]
    }

    pub fn action_by_name(&self, name: &str) -> Option<ActionId> {
        let norm = normalize_action_name(name);
        self.actions
            .iter()
            .position(|a| a.name == norm)
            .map(|i| ActionId(i as u32))
    }

    pub fn eval_term(&self, s: &State, t: &Term) -> Result<Value, FsError> {
        self.problem.eval_term(s, t)
    }

    pub fn eval_formula(&self, s: &State, f: &Formula) -> Result<bool, FsError> {
        self.problem.eval_formula(s, f)
    }

    pub fn apply_effects(&self, s: &State, a: ActionId) -> Result<State, FsError> {
        let act = self.action(a);
        self.problem.apply_effects(s, &act.name, &act.effects)
    }

    pub fn precondition_holds(&self, s: &State, a: ActionId) -> Result<bool, FsError> {
        self.problem.eval_formula(s, &self.action(a).pre)
    }

    /// First ground constraint violated in `s`, if any.
    pub fn violated_constraint(&self, s: &State) -> Result<Option<usize>, FsError> {
        for (i, c) in self.constraints.iter().enumerate() {
            if !self.problem.eval_formula(s, &c.body)? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Pre(a) holds in `s` and, when `check_constraints`, every constraint
    /// holds in `s_a`. Returns `s_a` on success.
    pub fn try_apply(
        &self,
        s: &State,
        a: ActionId,
        check_constraints: bool,
    ) -> Result<Option<State>, FsError> {
        if !self.precondition_holds(s, a)? {
            return Ok(None);
        }
        let next = self.apply_effects(s, a)?;
        if check_constraints && self.violated_constraint(&next)?.is_some() {
            return Ok(None);
        }
        Ok(Some(next))
    }

    pub fn is_applicable(&self, s: &State, a: ActionId) -> Result<bool, FsError> {
        Ok(self.try_apply(s, a, true)?.is_some())
    }

    /// Actions whose cheap guard matches `s`, in ascending id order.
    fn candidates(&self, s: &State) -> Vec<u32> {
        let mut out = self.unguarded.clone();
        for &v in &self.guard_vars {
            if let Some(ids) = self.guard_index[v.0 as usize].get(&s.get(v)) {
                out.extend_from_slice(ids);
            }
        }
        out.sort_unstable();
        out
    }

    /// Applicable actions paired with their result states, in action order.
    pub fn successors(&self, s: &State) -> Result<Vec<(ActionId, State)>, FsError> {
        self.successors_with(s, true)
    }

    /// Successors, optionally ignoring state constraints (the relaxation used
    /// by the obstruction analysis).
    pub fn successors_with(
        &self,
        s: &State,
        check_constraints: bool,
    ) -> Result<Vec<(ActionId, State)>, FsError> {
        let mut out = Vec::new();
        for i in self.candidates(s) {
            let id = ActionId(i);
            if let Some(next) = self.try_apply(s, id, check_constraints)? {
                out.push((id, next));
            }
        }
        Ok(out)
    }

    pub fn goal_satisfied(&self, s: &State) -> Result<bool, FsError> {
        self.problem.eval_formula(s, &self.goal)
    }

    /// Replays `plan` from the initial state under full semantics.
    pub fn replay(&self, plan: &[ActionId]) -> Result<(Replay, State), FsError> {
        let mut s = self.problem.init.clone();
        for (step, &a) in plan.iter().enumerate() {
            if !self.precondition_holds(&s, a)? {
                return Ok((Replay::PreconditionFailed { step }, s));
            }
            let next = self.apply_effects(&s, a)?;
            if let Some(c) = self.violated_constraint(&next)? {
                return Ok((Replay::ConstraintViolated { step, constraint: c }, next));
            }
            s = next;
        }
        if self.goal_satisfied(&s)? {
            Ok((Replay::Valid, s))
        } else {
            Ok((Replay::GoalNotReached, s))
        }
    }

    pub fn guard(&self, a: ActionId) -> Option<(VarId, Value)> {
        self.guards[a.0 as usize]
    }
}

/// Canonical `(name a b)` spelling: parentheses and single spaces.
pub fn normalize_action_name(name: &str) -> String {
    let inner = name.trim().trim_start_matches('(').trim_end_matches(')');
    format!("({})", inner.split_whitespace().collect::<Vec<_>>().join(" "))
}
