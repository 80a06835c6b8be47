use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use super::syntax::*;
use super::FsError;

/// Host function backing an `@`-symbol. Must be pure and state-independent.
///
/// Returning `None` means the procedure is undefined (⊥) for those arguments.
pub trait Procedure: Send + Sync {
    fn call(&self, args: &[Value]) -> Option<Value>;
}

impl<F> Procedure for F
where
    F: Fn(&[Value]) -> Option<Value> + Send + Sync,
{
    fn call(&self, args: &[Value]) -> Option<Value> {
        self(args)
    }
}

/// Named procedures; bound by name when a problem is built, never parsed.
#[derive(Clone, Default)]
pub struct ProcedureRegistry {
    procs: HashMap<String, Arc<dyn Procedure>>,
}

impl ProcedureRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, name: &str, proc_: impl Procedure + 'static) -> &mut Self {
        self.procs.insert(name.to_string(), Arc::new(proc_));
        self
    }

    pub fn register_arc(&mut self, name: &str, proc_: Arc<dyn Procedure>) -> &mut Self {
        self.procs.insert(name.to_string(), proc_);
        self
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Procedure>> {
        self.procs.get(name).cloned()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.procs.contains_key(name)
    }
}

impl fmt::Debug for ProcedureRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut names: Vec<_> = self.procs.keys().collect();
        names.sort();
        f.debug_struct("ProcedureRegistry").field("procs", &names).finish()
    }
}

/// A state variable `f(c)`.
#[derive(Clone, Debug)]
pub struct StateVar {
    pub func: FnId,
    pub args: Vec<Value>,
    pub domain: TypeId,
}

/// Total assignment of values to the problem's state variables, in variable order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    values: Box<[Value]>,
}

impl State {
    pub fn new(values: Vec<Value>) -> Self {
        State {
            values: values.into_boxed_slice(),
        }
    }

    pub fn get(&self, var: VarId) -> Value {
        self.values[var.0 as usize]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn with_writes(&self, writes: &[(VarId, Value)]) -> State {
        let mut values = self.values.clone();
        for &(v, x) in writes {
            values[v.0 as usize] = x;
        }
        State { values }
    }

    /// Canonical byte encoding in fixed variable order; two states are equal
    /// iff their encodings are equal.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.values.len() * 9);
        for v in self.values.iter() {
            v.encode_into(&mut out);
        }
        out
    }
}

#[derive(Clone)]
pub struct Signature {
    pub types: Vec<TypeDef>,
    pub functions: Vec<FunctionDecl>,
    pub(crate) type_index: HashMap<String, TypeId>,
    pub(crate) fn_index: HashMap<String, FnId>,
}

impl Signature {
    pub fn ty(&self, id: TypeId) -> &TypeDef {
        &self.types[id.0 as usize]
    }

    pub fn func(&self, id: FnId) -> &FunctionDecl {
        &self.functions[id.0 as usize]
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.type_index.get(name).copied()
    }

    pub fn fn_id(&self, name: &str) -> Option<FnId> {
        self.fn_index.get(name).copied()
    }
}

/// Mixed-radix layout of state variables: one block per fluent.
#[derive(Clone, Debug, Default)]
pub struct VarTable {
    pub vars: Vec<StateVar>,
    offsets: HashMap<FnId, u32>,
}

impl VarTable {
    pub(crate) fn build(sig: &Signature) -> Result<Self, FsError> {
        let mut table = VarTable::default();
        for (i, f) in sig.functions.iter().enumerate() {
            if f.kind != FunctionKind::Fluent {
                continue;
            }
            let fid = FnId(i as u32);
            table.offsets.insert(fid, table.vars.len() as u32);
            let domains: Vec<&TypeDef> = f.params.iter().map(|&t| sig.ty(t)).collect();
            for d in &domains {
                if d.size() == 0 {
                    return Err(FsError::EmptyType(d.name.clone()));
                }
            }
            for tuple in cartesian(&domains.iter().map(|d| d.size()).collect::<Vec<_>>()) {
                let args = tuple
                    .iter()
                    .zip(&domains)
                    .map(|(&p, d)| d.member(p))
                    .collect();
                table.vars.push(StateVar {
                    func: fid,
                    args,
                    domain: f.value,
                });
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn var(&self, id: VarId) -> &StateVar {
        &self.vars[id.0 as usize]
    }

    /// Index of the state variable `func(args)`.
    pub fn resolve(&self, sig: &Signature, func: FnId, args: &[Value]) -> Option<VarId> {
        let mut idx = *self.offsets.get(&func)?;
        let decl = sig.func(func);
        let mut stride = 1u32;
        // last argument varies fastest
        for (ty, &v) in decl.params.iter().zip(args).rev() {
            let t = sig.ty(*ty);
            idx += t.position(v)? * stride;
            stride *= t.size() as u32;
        }
        Some(VarId(idx))
    }
}

/// Lexicographic enumeration of all index tuples over the given radices.
pub(crate) fn cartesian(sizes: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::with_capacity(sizes.len())];
    for &n in sizes {
        let mut next = Vec::with_capacity(out.len() * n);
        for prefix in &out {
            for i in 0..n {
                let mut t = prefix.clone();
                t.push(i);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// A Functional STRIPS problem with state constraints, ⟨S, I, O, G, C, F⟩.
#[derive(Clone)]
pub struct Problem {
    pub symbols: Symbols,
    pub signature: Signature,
    pub vars: VarTable,
    pub init: State,
    pub actions: Vec<ActionSchema>,
    pub constraints: Vec<ConstraintSchema>,
    pub goal: Formula,
    pub(crate) tables: HashMap<FnId, HashMap<Vec<Value>, Value>>,
    pub(crate) procs: HashMap<FnId, Arc<dyn Procedure>>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("types", &self.signature.types.len())
            .field("functions", &self.signature.functions.len())
            .field("vars", &self.vars.len())
            .field("actions", &self.actions.len())
            .field("constraints", &self.constraints.len())
            .finish()
    }
}

impl Problem {
    pub fn var_name(&self, v: VarId) -> String {
        let sv = self.vars.var(v);
        let name = &self.signature.func(sv.func).name;
        if sv.args.is_empty() {
            name.clone()
        } else {
            let args: Vec<_> = sv.args.iter().map(|&a| self.symbols.show(a)).collect();
            format!("{}({})", name, args.join(","))
        }
    }

    pub fn var_id(&self, func: &str, args: &[&str]) -> Option<VarId> {
        let fid = self.signature.fn_id(func)?;
        let vals: Option<Vec<Value>> = args.iter().map(|a| self.parse_value(a)).collect();
        self.vars.resolve(&self.signature, fid, &vals?)
    }

    /// Reads a constant written as in the problem text.
    pub fn parse_value(&self, text: &str) -> Option<Value> {
        match text {
            "true" => Some(Value::Bool(true)),
            "false" => Some(Value::Bool(false)),
            _ => text
                .parse::<i64>()
                .ok()
                .map(Value::Int)
                .or_else(|| self.symbols.get(text).map(Value::Sym)),
        }
    }

    fn show_args(&self, args: &[Value]) -> String {
        args.iter()
            .map(|&a| self.symbols.show(a))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Denotation of a fixed symbol applied to constant arguments.
    pub fn eval_fixed(&self, func: FnId, args: &[Value]) -> Result<Value, FsError> {
        let decl = self.signature.func(func);
        match decl.kind {
            FunctionKind::Procedure => {
                let p = self
                    .procs
                    .get(&func)
                    .ok_or_else(|| FsError::UnregisteredProcedure(decl.name.clone()))?;
                p.call(args).ok_or_else(|| FsError::ProcedureUndefined {
                    name: decl.name.clone(),
                    args: self.show_args(args),
                })
            }
            FunctionKind::Extensional => self
                .tables
                .get(&func)
                .and_then(|t| t.get(args))
                .copied()
                .ok_or_else(|| FsError::TableMiss {
                    name: decl.name.clone(),
                    args: self.show_args(args),
                }),
            FunctionKind::Fluent => unreachable!("fluent passed to eval_fixed"),
        }
    }

    /// `t^s`.
    pub fn eval_term(&self, s: &State, t: &Term) -> Result<Value, FsError> {
        match t {
            Term::Const(v) => Ok(*v),
            Term::Var(v) => Ok(s.get(*v)),
            Term::Param(i) => Err(FsError::Type(format!("unbound parameter #{i}"))),
            Term::App { func, args } => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_term(s, a))
                    .collect::<Result<Vec<_>, _>>()?;
                if self.signature.func(*func).kind == FunctionKind::Fluent {
                    let var = self.resolve_var(*func, &vals)?;
                    Ok(s.get(var))
                } else {
                    self.eval_fixed(*func, &vals)
                }
            }
            Term::Arith { op, lhs, rhs } => {
                let a = self.eval_term(s, lhs)?;
                let b = self.eval_term(s, rhs)?;
                arith(*op, a, b)
            }
        }
    }

    pub(crate) fn resolve_var(&self, func: FnId, vals: &[Value]) -> Result<VarId, FsError> {
        self.vars
            .resolve(&self.signature, func, vals)
            .ok_or_else(|| FsError::OutOfDomain {
                what: format!("{}({})", self.signature.func(func).name, self.show_args(vals)),
            })
    }

    /// `φ^s`.
    pub fn eval_formula(&self, s: &State, f: &Formula) -> Result<bool, FsError> {
        match f {
            Formula::Const(b) => Ok(*b),
            Formula::Eq(a, b) => Ok(self.eval_term(s, a)? == self.eval_term(s, b)?),
            Formula::Atom(t) => self
                .eval_term(s, t)?
                .as_bool()
                .ok_or_else(|| FsError::Type("atom did not evaluate to a Boolean".into())),
            Formula::Not(g) => Ok(!self.eval_formula(s, g)?),
            Formula::And(parts) => {
                for p in parts {
                    if !self.eval_formula(s, p)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(parts) => {
                for p in parts {
                    if self.eval_formula(s, p)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// Resolves the state variable an effect writes and the value it writes,
    /// both evaluated in `s`.
    pub fn effect_write(&self, s: &State, e: &Effect) -> Result<(VarId, Value), FsError> {
        let var = match &e.lhs {
            Term::Var(v) => *v,
            Term::App { func, args } => {
                let vals = args
                    .iter()
                    .map(|a| self.eval_term(s, a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.resolve_var(*func, &vals)?
            }
            other => return Err(FsError::Type(format!("effect target {other:?} is not a fluent"))),
        };
        let value = self.eval_term(s, &e.rhs)?;
        let domain = self.signature.ty(self.vars.var(var).domain);
        if !domain.contains(value) {
            return Err(FsError::OutOfDomain {
                what: format!("{} := {}", self.var_name(var), self.symbols.show(value)),
            });
        }
        Ok((var, value))
    }

    /// `s_a`: every effect is evaluated in the source state before any write.
    pub fn apply_effects(
        &self,
        s: &State,
        name: &str,
        effects: &[Effect],
    ) -> Result<State, FsError> {
        let mut writes: Vec<(VarId, Value)> = Vec::with_capacity(effects.len());
        for e in effects {
            let (var, value) = self.effect_write(s, e)?;
            if let Some(&(_, prev)) = writes.iter().find(|(v, _)| *v == var) {
                if prev != value {
                    return Err(FsError::EffectConflict {
                        action: name.to_string(),
                        var: self.var_name(var),
                        first: self.symbols.show(prev),
                        second: self.symbols.show(value),
                    });
                }
                continue;
            }
            writes.push((var, value));
        }
        Ok(s.with_writes(&writes))
    }

    pub fn show_state(&self, s: &State) -> String {
        (0..self.vars.len())
            .map(|i| {
                let v = VarId(i as u32);
                format!("{}={}", self.var_name(v), self.symbols.show(s.get(v)))
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// S-expression rendering of a (possibly ground) term.
    pub fn show_term(&self, t: &Term) -> String {
        match t {
            Term::Const(v) => self.symbols.show(*v),
            Term::Param(i) => format!("?{i}"),
            Term::Var(v) => self.var_name(*v),
            Term::App { func, args } => {
                let name = &self.signature.func(*func).name;
                if args.is_empty() {
                    return name.clone();
                }
                let args: Vec<_> = args.iter().map(|a| self.show_term(a)).collect();
                format!("({} {})", name, args.join(" "))
            }
            Term::Arith { op, lhs, rhs } => {
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                };
                format!("({} {} {})", sym, self.show_term(lhs), self.show_term(rhs))
            }
        }
    }

    pub fn show_formula(&self, f: &Formula) -> String {
        let list = |head: &str, parts: &[Formula]| {
            let inner: Vec<_> = parts.iter().map(|p| self.show_formula(p)).collect();
            format!("({} {})", head, inner.join(" "))
        };
        match f {
            Formula::Const(b) => b.to_string(),
            Formula::Eq(a, b) => format!("(= {} {})", self.show_term(a), self.show_term(b)),
            Formula::Atom(t) => self.show_term(t),
            Formula::Not(g) => format!("(not {})", self.show_formula(g)),
            Formula::And(parts) => list("and", parts),
            Formula::Or(parts) => list("or", parts),
        }
    }
}

fn arith(op: ArithOp, a: Value, b: Value) -> Result<Value, FsError> {
    match (a, b) {
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                ArithOp::Add => x.checked_add(y),
                ArithOp::Sub => x.checked_sub(y),
            };
            r.map(Value::Int)
                .ok_or_else(|| FsError::Type("integer overflow".into()))
        }
        _ => Err(FsError::Type("arithmetic on non-integer values".into())),
    }
}
