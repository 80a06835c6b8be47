//! Lisp-style problem text. See `docs/problem-format.md` for the grammar.

use std::collections::HashMap;

use super::problem::{Problem, ProcedureRegistry, Signature, State, VarTable};
use super::syntax::*;
use super::FsError;

#[derive(Clone, Debug, PartialEq)]
pub enum SExpr {
    Atom(String, usize),
    List(Vec<SExpr>, usize),
}

impl SExpr {
    pub fn line(&self) -> usize {
        match self {
            SExpr::Atom(_, l) | SExpr::List(_, l) => *l,
        }
    }

    fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            _ => None,
        }
    }

    fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(v, _) => Some(v),
            _ => None,
        }
    }
}

fn err(line: usize, msg: impl Into<String>) -> FsError {
    FsError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a sequence of top-level s-expressions. `;` starts a line comment.
pub fn read_sexprs(text: &str) -> Result<Vec<SExpr>, FsError> {
    let mut stack: Vec<(Vec<SExpr>, usize)> = vec![(Vec::new(), 1)];
    let mut line = 1;
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\n' => line += 1,
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        line += 1;
                        break;
                    }
                }
            }
            '(' => stack.push((Vec::new(), line)),
            ')' => {
                if stack.len() == 1 {
                    return Err(err(line, "unbalanced `)`"));
                }
                let (items, start) = stack.pop().unwrap();
                stack.last_mut().unwrap().0.push(SExpr::List(items, start));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut tok = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' || n == ';' {
                        break;
                    }
                    tok.push(n);
                    chars.next();
                }
                stack.last_mut().unwrap().0.push(SExpr::Atom(tok, line));
            }
        }
    }
    if stack.len() != 1 {
        return Err(err(stack.last().unwrap().1, "unclosed `(`"));
    }
    Ok(stack.pop().unwrap().0)
}

/// Parses a problem with a fresh symbol table.
pub fn parse_problem(text: &str, registry: &ProcedureRegistry) -> Result<Problem, FsError> {
    parse_problem_with(text, Symbols::new(), registry)
}

/// Parses a problem, appending to a pre-populated symbol table so callers can
/// know constant ids in advance (procedures receive `Value::Sym` ids).
pub fn parse_problem_with(
    text: &str,
    symbols: Symbols,
    registry: &ProcedureRegistry,
) -> Result<Problem, FsError> {
    let forms = read_sexprs(text)?;
    let mut b = Builder::new(symbols);
    let mut sections: HashMap<&str, Vec<&SExpr>> = HashMap::new();
    for f in &forms {
        let items = f
            .list()
            .ok_or_else(|| err(f.line(), "expected a top-level `(:section ...)` form"))?;
        let head = items
            .first()
            .and_then(SExpr::atom)
            .ok_or_else(|| err(f.line(), "empty top-level form"))?;
        match head {
            ":types" | ":fluents" | ":fixed" | ":procedures" | ":action" | ":state-constraint"
            | ":init" | ":goal" => sections.entry(head).or_default().push(f),
            other => return Err(err(f.line(), format!("unknown section `{other}`"))),
        }
    }
    let get = |k: &str| sections.get(k).cloned().unwrap_or_default();
    for f in get(":types") {
        b.types(f)?;
    }
    for f in get(":fluents") {
        b.functions(f, FunctionKind::Fluent)?;
    }
    for f in get(":fixed") {
        b.functions(f, FunctionKind::Extensional)?;
    }
    for f in get(":procedures") {
        b.functions(f, FunctionKind::Procedure)?;
    }
    let vars = VarTable::build(&b.sig)?;
    for f in get(":action") {
        let a = b.action(f)?;
        if b.actions.iter().any(|x: &ActionSchema| x.name == a.name) {
            return Err(err(f.line(), format!("duplicate action `{}`", a.name)));
        }
        b.actions.push(a);
    }
    for f in get(":state-constraint") {
        let c = b.constraint(f)?;
        b.constraints.push(c);
    }
    let goals = get(":goal");
    let goal = match goals.as_slice() {
        [] => Formula::Const(true),
        [g] => {
            let items = g.list().unwrap();
            if items.len() != 2 {
                return Err(err(g.line(), "`:goal` takes exactly one formula"));
            }
            b.formula(&items[1], &[])?
        }
        _ => return Err(err(goals[1].line(), "more than one `:goal`")),
    };

    let mut values: Vec<Option<Value>> = vec![None; vars.len()];
    let mut tables: HashMap<FnId, HashMap<Vec<Value>, Value>> = HashMap::new();
    for f in get(":init") {
        for item in &f.list().unwrap()[1..] {
            b.init_entry(item, &vars, &mut values, &mut tables)?;
        }
    }
    let mut init = Vec::with_capacity(values.len());
    for (i, v) in values.iter().enumerate() {
        match v {
            Some(v) => init.push(*v),
            None => {
                let sv = vars.var(VarId(i as u32));
                let args: Vec<_> = sv.args.iter().map(|&a| b.symbols.show(a)).collect();
                return Err(FsError::Initial(format!(
                    "no initial value for {}({})",
                    b.sig.func(sv.func).name,
                    args.join(",")
                )));
            }
        }
    }

    // extensional tables must be total over their argument domains
    for (i, decl) in b.sig.functions.iter().enumerate() {
        if decl.kind != FunctionKind::Extensional {
            continue;
        }
        let table = tables.entry(FnId(i as u32)).or_default();
        let expected: usize = decl.params.iter().map(|&t| b.sig.ty(t).size()).product();
        if table.len() != expected {
            return Err(FsError::Initial(format!(
                "fixed symbol `{}` has {} of {} table entries",
                decl.name,
                table.len(),
                expected
            )));
        }
    }

    let mut procs = HashMap::new();
    for (i, decl) in b.sig.functions.iter().enumerate() {
        if decl.kind == FunctionKind::Procedure {
            let p = registry
                .get(&decl.name)
                .ok_or_else(|| FsError::UnregisteredProcedure(decl.name.clone()))?;
            procs.insert(FnId(i as u32), p);
        }
    }

    let Builder {
        symbols,
        sig,
        actions,
        constraints,
    } = b;
    Ok(Problem {
        symbols,
        signature: sig,
        vars,
        init: State::new(init),
        actions,
        constraints,
        goal,
        tables,
        procs,
    })
}

struct Builder {
    symbols: Symbols,
    sig: Signature,
    actions: Vec<ActionSchema>,
    constraints: Vec<ConstraintSchema>,
}

/// Static type of a term, when it has one.
#[derive(Clone, Copy, Debug)]
enum TermType {
    Typed(TypeId),
    Int,
    Any,
}

impl Builder {
    fn new(symbols: Symbols) -> Self {
        let mut sig = Signature {
            types: vec![TypeDef::boolean()],
            functions: Vec::new(),
            type_index: HashMap::new(),
            fn_index: HashMap::new(),
        };
        sig.type_index.insert("bool".into(), TypeId(0));
        Builder {
            symbols,
            sig,
            actions: Vec::new(),
            constraints: Vec::new(),
        }
    }

    fn types(&mut self, f: &SExpr) -> Result<(), FsError> {
        for t in &f.list().unwrap()[1..] {
            let items = t
                .list()
                .ok_or_else(|| err(t.line(), "type declaration must be `(name members...)`"))?;
            let name = items
                .first()
                .and_then(SExpr::atom)
                .ok_or_else(|| err(t.line(), "type name expected"))?;
            if self.sig.type_index.contains_key(name) {
                return Err(err(t.line(), format!("duplicate type `{name}`")));
            }
            let def = if items.get(1).and_then(SExpr::atom) == Some(":range") {
                let bound = |i: usize| -> Result<i64, FsError> {
                    items
                        .get(i)
                        .and_then(SExpr::atom)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(t.line(), "`:range lo hi` expects two integers"))
                };
                let (lo, hi) = (bound(2)?, bound(3)?);
                if lo > hi {
                    return Err(err(t.line(), format!("empty range for type `{name}`")));
                }
                TypeDef::range(name, lo, hi)
            } else {
                let mut members = Vec::new();
                for m in &items[1..] {
                    let s = m
                        .atom()
                        .ok_or_else(|| err(m.line(), "type member must be a symbol"))?;
                    if s.starts_with('?') || s.starts_with('@') || s.parse::<i64>().is_ok() {
                        return Err(err(m.line(), format!("invalid constant name `{s}`")));
                    }
                    let id = self.symbols.intern(s);
                    if members.contains(&id) {
                        return Err(err(m.line(), format!("`{s}` listed twice in `{name}`")));
                    }
                    members.push(id);
                }
                if members.is_empty() {
                    return Err(err(t.line(), format!("type `{name}` has no members")));
                }
                TypeDef::symbolic(name, members)
            };
            let id = TypeId(self.sig.types.len() as u32);
            self.sig.types.push(def);
            self.sig.type_index.insert(name.to_string(), id);
        }
        Ok(())
    }

    fn type_ref(&self, s: &SExpr) -> Result<TypeId, FsError> {
        let name = s
            .atom()
            .ok_or_else(|| err(s.line(), "type name expected"))?;
        self.sig
            .type_id(name)
            .ok_or_else(|| err(s.line(), format!("unknown type `{name}`")))
    }

    /// `(name argtype... - valuetype)`
    fn functions(&mut self, f: &SExpr, kind: FunctionKind) -> Result<(), FsError> {
        for d in &f.list().unwrap()[1..] {
            let items = d
                .list()
                .ok_or_else(|| err(d.line(), "function declaration must be a list"))?;
            let name = items
                .first()
                .and_then(SExpr::atom)
                .ok_or_else(|| err(d.line(), "function name expected"))?;
            let is_proc = name.starts_with('@');
            if is_proc != (kind == FunctionKind::Procedure) {
                return Err(err(
                    d.line(),
                    format!("`{name}`: procedure symbols, and only they, carry the `@` prefix"),
                ));
            }
            if self.sig.fn_index.contains_key(name) || self.symbols.get(name).is_some() {
                return Err(err(d.line(), format!("symbol `{name}` declared twice")));
            }
            let dash = items
                .iter()
                .position(|x| x.atom() == Some("-"))
                .ok_or_else(|| err(d.line(), format!("`{name}`: missing `- valuetype`")))?;
            if dash + 2 != items.len() {
                return Err(err(d.line(), format!("`{name}`: expected one value type")));
            }
            let params = items[1..dash]
                .iter()
                .map(|t| self.type_ref(t))
                .collect::<Result<Vec<_>, _>>()?;
            let value = self.type_ref(&items[dash + 1])?;
            let id = FnId(self.sig.functions.len() as u32);
            self.sig.functions.push(FunctionDecl {
                name: name.to_string(),
                params,
                value,
                kind,
            });
            self.sig.fn_index.insert(name.to_string(), id);
        }
        Ok(())
    }

    fn params(&self, s: &SExpr) -> Result<Vec<Parameter>, FsError> {
        let items = s
            .list()
            .ok_or_else(|| err(s.line(), "parameter list expected"))?;
        let mut out = Vec::new();
        let mut pending: Vec<String> = Vec::new();
        let mut i = 0;
        while i < items.len() {
            let a = items[i]
                .atom()
                .ok_or_else(|| err(items[i].line(), "parameter expected"))?;
            if a == "-" {
                let ty = self.type_ref(
                    items
                        .get(i + 1)
                        .ok_or_else(|| err(items[i].line(), "type expected after `-`"))?,
                )?;
                if pending.is_empty() {
                    return Err(err(items[i].line(), "`-` without parameters"));
                }
                for name in pending.drain(..) {
                    out.push(Parameter { name, ty });
                }
                i += 2;
            } else if a.starts_with('?') {
                if pending.iter().any(|p| p == a) || out.iter().any(|p: &Parameter| p.name == a) {
                    return Err(err(items[i].line(), format!("duplicate parameter `{a}`")));
                }
                pending.push(a.to_string());
                i += 1;
            } else {
                return Err(err(items[i].line(), format!("bad parameter `{a}`")));
            }
        }
        if !pending.is_empty() {
            return Err(err(s.line(), "untyped parameters"));
        }
        Ok(out)
    }

    /// Reads `:key value` pairs following the head of a form.
    fn keyed<'a>(&self, items: &'a [SExpr]) -> Result<HashMap<&'a str, &'a SExpr>, FsError> {
        let mut out = HashMap::new();
        let mut i = 0;
        while i < items.len() {
            let key = items[i]
                .atom()
                .filter(|k| k.starts_with(':'))
                .ok_or_else(|| err(items[i].line(), "`:keyword` expected"))?;
            let val = items
                .get(i + 1)
                .ok_or_else(|| err(items[i].line(), format!("value expected after `{key}`")))?;
            out.insert(key, val);
            i += 2;
        }
        Ok(out)
    }

    fn action(&self, f: &SExpr) -> Result<ActionSchema, FsError> {
        let items = f.list().unwrap();
        let name = items
            .get(1)
            .and_then(SExpr::atom)
            .ok_or_else(|| err(f.line(), "action name expected"))?;
        let kv = self.keyed(&items[2..])?;
        for k in kv.keys() {
            if !matches!(*k, ":parameters" | ":prec" | ":precondition" | ":eff" | ":effect") {
                return Err(err(f.line(), format!("unknown action key `{k}`")));
            }
        }
        let params = match kv.get(":parameters") {
            Some(p) => self.params(p)?,
            None => Vec::new(),
        };
        let pre = match kv.get(":prec").or_else(|| kv.get(":precondition")) {
            Some(p) => self.formula(p, &params)?,
            None => Formula::Const(true),
        };
        let effects = match kv.get(":eff").or_else(|| kv.get(":effect")) {
            Some(e) => self.effects(e, &params)?,
            None => Vec::new(),
        };
        Ok(ActionSchema {
            name: name.to_string(),
            params,
            pre,
            effects,
        })
    }

    fn constraint(&self, f: &SExpr) -> Result<ConstraintSchema, FsError> {
        let items = f.list().unwrap();
        let mut params = Vec::new();
        let mut i = 1;
        if let Some(k) = items.get(1).and_then(SExpr::atom) {
            if k == ":parameters" || k == ":parameter" {
                params = self.params(
                    items
                        .get(2)
                        .ok_or_else(|| err(f.line(), "parameter list expected"))?,
                )?;
                i = 3;
            }
        }
        if items.len() != i + 1 {
            return Err(err(f.line(), "state constraint takes exactly one formula"));
        }
        let body = self.formula(&items[i], &params)?;
        Ok(ConstraintSchema { params, body })
    }

    fn effects(&self, s: &SExpr, params: &[Parameter]) -> Result<Vec<Effect>, FsError> {
        let items = s
            .list()
            .ok_or_else(|| err(s.line(), "effect list expected"))?;
        if items.first().and_then(SExpr::atom) == Some("and") {
            items[1..].iter().map(|e| self.effect(e, params)).collect()
        } else if items.is_empty() {
            Ok(Vec::new())
        } else {
            Ok(vec![self.effect(s, params)?])
        }
    }

    fn effect(&self, s: &SExpr, params: &[Parameter]) -> Result<Effect, FsError> {
        let items = s.list().ok_or_else(|| err(s.line(), "effect expected"))?;
        if items.len() != 3 || items[0].atom() != Some(":=") {
            return Err(err(s.line(), "effect must be `(:= lhs rhs)`"));
        }
        let (lhs, lty) = self.term(&items[1], params)?;
        match &lhs {
            Term::App { func, .. }
                if self.sig.func(*func).kind == FunctionKind::Fluent => {}
            _ => return Err(err(items[1].line(), "effect target must be a fluent term")),
        }
        let (rhs, rty) = self.term(&items[2], params)?;
        if let TermType::Typed(t) = lty {
            self.check_against(&rhs, rty, t, items[2].line())?;
        }
        Ok(Effect { lhs, rhs })
    }

    fn formula(&self, s: &SExpr, params: &[Parameter]) -> Result<Formula, FsError> {
        match s {
            SExpr::Atom(a, line) => match a.as_str() {
                "true" => Ok(Formula::Const(true)),
                "false" => Ok(Formula::Const(false)),
                _ => {
                    let (t, ty) = self.term(s, params)?;
                    self.bool_atom(t, ty, *line)
                }
            },
            SExpr::List(items, line) => {
                let head = items
                    .first()
                    .and_then(SExpr::atom)
                    .ok_or_else(|| err(*line, "formula expected"))?;
                match head {
                    "and" | "or" => {
                        let parts = items[1..]
                            .iter()
                            .map(|p| self.formula(p, params))
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(if head == "and" {
                            Formula::And(parts)
                        } else {
                            Formula::Or(parts)
                        })
                    }
                    "not" => {
                        if items.len() != 2 {
                            return Err(err(*line, "`not` takes one formula"));
                        }
                        Ok(Formula::Not(Box::new(self.formula(&items[1], params)?)))
                    }
                    "=" => {
                        if items.len() != 3 {
                            return Err(err(*line, "`=` takes two terms"));
                        }
                        let (a, at) = self.term(&items[1], params)?;
                        let (b, bt) = self.term(&items[2], params)?;
                        self.check_comparable(&a, at, &b, bt, *line)?;
                        Ok(Formula::Eq(a, b))
                    }
                    _ => {
                        let (t, ty) = self.term(s, params)?;
                        self.bool_atom(t, ty, *line)
                    }
                }
            }
        }
    }

    fn bool_atom(&self, t: Term, ty: TermType, line: usize) -> Result<Formula, FsError> {
        match ty {
            TermType::Typed(id) if matches!(self.sig.ty(id).domain, TypeDomain::Bool) => {
                Ok(Formula::Atom(t))
            }
            _ => Err(err(line, "atom must be a Boolean-valued term")),
        }
    }

    fn term(&self, s: &SExpr, params: &[Parameter]) -> Result<(Term, TermType), FsError> {
        match s {
            SExpr::Atom(a, line) => {
                if a.starts_with('?') {
                    let i = params
                        .iter()
                        .position(|p| &p.name == a)
                        .ok_or_else(|| err(*line, format!("unbound parameter `{a}`")))?;
                    return Ok((Term::Param(i), TermType::Typed(params[i].ty)));
                }
                if let Some(fid) = self.sig.fn_id(a) {
                    return self.application(fid, &[], params, *line);
                }
                match a.as_str() {
                    "true" => return Ok((Term::Const(Value::Bool(true)), TermType::Typed(TypeId(0)))),
                    "false" => {
                        return Ok((Term::Const(Value::Bool(false)), TermType::Typed(TypeId(0))))
                    }
                    _ => {}
                }
                if let Ok(i) = a.parse::<i64>() {
                    return Ok((Term::Const(Value::Int(i)), TermType::Int));
                }
                let id = self
                    .symbols
                    .get(a)
                    .ok_or_else(|| err(*line, format!("unknown symbol `{a}`")))?;
                Ok((Term::Const(Value::Sym(id)), TermType::Any))
            }
            SExpr::List(items, line) => {
                let head = items
                    .first()
                    .and_then(SExpr::atom)
                    .ok_or_else(|| err(*line, "term expected"))?;
                if head == "+" || head == "-" {
                    if items.len() != 3 {
                        return Err(err(*line, format!("`{head}` takes two terms")));
                    }
                    let (l, lt) = self.term(&items[1], params)?;
                    let (r, rt) = self.term(&items[2], params)?;
                    for (t, ty) in [(&l, lt), (&r, rt)] {
                        if !self.is_int(t, ty) {
                            return Err(err(*line, format!("`{head}` needs integer operands")));
                        }
                    }
                    let op = if head == "+" { ArithOp::Add } else { ArithOp::Sub };
                    return Ok((
                        Term::Arith {
                            op,
                            lhs: Box::new(l),
                            rhs: Box::new(r),
                        },
                        TermType::Int,
                    ));
                }
                let fid = self
                    .sig
                    .fn_id(head)
                    .ok_or_else(|| err(*line, format!("unknown function `{head}`")))?;
                self.application(fid, &items[1..], params, *line)
            }
        }
    }

    fn application(
        &self,
        fid: FnId,
        args: &[SExpr],
        params: &[Parameter],
        line: usize,
    ) -> Result<(Term, TermType), FsError> {
        let decl = self.sig.func(fid);
        if decl.params.len() != args.len() {
            return Err(err(
                line,
                format!(
                    "`{}` expects {} arguments, got {}",
                    decl.name,
                    decl.params.len(),
                    args.len()
                ),
            ));
        }
        let mut terms = Vec::with_capacity(args.len());
        for (a, &ty) in args.iter().zip(&decl.params) {
            let (t, tt) = self.term(a, params)?;
            self.check_against(&t, tt, ty, a.line())?;
            terms.push(t);
        }
        Ok((
            Term::App {
                func: fid,
                args: terms,
            },
            TermType::Typed(decl.value),
        ))
    }

    fn is_int(&self, t: &Term, ty: TermType) -> bool {
        match ty {
            TermType::Int => true,
            TermType::Typed(id) => matches!(self.sig.ty(id).domain, TypeDomain::Range { .. }),
            TermType::Any => matches!(t, Term::Const(Value::Int(_))),
        }
    }

    /// A term may fill a slot of type `expected` if its type is contained in it.
    fn check_against(
        &self,
        t: &Term,
        ty: TermType,
        expected: TypeId,
        line: usize,
    ) -> Result<(), FsError> {
        let exp = self.sig.ty(expected);
        let ok = match (ty, t) {
            (_, Term::Const(v)) => exp.contains(*v),
            (TermType::Typed(id), _) => id == expected || self.sig.ty(id).is_subset_of(exp),
            (TermType::Int, _) => matches!(exp.domain, TypeDomain::Range { .. }),
            (TermType::Any, _) => true,
        };
        if ok {
            Ok(())
        } else {
            Err(FsError::Type(format!(
                "line {line}: term does not fit type `{}`",
                exp.name
            )))
        }
    }

    fn check_comparable(
        &self,
        a: &Term,
        at: TermType,
        b: &Term,
        bt: TermType,
        line: usize,
    ) -> Result<(), FsError> {
        let kind = |t: &Term, ty: TermType| -> u8 {
            match (ty, t) {
                (TermType::Typed(id), _) => match self.sig.ty(id).domain {
                    TypeDomain::Symbols(_) => 1,
                    TypeDomain::Range { .. } => 2,
                    TypeDomain::Bool => 3,
                },
                (TermType::Int, _) => 2,
                (TermType::Any, Term::Const(Value::Sym(_))) => 1,
                (TermType::Any, Term::Const(Value::Int(_))) => 2,
                (TermType::Any, Term::Const(Value::Bool(_))) => 3,
                (TermType::Any, _) => 0,
            }
        };
        let (ka, kb) = (kind(a, at), kind(b, bt));
        if ka != 0 && kb != 0 && ka != kb {
            return Err(FsError::Type(format!(
                "line {line}: `=` compares terms of different kinds"
            )));
        }
        if let (TermType::Typed(_), Term::Const(v)) = (at, b) {
            if let TermType::Typed(id) = at {
                if !self.sig.ty(id).contains(*v) {
                    return Err(FsError::Type(format!(
                        "line {line}: constant `{}` is not in type `{}`",
                        self.symbols.show(*v),
                        self.sig.ty(id).name
                    )));
                }
            }
        }
        Ok(())
    }

    fn closed_value(&self, s: &SExpr) -> Result<Value, FsError> {
        let (t, _) = self.term(s, &[])?;
        match t {
            Term::Const(v) => Ok(v),
            _ => Err(err(s.line(), "constant expected")),
        }
    }

    /// `(= (f c...) v)` or a bare Boolean atom `(f c...)` meaning `true`.
    fn init_entry(
        &self,
        item: &SExpr,
        vars: &VarTable,
        values: &mut [Option<Value>],
        tables: &mut HashMap<FnId, HashMap<Vec<Value>, Value>>,
    ) -> Result<(), FsError> {
        let line = item.line();
        let (lhs, rhs) = match item {
            SExpr::List(items, _) if items.first().and_then(SExpr::atom) == Some("=") => {
                if items.len() != 3 {
                    return Err(err(line, "`(= lhs value)` expected"));
                }
                (&items[1], Some(&items[2]))
            }
            _ => (item, None),
        };
        let (fname, args): (&str, &[SExpr]) = match lhs {
            SExpr::Atom(a, _) => (a.as_str(), &[]),
            SExpr::List(items, _) => (
                items
                    .first()
                    .and_then(SExpr::atom)
                    .ok_or_else(|| err(line, "function name expected"))?,
                &items[1..],
            ),
        };
        let fid = self
            .sig
            .fn_id(fname)
            .ok_or_else(|| err(line, format!("unknown function `{fname}`")))?;
        let decl = self.sig.func(fid);
        if decl.params.len() != args.len() {
            return Err(err(line, format!("`{fname}` arity mismatch")));
        }
        let arg_vals = args
            .iter()
            .map(|a| self.closed_value(a))
            .collect::<Result<Vec<_>, _>>()?;
        for (v, &ty) in arg_vals.iter().zip(&decl.params) {
            if !self.sig.ty(ty).contains(*v) {
                return Err(err(line, format!("argument `{}` outside its type", self.symbols.show(*v))));
            }
        }
        let value = match rhs {
            Some(r) => self.closed_value(r)?,
            None => Value::Bool(true),
        };
        if !self.sig.ty(decl.value).contains(value) {
            return Err(err(
                line,
                format!("value `{}` outside the type of `{fname}`", self.symbols.show(value)),
            ));
        }
        match decl.kind {
            FunctionKind::Fluent => {
                let var = vars.resolve(&self.sig, fid, &arg_vals).unwrap();
                let slot = &mut values[var.0 as usize];
                if slot.is_some() {
                    return Err(err(line, format!("`{fname}` assigned twice")));
                }
                *slot = Some(value);
            }
            FunctionKind::Extensional => {
                if tables.entry(fid).or_default().insert(arg_vals, value).is_some() {
                    return Err(err(line, format!("`{fname}` defined twice for the same arguments")));
                }
            }
            FunctionKind::Procedure => {
                return Err(err(line, format!("procedure `{fname}` cannot be given a table")))
            }
        }
        Ok(())
    }
}
