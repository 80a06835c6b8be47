use std::collections::HashMap;
use std::fmt;

/// Interned fixed constant symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymId(pub u32);

/// Denotation of a closed term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Sym(SymId),
    Int(i64),
    Bool(bool),
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_sym(self) -> Option<SymId> {
        match self {
            Value::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    /// Fixed-width canonical encoding (tag byte + 8 payload bytes).
    pub fn encode_into(self, out: &mut Vec<u8>) {
        match self {
            Value::Sym(SymId(id)) => {
                out.push(0);
                out.extend_from_slice(&u64::from(id).to_le_bytes());
            }
            Value::Int(i) => {
                out.push(1);
                out.extend_from_slice(&i.to_le_bytes());
            }
            Value::Bool(b) => {
                out.push(2);
                out.extend_from_slice(&u64::from(b).to_le_bytes());
            }
        }
    }
}

/// Symbol interner. Constants are global; types are sets of them.
#[derive(Clone, Debug, Default)]
pub struct Symbols {
    names: Vec<String>,
    index: HashMap<String, SymId>,
}

impl Symbols {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> SymId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = SymId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<SymId> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: SymId) -> &str {
        &self.names[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn show(&self, v: Value) -> String {
        match v {
            Value::Sym(s) => self.name(s).to_string(),
            Value::Int(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u32);

#[derive(Clone, Debug)]
pub enum TypeDomain {
    Symbols(Vec<SymId>),
    Range { lo: i64, hi: i64 },
    Bool,
}

#[derive(Clone, Debug)]
pub struct TypeDef {
    pub name: String,
    pub domain: TypeDomain,
    positions: HashMap<SymId, u32>,
}

impl TypeDef {
    pub fn symbolic(name: &str, members: Vec<SymId>) -> Self {
        let positions = members
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i as u32))
            .collect();
        TypeDef {
            name: name.to_string(),
            domain: TypeDomain::Symbols(members),
            positions,
        }
    }

    pub fn range(name: &str, lo: i64, hi: i64) -> Self {
        TypeDef {
            name: name.to_string(),
            domain: TypeDomain::Range { lo, hi },
            positions: HashMap::new(),
        }
    }

    pub fn boolean() -> Self {
        TypeDef {
            name: "bool".to_string(),
            domain: TypeDomain::Bool,
            positions: HashMap::new(),
        }
    }

    pub fn size(&self) -> usize {
        match &self.domain {
            TypeDomain::Symbols(m) => m.len(),
            TypeDomain::Range { lo, hi } => (hi - lo + 1).max(0) as usize,
            TypeDomain::Bool => 2,
        }
    }

    /// Position of `v` in the member order, `None` if not a member.
    pub fn position(&self, v: Value) -> Option<u32> {
        match (&self.domain, v) {
            (TypeDomain::Symbols(_), Value::Sym(s)) => self.positions.get(&s).copied(),
            (TypeDomain::Range { lo, hi }, Value::Int(i)) if i >= *lo && i <= *hi => {
                Some((i - lo) as u32)
            }
            (TypeDomain::Bool, Value::Bool(b)) => Some(u32::from(b)),
            _ => None,
        }
    }

    pub fn contains(&self, v: Value) -> bool {
        self.position(v).is_some()
    }

    pub fn member(&self, pos: usize) -> Value {
        match &self.domain {
            TypeDomain::Symbols(m) => Value::Sym(m[pos]),
            TypeDomain::Range { lo, .. } => Value::Int(lo + pos as i64),
            TypeDomain::Bool => Value::Bool(pos == 1),
        }
    }

    pub fn members(&self) -> impl Iterator<Item = Value> + '_ {
        (0..self.size()).map(move |i| self.member(i))
    }

    /// True when every member of `self` is a member of `other`.
    pub fn is_subset_of(&self, other: &TypeDef) -> bool {
        self.members().all(|v| other.contains(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FnId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FunctionKind {
    Fluent,
    /// Fixed symbol with a table given in the initial situation.
    Extensional,
    /// Fixed symbol computed by a registered procedure (`@name`).
    Procedure,
}

#[derive(Clone, Debug)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<TypeId>,
    pub value: TypeId,
    pub kind: FunctionKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Term {
    Const(Value),
    /// Schema parameter, by position. Absent after grounding.
    Param(usize),
    /// Resolved state variable `f(c)`.
    Var(VarId),
    App { func: FnId, args: Vec<Term> },
    Arith {
        op: ArithOp,
        lhs: Box<Term>,
        rhs: Box<Term>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Formula {
    Const(bool),
    Eq(Term, Term),
    /// Boolean-valued term used as an atom.
    Atom(Term),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    /// Top-level conjuncts (the formula itself if it is not a conjunction).
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(parts) => parts.iter().collect(),
            Formula::Const(true) => Vec::new(),
            other => vec![other],
        }
    }
}

/// `lhs := rhs`; the head of `lhs` is a fluent.
#[derive(Clone, Debug, PartialEq)]
pub struct Effect {
    pub lhs: Term,
    pub rhs: Term,
}

#[derive(Clone, Debug)]
pub struct Parameter {
    pub name: String,
    pub ty: TypeId,
}

#[derive(Clone, Debug)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Parameter>,
    pub pre: Formula,
    pub effects: Vec<Effect>,
}

#[derive(Clone, Debug)]
pub struct ConstraintSchema {
    pub params: Vec<Parameter>,
    pub body: Formula,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionId(pub u32);

#[derive(Clone, Debug)]
pub struct GroundAction {
    pub schema: usize,
    pub args: Vec<Value>,
    pub name: String,
    pub pre: Formula,
    pub effects: Vec<Effect>,
}

#[derive(Clone, Debug)]
pub struct GroundConstraint {
    pub schema: usize,
    pub args: Vec<Value>,
    pub body: Formula,
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}
