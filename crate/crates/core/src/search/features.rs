use crate::fstrips::{Formula, FsError, GroundProblem, State, VarId};

/// Maps a state to the ids of the feature atoms it makes true: one atom per
/// state variable value, plus two per derived Boolean feature (true/false).
#[derive(Clone, Debug)]
pub struct FeatureMap {
    offsets: Vec<u32>,
    derived: Vec<Formula>,
    derived_base: u32,
    n_atoms: u32,
}

impl FeatureMap {
    pub fn new(g: &GroundProblem, derived: Vec<Formula>) -> FeatureMap {
        let p = &g.problem;
        let mut offsets = Vec::with_capacity(p.vars.len());
        let mut next = 0u32;
        for v in &p.vars.vars {
            offsets.push(next);
            next += p.signature.ty(v.domain).size() as u32;
        }
        let derived_base = next;
        let n_atoms = derived_base + 2 * derived.len() as u32;
        FeatureMap {
            offsets,
            derived,
            derived_base,
            n_atoms,
        }
    }

    /// Only the state-variable atoms.
    pub fn plain(g: &GroundProblem) -> FeatureMap {
        FeatureMap::new(g, Vec::new())
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms as usize
    }

    pub fn n_derived(&self) -> usize {
        self.derived.len()
    }

    /// Atom id for `var = value` where `value` is the `pos`-th domain member.
    pub fn var_atom(&self, var: VarId, pos: u32) -> u32 {
        self.offsets[var.0 as usize] + pos
    }

    pub fn derived_atom(&self, i: usize, value: bool) -> u32 {
        self.derived_base + 2 * i as u32 + value as u32
    }

    /// Writes the true atoms of `s` into `out` in ascending order.
    pub fn atoms(&self, g: &GroundProblem, s: &State, out: &mut Vec<u32>) -> Result<(), FsError> {
        out.clear();
        let p = &g.problem;
        for (i, v) in p.vars.vars.iter().enumerate() {
            let pos = p
                .signature
                .ty(v.domain)
                .position(s.get(VarId(i as u32)))
                .ok_or_else(|| FsError::OutOfDomain {
                    what: p.var_name(VarId(i as u32)),
                })?;
            out.push(self.offsets[i] + pos);
        }
        for (i, f) in self.derived.iter().enumerate() {
            let b = p.eval_formula(s, f)?;
            out.push(self.derived_atom(i, b));
        }
        Ok(())
    }
}
