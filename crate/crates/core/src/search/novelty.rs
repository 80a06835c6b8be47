use std::collections::{HashMap, HashSet};

/// Pair index in a strictly upper-triangular layout (`i < j`).
fn tri(i: u32, j: u32) -> u64 {
    debug_assert!(i < j);
    let j = j as u64;
    j * (j - 1) / 2 + i as u64
}

const DENSE_PAIR_BITS: u64 = 1 << 25;

#[derive(Clone, Debug)]
enum PairSet {
    Dense(Vec<u64>),
    Sparse(HashSet<u64>),
}

impl PairSet {
    fn new(n_atoms: usize) -> PairSet {
        let bits = (n_atoms as u64) * (n_atoms as u64).saturating_sub(1) / 2;
        if bits <= DENSE_PAIR_BITS {
            PairSet::Dense(vec![0; bits.div_ceil(64) as usize])
        } else {
            PairSet::Sparse(HashSet::new())
        }
    }

    fn contains(&self, k: u64) -> bool {
        match self {
            PairSet::Dense(w) => w[(k / 64) as usize] >> (k % 64) & 1 == 1,
            PairSet::Sparse(s) => s.contains(&k),
        }
    }

    fn insert(&mut self, k: u64) {
        match self {
            PairSet::Dense(w) => w[(k / 64) as usize] |= 1 << (k % 64),
            PairSet::Sparse(s) => {
                s.insert(k);
            }
        }
    }
}

#[derive(Clone, Debug)]
struct Partition {
    singles: Vec<u64>,
    pairs: Option<PairSet>,
}

/// Seen atoms and atom pairs, one independent table per heuristic-value
/// partition.
#[derive(Clone, Debug)]
pub struct NoveltyTable {
    n_atoms: usize,
    arity: u8,
    partitions: HashMap<Vec<i64>, Partition>,
}

impl NoveltyTable {
    /// `arity` is 1 or 2.
    pub fn new(n_atoms: usize, arity: u8) -> NoveltyTable {
        assert!(arity == 1 || arity == 2, "novelty arity must be 1 or 2");
        NoveltyTable {
            n_atoms,
            arity,
            partitions: HashMap::new(),
        }
    }

    pub fn arity(&self) -> u8 {
        self.arity
    }

    pub fn n_partitions(&self) -> usize {
        self.partitions.len()
    }

    /// Novelty of a state with true atoms `atoms` (sorted, distinct) in the
    /// partition `key`: 1 if some atom is new, 2 if some pair is new (arity
    /// 2 only), otherwise `arity + 1`. Everything is then marked seen.
    pub fn evaluate(&mut self, key: &[i64], atoms: &[u32]) -> u8 {
        let (n, arity) = (self.n_atoms, self.arity);
        let part = self.partitions.entry(key.to_vec()).or_insert_with(|| Partition {
            singles: vec![0; n.div_ceil(64)],
            pairs: (arity >= 2).then(|| PairSet::new(n)),
        });
        let mut novelty = arity + 1;
        for &a in atoms {
            let (w, b) = ((a / 64) as usize, a % 64);
            if part.singles[w] >> b & 1 == 0 {
                part.singles[w] |= 1 << b;
                novelty = 1;
            }
        }
        if let Some(pairs) = &mut part.pairs {
            for (x, &j) in atoms.iter().enumerate() {
                for &i in &atoms[..x] {
                    let k = tri(i, j);
                    if !pairs.contains(k) {
                        pairs.insert(k);
                        novelty = novelty.min(2);
                    }
                }
            }
        }
        novelty
    }
}
