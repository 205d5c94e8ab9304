//! Kripke semantics and a bounded countermodel search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use itertools::Itertools;
use serde_json::{json, Value};
use thiserror::Error;

use crate::formula::Formula;

/// Worlds are `0..worlds`; `val` lists the worlds where each atom holds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    pub worlds: usize,
    pub rel: BTreeSet<(usize, usize)>,
    pub val: BTreeMap<String, BTreeSet<usize>>,
}

/// Largest model the bitmask evaluator handles.
pub const MAX_WORLDS: usize = 16;

struct Masks {
    succ: Vec<u32>,
    pred: Vec<u32>,
    all: u32,
}

impl Masks {
    fn of(worlds: usize, rel: impl IntoIterator<Item = (usize, usize)>) -> Masks {
        assert!(worlds <= MAX_WORLDS, "models are limited to {MAX_WORLDS} worlds");
        let mut succ = vec![0u32; worlds];
        let mut pred = vec![0u32; worlds];
        for (i, j) in rel {
            succ[i] |= 1 << j;
            pred[j] |= 1 << i;
        }
        Masks {
            succ,
            pred,
            all: (1 << worlds) - 1,
        }
    }

    /// Worlds forcing `f`, given the worlds of each atom.
    fn eval(&self, f: &Formula, atom: &impl Fn(&str) -> u32) -> u32 {
        let every =
            |adj: &[u32], a: u32| -> u32 { (0..adj.len()).filter(|&w| adj[w] & !a == 0).fold(0, |m, w| m | 1 << w) };
        let some =
            |adj: &[u32], a: u32| -> u32 { (0..adj.len()).filter(|&w| adj[w] & a != 0).fold(0, |m, w| m | 1 << w) };
        match f {
            Formula::Atom(p) => atom(p),
            Formula::NegAtom(p) => !atom(p) & self.all,
            Formula::And(a, b) => self.eval(a, atom) & self.eval(b, atom),
            Formula::Or(a, b) => self.eval(a, atom) | self.eval(b, atom),
            Formula::Box(a) => every(&self.succ, self.eval(a, atom)),
            Formula::Dia(a) => some(&self.succ, self.eval(a, atom)),
            Formula::BlackBox(a) => every(&self.pred, self.eval(a, atom)),
            Formula::BlackDia(a) => some(&self.pred, self.eval(a, atom)),
        }
    }
}

impl KripkeModel {
    fn masks(&self) -> Masks {
        Masks::of(self.worlds, self.rel.iter().copied())
    }

    fn atom_mask(&self, p: &str) -> u32 {
        self.val.get(p).map_or(0, |ws| ws.iter().fold(0, |m, w| m | 1 << w))
    }

    /// Set of worlds forcing `f`.
    pub fn truth_set(&self, f: &Formula) -> BTreeSet<usize> {
        let m = self.masks().eval(f, &|p| self.atom_mask(p));
        (0..self.worlds).filter(|w| m >> w & 1 == 1).collect()
    }

    pub fn to_json(&self, world: usize) -> Value {
        json!({
            "worlds": self.worlds,
            "rel": self.rel.iter().map(|&(i, j)| json!([i, j])).collect::<Vec<_>>(),
            "val": self.val.iter().map(|(a, ws)| (a.clone(), json!(ws))).collect::<serde_json::Map<_, _>>(),
            "world": world,
        })
    }
}

/// Whether `w ⊩ f`. Panics if `w` is not a world of `m`.
pub fn forces(m: &KripkeModel, w: usize, f: &Formula) -> bool {
    assert!(w < m.worlds, "world {w} out of range");
    m.truth_set(f).contains(&w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameFilter {
    #[default]
    None,
    ReflTrans,
    Equivalence,
    PartialFunction,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown frame filter {0:?}; expected none, refl+trans, equivalence or partial-function")]
pub struct FrameFilterError(String);

impl FromStr for FrameFilter {
    type Err = FrameFilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "none" => FrameFilter::None,
            "refl+trans" => FrameFilter::ReflTrans,
            "equivalence" => FrameFilter::Equivalence,
            "partial-function" => FrameFilter::PartialFunction,
            _ => return Err(FrameFilterError(s.to_string())),
        })
    }
}

impl fmt::Display for FrameFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FrameFilter::None => "none",
            FrameFilter::ReflTrans => "refl+trans",
            FrameFilter::Equivalence => "equivalence",
            FrameFilter::PartialFunction => "partial-function",
        })
    }
}

fn has(code: u64, n: usize, i: usize, j: usize) -> bool {
    code >> (i * n + j) & 1 == 1
}

impl FrameFilter {
    fn admits(self, code: u64, n: usize) -> bool {
        let refl = || (0..n).all(|i| has(code, n, i, i));
        let trans = || {
            (0..n)
                .cartesian_product(0..n)
                .all(|(i, j)| !has(code, n, i, j) || (0..n).all(|k| !has(code, n, j, k) || has(code, n, i, k)))
        };
        let sym = || {
            (0..n)
                .cartesian_product(0..n)
                .all(|(i, j)| has(code, n, i, j) == has(code, n, j, i))
        };
        match self {
            FrameFilter::None => true,
            FrameFilter::ReflTrans => refl() && trans(),
            FrameFilter::Equivalence => refl() && sym() && trans(),
            FrameFilter::PartialFunction => (0..n).all(|i| (0..n).filter(|&j| has(code, n, i, j)).count() <= 1),
        }
    }
}

fn permute(code: u64, n: usize, perm: &[usize]) -> u64 {
    let mut out = 0;
    for i in 0..n {
        for j in 0..n {
            if has(code, n, i, j) {
                out |= 1 << (perm[i] * n + perm[j]);
            }
        }
    }
    out
}

/// Relations on `n` worlds that are least in their isomorphism class.
fn canonical_relations(n: usize) -> &'static [u64] {
    static CACHE: [OnceLock<Vec<u64>>; MAX_BOUND + 1] = [const { OnceLock::new() }; MAX_BOUND + 1];
    CACHE[n].get_or_init(|| {
        let perms: Vec<Vec<usize>> = (0..n).permutations(n).collect();
        (0..1u64 << (n * n))
            .filter(|&code| perms.iter().all(|p| permute(code, n, p) >= code))
            .collect()
    })
}

/// Largest world count the enumerator visits; larger bounds are clamped.
pub const MAX_BOUND: usize = 4;

/// Searches models of up to `max_worlds` worlds for a world refuting `f`.
/// Results are ordered by size, then relation encoding, then valuation.
pub fn find_countermodel(f: &Formula, max_worlds: usize, filter: FrameFilter) -> Option<(KripkeModel, usize)> {
    let atoms: Vec<String> = f.atoms().into_iter().collect();
    let max_worlds = max_worlds.min(MAX_BOUND);
    for n in 1..=max_worlds {
        let all = (1u32 << n) - 1;
        for &code in canonical_relations(n) {
            if !filter.admits(code, n) {
                continue;
            }
            let rel: Vec<(usize, usize)> = (0..n)
                .cartesian_product(0..n)
                .filter(|&(i, j)| has(code, n, i, j))
                .collect();
            let masks = Masks::of(n, rel.iter().copied());
            let vals = 1u64 << (n * atoms.len());
            for v in 0..vals {
                let atom = |p: &str| {
                    let k = atoms.iter().position(|a| a == p).expect("atom of f");
                    (v >> (k * n)) as u32 & all
                };
                let bad = !masks.eval(f, &atom) & all;
                if bad != 0 {
                    let val = atoms
                        .iter()
                        .map(|a| {
                            let m = atom(a);
                            (a.clone(), (0..n).filter(|w| m >> w & 1 == 1).collect())
                        })
                        .collect();
                    let model = KripkeModel {
                        worlds: n,
                        rel: rel.into_iter().collect(),
                        val,
                    };
                    return Some((model, bad.trailing_zeros() as usize));
                }
            }
        }
    }
    None
}

/// Default world bound for countermodel search.
pub const DEFAULT_BOUND: usize = 4;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use proptest::prelude::*;

    fn f(s: &str) -> Formula {
        parse(s).unwrap()
    }

    fn model(worlds: usize, rel: &[(usize, usize)], val: &[(&str, &[usize])]) -> KripkeModel {
        KripkeModel {
            worlds,
            rel: rel.iter().copied().collect(),
            val: val
                .iter()
                .map(|(a, ws)| (a.to_string(), ws.iter().copied().collect()))
                .collect(),
        }
    }

    #[test]
    fn forcing_examples() {
        let m = model(1, &[], &[]);
        assert!(forces(&m, 0, &f("[]a")));
        assert!(!forces(&m, 0, &f("<>a")));
        let m = model(2, &[(0, 1)], &[("a", &[1])]);
        assert!(forces(&m, 0, &f("<>a")));
        assert!(forces(&m, 1, &f("<*>~a")));
        assert!(!forces(&m, 0, &f("<*>~a")));
    }

    #[test]
    fn countermodel_examples() {
        assert!(find_countermodel(&f("a | ~a"), 3, FrameFilter::None).is_none());
        let (m, w) = find_countermodel(&f("[]a -> a"), 3, FrameFilter::None).unwrap();
        assert_eq!((m.worlds, m.rel.len(), w), (1, 0, 0));
        assert!(!forces(&m, w, &f("a")));
        assert!(find_countermodel(&f("<><>a -> <>a"), 3, FrameFilter::ReflTrans).is_none());
        assert!(find_countermodel(&f("<><>a -> <>a"), 3, FrameFilter::None).is_some());
        assert!(find_countermodel(&f("<>a -> []<>a"), 3, FrameFilter::Equivalence).is_none());
        assert!(find_countermodel(&f("<>a -> []a"), 3, FrameFilter::PartialFunction).is_none());
        assert!(find_countermodel(&f("<>a -> []a"), 3, FrameFilter::None).is_some());
    }

    #[test]
    fn canonical_relation_counts() {
        // Unlabelled directed graphs with loops: 2, 10, 104.
        assert_eq!(canonical_relations(1).len(), 2);
        assert_eq!(canonical_relations(2).len(), 10);
        assert_eq!(canonical_relations(3).len(), 104);
    }

    #[test]
    fn json_shape() {
        let m = model(2, &[(0, 1)], &[("a", &[1])]);
        assert_eq!(
            m.to_json(0),
            json!({"worlds": 2, "rel": [[0, 1]], "val": {"a": [1]}, "world": 0})
        );
    }

    fn arb_model() -> impl Strategy<Value = KripkeModel> {
        (1usize..5).prop_flat_map(|n| {
            (
                proptest::collection::btree_set((0..n, 0..n), 0..=n * n),
                proptest::collection::btree_set(0..n, 0..=n),
                proptest::collection::btree_set(0..n, 0..=n),
            )
                .prop_map(move |(rel, a, b)| KripkeModel {
                    worlds: n,
                    rel,
                    val: [("a".to_string(), a), ("b".to_string(), b)].into_iter().collect(),
                })
        })
    }

    proptest! {
        #[test]
        fn box_dia_duality(m in arb_model(), g in crate::formula::tests::arb_formula()) {
            for w in 0..m.worlds {
                prop_assert_eq!(forces(&m, w, &Formula::boxed(g.clone())), !forces(&m, w, &Formula::dia(g.negate())));
                prop_assert_eq!(forces(&m, w, &Formula::bbox(g.clone())), !forces(&m, w, &Formula::bdia(g.negate())));
                prop_assert_eq!(forces(&m, w, &g), !forces(&m, w, &g.negate()));
            }
        }

        #[test]
        fn residuation_axioms_hold(m in arb_model(), g in crate::formula::tests::arb_formula()) {
            for w in 0..m.worlds {
                prop_assert!(forces(&m, w, &Formula::implies(g.clone(), Formula::boxed(Formula::bdia(g.clone())))));
                prop_assert!(forces(&m, w, &Formula::implies(g.clone(), Formula::bbox(Formula::dia(g.clone())))));
            }
        }
    }
}
