//! Seeded generation of formula corpora for tests and benchmarks.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::formula::Formula;

pub const SEED_VAR: &str = "TENSERA_SEED";
pub const DEFAULT_SEED: u64 = 20_140_617;

/// Seed from `TENSERA_SEED`, or the fixed default.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_VAR)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

const ATOMS: [&str; 2] = ["a", "b"];

/// A random NNF formula with exactly `size` nodes.
pub fn random_formula(rng: &mut impl Rng, size: usize, modal_only: bool) -> Formula {
    assert!(size >= 1);
    if size == 1 {
        let a = ATOMS.choose(rng).expect("nonempty");
        return if rng.gen_bool(0.5) {
            Formula::atom(a)
        } else {
            Formula::neg_atom(a)
        };
    }
    let unary: &[fn(Formula) -> Formula] = if modal_only {
        &[Formula::boxed, Formula::dia]
    } else {
        &[Formula::boxed, Formula::dia, Formula::bbox, Formula::bdia]
    };
    if size == 2 || rng.gen_bool(0.4) {
        let op = unary.choose(rng).expect("nonempty");
        return op(random_formula(rng, size - 1, modal_only));
    }
    let left = rng.gen_range(1..size - 1);
    let (a, b) = (
        random_formula(rng, left, modal_only),
        random_formula(rng, size - 1 - left, modal_only),
    );
    if rng.gen_bool(0.5) {
        Formula::or(a, b)
    } else {
        Formula::and(a, b)
    }
}

/// Shapes that are often theorems, so corpora contain provable entries.
fn biased(rng: &mut impl Rng, max_size: usize, modal_only: bool) -> Option<Formula> {
    let pick = rng.gen_range(0..4);
    let extra = match pick {
        0 => 1,
        1 => 3,
        _ => 4,
    };
    if max_size < extra + 2 {
        return None;
    }
    let size = rng.gen_range(1..=(max_size - extra) / 2);
    let g = random_formula(rng, size, modal_only);
    let ng = g.negate();
    Some(match pick {
        0 => Formula::or(g, ng),
        1 if modal_only => Formula::or(Formula::dia(g), Formula::boxed(ng)),
        1 => Formula::or(ng, Formula::boxed(Formula::bdia(g))),
        _ if modal_only => Formula::or(
            Formula::boxed(Formula::or(ng, g.clone())),
            Formula::dia(Formula::atom("a")),
        ),
        _ => Formula::or(ng, Formula::bbox(Formula::dia(g))),
    })
}

/// `n` distinct formulas of size at most `max_size`, deterministic in `seed`.
pub fn generate(n: usize, max_size: usize, seed: u64, modal_only: bool) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n && attempts < 100 * n.max(1) {
        attempts += 1;
        let f = if rng.gen_bool(0.3) {
            match biased(&mut rng, max_size, modal_only) {
                Some(f) => f,
                None => continue,
            }
        } else {
            let size = rng.gen_range(1..=max_size);
            random_formula(&mut rng, size, modal_only)
        };
        if f.size() <= max_size && seen.insert(f.clone()) {
            out.push(f);
        }
    }
    out
}
