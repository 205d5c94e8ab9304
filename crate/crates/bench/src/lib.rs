//! Benchmark fixtures.

use tensera_core::corpus::generate;
use tensera_core::transform::identity_derivation;
use tensera_core::{parse, Formula, Sequent, ShallowDerivation, ShallowRule};

pub const SEED: u64 = 20_140_617;

/// The four residuation and distribution axioms over atoms `a`, `b`.
pub fn axioms() -> Vec<Formula> {
    [
        "~a | []<*>a",
        "~a | [*]<>a",
        "<>(a & ~b) | <>~a | []b",
        "<*>(a & ~b) | <*>~a | [*]b",
    ]
    .into_iter()
    .map(|s| parse(s).expect("fixture parses"))
    .collect()
}

pub fn corpus(n: usize, max_size: usize) -> Vec<Sequent> {
    generate(n, max_size, SEED, false)
        .into_iter()
        .map(|f| Sequent::from_formulas([f]))
        .collect()
}

/// A cut on `a` between two identity derivations.
pub fn identity_cut(a: &str) -> ShallowDerivation {
    let a = parse(a).expect("fixture parses");
    ShallowDerivation::new(
        Sequent::from_formulas([a.clone(), a.negate()]),
        ShallowRule::Cut {
            formula: a.negate(),
            left_formulas: vec![0],
            left_children: vec![],
        },
        vec![identity_derivation(&a), identity_derivation(&a.negate())],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use tensera_core::check_shallow;

    #[test]
    fn fixtures_are_well_formed() {
        assert_eq!(axioms().len(), 4);
        assert_eq!(corpus(20, 6).len(), 20);
        check_shallow(&identity_cut("[](a | <*>b)"), &[], true).unwrap();
    }
}
