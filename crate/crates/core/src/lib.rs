//! Nested sequent calculi for tense logic Kt and its extensions.
//!
//! The crate provides formulas and nested sequents, the shallow calculus
//! SKt with structural extensions, the deep calculus DKt with local and
//! path-axiom propagation rules, proof translations and cut elimination,
//! a terminating prover for DKt, and a Kripke-model oracle.

pub mod calculus_deep;
pub mod calculus_shallow;
pub mod corpus;
pub mod formula;
pub mod path_engine;
pub mod prover;
pub mod semantics;
pub mod sequent;
pub mod transform;

pub use calculus_deep::{
    check_deep, deep_rule_instances, DeepDerivation, DeepRule, DeepRuleInstance, DeepSystem, LocalRule,
};
pub use calculus_shallow::{check_shallow, ShallowDerivation, ShallowRule, StructuralRule};
pub use formula::{parse, Diamond, Formula, ParseError};
pub use path_engine::{Grammar, PathAxiom};
pub use prover::{prove_dkt, prove_extension, ProveOutcome};
pub use semantics::{find_countermodel, FrameFilter, KripkeModel};
pub use sequent::{FormulaAddress, NodeAddress, Polarity, Sequent};
