//! Proof search: the terminating strategy for DKt and a bounded search for
//! its extensions.

use std::collections::BTreeMap;

use crate::calculus_deep::{
    check_deep, instance_premises, instances_with, phase, DeepDerivation, DeepRule, DeepRuleInstance, DeepSystem, Phase,
};
use crate::formula::Formula;
use crate::path_engine::PathOracle;
use crate::sequent::{FormulaAddress, NodeAddress, Polarity, Sequent, SequentError};

/// Closure status of one node, treating its formulas as a set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeStatus {
    pub saturated: bool,
    pub unrealised: Vec<FormulaAddress>,
    /// Rule, diamond occurrence and the neighbour that lacks its body.
    pub unpropagated: Vec<(DeepRule, FormulaAddress, NodeAddress)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnknownReason {
    DepthBound(usize),
    StepLimit(usize),
    /// A found proof failed the independent checker.
    Unverified(String),
}

#[derive(Debug, Clone)]
pub enum ProveOutcome {
    Proved(DeepDerivation),
    Refuted(Sequent),
    Unknown(UnknownReason),
}

impl ProveOutcome {
    pub fn proof(&self) -> Option<&DeepDerivation> {
        match self {
            ProveOutcome::Proved(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_proved(&self) -> bool {
        matches!(self, ProveOutcome::Proved(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            ProveOutcome::Proved(_) => "proved",
            ProveOutcome::Refuted(_) => "refuted",
            ProveOutcome::Unknown(_) => "unknown",
        }
    }
}

/// Search counters and any breach of the termination bounds.
#[derive(Debug, Clone, Default)]
pub struct ProveStats {
    pub steps: usize,
    pub max_depth: usize,
    /// `|sf|` of the input.
    pub subformulas: usize,
    /// Degree of the input.
    pub degree: usize,
    pub violations: Vec<String>,
}

/// Nodes in leftmost-outermost order.
fn nodes_in_order(s: &Sequent) -> Vec<NodeAddress> {
    let mut v = s.node_addresses();
    v.sort_by(|a, b| (a.depth(), &a.0).cmp(&(b.depth(), &b.0)));
    v
}

fn saturated(fs: &[Formula]) -> bool {
    fs.iter().all(|f| match f {
        Formula::Or(a, b) => fs.contains(a) && fs.contains(b),
        Formula::And(a, b) => fs.contains(a) || fs.contains(b),
        Formula::Atom(_) | Formula::NegAtom(_) => !fs.contains(&f.negate()),
        _ => true,
    })
}

pub fn node_status(s: &Sequent, addr: &NodeAddress) -> Result<NodeStatus, SequentError> {
    let node = s.node(addr).ok_or_else(|| SequentError::InvalidNode(addr.clone()))?;
    let mut unrealised = Vec::new();
    let mut unpropagated = Vec::new();
    for (i, f) in node.formulas.iter().enumerate() {
        let (pol, body) = match f {
            Formula::Box(a) => (Polarity::Circle, a),
            Formula::BlackBox(a) => (Polarity::Bullet, a),
            _ => continue,
        };
        if !node
            .children
            .iter()
            .any(|(p, c)| *p == pol && c.formulas.contains(body))
        {
            unrealised.push(addr.formula(i));
        }
    }
    for (i, f) in node.formulas.iter().enumerate() {
        let (rule, pol, body) = match f {
            Formula::Dia(a) => (DeepRule::Dia1, Polarity::Circle, a),
            Formula::BlackDia(a) => (DeepRule::BDia1, Polarity::Bullet, a),
            _ => continue,
        };
        for (k, (p, c)) in node.children.iter().enumerate() {
            if *p == pol && !c.formulas.contains(body) {
                unpropagated.push((rule, addr.formula(i), addr.child(k)));
            }
        }
    }
    for (k, (p, c)) in node.children.iter().enumerate() {
        for (i, f) in c.formulas.iter().enumerate() {
            let (rule, pol, body) = match f {
                Formula::Dia(a) => (DeepRule::Dia2, Polarity::Bullet, a),
                Formula::BlackDia(a) => (DeepRule::BDia2, Polarity::Circle, a),
                _ => continue,
            };
            if *p == pol && !node.formulas.contains(body) {
                unpropagated.push((rule, addr.child(k).formula(i), addr.clone()));
            }
        }
    }
    Ok(NodeStatus {
        saturated: saturated(&node.formulas),
        unrealised,
        unpropagated,
    })
}

fn id_instance(s: &Sequent, nodes: &[NodeAddress]) -> Option<DeepRuleInstance> {
    for u in nodes {
        let node = s.node(u).expect("listed");
        for (i, f) in node.formulas.iter().enumerate() {
            if let Formula::Atom(_) = f {
                if let Some(j) = node.formulas.iter().position(|g| *g == f.negate()) {
                    return Some(DeepRuleInstance::id(u.formula(i), j));
                }
            }
        }
    }
    None
}

fn saturation_instance(s: &Sequent, nodes: &[NodeAddress], system: &DeepSystem) -> Option<DeepRuleInstance> {
    for u in nodes {
        let fs = &s.node(u).expect("listed").formulas;
        for (i, f) in fs.iter().enumerate() {
            let rule = match f {
                Formula::Or(a, b) if !fs.contains(a) || !fs.contains(b) => DeepRule::Or,
                Formula::And(a, b) if !fs.contains(a) && !fs.contains(b) => DeepRule::And,
                _ => continue,
            };
            if system.allows(rule) {
                return Some(DeepRuleInstance::at(rule, u.formula(i)));
            }
        }
    }
    None
}

/// Branch-local move counters, keyed by node.
#[derive(Debug, Clone, Default)]
struct Budget {
    saturate: BTreeMap<NodeAddress, usize>,
    realise: BTreeMap<NodeAddress, usize>,
    propagate_into: BTreeMap<NodeAddress, usize>,
}

enum Stop {
    Refuted(Sequent),
    Unknown(UnknownReason),
}

struct Search<'a> {
    system: &'a DeepSystem,
    oracle: Option<PathOracle>,
    /// Maximum tree depth for new nodes; `None` for the DKt strategy.
    depth_bound: Option<usize>,
    depth_limit: usize,
    step_limit: usize,
    stats: ProveStats,
}

const STEP_LIMIT: usize = 200_000;

impl Search<'_> {
    fn count(&mut self, map: &mut BTreeMap<NodeAddress, usize>, at: &NodeAddress, what: &str) {
        let n = map.entry(at.clone()).or_insert(0);
        *n += 1;
        if self.depth_bound.is_none() && *n > self.stats.subformulas {
            self.stats
                .violations
                .push(format!("{what} moves at {at} exceed |sf| = {}", self.stats.subformulas));
        }
    }

    fn apply(&mut self, s: Sequent, inst: DeepRuleInstance, mut budget: Budget) -> Result<DeepDerivation, Stop> {
        self.stats.steps += 1;
        if self.stats.steps > self.step_limit {
            return Err(Stop::Unknown(UnknownReason::StepLimit(self.step_limit)));
        }
        match phase(inst.rule) {
            Phase::Close => {}
            Phase::Saturate => self.count(&mut budget.saturate, &inst.site.node, "saturation"),
            Phase::Realise => self.count(&mut budget.realise, &inst.site.node, "realisation"),
            Phase::Propagate => {
                let t = inst.target.clone().expect("propagation target");
                self.count(&mut budget.propagate_into, &t, "propagation")
            }
        }
        let prems = instance_premises(&s, &inst, self.oracle.as_ref()).expect("strategy picks applicable instances");
        let mut done = Vec::with_capacity(prems.len());
        for p in prems {
            done.push(self.search(p, budget.clone())?);
        }
        Ok(DeepDerivation::new(s, inst, done))
    }

    fn search(&mut self, s: Sequent, budget: Budget) -> Result<DeepDerivation, Stop> {
        let depth = s.depth();
        self.stats.max_depth = self.stats.max_depth.max(depth);
        if self.depth_bound.is_none() && depth > self.depth_limit {
            self.stats
                .violations
                .push(format!("tree depth {depth} exceeds bound {}", self.depth_limit));
        }
        let nodes = nodes_in_order(&s);
        if let Some(inst) = id_instance(&s, &nodes) {
            return self.apply(s, inst, budget);
        }
        if let Some(inst) = saturation_instance(&s, &nodes, self.system) {
            return self.apply(s, inst, budget);
        }
        let mut capped = false;
        for u in &nodes {
            let st = node_status(&s, u).expect("listed");
            for fa in st.unrealised {
                let rule = match s.formula(&fa) {
                    Some(Formula::Box(_)) => DeepRule::Box,
                    _ => DeepRule::BBox,
                };
                if !self.system.allows(rule) {
                    continue;
                }
                if self.depth_bound.is_some_and(|b| u.depth() + 1 > b) {
                    capped = true;
                    continue;
                }
                return self.apply(s, DeepRuleInstance::at(rule, fa), budget);
            }
        }
        if let Some(inst) = self.propagation_instance(&s, &nodes) {
            return self.apply(s, inst, budget);
        }
        if capped {
            Err(Stop::Unknown(UnknownReason::DepthBound(
                self.depth_bound.expect("capped"),
            )))
        } else {
            Err(Stop::Refuted(s))
        }
    }

    fn propagation_instance(&self, s: &Sequent, nodes: &[NodeAddress]) -> Option<DeepRuleInstance> {
        if self.depth_bound.is_none() {
            return nodes.iter().find_map(|u| {
                let st = node_status(s, u).expect("listed");
                st.unpropagated
                    .into_iter()
                    .next()
                    .map(|(rule, fa, t)| DeepRuleInstance::propagate(rule, fa, t))
            });
        }
        instances_with(s, self.system, self.oracle.as_ref())
            .into_iter()
            .map(|(i, _)| i)
            .find(|i| phase(i.rule) == Phase::Propagate)
    }
}

fn run(s: &Sequent, system: &DeepSystem, depth_bound: Option<usize>) -> (ProveOutcome, ProveStats) {
    let sf = s.subformulas();
    let degree = sf.iter().map(Formula::degree).max().unwrap_or(0);
    let mut search = Search {
        system,
        oracle: system.path_axioms.as_ref().map(|a| PathOracle::new(a)),
        depth_bound,
        depth_limit: s.depth() + degree,
        step_limit: STEP_LIMIT,
        stats: ProveStats {
            subformulas: sf.len(),
            degree,
            ..ProveStats::default()
        },
    };
    let out = match search.search(s.clone(), Budget::default()) {
        Ok(d) => match check_deep(&d, system) {
            Ok(()) => ProveOutcome::Proved(d),
            Err(e) => ProveOutcome::Unknown(UnknownReason::Unverified(e.to_string())),
        },
        Err(Stop::Refuted(stuck)) => ProveOutcome::Refuted(stuck),
        Err(Stop::Unknown(r)) => ProveOutcome::Unknown(r),
    };
    (out, search.stats)
}

/// The terminating DKt strategy. Never returns `Unknown` for valid input.
pub fn prove_dkt(s: &Sequent) -> ProveOutcome {
    prove_dkt_instrumented(s).0
}

/// [`prove_dkt`] together with its counters and bound checks.
pub fn prove_dkt_instrumented(s: &Sequent) -> (ProveOutcome, ProveStats) {
    run(s, &DeepSystem::dkt(), None)
}

/// Bounded search in an extension of DKt; new nodes stop at `depth_bound`.
pub fn prove_extension(s: &Sequent, system: &DeepSystem, depth_bound: usize) -> ProveOutcome {
    prove_extension_instrumented(s, system, depth_bound).0
}

pub fn prove_extension_instrumented(
    s: &Sequent,
    system: &DeepSystem,
    depth_bound: usize,
) -> (ProveOutcome, ProveStats) {
    run(s, system, Some(depth_bound.max(1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::path_engine::parse_axioms;

    fn seq(s: &str) -> Sequent {
        s.parse().unwrap()
    }

    fn goal(f: &str) -> Sequent {
        Sequent::from_formulas([parse(f).unwrap()])
    }

    #[test]
    fn status_examples() {
        let st = node_status(&seq("a | b"), &NodeAddress::root()).unwrap();
        assert!(!st.saturated);
        let st = node_status(&seq("[]a, o{a}"), &NodeAddress::root()).unwrap();
        assert!(st.unrealised.is_empty());
        let st = node_status(&seq("[]a, b{a}"), &NodeAddress::root()).unwrap();
        assert_eq!(st.unrealised.len(), 1);
        let st = node_status(&seq("<>a, o{}"), &NodeAddress::root()).unwrap();
        assert_eq!(
            st.unpropagated,
            vec![(DeepRule::Dia1, "r#0".parse().unwrap(), NodeAddress(vec![0]))]
        );
        let st = node_status(&seq("b{<>a}"), &NodeAddress::root()).unwrap();
        assert_eq!(st.unpropagated[0].0, DeepRule::Dia2);
        assert!(node_status(&seq("a"), &NodeAddress(vec![3])).is_err());
    }

    #[test]
    fn id_at_root_is_one_step() {
        let (out, stats) = prove_dkt_instrumented(&seq("a, ~a"));
        assert_eq!(out.proof().unwrap().size(), 1);
        assert_eq!(stats.steps, 1);
    }

    #[test]
    fn kt_axioms_and_non_theorems() {
        for f in [
            "a -> []<*>a",
            "a -> [*]<>a",
            "[](a -> b) -> ([]a -> []b)",
            "[*](a -> b) -> ([*]a -> [*]b)",
        ] {
            let (out, stats) = prove_dkt_instrumented(&goal(f));
            assert!(out.is_proved(), "{f}");
            assert!(stats.violations.is_empty(), "{f}: {:?}", stats.violations);
        }
        let ProveOutcome::Refuted(stuck) = prove_dkt(&goal("[]a -> a")) else {
            panic!("[]a -> a should be refuted");
        };
        for u in stuck.node_addresses() {
            let st = node_status(&stuck, &u).unwrap();
            assert!(st.saturated && st.unrealised.is_empty() && st.unpropagated.is_empty());
        }
        // Diamonds never create nodes, so the root alone is stuck.
        assert!(stuck.children.is_empty());
        assert!(stuck.formulas.contains(&parse("<>~a").unwrap()) && stuck.formulas.contains(&parse("a").unwrap()));
    }

    #[test]
    fn deterministic() {
        let s = goal("<>(a | b) -> <>a | <>b");
        let a = prove_dkt(&s).proof().unwrap().to_json();
        let b = prove_dkt(&s).proof().unwrap().to_json();
        assert_eq!(a, b);
    }

    #[test]
    fn extension_examples() {
        let four = DeepSystem::path(parse_axioms("ww->w").unwrap());
        assert!(prove_extension(&goal("<><>a -> <>a"), &four, 2).is_proved());
        let t = DeepSystem::path(parse_axioms("->w").unwrap());
        assert!(prove_extension(&goal("a -> <>a"), &t, 1).is_proved());
        assert!(matches!(
            prove_extension(&goal("[]a -> [][]a"), &four, 1),
            ProveOutcome::Unknown(UnknownReason::DepthBound(1))
        ));
        assert!(prove_extension(&goal("[]a -> [][]a"), &four, 2).is_proved());
        assert!(prove_extension(&goal("[]a -> a"), &DeepSystem::ds4(), 3).is_proved());
        assert!(matches!(
            prove_extension(&goal("[]a -> a"), &DeepSystem::dkt(), 3),
            ProveOutcome::Refuted(_)
        ));
    }

    #[test]
    fn modal_only_search_stays_white() {
        let out = prove_extension(&goal("[](a -> b) -> ([]a -> []b)"), &DeepSystem::dk(), 3);
        let d = out.proof().unwrap();
        d.for_each(&mut |n| assert!(!n.conclusion.has_black() && !n.conclusion.to_string().contains("b{")));
    }
}
