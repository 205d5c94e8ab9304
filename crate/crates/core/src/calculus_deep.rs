//! The deep calculus DKt, its local propagation extensions and path-axiom propagation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde_json::{json, Value};

use crate::calculus_shallow::{CheckError, CheckErrorKind, ProofJsonError};
use crate::formula::{Diamond, Formula};
use crate::path_engine::{parse_diamonds, PathAxiom, PathOracle, PropagationTable};
use crate::sequent::{FormulaAddress, NodeAddress, Polarity, Sequent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocalRule {
    Ta,
    Tb,
    A4a,
    A4b,
    A4c,
    A4d,
    A5a,
    A5b,
    A5c,
    A5d,
    U1,
    U2,
    U3,
    P5a,
    P5b,
    P5c,
    P5d,
}

impl LocalRule {
    pub const ALL: [LocalRule; 17] = [
        LocalRule::Ta,
        LocalRule::Tb,
        LocalRule::A4a,
        LocalRule::A4b,
        LocalRule::A4c,
        LocalRule::A4d,
        LocalRule::A5a,
        LocalRule::A5b,
        LocalRule::A5c,
        LocalRule::A5d,
        LocalRule::U1,
        LocalRule::U2,
        LocalRule::U3,
        LocalRule::P5a,
        LocalRule::P5b,
        LocalRule::P5c,
        LocalRule::P5d,
    ];

    pub fn id(self) -> &'static str {
        match self {
            LocalRule::Ta => "Ta",
            LocalRule::Tb => "Tb",
            LocalRule::A4a => "4a",
            LocalRule::A4b => "4b",
            LocalRule::A4c => "4c",
            LocalRule::A4d => "4d",
            LocalRule::A5a => "5a",
            LocalRule::A5b => "5b",
            LocalRule::A5c => "5c",
            LocalRule::A5d => "5d",
            LocalRule::U1 => "u1",
            LocalRule::U2 => "u2",
            LocalRule::U3 => "u3",
            LocalRule::P5a => "p5a",
            LocalRule::P5b => "p5b",
            LocalRule::P5c => "p5c",
            LocalRule::P5d => "p5d",
        }
    }

    /// Usable in the purely modal fragment: white principal, ∘-edges only.
    pub fn is_white(self) -> bool {
        matches!(self, LocalRule::Tb | LocalRule::A4c | LocalRule::A5b | LocalRule::U2)
    }

    /// Nodes that may receive a formula from the principal at `site`,
    /// paired with the formula they receive.
    pub fn targets(self, s: &Sequent, site: &FormulaAddress) -> Vec<(NodeAddress, Formula)> {
        let Some(f) = s.formula(site) else {
            return Vec::new();
        };
        let u = &site.node;
        let node = s.node(u).expect("site node exists");
        let up = s.polarity_of(u);
        let parent = u.parent();
        let children = |pol: Polarity| -> Vec<NodeAddress> {
            node.children
                .iter()
                .enumerate()
                .filter(|(_, (p, _))| *p == pol)
                .map(|(k, _)| u.child(k))
                .collect()
        };
        let diamond = f.as_diamond();
        let white = matches!(diamond, Some((Diamond::White, _)));
        let black = matches!(diamond, Some((Diamond::Black, _)));
        let body = diamond.map(|(_, b)| b.clone());
        let with = |addrs: Vec<NodeAddress>, g: &Formula| addrs.into_iter().map(|a| (a, g.clone())).collect();
        let all_nodes = s.node_addresses();
        let circle_nodes: Vec<NodeAddress> = all_nodes
            .iter()
            .filter(|a| s.polarity_of(a) == Some(Polarity::Circle))
            .cloned()
            .collect();
        let has_bullet_child = |a: &NodeAddress| {
            s.node(a)
                .is_some_and(|n| n.children.iter().any(|(p, _)| *p == Polarity::Bullet))
        };
        let bullet_parents: Vec<NodeAddress> = all_nodes.iter().filter(|a| has_bullet_child(a)).cloned().collect();
        match self {
            LocalRule::Ta if black => with(vec![u.clone()], body.as_ref().unwrap()),
            LocalRule::Tb if white => with(vec![u.clone()], body.as_ref().unwrap()),
            LocalRule::A4a if black => with(children(Polarity::Bullet), f),
            LocalRule::A4b if black && up == Some(Polarity::Circle) => with(parent.into_iter().collect(), f),
            LocalRule::A4c if white => with(children(Polarity::Circle), f),
            LocalRule::A4d if white && up == Some(Polarity::Bullet) => with(parent.into_iter().collect(), f),
            LocalRule::A5a if black => with(children(Polarity::Circle), f),
            LocalRule::A5b if white && up == Some(Polarity::Circle) => with(parent.into_iter().collect(), f),
            LocalRule::A5c if white => with(children(Polarity::Bullet), f),
            LocalRule::A5d if black && up == Some(Polarity::Bullet) => with(parent.into_iter().collect(), f),
            LocalRule::U1 => {
                let mut out = Vec::new();
                for v in children(Polarity::Bullet) {
                    let vn = s.node(&v).expect("child exists");
                    for (k, (p, _)) in vn.children.iter().enumerate() {
                        if *p == Polarity::Circle {
                            out.push((v.child(k), f.clone()));
                        }
                    }
                }
                out
            }
            LocalRule::U2 if up == Some(Polarity::Circle) => {
                let p = parent.expect("non-root");
                let pn = s.node(&p).expect("parent exists");
                pn.children
                    .iter()
                    .enumerate()
                    .filter(|(k, (pol, _))| *pol == Polarity::Circle && p.child(*k) != *u)
                    .map(|(k, _)| (p.child(k), f.clone()))
                    .collect()
            }
            LocalRule::U3 if up == Some(Polarity::Circle) => {
                let v = parent.expect("non-root");
                if s.polarity_of(&v) == Some(Polarity::Bullet) {
                    vec![(v.parent().expect("non-root"), f.clone())]
                } else {
                    Vec::new()
                }
            }
            LocalRule::P5a if white && up == Some(Polarity::Circle) => with(circle_nodes, body.as_ref().unwrap()),
            LocalRule::P5b if white && up == Some(Polarity::Circle) => with(bullet_parents, body.as_ref().unwrap()),
            LocalRule::P5c if white && has_bullet_child(u) => with(circle_nodes, body.as_ref().unwrap()),
            LocalRule::P5d if white && has_bullet_child(u) => with(bullet_parents, body.as_ref().unwrap()),
            _ => Vec::new(),
        }
    }
}

impl fmt::Display for LocalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for LocalRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LocalRule::ALL
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| format!("unknown local rule {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeepRule {
    Id,
    And,
    Or,
    BBox,
    BDia1,
    BDia2,
    Box,
    Dia1,
    Dia2,
    Local(LocalRule),
    PathProp,
}

impl DeepRule {
    pub fn name(self) -> String {
        match self {
            DeepRule::Id => "id".into(),
            DeepRule::And => "and".into(),
            DeepRule::Or => "or".into(),
            DeepRule::BBox => "bbox".into(),
            DeepRule::BDia1 => "bdia1".into(),
            DeepRule::BDia2 => "bdia2".into(),
            DeepRule::Box => "box".into(),
            DeepRule::Dia1 => "dia1".into(),
            DeepRule::Dia2 => "dia2".into(),
            DeepRule::Local(r) => format!("local:{}", r.id()),
            DeepRule::PathProp => "pathprop".into(),
        }
    }

    pub fn from_name(s: &str) -> Option<DeepRule> {
        Some(match s {
            "id" => DeepRule::Id,
            "and" => DeepRule::And,
            "or" => DeepRule::Or,
            "bbox" => DeepRule::BBox,
            "bdia1" => DeepRule::BDia1,
            "bdia2" => DeepRule::BDia2,
            "box" => DeepRule::Box,
            "dia1" => DeepRule::Dia1,
            "dia2" => DeepRule::Dia2,
            "pathprop" => DeepRule::PathProp,
            _ => DeepRule::Local(s.strip_prefix("local:")?.parse().ok()?),
        })
    }

    /// Rules that move a formula to a target node.
    pub fn is_propagation(self) -> bool {
        matches!(
            self,
            DeepRule::BDia1
                | DeepRule::BDia2
                | DeepRule::Dia1
                | DeepRule::Dia2
                | DeepRule::Local(_)
                | DeepRule::PathProp
        )
    }
}

/// One deep rule application. `site` is the principal formula; for `id` it
/// is the positive atom and `partner` indexes `ā` in the same node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeepRuleInstance {
    pub rule: DeepRule,
    pub site: FormulaAddress,
    pub partner: Option<usize>,
    pub target: Option<NodeAddress>,
    pub witness: Option<Vec<Diamond>>,
}

impl DeepRuleInstance {
    pub fn at(rule: DeepRule, site: FormulaAddress) -> Self {
        DeepRuleInstance {
            rule,
            site,
            partner: None,
            target: None,
            witness: None,
        }
    }

    pub fn id(site: FormulaAddress, partner: usize) -> Self {
        DeepRuleInstance {
            partner: Some(partner),
            ..Self::at(DeepRule::Id, site)
        }
    }

    pub fn propagate(rule: DeepRule, site: FormulaAddress, target: NodeAddress) -> Self {
        DeepRuleInstance {
            target: Some(target),
            ..Self::at(rule, site)
        }
    }
}

/// What a premise adds to the conclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Append {
    Formula(NodeAddress, Formula),
    Child(NodeAddress, Polarity, Formula),
}

impl Append {
    pub fn apply(&self, s: &mut Sequent) {
        match self {
            Append::Formula(a, f) => s.node_mut(a).expect("valid append").formulas.push(f.clone()),
            Append::Child(a, p, f) => s
                .node_mut(a)
                .expect("valid append")
                .children
                .push((*p, Sequent::from_formulas([f.clone()]))),
        }
    }

    pub fn node(&self) -> &NodeAddress {
        match self {
            Append::Formula(a, _) | Append::Child(a, _, _) => a,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeepSystem {
    pub name: String,
    pub locals: BTreeSet<LocalRule>,
    pub path_axioms: Option<Vec<PathAxiom>>,
    pub modal_only: bool,
}

impl DeepSystem {
    fn with(name: &str, locals: &[LocalRule], modal_only: bool) -> DeepSystem {
        DeepSystem {
            name: name.to_string(),
            locals: locals.iter().copied().collect(),
            path_axioms: None,
            modal_only,
        }
    }

    pub fn dkt() -> DeepSystem {
        Self::with("DKt", &[], false)
    }

    pub fn dk() -> DeepSystem {
        Self::with("DK", &[], true)
    }

    pub fn ds4() -> DeepSystem {
        use LocalRule::*;
        Self::with("DS4", &[Ta, Tb, A4a, A4b, A4c, A4d], false)
    }

    pub fn dks4() -> DeepSystem {
        Self::with("DKS4", &[LocalRule::Tb, LocalRule::A4c], true)
    }

    pub fn ds5() -> DeepSystem {
        use LocalRule::*;
        Self::with("DS5", &[Ta, Tb, A4a, A4b, A4c, A4d, A5a, A5b, A5c, A5d], false)
    }

    pub fn dks5() -> DeepSystem {
        Self::with("DKS5", &[LocalRule::Tb, LocalRule::A4c, LocalRule::A5b], true)
    }

    pub fn dktu() -> DeepSystem {
        use LocalRule::*;
        Self::with("DKtU", &[U1, U2, U3], false)
    }

    pub fn dku() -> DeepSystem {
        Self::with("DKU", &[LocalRule::U2], true)
    }

    /// DKt plus the propagation rules of a path-axiom set.
    pub fn path(axioms: Vec<PathAxiom>) -> DeepSystem {
        let names: Vec<String> = axioms.iter().map(|a| a.to_string()).collect();
        DeepSystem {
            name: format!("DKt+{{{}}}", names.join(", ")),
            locals: BTreeSet::new(),
            path_axioms: Some(axioms),
            modal_only: false,
        }
    }

    pub fn allows(&self, rule: DeepRule) -> bool {
        match rule {
            DeepRule::Local(l) => self.locals.contains(&l) && (!self.modal_only || l.is_white()),
            DeepRule::PathProp => self.path_axioms.is_some(),
            DeepRule::BBox | DeepRule::BDia1 | DeepRule::BDia2 | DeepRule::Dia2 => !self.modal_only,
            DeepRule::Id | DeepRule::And | DeepRule::Or | DeepRule::Box | DeepRule::Dia1 => true,
        }
    }
}

fn schema(msg: String) -> CheckErrorKind {
    CheckErrorKind::WrongPrincipal(msg)
}

/// The appends of each premise, or why the instance does not apply.
/// Path witnesses are only validated when an oracle is given.
pub fn instance_appends(
    s: &Sequent,
    inst: &DeepRuleInstance,
    oracle: Option<&PathOracle>,
) -> Result<Vec<Vec<Append>>, CheckErrorKind> {
    let f = s
        .formula(&inst.site)
        .ok_or_else(|| CheckErrorKind::BadParam(format!("no formula at {}", inst.site)))?
        .clone();
    let u = inst.site.node.clone();
    let add = |a: &NodeAddress, g: Formula| Append::Formula(a.clone(), g);
    let target = || {
        inst.target
            .clone()
            .ok_or_else(|| CheckErrorKind::BadParam("missing target".into()))
    };
    let name = inst.rule.name();
    let wrong = || schema(format!("{name} does not apply to {f} at {}", inst.site.node));
    match inst.rule {
        DeepRule::Id => {
            let node = s.node(&u).expect("site node exists");
            let other = inst
                .partner
                .and_then(|i| node.formulas.get(i))
                .ok_or_else(|| CheckErrorKind::BadParam("missing id partner".into()))?;
            match (&f, other) {
                (Formula::Atom(a), Formula::NegAtom(b)) if a == b => Ok(vec![]),
                _ => Err(CheckErrorKind::NoClash),
            }
        }
        DeepRule::And => match &f {
            Formula::And(a, b) => Ok(vec![vec![add(&u, (**a).clone())], vec![add(&u, (**b).clone())]]),
            _ => Err(wrong()),
        },
        DeepRule::Or => match &f {
            Formula::Or(a, b) => Ok(vec![vec![add(&u, (**a).clone()), add(&u, (**b).clone())]]),
            _ => Err(wrong()),
        },
        DeepRule::Box | DeepRule::BBox => match (&f, inst.rule) {
            (Formula::Box(a), DeepRule::Box) => Ok(vec![vec![Append::Child(u, Polarity::Circle, (**a).clone())]]),
            (Formula::BlackBox(a), DeepRule::BBox) => Ok(vec![vec![Append::Child(u, Polarity::Bullet, (**a).clone())]]),
            _ => Err(wrong()),
        },
        DeepRule::Dia1 | DeepRule::Dia2 | DeepRule::BDia1 | DeepRule::BDia2 => {
            let (want, down) = match inst.rule {
                DeepRule::Dia1 => (Diamond::White, true),
                DeepRule::Dia2 => (Diamond::White, false),
                DeepRule::BDia1 => (Diamond::Black, true),
                _ => (Diamond::Black, false),
            };
            let body = match f.as_diamond() {
                Some((d, b)) if d == want => b.clone(),
                _ => return Err(wrong()),
            };
            let t = target()?;
            let edge_ok = if down {
                t.parent().as_ref() == Some(&u) && s.polarity_of(&t) == Some(Polarity::of_diamond(want))
            } else {
                u.parent().as_ref() == Some(&t) && s.polarity_of(&u) == Some(Polarity::of_diamond(want.inverse()))
            };
            if !edge_ok || s.node(&t).is_none() {
                return Err(schema(format!("{name} cannot reach {t} from {u}")));
            }
            Ok(vec![vec![add(&t, body)]])
        }
        DeepRule::Local(l) => {
            let t = target()?;
            let (_, g) = l
                .targets(s, &inst.site)
                .into_iter()
                .find(|(a, _)| *a == t)
                .ok_or_else(|| schema(format!("{name} cannot move {f} from {u} to {t}")))?;
            Ok(vec![vec![add(&t, g)]])
        }
        DeepRule::PathProp => {
            let (d, body) = f.as_diamond().ok_or_else(wrong)?;
            let t = target()?;
            let w = inst
                .witness
                .as_ref()
                .ok_or_else(|| CheckErrorKind::BadParam("pathprop needs a witness".into()))?;
            if oracle.is_some_and(|o| !o.witness_valid(s, &u, &t, d, w)) {
                return Err(CheckErrorKind::BadParam(format!(
                    "witness {} is not an admissible path from {u} to {t}",
                    crate::formula::diamonds_to_string(w)
                )));
            }
            Ok(vec![vec![add(&t, body.clone())]])
        }
    }
}

/// Premises of an instance as sequents.
pub fn instance_premises(
    s: &Sequent,
    inst: &DeepRuleInstance,
    oracle: Option<&PathOracle>,
) -> Result<Vec<Sequent>, CheckErrorKind> {
    Ok(instance_appends(s, inst, oracle)?
        .into_iter()
        .map(|apps| {
            let mut p = s.clone();
            for a in &apps {
                a.apply(&mut p);
            }
            p
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct DeepDerivation {
    pub conclusion: Sequent,
    pub instance: DeepRuleInstance,
    pub premises: Vec<DeepDerivation>,
}

impl DeepDerivation {
    pub fn new(conclusion: Sequent, instance: DeepRuleInstance, premises: Vec<DeepDerivation>) -> Self {
        DeepDerivation {
            conclusion,
            instance,
            premises,
        }
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(|p| p.height()).max().unwrap_or(0)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    pub fn for_each<'a>(&'a self, f: &mut impl FnMut(&'a DeepDerivation)) {
        f(self);
        for p in &self.premises {
            p.for_each(f);
        }
    }

    pub fn rule_inventory(&self) -> std::collections::BTreeMap<String, usize> {
        let mut out = std::collections::BTreeMap::new();
        self.for_each(&mut |d| *out.entry(d.instance.rule.name()).or_insert(0) += 1);
        out
    }

    pub fn to_json(&self) -> Value {
        let i = &self.instance;
        let mut params = vec![json!(i.site.to_string())];
        if let Some(p) = i.partner {
            params.push(json!(i.site.node.formula(p).to_string()));
        }
        if let Some(t) = &i.target {
            params.push(json!(t.to_string()));
        }
        let mut v = json!({
            "seq": self.conclusion.to_json(),
            "rule": i.rule.name(),
            "params": params,
            "prems": self.premises.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
        });
        if let Some(w) = &i.witness {
            v["witness"] = json!(w.iter().map(|d| d.code().to_string()).collect::<Vec<_>>());
        }
        v
    }

    pub fn from_json(v: &Value) -> Result<DeepDerivation, ProofJsonError> {
        let seq = Sequent::from_json(v.get("seq").ok_or(ProofJsonError::Missing("seq"))?)?;
        let name = v
            .get("rule")
            .and_then(Value::as_str)
            .ok_or(ProofJsonError::Missing("rule"))?;
        let rule = DeepRule::from_name(name).ok_or_else(|| ProofJsonError::UnknownRule(name.to_string()))?;
        let params: Vec<String> = v
            .get("params")
            .and_then(Value::as_array)
            .ok_or(ProofJsonError::Missing("params"))?
            .iter()
            .map(|p| {
                p.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| ProofJsonError::Params(name.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let bad = || ProofJsonError::Params(name.to_string());
        let site: FormulaAddress = params.first().ok_or_else(bad)?.parse()?;
        let mut inst = DeepRuleInstance::at(rule, site);
        if rule == DeepRule::Id {
            let other: FormulaAddress = params.get(1).ok_or_else(bad)?.parse()?;
            inst.partner = Some(other.index);
        } else if rule.is_propagation() {
            inst.target = Some(params.get(1).ok_or_else(bad)?.parse()?);
        }
        if let Some(w) = v.get("witness") {
            let codes: String = w
                .as_array()
                .ok_or_else(|| ProofJsonError::Witness("expected a list".into()))?
                .iter()
                .filter_map(Value::as_str)
                .collect();
            inst.witness = Some(parse_diamonds(&codes).map_err(|e| ProofJsonError::Witness(e.to_string()))?);
        }
        let premises = match v.get("prems") {
            Some(Value::Array(ps)) => ps.iter().map(DeepDerivation::from_json).collect::<Result<_, _>>()?,
            _ => Vec::new(),
        };
        Ok(DeepDerivation::new(seq, inst, premises))
    }
}

/// Checks a deep derivation against a system.
pub fn check_deep(d: &DeepDerivation, system: &DeepSystem) -> Result<(), CheckError> {
    let oracle = system.path_axioms.as_ref().map(|a| PathOracle::new(a));
    check_rec(d, system, oracle.as_ref(), &mut Vec::new())
}

fn check_rec(
    d: &DeepDerivation,
    system: &DeepSystem,
    oracle: Option<&PathOracle>,
    path: &mut Vec<usize>,
) -> Result<(), CheckError> {
    let rule = d.instance.rule;
    let fail = |kind: CheckErrorKind, path: &Vec<usize>| CheckError {
        path: path.clone(),
        rule: rule.name(),
        kind,
    };
    // Base propagation rules are instances of path propagation over the identity axioms.
    let base_prop = matches!(
        rule,
        DeepRule::Dia1 | DeepRule::Dia2 | DeepRule::BDia1 | DeepRule::BDia2
    );
    if !system.allows(rule) && !(base_prop && system.path_axioms.is_some() && !system.modal_only) {
        return Err(fail(CheckErrorKind::NotInSystem(rule.name()), path));
    }
    let expected = instance_premises(&d.conclusion, &d.instance, oracle).map_err(|k| fail(k, path))?;
    if expected.len() != d.premises.len() {
        return Err(fail(
            CheckErrorKind::Arity {
                expected: expected.len(),
                found: d.premises.len(),
            },
            path,
        ));
    }
    for (i, (want, got)) in expected.iter().zip(&d.premises).enumerate() {
        if *want != got.conclusion {
            return Err(fail(
                CheckErrorKind::PremiseMismatch {
                    index: i,
                    expected: want.to_string(),
                    found: got.conclusion.to_string(),
                },
                path,
            ));
        }
    }
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        check_rec(p, system, oracle, path)?;
        path.pop();
    }
    Ok(())
}

/// Search phase of an instance, in the order Prove tries them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Close,
    Saturate,
    Realise,
    Propagate,
}

pub fn phase(rule: DeepRule) -> Phase {
    match rule {
        DeepRule::Id => Phase::Close,
        DeepRule::And | DeepRule::Or => Phase::Saturate,
        DeepRule::Box | DeepRule::BBox => Phase::Realise,
        _ => Phase::Propagate,
    }
}

fn contains(s: &Sequent, a: &NodeAddress, f: &Formula) -> bool {
    s.node(a).is_some_and(|n| n.formulas.contains(f))
}

/// Candidate instances at one formula occurrence, after the redundancy filters.
fn instances_at(
    s: &Sequent,
    system: &DeepSystem,
    fa: &FormulaAddress,
    table: Option<&PropagationTable>,
    out: &mut Vec<DeepRuleInstance>,
) {
    let node = s.node(&fa.node).expect("listed node");
    let f = &node.formulas[fa.index];
    let u = &fa.node;
    match f {
        Formula::Atom(a) => {
            if let Some(j) = node
                .formulas
                .iter()
                .position(|g| matches!(g, Formula::NegAtom(b) if b == a))
            {
                out.push(DeepRuleInstance::id(fa.clone(), j));
            }
        }
        Formula::Or(a, b) => {
            if !node.formulas.contains(a) || !node.formulas.contains(b) {
                out.push(DeepRuleInstance::at(DeepRule::Or, fa.clone()));
            }
        }
        Formula::And(a, b) => {
            if !node.formulas.contains(a) && !node.formulas.contains(b) {
                out.push(DeepRuleInstance::at(DeepRule::And, fa.clone()));
            }
        }
        // Boxes always apply; realisation is the prover's concern.
        Formula::Box(_) | Formula::BlackBox(_) => {
            let rule = match f {
                Formula::Box(_) => DeepRule::Box,
                _ => DeepRule::BBox,
            };
            if system.allows(rule) {
                out.push(DeepRuleInstance::at(rule, fa.clone()));
            }
        }
        Formula::Dia(body) | Formula::BlackDia(body) => {
            let (d, _) = f.as_diamond().expect("diamond");
            if let (Some(table), Some(_)) = (table, &system.path_axioms) {
                let i = table.graph.index_of(u).expect("node in graph");
                for (j, t) in table.graph.nodes.iter().enumerate() {
                    if let Some(w) = table.witness(d, i, j) {
                        if !contains(s, t, body) {
                            out.push(DeepRuleInstance {
                                witness: Some(w.clone()),
                                ..DeepRuleInstance::propagate(DeepRule::PathProp, fa.clone(), t.clone())
                            });
                        }
                    }
                }
            } else {
                let (down_rule, up_rule) = match d {
                    Diamond::White => (DeepRule::Dia1, DeepRule::Dia2),
                    Diamond::Black => (DeepRule::BDia1, DeepRule::BDia2),
                };
                let down_pol = Polarity::of_diamond(d);
                for (k, (p, c)) in node.children.iter().enumerate() {
                    if *p == down_pol && !c.formulas.contains(body) && system.allows(down_rule) {
                        out.push(DeepRuleInstance::propagate(down_rule, fa.clone(), u.child(k)));
                    }
                }
                if s.polarity_of(u) == Some(down_pol.dual()) && system.allows(up_rule) {
                    let par = u.parent().expect("non-root");
                    if !contains(s, &par, body) {
                        out.push(DeepRuleInstance::propagate(up_rule, fa.clone(), par));
                    }
                }
            }
        }
        Formula::NegAtom(_) => {}
    }
    for l in &system.locals {
        if !system.allows(DeepRule::Local(*l)) {
            continue;
        }
        for (t, g) in l.targets(s, fa) {
            if !contains(s, &t, &g) {
                out.push(DeepRuleInstance::propagate(DeepRule::Local(*l), fa.clone(), t));
            }
        }
    }
}

/// All non-redundant bottom-up instances with their premises, ordered by
/// phase, then node (breadth-first), then formula index.
pub fn deep_rule_instances(s: &Sequent, system: &DeepSystem) -> Vec<(DeepRuleInstance, Vec<Sequent>)> {
    let oracle = system.path_axioms.as_ref().map(|a| PathOracle::new(a));
    instances_with(s, system, oracle.as_ref())
}

pub(crate) fn instances_with(
    s: &Sequent,
    system: &DeepSystem,
    oracle: Option<&PathOracle>,
) -> Vec<(DeepRuleInstance, Vec<Sequent>)> {
    let table = oracle.map(|o| o.table(s));
    let mut insts = Vec::new();
    for fa in s.formula_addresses() {
        instances_at(s, system, &fa, table.as_ref(), &mut insts);
    }
    let mut keyed: Vec<(Phase, usize, DeepRuleInstance)> = insts
        .into_iter()
        .enumerate()
        .map(|(n, i)| (phase(i.rule), n, i))
        .collect();
    keyed.sort_by_key(|(p, n, _)| (*p, *n));
    keyed
        .into_iter()
        .map(|(_, _, i)| {
            let prems = instance_premises(s, &i, oracle).expect("enumerated instances apply");
            (i, prems)
        })
        .collect()
}
