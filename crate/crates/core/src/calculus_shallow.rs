//! The shallow calculus SKt, linear structural rules and a derivation checker.

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::formula::{Diamond, Formula};
use crate::path_engine::PathAxiom;
use crate::sequent::{FormulaAddress, NodeAddress, Polarity, Sequent, SequentError};

/// A rule instance of SKt. Every parameter refers to the root of the
/// instance's conclusion, so the premises are a function of the conclusion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ShallowRule {
    /// `Γ, a, ā` with the positions of `a` and `ā`.
    Id {
        pos: usize,
        neg: usize,
    },
    /// Conclusion `Γ, Δ`; `left_*` select `Γ`, premises are `Γ, A` and `Δ, ¬A`.
    Cut {
        formula: Formula,
        left_formulas: Vec<usize>,
        left_children: Vec<usize>,
    },
    And {
        principal: usize,
    },
    Or {
        principal: usize,
    },
    Box {
        principal: usize,
    },
    BBox {
        principal: usize,
    },
    /// `Γ, ∘{Δ}, ◇A` from `Γ, ∘{Δ, A}`.
    Dia {
        principal: usize,
        child: usize,
    },
    /// `Γ, •{Δ}, ◆A` from `Γ, •{Δ, A}`.
    BDia {
        principal: usize,
        child: usize,
    },
    /// The selected part is duplicated in the premise.
    Ctr {
        formulas: Vec<usize>,
        children: Vec<usize>,
    },
    /// The selected part is absent from the premise.
    Wk {
        formulas: Vec<usize>,
        children: Vec<usize>,
    },
    /// `•{Γ}, Δ` from `Γ, ∘{Δ}`; `child` is the •-child holding `Γ`.
    Rf {
        child: usize,
    },
    /// `∘{Γ}, Δ` from `Γ, •{Δ}`; `child` is the ∘-child holding `Γ`.
    Rp {
        child: usize,
    },
    Structural {
        rule: String,
        binding: Vec<(String, Sequent)>,
    },
    /// An open leaf, accepted only by [`check_shallow_open`].
    Hyp,
}

impl ShallowRule {
    pub fn name(&self) -> String {
        match self {
            ShallowRule::Id { .. } => "id".into(),
            ShallowRule::Cut { .. } => "cut".into(),
            ShallowRule::And { .. } => "and".into(),
            ShallowRule::Or { .. } => "or".into(),
            ShallowRule::Box { .. } => "box".into(),
            ShallowRule::BBox { .. } => "bbox".into(),
            ShallowRule::Dia { .. } => "dia".into(),
            ShallowRule::BDia { .. } => "bdia".into(),
            ShallowRule::Ctr { .. } => "ctr".into(),
            ShallowRule::Wk { .. } => "wk".into(),
            ShallowRule::Rf { .. } => "rf".into(),
            ShallowRule::Rp { .. } => "rp".into(),
            ShallowRule::Structural { rule, .. } => format!("struct:{rule}"),
            ShallowRule::Hyp => "hyp".into(),
        }
    }

    /// Premises of this instance for the given conclusion.
    pub fn premises(&self, conclusion: &Sequent, system: &[StructuralRule]) -> Result<Vec<Sequent>, CheckErrorKind> {
        let fs = &conclusion.formulas;
        let formula = |i: usize| {
            fs.get(i)
                .cloned()
                .ok_or(CheckErrorKind::BadParam(format!("no formula {i} at the root")))
        };
        let child = |k: usize| {
            conclusion
                .children
                .get(k)
                .cloned()
                .ok_or(CheckErrorKind::BadParam(format!("no child {k} at the root")))
        };
        let replace = |i: usize, f: Formula| {
            let mut s = conclusion.clone();
            s.formulas[i] = f;
            s
        };
        match self {
            ShallowRule::Id { pos, neg } => {
                let (p, n) = (formula(*pos)?, formula(*neg)?);
                match (&p, &n) {
                    (Formula::Atom(a), Formula::NegAtom(b)) if a == b => Ok(vec![]),
                    _ => Err(CheckErrorKind::NoClash),
                }
            }
            ShallowRule::Cut {
                formula: a,
                left_formulas,
                left_children,
            } => {
                let (left, right) = split(conclusion, left_formulas, left_children)?;
                let mut left = left;
                left.formulas.push(a.clone());
                let mut right = right;
                right.formulas.push(a.negate());
                Ok(vec![left, right])
            }
            ShallowRule::And { principal } => match formula(*principal)? {
                Formula::And(a, b) => Ok(vec![replace(*principal, *a), replace(*principal, *b)]),
                f => Err(CheckErrorKind::WrongPrincipal(format!(
                    "and expects a conjunction, found {f}"
                ))),
            },
            ShallowRule::Or { principal } => match formula(*principal)? {
                Formula::Or(a, b) => {
                    let mut s = replace(*principal, *a);
                    s.formulas.push(*b);
                    Ok(vec![s])
                }
                f => Err(CheckErrorKind::WrongPrincipal(format!(
                    "or expects a disjunction, found {f}"
                ))),
            },
            ShallowRule::Box { principal } | ShallowRule::BBox { principal } => {
                let (pol, body) = match (self, formula(*principal)?) {
                    (ShallowRule::Box { .. }, Formula::Box(a)) => (Polarity::Circle, *a),
                    (ShallowRule::BBox { .. }, Formula::BlackBox(a)) => (Polarity::Bullet, *a),
                    (_, f) => {
                        return Err(CheckErrorKind::WrongPrincipal(format!(
                            "{} does not apply to {f}",
                            self.name()
                        )))
                    }
                };
                let mut s = conclusion.clone();
                s.formulas.remove(*principal);
                s.children.push((pol, Sequent::from_formulas([body])));
                Ok(vec![s])
            }
            ShallowRule::Dia { principal, child: k } | ShallowRule::BDia { principal, child: k } => {
                let want = match self {
                    ShallowRule::Dia { .. } => Diamond::White,
                    _ => Diamond::Black,
                };
                let f = formula(*principal)?;
                let body = match f.as_diamond() {
                    Some((d, body)) if d == want => body.clone(),
                    _ => {
                        return Err(CheckErrorKind::WrongPrincipal(format!(
                            "{} does not apply to {f}",
                            self.name()
                        )))
                    }
                };
                let (pol, _) = child(*k)?;
                if pol != Polarity::of_diamond(want) {
                    return Err(CheckErrorKind::WrongPrincipal(format!(
                        "{} needs a {}-child",
                        self.name(),
                        Polarity::of_diamond(want).code()
                    )));
                }
                let mut s = conclusion.clone();
                s.formulas.remove(*principal);
                s.children[*k].1.formulas.push(body);
                Ok(vec![s])
            }
            ShallowRule::Ctr { formulas, children } => {
                let (picked, _) = split(conclusion, formulas, children)?;
                Ok(vec![conclusion.clone().merge(&picked)])
            }
            ShallowRule::Wk { formulas, children } => {
                let (_, rest) = split(conclusion, formulas, children)?;
                Ok(vec![rest])
            }
            ShallowRule::Rf { child: k } | ShallowRule::Rp { child: k } => {
                let (want, put) = match self {
                    ShallowRule::Rf { .. } => (Polarity::Bullet, Polarity::Circle),
                    _ => (Polarity::Circle, Polarity::Bullet),
                };
                let (pol, inner) = child(*k)?;
                if pol != want {
                    return Err(CheckErrorKind::WrongPrincipal(format!(
                        "{} needs a {}-child at position {k}",
                        self.name(),
                        want.code()
                    )));
                }
                let mut rest = conclusion.clone();
                rest.children.remove(*k);
                Ok(vec![inner.with_child(put, rest)])
            }
            ShallowRule::Structural { rule, binding } => {
                let r = system
                    .iter()
                    .find(|r| &r.id == rule)
                    .ok_or_else(|| CheckErrorKind::NotInSystem(self.name()))?;
                let concl = r.conclusion.instantiate(binding)?;
                if concl.0 != *conclusion {
                    return Err(CheckErrorKind::PatternMismatch(format!(
                        "conclusion is not an instance of {}: expected {}",
                        rule, concl.0
                    )));
                }
                Ok(vec![r.premise.instantiate(binding)?.0])
            }
            ShallowRule::Hyp => Ok(vec![]),
        }
    }

    fn params_json(&self) -> Value {
        match self {
            ShallowRule::Id { pos, neg } => json!([pos, neg]),
            ShallowRule::Cut {
                formula,
                left_formulas,
                left_children,
            } => json!([formula.to_string(), left_formulas, left_children]),
            ShallowRule::And { principal }
            | ShallowRule::Or { principal }
            | ShallowRule::Box { principal }
            | ShallowRule::BBox { principal } => json!([principal]),
            ShallowRule::Dia { principal, child } | ShallowRule::BDia { principal, child } => {
                json!([principal, child])
            }
            ShallowRule::Ctr { formulas, children } | ShallowRule::Wk { formulas, children } => {
                json!([formulas, children])
            }
            ShallowRule::Rf { child } | ShallowRule::Rp { child } => json!([child]),
            ShallowRule::Structural { binding, .. } => Value::Array(
                binding
                    .iter()
                    .map(|(v, s)| json!({"var": v, "seq": s.to_json()}))
                    .collect(),
            ),
            ShallowRule::Hyp => json!([]),
        }
    }

    fn from_json(name: &str, params: &Value) -> Result<ShallowRule, ProofJsonError> {
        let bad = || ProofJsonError::Params(name.to_string());
        let arr = params.as_array().cloned().unwrap_or_default();
        let num = |i: usize| -> Result<usize, ProofJsonError> {
            arr.get(i).and_then(Value::as_u64).map(|n| n as usize).ok_or_else(bad)
        };
        let list = |i: usize| -> Result<Vec<usize>, ProofJsonError> {
            arr.get(i)
                .and_then(Value::as_array)
                .ok_or_else(bad)?
                .iter()
                .map(|v| v.as_u64().map(|n| n as usize).ok_or_else(bad))
                .collect()
        };
        Ok(match name {
            "id" => ShallowRule::Id {
                pos: num(0)?,
                neg: num(1)?,
            },
            "cut" => ShallowRule::Cut {
                formula: arr
                    .first()
                    .and_then(Value::as_str)
                    .ok_or_else(bad)?
                    .parse()
                    .map_err(|e| ProofJsonError::Sequent(SequentError::Parse(e)))?,
                left_formulas: list(1)?,
                left_children: list(2)?,
            },
            "and" => ShallowRule::And { principal: num(0)? },
            "or" => ShallowRule::Or { principal: num(0)? },
            "box" => ShallowRule::Box { principal: num(0)? },
            "bbox" => ShallowRule::BBox { principal: num(0)? },
            "dia" => ShallowRule::Dia {
                principal: num(0)?,
                child: num(1)?,
            },
            "bdia" => ShallowRule::BDia {
                principal: num(0)?,
                child: num(1)?,
            },
            "ctr" => ShallowRule::Ctr {
                formulas: list(0)?,
                children: list(1)?,
            },
            "wk" => ShallowRule::Wk {
                formulas: list(0)?,
                children: list(1)?,
            },
            "rf" => ShallowRule::Rf { child: num(0)? },
            "rp" => ShallowRule::Rp { child: num(0)? },
            "hyp" => ShallowRule::Hyp,
            other => match other.strip_prefix("struct:") {
                Some(id) => {
                    let mut binding = Vec::new();
                    for b in &arr {
                        let var = b.get("var").and_then(Value::as_str).ok_or_else(bad)?;
                        let seq = Sequent::from_json(b.get("seq").ok_or_else(bad)?)?;
                        binding.push((var.to_string(), seq));
                    }
                    ShallowRule::Structural {
                        rule: id.to_string(),
                        binding,
                    }
                }
                None => return Err(ProofJsonError::UnknownRule(other.to_string())),
            },
        })
    }
}

/// Splits the root of `s` into the selected part and the rest.
pub(crate) fn split(s: &Sequent, formulas: &[usize], children: &[usize]) -> Result<(Sequent, Sequent), CheckErrorKind> {
    let mut picked = Sequent::new();
    let mut seen_f = vec![false; s.formulas.len()];
    for &i in formulas {
        match seen_f.get_mut(i) {
            Some(seen) if !*seen => *seen = true,
            _ => return Err(CheckErrorKind::BadParam(format!("bad formula selection {i}"))),
        }
        picked.formulas.push(s.formulas[i].clone());
    }
    let mut seen_c = vec![false; s.children.len()];
    for &k in children {
        match seen_c.get_mut(k) {
            Some(seen) if !*seen => *seen = true,
            _ => return Err(CheckErrorKind::BadParam(format!("bad child selection {k}"))),
        }
        picked.children.push(s.children[k].clone());
    }
    let rest = Sequent {
        formulas: s
            .formulas
            .iter()
            .zip(&seen_f)
            .filter(|(_, &x)| !x)
            .map(|(f, _)| f.clone())
            .collect(),
        children: s
            .children
            .iter()
            .zip(&seen_c)
            .filter(|(_, &x)| !x)
            .map(|(c, _)| c.clone())
            .collect(),
    };
    Ok((picked, rest))
}

#[derive(Debug, Clone)]
pub struct ShallowDerivation {
    pub conclusion: Sequent,
    pub rule: ShallowRule,
    pub premises: Vec<ShallowDerivation>,
}

impl ShallowDerivation {
    pub fn new(conclusion: Sequent, rule: ShallowRule, premises: Vec<ShallowDerivation>) -> Self {
        ShallowDerivation {
            conclusion,
            rule,
            premises,
        }
    }

    pub fn hyp(conclusion: Sequent) -> Self {
        ShallowDerivation::new(conclusion, ShallowRule::Hyp, vec![])
    }

    /// Number of rule applications on the longest branch.
    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(|p| p.height()).max().unwrap_or(0)
    }

    /// Largest cut-formula size, 0 when cut-free.
    pub fn cut_rank(&self) -> usize {
        let own = match &self.rule {
            ShallowRule::Cut { formula, .. } => formula.size(),
            _ => 0,
        };
        self.premises.iter().map(|p| p.cut_rank()).fold(own, usize::max)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(|p| p.size()).sum::<usize>()
    }

    pub fn count_rule(&self, name: &str) -> usize {
        let own = usize::from(self.rule.name() == name);
        own + self.premises.iter().map(|p| p.count_rule(name)).sum::<usize>()
    }

    /// Rule names with multiplicity.
    pub fn rule_inventory(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.for_each(&mut |d| *out.entry(d.rule.name()).or_insert(0) += 1);
        out
    }

    pub fn for_each<'a>(&'a self, f: &mut impl FnMut(&'a ShallowDerivation)) {
        f(self);
        for p in &self.premises {
            p.for_each(f);
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "seq": self.conclusion.to_json(),
            "rule": self.rule.name(),
            "params": self.rule.params_json(),
            "prems": self.premises.iter().map(|p| p.to_json()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<ShallowDerivation, ProofJsonError> {
        let seq = Sequent::from_json(v.get("seq").ok_or(ProofJsonError::Missing("seq"))?)?;
        let name = v
            .get("rule")
            .and_then(Value::as_str)
            .ok_or(ProofJsonError::Missing("rule"))?;
        let rule = ShallowRule::from_json(name, v.get("params").unwrap_or(&json!([])))?;
        let premises = match v.get("prems") {
            Some(Value::Array(ps)) => ps.iter().map(ShallowDerivation::from_json).collect::<Result<_, _>>()?,
            Some(_) => return Err(ProofJsonError::Missing("prems")),
            None => Vec::new(),
        };
        Ok(ShallowDerivation::new(seq, rule, premises))
    }

    /// The open leaves of the derivation.
    pub fn hypotheses(&self) -> Vec<&Sequent> {
        let mut out = Vec::new();
        self.for_each(&mut |d| {
            if d.rule == ShallowRule::Hyp {
                out.push(&d.conclusion)
            }
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckErrorKind {
    #[error("no atomic clash")]
    NoClash,
    #[error("wrong principal formula: {0}")]
    WrongPrincipal(String),
    #[error("bad parameter: {0}")]
    BadParam(String),
    #[error("expected {expected} premises, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("premise {index} should be `{expected}` but is `{found}`")]
    PremiseMismatch {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),
    #[error("cut is not allowed")]
    CutDisallowed,
    #[error("rule {0} not in system")]
    NotInSystem(String),
    #[error("open leaf")]
    OpenLeaf,
}

/// A failed check, located by the premise indices leading to the bad node.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at node {path:?} ({rule}): {kind}")]
pub struct CheckError {
    pub path: Vec<usize>,
    pub rule: String,
    pub kind: CheckErrorKind,
}

#[derive(Debug, Error)]
pub enum ProofJsonError {
    #[error("missing or malformed field {0:?}")]
    Missing(&'static str),
    #[error("unknown rule {0:?}")]
    UnknownRule(String),
    #[error("bad params for rule {0}")]
    Params(String),
    #[error("bad witness: {0}")]
    Witness(String),
    #[error(transparent)]
    Sequent(#[from] SequentError),
}

/// Checks a closed derivation in SKt extended with `system`.
pub fn check_shallow(d: &ShallowDerivation, system: &[StructuralRule], allow_cut: bool) -> Result<(), CheckError> {
    check_rec(d, system, allow_cut, false, &mut Vec::new())
}

/// Like [`check_shallow`] but accepts `hyp` leaves.
pub fn check_shallow_open(d: &ShallowDerivation, system: &[StructuralRule], allow_cut: bool) -> Result<(), CheckError> {
    check_rec(d, system, allow_cut, true, &mut Vec::new())
}

fn check_rec(
    d: &ShallowDerivation,
    system: &[StructuralRule],
    allow_cut: bool,
    allow_hyp: bool,
    path: &mut Vec<usize>,
) -> Result<(), CheckError> {
    let fail = |kind: CheckErrorKind, path: &Vec<usize>| CheckError {
        path: path.clone(),
        rule: d.rule.name(),
        kind,
    };
    match d.rule {
        ShallowRule::Cut { .. } if !allow_cut => return Err(fail(CheckErrorKind::CutDisallowed, path)),
        ShallowRule::Hyp if !allow_hyp => return Err(fail(CheckErrorKind::OpenLeaf, path)),
        _ => {}
    }
    let expected = d.rule.premises(&d.conclusion, system).map_err(|k| fail(k, path))?;
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
        check_rec(p, system, allow_cut, allow_hyp, path)?;
        path.pop();
    }
    Ok(())
}

/// A structure pattern: variables and nested skeleton children, no formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub vars: Vec<String>,
    pub children: Vec<(Polarity, Pattern)>,
}

/// Where a variable's root content lands in an instantiated pattern.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub node: NodeAddress,
    pub formula_offset: usize,
    pub child_offset: usize,
}

impl Pattern {
    pub fn var(name: &str) -> Pattern {
        Pattern {
            vars: vec![name.to_string()],
            children: Vec::new(),
        }
    }

    /// Wraps `self` in nested connectives, outermost first.
    pub fn nest(self, pols: &[Polarity]) -> Pattern {
        pols.iter().rev().fold(self, |inner, &p| Pattern {
            vars: Vec::new(),
            children: vec![(p, inner)],
        })
    }

    /// Puts the variables of `self` and the children of `other` side by side.
    pub fn join(mut self, other: Pattern) -> Pattern {
        self.vars.extend(other.vars);
        self.children.extend(other.children);
        self
    }

    /// Variable occurrences with multiplicity.
    pub fn var_counts(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.count_into(&mut out);
        out
    }

    fn count_into(&self, out: &mut BTreeMap<String, usize>) {
        for v in &self.vars {
            *out.entry(v.clone()).or_insert(0) += 1;
        }
        for (_, c) in &self.children {
            c.count_into(out);
        }
    }

    /// Substitutes the binding; variables go first, then skeleton children.
    pub fn instantiate(
        &self,
        binding: &[(String, Sequent)],
    ) -> Result<(Sequent, BTreeMap<String, Placement>), CheckErrorKind> {
        let mut layout = BTreeMap::new();
        let s = self.inst_rec(binding, &NodeAddress::root(), &mut layout)?;
        Ok((s, layout))
    }

    fn inst_rec(
        &self,
        binding: &[(String, Sequent)],
        at: &NodeAddress,
        layout: &mut BTreeMap<String, Placement>,
    ) -> Result<Sequent, CheckErrorKind> {
        let mut node = Sequent::new();
        for v in &self.vars {
            let val = binding
                .iter()
                .find(|(n, _)| n == v)
                .map(|(_, s)| s)
                .ok_or_else(|| CheckErrorKind::PatternMismatch(format!("variable {v} is unbound")))?;
            layout.insert(
                v.clone(),
                Placement {
                    node: at.clone(),
                    formula_offset: node.formulas.len(),
                    child_offset: node.children.len(),
                },
            );
            node = node.merge(val);
        }
        for (p, c) in &self.children {
            let k = node.children.len();
            let inner = c.inst_rec(binding, &at.child(k), layout)?;
            node.children.push((*p, inner));
        }
        Ok(node)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.vars.clone();
        for (p, c) in &self.children {
            parts.push(format!("{}{{{}}}", p.code(), c));
        }
        f.write_str(&parts.join(", "))
    }
}

/// A structural rule given by premise and conclusion patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructuralRule {
    pub id: String,
    pub premise: Pattern,
    pub conclusion: Pattern,
}

pub const GAMMA: &str = "G";
pub const DELTA: &str = "D";

fn repeat(p: Polarity, n: usize) -> Vec<Polarity> {
    vec![p; n]
}

impl StructuralRule {
    /// Premise-to-conclusion correspondence of formula occurrences for a binding.
    pub fn occurrence_map(
        &self,
        binding: &[(String, Sequent)],
    ) -> Result<Vec<(FormulaAddress, FormulaAddress)>, CheckErrorKind> {
        let (_, lp) = self.premise.instantiate(binding)?;
        let (_, lc) = self.conclusion.instantiate(binding)?;
        let mut out = Vec::new();
        for (v, val) in binding {
            let (Some(p), Some(c)) = (lp.get(v), lc.get(v)) else {
                continue;
            };
            for fa in val.formula_addresses() {
                out.push((place(p, &fa), place(c, &fa)));
            }
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        format!("{}: {} / {}", self.id, self.premise, self.conclusion)
    }
}

/// Address of a variable-relative occurrence inside an instance.
pub(crate) fn place(p: &Placement, fa: &FormulaAddress) -> FormulaAddress {
    match fa.node.0.split_first() {
        None => p.node.formula(p.formula_offset + fa.index),
        Some((k, rest)) => {
            let mut path = p.node.0.clone();
            path.push(p.child_offset + k);
            path.extend_from_slice(rest);
            NodeAddress(path).formula(fa.index)
        }
    }
}

/// sl(h,i,j,k): premise `Γ, ∘ⁱ{•ᵏ{Δ}}`, conclusion `Γ, •ʰ{∘ʲ{Δ}}`.
pub fn make_sl_rule(h: usize, i: usize, j: usize, k: usize) -> StructuralRule {
    let prem_path = [repeat(Polarity::Circle, i), repeat(Polarity::Bullet, k)].concat();
    let concl_path = [repeat(Polarity::Bullet, h), repeat(Polarity::Circle, j)].concat();
    StructuralRule {
        id: format!("sl{h}{i}{j}{k}"),
        premise: Pattern::var(GAMMA).join(Pattern::var(DELTA).nest(&prem_path)),
        conclusion: Pattern::var(GAMMA).join(Pattern::var(DELTA).nest(&concl_path)),
    }
}

/// The rule for a path axiom: premise `Γ, ⋆{Δ}`, conclusion `Γ, ⋆₁{…⋆ₙ{Δ}}`.
pub fn make_path_rule(ax: &PathAxiom) -> StructuralRule {
    let concl_path: Vec<Polarity> = ax.sources.iter().map(|d| Polarity::of_diamond(*d)).collect();
    StructuralRule {
        id: format!("path_{}", ax.code_string().replace(' ', "")),
        premise: Pattern::var(GAMMA).join(Pattern::var(DELTA).nest(&[Polarity::of_diamond(ax.target)])),
        conclusion: Pattern::var(GAMMA).join(Pattern::var(DELTA).nest(&concl_path)),
    }
}

fn renamed(mut r: StructuralRule, id: &str) -> StructuralRule {
    r.id = id.to_string();
    r
}

/// Reflexivity: `Γ, Δ` from `Γ, ∘{Δ}`.
pub fn rule_t() -> StructuralRule {
    renamed(make_sl_rule(0, 1, 0, 0), "T")
}

/// Transitivity: `Γ, ∘{∘{Δ}}` from `Γ, ∘{Δ}`.
pub fn rule_4() -> StructuralRule {
    renamed(make_sl_rule(0, 1, 2, 0), "4")
}

/// Symmetry: `Γ, ∘{Δ}` from `Γ, •{Δ}`.
pub fn rule_b() -> StructuralRule {
    renamed(make_sl_rule(0, 0, 1, 1), "B")
}

/// Uniqueness of successors: `Γ, •{∘{Δ}}` from `Γ, Δ`.
pub fn rule_u() -> StructuralRule {
    renamed(make_sl_rule(1, 0, 1, 0), "U")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("variable {var} occurs {count} times in the {side}")]
    Repeated {
        var: String,
        side: &'static str,
        count: usize,
    },
    #[error("variable {0} is lost in the conclusion")]
    Lost(String),
    #[error("variable {0} is introduced in the conclusion")]
    Introduced(String),
}

/// Checks linearity; patterns carry no formulas, so substitution closure is structural.
pub fn validate_structural_rule(r: &StructuralRule) -> Result<(), Vec<RuleError>> {
    let prem = r.premise.var_counts();
    let concl = r.conclusion.var_counts();
    let mut errs = Vec::new();
    for (side, counts) in [("premise", &prem), ("conclusion", &concl)] {
        for (v, &n) in counts {
            if n > 1 {
                errs.push(RuleError::Repeated {
                    var: v.clone(),
                    side,
                    count: n,
                });
            }
        }
    }
    for v in prem.keys().filter(|v| !concl.contains_key(*v)) {
        errs.push(RuleError::Lost(v.clone()));
    }
    for v in concl.keys().filter(|v| !prem.contains_key(*v)) {
        errs.push(RuleError::Introduced(v.clone()));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// The primitive Scott-Lemmon axiom `◆ʰ◇ʲX → ◇ⁱ◆ᵏX`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveAxiom {
    pub lhs: Vec<Diamond>,
    pub rhs: Vec<Diamond>,
    /// Present when the right-hand side is a single diamond.
    pub path: Option<PathAxiom>,
}

pub fn primitive_of_scott_lemmon(h: usize, i: usize, j: usize, k: usize) -> PrimitiveAxiom {
    let lhs = [vec![Diamond::Black; h], vec![Diamond::White; j]].concat();
    let rhs = [vec![Diamond::White; i], vec![Diamond::Black; k]].concat();
    let path = (rhs.len() == 1).then(|| PathAxiom {
        sources: lhs.clone(),
        target: rhs[0],
    });
    PrimitiveAxiom { lhs, rhs, path }
}

/// Upward construction helpers. Each returns the derivation of the given
/// conclusion whose single premise is `above`.
pub mod build {
    use super::*;

    /// Applies a one-premise rule and attaches `above`, checking the premise matches.
    pub fn step(
        conclusion: Sequent,
        rule: ShallowRule,
        above: ShallowDerivation,
    ) -> Result<ShallowDerivation, CheckErrorKind> {
        let prems = rule.premises(&conclusion, &[])?;
        if prems.len() != 1 || prems[0] != above.conclusion {
            return Err(CheckErrorKind::PremiseMismatch {
                index: 0,
                expected: prems.first().map(|p| p.to_string()).unwrap_or_default(),
                found: above.conclusion.to_string(),
            });
        }
        Ok(ShallowDerivation::new(conclusion, rule, vec![above]))
    }

    /// Single premise of a one-premise rule.
    pub fn up(conclusion: &Sequent, rule: &ShallowRule) -> Sequent {
        rule.premises(conclusion, &[])
            .expect("rule applies")
            .pop()
            .expect("one premise")
    }

    /// Derives `Γ, ⋆{Δ1, Δ2}` from `above ⊢ Γ, ⋆{Δ1}, ⋆{Δ2}` with rp, rf, ctr and wk.
    ///
    /// `conclusion.children[merged]` is `⋆{Δ1, Δ2}` whose first `n1f` formulas
    /// and `n1c` children form `Δ1`.
    pub fn merge_children(
        conclusion: &Sequent,
        merged: usize,
        n1f: usize,
        n1c: usize,
        above: ShallowDerivation,
    ) -> Result<ShallowDerivation, CheckErrorKind> {
        let (pol, inner) = conclusion.children[merged].clone();
        let (n2f, n2c) = (inner.formulas.len() - n1f, inner.children.len() - n1c);
        let into = |child| match pol {
            Polarity::Circle => ShallowRule::Rp { child },
            Polarity::Bullet => ShallowRule::Rf { child },
        };
        let out_of = |child| match pol {
            Polarity::Circle => ShallowRule::Rf { child },
            Polarity::Bullet => ShallowRule::Rp { child },
        };
        let n = conclusion.children.len();
        let rules = vec![
            ShallowRule::Ctr {
                formulas: vec![],
                children: vec![merged],
            },
            into(n),
            ShallowRule::Wk {
                formulas: (n1f..n1f + n2f).collect(),
                children: (n1c..n1c + n2c).collect(),
            },
            out_of(n1c),
            into(merged),
            ShallowRule::Wk {
                formulas: (0..n1f).collect(),
                children: (0..n1c).collect(),
            },
            out_of(n2c),
        ];
        chain(conclusion.clone(), rules, above)
    }

    /// Applies one-premise rules upward from `conclusion` and closes with `above`.
    pub fn chain(
        conclusion: Sequent,
        rules: Vec<ShallowRule>,
        above: ShallowDerivation,
    ) -> Result<ShallowDerivation, CheckErrorKind> {
        let mut seqs = vec![conclusion];
        for r in &rules {
            let next = r.premises(seqs.last().expect("nonempty"), &[])?;
            if next.len() != 1 {
                return Err(CheckErrorKind::Arity {
                    expected: 1,
                    found: next.len(),
                });
            }
            seqs.extend(next);
        }
        let top = seqs.pop().expect("nonempty");
        if top != above.conclusion {
            return Err(CheckErrorKind::PremiseMismatch {
                index: 0,
                expected: top.to_string(),
                found: above.conclusion.to_string(),
            });
        }
        let mut d = above;
        for (s, r) in seqs.into_iter().zip(rules).rev() {
            d = ShallowDerivation::new(s, r, vec![d]);
        }
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;

    fn seq(s: &str) -> Sequent {
        s.parse().unwrap()
    }

    fn node(s: &str, rule: ShallowRule, prems: Vec<ShallowDerivation>) -> ShallowDerivation {
        ShallowDerivation::new(seq(s), rule, prems)
    }

    #[test]
    fn residuation_axiom_derivation_checks() {
        // ¬a ∨ □◆a by ∨, □, rp, ◆, rf, id
        let d = node(
            "~a | []<*>a",
            ShallowRule::Or { principal: 0 },
            vec![node(
                "~a, []<*>a",
                ShallowRule::Box { principal: 1 },
                vec![node(
                    "~a, o{<*>a}",
                    ShallowRule::Rp { child: 0 },
                    vec![node(
                        "<*>a, b{~a}",
                        ShallowRule::BDia { principal: 0, child: 0 },
                        vec![node(
                            "b{~a, a}",
                            ShallowRule::Rf { child: 0 },
                            vec![node("~a, a, o{}", ShallowRule::Id { pos: 1, neg: 0 }, vec![])],
                        )],
                    )],
                )],
            )],
        );
        check_shallow(&d, &[], false).unwrap();
        assert_eq!(d.height(), 6);
        let back = ShallowDerivation::from_json(&d.to_json()).unwrap();
        check_shallow(&back, &[], false).unwrap();
        assert_eq!(back.to_json(), d.to_json());
    }

    #[test]
    fn id_without_clash_is_rejected() {
        let d = node("a, b", ShallowRule::Id { pos: 0, neg: 1 }, vec![]);
        let err = check_shallow(&d, &[], false).unwrap_err();
        assert_eq!(err.kind, CheckErrorKind::NoClash);
        assert_eq!(err.kind.to_string(), "no atomic clash");
    }

    #[test]
    fn cut_flag_is_enforced() {
        let d = node(
            "a, ~a",
            ShallowRule::Cut {
                formula: parse("b").unwrap(),
                left_formulas: vec![0],
                left_children: vec![],
            },
            vec![
                node("a, b", ShallowRule::Hyp, vec![]),
                node("~a, ~b", ShallowRule::Hyp, vec![]),
            ],
        );
        check_shallow_open(&d, &[], true).unwrap();
        assert_eq!(
            check_shallow_open(&d, &[], false).unwrap_err().kind,
            CheckErrorKind::CutDisallowed
        );
        assert_eq!(check_shallow(&d, &[], true).unwrap_err().kind, CheckErrorKind::OpenLeaf);
        assert_eq!(d.cut_rank(), 1);
    }

    #[test]
    fn wrong_premise_is_reported() {
        let d = node(
            "a & b",
            ShallowRule::And { principal: 0 },
            vec![node("a", ShallowRule::Hyp, vec![]), node("a", ShallowRule::Hyp, vec![])],
        );
        let err = check_shallow_open(&d, &[], false).unwrap_err();
        assert!(matches!(err.kind, CheckErrorKind::PremiseMismatch { index: 1, .. }));
        let d = node("a & b", ShallowRule::And { principal: 0 }, vec![]);
        assert!(matches!(
            check_shallow_open(&d, &[], false).unwrap_err().kind,
            CheckErrorKind::Arity { expected: 2, found: 0 }
        ));
    }

    #[test]
    fn sl_shapes() {
        let r = make_sl_rule(0, 1, 2, 0);
        assert_eq!(r.premise.to_string(), "G, o{D}");
        assert_eq!(r.conclusion.to_string(), "G, o{o{D}}");
        let r = make_sl_rule(0, 0, 0, 0);
        assert_eq!(r.premise.to_string(), "G, D");
        assert_eq!(r.conclusion.to_string(), "G, D");
        let r = make_sl_rule(1, 0, 1, 0);
        assert_eq!(r.premise.to_string(), "G, D");
        assert_eq!(r.conclusion.to_string(), "G, b{o{D}}");
        assert_eq!(rule_u().premise, r.premise);
    }

    #[test]
    fn path_rule_shapes() {
        let ax: PathAxiom = "wbw -> w".parse().unwrap();
        let r = make_path_rule(&ax);
        assert_eq!(r.premise.to_string(), "G, o{D}");
        assert_eq!(r.conclusion.to_string(), "G, o{b{o{D}}}");
        let four = make_path_rule(&"ww -> w".parse().unwrap());
        assert_eq!((four.premise, four.conclusion), (rule_4().premise, rule_4().conclusion));
        let t = make_path_rule(&"-> w".parse().unwrap());
        assert_eq!((t.premise, t.conclusion), (rule_t().premise, rule_t().conclusion));
    }

    #[test]
    fn linearity_validation() {
        validate_structural_rule(&make_sl_rule(1, 1, 1, 1)).unwrap();
        let dup = StructuralRule {
            id: "dup".into(),
            premise: Pattern::var(GAMMA)
                .join(Pattern::var(DELTA).nest(&[Polarity::Bullet]))
                .join(Pattern::var(DELTA)),
            conclusion: Pattern::var(GAMMA)
                .join(Pattern::var(DELTA).nest(&[Polarity::Circle]))
                .join(Pattern::var(DELTA)),
        };
        let errs = validate_structural_rule(&dup).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| e.to_string() == "variable D occurs 2 times in the premise"));
        let lost = StructuralRule {
            id: "lost".into(),
            premise: Pattern::var(GAMMA).join(Pattern::var(DELTA)),
            conclusion: Pattern::var(GAMMA),
        };
        assert_eq!(
            validate_structural_rule(&lost).unwrap_err(),
            vec![RuleError::Lost("D".into())]
        );
    }

    #[test]
    fn primitive_axioms() {
        let p = primitive_of_scott_lemmon(0, 1, 2, 0);
        assert_eq!(p.path.unwrap().to_string(), "ww -> w");
        let p = primitive_of_scott_lemmon(1, 0, 0, 1);
        assert_eq!(p.path.unwrap().to_string(), "b -> b");
        let p = primitive_of_scott_lemmon(0, 0, 1, 1);
        assert_eq!(p.path.unwrap().to_string(), "w -> b");
        assert!(primitive_of_scott_lemmon(0, 1, 0, 1).path.is_none());
    }

    #[test]
    fn structural_instance_checks_and_maps_occurrences() {
        let rule = rule_4();
        let binding = vec![(GAMMA.to_string(), seq("p")), (DELTA.to_string(), seq("q, o{r}"))];
        let d = node(
            "p, o{o{q, o{r}}}",
            ShallowRule::Structural {
                rule: "4".into(),
                binding: binding.clone(),
            },
            vec![node("p, o{q, o{r}}", ShallowRule::Hyp, vec![])],
        );
        check_shallow_open(&d, std::slice::from_ref(&rule), false).unwrap();
        assert!(matches!(
            check_shallow_open(&d, &[], false).unwrap_err().kind,
            CheckErrorKind::NotInSystem(_)
        ));
        let map = rule.occurrence_map(&binding).unwrap();
        assert_eq!(map.len(), 3);
        let prem = seq("p, o{q, o{r}}");
        let concl = seq("p, o{o{q, o{r}}}");
        for (a, b) in &map {
            assert_eq!(prem.formula(a), concl.formula(b));
        }
        let targets: std::collections::BTreeSet<_> = map.iter().map(|x| x.1.clone()).collect();
        assert_eq!(targets.len(), map.len());
    }

    #[test]
    fn merge_children_macro_checks() {
        for concl in ["g, o{a, b}", "g, b{a, o{c}, b}", "o{a, b}, x"] {
            let s = seq(concl);
            let merged = s.children.iter().position(|_| true).unwrap();
            let inner = &s.children[merged].1;
            let pol = s.children[merged].0;
            let (n1f, n1c) = (1, inner.children.len().min(1));
            let mut top = s.clone();
            let child = top.children.remove(merged).1;
            let d1 = Sequent {
                formulas: child.formulas[..n1f].to_vec(),
                children: child.children[..n1c].to_vec(),
            };
            let d2 = Sequent {
                formulas: child.formulas[n1f..].to_vec(),
                children: child.children[n1c..].to_vec(),
            };
            top.children.push((pol, d1));
            top.children.push((pol, d2));
            let d = build::merge_children(&s, merged, n1f, n1c, ShallowDerivation::hyp(top)).unwrap();
            check_shallow_open(&d, &[], false).unwrap();
            assert_eq!(d.count_rule("ctr"), 1);
        }
    }
}
