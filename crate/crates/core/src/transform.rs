//! Proof rewrites: admissible deep rules, translations between SKt and DKt,
//! and cut elimination for SKt with linear structural rules.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::calculus_deep::{instance_appends, Append, DeepDerivation, DeepRule, DeepRuleInstance, LocalRule};
use crate::calculus_shallow::{
    build, split, validate_structural_rule, CheckErrorKind, ShallowDerivation, ShallowRule, StructuralRule,
};
use crate::formula::{Diamond, Formula};
use crate::sequent::{iso, FormulaAddress, Iso, NodeAddress, Polarity, Sequent};

#[derive(Debug, Error)]
pub enum TransformError {
    #[error("invalid address {0}")]
    BadAddress(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("unsupported rule {0}")]
    Unsupported(String),
    #[error("structural rule {0} is not linear")]
    BadSystem(String),
    #[error(transparent)]
    Check(#[from] CheckErrorKind),
}

type Result<T> = std::result::Result<T, TransformError>;

fn shape(msg: impl Into<String>) -> TransformError {
    TransformError::Shape(msg.into())
}

// ---------------------------------------------------------------------------
// Deep rewrites by transport along structure-preserving maps.

/// A map from the nodes and formula occurrences of one sequent into another
/// that preserves labelled edges of the propagation graph and formulas.
#[derive(Debug, Clone, Default)]
struct Hom {
    nodes: BTreeMap<NodeAddress, NodeAddress>,
    formulas: BTreeMap<FormulaAddress, FormulaAddress>,
}

impl Hom {
    fn identity(s: &Sequent) -> Hom {
        let mut h = Hom::default();
        for a in s.node_addresses() {
            h.nodes.insert(a.clone(), a);
        }
        for fa in s.formula_addresses() {
            h.formulas.insert(fa.clone(), fa);
        }
        h
    }

    fn node(&self, a: &NodeAddress) -> Result<NodeAddress> {
        self.nodes
            .get(a)
            .cloned()
            .ok_or_else(|| TransformError::BadAddress(a.to_string()))
    }

    fn formula(&self, fa: &FormulaAddress) -> Result<FormulaAddress> {
        self.formulas
            .get(fa)
            .cloned()
            .ok_or_else(|| TransformError::BadAddress(fa.to_string()))
    }

    /// `self ∘ iso`, defined on the nodes and occurrences of `from`.
    fn after_iso(&self, iso: &Iso, from: &Sequent) -> Result<Hom> {
        let mut h = Hom::default();
        for a in from.node_addresses() {
            h.nodes.insert(a.clone(), self.node(&iso.map_node(&a))?);
        }
        for fa in from.formula_addresses() {
            h.formulas.insert(fa.clone(), self.formula(&iso.map_formula(&fa))?);
        }
        Ok(h)
    }
}

fn family(l: LocalRule) -> &'static [LocalRule] {
    use LocalRule::*;
    match l {
        Ta | Tb => &[Ta, Tb],
        A4a | A4b | A4c | A4d => &[A4a, A4b, A4c, A4d],
        A5a | A5b | A5c | A5d => &[A5a, A5b, A5c, A5d],
        U1 | U2 | U3 => &[U1, U2, U3],
        P5a | P5b | P5c | P5d => &[P5a, P5b, P5c, P5d],
    }
}

/// Re-expresses an instance in the image sequent, choosing the rule variant
/// that matches the image tree's orientation.
fn map_instance(new: &Sequent, inst: &DeepRuleInstance, s: &Sequent, h: &Hom) -> Result<DeepRuleInstance> {
    let site = h.formula(&inst.site)?;
    let partner = match inst.partner {
        Some(p) => Some(h.formula(&inst.site.node.formula(p))?.index),
        None => None,
    };
    let target = match &inst.target {
        Some(t) => Some(h.node(t)?),
        None => None,
    };
    let rule = match inst.rule {
        DeepRule::Dia1 | DeepRule::Dia2 | DeepRule::BDia1 | DeepRule::BDia2 => {
            let d = match inst.rule {
                DeepRule::Dia1 | DeepRule::Dia2 => Diamond::White,
                _ => Diamond::Black,
            };
            let t = target.as_ref().expect("propagation has a target");
            let u = &site.node;
            if t.parent().as_ref() == Some(u) && new.polarity_of(t) == Some(Polarity::of_diamond(d)) {
                if d == Diamond::White {
                    DeepRule::Dia1
                } else {
                    DeepRule::BDia1
                }
            } else if u.parent().as_ref() == Some(t) && new.polarity_of(u) == Some(Polarity::of_diamond(d.inverse())) {
                if d == Diamond::White {
                    DeepRule::Dia2
                } else {
                    DeepRule::BDia2
                }
            } else {
                return Err(shape(format!("no {} edge from {u} to {t}", d.symbol())));
            }
        }
        DeepRule::Local(l) => {
            let t = target.as_ref().expect("local rules have a target");
            let moved = l
                .targets(s, &inst.site)
                .into_iter()
                .find(|(a, _)| Some(a) == inst.target.as_ref())
                .map(|(_, g)| g)
                .ok_or_else(|| shape(format!("{l} does not reach the target")))?;
            let l2 = family(l)
                .iter()
                .copied()
                .find(|l2| l2.targets(new, &site).into_iter().any(|(a, g)| &a == t && g == moved))
                .ok_or_else(|| shape(format!("no rule of the {l} family fits the image")))?;
            DeepRule::Local(l2)
        }
        r => r,
    };
    Ok(DeepRuleInstance {
        rule,
        site,
        partner,
        target,
        witness: inst.witness.clone(),
    })
}

/// Applies premise appends to `s` and to its image, extending the map.
fn extend(s: &Sequent, new: &Sequent, apps: &[Append], h: &Hom) -> Result<(Sequent, Sequent, Hom)> {
    let mut p = s.clone();
    let mut q = new.clone();
    let mut h = h.clone();
    for a in apps {
        let n = a.node();
        let m = h.node(n)?;
        match a {
            Append::Formula(_, f) => {
                let i = p.node(n).expect("valid").formulas.len();
                let j = q.node(&m).expect("valid").formulas.len();
                h.formulas.insert(n.formula(i), m.formula(j));
                a.apply(&mut p);
                Append::Formula(m, f.clone()).apply(&mut q);
            }
            Append::Child(_, pol, f) => {
                let c = n.child(p.node(n).expect("valid").children.len());
                let d = m.child(q.node(&m).expect("valid").children.len());
                h.nodes.insert(c.clone(), d.clone());
                h.formulas.insert(c.formula(0), d.formula(0));
                a.apply(&mut p);
                Append::Child(m, *pol, f.clone()).apply(&mut q);
            }
        }
    }
    Ok((p, q, h))
}

/// Continues with `prem` whose conclusion equals `expected` up to layout.
fn follow(prem: &DeepDerivation, expected: &Sequent, new: Sequent, h: &Hom, contract: bool) -> Result<DeepDerivation> {
    let i = iso(&prem.conclusion, expected).ok_or_else(|| shape("premise does not match its rule"))?;
    let h = h.after_iso(&i, &prem.conclusion)?;
    transport(prem, new, &h, contract)
}

/// Rebuilds `d` over `new`, which receives `d.conclusion` through `h`.
/// With `contract`, steps whose effect is already present are dropped.
fn transport(d: &DeepDerivation, new: Sequent, h: &Hom, contract: bool) -> Result<DeepDerivation> {
    let s = &d.conclusion;
    let appends = instance_appends(s, &d.instance, None)?;
    if contract {
        for (j, apps) in appends.iter().enumerate() {
            let present = |a: &Append| -> Result<bool> {
                Ok(match a {
                    Append::Formula(n, f) => new.node(&h.node(n)?).is_some_and(|x| x.formulas.contains(f)),
                    Append::Child(..) => false,
                })
            };
            let mut all = !apps.is_empty();
            for a in apps {
                all &= present(a)?;
            }
            if all {
                let mut p = s.clone();
                let mut h2 = h.clone();
                for a in apps {
                    if let Append::Formula(n, f) = a {
                        let i = p.node(n).expect("valid").formulas.len();
                        let m = h.node(n)?;
                        let j = new
                            .node(&m)
                            .expect("valid")
                            .formulas
                            .iter()
                            .position(|g| g == f)
                            .expect("present");
                        h2.formulas.insert(n.formula(i), m.formula(j));
                        a.apply(&mut p);
                    }
                }
                return follow(&d.premises[j], &p, new, &h2, contract);
            }
        }
    }
    let inst = map_instance(&new, &d.instance, s, h)?;
    let mut premises = Vec::with_capacity(appends.len());
    for (apps, prem) in appends.iter().zip(&d.premises) {
        let (p, q, h2) = extend(s, &new, apps, h)?;
        premises.push(follow(prem, &p, q, &h2, contract)?);
    }
    Ok(DeepDerivation::new(new, inst, premises))
}

/// Deep weakening: adds `add` at node `addr`, keeping the height.
pub fn admissible_weaken(d: &DeepDerivation, addr: &NodeAddress, add: &Sequent) -> Result<DeepDerivation> {
    let mut new = d.conclusion.clone();
    let node = new
        .node_mut(addr)
        .ok_or_else(|| TransformError::BadAddress(addr.to_string()))?;
    node.formulas.extend(add.formulas.iter().cloned());
    node.children.extend(add.children.iter().cloned());
    transport(d, new, &Hom::identity(&d.conclusion), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Residuation {
    /// `Γ, •{Δ}` becomes `∘{Γ}, Δ`.
    Rp,
    /// `Γ, ∘{Δ}` becomes `•{Γ}, Δ`.
    Rf,
}

/// Re-roots `s` at child `k`; the old root becomes the last child.
fn rotate(s: &Sequent, k: usize) -> (Sequent, Hom) {
    let (pol, inner) = s.children[k].clone();
    let mut rest = s.clone();
    rest.children.remove(k);
    let m = inner.children.len();
    let new = inner.with_child(pol.dual(), rest);
    let map = |a: &NodeAddress| -> NodeAddress {
        match a.0.split_first() {
            Some((&j, tail)) if j == k => NodeAddress(tail.to_vec()),
            Some((&j, tail)) => {
                let mut p = vec![m, if j > k { j - 1 } else { j }];
                p.extend_from_slice(tail);
                NodeAddress(p)
            }
            None => NodeAddress(vec![m]),
        }
    };
    let mut h = Hom::default();
    for a in s.node_addresses() {
        h.nodes.insert(a.clone(), map(&a));
    }
    for fa in s.formula_addresses() {
        h.formulas.insert(fa.clone(), map(&fa.node).formula(fa.index));
    }
    (new, h)
}

/// Residuation at the root: the child `child` becomes the root.
pub fn admissible_residuate(d: &DeepDerivation, direction: Residuation, child: usize) -> Result<DeepDerivation> {
    let want = match direction {
        Residuation::Rp => Polarity::Bullet,
        Residuation::Rf => Polarity::Circle,
    };
    match d.conclusion.children.get(child) {
        Some((p, _)) if *p == want => {}
        _ => {
            return Err(shape(format!(
                "{direction:?} needs a {}-child at position {child}",
                want.code()
            )))
        }
    }
    let (new, h) = rotate(&d.conclusion, child);
    transport(d, new, &h, false)
}

/// Deep general contraction: `Σ[Δ, Δ]` at `addr` becomes `Σ[Δ]`.
pub fn admissible_contract(d: &DeepDerivation, addr: &NodeAddress, dup: &Sequent) -> Result<DeepDerivation> {
    let s = &d.conclusion;
    let node = s
        .node(addr)
        .ok_or_else(|| TransformError::BadAddress(addr.to_string()))?;
    // Pair up the two copies: first copy is the earliest match of each item.
    let mut used_f = vec![false; node.formulas.len()];
    let mut pick_f = |f: &Formula| -> Result<usize> {
        let i = (0..node.formulas.len())
            .find(|&i| !used_f[i] && node.formulas[i] == *f)
            .ok_or_else(|| shape(format!("{addr} lacks a second copy of {f}")))?;
        used_f[i] = true;
        Ok(i)
    };
    let first_f: Vec<usize> = dup.formulas.iter().map(&mut pick_f).collect::<Result<_>>()?;
    let second_f: Vec<usize> = dup.formulas.iter().map(&mut pick_f).collect::<Result<_>>()?;
    let keys: Vec<_> = node.children.iter().map(|(p, c)| (*p, c.canonical())).collect();
    let mut used_c = vec![false; node.children.len()];
    let mut pick_c = |(p, c): &(Polarity, Sequent)| -> Result<usize> {
        let key = (*p, c.canonical());
        let k = (0..keys.len())
            .find(|&k| !used_c[k] && keys[k] == key)
            .ok_or_else(|| shape(format!("{addr} lacks a second copy of a {}-child", p.code())))?;
        used_c[k] = true;
        Ok(k)
    };
    let first_c: Vec<usize> = dup.children.iter().map(&mut pick_c).collect::<Result<_>>()?;
    let second_c: Vec<usize> = dup.children.iter().map(&mut pick_c).collect::<Result<_>>()?;

    let removed_f: BTreeSet<usize> = second_f.iter().copied().collect();
    let removed_c: BTreeSet<usize> = second_c.iter().copied().collect();
    let shift_f = |i: usize| i - removed_f.range(..i).count();
    let shift_c = |k: usize| k - removed_c.range(..k).count();
    let mut new = s.clone();
    {
        let n = new.node_mut(addr).expect("checked");
        n.formulas = n
            .formulas
            .iter()
            .enumerate()
            .filter(|(i, _)| !removed_f.contains(i))
            .map(|(_, f)| f.clone())
            .collect();
        n.children = n
            .children
            .iter()
            .enumerate()
            .filter(|(k, _)| !removed_c.contains(k))
            .map(|(_, c)| c.clone())
            .collect();
    }
    // Second-copy children fold onto their first-copy partners.
    let mut redirect: BTreeMap<usize, (usize, Iso)> = BTreeMap::new();
    for (&k2, &k1) in second_c.iter().zip(&first_c) {
        let i = iso(&node.children[k2].1, &node.children[k1].1).expect("matched by key");
        redirect.insert(k2, (k1, i));
    }
    let d0 = addr.depth();
    let map_node = |a: &NodeAddress| -> NodeAddress {
        if !(addr.is_prefix_of(a) && a.depth() > d0) {
            return a.clone();
        }
        let k = a.0[d0];
        let tail = NodeAddress(a.0[d0 + 1..].to_vec());
        let (k, tail) = match redirect.get(&k) {
            Some((k1, i)) => (*k1, i.map_node(&tail)),
            None => (k, tail),
        };
        let mut p = addr.0.clone();
        p.push(shift_c(k));
        p.extend(tail.0);
        NodeAddress(p)
    };
    let mut h = Hom::default();
    for a in s.node_addresses() {
        h.nodes.insert(a.clone(), map_node(&a));
    }
    for fa in s.formula_addresses() {
        let to = if fa.node == *addr {
            let i = match second_f.iter().position(|&j| j == fa.index) {
                Some(t) => first_f[t],
                None => fa.index,
            };
            addr.formula(shift_f(i))
        } else if addr.is_prefix_of(&fa.node) {
            let k = fa.node.0[d0];
            let tail = NodeAddress(fa.node.0[d0 + 1..].to_vec()).formula(fa.index);
            let (k, tail) = match redirect.get(&k) {
                Some((k1, i)) => (*k1, i.map_formula(&tail)),
                None => (k, tail),
            };
            let mut p = addr.0.clone();
            p.push(shift_c(k));
            p.extend(tail.node.0);
            NodeAddress(p).formula(tail.index)
        } else {
            fa.clone()
        };
        h.formulas.insert(fa, to);
    }
    transport(d, new, &h, true)
}

// ---------------------------------------------------------------------------
// Translations.

/// Translates a cut-free proof of plain SKt into DKt.
pub fn translate_skt_to_dkt(d: &ShallowDerivation) -> Result<DeepDerivation> {
    let s = &d.conclusion;
    let root = NodeAddress::root();
    let prem = |i: usize| translate_skt_to_dkt(&d.premises[i]);
    let keep =
        |i: usize, p: DeepDerivation| admissible_weaken(&p, &root, &Sequent::from_formulas([s.formulas[i].clone()]));
    Ok(match &d.rule {
        ShallowRule::Id { pos, neg } => {
            DeepDerivation::new(s.clone(), DeepRuleInstance::id(root.formula(*pos), *neg), vec![])
        }
        ShallowRule::And { principal } => DeepDerivation::new(
            s.clone(),
            DeepRuleInstance::at(DeepRule::And, root.formula(*principal)),
            vec![keep(*principal, prem(0)?)?, keep(*principal, prem(1)?)?],
        ),
        ShallowRule::Or { principal } | ShallowRule::Box { principal } | ShallowRule::BBox { principal } => {
            let rule = match d.rule {
                ShallowRule::Or { .. } => DeepRule::Or,
                ShallowRule::Box { .. } => DeepRule::Box,
                _ => DeepRule::BBox,
            };
            DeepDerivation::new(
                s.clone(),
                DeepRuleInstance::at(rule, root.formula(*principal)),
                vec![keep(*principal, prem(0)?)?],
            )
        }
        ShallowRule::Dia { principal, child } | ShallowRule::BDia { principal, child } => {
            let rule = match d.rule {
                ShallowRule::Dia { .. } => DeepRule::Dia1,
                _ => DeepRule::BDia1,
            };
            DeepDerivation::new(
                s.clone(),
                DeepRuleInstance::propagate(rule, root.formula(*principal), root.child(*child)),
                vec![keep(*principal, prem(0)?)?],
            )
        }
        ShallowRule::Ctr { formulas, children } => {
            let (picked, _) = split(s, formulas, children)?;
            admissible_contract(&prem(0)?, &root, &picked)?
        }
        ShallowRule::Wk { formulas, children } => {
            let (picked, _) = split(s, formulas, children)?;
            admissible_weaken(&prem(0)?, &root, &picked)?
        }
        ShallowRule::Rf { .. } | ShallowRule::Rp { .. } => {
            // The premise keeps the displaced context in its last child.
            let expected = d.rule.premises(s, &[])?.remove(0);
            let p = prem(0)?;
            let i = iso(&expected, &p.conclusion).ok_or_else(|| shape("premise does not match rf/rp"))?;
            let k = i.children[expected.children.len() - 1].0;
            let dir = match d.rule {
                ShallowRule::Rf { .. } => Residuation::Rf,
                _ => Residuation::Rp,
            };
            admissible_residuate(&p, dir, k)?
        }
        r => return Err(TransformError::Unsupported(r.name())),
    })
}

/// Upward builder for chains of one-premise shallow steps.
struct Up {
    steps: Vec<(Sequent, ShallowRule)>,
    top: Sequent,
}

impl Up {
    fn new(s: Sequent) -> Up {
        Up {
            steps: Vec::new(),
            top: s,
        }
    }

    fn apply(&mut self, r: ShallowRule) -> Result<()> {
        let mut p = r.premises(&self.top, &[])?;
        if p.len() != 1 {
            return Err(shape(format!("{} is not a one-premise step", r.name())));
        }
        let next = p.remove(0);
        self.steps.push((std::mem::replace(&mut self.top, next), r));
        Ok(())
    }

    fn wrap(self, mut d: ShallowDerivation) -> ShallowDerivation {
        for (s, r) in self.steps.into_iter().rev() {
            d = ShallowDerivation::new(s, r, vec![d]);
        }
        d
    }

    fn close(self, rule: ShallowRule, premises: Vec<ShallowDerivation>) -> ShallowDerivation {
        let top = ShallowDerivation::new(self.top.clone(), rule, premises);
        self.wrap(top)
    }
}

/// Translates a DKt proof into a cut-free SKt proof of the same sequent.
pub fn translate_dkt_to_skt(d: &DeepDerivation) -> Result<ShallowDerivation> {
    let s = &d.conclusion;
    let inst = &d.instance;
    let u = &inst.site.node;
    let disp = s.display(u).map_err(|e| shape(e.to_string()))?;
    let mut up = Up::new(s.clone());
    for st in disp.steps_out {
        up.apply(st.rule)?;
    }
    let i = inst.site.index;
    if inst.rule == DeepRule::Id {
        let neg = inst.partner.ok_or_else(|| shape("id without partner"))?;
        return Ok(up.close(ShallowRule::Id { pos: i, neg }, vec![]));
    }
    // Retained principal: duplicate it, then let the shallow rule consume the copy.
    let dup = up.top.formulas.len();
    up.apply(ShallowRule::Ctr {
        formulas: vec![i],
        children: vec![],
    })?;
    let rule = match inst.rule {
        DeepRule::And => ShallowRule::And { principal: dup },
        DeepRule::Or => ShallowRule::Or { principal: dup },
        DeepRule::Box => ShallowRule::Box { principal: dup },
        DeepRule::BBox => ShallowRule::BBox { principal: dup },
        DeepRule::Dia1 | DeepRule::Dia2 | DeepRule::BDia1 | DeepRule::BDia2 => {
            let t = inst
                .target
                .as_ref()
                .ok_or_else(|| shape("propagation without target"))?;
            let child = if t.parent().as_ref() == Some(u) {
                *t.0.last().expect("child address")
            } else {
                up.top.children.len() - 1
            };
            match inst.rule {
                DeepRule::Dia1 | DeepRule::Dia2 => ShallowRule::Dia { principal: dup, child },
                _ => ShallowRule::BDia { principal: dup, child },
            }
        }
        r => return Err(TransformError::Unsupported(r.name())),
    };
    let appends = instance_appends(s, inst, None)?;
    let mut premises = Vec::new();
    for (apps, p) in appends.iter().zip(&d.premises) {
        let mut expected = s.clone();
        for a in apps {
            a.apply(&mut expected);
        }
        let back = expected.display(u).map_err(|e| shape(e.to_string()))?;
        let mut chain = Up::new(back.displayed);
        for st in back.steps_back {
            chain.apply(st.rule)?;
        }
        premises.push(chain.wrap(translate_dkt_to_skt(p)?));
    }
    Ok(up.close(rule, premises))
}

// ---------------------------------------------------------------------------
// Cut elimination.

fn marker() -> Formula {
    Formula::Atom("#".into())
}

/// Placement of substituted material in a rewritten sequent.
#[derive(Debug, Default)]
struct Layout {
    kept: BTreeMap<FormulaAddress, FormulaAddress>,
    groups: BTreeMap<FormulaAddress, (Vec<usize>, Vec<usize>)>,
}

/// Replaces each marked occurrence by the contents of `repl`. Node paths are
/// unchanged; inserted material goes after the node's own items.
fn subst_seq(s: &Sequent, marks: &BTreeSet<FormulaAddress>, repl: &Sequent) -> (Sequent, Layout) {
    let mut lay = Layout::default();
    let out = subst_node(s, &NodeAddress::root(), marks, repl, &mut lay);
    (out, lay)
}

fn subst_node(
    s: &Sequent,
    at: &NodeAddress,
    marks: &BTreeSet<FormulaAddress>,
    repl: &Sequent,
    lay: &mut Layout,
) -> Sequent {
    let mut out = Sequent::new();
    let mut here = Vec::new();
    for (i, f) in s.formulas.iter().enumerate() {
        let fa = at.formula(i);
        if marks.contains(&fa) {
            here.push(fa);
        } else {
            lay.kept.insert(fa, at.formula(out.formulas.len()));
            out.formulas.push(f.clone());
        }
    }
    for (k, (p, c)) in s.children.iter().enumerate() {
        out.children.push((*p, subst_node(c, &at.child(k), marks, repl, lay)));
    }
    for fa in here {
        let fs = (out.formulas.len()..out.formulas.len() + repl.formulas.len()).collect();
        let cs = (out.children.len()..out.children.len() + repl.children.len()).collect();
        lay.groups.insert(fa, (fs, cs));
        out = out.merge(repl);
    }
    out
}

fn replace_marked(s: &Sequent, marks: &BTreeSet<FormulaAddress>, with: &Formula) -> Sequent {
    let mut out = s.clone();
    for m in marks {
        out.node_mut(&m.node).expect("mark in range").formulas[m.index] = with.clone();
    }
    out
}

fn unmark(s: &Sequent, f: &Formula) -> Sequent {
    let mut out = s.clone();
    let m = marker();
    for a in s.node_addresses() {
        for g in out.node_mut(&a).expect("listed").formulas.iter_mut() {
            if *g == m {
                *g = f.clone();
            }
        }
    }
    out
}

/// Marks inside each binding entry of a structural instance.
fn binding_marks(
    rule: &StructuralRule,
    binding: &[(String, Sequent)],
    s: &Sequent,
    marks: &BTreeSet<FormulaAddress>,
) -> Result<Vec<BTreeSet<FormulaAddress>>> {
    let (inst, layout) = rule.conclusion.instantiate(binding)?;
    let i = iso(s, &inst).ok_or_else(|| shape(format!("conclusion is not an instance of {}", rule.id)))?;
    let mut back = BTreeMap::new();
    for (b, (v, val)) in binding.iter().enumerate() {
        if let Some(p) = layout.get(v) {
            for fa in val.formula_addresses() {
                back.insert(crate::calculus_shallow::place(p, &fa), (b, fa));
            }
        }
    }
    let mut out = vec![BTreeSet::new(); binding.len()];
    for m in marks {
        let (b, fa) = back
            .get(&i.map_formula(m))
            .cloned()
            .ok_or_else(|| shape("marked occurrence outside every variable"))?;
        out[b].insert(fa);
    }
    Ok(out)
}

/// What to do where a marked occurrence is principal.
#[derive(Clone, Copy)]
enum Mode<'a> {
    /// The marks are a literal; close with the other cut premise.
    Atomic(&'a ShallowDerivation),
    /// Reduce against the other cut premise, proving the dual at `usize`.
    Reduce(&'a ShallowDerivation, usize),
    /// Inversion of ∧ (component), □ or ■.
    Invert(usize),
}

struct Eliminator<'a> {
    system: &'a [StructuralRule],
    /// Each cut reduction, as the subderivation that replaced the cut.
    trace: Option<RefCell<Vec<ShallowDerivation>>>,
}

impl Eliminator<'_> {
    /// Occurrences of premise `j` descending from `marks`.
    fn track(
        &self,
        pi: &ShallowDerivation,
        marks: &BTreeSet<FormulaAddress>,
        j: usize,
    ) -> Result<BTreeSet<FormulaAddress>> {
        let s = &pi.conclusion;
        let f = s
            .formula(marks.iter().next().expect("nonempty"))
            .expect("mark in range")
            .clone();
        let rule = match &pi.rule {
            ShallowRule::Structural { rule, binding } => {
                let sr = self.structural(rule)?;
                let per = binding_marks(sr, binding, s, marks)?;
                ShallowRule::Structural {
                    rule: rule.clone(),
                    binding: binding
                        .iter()
                        .zip(per)
                        .map(|((v, val), m)| (v.clone(), replace_marked(val, &m, &marker())))
                        .collect(),
                }
            }
            r => r.clone(),
        };
        let e = rule
            .premises(&replace_marked(s, marks, &marker()), self.system)?
            .swap_remove(j);
        let p = &pi.premises[j].conclusion;
        let i = iso(p, &unmark(&e, &f)).ok_or_else(|| shape("premise does not match its rule"))?;
        Ok(p.formula_addresses()
            .into_iter()
            .filter(|a| e.formula(&i.map_formula(a)) == Some(&marker()))
            .collect())
    }

    fn structural(&self, id: &str) -> Result<&StructuralRule> {
        self.system
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| TransformError::Check(CheckErrorKind::NotInSystem(format!("struct:{id}"))))
    }

    /// Rule parameters after substitution.
    fn remap_rule(
        &self,
        pi: &ShallowDerivation,
        marks: &BTreeSet<FormulaAddress>,
        lay: &Layout,
        repl: &Sequent,
    ) -> Result<ShallowRule> {
        let root = NodeAddress::root();
        let fi = |i: usize| -> Result<usize> {
            lay.kept
                .get(&root.formula(i))
                .map(|a| a.index)
                .ok_or_else(|| shape("principal formula is marked"))
        };
        let select = |fs: &[usize], cs: &[usize]| -> Result<(Vec<usize>, Vec<usize>)> {
            let mut f2 = Vec::new();
            let mut c2 = cs.to_vec();
            for &i in fs {
                match lay.groups.get(&root.formula(i)) {
                    Some((gf, gc)) => {
                        f2.extend(gf);
                        c2.extend(gc);
                    }
                    None => f2.push(fi(i)?),
                }
            }
            Ok((f2, c2))
        };
        Ok(match &pi.rule {
            ShallowRule::Id { pos, neg } => ShallowRule::Id {
                pos: fi(*pos)?,
                neg: fi(*neg)?,
            },
            ShallowRule::And { principal } => ShallowRule::And {
                principal: fi(*principal)?,
            },
            ShallowRule::Or { principal } => ShallowRule::Or {
                principal: fi(*principal)?,
            },
            ShallowRule::Box { principal } => ShallowRule::Box {
                principal: fi(*principal)?,
            },
            ShallowRule::BBox { principal } => ShallowRule::BBox {
                principal: fi(*principal)?,
            },
            ShallowRule::Dia { principal, child } => ShallowRule::Dia {
                principal: fi(*principal)?,
                child: *child,
            },
            ShallowRule::BDia { principal, child } => ShallowRule::BDia {
                principal: fi(*principal)?,
                child: *child,
            },
            ShallowRule::Ctr { formulas, children } => {
                let (formulas, children) = select(formulas, children)?;
                ShallowRule::Ctr { formulas, children }
            }
            ShallowRule::Wk { formulas, children } => {
                let (formulas, children) = select(formulas, children)?;
                ShallowRule::Wk { formulas, children }
            }
            ShallowRule::Cut {
                formula,
                left_formulas,
                left_children,
            } => {
                let (left_formulas, left_children) = select(left_formulas, left_children)?;
                ShallowRule::Cut {
                    formula: formula.clone(),
                    left_formulas,
                    left_children,
                }
            }
            ShallowRule::Rf { child } => ShallowRule::Rf { child: *child },
            ShallowRule::Rp { child } => ShallowRule::Rp { child: *child },
            ShallowRule::Structural { rule, binding } => {
                let sr = self.structural(rule)?;
                let per = binding_marks(sr, binding, &pi.conclusion, marks)?;
                ShallowRule::Structural {
                    rule: rule.clone(),
                    binding: binding
                        .iter()
                        .zip(per)
                        .map(|((v, val), m)| (v.clone(), subst_seq(val, &m, repl).0))
                        .collect(),
                }
            }
            ShallowRule::Hyp => ShallowRule::Hyp,
        })
    }

    /// Proves `pi.conclusion` with every marked occurrence replaced by `repl`.
    fn substitute(
        &self,
        pi: &ShallowDerivation,
        marks: &BTreeSet<FormulaAddress>,
        repl: &Sequent,
        mode: Mode,
    ) -> Result<ShallowDerivation> {
        if marks.is_empty() {
            return Ok(pi.clone());
        }
        let root = NodeAddress::root();
        let principal = match &pi.rule {
            ShallowRule::Id { pos, neg } => [*pos, *neg].into_iter().find(|i| marks.contains(&root.formula(*i))),
            ShallowRule::And { principal }
            | ShallowRule::Or { principal }
            | ShallowRule::Box { principal }
            | ShallowRule::BBox { principal }
            | ShallowRule::Dia { principal, .. }
            | ShallowRule::BDia { principal, .. } => Some(*principal).filter(|i| marks.contains(&root.formula(*i))),
            _ => None,
        };
        let Some(p) = principal else {
            return self.substitute_node(pi, marks, repl, mode);
        };
        let mut rest = marks.clone();
        rest.remove(&root.formula(p));
        match mode {
            Mode::Atomic(pc) => {
                let ShallowRule::Id { pos, neg } = pi.rule else {
                    return Err(shape("a marked literal is principal outside id"));
                };
                let partner = if p == pos { neg } else { pos };
                let (s2, lay) = subst_seq(&pi.conclusion, marks, repl);
                let keep = lay.kept[&root.formula(partner)].index;
                let (gf, gc) = &lay.groups[&root.formula(p)];
                let rule = ShallowRule::Wk {
                    formulas: (0..s2.formulas.len())
                        .filter(|i| *i != keep && !gf.contains(i))
                        .collect(),
                    children: (0..s2.children.len()).filter(|k| !gc.contains(k)).collect(),
                };
                Ok(ShallowDerivation::new(s2, rule, vec![pc.clone()]))
            }
            Mode::Invert(component) => {
                let j = match pi.rule {
                    ShallowRule::And { .. } => component,
                    ShallowRule::Box { .. } | ShallowRule::BBox { .. } => 0,
                    _ => return Err(shape("inversion met an unexpected principal rule")),
                };
                let pm = if rest.is_empty() {
                    rest
                } else {
                    self.track(pi, &rest, j)?
                };
                self.substitute(&pi.premises[j], &pm, repl, mode)
            }
            Mode::Reduce(pc, ic) => {
                let (base, lay) = self.substitute_node_with(pi, &rest, repl, mode)?;
                let p2 = lay.kept[&root.formula(p)].index;
                self.reduce_principal(&base, p2, pc, ic)
            }
        }
    }

    fn substitute_node(
        &self,
        pi: &ShallowDerivation,
        marks: &BTreeSet<FormulaAddress>,
        repl: &Sequent,
        mode: Mode,
    ) -> Result<ShallowDerivation> {
        Ok(self.substitute_node_with(pi, marks, repl, mode)?.0)
    }

    fn substitute_node_with(
        &self,
        pi: &ShallowDerivation,
        marks: &BTreeSet<FormulaAddress>,
        repl: &Sequent,
        mode: Mode,
    ) -> Result<(ShallowDerivation, Layout)> {
        let (s2, lay) = subst_seq(&pi.conclusion, marks, repl);
        let rule = self.remap_rule(pi, marks, &lay, repl)?;
        let mut premises = Vec::with_capacity(pi.premises.len());
        for (j, p) in pi.premises.iter().enumerate() {
            let pm = if marks.is_empty() {
                BTreeSet::new()
            } else {
                self.track(pi, marks, j)?
            };
            premises.push(self.substitute(p, &pm, repl, mode)?);
        }
        Ok((ShallowDerivation::new(s2, rule, premises), lay))
    }

    /// Inverts the ∧, □ or ■ formula at root index `ic` of `pc`.
    fn invert(&self, pc: &ShallowDerivation, ic: usize, component: usize) -> Result<ShallowDerivation> {
        let repl = match &pc.conclusion.formulas[ic] {
            Formula::And(a, b) => Sequent::from_formulas([if component == 0 { (**a).clone() } else { (**b).clone() }]),
            Formula::Box(a) => Sequent::new().with_child(Polarity::Circle, Sequent::from_formulas([(**a).clone()])),
            Formula::BlackBox(a) => {
                Sequent::new().with_child(Polarity::Bullet, Sequent::from_formulas([(**a).clone()]))
            }
            f => return Err(shape(format!("{f} is not invertible here"))),
        };
        let marks = BTreeSet::from([NodeAddress::root().formula(ic)]);
        self.substitute(pc, &marks, &repl, Mode::Invert(component))
    }

    /// `base ⊢ X, D` ends with D principal at index `p`; `pc ⊢ Y, ¬D`.
    /// Returns a proof of `X, Y` whose new cuts are on proper subformulas of D.
    fn reduce_principal(
        &self,
        base: &ShallowDerivation,
        p: usize,
        pc: &ShallowDerivation,
        ic: usize,
    ) -> Result<ShallowDerivation> {
        let x = &base.conclusion;
        let mut x0 = x.clone();
        x0.formulas.remove(p);
        let mut y = pc.conclusion.clone();
        y.formulas.remove(ic);
        let (x0f, x0c) = (x0.formulas.len(), x0.children.len());
        let (yf, yc) = (y.formulas.len(), y.children.len());
        match (&base.rule, &x.formulas[p]) {
            (ShallowRule::Or { .. }, Formula::Or(e, f)) => {
                let inv_e = self.invert(pc, ic, 0)?;
                let inv_f = self.invert(pc, ic, 1)?;
                let mut t1 = x0.clone();
                t1.formulas.push((**f).clone());
                let t1 = t1.merge(&y);
                let cut1 = ShallowDerivation::new(
                    t1,
                    ShallowRule::Cut {
                        formula: (**e).clone(),
                        left_formulas: (0..=x0f).collect(),
                        left_children: (0..x0c).collect(),
                    },
                    vec![base.premises[0].clone(), inv_e],
                );
                let t2 = x0.clone().merge(&y).merge(&y);
                let cut2 = ShallowDerivation::new(
                    t2,
                    ShallowRule::Cut {
                        formula: (**f).clone(),
                        left_formulas: (0..x0f + yf).collect(),
                        left_children: (0..x0c + yc).collect(),
                    },
                    vec![cut1, inv_f],
                );
                Ok(ShallowDerivation::new(
                    x0.merge(&y),
                    ShallowRule::Ctr {
                        formulas: (x0f..x0f + yf).collect(),
                        children: (x0c..x0c + yc).collect(),
                    },
                    vec![cut2],
                ))
            }
            (ShallowRule::Dia { child, .. }, Formula::Dia(e))
            | (ShallowRule::BDia { child, .. }, Formula::BlackDia(e)) => {
                let white = matches!(base.rule, ShallowRule::Dia { .. });
                // Names follow the ◇ case; the ◆ case swaps polarities and rp/rf.
                let (out, back) = if white {
                    (Polarity::Bullet, Polarity::Circle)
                } else {
                    (Polarity::Circle, Polarity::Bullet)
                };
                let out_rule = |child| {
                    if white {
                        ShallowRule::Rf { child }
                    } else {
                        ShallowRule::Rp { child }
                    }
                };
                let back_rule = |child| {
                    if white {
                        ShallowRule::Rp { child }
                    } else {
                        ShallowRule::Rf { child }
                    }
                };
                let (_, z) = x0.children.remove(*child);
                let (x0f, x0c) = (x0.formulas.len(), x0.children.len());
                let (zf, zc) = (z.formulas.len(), z.children.len());
                let inv = self.invert(pc, ic, 0)?;
                let mut ta = z.clone();
                ta.formulas.push((**e).clone());
                let ta = ta.with_child(out, x0.clone());
                let node_a = ShallowDerivation::new(ta, out_rule(zc), vec![base.premises[0].clone()]);
                let tb = Sequent::from_formulas([e.negate()]).with_child(out, y.clone());
                let node_b = ShallowDerivation::new(tb, out_rule(0), vec![inv]);
                let tc = z.clone().with_child(out, x0.clone()).with_child(out, y.clone());
                let node_c = ShallowDerivation::new(
                    tc,
                    ShallowRule::Cut {
                        formula: (**e).clone(),
                        left_formulas: (0..zf).collect(),
                        left_children: (0..=zc).collect(),
                    },
                    vec![node_a, node_b],
                );
                let td = z.clone().with_child(out, x0.clone().merge(&y));
                let node_d = build::merge_children(&td, zc, x0f, x0c, node_c)?;
                let te = x0.clone().merge(&y).with_child(back, z);
                Ok(ShallowDerivation::new(te, back_rule(x0c + yc), vec![node_d]))
            }
            (r, f) => Err(shape(format!("cannot reduce {} on {f}", r.name()))),
        }
    }

    /// Replaces a cut whose premises are cut-free by cuts on smaller formulas.
    fn reduce_cut(&self, d: &ShallowDerivation) -> Result<ShallowDerivation> {
        let ShallowRule::Cut { formula: a, .. } = &d.rule else {
            unreachable!("reduce_cut on a non-cut");
        };
        let expected = d.rule.premises(&d.conclusion, self.system)?;
        let locate = |j: usize| -> Result<usize> {
            let e = &expected[j];
            let i = iso(&d.premises[j].conclusion, e).ok_or_else(|| shape("cut premise does not match"))?;
            let last = e.formulas.len() - 1;
            i.formulas
                .iter()
                .position(|&k| k == last)
                .ok_or_else(|| shape("cut formula missing"))
        };
        let (i1, i2) = (locate(0)?, locate(1)?);
        let (p1, p2) = (&d.premises[0], &d.premises[1]);
        let dual_first = matches!(a, Formula::Or(..) | Formula::Dia(_) | Formula::BlackDia(_));
        // `pd` carries the occurrence that is traced, `pc` the other side.
        let (pd, id, pc, ic) = if a.is_literal() || !dual_first {
            (p2, i2, p1, i1)
        } else {
            (p1, i1, p2, i2)
        };
        let mut repl = pc.conclusion.clone();
        repl.formulas.remove(ic);
        let marks = BTreeSet::from([NodeAddress::root().formula(id)]);
        let mode = if a.is_literal() {
            Mode::Atomic(pc)
        } else {
            Mode::Reduce(pc, ic)
        };
        self.substitute(pd, &marks, &repl, mode)
    }

    fn eliminate(&self, d: &ShallowDerivation) -> Result<ShallowDerivation> {
        if d.count_rule("cut") == 0 {
            return Ok(d.clone());
        }
        let premises = d
            .premises
            .iter()
            .map(|p| self.eliminate(p))
            .collect::<Result<Vec<_>>>()?;
        let d = ShallowDerivation::new(d.conclusion.clone(), d.rule.clone(), premises);
        match d.rule {
            ShallowRule::Cut { .. } => {
                let reduced = self.reduce_cut(&d)?;
                if let Some(t) = &self.trace {
                    t.borrow_mut().push(reduced.clone());
                }
                self.eliminate(&reduced)
            }
            _ => Ok(d),
        }
    }
}

fn validate_system(system: &[StructuralRule]) -> Result<()> {
    match system.iter().find(|r| validate_structural_rule(r).is_err()) {
        Some(r) => Err(TransformError::BadSystem(r.id.clone())),
        None => Ok(()),
    }
}

/// Removes every cut from a derivation in SKt extended with `system`.
pub fn eliminate_cuts(d: &ShallowDerivation, system: &[StructuralRule]) -> Result<ShallowDerivation> {
    validate_system(system)?;
    Eliminator { system, trace: None }.eliminate(d)
}

/// [`eliminate_cuts`], also returning every intermediate cut reduction in
/// the order performed.
pub fn eliminate_cuts_traced(
    d: &ShallowDerivation,
    system: &[StructuralRule],
) -> Result<(ShallowDerivation, Vec<ShallowDerivation>)> {
    validate_system(system)?;
    let e = Eliminator {
        system,
        trace: Some(RefCell::new(Vec::new())),
    };
    let out = e.eliminate(d)?;
    Ok((out, e.trace.map(RefCell::into_inner).unwrap_or_default()))
}

/// A cut-free proof of `A, ¬A` for any formula.
pub fn identity_derivation(a: &Formula) -> ShallowDerivation {
    let s = Sequent::from_formulas([a.clone(), a.negate()]);
    let (pos, neg) = match a {
        Formula::Atom(_) => (0, 1),
        Formula::NegAtom(_) => (1, 0),
        Formula::And(..) | Formula::Box(_) | Formula::BlackBox(_) => return identity_on(a, s, 0),
        Formula::Or(..) | Formula::Dia(_) | Formula::BlackDia(_) => return identity_on(&a.negate(), s, 1),
    };
    ShallowDerivation::new(s, ShallowRule::Id { pos, neg }, vec![])
}

// `s` holds an ∧/□/■ formula `c` at index `i` and its negation at `1 - i`.
fn identity_on(c: &Formula, s: Sequent, i: usize) -> ShallowDerivation {
    let j = 1 - i;
    let mut up = Up::new(s);
    match c {
        Formula::And(a, b) => {
            // After ∨ the root is c, ¬a, ¬b with c at i and ¬a at j.
            up.apply(ShallowRule::Or { principal: j }).expect("or applies");
            let prems = ShallowRule::And { principal: i }
                .premises(&up.top, &[])
                .expect("and applies");
            let branch = |prem: &Sequent, drop: usize, body: &Formula| {
                let mut br = Up::new(prem.clone());
                br.apply(ShallowRule::Wk {
                    formulas: vec![drop],
                    children: vec![],
                })
                .expect("wk applies");
                br.wrap(identity_derivation(body))
            };
            let left = branch(&prems[0], 2, a);
            let right = branch(&prems[1], j, b);
            up.close(ShallowRule::And { principal: i }, vec![left, right])
        }
        Formula::Box(a) | Formula::BlackBox(a) => {
            let white = matches!(c, Formula::Box(_));
            up.apply(if white {
                ShallowRule::Box { principal: i }
            } else {
                ShallowRule::BBox { principal: i }
            })
            .expect("box applies");
            // The dual diamond is now alone at the root, next to the new child.
            let k = up.top.children.len() - 1;
            up.apply(if white {
                ShallowRule::Dia { principal: 0, child: k }
            } else {
                ShallowRule::BDia { principal: 0, child: k }
            })
            .expect("diamond applies");
            up.apply(if white {
                ShallowRule::Rp { child: k }
            } else {
                ShallowRule::Rf { child: k }
            })
            .expect("display applies");
            let k = up.top.children.len() - 1;
            up.apply(ShallowRule::Wk {
                formulas: vec![],
                children: vec![k],
            })
            .expect("wk applies");
            up.wrap(identity_derivation(a))
        }
        _ => unreachable!("identity_on expects ∧, □ or ■"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus_deep::{check_deep, DeepSystem};
    use crate::calculus_shallow::{check_shallow, make_sl_rule};
    use crate::formula::parse;

    fn seq(s: &str) -> Sequent {
        s.parse().unwrap()
    }

    fn fa(s: &str) -> FormulaAddress {
        s.parse().unwrap()
    }

    fn id_leaf(s: &str, site: &str, partner: usize) -> DeepDerivation {
        DeepDerivation::new(seq(s), DeepRuleInstance::id(fa(site), partner), vec![])
    }

    // ◆a, •{~a} proved by ◆1 then id.
    fn bdia_proof() -> DeepDerivation {
        DeepDerivation::new(
            seq("<*>a, b{~a}"),
            DeepRuleInstance::propagate(DeepRule::BDia1, fa("r#0"), NodeAddress(vec![0])),
            vec![id_leaf("<*>a, b{~a, a}", "0#1", 0)],
        )
    }

    #[test]
    fn weaken_keeps_height() {
        let d = id_leaf("a, ~a", "r#0", 1);
        let w = admissible_weaken(&d, &NodeAddress::root(), &seq("b")).unwrap();
        assert_eq!(w.conclusion, seq("a, ~a, b"));
        assert_eq!(w.height(), 1);
        check_deep(&w, &DeepSystem::dkt()).unwrap();

        let d = bdia_proof();
        let w = admissible_weaken(&d, &NodeAddress::root(), &seq("o{c, b{d}}")).unwrap();
        assert_eq!(w.height(), d.height());
        check_deep(&w, &DeepSystem::dkt()).unwrap();
    }

    #[test]
    fn residuation_reindexes_boundary_steps() {
        let d = bdia_proof();
        let r = admissible_residuate(&d, Residuation::Rp, 0).unwrap();
        assert_eq!(r.conclusion, seq("~a, o{<*>a}"));
        assert_eq!(r.instance.rule, DeepRule::BDia2);
        assert_eq!(r.height(), d.height());
        check_deep(&r, &DeepSystem::dkt()).unwrap();
        let back = admissible_residuate(&r, Residuation::Rf, 0).unwrap();
        assert_eq!(back.conclusion, d.conclusion);
        assert_eq!(back.instance.rule, DeepRule::BDia1);
        check_deep(&back, &DeepSystem::dkt()).unwrap();
        assert!(admissible_residuate(&d, Residuation::Rf, 0).is_err());
    }

    #[test]
    fn contraction_merges_copies() {
        let d = id_leaf("a, ~a", "r#0", 1);
        let w = admissible_weaken(&d, &NodeAddress::root(), &seq("b, o{c}")).unwrap();
        let w2 = admissible_weaken(&w, &NodeAddress::root(), &seq("b, o{c}")).unwrap();
        let c = admissible_contract(&w2, &NodeAddress::root(), &seq("b, o{c}")).unwrap();
        assert_eq!(c.conclusion, w.conclusion);
        check_deep(&c, &DeepSystem::dkt()).unwrap();

        // Two copies of ∘{◆a-proof structure}: contraction drops a whole subtree.
        let d = bdia_proof();
        let doubled = admissible_weaken(&d, &NodeAddress::root(), &seq("<*>a, b{~a}")).unwrap();
        let c = admissible_contract(&doubled, &NodeAddress::root(), &seq("<*>a, b{~a}")).unwrap();
        assert_eq!(c.conclusion, d.conclusion);
        assert!(c.height() <= doubled.height());
        check_deep(&c, &DeepSystem::dkt()).unwrap();
        assert!(admissible_contract(&d, &NodeAddress::root(), &seq("q")).is_err());
    }

    #[test]
    fn contraction_through_medial_case() {
        // Σ[∘{Δ'}, ∘{Δ'}] with a box step inside one copy.
        let s = seq("o{[]a, <>~a}, o{[]a, <>~a}");
        let proof = DeepDerivation::new(
            s.clone(),
            DeepRuleInstance::at(DeepRule::Box, fa("1#0")),
            vec![DeepDerivation::new(
                seq("o{[]a, <>~a}, o{[]a, <>~a, o{a}}"),
                DeepRuleInstance::propagate(DeepRule::Dia1, fa("1#1"), NodeAddress(vec![1, 0])),
                vec![id_leaf("o{[]a, <>~a}, o{[]a, <>~a, o{a, ~a}}", "1.0#0", 1)],
            )],
        );
        check_deep(&proof, &DeepSystem::dkt()).unwrap();
        let c = admissible_contract(&proof, &NodeAddress::root(), &seq("o{[]a, <>~a}")).unwrap();
        assert_eq!(c.conclusion, seq("o{[]a, <>~a}"));
        check_deep(&c, &DeepSystem::dkt()).unwrap();
    }

    #[test]
    fn translations_round_trip() {
        let d = bdia_proof();
        let s = translate_dkt_to_skt(&d).unwrap();
        check_shallow(&s, &[], false).unwrap();
        assert_eq!(s.conclusion, d.conclusion);
        let back = translate_skt_to_dkt(&s).unwrap();
        check_deep(&back, &DeepSystem::dkt()).unwrap();
        assert_eq!(back.conclusion, d.conclusion);
        for r in ["ctr", "wk", "rf", "rp", "cut"] {
            assert!(!back.rule_inventory().contains_key(r));
        }
    }

    #[test]
    fn identity_derivations_check() {
        for f in ["a", "~a", "a & b", "[]a | <*>~b", "[*](a & <>b)", "<>([]a | b)"] {
            let a = parse(f).unwrap();
            let d = identity_derivation(&a);
            check_shallow(&d, &[], false).unwrap_or_else(|e| panic!("{f}: {e}"));
            assert_eq!(d.conclusion, Sequent::from_formulas([a.clone(), a.negate()]));
        }
    }

    // Cut of `A, ¬A` against `¬A, A` on `¬A`; conclusion `A, ¬A`.
    fn identity_cut(a: &Formula) -> ShallowDerivation {
        ShallowDerivation::new(
            Sequent::from_formulas([a.clone(), a.negate()]),
            ShallowRule::Cut {
                formula: a.negate(),
                left_formulas: vec![0],
                left_children: vec![],
            },
            vec![identity_derivation(a), identity_derivation(&a.negate())],
        )
    }

    #[test]
    fn atomic_cut_becomes_weakened_id() {
        let cut = identity_cut(&parse("a").unwrap());
        check_shallow(&cut, &[], true).unwrap();
        let out = eliminate_cuts(&cut, &[]).unwrap();
        assert_eq!(out.count_rule("cut"), 0);
        check_shallow(&out, &[], false).unwrap();
        assert_eq!(out.conclusion, cut.conclusion);
    }

    #[test]
    fn eliminates_principal_cuts() {
        for f in ["a & b", "[]a", "<*>~a", "[](a | <>b)", "<>[*]a & (b | ~c)"] {
            let cut = identity_cut(&parse(f).unwrap());
            check_shallow(&cut, &[], true).unwrap();
            let out = eliminate_cuts(&cut, &[]).unwrap_or_else(|e| panic!("{f}: {e}"));
            assert_eq!(out.count_rule("cut"), 0, "{f}");
            check_shallow(&out, &[], false).unwrap_or_else(|e| panic!("{f}: {e}"));
            assert_eq!(out.conclusion, cut.conclusion);
        }
    }

    #[test]
    fn trace_lists_each_reduction() {
        let cut = identity_cut(&parse("a & []b").unwrap());
        let (out, trace) = eliminate_cuts_traced(&cut, &[]).unwrap();
        assert_eq!(out.count_rule("cut"), 0);
        assert!(trace.len() >= 2, "{}", trace.len());
        assert_eq!(trace[0].conclusion, cut.conclusion);
        for t in &trace {
            check_shallow(t, &[], true).unwrap();
        }
    }

    #[test]
    fn structural_rules_are_validated() {
        use crate::calculus_shallow::Pattern;
        let bad = StructuralRule {
            id: "dup".into(),
            premise: Pattern::var("G")
                .join(Pattern::var("D").nest(&[Polarity::Bullet]))
                .join(Pattern::var("D")),
            conclusion: Pattern::var("G")
                .join(Pattern::var("D").nest(&[Polarity::Circle]))
                .join(Pattern::var("D")),
        };
        let d = ShallowDerivation::new(seq("a, ~a"), ShallowRule::Id { pos: 0, neg: 1 }, vec![]);
        assert!(matches!(eliminate_cuts(&d, &[bad]), Err(TransformError::BadSystem(_))));
        assert!(eliminate_cuts(&d, &[make_sl_rule(0, 1, 2, 0)]).is_ok());
    }
}
