//! Nested sequents: polarity-labelled trees of formula multisets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde_json::{json, Value};
use thiserror::Error;

use crate::calculus_shallow::ShallowRule;
use crate::formula::{Diamond, Formula, ParseError, Tok, TokenParser};

/// Edge label of a nested sequent: ∘ (future) or • (past).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Circle,
    Bullet,
}

impl Polarity {
    pub fn dual(self) -> Polarity {
        match self {
            Polarity::Circle => Polarity::Bullet,
            Polarity::Bullet => Polarity::Circle,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Polarity::Circle => "o",
            Polarity::Bullet => "b",
        }
    }

    pub fn from_code(s: &str) -> Option<Polarity> {
        match s {
            "o" => Some(Polarity::Circle),
            "b" => Some(Polarity::Bullet),
            _ => None,
        }
    }

    /// The diamond that propagates from a parent into a child along this edge.
    pub fn down_diamond(self) -> Diamond {
        match self {
            Polarity::Circle => Diamond::White,
            Polarity::Bullet => Diamond::Black,
        }
    }

    /// The structural connective dual to a diamond: ◇ ↦ ∘, ◆ ↦ •.
    pub fn of_diamond(d: Diamond) -> Polarity {
        match d {
            Diamond::White => Polarity::Circle,
            Diamond::Black => Polarity::Bullet,
        }
    }

    /// Wraps `f` in the box that this connective translates to.
    pub fn boxed(self, f: Formula) -> Formula {
        match self {
            Polarity::Circle => Formula::boxed(f),
            Polarity::Bullet => Formula::bbox(f),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Sequent {
    pub formulas: Vec<Formula>,
    pub children: Vec<(Polarity, Sequent)>,
}

/// Order-insensitive normal form of a sequent, used for equality and hashing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonKey {
    fs: Vec<Formula>,
    ch: Vec<(Polarity, CanonKey)>,
}

impl PartialEq for Sequent {
    fn eq(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }
}

impl Eq for Sequent {}

impl Hash for Sequent {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.canonical().hash(state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct NodeAddress(pub Vec<usize>);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormulaAddress {
    pub node: NodeAddress,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SequentError {
    #[error("no node at address {0}")]
    InvalidNode(NodeAddress),
    #[error("no formula at address {0}")]
    InvalidFormula(FormulaAddress),
    #[error("malformed address {0:?}")]
    BadAddress(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("malformed sequent json: {0}")]
    Json(String),
}

impl NodeAddress {
    pub fn root() -> NodeAddress {
        NodeAddress(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, k: usize) -> NodeAddress {
        let mut p = self.0.clone();
        p.push(k);
        NodeAddress(p)
    }

    pub fn parent(&self) -> Option<NodeAddress> {
        let mut p = self.0.clone();
        p.pop().map(|_| NodeAddress(p))
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_prefix_of(&self, other: &NodeAddress) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn formula(&self, index: usize) -> FormulaAddress {
        FormulaAddress {
            node: self.clone(),
            index,
        }
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("r");
        }
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        f.write_str(&parts.join("."))
    }
}

impl FromStr for NodeAddress {
    type Err = SequentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "r" || s.is_empty() {
            return Ok(NodeAddress::root());
        }
        s.split('.')
            .map(|p| p.parse::<usize>())
            .collect::<Result<Vec<_>, _>>()
            .map(NodeAddress)
            .map_err(|_| SequentError::BadAddress(s.to_string()))
    }
}

impl fmt::Display for FormulaAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.node, self.index)
    }
}

impl FromStr for FormulaAddress {
    type Err = SequentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (node, index) = s
            .split_once('#')
            .ok_or_else(|| SequentError::BadAddress(s.to_string()))?;
        Ok(FormulaAddress {
            node: node.parse()?,
            index: index.parse().map_err(|_| SequentError::BadAddress(s.to_string()))?,
        })
    }
}

impl Sequent {
    pub fn new() -> Sequent {
        Sequent::default()
    }

    pub fn from_formulas(fs: impl IntoIterator<Item = Formula>) -> Sequent {
        Sequent {
            formulas: fs.into_iter().collect(),
            children: Vec::new(),
        }
    }

    pub fn with_child(mut self, pol: Polarity, child: Sequent) -> Sequent {
        self.children.push((pol, child));
        self
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty() && self.children.is_empty()
    }

    pub fn canonical(&self) -> CanonKey {
        let mut fs = self.formulas.clone();
        fs.sort();
        let mut ch: Vec<(Polarity, CanonKey)> = self.children.iter().map(|(p, c)| (*p, c.canonical())).collect();
        ch.sort();
        CanonKey { fs, ch }
    }

    pub fn node(&self, addr: &NodeAddress) -> Option<&Sequent> {
        let mut cur = self;
        for &k in &addr.0 {
            cur = &cur.children.get(k)?.1;
        }
        Some(cur)
    }

    pub fn node_mut(&mut self, addr: &NodeAddress) -> Option<&mut Sequent> {
        let mut cur = self;
        for &k in &addr.0 {
            cur = &mut cur.children.get_mut(k)?.1;
        }
        Some(cur)
    }

    pub fn formula(&self, addr: &FormulaAddress) -> Option<&Formula> {
        self.node(&addr.node)?.formulas.get(addr.index)
    }

    /// Polarity of the edge entering the node at `addr` (None for the root).
    pub fn polarity_of(&self, addr: &NodeAddress) -> Option<Polarity> {
        let parent = addr.parent()?;
        let k = *addr.0.last()?;
        self.node(&parent)?.children.get(k).map(|c| c.0)
    }

    /// All node addresses in breadth-first, left-to-right order.
    pub fn node_addresses(&self) -> Vec<NodeAddress> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([(NodeAddress::root(), self)]);
        while let Some((addr, node)) = queue.pop_front() {
            for (k, (_, c)) in node.children.iter().enumerate() {
                queue.push_back((addr.child(k), c));
            }
            out.push(addr);
        }
        out
    }

    pub fn formula_addresses(&self) -> Vec<FormulaAddress> {
        let mut out = Vec::new();
        for addr in self.node_addresses() {
            let n = self.node(&addr).map_or(0, |s| s.formulas.len());
            out.extend((0..n).map(|i| addr.formula(i)));
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(|(_, c)| c.node_count()).sum::<usize>()
    }

    /// Height of the tree; a single node has depth 0.
    pub fn depth(&self) -> usize {
        self.children.iter().map(|(_, c)| 1 + c.depth()).max().unwrap_or(0)
    }

    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.visit(&mut |_, node| {
            for f in &node.formulas {
                f.collect_subformulas(&mut out);
            }
        });
        out
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |_, node| {
            for f in &node.formulas {
                f.collect_atoms(&mut out);
            }
        });
        out
    }

    /// True when a black connective or a •-edge occurs anywhere.
    pub fn has_black(&self) -> bool {
        self.formulas.iter().any(Formula::has_black)
            || self
                .children
                .iter()
                .any(|(p, c)| *p == Polarity::Bullet || c.has_black())
    }

    /// Pre-order traversal with addresses.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&NodeAddress, &'a Sequent)) {
        fn go<'a>(s: &'a Sequent, addr: &mut Vec<usize>, f: &mut impl FnMut(&NodeAddress, &'a Sequent)) {
            f(&NodeAddress(addr.clone()), s);
            for (k, (_, c)) in s.children.iter().enumerate() {
                addr.push(k);
                go(c, addr, f);
                addr.pop();
            }
        }
        go(self, &mut Vec::new(), f)
    }

    /// Union of two sequents at the root: formulas and children appended.
    pub fn merge(mut self, other: &Sequent) -> Sequent {
        self.formulas.extend(other.formulas.iter().cloned());
        self.children.extend(other.children.iter().cloned());
        self
    }

    /// The formula interpretation τ of the sequent.
    pub fn tau(&self) -> Formula {
        let parts = self
            .formulas
            .iter()
            .cloned()
            .chain(self.children.iter().map(|(p, c)| p.boxed(c.tau())));
        Formula::disjunction(parts)
    }

    /// Brings the node at `target` to the root using residuation steps.
    pub fn display(&self, target: &NodeAddress) -> Result<Displayed, SequentError> {
        if self.node(target).is_none() {
            return Err(SequentError::InvalidNode(target.clone()));
        }
        let mut cur = self.clone();
        let mut steps_out = Vec::new();
        // Polarity and arity of each folded node, for the way back.
        let mut folds = Vec::new();
        for &k in &target.0 {
            let (pol, inner) = cur.children[k].clone();
            let mut rest = cur.clone();
            rest.children.remove(k);
            folds.push((pol, inner.children.len()));
            let next = inner.with_child(pol.dual(), rest);
            let out_rule = match pol {
                Polarity::Circle => ShallowRule::Rp { child: k },
                Polarity::Bullet => ShallowRule::Rf { child: k },
            };
            steps_out.push(DisplayStep {
                rule: out_rule,
                premise: next.clone(),
                conclusion: cur.clone(),
            });
            cur = next;
        }
        // Replaying a step moves the unfolded node to the end of its parent,
        // so every fold above the deepest one sits one slot earlier.
        let mut steps_back = Vec::new();
        let mut at = cur.clone();
        for (n, &(pol, len)) in folds.iter().enumerate().rev() {
            let child = if n + 1 == folds.len() { len } else { len - 1 };
            let rule = match pol {
                Polarity::Circle => ShallowRule::Rf { child },
                Polarity::Bullet => ShallowRule::Rp { child },
            };
            let premise = rule
                .premises(&at, &[])
                .ok()
                .and_then(|mut p| p.pop())
                .expect("display replay is well formed");
            steps_back.push(DisplayStep {
                rule,
                premise: premise.clone(),
                conclusion: at,
            });
            at = premise;
        }
        Ok(Displayed {
            displayed: cur,
            steps_out,
            steps_back,
        })
    }

    pub fn propagation_graph(&self) -> PropagationGraph {
        let nodes = self.node_addresses();
        let index: BTreeMap<NodeAddress, usize> = nodes.iter().cloned().enumerate().map(|(i, a)| (a, i)).collect();
        let mut edges = Vec::new();
        for (i, addr) in nodes.iter().enumerate() {
            let node = self.node(addr).expect("listed address");
            for (k, (pol, _)) in node.children.iter().enumerate() {
                let j = index[&addr.child(k)];
                let down = pol.down_diamond();
                edges.push((i, j, down));
                edges.push((j, i, down.inverse()));
            }
        }
        PropagationGraph { nodes, edges }
    }

    /// Applies one edit at `addr`, returning the new sequent and the occurrence remap.
    pub fn edit_at(&self, addr: &NodeAddress, edit: Edit) -> Result<(Sequent, Remap), SequentError> {
        let mut out = self.clone();
        let node = out
            .node_mut(addr)
            .ok_or_else(|| SequentError::InvalidNode(addr.clone()))?;
        match &edit {
            Edit::AddFormula(f) => node.formulas.push(f.clone()),
            Edit::AddChild(p, c) => node.children.push((*p, c.clone())),
            Edit::RemoveFormula(i) => {
                if *i >= node.formulas.len() {
                    return Err(SequentError::InvalidFormula(addr.formula(*i)));
                }
                node.formulas.remove(*i);
            }
            Edit::RemoveChild(k) => {
                if *k >= node.children.len() {
                    return Err(SequentError::InvalidNode(addr.child(*k)));
                }
                node.children.remove(*k);
            }
        }
        let mut map = BTreeMap::new();
        for fa in self.formula_addresses() {
            let moved = match &edit {
                Edit::RemoveFormula(i) if fa.node == *addr => match fa.index.cmp(i) {
                    Ordering::Less => Some(fa.clone()),
                    Ordering::Equal => None,
                    Ordering::Greater => Some(addr.formula(fa.index - 1)),
                },
                Edit::RemoveChild(k) if addr.child(*k).is_prefix_of(&fa.node) => None,
                Edit::RemoveChild(k) if addr.is_prefix_of(&fa.node) && fa.node.depth() > addr.depth() => {
                    let mut path = fa.node.0.clone();
                    let slot = &mut path[addr.depth()];
                    if *slot > *k {
                        *slot -= 1;
                    }
                    Some(NodeAddress(path).formula(fa.index))
                }
                _ => Some(fa.clone()),
            };
            if let Some(to) = moved {
                map.insert(fa, to);
            }
        }
        Ok((out, Remap { map }))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "fs": self.formulas.iter().map(|f| f.to_string()).collect::<Vec<_>>(),
            "ch": self.children.iter().map(|(p, c)| json!({"pol": p.code(), "seq": c.to_json()})).collect::<Vec<_>>(),
        })
    }

    /// Reads the JSON form; a bare string is read in the text syntax.
    pub fn from_json(v: &Value) -> Result<Sequent, SequentError> {
        if let Some(s) = v.as_str() {
            return s.parse();
        }
        let obj = v
            .as_object()
            .ok_or_else(|| SequentError::Json("expected object or string".into()))?;
        let mut seq = Sequent::new();
        if let Some(fs) = obj.get("fs") {
            for f in fs
                .as_array()
                .ok_or_else(|| SequentError::Json("fs must be a list".into()))?
            {
                let text = f
                    .as_str()
                    .ok_or_else(|| SequentError::Json("formula must be a string".into()))?;
                seq.formulas.push(text.parse()?);
            }
        }
        if let Some(ch) = obj.get("ch") {
            for c in ch
                .as_array()
                .ok_or_else(|| SequentError::Json("ch must be a list".into()))?
            {
                let pol = c
                    .get("pol")
                    .and_then(Value::as_str)
                    .and_then(Polarity::from_code)
                    .ok_or_else(|| SequentError::Json("child needs pol \"o\" or \"b\"".into()))?;
                let inner = c
                    .get("seq")
                    .ok_or_else(|| SequentError::Json("child needs seq".into()))?;
                seq.children.push((pol, Sequent::from_json(inner)?));
            }
        }
        Ok(seq)
    }

    /// Graphviz rendering of the tree with edges labelled "o" or "b".
    pub fn to_dot(&self) -> String {
        fn go(s: &Sequent, id: &mut usize, out: &mut String) -> usize {
            let me = *id;
            *id += 1;
            let mut fs: Vec<String> = s.formulas.iter().map(|f| f.to_string()).collect();
            fs.sort();
            let label = fs.join(", ").replace('\\', "\\\\").replace('"', "\\\"");
            out.push_str(&format!("  n{me} [label=\"{label}\"];\n"));
            let mut ch: Vec<&(Polarity, Sequent)> = s.children.iter().collect();
            ch.sort_by_cached_key(|(p, c)| (*p, c.canonical()));
            for (p, c) in ch {
                let child = go(c, id, out);
                out.push_str(&format!("  n{me} -> n{child} [label=\"{}\"];\n", p.code()));
            }
            me
        }
        let mut out = String::from("digraph sequent {\n");
        go(self, &mut 0, &mut out);
        out.push_str("}\n");
        out
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self.formulas.iter().map(|x| x.to_string()).collect();
        for (p, c) in &self.children {
            parts.push(format!("{}{{{}}}", p.code(), c));
        }
        f.write_str(&parts.join(", "))
    }
}

impl FromStr for Sequent {
    type Err = SequentError;

    /// Text syntax: `a, ~a, o{b, b{c}}`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = TokenParser::new(s)?;
        let seq = parse_items(&mut p)?;
        if !p.at_end() {
            return Err(p.unexpected().into());
        }
        Ok(seq)
    }
}

fn parse_items(p: &mut TokenParser) -> Result<Sequent, SequentError> {
    let mut seq = Sequent::new();
    if p.at_end() || p.peek() == Some(&Tok::RBrace) {
        return Ok(seq);
    }
    loop {
        let pol = match (p.peek(), p.peek_nth(1)) {
            (Some(Tok::Atom(name)), Some(Tok::LBrace)) => Polarity::from_code(name),
            _ => None,
        };
        if let Some(pol) = pol {
            p.bump();
            p.bump();
            let inner = parse_items(p)?;
            if p.peek() != Some(&Tok::RBrace) {
                return Err(p.unexpected().into());
            }
            p.bump();
            seq.children.push((pol, inner));
        } else {
            seq.formulas.push(p.formula()?);
        }
        if p.peek() == Some(&Tok::Comma) {
            p.bump();
        } else {
            return Ok(seq);
        }
    }
}

/// One residuation step produced by [`Sequent::display`].
#[derive(Debug, Clone)]
pub struct DisplayStep {
    pub rule: ShallowRule,
    pub premise: Sequent,
    pub conclusion: Sequent,
}

/// Result of displaying a node. Both step lists are ordered as they appear
/// in a derivation read from the end-sequent upward: `steps_out` derives the
/// original sequent from `displayed`, `steps_back` derives `displayed` from it.
#[derive(Debug, Clone)]
pub struct Displayed {
    pub displayed: Sequent,
    pub steps_out: Vec<DisplayStep>,
    pub steps_back: Vec<DisplayStep>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Edit {
    AddFormula(Formula),
    RemoveFormula(usize),
    AddChild(Polarity, Sequent),
    RemoveChild(usize),
}

/// Occurrence remap returned by [`Sequent::edit_at`]; removed occurrences are absent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Remap {
    pub map: BTreeMap<FormulaAddress, FormulaAddress>,
}

impl Remap {
    pub fn get(&self, fa: &FormulaAddress) -> Option<&FormulaAddress> {
        self.map.get(fa)
    }

    /// Entries whose address actually changed.
    pub fn changes(&self) -> Vec<(&FormulaAddress, &FormulaAddress)> {
        self.map.iter().filter(|(a, b)| a != b).collect()
    }
}

/// Propagation graph over node indices in breadth-first order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropagationGraph {
    pub nodes: Vec<NodeAddress>,
    pub edges: Vec<(usize, usize, Diamond)>,
}

impl PropagationGraph {
    pub fn index_of(&self, addr: &NodeAddress) -> Option<usize> {
        self.nodes.iter().position(|a| a == addr)
    }

    /// Target of the edge leaving `from` with label `d` towards `to`, if present.
    pub fn has_edge(&self, from: usize, to: usize, d: Diamond) -> bool {
        self.edges.contains(&(from, to, d))
    }

    pub fn labelled_edges(&self) -> Vec<(NodeAddress, NodeAddress, Diamond)> {
        self.edges
            .iter()
            .map(|&(i, j, d)| (self.nodes[i].clone(), self.nodes[j].clone(), d))
            .collect()
    }

    /// Follows a label string from `start`; returns every reachable end node.
    pub fn run(&self, start: usize, word: &[Diamond]) -> BTreeSet<usize> {
        let mut cur = BTreeSet::from([start]);
        for d in word {
            cur = self
                .edges
                .iter()
                .filter(|(i, _, l)| cur.contains(i) && l == d)
                .map(|(_, j, _)| *j)
                .collect();
        }
        cur
    }
}

/// A sequent with holes; filling puts the same sequent into every hole.
#[derive(Debug, Clone)]
pub struct Context {
    pub base: Sequent,
    pub holes: Vec<NodeAddress>,
}

impl Context {
    pub fn new(base: Sequent, holes: Vec<NodeAddress>) -> Result<Context, SequentError> {
        let mut seen = BTreeSet::new();
        for h in &holes {
            if base.node(h).is_none() || !seen.insert(h.clone()) {
                return Err(SequentError::InvalidNode(h.clone()));
            }
        }
        Ok(Context { base, holes })
    }

    pub fn fill(&self, with: &Sequent) -> Sequent {
        let mut out = self.base.clone();
        for h in &self.holes {
            let node = out.node_mut(h).expect("validated hole");
            node.formulas.extend(with.formulas.iter().cloned());
            node.children.extend(with.children.iter().cloned());
        }
        out
    }
}

/// Index correspondence between two equal sequents, node by node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Iso {
    /// `formulas[i]` is the index in the second sequent of formula `i` of the first.
    pub formulas: Vec<usize>,
    /// `children[k] = (k2, iso)` maps child `k` of the first to child `k2` of the second.
    pub children: Vec<(usize, Iso)>,
}

impl Iso {
    pub fn map_node(&self, addr: &NodeAddress) -> NodeAddress {
        let mut cur = self;
        let mut out = Vec::new();
        for &k in &addr.0 {
            let (k2, sub) = &cur.children[k];
            out.push(*k2);
            cur = sub;
        }
        NodeAddress(out)
    }

    pub fn map_formula(&self, fa: &FormulaAddress) -> FormulaAddress {
        let mut cur = self;
        for &k in &fa.node.0 {
            cur = &cur.children[k].1;
        }
        FormulaAddress {
            node: self.map_node(&fa.node),
            index: cur.formulas[fa.index],
        }
    }
}

/// Finds an index correspondence witnessing `a == b`.
pub fn iso(a: &Sequent, b: &Sequent) -> Option<Iso> {
    if a.formulas.len() != b.formulas.len() || a.children.len() != b.children.len() {
        return None;
    }
    let mut used = vec![false; b.formulas.len()];
    let mut formulas = Vec::with_capacity(a.formulas.len());
    for f in &a.formulas {
        let j = (0..b.formulas.len()).find(|&j| !used[j] && b.formulas[j] == *f)?;
        used[j] = true;
        formulas.push(j);
    }
    let b_keys: Vec<(Polarity, CanonKey)> = b.children.iter().map(|(p, c)| (*p, c.canonical())).collect();
    let mut used = vec![false; b.children.len()];
    let mut children = Vec::with_capacity(a.children.len());
    for (p, c) in &a.children {
        let key = (*p, c.canonical());
        let j = (0..b_keys.len()).find(|&j| !used[j] && b_keys[j] == key)?;
        used[j] = true;
        children.push((j, iso(c, &b.children[j].1)?));
    }
    Some(Iso { formulas, children })
}
