//! Path axioms, their grammars, CYK membership and propagation applicability.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::formula::{diamonds_to_codes, Diamond};
use crate::sequent::{NodeAddress, PropagationGraph, Sequent};

/// `⟨?⟩₁…⟨?⟩ₙ X → ⟨?⟩ X`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathAxiom {
    pub sources: Vec<Diamond>,
    pub target: Diamond,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxiomParseError {
    #[error("axiom {0:?} needs the form \"<w|b>* -> <w|b>\"")]
    Shape(String),
    #[error("unknown diamond code {0:?}; use w or b")]
    Code(char),
}

pub fn parse_diamonds(s: &str) -> Result<Vec<Diamond>, AxiomParseError> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| Diamond::from_code(c).ok_or(AxiomParseError::Code(c)))
        .collect()
}

impl PathAxiom {
    pub fn new(sources: Vec<Diamond>, target: Diamond) -> PathAxiom {
        PathAxiom { sources, target }
    }

    /// Identity axiom `⟨?⟩X → ⟨?⟩X`.
    pub fn identity(d: Diamond) -> PathAxiom {
        PathAxiom::new(vec![d], d)
    }

    /// `w`/`b` form without spaces, e.g. `wbw->w`.
    pub fn code_string(&self) -> String {
        format!("{}->{}", diamonds_to_codes(&self.sources), self.target.code())
    }

    /// Sources reversed and colour-flipped, target flipped.
    pub fn invert(&self) -> PathAxiom {
        PathAxiom {
            sources: self.sources.iter().rev().map(|d| d.inverse()).collect(),
            target: self.target.inverse(),
        }
    }

    /// Every diamond colour swapped, order kept.
    pub fn flip_colours(&self) -> PathAxiom {
        PathAxiom {
            sources: self.sources.iter().map(|d| d.inverse()).collect(),
            target: self.target.inverse(),
        }
    }
}

impl fmt::Display for PathAxiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let src = diamonds_to_codes(&self.sources);
        if src.is_empty() {
            write!(f, "-> {}", self.target.code())
        } else {
            write!(f, "{} -> {}", src, self.target.code())
        }
    }
}

impl FromStr for PathAxiom {
    type Err = AxiomParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lhs, rhs) = s
            .split_once("->")
            .ok_or_else(|| AxiomParseError::Shape(s.to_string()))?;
        let target = parse_diamonds(rhs)?;
        if target.len() != 1 {
            return Err(AxiomParseError::Shape(s.to_string()));
        }
        Ok(PathAxiom::new(parse_diamonds(lhs)?, target[0]))
    }
}

/// Parses a comma- or semicolon-separated axiom list.
pub fn parse_axioms(s: &str) -> Result<Vec<PathAxiom>, AxiomParseError> {
    s.split([',', ';'])
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect()
}

/// `f ▷ g`: splice `f.sources` into every position of `g` holding `f.target`.
pub fn compose_axioms(f: &PathAxiom, g: &PathAxiom) -> BTreeSet<PathAxiom> {
    let mut out = BTreeSet::new();
    for (i, d) in g.sources.iter().enumerate() {
        if *d == f.target {
            let mut sources = g.sources[..i].to_vec();
            sources.extend_from_slice(&f.sources);
            sources.extend_from_slice(&g.sources[i + 1..]);
            out.insert(PathAxiom::new(sources, g.target));
        }
    }
    out
}

/// Grammar symbol: a terminal diamond or the nonterminal `C(d)` (F for ◇, P for ◆).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    T(Diamond),
    N(Diamond),
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sym::T(d) => f.write_str(d.symbol()),
            Sym::N(Diamond::White) => f.write_str("F"),
            Sym::N(Diamond::Black) => f.write_str("P"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grammar {
    /// Head nonterminal (by colour) and body.
    pub productions: BTreeSet<(Diamond, Vec<Sym>)>,
    pub start: Diamond,
}

impl Grammar {
    pub fn production_strings(&self) -> Vec<String> {
        self.productions
            .iter()
            .map(|(h, body)| {
                let rhs: String = if body.is_empty() {
                    "ε".into()
                } else {
                    body.iter().map(|s| s.to_string()).collect()
                };
                format!("{} -> {}", Sym::N(*h), rhs)
            })
            .collect()
    }

    pub fn accepts(&self, word: &[Diamond]) -> bool {
        cyk_membership(self, word)
    }
}

/// Productions `{F→◇, P→◆} ∪ {G(A) : A ∈ axioms ∪ I(axioms)}` with start `C(start)`.
pub fn build_grammar(axioms: &[PathAxiom], start: Diamond) -> Grammar {
    let mut productions = BTreeSet::from([
        (Diamond::White, vec![Sym::T(Diamond::White)]),
        (Diamond::Black, vec![Sym::T(Diamond::Black)]),
    ]);
    for ax in axioms.iter().flat_map(|a| [a.clone(), a.invert()]) {
        productions.insert((ax.target, ax.sources.iter().map(|d| Sym::N(*d)).collect()));
    }
    Grammar { productions, start }
}

/// Chomsky-style normal form with unit productions kept and closed at lookup.
#[derive(Debug, Clone)]
pub(crate) struct Cnf {
    n: usize,
    term: Vec<(usize, Diamond)>,
    bin: Vec<(usize, usize, usize)>,
    unit: Vec<(usize, usize)>,
    start: usize,
    nullable_start: bool,
}

fn nt(d: Diamond) -> usize {
    match d {
        Diamond::White => 0,
        Diamond::Black => 1,
    }
}

impl Cnf {
    pub(crate) fn new(g: &Grammar) -> Cnf {
        let mut nullable = [false; 2];
        loop {
            let mut changed = false;
            for (h, body) in &g.productions {
                let all = body.iter().all(|s| matches!(s, Sym::N(d) if nullable[nt(*d)]));
                if all && !nullable[nt(*h)] {
                    nullable[nt(*h)] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut cnf = Cnf {
            n: 2,
            term: Vec::new(),
            bin: Vec::new(),
            unit: Vec::new(),
            start: nt(g.start),
            nullable_start: nullable[nt(g.start)],
        };
        let mut bodies: BTreeSet<(usize, Vec<usize>)> = BTreeSet::new();
        for (h, body) in &g.productions {
            if let [Sym::T(t)] = body.as_slice() {
                cnf.term.push((nt(*h), *t));
                continue;
            }
            let syms: Vec<usize> = body
                .iter()
                .map(|s| match s {
                    Sym::N(d) => nt(*d),
                    Sym::T(_) => unreachable!("terminals only appear alone"),
                })
                .collect();
            // Every way of dropping nullable symbols.
            let optional: Vec<usize> = (0..syms.len()).filter(|&i| nullable[syms[i]]).collect();
            for mask in 0u64..(1u64 << optional.len()) {
                let dropped: BTreeSet<usize> = optional
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .map(|(_, &i)| i)
                    .collect();
                let kept: Vec<usize> = (0..syms.len())
                    .filter(|i| !dropped.contains(i))
                    .map(|i| syms[i])
                    .collect();
                if !kept.is_empty() {
                    bodies.insert((nt(*h), kept));
                }
            }
        }
        let mut fresh: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for (h, body) in bodies {
            if body.len() == 1 {
                if body[0] != h {
                    cnf.unit.push((h, body[0]));
                }
                continue;
            }
            let mut head = h;
            let mut rest = body.as_slice();
            while rest.len() > 2 {
                let tail = rest[1..].to_vec();
                let next = *fresh.entry(tail).or_insert_with(|| {
                    cnf.n += 1;
                    cnf.n - 1
                });
                cnf.bin.push((head, rest[0], next));
                head = next;
                rest = &rest[1..];
            }
            cnf.bin.push((head, rest[0], rest[1]));
        }
        cnf.bin.sort();
        cnf.bin.dedup();
        cnf
    }

    fn close_units(&self, set: &mut [bool]) {
        loop {
            let mut changed = false;
            for &(a, b) in &self.unit {
                if set[b] && !set[a] {
                    set[a] = true;
                    changed = true;
                }
            }
            if !changed {
                return;
            }
        }
    }

    pub(crate) fn accepts(&self, word: &[Diamond]) -> bool {
        let n = word.len();
        if n == 0 {
            return self.nullable_start;
        }
        // table[i][l] = nonterminals deriving word[i..i+l+1]
        let mut table = vec![vec![vec![false; self.n]; n]; n];
        for (i, t) in word.iter().enumerate() {
            for &(a, d) in &self.term {
                if d == *t {
                    table[i][0][a] = true;
                }
            }
            self.close_units(&mut table[i][0]);
        }
        for l in 1..n {
            for i in 0..n - l {
                let mut set = vec![false; self.n];
                for split in 0..l {
                    for &(a, b, c) in &self.bin {
                        if table[i][split][b] && table[i + split + 1][l - split - 1][c] {
                            set[a] = true;
                        }
                    }
                }
                self.close_units(&mut set);
                table[i][l] = set;
            }
        }
        table[0][n - 1][self.start]
    }

    /// Shortest label string (ties: ◇ before ◆) derivable from each nonterminal
    /// along a path `p → q` of the graph, for all `p`, `q`.
    pub(crate) fn path_table(&self, g: &PropagationGraph) -> Vec<Vec<Vec<Option<Vec<Diamond>>>>> {
        let m = g.nodes.len();
        let mut best: Vec<Vec<Vec<Option<Vec<Diamond>>>>> = vec![vec![vec![None; m]; m]; self.n];
        fn offer(slot: &mut Option<Vec<Diamond>>, cand: Vec<Diamond>) -> bool {
            let better = match slot {
                None => true,
                Some(cur) => (cand.len(), &cand) < (cur.len(), cur),
            };
            if better {
                *slot = Some(cand);
            }
            better
        }
        for &(p, q, d) in &g.edges {
            for &(a, t) in &self.term {
                if t == d {
                    offer(&mut best[a][p][q], vec![d]);
                }
            }
        }
        loop {
            let mut changed = false;
            for &(a, b) in &self.unit {
                for p in 0..m {
                    for q in 0..m {
                        if let Some(w) = best[b][p][q].clone() {
                            changed |= offer(&mut best[a][p][q], w);
                        }
                    }
                }
            }
            for &(a, b, c) in &self.bin {
                for p in 0..m {
                    for r in 0..m {
                        let Some(left) = best[b][p][r].clone() else { continue };
                        for q in 0..m {
                            if let Some(right) = &best[c][r][q] {
                                let mut w = left.clone();
                                w.extend_from_slice(right);
                                changed |= offer(&mut best[a][p][q], w);
                            }
                        }
                    }
                }
            }
            if !changed {
                return best;
            }
        }
    }
}

pub fn cyk_membership(g: &Grammar, word: &[Diamond]) -> bool {
    Cnf::new(g).accepts(word)
}

/// Shortest witnesses for every (diamond, source, target) triple of one sequent.
#[derive(Debug, Clone)]
pub struct PropagationTable {
    pub graph: PropagationGraph,
    white: Vec<Vec<Option<Vec<Diamond>>>>,
    black: Vec<Vec<Option<Vec<Diamond>>>>,
}

impl PropagationTable {
    /// Witness for propagating a `d`-diamond body from node `i` to node `j`.
    pub fn witness(&self, d: Diamond, i: usize, j: usize) -> Option<&Vec<Diamond>> {
        match d {
            Diamond::White => self.white[i][j].as_ref(),
            Diamond::Black => self.black[i][j].as_ref(),
        }
    }
}

/// Both colour grammars of an axiom set, prepared once.
#[derive(Debug, Clone)]
pub struct PathOracle {
    pub axioms: Vec<PathAxiom>,
    white: Cnf,
    black: Cnf,
}

impl PathOracle {
    pub fn new(axioms: &[PathAxiom]) -> PathOracle {
        PathOracle {
            axioms: axioms.to_vec(),
            white: Cnf::new(&build_grammar(axioms, Diamond::White)),
            black: Cnf::new(&build_grammar(axioms, Diamond::Black)),
        }
    }

    pub fn accepts(&self, d: Diamond, word: &[Diamond]) -> bool {
        match d {
            Diamond::White => self.white.accepts(word),
            Diamond::Black => self.black.accepts(word),
        }
    }

    pub fn table(&self, s: &Sequent) -> PropagationTable {
        let graph = s.propagation_graph();
        let m = graph.nodes.len();
        let project = |cnf: &Cnf| {
            let mut t = cnf.path_table(&graph).swap_remove(cnf.start);
            if cnf.nullable_start {
                for (i, row) in t.iter_mut().enumerate().take(m) {
                    row[i] = Some(Vec::new());
                }
            }
            t
        };
        PropagationTable {
            white: project(&self.white),
            black: project(&self.black),
            graph,
        }
    }

    /// True when the label string is in the language and labels a path `i → j`.
    pub fn witness_valid(&self, s: &Sequent, i: &NodeAddress, j: &NodeAddress, d: Diamond, word: &[Diamond]) -> bool {
        let g = s.propagation_graph();
        match (g.index_of(i), g.index_of(j)) {
            (Some(a), Some(b)) => self.accepts(d, word) && g.run(a, word).contains(&b),
            _ => false,
        }
    }
}

/// Decides whether a `d`-diamond body may be propagated from `i` to `j`;
/// returns the shortest witness label string when it can.
pub fn propagation_applicable(
    s: &Sequent,
    i: &NodeAddress,
    j: &NodeAddress,
    d: Diamond,
    axioms: &[PathAxiom],
) -> Option<Vec<Diamond>> {
    let oracle = PathOracle::new(axioms);
    let table = oracle.table(s);
    let a = table.graph.index_of(i)?;
    let b = table.graph.index_of(j)?;
    table.witness(d, a, b).cloned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::Diamond::{Black as B, White as W};
    use proptest::prelude::*;

    fn ax(s: &str) -> PathAxiom {
        s.parse().unwrap()
    }

    fn word(s: &str) -> Vec<Diamond> {
        parse_diamonds(s).unwrap()
    }

    fn all_words(max: usize) -> Vec<Vec<Diamond>> {
        let mut out = vec![vec![]];
        let mut layer = vec![vec![]];
        for _ in 0..max {
            layer = layer
                .iter()
                .flat_map(|w: &Vec<Diamond>| {
                    [W, B].into_iter().map(move |d| {
                        let mut w = w.clone();
                        w.push(d);
                        w
                    })
                })
                .collect();
            out.extend(layer.iter().cloned());
        }
        out
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(ax("wbw -> w").invert(), ax("bwb -> b"));
        assert_eq!(ax("w -> w").invert(), ax("b -> b"));
        assert_eq!(ax("ww -> w").invert(), ax("bb -> b"));
        assert_eq!(ax("-> w").to_string(), "-> w");
    }

    #[test]
    fn composition_examples() {
        assert_eq!(
            compose_axioms(&ax("ww->w"), &ax("ww->w")),
            BTreeSet::from([ax("www->w")])
        );
        assert_eq!(compose_axioms(&ax("w->b"), &ax("b->w")), BTreeSet::from([ax("w->w")]));
        assert!(compose_axioms(&ax("ww->w"), &ax("bb->b")).is_empty());
    }

    #[test]
    fn grammar_examples() {
        let g = build_grammar(&[ax("bw -> w")], W);
        assert_eq!(g.production_strings(), vec!["F -> ◇", "F -> PF", "P -> ◆", "P -> PF"]);
        let g = build_grammar(&[], W);
        assert_eq!(g.productions.len(), 2);
        assert!(g.accepts(&word("w")));
        assert!(!g.accepts(&word("ww")));
        let g = build_grammar(&[ax("-> w"), ax("ww -> w")], W);
        let prods = g.production_strings();
        for p in ["F -> ε", "P -> ε", "F -> FF", "P -> PP"] {
            assert!(prods.contains(&p.to_string()), "{p}");
        }
        assert!(g.accepts(&[]));
    }

    #[test]
    fn cyk_examples() {
        let trans = build_grammar(&[ax("ww -> w")], W);
        assert!(trans.accepts(&word("www")));
        assert!(!trans.accepts(&word("wb")));
        let eucl = build_grammar(&[ax("bw -> w")], W);
        assert!(eucl.accepts(&word("bw")));
        assert!(!eucl.accepts(&word("wb")));
        let s5 = build_grammar(&[ax("-> w"), ax("bw -> w")], W);
        for w in all_words(5) {
            assert!(s5.accepts(&w));
        }
    }

    fn matches(re: &regex::Regex, w: &[Diamond]) -> bool {
        re.is_match(&diamonds_to_codes(w))
    }

    #[test]
    fn cyk_agrees_with_closed_forms() {
        let cases = [
            (vec![ax("ww -> w")], r"^ww*$"),
            (vec![ax("bw -> w")], r"^(w|b(b|w)*w)$"),
            (vec![ax("-> w"), ax("ww -> w"), ax("w -> b")], r"^(w|b)*$"),
            (vec![ax("-> w"), ax("bw -> w")], r"^(w|b)*$"),
            (vec![ax("-> w"), ax("ww -> w")], r"^w*$"),
        ];
        for (axioms, re) in cases {
            let g = build_grammar(&axioms, W);
            let re = regex::Regex::new(re).unwrap();
            for w in all_words(8) {
                assert_eq!(g.accepts(&w), matches(&re, &w), "{axioms:?} {w:?}");
            }
        }
    }

    // Bounded closure of axioms ∪ I(axioms) ∪ identities under composition.
    fn closure(axioms: &[PathAxiom], rounds: usize, max_len: usize) -> BTreeSet<PathAxiom> {
        let mut set: BTreeSet<PathAxiom> = axioms
            .iter()
            .flat_map(|a| [a.clone(), a.invert()])
            .chain([PathAxiom::identity(W), PathAxiom::identity(B)])
            .collect();
        for _ in 0..rounds {
            let snapshot: Vec<_> = set.iter().cloned().collect();
            for f in &snapshot {
                for g in &snapshot {
                    for h in compose_axioms(f, g) {
                        if h.sources.len() <= max_len {
                            set.insert(h);
                        }
                    }
                }
            }
        }
        set
    }

    #[test]
    fn grammar_matches_bounded_completion() {
        let sets = [
            vec![ax("ww -> w")],
            vec![ax("bw -> w")],
            vec![ax("wbw -> w")],
            vec![ax("-> w"), ax("bw -> w")],
            vec![ax("w -> b")],
        ];
        for axioms in sets {
            let clo = closure(&axioms, 6, 6);
            for start in [W, B] {
                let g = build_grammar(&axioms, start);
                for a in clo.iter().filter(|a| a.target == start) {
                    assert!(g.accepts(&a.sources), "{axioms:?}: {a}");
                }
                for w in all_words(6) {
                    if g.accepts(&w) {
                        assert!(clo.contains(&PathAxiom::new(w.clone(), start)), "{axioms:?}: {w:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn colour_symmetry() {
        let axioms = [ax("wbw -> w"), ax("bb -> w")];
        let flipped: Vec<_> = axioms.iter().map(|a| a.flip_colours()).collect();
        let g1 = build_grammar(&axioms, B);
        let g2 = build_grammar(&flipped, W);
        let relabel = |s: &Sym| match s {
            Sym::T(d) => Sym::T(d.inverse()),
            Sym::N(d) => Sym::N(d.inverse()),
        };
        let mapped: BTreeSet<_> = g1
            .productions
            .iter()
            .map(|(h, b)| (h.inverse(), b.iter().map(relabel).collect::<Vec<_>>()))
            .collect();
        assert_eq!(mapped, g2.productions);
    }

    #[test]
    fn applicability_examples() {
        let s: Sequent = "a, o{b}".parse().unwrap();
        let r = NodeAddress::root();
        let c = NodeAddress(vec![0]);
        assert_eq!(propagation_applicable(&s, &r, &c, W, &[]), Some(word("w")));
        assert_eq!(propagation_applicable(&s, &c, &r, W, &[]), None);
        let single: Sequent = "a".parse().unwrap();
        assert_eq!(propagation_applicable(&single, &r, &r, W, &[ax("bw -> w")]), None);
        assert_eq!(propagation_applicable(&single, &r, &r, W, &[ax("-> w")]), Some(vec![]));
    }

    #[test]
    fn wbw_scenarios() {
        let axioms = [ax("wbw -> w")];
        let oracle = PathOracle::new(&axioms);
        let r = NodeAddress::root();
        let n = |p: &[usize]| NodeAddress(p.to_vec());
        let cases: [(&str, NodeAddress, NodeAddress); 4] = [
            ("t, <>a, o{d1, b{d2, o{d3}}}", r.clone(), n(&[0, 0, 0])),
            ("t, <>a, o{d1, b{d2}}", r.clone(), n(&[0])),
            ("t, b{d1, <>a, o{d2}}", n(&[0]), n(&[0, 0])),
            ("t, b{d, <>a}", n(&[0]), r.clone()),
        ];
        for (text, from, to) in cases {
            let s: Sequent = text.parse().unwrap();
            assert!(oracle.witness_valid(&s, &from, &to, W, &word("wbw")), "{text}");
            let w = propagation_applicable(&s, &from, &to, W, &axioms).unwrap();
            assert!(oracle.witness_valid(&s, &from, &to, W, &w));
            assert!(w.len() <= 3);
        }
        // Without the extra axiom only the direct edge is available.
        let s: Sequent = "t, b{d1, <>a, o{d2}}".parse().unwrap();
        assert_eq!(
            propagation_applicable(&s, &n(&[0]), &n(&[0, 0]), W, &[]),
            Some(word("w"))
        );
        let s: Sequent = "t, <>a, o{d1, b{d2, o{d3}}}".parse().unwrap();
        assert_eq!(propagation_applicable(&s, &r, &n(&[0, 0, 0]), W, &[]), None);
    }

    // All label strings of paths from `i` to `j` up to `max` edges.
    fn path_words(g: &PropagationGraph, i: usize, j: usize, max: usize) -> Vec<Vec<Diamond>> {
        let mut out = Vec::new();
        let mut frontier = vec![(i, vec![])];
        for _ in 0..=max {
            let mut next = Vec::new();
            for (at, w) in frontier {
                if at == j {
                    out.push(w.clone());
                }
                for &(p, q, d) in &g.edges {
                    if p == at && w.len() < max {
                        let mut w2 = w.clone();
                        w2.push(d);
                        next.push((q, w2));
                    }
                }
            }
            frontier = next;
        }
        out
    }

    pub(crate) fn arb_tree(max_nodes: usize) -> impl Strategy<Value = Sequent> {
        // Parent choice for each non-root node plus its polarity.
        prop::collection::vec((any::<prop::sample::Index>(), any::<bool>()), 0..max_nodes).prop_map(|spec| {
            let mut addrs = vec![NodeAddress::root()];
            let mut s = Sequent::new();
            for (idx, bullet) in spec {
                let parent = addrs[idx.index(addrs.len())].clone();
                let pol = if bullet {
                    crate::sequent::Polarity::Bullet
                } else {
                    crate::sequent::Polarity::Circle
                };
                let node = s.node_mut(&parent).unwrap();
                node.children.push((pol, Sequent::new()));
                addrs.push(parent.child(node.children.len() - 1));
            }
            s
        })
    }

    proptest! {
        #[test]
        fn invert_is_involutive(src in prop::collection::vec(any::<bool>(), 0..6), t in any::<bool>()) {
            let d = |b: bool| if b { B } else { W };
            let a = PathAxiom::new(src.into_iter().map(d).collect(), d(t));
            prop_assert_eq!(a.invert().invert(), a);
        }

        #[test]
        fn applicability_matches_brute_force(s in arb_tree(5), which in 0usize..3) {
            let sets = [vec![ax("ww -> w")], vec![ax("bw -> w")], vec![ax("-> w"), ax("bw -> w")]];
            let axioms = &sets[which];
            let oracle = PathOracle::new(axioms);
            let table = oracle.table(&s);
            let g = &table.graph;
            for i in 0..g.nodes.len() {
                for j in 0..g.nodes.len() {
                    for d in [W, B] {
                        let brute = path_words(g, i, j, 8).into_iter().filter(|w| oracle.accepts(d, w)).min_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
                        prop_assert_eq!(table.witness(d, i, j).cloned(), brute);
                    }
                }
            }
        }
    }
}
