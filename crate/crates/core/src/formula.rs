//! Tense-logic formulas in negation normal form.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Reserved atom used to define the constants ⊥ and ⊤.
pub const RESERVED_ATOM: &str = "a0";

/// A formula in negation normal form. Negation only occurs on atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Atom(String),
    NegAtom(String),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Box(Box<Formula>),
    BlackBox(Box<Formula>),
    Dia(Box<Formula>),
    BlackDia(Box<Formula>),
}

/// Colour of a diamond: white is ◇ (future), black is ◆ (past).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Diamond {
    White,
    Black,
}

impl Diamond {
    pub fn inverse(self) -> Diamond {
        match self {
            Diamond::White => Diamond::Black,
            Diamond::Black => Diamond::White,
        }
    }

    /// Single-letter code used in axiom strings and proof witnesses.
    pub fn code(self) -> char {
        match self {
            Diamond::White => 'w',
            Diamond::Black => 'b',
        }
    }

    pub fn from_code(c: char) -> Option<Diamond> {
        match c {
            'w' => Some(Diamond::White),
            'b' => Some(Diamond::Black),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Diamond::White => "◇",
            Diamond::Black => "◆",
        }
    }

    /// Prefix `body` with this diamond.
    pub fn apply(self, body: Formula) -> Formula {
        match self {
            Diamond::White => Formula::dia(body),
            Diamond::Black => Formula::bdia(body),
        }
    }
}

/// Renders a diamond string such as `◇◆◇`.
pub fn diamonds_to_string(ds: &[Diamond]) -> String {
    ds.iter().map(|d| d.symbol()).collect()
}

/// Renders a diamond string in the `w`/`b` code alphabet.
pub fn diamonds_to_codes(ds: &[Diamond]) -> String {
    ds.iter().map(|d| d.code()).collect()
}

impl Formula {
    pub fn atom(name: &str) -> Formula {
        Formula::Atom(name.to_string())
    }

    pub fn neg_atom(name: &str) -> Formula {
        Formula::NegAtom(name.to_string())
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn boxed(a: Formula) -> Formula {
        Formula::Box(Box::new(a))
    }

    pub fn bbox(a: Formula) -> Formula {
        Formula::BlackBox(Box::new(a))
    }

    pub fn dia(a: Formula) -> Formula {
        Formula::Dia(Box::new(a))
    }

    pub fn bdia(a: Formula) -> Formula {
        Formula::BlackDia(Box::new(a))
    }

    /// `a -> b`, i.e. `nnf(¬a) ∨ b`.
    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::or(a.negate(), b)
    }

    /// ⊥ is `a0 ∧ ¬a0`.
    pub fn bottom() -> Formula {
        Formula::and(Formula::atom(RESERVED_ATOM), Formula::neg_atom(RESERVED_ATOM))
    }

    /// ⊤ is `a0 ∨ ¬a0`.
    pub fn top() -> Formula {
        Formula::or(Formula::atom(RESERVED_ATOM), Formula::neg_atom(RESERVED_ATOM))
    }

    /// Left-nested disjunction of `fs`; the empty disjunction is ⊥.
    pub fn disjunction(fs: impl IntoIterator<Item = Formula>) -> Formula {
        fs.into_iter().reduce(Formula::or).unwrap_or_else(Formula::bottom)
    }

    /// The NNF of the negation of `self`.
    pub fn negate(&self) -> Formula {
        match self {
            Formula::Atom(a) => Formula::NegAtom(a.clone()),
            Formula::NegAtom(a) => Formula::Atom(a.clone()),
            Formula::Or(a, b) => Formula::and(a.negate(), b.negate()),
            Formula::And(a, b) => Formula::or(a.negate(), b.negate()),
            Formula::Box(a) => Formula::dia(a.negate()),
            Formula::Dia(a) => Formula::boxed(a.negate()),
            Formula::BlackBox(a) => Formula::bdia(a.negate()),
            Formula::BlackDia(a) => Formula::bbox(a.negate()),
        }
    }

    pub fn is_literal(&self) -> bool {
        matches!(self, Formula::Atom(_) | Formula::NegAtom(_))
    }

    /// True when `self` and `other` are a complementary pair `a`, `¬a`.
    pub fn clashes_with(&self, other: &Formula) -> bool {
        match (self, other) {
            (Formula::Atom(a), Formula::NegAtom(b)) | (Formula::NegAtom(a), Formula::Atom(b)) => a == b,
            _ => false,
        }
    }

    /// The diamond colour and body of a ◇/◆ formula.
    pub fn as_diamond(&self) -> Option<(Diamond, &Formula)> {
        match self {
            Formula::Dia(a) => Some((Diamond::White, a)),
            Formula::BlackDia(a) => Some((Diamond::Black, a)),
            _ => None,
        }
    }

    /// Number of connective and atom nodes.
    pub fn size(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => 1,
            Formula::Or(a, b) | Formula::And(a, b) => 1 + a.size() + b.size(),
            Formula::Box(a) | Formula::BlackBox(a) | Formula::Dia(a) | Formula::BlackDia(a) => 1 + a.size(),
        }
    }

    /// Maximum nesting of modal operators.
    pub fn degree(&self) -> usize {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => 0,
            Formula::Or(a, b) | Formula::And(a, b) => a.degree().max(b.degree()),
            Formula::Box(a) | Formula::BlackBox(a) | Formula::Dia(a) | Formula::BlackDia(a) => 1 + a.degree(),
        }
    }

    /// `self` together with all of its subformulas.
    pub fn subformulas(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_subformulas(&mut out);
        out
    }

    pub(crate) fn collect_subformulas(&self, out: &mut BTreeSet<Formula>) {
        if !out.insert(self.clone()) {
            return;
        }
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => {}
            Formula::Or(a, b) | Formula::And(a, b) => {
                a.collect_subformulas(out);
                b.collect_subformulas(out);
            }
            Formula::Box(a) | Formula::BlackBox(a) | Formula::Dia(a) | Formula::BlackDia(a) => {
                a.collect_subformulas(out)
            }
        }
    }

    /// Atom names occurring in the formula.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    pub(crate) fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Atom(a) | Formula::NegAtom(a) => {
                out.insert(a.clone());
            }
            Formula::Or(a, b) | Formula::And(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
            Formula::Box(a) | Formula::BlackBox(a) | Formula::Dia(a) | Formula::BlackDia(a) => a.collect_atoms(out),
        }
    }

    /// True when the formula contains ■ or ◆.
    pub fn has_black(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::NegAtom(_) => false,
            Formula::BlackBox(_) | Formula::BlackDia(_) => true,
            Formula::Or(a, b) | Formula::And(a, b) => a.has_black() || b.has_black(),
            Formula::Box(a) | Formula::Dia(a) => a.has_black(),
        }
    }

    /// Pretty-printed with the Unicode connectives.
    pub fn to_unicode(&self) -> String {
        let mut s = String::new();
        self.write_prec(&mut s, 0, true);
        s
    }

    fn prec(&self) -> u8 {
        match self {
            Formula::Or(..) => 1,
            Formula::And(..) => 2,
            _ => 3,
        }
    }

    fn write_prec(&self, out: &mut String, min: u8, unicode: bool) {
        let paren = self.prec() < min;
        if paren {
            out.push('(');
        }
        match self {
            Formula::Atom(a) => out.push_str(a),
            Formula::NegAtom(a) => {
                out.push_str(if unicode { "¬" } else { "~" });
                out.push_str(a);
            }
            Formula::Or(a, b) | Formula::And(a, b) => {
                let p = self.prec();
                a.write_prec(out, p, unicode);
                let op = match (self, unicode) {
                    (Formula::Or(..), true) => " ∨ ",
                    (Formula::Or(..), false) => " | ",
                    (_, true) => " ∧ ",
                    (_, false) => " & ",
                };
                out.push_str(op);
                b.write_prec(out, p + 1, unicode);
            }
            Formula::Box(a) | Formula::BlackBox(a) | Formula::Dia(a) | Formula::BlackDia(a) => {
                let op = match (self, unicode) {
                    (Formula::Box(_), true) => "□",
                    (Formula::Box(_), false) => "[]",
                    (Formula::BlackBox(_), true) => "■",
                    (Formula::BlackBox(_), false) => "[*]",
                    (Formula::Dia(_), true) => "◇",
                    (Formula::Dia(_), false) => "<>",
                    (_, true) => "◆",
                    (_, false) => "<*>",
                };
                out.push_str(op);
                a.write_prec(out, 3, unicode);
            }
        }
        if paren {
            out.push(')');
        }
    }
}

/// ASCII rendering that [`parse`] reads back to the same formula.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_prec(&mut s, 0, false);
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unexpected character {ch:?} at position {pos}")]
    BadChar { pos: usize, ch: char },
    #[error("operator at position {pos} is missing an operand")]
    MissingOperand { pos: usize },
    #[error("unexpected {found} at position {pos}")]
    Unexpected { pos: usize, found: String },
    #[error("parenthesis opened at position {pos} is never closed")]
    Unclosed { pos: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Atom(String),
    Tilde,
    And,
    Or,
    Arrow,
    Box,
    Dia,
    BBox,
    BDia,
    LParen,
    RParen,
    Comma,
    LBrace,
    RBrace,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Atom(a) => format!("atom {a}"),
            Tok::Tilde => "'~'".into(),
            Tok::And => "'&'".into(),
            Tok::Or => "'|'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Box => "'[]'".into(),
            Tok::Dia => "'<>'".into(),
            Tok::BBox => "'[*]'".into(),
            Tok::BDia => "'<*>'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
        }
    }
}

pub(crate) fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes: Vec<(usize, char)> = text.char_indices().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let rest_starts = |i: usize, pat: &str| -> bool {
        let s: String = bytes[i..].iter().take(pat.chars().count()).map(|c| c.1).collect();
        s == pat
    };
    while i < bytes.len() {
        let (pos, c) = bytes[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (tok, len) = if c.is_ascii_lowercase() {
            let mut j = i;
            let mut name = String::new();
            while j < bytes.len() && (bytes[j].1.is_ascii_alphanumeric() || bytes[j].1 == '_') {
                name.push(bytes[j].1);
                j += 1;
            }
            (Tok::Atom(name), j - i)
        } else if rest_starts(i, "[*]") {
            (Tok::BBox, 3)
        } else if rest_starts(i, "<*>") {
            (Tok::BDia, 3)
        } else if rest_starts(i, "[]") {
            (Tok::Box, 2)
        } else if rest_starts(i, "<>") {
            (Tok::Dia, 2)
        } else if rest_starts(i, "->") {
            (Tok::Arrow, 2)
        } else {
            let t = match c {
                '~' => Tok::Tilde,
                '&' => Tok::And,
                '|' => Tok::Or,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                _ => return Err(ParseError::BadChar { pos, ch: c }),
            };
            (t, 1)
        };
        toks.push((pos, tok));
        i += len;
    }
    Ok(toks)
}

/// Recursive-descent parser over a token stream; shared with the sequent syntax.
pub(crate) struct TokenParser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl TokenParser {
    pub(crate) fn new(text: &str) -> Result<TokenParser, ParseError> {
        Ok(TokenParser {
            toks: lex(text)?,
            at: 0,
            end: text.len(),
        })
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|t| &t.1)
    }

    pub(crate) fn peek_nth(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.at + n).map(|t| &t.1)
    }

    pub(crate) fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |t| t.0)
    }

    pub(crate) fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|t| t.1.clone());
        self.at += 1;
        t
    }

    pub(crate) fn at_end(&self) -> bool {
        self.at >= self.toks.len()
    }

    pub(crate) fn unexpected(&self) -> ParseError {
        match self.toks.get(self.at) {
            Some((pos, t)) => ParseError::Unexpected {
                pos: *pos,
                found: t.describe(),
            },
            None => ParseError::Unexpected {
                pos: self.end,
                found: "end of input".into(),
            },
        }
    }

    pub(crate) fn formula(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disj()?;
        if self.peek() == Some(&Tok::Arrow) {
            let pos = self.pos();
            self.bump();
            if self.starts_formula() {
                let rhs = self.formula()?;
                return Ok(Formula::implies(lhs, rhs));
            }
            return Err(ParseError::MissingOperand { pos });
        }
        Ok(lhs)
    }

    fn starts_formula(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Atom(_) | Tok::Tilde | Tok::Box | Tok::Dia | Tok::BBox | Tok::BDia | Tok::LParen)
        )
    }

    fn disj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.conj()?;
        while self.peek() == Some(&Tok::Or) {
            let pos = self.pos();
            self.bump();
            if !self.starts_formula() {
                return Err(ParseError::MissingOperand { pos });
            }
            acc = Formula::or(acc, self.conj()?);
        }
        Ok(acc)
    }

    fn conj(&mut self) -> Result<Formula, ParseError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            let pos = self.pos();
            self.bump();
            if !self.starts_formula() {
                return Err(ParseError::MissingOperand { pos });
            }
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        let pos = self.pos();
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.unexpected()),
        };
        let wrap: Option<fn(Formula) -> Formula> = match tok {
            Tok::Tilde => Some(|f| f.negate()),
            Tok::Box => Some(Formula::boxed),
            Tok::Dia => Some(Formula::dia),
            Tok::BBox => Some(Formula::bbox),
            Tok::BDia => Some(Formula::bdia),
            _ => None,
        };
        if let Some(wrap) = wrap {
            self.bump();
            if !self.starts_formula() {
                return Err(ParseError::MissingOperand { pos });
            }
            return Ok(wrap(self.unary()?));
        }
        match tok {
            Tok::Atom(a) => {
                self.bump();
                Ok(Formula::Atom(a))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.bump();
                        Ok(f)
                    }
                    None => Err(ParseError::Unclosed { pos }),
                    Some(_) => Err(self.unexpected()),
                }
            }
            _ => Err(self.unexpected()),
        }
    }
}

/// Parses the ASCII formula syntax, eliminating `->` and `~`.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = TokenParser::new(text)?;
    let f = p.formula()?;
    if !p.at_end() {
        return Err(p.unexpected());
    }
    Ok(f)
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a() -> Formula {
        Formula::atom("a")
    }

    fn b() -> Formula {
        Formula::atom("b")
    }

    // Independent structural-recursion oracle for negation.
    fn oracle_neg(f: &Formula) -> Formula {
        match f {
            Formula::Atom(x) => Formula::NegAtom(x.clone()),
            Formula::NegAtom(x) => Formula::Atom(x.clone()),
            Formula::And(l, r) => Formula::Or(Box::new(oracle_neg(l)), Box::new(oracle_neg(r))),
            Formula::Or(l, r) => Formula::And(Box::new(oracle_neg(l)), Box::new(oracle_neg(r))),
            Formula::Box(x) => Formula::Dia(Box::new(oracle_neg(x))),
            Formula::Dia(x) => Formula::Box(Box::new(oracle_neg(x))),
            Formula::BlackBox(x) => Formula::BlackDia(Box::new(oracle_neg(x))),
            Formula::BlackDia(x) => Formula::BlackBox(Box::new(oracle_neg(x))),
        }
    }

    pub(crate) fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof!["[abc]".prop_map(Formula::Atom), "[abc]".prop_map(Formula::NegAtom),];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::or(x, y)),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| Formula::and(x, y)),
                inner.clone().prop_map(Formula::boxed),
                inner.clone().prop_map(Formula::bbox),
                inner.clone().prop_map(Formula::dia),
                inner.prop_map(Formula::bdia),
            ]
        })
    }

    #[test]
    fn parse_excluded_middle() {
        assert_eq!(parse("a | ~a").unwrap(), Formula::or(a(), Formula::neg_atom("a")));
    }

    #[test]
    fn parse_residuation_axiom() {
        let f = parse("a -> []<*>a").unwrap();
        assert_eq!(
            f,
            Formula::or(Formula::neg_atom("a"), Formula::boxed(Formula::bdia(a())))
        );
    }

    #[test]
    fn parse_negated_k_axiom() {
        let f = parse("~([](a -> b) -> ([]a -> []b))").unwrap();
        assert!(matches!(f, Formula::And(..)));
        let expected = Formula::or(
            Formula::or(
                Formula::dia(Formula::and(a(), Formula::neg_atom("b"))),
                Formula::dia(Formula::neg_atom("a")),
            ),
            Formula::boxed(b()),
        );
        // Same formula up to the association of the disjunction.
        let renormalised = f.negate();
        let mut lhs = Vec::new();
        flatten_or(&renormalised, &mut lhs);
        let mut rhs = Vec::new();
        flatten_or(&expected, &mut rhs);
        assert_eq!(lhs, rhs);
    }

    fn flatten_or(f: &Formula, out: &mut Vec<Formula>) {
        if let Formula::Or(l, r) = f {
            flatten_or(l, out);
            flatten_or(r, out);
        } else {
            out.push(f.clone());
        }
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse("a & b | c").unwrap(), parse("(a & b) | c").unwrap());
        assert_eq!(
            parse("a -> b -> c").unwrap(),
            Formula::implies(a(), Formula::implies(b(), Formula::atom("c")))
        );
        assert_eq!(parse("[]a & b").unwrap(), Formula::and(Formula::boxed(a()), b()));
        assert_eq!(
            parse("<*>[*]x_1").unwrap(),
            Formula::bdia(Formula::bbox(Formula::atom("x_1")))
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        assert_eq!(parse("a &"), Err(ParseError::MissingOperand { pos: 2 }));
        assert_eq!(parse("[]"), Err(ParseError::MissingOperand { pos: 0 }));
        assert_eq!(parse("(a | b"), Err(ParseError::Unclosed { pos: 0 }));
        assert_eq!(parse("a # b"), Err(ParseError::BadChar { pos: 2, ch: '#' }));
        assert!(matches!(parse("a b"), Err(ParseError::Unexpected { pos: 2, .. })));
        assert!(matches!(parse("A"), Err(ParseError::BadChar { pos: 0, .. })));
    }

    #[test]
    fn negation_examples() {
        assert_eq!(a().negate(), Formula::neg_atom("a"));
        assert_eq!(Formula::boxed(a()).negate(), Formula::dia(Formula::neg_atom("a")));
        let f = Formula::boxed(Formula::bdia(a()));
        let n = f.negate();
        assert_eq!(n, oracle_neg(&f));
        assert_eq!(n, Formula::dia(Formula::bbox(Formula::neg_atom("a"))));
        assert_eq!(n.negate(), f);
    }

    #[test]
    fn degree_examples() {
        assert_eq!(Formula::atom("p").degree(), 0);
        assert_eq!(Formula::and(a(), b()).degree(), 0);
        let f = Formula::boxed(Formula::and(a(), Formula::dia(b())));
        assert_eq!(f.degree(), 2);
    }

    #[test]
    fn subformula_examples() {
        assert_eq!(a().subformulas(), BTreeSet::from([a()]));
        let or = Formula::or(a(), b());
        assert_eq!(or.subformulas(), BTreeSet::from([or.clone(), a(), b()]));
        let f = Formula::boxed(Formula::bdia(a()));
        assert_eq!(f.subformulas(), BTreeSet::from([f.clone(), Formula::bdia(a()), a()]));
    }

    #[test]
    fn constants_use_reserved_atom() {
        assert_eq!(Formula::bottom().to_string(), "a0 & ~a0");
        assert_eq!(Formula::top().to_string(), "a0 | ~a0");
        assert_eq!(Formula::disjunction(vec![]), Formula::bottom());
    }

    #[test]
    fn unicode_rendering() {
        let f = parse("<>(a & ~b) | [*]c").unwrap();
        assert_eq!(f.to_unicode(), "◇(a ∧ ¬b) ∨ ■c");
    }

    proptest! {
        #[test]
        fn negation_is_involutive(f in arb_formula()) {
            prop_assert_eq!(f.negate().negate(), f.clone());
            prop_assert_eq!(f.negate(), oracle_neg(&f));
        }

        #[test]
        fn negation_preserves_degree(f in arb_formula()) {
            prop_assert_eq!(f.negate().degree(), f.degree());
        }

        #[test]
        fn subformulas_bounded_by_size(f in arb_formula()) {
            prop_assert!(f.subformulas().len() <= f.size());
        }

        #[test]
        fn print_then_parse_is_identity(f in arb_formula()) {
            prop_assert_eq!(parse(&f.to_string()).unwrap(), f);
        }
    }
}
