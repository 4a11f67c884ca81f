//! Regular expressions over clause identifiers.

mod elim;
mod multipath;

use std::collections::BTreeSet;
use std::fmt;

use crate::chc::Cfg;

pub use elim::path_expression;
pub use multipath::{eliminate_multipath, has_alt_under_star, StarOrder};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegExpr {
    Empty,
    Epsilon,
    Letter(String),
    Concat(Box<RegExpr>, Box<RegExpr>),
    Alt(Box<RegExpr>, Box<RegExpr>),
    Star(Box<RegExpr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegexError {
    #[error("clause {0} labels no edge of the graph")]
    UnknownLabel(String),
    #[error("regex syntax error at offset {0}: {1}")]
    Syntax(usize, String),
}

impl RegExpr {
    pub fn letter(c: impl Into<String>) -> Self {
        RegExpr::Letter(c.into())
    }

    /// Concatenation, right-associated, with `∅` absorbing and `ε` neutral.
    pub fn concat(a: RegExpr, b: RegExpr) -> RegExpr {
        match (a, b) {
            (RegExpr::Empty, _) | (_, RegExpr::Empty) => RegExpr::Empty,
            (RegExpr::Epsilon, e) | (e, RegExpr::Epsilon) => e,
            (RegExpr::Concat(x, y), b) => RegExpr::concat(*x, RegExpr::concat(*y, b)),
            (a, b) => RegExpr::Concat(Box::new(a), Box::new(b)),
        }
    }

    /// Alternation, right-associated, with `∅` neutral and duplicate
    /// alternatives removed.
    pub fn alt(a: RegExpr, b: RegExpr) -> RegExpr {
        match (a, b) {
            (RegExpr::Empty, e) | (e, RegExpr::Empty) => e,
            (RegExpr::Alt(x, y), b) => RegExpr::alt(*x, RegExpr::alt(*y, b)),
            (a, b) => {
                if b.alternatives().contains(&&a) {
                    b
                } else if matches!((&a, &b), (RegExpr::Epsilon, RegExpr::Star(_))) {
                    b
                } else {
                    RegExpr::Alt(Box::new(a), Box::new(b))
                }
            }
        }
    }

    pub fn star(e: RegExpr) -> RegExpr {
        match e {
            RegExpr::Empty | RegExpr::Epsilon => RegExpr::Epsilon,
            s @ RegExpr::Star(_) => s,
            e => RegExpr::Star(Box::new(e)),
        }
    }

    pub fn concat_all(es: impl IntoIterator<Item = RegExpr>) -> RegExpr {
        let v: Vec<RegExpr> = es.into_iter().collect();
        v.into_iter().rev().fold(RegExpr::Epsilon, |acc, e| RegExpr::concat(e, acc))
    }

    pub fn alt_all(es: impl IntoIterator<Item = RegExpr>) -> RegExpr {
        let v: Vec<RegExpr> = es.into_iter().collect();
        v.into_iter().rev().fold(RegExpr::Empty, |acc, e| RegExpr::alt(e, acc))
    }

    /// Top-level alternatives of a right-associated alternation.
    pub fn alternatives(&self) -> Vec<&RegExpr> {
        match self {
            RegExpr::Alt(a, b) => {
                let mut v = a.alternatives();
                v.extend(b.alternatives());
                v
            }
            e => vec![e],
        }
    }

    pub fn nullable(&self) -> bool {
        match self {
            RegExpr::Empty | RegExpr::Letter(_) => false,
            RegExpr::Epsilon | RegExpr::Star(_) => true,
            RegExpr::Concat(a, b) => a.nullable() && b.nullable(),
            RegExpr::Alt(a, b) => a.nullable() || b.nullable(),
        }
    }

    /// Letters that can start a word of the language.
    pub fn first(&self) -> BTreeSet<String> {
        match self {
            RegExpr::Empty | RegExpr::Epsilon => BTreeSet::new(),
            RegExpr::Letter(c) => [c.clone()].into(),
            RegExpr::Concat(a, b) => {
                let mut s = a.first();
                if a.nullable() {
                    s.extend(b.first());
                }
                s
            }
            RegExpr::Alt(a, b) => {
                let mut s = a.first();
                s.extend(b.first());
                s
            }
            RegExpr::Star(a) => a.first(),
        }
    }

    pub fn letters(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.collect_letters(&mut s);
        s
    }

    fn collect_letters(&self, s: &mut BTreeSet<String>) {
        match self {
            RegExpr::Empty | RegExpr::Epsilon => {}
            RegExpr::Letter(c) => {
                s.insert(c.clone());
            }
            RegExpr::Concat(a, b) | RegExpr::Alt(a, b) => {
                a.collect_letters(s);
                b.collect_letters(s);
            }
            RegExpr::Star(a) => a.collect_letters(s),
        }
    }

    /// Brzozowski derivative with respect to one letter.
    pub fn derivative(&self, c: &str) -> RegExpr {
        match self {
            RegExpr::Empty | RegExpr::Epsilon => RegExpr::Empty,
            RegExpr::Letter(d) => {
                if d == c {
                    RegExpr::Epsilon
                } else {
                    RegExpr::Empty
                }
            }
            RegExpr::Concat(a, b) => {
                let left = RegExpr::concat(a.derivative(c), (**b).clone());
                if a.nullable() {
                    RegExpr::alt(left, b.derivative(c))
                } else {
                    left
                }
            }
            RegExpr::Alt(a, b) => RegExpr::alt(a.derivative(c), b.derivative(c)),
            RegExpr::Star(a) => RegExpr::concat(a.derivative(c), self.clone()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            RegExpr::Empty | RegExpr::Epsilon | RegExpr::Letter(_) => 1,
            RegExpr::Concat(a, b) | RegExpr::Alt(a, b) => 1 + a.size() + b.size(),
            RegExpr::Star(a) => 1 + a.size(),
        }
    }

    pub fn parse(s: &str) -> Result<RegExpr, RegexError> {
        let mut p = ReParser { s: s.as_bytes(), i: 0, depth: 0 };
        let e = p.alt()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(RegexError::Syntax(p.i, "unexpected input".into()));
        }
        Ok(e)
    }

    fn prec(&self) -> u8 {
        match self {
            RegExpr::Alt(..) => 0,
            RegExpr::Concat(..) => 1,
            _ => 2,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.prec() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            RegExpr::Empty => write!(f, "empty"),
            RegExpr::Epsilon => write!(f, "eps"),
            RegExpr::Letter(c) => write!(f, "{c}"),
            RegExpr::Concat(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, " ")?;
                b.fmt_at(f, 1)
            }
            RegExpr::Alt(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 0)
            }
            RegExpr::Star(a) => {
                a.fmt_at(f, 2)?;
                write!(f, "*")
            }
        }
    }
}

impl fmt::Display for RegExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Nodes at which words of `e` can start: the sources of the edges of
/// `first(e)`.
pub fn firstpred(e: &RegExpr, g: &Cfg) -> Result<BTreeSet<String>, RegexError> {
    e.first()
        .into_iter()
        .map(|c| g.edge(&c).map(|ed| ed.from.clone()).ok_or(RegexError::UnknownLabel(c)))
        .collect()
}

/// Membership of a word in the language of `e`.
pub fn lang_member<S: AsRef<str>>(e: &RegExpr, w: &[S]) -> bool {
    let mut cur = e.clone();
    for c in w {
        cur = cur.derivative(c.as_ref());
        if cur == RegExpr::Empty {
            return false;
        }
    }
    cur.nullable()
}

const MAX_DEPTH: usize = 200;

struct ReParser<'a> {
    s: &'a [u8],
    i: usize,
    depth: usize,
}

impl ReParser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn alt(&mut self) -> Result<RegExpr, RegexError> {
        let mut parts = vec![self.seq()?];
        while self.peek() == Some(b'+') {
            self.i += 1;
            parts.push(self.seq()?);
        }
        Ok(RegExpr::alt_all(parts))
    }

    fn seq(&mut self) -> Result<RegExpr, RegexError> {
        let mut parts = vec![self.post()?];
        while matches!(self.peek(), Some(c) if c == b'(' || c.is_ascii_alphanumeric() || c == b'_') {
            parts.push(self.post()?);
        }
        Ok(RegExpr::concat_all(parts))
    }

    fn post(&mut self) -> Result<RegExpr, RegexError> {
        let mut e = self.atom()?;
        while self.peek() == Some(b'*') {
            self.i += 1;
            e = RegExpr::star(e);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<RegExpr, RegexError> {
        match self.peek() {
            Some(b'(') => {
                if self.depth >= MAX_DEPTH {
                    return Err(RegexError::Syntax(self.i, "nested too deeply".into()));
                }
                self.depth += 1;
                self.i += 1;
                let e = self.alt()?;
                if self.peek() != Some(b')') {
                    return Err(RegexError::Syntax(self.i, "expected ')'".into()));
                }
                self.i += 1;
                self.depth -= 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = self.i;
                while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_') {
                    self.i += 1;
                }
                let w = std::str::from_utf8(&self.s[start..self.i]).unwrap();
                Ok(match w {
                    "eps" => RegExpr::Epsilon,
                    "empty" => RegExpr::Empty,
                    w => RegExpr::letter(w),
                })
            }
            _ => Err(RegexError::Syntax(self.i, "expected a letter or '('".into())),
        }
    }
}
