//! Linear constrained Horn clause programs: syntax, control-flow graph and
//! a concrete interpreter.

mod cfg;
mod parse;
mod simulate;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use crate::linarith::{ConstraintStore, Var};

pub use cfg::{build_cfg, Cfg, Edge, FALSE_NODE, TRUE_NODE};
pub use parse::{parse_clauses, parse_program, FrontError, GeneralClause};
pub use simulate::{simulate, SimError, Terminal};
pub(crate) use simulate::{propagate, Propagated};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Var>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Var>) -> Self {
        Atom { predicate: predicate.into(), args }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Head {
    Atom(Atom),
    False,
}

impl Head {
    /// The CFG node of the head.
    pub fn node(&self) -> &str {
        match self {
            Head::Atom(a) => &a.predicate,
            Head::False => FALSE_NODE,
        }
    }

    pub fn atom(&self) -> Option<&Atom> {
        match self {
            Head::Atom(a) => Some(a),
            Head::False => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clause {
    pub id: String,
    pub head: Head,
    pub constraint: ConstraintStore,
    pub body: Option<Atom>,
}

impl Clause {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs = self.constraint.vars();
        if let Some(a) = self.head.atom() {
            vs.extend(a.args.iter().cloned());
        }
        if let Some(b) = &self.body {
            vs.extend(b.args.iter().cloned());
        }
        vs
    }

    /// The CFG node the clause leads to.
    pub fn target(&self) -> &str {
        self.body.as_ref().map_or(TRUE_NODE, |b| &b.predicate)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}: ", self.id)?;
        match &self.head {
            Head::Atom(a) => write!(f, "{a}")?,
            Head::False => write!(f, "false")?,
        }
        let mut items: Vec<String> = self.constraint.constraints().iter().map(|c| c.to_source()).collect();
        if let Some(b) = &self.body {
            items.push(b.to_string());
        }
        if items.is_empty() && self.head == Head::False {
            items.push("true".into());
        }
        if items.is_empty() {
            write!(f, ".")
        } else {
            write!(f, " :- {}.", items.join(", "))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub clauses: Vec<Clause>,
    pub entry: (String, usize),
    /// Guards are read over the integers when simulating.
    pub integer: bool,
}

impl Program {
    pub fn clause(&self, id: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.id == id)
    }

    pub fn clauses_of<'a>(&'a self, pred: &'a str) -> impl Iterator<Item = &'a Clause> + 'a {
        self.clauses.iter().filter(move |c| c.head.node() == pred)
    }

    /// Arity of a predicate as used anywhere in the program.
    pub fn arity(&self, pred: &str) -> Option<usize> {
        self.clauses.iter().find_map(|c| {
            c.head
                .atom()
                .filter(|a| a.predicate == pred)
                .or(c.body.as_ref().filter(|a| a.predicate == pred))
                .map(|a| a.args.len())
        })
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "entry({}/{}).", self.entry.0, self.entry.1)?;
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Orders clause identifiers so that `c2` precedes `c10`.
pub fn cmp_clause_ids(a: &str, b: &str) -> Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let digits = s.len() - s.bytes().rev().take_while(u8::is_ascii_digit).count();
        (&s[..digits], s[digits..].parse().ok())
    }
    let (pa, na) = split(a);
    let (pb, nb) = split(b);
    pa.cmp(pb).then(na.cmp(&nb)).then(a.cmp(b))
}
