//! Path clauses: predicates over regular-expression paths, their
//! simplification to nested loops, and counter instrumentation.

mod counters;
mod eval;
mod generate;
mod unfold;

use std::collections::BTreeSet;
use std::fmt;

use crate::linarith::{ConstraintStore, Var};
use crate::pathexpr::RegExpr;

pub use counters::{add_counters, CountedLoop, CountedProgram, CounterError, LoopBody};
pub use eval::{eval_loop, eval_top, EvalError, Outcome};
pub use generate::generate;
pub use unfold::unfold_simplify;

/// Name of the top-level path predicate.
pub const TOP: &str = "path";

/// A relation between states at the start and the end of paths in the
/// language of `subexpr`. Argument layout: optional counter, then the
/// start node's arguments, then the end node's arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathPredicate {
    pub name: String,
    pub subexpr: RegExpr,
    pub start: String,
    pub end: String,
    pub in_arity: usize,
    pub out_arity: usize,
    pub counted: bool,
}

impl PathPredicate {
    pub fn is_star(&self) -> bool {
        matches!(self.subexpr, RegExpr::Star(_)) && self.name != TOP
    }

    pub fn arity(&self) -> usize {
        usize::from(self.counted) + self.in_arity + self.out_arity
    }

    fn offset(&self) -> usize {
        usize::from(self.counted)
    }

    pub fn in_args<'a>(&self, a: &'a PathAtom) -> &'a [Var] {
        &a.args[self.offset()..self.offset() + self.in_arity]
    }

    pub fn out_args<'a>(&self, a: &'a PathAtom) -> &'a [Var] {
        &a.args[self.offset() + self.in_arity..]
    }

    pub fn counter_arg<'a>(&self, a: &'a PathAtom) -> Option<&'a Var> {
        self.counted.then(|| &a.args[0])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathAtom {
    pub pred: String,
    pub args: Vec<Var>,
}

impl fmt::Display for PathAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.pred, self.args.join(","))
    }
}

/// The program state at which the exit fact of a derivation fired.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExitState {
    pub pred: String,
    pub args: Vec<Var>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathClause {
    pub id: String,
    pub head: PathAtom,
    pub constraint: ConstraintStore,
    pub body: Vec<PathAtom>,
    pub exit: Option<ExitState>,
}

impl PathClause {
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs = self.constraint.vars();
        vs.extend(self.head.args.iter().cloned());
        for a in &self.body {
            vs.extend(a.args.iter().cloned());
        }
        if let Some(e) = &self.exit {
            vs.extend(e.args.iter().cloned());
        }
        vs
    }

    /// Variables that are visible outside the clause body: head and body
    /// atom arguments and the exit state.
    pub fn interface_vars(&self) -> BTreeSet<Var> {
        let mut vs: BTreeSet<Var> = self.head.args.iter().cloned().collect();
        for a in &self.body {
            vs.extend(a.args.iter().cloned());
        }
        if let Some(e) = &self.exit {
            vs.extend(e.args.iter().cloned());
        }
        vs
    }
}

impl fmt::Display for PathClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}: {}", self.id, self.head)?;
        let mut items: Vec<String> = self.body.iter().map(|a| a.to_string()).collect();
        items.extend(self.constraint.constraints().iter().map(|c| c.to_source()));
        if !items.is_empty() {
            write!(f, " :- {}", items.join(", "))?;
        }
        write!(f, ".")?;
        if let Some(e) = &self.exit {
            write!(f, " % exit at {}({})", e.pred, e.args.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathProgram {
    pub predicates: Vec<PathPredicate>,
    pub clauses: Vec<PathClause>,
    /// Entry node of the original program and its argument names.
    pub entry: String,
    pub entry_args: Vec<Var>,
}

impl PathProgram {
    pub fn predicate(&self, name: &str) -> Option<&PathPredicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn clauses_of<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a PathClause> + 'a {
        self.clauses.iter().filter(move |c| c.head.pred == name)
    }

    /// Predicates whose clauses call themselves.
    pub fn recursive_predicates(&self) -> BTreeSet<String> {
        self.clauses
            .iter()
            .filter(|c| c.body.iter().any(|a| a.pred == c.head.pred))
            .map(|c| c.head.pred.clone())
            .collect()
    }
}

impl fmt::Display for PathProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.predicates {
            writeln!(
                f,
                "% {}: {} from {} to {}{}",
                p.name,
                p.subexpr,
                p.start,
                p.end,
                if p.counted { ", counter first" } else { "" }
            )?;
        }
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Fresh variable names within one clause.
#[derive(Clone, Debug, Default)]
pub(crate) struct Namer {
    used: BTreeSet<Var>,
}

impl Namer {
    pub(crate) fn new(used: impl IntoIterator<Item = Var>) -> Self {
        Namer { used: used.into_iter().collect() }
    }

    /// `stem` itself when free, otherwise `stem1`, `stem2`, ….
    pub(crate) fn fresh(&mut self, stem: &str) -> Var {
        let stem = stem.trim_end_matches(|c: char| c.is_ascii_digit());
        let stem = if stem.is_empty() { "V" } else { stem };
        if self.used.insert(stem.to_string()) {
            return stem.to_string();
        }
        let mut i = 1;
        loop {
            let cand = format!("{stem}{i}");
            if self.used.insert(cand.clone()) {
                return cand;
            }
            i += 1;
        }
    }
}
