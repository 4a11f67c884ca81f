//! Iteration counters for star predicates.

use std::collections::BTreeSet;

use super::{Namer, PathAtom, PathClause, PathProgram};
use crate::linarith::{ConstraintStore, LinConstraint, LinTerm, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CounterError {
    #[error("loop predicate {0} has more than one recursive clause")]
    MultiPathLoop(String),
    #[error("loop predicate {0} is not directly recursive")]
    NotDirectlyRecursive(String),
}

/// One iteration of a loop: the state `pre` before it, the state `post`
/// after it, and the transition constraint together with the nested loops
/// it calls.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopBody {
    pub entry: Vec<Var>,
    pub pre: Vec<Var>,
    pub post: Vec<Var>,
    pub constraint: ConstraintStore,
    pub calls: Vec<PathAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountedLoop {
    pub pred: String,
    pub counter: Var,
    pub base: Option<PathClause>,
    pub step: PathClause,
    pub body: LoopBody,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountedProgram {
    pub program: PathProgram,
    /// Loops in predicate order; inner loops come before the loops calling them.
    pub loops: Vec<CountedLoop>,
}

impl CountedProgram {
    pub fn loop_of(&self, pred: &str) -> Option<&CountedLoop> {
        self.loops.iter().find(|l| l.pred == pred)
    }

    pub fn counters(&self) -> Vec<Var> {
        self.loops.iter().map(|l| l.counter.clone()).collect()
    }
}

/// Adds an iteration counter as the first argument of every star predicate.
/// The base clause gets `K = 0`, the step clause `K > 0, K' = K - 1` where
/// `K'` counts the recursive call.
pub fn add_counters(pp: &PathProgram) -> Result<CountedProgram, CounterError> {
    let mut taken: BTreeSet<Var> = pp.clauses.iter().flat_map(|c| c.vars()).collect();
    taken.extend(pp.entry_args.iter().cloned());
    let stars: Vec<String> = pp.predicates.iter().filter(|p| p.is_star()).map(|p| p.name.clone()).collect();
    let mut names = Vec::new();
    let mut i = 0;
    for _ in &stars {
        let name = loop {
            i += 1;
            let n = format!("K{i}");
            if !taken.contains(&n) {
                break n;
            }
        };
        names.push(name);
    }
    let counter_of = |p: &str| stars.iter().position(|s| s == p).map(|i| names[i].clone());

    let mut out = pp.clone();
    for p in &mut out.predicates {
        p.counted = p.is_star();
    }
    for c in &mut out.clauses {
        let mut namer = Namer::new(c.vars().into_iter().chain(names.iter().cloned()));
        let own = counter_of(&c.head.pred);
        if let Some(k) = &own {
            c.head.args.insert(0, k.clone());
            let recursive = c.body.iter().any(|a| a.pred == c.head.pred);
            if recursive {
                c.constraint.push(LinConstraint::gt(&LinTerm::var(k.clone()), &LinTerm::int(0)));
            } else {
                c.constraint.push(LinConstraint::eq(&LinTerm::var(k.clone()), &LinTerm::int(0)));
            }
        }
        let mut used: BTreeSet<Var> = own.iter().cloned().collect();
        for a in &mut c.body {
            let Some(k) = counter_of(&a.pred) else { continue };
            let v = if Some(&a.pred) == Some(&c.head.pred) {
                let v = namer.fresh(&format!("{}p", own.as_deref().unwrap_or("K")));
                let prev = &LinTerm::var(own.clone().unwrap_or_default()) - &LinTerm::int(1);
                c.constraint.push(LinConstraint::eq(&LinTerm::var(v.clone()), &prev));
                v
            } else if used.insert(k.clone()) {
                k
            } else {
                namer.fresh(&format!("{k}x"))
            };
            a.args.insert(0, v);
        }
    }

    let mut loops = Vec::new();
    for (p, k) in stars.iter().zip(&names) {
        let pred = out.predicate(p).expect("star predicate").clone();
        let (steps, bases): (Vec<&PathClause>, Vec<&PathClause>) =
            out.clauses_of(p).partition(|c| c.body.iter().any(|a| &a.pred == p));
        if steps.len() > 1 {
            return Err(CounterError::MultiPathLoop(p.clone()));
        }
        let Some(step) = steps.first() else {
            return Err(CounterError::NotDirectlyRecursive(p.clone()));
        };
        let rec: Vec<&PathAtom> = step.body.iter().filter(|a| &a.pred == p).collect();
        if rec.len() != 1 {
            return Err(CounterError::NotDirectlyRecursive(p.clone()));
        }
        if pred.in_args(rec[0]) != pred.in_args(&step.head) {
            return Err(CounterError::NotDirectlyRecursive(p.clone()));
        }
        let calls: Vec<PathAtom> = step.body.iter().filter(|a| &a.pred != p).cloned().collect();
        let inner_k = rec[0].args[0].clone();
        let constraint = ConstraintStore::from_constraints(
            step.constraint.constraints().iter().filter(|c| !c.vars().any(|v| *v == *k || *v == inner_k)).cloned(),
        );
        let body = LoopBody {
            entry: pred.in_args(&step.head).to_vec(),
            pre: pred.out_args(rec[0]).to_vec(),
            post: pred.out_args(&step.head).to_vec(),
            constraint,
            calls,
        };
        loops.push(CountedLoop {
            pred: p.clone(),
            counter: k.clone(),
            base: bases.first().map(|c| (*c).clone()),
            step: (*step).clone(),
            body,
        });
    }
    Ok(CountedProgram { program: out, loops })
}
