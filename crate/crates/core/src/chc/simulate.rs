//! Concrete bounded execution of linear programs.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::{Clause, Head, Program};
use crate::linarith::{is_sat, ConstraintStore, Rational, Rel, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("no derivation finished within {0} steps")]
    Timeout(usize),
    #[error("no clause applies and no exit was reached")]
    Stuck,
    #[error("clause {clause} leaves {vars:?} undetermined; only functional updates can be executed")]
    Underdetermined { clause: String, vars: Vec<Var> },
    #[error("entry expects {expected} inputs, got {got}")]
    Arity { expected: usize, got: usize },
}

/// A successful derivation: the exit clause's predicate and the argument
/// values at the exit.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Terminal {
    pub pred: String,
    pub values: Vec<Rational>,
    pub trace: Vec<String>,
}

pub(crate) enum Propagated {
    Infeasible,
    Solved(BTreeMap<Var, Rational>),
    Open(BTreeMap<Var, Rational>, Vec<Var>),
}

/// Extends `env` by repeatedly solving equalities with a single unknown,
/// then checks the whole store.
pub(crate) fn propagate(store: &ConstraintStore, mut env: BTreeMap<Var, Rational>, integer: bool) -> Propagated {
    loop {
        let mut progress = false;
        for c in store.constraints().iter().filter(|c| c.rel == Rel::Eq) {
            let t = c.lhs.partial_eval(&env);
            let mut unknown = t.coeffs().iter();
            match (unknown.next(), unknown.next()) {
                (None, _) if !t.constant_part().is_zero() => return Propagated::Infeasible,
                (Some((v, a)), None) => {
                    let x = -t.constant_part() / a;
                    if integer && !x.is_integer() {
                        return Propagated::Infeasible;
                    }
                    env.insert(v.clone(), x);
                    progress = true;
                }
                _ => {}
            }
        }
        if !progress {
            break;
        }
    }
    let open: Vec<Var> = store.vars().into_iter().filter(|v| !env.contains_key(v)).collect();
    if open.is_empty() {
        return match store.holds(&env) {
            Some(true) => Propagated::Solved(env),
            _ => Propagated::Infeasible,
        };
    }
    let residual: ConstraintStore = store
        .constraints()
        .iter()
        .map(|c| crate::linarith::LinConstraint { lhs: c.lhs.partial_eval(&env), rel: c.rel })
        .collect();
    if is_sat(&residual) {
        Propagated::Open(env, open)
    } else {
        Propagated::Infeasible
    }
}

/// Applies `c` to a goal with argument values `vals`. Returns `None` when the
/// clause is not applicable and the body argument values otherwise (empty
/// for facts).
fn apply(c: &Clause, vals: &[Rational], integer: bool) -> Result<Option<Vec<Rational>>, SimError> {
    let Head::Atom(h) = &c.head else { return Ok(None) };
    let mut env = BTreeMap::new();
    for (v, x) in h.args.iter().zip(vals) {
        env.insert(v.clone(), x.clone());
    }
    let body_args: Vec<Var> = c.body.as_ref().map(|b| b.args.clone()).unwrap_or_default();
    match propagate(&c.constraint, env, integer) {
        Propagated::Infeasible => Ok(None),
        Propagated::Open(_, vars) => {
            let needed: Vec<Var> = vars.into_iter().filter(|v| body_args.contains(v)).collect();
            if needed.is_empty() && body_args.is_empty() {
                // Local witnesses of a fact need not be computed.
                Ok(Some(vec![]))
            } else {
                Err(SimError::Underdetermined { clause: c.id.clone(), vars: needed })
            }
        }
        Propagated::Solved(env) => {
            let mut out = Vec::new();
            for v in &body_args {
                match env.get(v) {
                    Some(x) => out.push(x.clone()),
                    None => return Err(SimError::Underdetermined { clause: c.id.clone(), vars: vec![v.clone()] }),
                }
            }
            Ok(Some(out))
        }
    }
}

/// Breadth-first enumeration of derivations from the entry goal. Every clause
/// application, including the final fact, is one step. Returns all terminal
/// valuations, which is a single one for deterministic programs.
pub fn simulate(p: &Program, input: &[Rational], max_steps: usize) -> Result<Vec<Terminal>, SimError> {
    if input.len() != p.entry.1 {
        return Err(SimError::Arity { expected: p.entry.1, got: input.len() });
    }
    let mut frontier: Vec<(String, Vec<Rational>, Vec<String>)> = vec![(p.entry.0.clone(), input.to_vec(), vec![])];
    let mut seen: BTreeSet<(String, Vec<Rational>)> = BTreeSet::new();
    let mut terminals: Vec<Terminal> = Vec::new();
    for _ in 0..max_steps {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for (pred, vals, trace) in frontier {
            for c in p.clauses_of(&pred) {
                let Some(out) = apply(c, &vals, p.integer)? else { continue };
                let mut t = trace.clone();
                t.push(c.id.clone());
                match &c.body {
                    None => terminals.push(Terminal { pred: pred.clone(), values: vals.clone(), trace: t }),
                    Some(b) => {
                        if seen.insert((b.predicate.clone(), out.clone())) {
                            next.push((b.predicate.clone(), out, t));
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    if !frontier.is_empty() {
        return Err(SimError::Timeout(max_steps));
    }
    if terminals.is_empty() {
        return Err(SimError::Stuck);
    }
    terminals.sort();
    terminals.dedup_by(|a, b| a.pred == b.pred && a.values == b.values);
    Ok(terminals)
}
