//! Bounded bottom-up evaluation of path programs on concrete inputs.

use std::collections::BTreeMap;

use super::{PathClause, PathPredicate, PathProgram, TOP};
use crate::chc::{propagate, Propagated};
use crate::linarith::{Rational, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("clause {clause} leaves {vars:?} undetermined")]
    Underdetermined { clause: String, vars: Vec<Var> },
    #[error("evaluation exceeded {0} clause applications")]
    Timeout(usize),
    #[error("unknown path predicate {0}")]
    UnknownPredicate(String),
    #[error("{pred} expects {expected} inputs, got {got}")]
    Arity { pred: String, expected: usize, got: usize },
}

/// One derivation of a path predicate: its counter value if counted, the
/// end state, and the exit state if the derivation passed an exit fact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Outcome {
    pub counter: Option<Rational>,
    pub outs: Vec<Rational>,
    pub exit: Option<(String, Vec<Rational>)>,
}

struct Ev<'a> {
    pp: &'a PathProgram,
    integer: bool,
    budget: usize,
    steps: usize,
}

type State = (BTreeMap<Var, Rational>, Option<(String, Vec<Rational>)>);

impl Ev<'_> {
    fn tick(&mut self) -> Result<(), EvalError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(EvalError::Timeout(self.budget))
        } else {
            Ok(())
        }
    }

    fn pred_def(&self, name: &str) -> Result<&PathPredicate, EvalError> {
        self.pp.predicate(name).ok_or_else(|| EvalError::UnknownPredicate(name.to_string()))
    }

    fn pred(&mut self, name: &str, ins: &[Rational]) -> Result<Vec<Outcome>, EvalError> {
        let p = self.pred_def(name)?.clone();
        if ins.len() != p.in_arity {
            return Err(EvalError::Arity { pred: name.to_string(), expected: p.in_arity, got: ins.len() });
        }
        let pp = self.pp;
        let (steps, bases): (Vec<&PathClause>, Vec<&PathClause>) =
            pp.clauses_of(name).partition(|c| c.body.iter().any(|a| a.pred == name));
        let mut all = Vec::new();
        let mut frontier = Vec::new();
        for b in bases {
            frontier.extend(self.clause(b, ins, &[])?);
        }
        while !frontier.is_empty() {
            frontier.sort();
            frontier.dedup();
            all.extend(frontier.iter().cloned());
            let mut next = Vec::new();
            for s in &steps {
                next.extend(self.clause(s, ins, &frontier)?);
            }
            frontier = next;
        }
        all.sort();
        all.dedup();
        Ok(all)
    }

    fn clause(&mut self, c: &PathClause, ins: &[Rational], rec: &[Outcome]) -> Result<Vec<Outcome>, EvalError> {
        self.tick()?;
        let p = self.pred_def(&c.head.pred)?.clone();
        let mut env = BTreeMap::new();
        for (v, x) in p.in_args(&c.head).iter().zip(ins) {
            if env.insert(v.clone(), x.clone()).is_some_and(|old| old != *x) {
                return Ok(vec![]);
            }
        }
        let mut states: Vec<State> = vec![(env, None)];
        for atom in &c.body {
            let q = self.pred_def(&atom.pred)?.clone();
            let mut next = Vec::new();
            for (env, exit) in states {
                let env = match propagate(&c.constraint, env, self.integer) {
                    Propagated::Infeasible => continue,
                    Propagated::Solved(e) | Propagated::Open(e, _) => e,
                };
                let mut in_vals = Vec::new();
                let mut missing = Vec::new();
                for v in q.in_args(atom) {
                    match env.get(v) {
                        Some(x) => in_vals.push(x.clone()),
                        None => missing.push(v.clone()),
                    }
                }
                if !missing.is_empty() {
                    return Err(EvalError::Underdetermined { clause: c.id.clone(), vars: missing });
                }
                let results = if atom.pred == c.head.pred { rec.to_vec() } else { self.pred(&atom.pred, &in_vals)? };
                'res: for r in results {
                    let mut e = env.clone();
                    let mut binds: Vec<(&Var, &Rational)> = q.out_args(atom).iter().zip(&r.outs).collect();
                    if let (Some(k), Some(kv)) = (q.counter_arg(atom), r.counter.as_ref()) {
                        binds.push((k, kv));
                    }
                    for (v, x) in binds {
                        if e.insert(v.clone(), x.clone()).is_some_and(|old| old != *x) {
                            continue 'res;
                        }
                    }
                    next.push((e, exit.clone().or(r.exit)));
                }
            }
            states = next;
        }

        let mut out = Vec::new();
        for (env, exit) in states {
            let (env, open) = match propagate(&c.constraint, env, self.integer) {
                Propagated::Infeasible => continue,
                Propagated::Solved(e) => (e, vec![]),
                Propagated::Open(e, open) => (e, open),
            };
            let get = |vs: &[Var]| -> Result<Vec<Rational>, EvalError> {
                let missing: Vec<Var> = vs.iter().filter(|v| !env.contains_key(*v)).cloned().collect();
                if !missing.is_empty() {
                    let mut vars = missing;
                    vars.extend(open.iter().cloned());
                    return Err(EvalError::Underdetermined { clause: c.id.clone(), vars });
                }
                Ok(vs.iter().map(|v| env[v].clone()).collect())
            };
            let outs = get(p.out_args(&c.head))?;
            let counter = match p.counter_arg(&c.head) {
                Some(k) => Some(get(std::slice::from_ref(k))?.remove(0)),
                None => None,
            };
            let exit = match (&c.exit, exit) {
                (Some(x), _) => Some((x.pred.clone(), get(&x.args)?)),
                (None, e) => e,
            };
            out.push(Outcome { counter, outs, exit });
        }
        Ok(out)
    }
}

/// All derivations of the top predicate from the given start state.
pub fn eval_top(pp: &PathProgram, ins: &[Rational], integer: bool, budget: usize) -> Result<Vec<Outcome>, EvalError> {
    eval_loop(pp, TOP, ins, integer, budget)
}

/// All derivations of predicate `pred` from the given start state, where
/// `budget` bounds the number of clause applications.
pub fn eval_loop(
    pp: &PathProgram,
    pred: &str,
    ins: &[Rational],
    integer: bool,
    budget: usize,
) -> Result<Vec<Outcome>, EvalError> {
    let mut ev = Ev { pp, integer, budget, steps: 0 };
    ev.pred(pred, ins)
}
