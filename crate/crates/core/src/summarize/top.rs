//! Top-level path clauses with loop summaries inlined.

use std::collections::{BTreeMap, BTreeSet};

use super::interval::{Case, Signs};
use super::loops::{inline_calls, CounterInfo, LoopSummary};
use super::{SummarizeError, Stage};
use crate::linarith::{entails, ConstraintStore, LinConstraint, LinTerm, Var};
use crate::path_clauses::{Namer, PathAtom, PathClause, PathProgram, TOP};

/// Splitting on more counters than this is not attempted.
const MAX_SPLIT: usize = 6;

/// One feasible shape of a top-level clause.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopCase {
    pub clause: String,
    /// Counters whose bound may be negative, with the branch taken: `true`
    /// for a nonnegative bound, `false` for zero iterations.
    pub branch: Vec<(Var, bool)>,
    pub exit_pred: String,
    pub case: Case,
}

/// Name of the `i`-th output at exit predicate `pred`.
pub fn output_name(pp: &PathProgram, pred: &str, i: usize, arity: usize) -> Var {
    if pred == pp.entry && arity == pp.entry_args.len() {
        format!("{}'", pp.entry_args[i])
    } else {
        format!("{pred}.{}", i + 1)
    }
}

fn rename_atom(a: &PathAtom, map: &BTreeMap<Var, Var>) -> PathAtom {
    PathAtom { pred: a.pred.clone(), args: a.args.iter().map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone())).collect() }
}

/// The clause with its inputs renamed to `targets` and clashing locals
/// renamed apart.
fn canonical(c: &PathClause, ins: &[Var], targets: &[Var]) -> PathClause {
    let mut map: BTreeMap<Var, Var> = ins.iter().cloned().zip(targets.iter().cloned()).collect();
    let mut namer = Namer::new(c.vars().into_iter().chain(targets.iter().cloned()));
    for v in c.vars() {
        if !map.contains_key(&v) && targets.contains(&v) {
            map.insert(v.clone(), namer.fresh(&v));
        }
    }
    PathClause {
        id: c.id.clone(),
        head: rename_atom(&c.head, &map),
        constraint: c.constraint.rename(&map),
        body: c.body.iter().map(|a| rename_atom(a, &map)).collect(),
        exit: c.exit.as_ref().map(|e| crate::path_clauses::ExitState {
            pred: e.pred.clone(),
            args: e.args.iter().map(|v| map.get(v).cloned().unwrap_or_else(|| v.clone())).collect(),
        }),
    }
}

/// Cases of every top-level clause that ends in an exit, over the entry
/// arguments of the program.
pub(crate) fn top_cases(
    pp: &PathProgram,
    done: &BTreeMap<String, LoopSummary>,
    all_counters: &[Var],
    signs: &Signs,
    integer: bool,
) -> Result<Vec<TopCase>, SummarizeError> {
    let top = pp.predicate(TOP).ok_or_else(|| SummarizeError::new(Stage::PathProgram, "no top-level predicate"))?;
    let inputs = pp.entry_args.clone();
    let mut out = Vec::new();
    for c in pp.clauses_of(TOP) {
        if c.exit.is_none() {
            continue;
        }
        let c = canonical(c, top.in_args(&c.head), &inputs);
        let exit = c.exit.clone().expect("checked above");
        if let Some(a) = c.body.iter().find(|a| !done.contains_key(&a.pred)) {
            return Err(SummarizeError::new(Stage::Summary, format!("top-level clause {} calls {} which is not a loop", c.id, a.pred)));
        }
        let mut taken: BTreeSet<Var> = c.vars();
        taken.extend(all_counters.iter().cloned());
        let anchors: BTreeSet<Var> = inputs.iter().cloned().collect();
        let inl = inline_calls(&c.constraint, &c.body, pp, done, &anchors, &mut taken)?;
        let mut base = inl.rel.linear.clone();
        for v in &inputs {
            if signs.nonneg.contains(v) {
                base.push(LinConstraint::ge(&LinTerm::var(v.clone()), &LinTerm::zero()));
            }
        }
        let (split, fixed): (Vec<&CounterInfo>, Vec<&CounterInfo>) = inl.own.iter().partition(|k| {
            k.upper.as_ref().is_some_and(|u| !entails(&base, &LinConstraint::ge(u, &LinTerm::zero())))
        });
        let (split, fixed): (Vec<&CounterInfo>, Vec<&CounterInfo>) = if split.len() > MAX_SPLIT {
            log::warn!("clause {}: too many counters to split on; assuming nonnegative bounds", c.id);
            (vec![], inl.own.iter().collect())
        } else {
            (split, fixed)
        };
        for k in &fixed {
            for kc in k.constraints() {
                base.push(kc);
            }
        }
        let known: BTreeSet<Var> = inputs.iter().cloned().chain(inl.counters()).collect();
        let solved = inl.rel.solve(&known);
        let outputs: Vec<(Var, Option<crate::poly::Polynomial>)> = exit
            .args
            .iter()
            .enumerate()
            .map(|(i, v)| (output_name(pp, &exit.pred, i, exit.args.len()), solved.closed(v, &known)))
            .collect();
        for mask in 0u32..(1 << split.len()) {
            let mut store: ConstraintStore = base.clone();
            let mut branch = Vec::new();
            for (i, k) in split.iter().enumerate() {
                let u = k.upper.as_ref().expect("split counters have bounds");
                let kv = LinTerm::var(k.name.clone());
                let nonneg = mask & (1 << i) == 0;
                if nonneg {
                    store.push(LinConstraint::ge(u, &LinTerm::zero()));
                    for kc in k.constraints() {
                        store.push(kc);
                    }
                } else {
                    let neg = LinConstraint::lt(u, &LinTerm::zero());
                    store.push(if integer { neg.tighten_integer() } else { neg });
                    store.push(LinConstraint::eq(&kv, &LinTerm::zero()));
                }
                branch.push((k.name.clone(), nonneg));
            }
            out.push(TopCase {
                clause: c.id.clone(),
                branch,
                exit_pred: exit.pred.clone(),
                case: Case { store, outputs: outputs.clone(), counters: inl.counters() },
            });
        }
    }
    Ok(out)
}
