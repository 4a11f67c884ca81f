//! Per-loop summaries: closed forms over the entry state and counter bounds.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;
use serde_json::{json, Value};

use super::{SummarizeError, Stage};
use crate::linarith::{
    bound_candidates, entails, synth_ranking, ConstraintStore, LinConstraint, LinTerm, Rational, Rel, Var,
};
use crate::path_clauses::{CountedLoop, PathAtom, PathProgram};
use crate::poly::Polynomial;
use crate::rd_sc::{reaching_definitions, symbolic_constants, RdAssignment};
use crate::rec_solver::{solve_system, ClosedForm};
use crate::recurrences::{build_eq_graph, extract, EqSystem, LoopStep};
use crate::relation::{solve_equations, Relation};

/// A counter `0 ≤ name ≤ upper`; no upper bound means none was found.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterInfo {
    pub name: Var,
    pub upper: Option<LinTerm>,
    pub ranking: Option<LinTerm>,
}

impl CounterInfo {
    pub fn constraints(&self) -> Vec<LinConstraint> {
        let k = LinTerm::var(self.name.clone());
        let mut cs = vec![LinConstraint::ge(&k, &LinTerm::zero())];
        if let Some(u) = &self.upper {
            cs.push(LinConstraint::le(&k, u));
        }
        cs
    }

    fn rename(&self, map: &BTreeMap<Var, Var>) -> CounterInfo {
        CounterInfo {
            name: map.get(&self.name).cloned().unwrap_or_else(|| self.name.clone()),
            upper: self.upper.as_ref().map(|t| t.rename(map)),
            ranking: self.ranking.as_ref().map(|t| t.rename(map)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopSummary {
    pub pred: String,
    pub inputs: Vec<Var>,
    pub counter: Var,
    /// Counters of inlined inner loops, kept as symbols.
    pub carried: Vec<Var>,
    /// Value of each input variable after `counter` iterations.
    pub closed_forms: Vec<(Var, Polynomial)>,
    /// The loop's own counter first, then the carried ones.
    pub counters: Vec<CounterInfo>,
    pub step: LoopStep,
    pub system: EqSystem,
    pub solutions: Vec<ClosedForm>,
    pub rd: RdAssignment,
    pub symbolic_constants: BTreeSet<Var>,
}

impl LoopSummary {
    pub fn constraints(&self) -> ConstraintStore {
        self.counters.iter().flat_map(|c| c.constraints()).collect()
    }

    pub fn all_counters(&self) -> Vec<Var> {
        self.counters.iter().map(|c| c.name.clone()).collect()
    }

    pub fn to_json(&self) -> Value {
        let cf: serde_json::Map<String, Value> =
            self.closed_forms.iter().map(|(v, p)| (v.clone(), p.to_json())).collect();
        let counters: Vec<Value> = self
            .counters
            .iter()
            .map(|c| {
                json!({
                    "name": c.name,
                    "lower": Polynomial::zero().to_json(),
                    "upper": c.upper.as_ref().map(|t| Polynomial::from_linterm(t).to_json()),
                    "ranking": c.ranking.as_ref().map(|t| Polynomial::from_linterm(t).to_json()),
                })
            })
            .collect();
        json!({ "predicate": self.pred, "inputs": self.inputs, "closed_forms": cf, "counters": counters })
    }
}

impl fmt::Display for LoopSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "loop {}({}) with counter {}", self.pred, self.inputs.join(","), self.counter)?;
        for (v, p) in &self.closed_forms {
            writeln!(f, "  {v}' = {p}")?;
        }
        for c in &self.counters {
            let up = c.upper.as_ref().map(|t| t.to_string()).unwrap_or_else(|| "unbounded".into());
            write!(f, "  0 <= {} <= {up}", c.name)?;
            if let Some(r) = &c.ranking {
                write!(f, "  (ranking {r})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Smallest `K<n>` not yet taken.
pub(crate) fn fresh_counter(taken: &mut BTreeSet<Var>) -> Var {
    let v = (1..).map(|i| format!("K{i}")).find(|v| !taken.contains(v)).expect("unbounded range");
    taken.insert(v.clone());
    v
}

/// The result of replacing loop calls by their summaries.
pub(crate) struct Inlined {
    pub rel: Relation,
    /// Own counters of the called loops with their upper bounds, which the
    /// caller has to add.
    pub own: Vec<CounterInfo>,
    /// Carried counters with their bounds, already in `rel`.
    pub carried: Vec<CounterInfo>,
}

impl Inlined {
    pub fn counters(&self) -> Vec<Var> {
        let mut ks: Vec<Var> = self.own.iter().map(|c| c.name.clone()).collect();
        ks.extend(self.carried.iter().map(|c| c.name.clone()));
        ks
    }
}

/// Replaces each call by the callee's closed forms, with the callee's own
/// counter taken from the call and its carried counters renamed apart.
/// Counter bounds are restated over `anchors` and simplified.
pub(crate) fn inline_calls(
    constraint: &ConstraintStore,
    calls: &[PathAtom],
    pp: &PathProgram,
    done: &BTreeMap<String, LoopSummary>,
    anchors: &BTreeSet<Var>,
    taken: &mut BTreeSet<Var>,
) -> Result<Inlined, SummarizeError> {
    let mut rel = Relation::new(constraint.clone());
    let mut own = Vec::new();
    let mut carried = Vec::new();
    for a in calls {
        let s = done.get(&a.pred).ok_or_else(|| {
            SummarizeError::new(Stage::Summary, format!("call to {} which has no loop summary", a.pred))
        })?;
        let pred = pp.predicate(&a.pred).expect("called predicate exists");
        let Some(k) = pred.counter_arg(a) else {
            return Err(SummarizeError::new(Stage::Summary, format!("call to uncounted predicate {}", a.pred)));
        };
        let mut map: BTreeMap<Var, Var> = s.inputs.iter().cloned().zip(pred.in_args(a).iter().cloned()).collect();
        map.insert(s.counter.clone(), k.clone());
        taken.insert(k.clone());
        for c in &s.carried {
            map.insert(c.clone(), fresh_counter(taken));
        }
        for ((_, p), out) in s.closed_forms.iter().zip(pred.out_args(a)) {
            rel.define(out.clone(), p.rename(&map));
        }
        for (i, c) in s.counters.iter().enumerate() {
            let c = c.rename(&map);
            if i == 0 {
                own.push(c);
            } else {
                carried.push(c);
            }
        }
    }
    let counters: BTreeSet<Var> = own.iter().chain(&carried).map(|c| c.name.clone()).collect();
    for c in &mut carried {
        rel.linear.push(LinConstraint::ge(&LinTerm::var(c.name.clone()), &LinTerm::zero()));
    }
    for c in own.iter_mut().chain(carried.iter_mut()) {
        c.upper = c.upper.as_ref().map(|t| simplify_bound(t, &rel.linear, anchors, &counters));
    }
    for c in &carried {
        if let Some(u) = &c.upper {
            rel.linear.push(LinConstraint::le(&LinTerm::var(c.name.clone()), u));
        }
    }
    Ok(Inlined { rel, own, carried })
}

/// Restates `t` over `anchors` and counters using the equalities of `ctx`,
/// then replaces it by the term with the fewest program variables among
/// those obtained by dropping variables that `ctx` proves to be at least `t`.
pub(crate) fn simplify_bound(
    t: &LinTerm,
    ctx: &ConstraintStore,
    anchors: &BTreeSet<Var>,
    counters: &BTreeSet<Var>,
) -> LinTerm {
    let known: BTreeSet<Var> = anchors.union(counters).cloned().collect();
    let eqs: Vec<Polynomial> = ctx
        .constraints()
        .iter()
        .filter(|c| c.rel == Rel::Eq)
        .map(|c| Polynomial::from_linterm(&c.lhs))
        .collect();
    let solved = solve_equations(eqs, &known);
    let mut tp = Polynomial::from_linterm(t);
    for v in t.vars() {
        if let Some(d) = solved.closed(v, &known) {
            tp = tp.substitute(v, &d);
        }
    }
    let Some(t) = tp.to_linterm() else { return t.clone() };
    let droppable: Vec<Var> = t.vars().filter(|v| !counters.contains(*v)).cloned().collect();
    if droppable.len() > 12 {
        return t;
    }
    let mut best: Option<(usize, LinTerm)> = None;
    for mask in 1u32..(1 << droppable.len()) {
        let n = droppable.len() - mask.count_ones() as usize;
        if best.as_ref().is_some_and(|(m, _)| *m <= n) {
            continue;
        }
        let mut cand = t.clone();
        for (i, v) in droppable.iter().enumerate() {
            if mask & (1 << i) != 0 {
                cand = cand.substitute(v, &LinTerm::zero());
            }
        }
        if entails(ctx, &LinConstraint::le(&t, &cand)) {
            best = Some((n, cand));
        }
    }
    best.map(|(_, c)| c).unwrap_or(t)
}

/// `r - m + 1` where `r` is a linear ranking function of the step and `m`
/// its least value over the step, which bounds the number of iterations
/// when evaluated on the entry state.
fn counter_bound(body: &ConstraintStore, pre: &[Var], post: &[Var]) -> Option<LinTerm> {
    let r = synth_ranking(body, pre, post).ok()?.term;
    let t = "$rank".to_string();
    let with_t = body.with(LinConstraint::eq(&LinTerm::var(t.clone()), &r));
    let m = match bound_candidates(&with_t, &t, &BTreeSet::new()) {
        Ok((lows, _)) => lows.iter().filter_map(|l| l.is_constant().then(|| l.constant_part().clone())).max(),
        Err(_) => None,
    }
    .unwrap_or_else(Rational::zero);
    Some(&(&r - &LinTerm::constant(m)) + &LinTerm::int(1))
}

pub(crate) struct LoopOptions {
    pub integer: bool,
    pub fresh_counters: bool,
    pub max_degree: u32,
}

pub(crate) fn summarize_loop(
    l: &CountedLoop,
    pp: &PathProgram,
    done: &BTreeMap<String, LoopSummary>,
    all_counters: &[Var],
    opts: &LoopOptions,
) -> Result<LoopSummary, SummarizeError> {
    let b = &l.body;
    let mut taken: BTreeSet<Var> = l.step.vars();
    taken.extend(all_counters.iter().cloned());
    let anchors: BTreeSet<Var> = b.pre.iter().chain(&b.entry).cloned().collect();
    let inl = inline_calls(&b.constraint, &b.calls, pp, done, &anchors, &mut taken)?;
    let mut rel = inl.rel.clone();
    for c in &inl.own {
        for k in c.constraints() {
            rel.linear.push(k);
        }
    }
    let carried = inl.counters();

    let linear = if opts.integer { rel.linear.tighten_integer() } else { rel.linear.clone() };
    let rank = counter_bound(&linear, &b.pre, &b.post);
    let to_entry: BTreeMap<Var, Var> = b.pre.iter().cloned().zip(b.entry.iter().cloned()).collect();
    let rank = rank.map(|r| r.rename(&to_entry));
    if rank.is_none() {
        log::info!("no ranking function for {}; its counter is unbounded", l.pred);
    }

    let stem = pp.predicate(&l.pred).map(|p| p.start.clone()).unwrap_or_else(|| l.pred.clone());
    let step = LoopStep {
        name: stem,
        counter: l.counter.clone(),
        entry: b.entry.clone(),
        pre: b.pre.clone(),
        post: b.post.clone(),
        carried: carried.clone(),
        body: rel,
    };
    let system = extract(&step, opts.fresh_counters).map_err(|e| SummarizeError::new(Stage::Recurrences, e.to_string()))?;
    let rd = reaching_definitions(&system, &build_eq_graph(&system));
    let params: BTreeSet<Var> = system.args().into_iter().collect();
    let consts = symbolic_constants(&system, &params);
    let solutions =
        solve_system(&system, opts.max_degree).map_err(|e| SummarizeError::new(Stage::Solve, format!("{}: {e}", l.pred)))?;
    let mut closed_forms = Vec::new();
    for (v, cf) in b.entry.iter().zip(&solutions) {
        let p = cf.as_polynomial().ok_or_else(|| {
            SummarizeError::new(Stage::Solve, format!("{}: closed form of {v} is exponential: {cf}", l.pred))
        })?;
        closed_forms.push((v.clone(), p.clone()));
    }

    // bounds of carried counters, restated at the last iteration
    let k1 = &Polynomial::var(l.counter.clone()) - &Polynomial::one();
    let at_last: BTreeMap<Var, Polynomial> =
        b.pre.iter().zip(&closed_forms).map(|(v, (_, p))| (v.clone(), p.substitute(&l.counter, &k1))).collect();
    let visible: BTreeSet<Var> =
        b.entry.iter().chain(&carried).chain(std::iter::once(&l.counter)).cloned().collect();
    let mut counters =
        vec![CounterInfo { name: l.counter.clone(), upper: rank.clone(), ranking: rank }];
    for c in inl.own.iter().chain(&inl.carried) {
        let upper = c
            .upper
            .as_ref()
            .and_then(|t| Polynomial::from_linterm(t).substitute_all(&at_last).to_linterm())
            .filter(|t| t.vars().all(|v| visible.contains(v)));
        counters.push(CounterInfo { name: c.name.clone(), upper, ranking: None });
    }
    Ok(LoopSummary {
        pred: l.pred.clone(),
        inputs: b.entry.clone(),
        counter: l.counter.clone(),
        carried,
        closed_forms,
        counters,
        step,
        system,
        solutions,
        rd,
        symbolic_constants: consts,
    })
}
