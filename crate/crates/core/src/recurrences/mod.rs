//! Recurrence equation systems extracted from counted loops.

mod accumulator;
mod eqgraph;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Value};

use crate::linarith::{ConstraintStore, LinConstraint, LinTerm, Rational, Rel, Var};
use crate::path_clauses::CountedLoop;
use crate::poly::Polynomial;
use crate::relation::Relation;

pub use accumulator::{to_accumulator, AccumulatorError, MultiArgRec};
pub use eqgraph::{build_eq_graph, scc_order, EdgeKind, EqEdge, EqGraph, ENTRY_NODE, HALT_NODE};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecurrenceError {
    #[error("the update of {0} is not uniquely determined by the loop body")]
    NonDeterministicUpdate(Var),
    #[error("the update of {0} is not polynomial in the previous state")]
    NonPolynomialUpdate(Var),
    #[error("loop {0} calls nested loops whose solutions are not available")]
    MissingInnerSolution(String),
    #[error("functions {0:?} depend on each other")]
    CyclicDependency(Vec<String>),
}

/// The variable standing for `f(k-1, …)` in right-hand sides.
pub fn app_var(f: &str) -> Var {
    format!("{f}[k-1]")
}

/// The function applied by an application variable.
pub fn app_target(v: &str) -> Option<&str> {
    v.strip_suffix("[k-1]")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EqKind {
    Base,
    Step,
}

/// `func(k, params) = rhs` under `condition`. Applications `g(k-1, params)`
/// occur in `rhs` as the variables [`app_var`]`(g)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecEq {
    pub id: String,
    pub func: String,
    pub kind: EqKind,
    pub rhs: Polynomial,
    pub condition: ConstraintStore,
}

impl RecEq {
    /// Functions applied in the right-hand side.
    pub fn refs(&self) -> BTreeSet<String> {
        self.rhs.vars().iter().filter_map(|v| app_target(v)).map(str::to_string).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EqSystem {
    pub counter: Var,
    /// Arguments besides the counter, shared by every function.
    pub params: Vec<Var>,
    pub functions: Vec<String>,
    /// The loop variable each function tracks, in function order.
    pub tracks: Vec<Var>,
    pub equations: Vec<RecEq>,
    /// Constraints on intermediate states, kept for ranking and feasibility.
    pub guards: ConstraintStore,
    /// Constant symbols introduced for removed arguments, with the argument
    /// each one stands for.
    pub constants: Vec<(Var, Var)>,
}

impl EqSystem {
    pub fn base(&self, f: &str) -> Option<&RecEq> {
        self.equations.iter().find(|e| e.func == f && e.kind == EqKind::Base)
    }

    pub fn step(&self, f: &str) -> Option<&RecEq> {
        self.equations.iter().find(|e| e.func == f && e.kind == EqKind::Step)
    }

    /// Function arguments: the counter, then the parameters.
    pub fn args(&self) -> Vec<Var> {
        std::iter::once(self.counter.clone()).chain(self.params.iter().cloned()).collect()
    }

    /// Values of every function at `k` by iterating the equations, with the
    /// parameters and constant symbols taken from `env`.
    pub fn iterate(&self, env: &BTreeMap<Var, Rational>, k: u32) -> Option<BTreeMap<String, Rational>> {
        let mut env = env.clone();
        for (c, v) in &self.constants {
            if let Some(x) = env.get(v).cloned() {
                env.entry(c.clone()).or_insert(x);
            }
        }
        let mut cur: BTreeMap<String, Rational> = BTreeMap::new();
        env.insert(self.counter.clone(), Rational::from_integer(0.into()));
        for f in &self.functions {
            cur.insert(f.clone(), self.base(f)?.rhs.eval(&env)?);
        }
        for i in 1..=k {
            let mut e = env.clone();
            e.insert(self.counter.clone(), Rational::from_integer(i.into()));
            for (f, x) in &cur {
                e.insert(app_var(f), x.clone());
            }
            let mut next = BTreeMap::new();
            for f in &self.functions {
                next.insert(f.clone(), self.step(f)?.rhs.eval(&e)?);
            }
            cur = next;
        }
        Some(cur)
    }

    /// Renders an expression with applications written as calls.
    pub fn show(&self, p: &Polynomial) -> String {
        let args = self.args().join(",").replacen(&self.counter, &format!("{}-1", self.counter), 1);
        let mut s = p.to_string();
        for f in &self.functions {
            s = s.replace(&app_var(f), &format!("{f}({args})"));
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let fns: Vec<Value> = self
            .functions
            .iter()
            .map(|f| {
                let eq = |e: Option<&RecEq>| match e {
                    Some(e) => json!({
                        "id": e.id,
                        "rhs": self.show(&e.rhs),
                        "rhs_poly": e.rhs.to_json(),
                        "condition": e.condition.to_string(),
                    }),
                    None => Value::Null,
                };
                json!({ "function": f, "base": eq(self.base(f)), "step": eq(self.step(f)) })
            })
            .collect();
        json!({ "counter": self.counter, "params": self.params, "functions": fns })
    }
}

impl fmt::Display for EqSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let args = self.args().join(",");
        for func in &self.functions {
            writeln!(f, "{func}({args}) =")?;
            for e in self.equations.iter().filter(|e| &e.func == func) {
                writeln!(f, "  {}  for {}  [{}]", self.show(&e.rhs), e.condition, e.id)?;
            }
        }
        Ok(())
    }
}

/// One loop iteration in the form needed for extraction: a relation between
/// the state `pre` before it and `post` after it, with nested loops already
/// replaced by their closed forms over `carried` counters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopStep {
    pub name: String,
    pub counter: Var,
    pub entry: Vec<Var>,
    pub pre: Vec<Var>,
    pub post: Vec<Var>,
    pub carried: Vec<Var>,
    pub body: Relation,
}

impl LoopStep {
    /// The step of a loop without nested loops.
    pub fn from_loop(l: &CountedLoop, name: &str) -> Result<LoopStep, RecurrenceError> {
        if !l.body.calls.is_empty() {
            return Err(RecurrenceError::MissingInnerSolution(l.pred.clone()));
        }
        Ok(LoopStep {
            name: name.to_string(),
            counter: l.counter.clone(),
            entry: l.body.entry.clone(),
            pre: l.body.pre.clone(),
            post: l.body.post.clone(),
            carried: vec![],
            body: Relation::new(l.body.constraint.clone()),
        })
    }
}

/// One function per loop variable: `f_j(0) = x_j` and
/// `f_j(k) = e_j[pre_i ↦ f_i(k-1)]` for `k > 0`, where `post_j = e_j(pre)`.
///
/// With `fresh_counters`, constraints on carried counters become part of
/// the recursive equations' conditions.
pub fn extract(step: &LoopStep, fresh_counters: bool) -> Result<EqSystem, RecurrenceError> {
    let known: BTreeSet<Var> = step.pre.iter().chain(&step.entry).chain(&step.carried).cloned().collect();
    let solved = step.body.solve(&known);
    let functions: Vec<String> = step.entry.iter().map(|v| format!("{}^{}", step.name, v)).collect();
    let apps: BTreeMap<Var, Polynomial> =
        step.pre.iter().zip(&functions).map(|(v, f)| (v.clone(), Polynomial::var(app_var(f)))).collect();
    let k = LinTerm::var(step.counter.clone());
    let mut step_cond = ConstraintStore::from_constraints([LinConstraint::gt(&k, &LinTerm::int(0))]);
    if fresh_counters {
        for c in step.body.linear.constraints() {
            if c.vars().any(|v| step.carried.contains(v)) {
                step_cond.push(c.clone());
            }
        }
    }
    let base_cond = ConstraintStore::from_constraints([LinConstraint::eq(&k, &LinTerm::int(0))]);

    let mut equations = Vec::new();
    for (j, (f, post)) in functions.iter().zip(&step.post).enumerate() {
        let Some(def) = solved.closed(post, &known) else {
            let stuck = solved.residual.iter().any(|p| p.mentions(post))
                || solved.defs.get(post).is_some_and(|d| d.vars().iter().any(|v| solved.residual.iter().any(|p| p.mentions(v))));
            let name = step.entry[j].clone();
            return Err(if stuck {
                RecurrenceError::NonPolynomialUpdate(name)
            } else {
                RecurrenceError::NonDeterministicUpdate(name)
            });
        };
        equations.push(RecEq {
            id: format!("e{}", 2 * j + 1),
            func: f.clone(),
            kind: EqKind::Step,
            rhs: def.substitute_all(&apps),
            condition: step_cond.clone(),
        });
        equations.push(RecEq {
            id: format!("e{}", 2 * j + 2),
            func: f.clone(),
            kind: EqKind::Base,
            rhs: Polynomial::var(step.entry[j].clone()),
            condition: base_cond.clone(),
        });
    }
    let guards = ConstraintStore::from_constraints(step.body.linear.constraints().iter().filter(|c| c.rel != Rel::Eq).cloned());
    Ok(EqSystem {
        counter: step.counter.clone(),
        params: step.entry.iter().chain(&step.carried).cloned().collect(),
        functions,
        tracks: step.entry.clone(),
        equations,
        guards,
        constants: vec![],
    })
}
