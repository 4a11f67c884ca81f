//! Reaching definitions over equation graphs and symbolic constants.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{json, Value};

use crate::linarith::{is_sat, project, ConstraintStore, LinConstraint, LinTerm, Var};
use crate::recurrences::{build_eq_graph, EdgeKind, EqGraph, EqSystem, RecEq};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RdError {
    #[error("{0} is not a symbolic constant")]
    NotConstant(Var),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Classification {
    pub defined: bool,
    pub constrained: bool,
}

impl Classification {
    /// The weak notion: defined or constrained.
    pub fn any(&self) -> bool {
        self.defined || self.constrained
    }
}

fn primed(v: &str) -> Var {
    format!("{v}'")
}

/// Whether `v` is defined or constrained in equation `eq`. The applications
/// in the right-hand side pass `k-1` and the unchanged parameters.
pub fn classify(s: &EqSystem, eq: &RecEq, v: &str) -> Classification {
    let args = s.args();
    let defined = !eq.refs().is_empty() && {
        let mut st = eq.condition.clone();
        for a in &args {
            let passed = if *a == s.counter { &LinTerm::var(a.clone()) - &LinTerm::int(1) } else { LinTerm::var(a.clone()) };
            st.push(LinConstraint::eq(&LinTerm::var(primed(a)), &passed));
        }
        st.push(LinConstraint::eq(&LinTerm::var(v), &LinTerm::var(primed(v))));
        !is_sat(&st)
    };
    let keep: BTreeSet<Var> = args.into_iter().collect();
    let constrained = match project(&eq.condition, &keep) {
        Ok(p) => p.vars().contains(v),
        Err(_) => eq.condition.vars().contains(v),
    };
    Classification { defined, constrained }
}

/// For every node, the pairs `(v, e)` such that `v` may have been last
/// defined or constrained by equation `e`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RdAssignment(pub BTreeMap<String, BTreeSet<(Var, String)>>);

impl RdAssignment {
    pub fn at(&self, node: &str) -> BTreeSet<(Var, String)> {
        self.0.get(node).cloned().unwrap_or_default()
    }

    pub fn to_json(&self) -> Value {
        let m: serde_json::Map<String, Value> = self
            .0
            .iter()
            .map(|(n, fs)| (n.clone(), Value::Array(fs.iter().map(|(v, e)| json!([v, e])).collect())))
            .collect();
        Value::Object(m)
    }
}

/// Least fixpoint of the forward may-analysis: each edge generates the
/// facts of its equation and kills earlier facts for the same variables.
pub fn reaching_definitions(s: &EqSystem, g: &EqGraph) -> RdAssignment {
    let args = s.args();
    let gens: Vec<BTreeSet<(Var, String)>> = g
        .edges
        .iter()
        .map(|e| {
            if e.kind == EdgeKind::Entry {
                return BTreeSet::new();
            }
            let Some(eq) = s.equations.iter().find(|q| q.id == e.id) else { return BTreeSet::new() };
            args.iter().filter(|v| classify(s, eq, v).any()).map(|v| (v.clone(), eq.id.clone())).collect()
        })
        .collect();
    let mut rd: BTreeMap<String, BTreeSet<(Var, String)>> = g.nodes.iter().map(|n| (n.clone(), BTreeSet::new())).collect();
    loop {
        let mut changed = false;
        for (e, gen) in g.edges.iter().zip(&gens) {
            let killed: BTreeSet<&Var> = gen.iter().map(|(v, _)| v).collect();
            let mut out: BTreeSet<(Var, String)> =
                rd[&e.from].iter().filter(|(v, _)| !killed.contains(v)).cloned().collect();
            out.extend(gen.iter().cloned());
            let target = rd.entry(e.to.clone()).or_default();
            for f in out {
                changed |= target.insert(f);
            }
        }
        if !changed {
            break;
        }
    }
    RdAssignment(rd)
}

/// The variables of interest for which no fact reaches the exit node.
pub fn symbolic_constants(s: &EqSystem, vars: &BTreeSet<Var>) -> BTreeSet<Var> {
    let g = build_eq_graph(s);
    let rd = reaching_definitions(s, &g);
    let at_exit: BTreeSet<Var> = rd.at(crate::recurrences::HALT_NODE).into_iter().map(|(v, _)| v).collect();
    vars.iter().filter(|v| !at_exit.contains(*v)).cloned().collect()
}

/// The constant symbol standing for argument `v`.
pub fn constant_symbol(v: &str) -> Var {
    format!("c_{v}")
}

/// Drops `consts` from the arguments and replaces their occurrences by
/// constant symbols.
pub fn remove_constants(s: &EqSystem, consts: &BTreeSet<Var>) -> Result<EqSystem, RdError> {
    let args: BTreeSet<Var> = s.args().into_iter().collect();
    let sc = symbolic_constants(s, &args);
    if let Some(v) = consts.iter().find(|v| !sc.contains(*v)) {
        return Err(RdError::NotConstant(v.clone()));
    }
    let map: BTreeMap<Var, Var> = consts.iter().map(|v| (v.clone(), constant_symbol(v))).collect();
    let mut out = s.clone();
    out.params.retain(|v| !consts.contains(v));
    for eq in &mut out.equations {
        eq.rhs = eq.rhs.rename(&map);
        eq.condition = eq.condition.rename(&map);
    }
    out.constants.extend(map.into_iter().map(|(v, c)| (c, v)));
    Ok(out)
}

/// Conditions of a system, for diagnostics.
pub fn conditions(s: &EqSystem) -> ConstraintStore {
    s.equations.iter().flat_map(|e| e.condition.constraints().to_vec()).collect()
}
