//! Equation graphs and the dependency order of functions.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{EqKind, EqSystem, RecurrenceError};
use crate::graph::sccs;

pub const ENTRY_NODE: &str = "entry";
pub const HALT_NODE: &str = "halt";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Entry,
    /// The edge of an equation: a self-loop for recursive equations, into
    /// `halt` otherwise.
    Equation,
    /// From a function to another one its equation applies.
    Dependency,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EqEdge {
    pub id: String,
    pub from: String,
    pub to: String,
    pub kind: EdgeKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EqGraph {
    pub nodes: Vec<String>,
    pub edges: Vec<EqEdge>,
}

impl EqGraph {
    pub fn incoming<'a>(&'a self, n: &'a str) -> impl Iterator<Item = &'a EqEdge> + 'a {
        self.edges.iter().filter(move |e| e.to == n)
    }
}

/// Functions no other function depends on.
fn roots(s: &EqSystem) -> Vec<String> {
    let used: BTreeSet<String> = s
        .equations
        .iter()
        .flat_map(|e| e.refs().into_iter().filter(|g| *g != e.func).collect::<Vec<_>>())
        .collect();
    s.functions.iter().filter(|f| !used.contains(*f)).cloned().collect()
}

pub fn build_eq_graph(s: &EqSystem) -> EqGraph {
    let mut nodes = vec![ENTRY_NODE.to_string()];
    nodes.extend(s.functions.iter().cloned());
    nodes.push(HALT_NODE.to_string());
    let mut edges = Vec::new();
    let rs = roots(s);
    for (i, f) in rs.iter().enumerate() {
        let id = if rs.len() == 1 { "e0".to_string() } else { format!("e0_{}", i + 1) };
        edges.push(EqEdge { id, from: ENTRY_NODE.into(), to: f.clone(), kind: EdgeKind::Entry });
    }
    for e in &s.equations {
        let refs = e.refs();
        let to = if e.kind == EqKind::Step && refs.contains(&e.func) { e.func.clone() } else { HALT_NODE.to_string() };
        edges.push(EqEdge { id: e.id.clone(), from: e.func.clone(), to, kind: EdgeKind::Equation });
        for g in refs.into_iter().filter(|g| *g != e.func) {
            edges.push(EqEdge { id: e.id.clone(), from: e.func.clone(), to: g, kind: EdgeKind::Dependency });
        }
    }
    EqGraph { nodes, edges }
}

/// Groups of functions, callees first. Each group is a single function.
pub fn scc_order(s: &EqSystem) -> Result<Vec<Vec<String>>, RecurrenceError> {
    let groups = sccs(&s.functions, |f| {
        s.equations.iter().filter(|e| e.func == f).flat_map(|e| e.refs()).collect()
    });
    if let Some(g) = groups.iter().find(|g| g.len() > 1) {
        return Err(RecurrenceError::CyclicDependency(g.clone()));
    }
    Ok(groups)
}
