use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use super::{cmp_clause_ids, Head, Program};

pub const TRUE_NODE: &str = "true";
pub const FALSE_NODE: &str = "false";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: String,
    pub label: String,
    pub to: String,
}

/// Control-flow graph: predicates as nodes, clauses as labelled edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cfg {
    pub nodes: Vec<String>,
    pub edges: Vec<Edge>,
}

impl Cfg {
    pub fn edge(&self, label: &str) -> Option<&Edge> {
        self.edges.iter().find(|e| e.label == label)
    }

    pub fn has_node(&self, n: &str) -> bool {
        self.nodes.iter().any(|m| m == n)
    }

    pub fn out_edges<'a>(&'a self, n: &'a str) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| e.from == n)
    }

    /// Builds a graph directly from edge triples; used by tests and tools.
    pub fn from_edges(edges: impl IntoIterator<Item = (String, String, String)>) -> Cfg {
        let mut nodes = BTreeSet::new();
        let mut es: Vec<Edge> = Vec::new();
        for (from, label, to) in edges {
            nodes.insert(from.clone());
            nodes.insert(to.clone());
            es.push(Edge { from, label, to });
        }
        nodes.insert(TRUE_NODE.to_string());
        es.sort_by(|a, b| a.from.cmp(&b.from).then_with(|| cmp_clause_ids(&a.label, &b.label)));
        Cfg { nodes: nodes.into_iter().collect(), edges: es }
    }
}

impl fmt::Display for Cfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {}", self.nodes.join(", "))?;
        for e in &self.edges {
            writeln!(f, "{} -{}-> {}", e.from, e.label, e.to)?;
        }
        Ok(())
    }
}

/// One edge per clause, from the head predicate to the body predicate (or
/// `true` for constrained facts). `true` is always a node; `false` only when
/// some clause has a false head.
pub fn build_cfg(p: &Program) -> Cfg {
    let mut g = Cfg::from_edges(p.clauses.iter().map(|c| {
        let from = match &c.head {
            Head::Atom(a) => a.predicate.clone(),
            Head::False => FALSE_NODE.to_string(),
        };
        (from, c.id.clone(), c.target().to_string())
    }));
    if g.edges.is_empty() {
        g.nodes = vec![p.entry.0.clone(), TRUE_NODE.to_string()];
        g.nodes.sort();
    }
    g
}
