//! Path expressions by state elimination.

use std::collections::BTreeMap;

use super::RegExpr;
use crate::chc::Cfg;
use crate::graph::sccs;

const START: &str = "\u{0}start";
const END: &str = "\u{0}end";

/// A regular expression for all labelled paths from `from` to `to`.
///
/// Nodes are eliminated in reverse topological order of the SCC
/// condensation (sinks first), by name inside a component. Returns `∅`
/// when `to` is unreachable.
pub fn path_expression(g: &Cfg, from: &str, to: &str) -> RegExpr {
    let mut r: BTreeMap<(String, String), RegExpr> = BTreeMap::new();
    let add = |r: &mut BTreeMap<(String, String), RegExpr>, a: &str, b: &str, e: RegExpr| {
        let key = (a.to_string(), b.to_string());
        let old = r.remove(&key).unwrap_or(RegExpr::Empty);
        let new = RegExpr::alt(old, e);
        if new != RegExpr::Empty {
            r.insert(key, new);
        }
    };
    add(&mut r, START, from, RegExpr::Epsilon);
    add(&mut r, to, END, RegExpr::Epsilon);
    for e in &g.edges {
        add(&mut r, &e.from, &e.to, RegExpr::letter(e.label.clone()));
    }
    let order: Vec<String> = sccs(&g.nodes, |n| {
        let mut v: Vec<String> = g.out_edges(n).map(|e| e.to.clone()).collect();
        v.dedup();
        v
    })
    .into_iter()
    .flatten()
    .collect();
    for q in order {
        let self_loop = r.remove(&(q.clone(), q.clone())).unwrap_or(RegExpr::Empty);
        let loop_star = RegExpr::star(self_loop);
        let ins: Vec<(String, RegExpr)> =
            r.iter().filter(|((_, b), _)| *b == q).map(|((a, _), e)| (a.clone(), e.clone())).collect();
        let outs: Vec<(String, RegExpr)> =
            r.iter().filter(|((a, _), _)| *a == q).map(|((_, b), e)| (b.clone(), e.clone())).collect();
        r.retain(|(a, b), _| *a != q && *b != q);
        for (p, e_in) in &ins {
            for (s, e_out) in &outs {
                let through = RegExpr::concat(e_in.clone(), RegExpr::concat(loop_star.clone(), e_out.clone()));
                add(&mut r, p, s, through);
            }
        }
    }
    r.remove(&(START.to_string(), END.to_string())).unwrap_or(RegExpr::Empty)
}
