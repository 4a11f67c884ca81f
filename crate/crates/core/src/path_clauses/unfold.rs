//! Unfolding of non-recursive path predicates.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed};

use super::generate::number;
use super::{ExitState, Namer, PathAtom, PathClause, PathProgram, TOP};
use crate::linarith::{is_sat, ConstraintStore, LinConstraint, LinTerm, Rel, Var};

/// Inlines every predicate that is neither the top predicate nor a star,
/// eliminates local variables defined by equalities, drops unsatisfiable
/// clauses and unreferenced predicates, and renumbers clauses `p1, p2, …`.
pub fn unfold_simplify(pp: &PathProgram) -> PathProgram {
    let keep: BTreeSet<&str> =
        pp.predicates.iter().filter(|p| p.name == TOP || p.is_star()).map(|p| p.name.as_str()).collect();
    let mut out = Vec::new();
    for c in pp.clauses.iter().filter(|c| keep.contains(c.head.pred.as_str())) {
        for u in expand(pp, &keep, c.clone(), 0) {
            let s = simplify(u);
            if is_sat(&s.constraint) {
                out.push(s);
            }
        }
    }

    let mut reached: BTreeSet<String> = [TOP.to_string()].into();
    let mut work = vec![TOP.to_string()];
    while let Some(p) = work.pop() {
        for c in out.iter().filter(|c| c.head.pred == p) {
            for a in &c.body {
                if reached.insert(a.pred.clone()) {
                    work.push(a.pred.clone());
                }
            }
        }
    }

    let mut ids = BTreeMap::new();
    if let Some(top) = pp.predicate(TOP) {
        number(&top.subexpr, &mut ids);
    }
    let mut preds: Vec<_> = pp.predicates.iter().filter(|p| reached.contains(&p.name)).cloned().collect();
    preds.sort_by_key(|p| (p.name != TOP, ids.get(&p.subexpr).copied().unwrap_or(usize::MAX), p.name.clone()));

    let mut clauses = Vec::new();
    for p in &preds {
        let (rec, base): (Vec<_>, Vec<_>) = out
            .iter()
            .filter(|c| c.head.pred == p.name)
            .partition(|c| c.body.iter().any(|a| a.pred == p.name));
        clauses.extend(base.into_iter().chain(rec).cloned());
    }
    for (i, c) in clauses.iter_mut().enumerate() {
        c.id = format!("p{}", i + 1);
    }
    PathProgram { predicates: preds, clauses, entry: pp.entry.clone(), entry_args: pp.entry_args.clone() }
}

const MAX_UNFOLD: usize = 256;

/// All unfoldings of `c` in which no body atom refers to an inlinable predicate.
fn expand(pp: &PathProgram, keep: &BTreeSet<&str>, c: PathClause, depth: usize) -> Vec<PathClause> {
    let Some(pos) = c.body.iter().position(|a| !keep.contains(a.pred.as_str())) else {
        return vec![c];
    };
    if depth > MAX_UNFOLD {
        return vec![c];
    }
    let atom = c.body[pos].clone();
    let mut res = Vec::new();
    for callee in pp.clauses_of(&atom.pred) {
        let inlined = inline(&c, pos, &atom, callee);
        res.extend(expand(pp, keep, inlined, depth + 1));
    }
    res
}

fn inline(c: &PathClause, pos: usize, atom: &PathAtom, callee: &PathClause) -> PathClause {
    let mut namer = Namer::new(c.vars());
    let mut map: BTreeMap<Var, Var> = BTreeMap::new();
    let mut constraint = c.constraint.clone();
    for (h, a) in callee.head.args.iter().zip(&atom.args) {
        match map.get(h) {
            Some(prev) if prev != a => {
                constraint.push(LinConstraint::eq(&LinTerm::var(a.clone()), &LinTerm::var(prev.clone())))
            }
            Some(_) => {}
            None => {
                map.insert(h.clone(), a.clone());
            }
        }
    }
    for v in callee.vars() {
        if !map.contains_key(&v) {
            let f = namer.fresh(&v);
            map.insert(v, f);
        }
    }
    let rn = |a: &PathAtom| PathAtom { pred: a.pred.clone(), args: a.args.iter().map(|v| map[v].clone()).collect() };
    constraint.extend(&callee.constraint.rename(&map));
    let mut body = c.body[..pos].to_vec();
    body.extend(callee.body.iter().map(rn));
    body.extend(c.body[pos + 1..].iter().cloned());
    let exit = c.exit.clone().or_else(|| {
        callee.exit.as_ref().map(|e| ExitState { pred: e.pred.clone(), args: e.args.iter().map(|v| map[v].clone()).collect() })
    });
    PathClause { id: c.id.clone(), head: c.head.clone(), constraint, body, exit }
}

/// Substitutes away local variables defined by an equality in which they
/// have a unit coefficient.
pub(crate) fn simplify(mut c: PathClause) -> PathClause {
    let iface = c.interface_vars();
    loop {
        let found = c.constraint.constraints().iter().enumerate().find_map(|(i, k)| {
            if k.rel != Rel::Eq {
                return None;
            }
            k.lhs
                .coeffs()
                .iter()
                .find(|(v, a)| !iface.contains(*v) && a.abs().is_one())
                .map(|(v, a)| (i, v.clone(), a.clone()))
        });
        let Some((i, v, a)) = found else { break };
        let k = &c.constraint.constraints()[i];
        // a*v + rest = 0, so v = -rest / a
        let rest = &k.lhs - &LinTerm::scaled_var(v.clone(), a.clone());
        let def = rest.scale(&(-a.recip()));
        let others: Vec<LinConstraint> =
            c.constraint.constraints().iter().enumerate().filter(|(j, _)| *j != i).map(|(_, k)| k.substitute(&v, &def)).collect();
        c.constraint = ConstraintStore::from_constraints(others);
    }
    c.constraint = c.constraint.without_trivial();
    c
}
