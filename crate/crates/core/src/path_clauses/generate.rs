//! Formation of path clauses from a regular path expression.

use std::collections::{BTreeMap, BTreeSet};

use super::{ExitState, Namer, PathAtom, PathClause, PathPredicate, PathProgram, TOP};
use crate::chc::{Program, FALSE_NODE, TRUE_NODE};
use crate::linarith::{ConstraintStore, LinConstraint, LinTerm, Var};
use crate::pathexpr::RegExpr;

type Instance = (RegExpr, String, String);

struct Gen<'a> {
    prog: &'a Program,
    ids: BTreeMap<RegExpr, usize>,
    ends_memo: BTreeMap<(RegExpr, String), BTreeSet<String>>,
    names: BTreeMap<Instance, String>,
    used_names: BTreeSet<String>,
    preds: Vec<PathPredicate>,
    clauses: Vec<PathClause>,
    todo: Vec<Instance>,
}

/// Numbers subexpressions in postorder, first appearance wins.
pub(crate) fn number(e: &RegExpr, ids: &mut BTreeMap<RegExpr, usize>) {
    match e {
        RegExpr::Concat(a, b) | RegExpr::Alt(a, b) => {
            number(a, ids);
            number(b, ids);
        }
        RegExpr::Star(a) => number(a, ids),
        _ => {}
    }
    if !ids.contains_key(e) {
        let n = ids.len() + 1;
        ids.insert(e.clone(), n);
    }
}

/// Argument name stems of a node, taken from the first clause mentioning it.
pub(crate) fn node_stems(prog: &Program, node: &str) -> Vec<Var> {
    if node == TRUE_NODE || node == FALSE_NODE {
        return vec![];
    }
    let from_head = prog.clauses.iter().find_map(|c| c.head.atom().filter(|a| a.predicate == node));
    let from_body = || prog.clauses.iter().find_map(|c| c.body.as_ref().filter(|a| a.predicate == node));
    match from_head.or_else(from_body) {
        Some(a) => a.args.clone(),
        None => vec![],
    }
}

impl Gen<'_> {
    fn arity(&self, node: &str) -> usize {
        node_stems(self.prog, node).len()
    }

    fn fresh_tuple(&self, namer: &mut Namer, node: &str) -> Vec<Var> {
        node_stems(self.prog, node).iter().map(|s| namer.fresh(s)).collect()
    }

    /// Nodes at which paths of `e` starting at `p` can end.
    fn ends(&mut self, e: &RegExpr, p: &str) -> BTreeSet<String> {
        let key = (e.clone(), p.to_string());
        if let Some(s) = self.ends_memo.get(&key) {
            return s.clone();
        }
        let out: BTreeSet<String> = match e {
            RegExpr::Empty => BTreeSet::new(),
            RegExpr::Epsilon => [p.to_string()].into(),
            RegExpr::Letter(c) => match self.prog.clause(c) {
                Some(cl) if cl.head.node() == p => [cl.target().to_string()].into(),
                _ => BTreeSet::new(),
            },
            RegExpr::Concat(a, b) => {
                let mut s = BTreeSet::new();
                for r in self.ends(a, p) {
                    s.extend(self.ends(b, &r));
                }
                s
            }
            RegExpr::Alt(a, b) => {
                let mut s = self.ends(a, p);
                s.extend(self.ends(b, p));
                s
            }
            RegExpr::Star(a) => {
                let mut s: BTreeSet<String> = [p.to_string()].into();
                let mut work = vec![p.to_string()];
                while let Some(r) = work.pop() {
                    for t in self.ends(a, &r) {
                        if s.insert(t.clone()) {
                            work.push(t);
                        }
                    }
                }
                s
            }
        };
        self.ends_memo.insert(key, out.clone());
        out
    }

    fn name_of(&mut self, inst: &Instance) -> String {
        if let Some(n) = self.names.get(inst) {
            return n.clone();
        }
        let (e, p, q) = inst;
        let id = self.ids.get(e).copied().unwrap_or(0);
        let mut name = if p == q { format!("{p}{id}") } else { format!("{p}{id}_{q}") };
        while self.used_names.contains(&name) || name == TOP {
            name.push('_');
        }
        self.used_names.insert(name.clone());
        self.names.insert(inst.clone(), name.clone());
        self.preds.push(PathPredicate {
            name: name.clone(),
            subexpr: e.clone(),
            start: p.clone(),
            end: q.clone(),
            in_arity: self.arity(p),
            out_arity: self.arity(q),
            counted: false,
        });
        self.todo.push(inst.clone());
        name
    }

    fn push(&mut self, head: PathAtom, constraint: ConstraintStore, body: Vec<PathAtom>, exit: Option<ExitState>) {
        let id = format!("g{}", self.clauses.len() + 1);
        self.clauses.push(PathClause { id, head, constraint, body, exit });
    }

    fn identity(&self, namer: &mut Namer, node: &str) -> (Vec<Var>, Vec<Var>, ConstraintStore) {
        let xs = self.fresh_tuple(namer, node);
        let ys = self.fresh_tuple(namer, node);
        let eqs = ConstraintStore::from_constraints(
            xs.iter().zip(&ys).map(|(x, y)| LinConstraint::eq(&LinTerm::var(y.clone()), &LinTerm::var(x.clone()))),
        );
        (xs, ys, eqs)
    }

    fn instance(&mut self, inst: Instance) {
        let name = self.names[&inst].clone();
        let (e, p, q) = inst;
        let mk = |name: &str, a: &[Var], b: &[Var]| PathAtom { pred: name.to_string(), args: [a, b].concat() };
        match &e {
            RegExpr::Empty => {}
            RegExpr::Epsilon => {
                if p == q {
                    let mut namer = Namer::default();
                    let (xs, ys, eqs) = self.identity(&mut namer, &p);
                    self.push(mk(&name, &xs, &ys), eqs, vec![], None);
                }
            }
            RegExpr::Letter(c) => self.letter(&name, c, &p, &q),
            RegExpr::Concat(a, b) => {
                let mids: Vec<String> = self.ends(a, &p).into_iter().filter(|r| self.ends(b, r).contains(&q)).collect();
                for r in mids {
                    let na = self.name_of(&((**a).clone(), p.clone(), r.clone()));
                    let nb = self.name_of(&((**b).clone(), r.clone(), q.clone()));
                    let mut namer = Namer::default();
                    let xs = self.fresh_tuple(&mut namer, &p);
                    let ys = self.fresh_tuple(&mut namer, &r);
                    let zs = self.fresh_tuple(&mut namer, &q);
                    self.push(mk(&name, &xs, &zs), ConstraintStore::new(), vec![mk(&na, &xs, &ys), mk(&nb, &ys, &zs)], None);
                }
            }
            RegExpr::Alt(a, b) => {
                for branch in [a, b] {
                    if !self.ends(branch, &p).contains(&q) {
                        continue;
                    }
                    let nb = self.name_of(&((**branch).clone(), p.clone(), q.clone()));
                    let mut namer = Namer::default();
                    let xs = self.fresh_tuple(&mut namer, &p);
                    let zs = self.fresh_tuple(&mut namer, &q);
                    self.push(mk(&name, &xs, &zs), ConstraintStore::new(), vec![mk(&nb, &xs, &zs)], None);
                }
            }
            RegExpr::Star(a) => {
                if p == q {
                    let mut namer = Namer::default();
                    let (xs, ys, eqs) = self.identity(&mut namer, &p);
                    self.push(mk(&name, &xs, &ys), eqs, vec![], None);
                }
                let mids: Vec<String> = self.ends(&e, &p).into_iter().filter(|r| self.ends(a, r).contains(&q)).collect();
                for r in mids {
                    let prev = self.name_of(&(e.clone(), p.clone(), r.clone()));
                    let step = self.name_of(&((**a).clone(), r.clone(), q.clone()));
                    let mut namer = Namer::default();
                    let xs = self.fresh_tuple(&mut namer, &p);
                    let ys = self.fresh_tuple(&mut namer, &r);
                    let zs = self.fresh_tuple(&mut namer, &q);
                    self.push(mk(&name, &xs, &zs), ConstraintStore::new(), vec![mk(&prev, &xs, &ys), mk(&step, &ys, &zs)], None);
                }
            }
        }
    }

    /// A copy of clause `c`, with its head arguments as inputs and its body
    /// arguments as outputs.
    fn letter(&mut self, name: &str, c: &str, p: &str, q: &str) {
        let Some(cl) = self.prog.clause(c) else { return };
        if cl.head.node() != p || cl.target() != q {
            return;
        }
        let mut namer = Namer::default();
        let xs = self.fresh_tuple(&mut namer, p);
        let ys = self.fresh_tuple(&mut namer, q);
        let mut map: BTreeMap<Var, Var> = BTreeMap::new();
        let mut store = ConstraintStore::new();
        if let Some(h) = cl.head.atom() {
            for (v, x) in h.args.iter().zip(&xs) {
                map.insert(v.clone(), x.clone());
            }
        }
        if let Some(b) = &cl.body {
            for (v, y) in b.args.iter().zip(&ys) {
                match map.get(v) {
                    Some(x) => store.push(LinConstraint::eq(&LinTerm::var(y.clone()), &LinTerm::var(x.clone()))),
                    None => {
                        map.insert(v.clone(), y.clone());
                    }
                }
            }
        }
        for v in cl.constraint.vars() {
            if !map.contains_key(&v) {
                let f = namer.fresh(&v);
                map.insert(v, f);
            }
        }
        let mut constraint = cl.constraint.rename(&map);
        constraint.extend(&store);
        let exit = (cl.body.is_none() && cl.head.atom().is_some()).then(|| ExitState { pred: p.to_string(), args: xs.clone() });
        let head = PathAtom { pred: name.to_string(), args: [xs, ys].concat() };
        self.push(head, constraint, vec![], exit);
    }
}

/// Path clauses for the paths in `e` from node `start` to node `end`,
/// with a top-level clause `path(x̄, ȳ) ← root(x̄, ȳ)`.
pub fn generate(prog: &Program, e: &RegExpr, start: &str, end: &str) -> PathProgram {
    let mut ids = BTreeMap::new();
    number(e, &mut ids);
    let mut g = Gen {
        prog,
        ids,
        ends_memo: BTreeMap::new(),
        names: BTreeMap::new(),
        used_names: BTreeSet::new(),
        preds: Vec::new(),
        clauses: Vec::new(),
        todo: Vec::new(),
    };
    let root = (e.clone(), start.to_string(), end.to_string());
    let root_name = g.name_of(&root);
    let mut namer = Namer::default();
    let xs = g.fresh_tuple(&mut namer, start);
    let ys = g.fresh_tuple(&mut namer, end);
    let args = [xs, ys].concat();
    g.preds.insert(
        0,
        PathPredicate {
            name: TOP.to_string(),
            subexpr: e.clone(),
            start: start.to_string(),
            end: end.to_string(),
            in_arity: g.arity(start),
            out_arity: g.arity(end),
            counted: false,
        },
    );
    g.push(
        PathAtom { pred: TOP.to_string(), args: args.clone() },
        ConstraintStore::new(),
        vec![PathAtom { pred: root_name, args }],
        None,
    );
    while let Some(inst) = g.todo.pop() {
        g.instance(inst);
    }
    let entry_args = node_stems(prog, start);
    PathProgram { predicates: g.preds, clauses: g.clauses, entry: start.to_string(), entry_args }
}
