//! Unfold-fold of non-tail recurrences into accumulator-passing loops.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::One;

use crate::chc::{Atom, Clause, Head, Program};
use crate::linarith::{ConstraintStore, LinConstraint, LinTerm, Rational, Var};
use crate::poly::Polynomial;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AccumulatorError {
    #[error("unsupported recurrence shape: {0}")]
    UnsupportedShape(String),
}

/// `f(x̄) = add(x̄) + Σ c·f(ȳ)` when `guard`, `f(x̄) = base(x̄)` when `base_guard`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiArgRec {
    pub name: String,
    pub params: Vec<Var>,
    pub guard: ConstraintStore,
    pub add: Polynomial,
    pub calls: Vec<(Rational, Vec<LinTerm>)>,
    pub base_guard: ConstraintStore,
    pub base: Polynomial,
}

impl MultiArgRec {
    /// Direct recursive evaluation, giving up after `fuel` calls.
    pub fn eval(&self, vals: &[Rational], fuel: usize) -> Option<Rational> {
        let env: BTreeMap<Var, Rational> = self.params.iter().cloned().zip(vals.iter().cloned()).collect();
        if self.guard.holds(&env)? {
            let mut total = self.add.eval(&env)?;
            for (c, args) in &self.calls {
                let next: Option<Vec<Rational>> = args.iter().map(|t| t.eval(&env)).collect();
                total += c * self.eval(&next?, fuel.checked_sub(1)?)?;
            }
            Some(total)
        } else if self.base_guard.holds(&env)? {
            self.base.eval(&env)
        } else {
            None
        }
    }
}

fn fresh(taken: &mut BTreeSet<Var>, stem: &str) -> Var {
    let mut v = stem.to_string();
    let mut i = 1;
    while taken.contains(&v) {
        v = format!("{stem}{i}");
        i += 1;
    }
    taken.insert(v.clone());
    v
}

fn eqv(v: &str, t: LinTerm) -> LinConstraint {
    LinConstraint::eq(&LinTerm::var(v), &t)
}

/// The loop `f_aux(x̄, z, w)` that adds `add(x̄)` to the accumulator `z` on
/// every step and checks `w = z + base(x̄)` on exit, with `w` passed along
/// unchanged, together with `f(x̄, w)` delegating to it.
pub fn to_accumulator(rec: &MultiArgRec) -> Result<Program, AccumulatorError> {
    let [(c, args)] = rec.calls.as_slice() else {
        return Err(AccumulatorError::UnsupportedShape(format!("{} recursive calls", rec.calls.len())));
    };
    if !c.is_one() {
        return Err(AccumulatorError::UnsupportedShape(format!("call coefficient {c}")));
    }
    if args.len() != rec.params.len() {
        return Err(AccumulatorError::UnsupportedShape("call arity".into()));
    }
    let add = rec.add.to_linterm().ok_or_else(|| AccumulatorError::UnsupportedShape("non-linear summand".into()))?;
    let base = rec.base.to_linterm().ok_or_else(|| AccumulatorError::UnsupportedShape("non-linear base".into()))?;

    let mut taken: BTreeSet<Var> = rec.params.iter().cloned().collect();
    taken.extend(rec.guard.vars());
    taken.extend(rec.base_guard.vars());
    let z = fresh(&mut taken, "Z");
    let w = fresh(&mut taken, "W");
    let next: Vec<Var> = rec.params.iter().map(|v| fresh(&mut taken, &format!("{v}1"))).collect();
    let z1 = fresh(&mut taken, &format!("{z}1"));
    let w1 = fresh(&mut taken, &format!("{w}1"));
    let aux = format!("{}_aux", rec.name);

    let xs = rec.params.clone();
    let with = |extra: &[&Var]| -> Vec<Var> { xs.iter().chain(extra.iter().copied()).cloned().collect() };
    let moves = || next.iter().zip(args).map(|(v, t)| eqv(v, t.clone())).collect::<Vec<_>>();

    let mut c1 = rec.guard.clone();
    for m in moves() {
        c1.push(m);
    }
    c1.push(eqv(&z, add.clone()));
    let mut c2 = rec.base_guard.clone();
    c2.push(eqv(&w, base.clone()));
    let mut c3 = rec.guard.clone();
    for m in moves() {
        c3.push(m);
    }
    c3.push(eqv(&z1, &add + &LinTerm::var(z.clone())));
    c3.push(eqv(&w1, LinTerm::var(w.clone())));
    let mut c4 = rec.base_guard.clone();
    c4.push(eqv(&w, &base + &LinTerm::var(z.clone())));

    let next_args: Vec<Var> = next.iter().cloned().chain([z.clone(), w.clone()]).collect();
    let clauses = vec![
        Clause {
            id: "c1".into(),
            head: Head::Atom(Atom::new(rec.name.clone(), with(&[&w]))),
            constraint: c1,
            body: Some(Atom::new(aux.clone(), next_args)),
        },
        Clause { id: "c2".into(), head: Head::Atom(Atom::new(rec.name.clone(), with(&[&w]))), constraint: c2, body: None },
        Clause {
            id: "c3".into(),
            head: Head::Atom(Atom::new(aux.clone(), with(&[&z, &w]))),
            constraint: c3,
            body: Some(Atom::new(aux.clone(), next.iter().cloned().chain([z1, w1]).collect())),
        },
        Clause { id: "c4".into(), head: Head::Atom(Atom::new(aux, with(&[&z, &w]))), constraint: c4, body: None },
    ];
    Ok(Program { clauses, entry: (rec.name.clone(), rec.params.len() + 1), integer: true })
}
