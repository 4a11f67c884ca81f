//! Conjunctions of linear constraints and polynomial definitions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;

use crate::linarith::{ConstraintStore, LinConstraint, Rel, Var};
use crate::poly::Polynomial;

/// `linear ∧ ⋀ v = p` for the definitions `v = p`, where `p` may be non-linear.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Relation {
    pub linear: ConstraintStore,
    pub defs: Vec<(Var, Polynomial)>,
}

impl Relation {
    pub fn new(linear: ConstraintStore) -> Self {
        Relation { linear, defs: Vec::new() }
    }

    /// Adds `v = p`; linear definitions also enter the linear store.
    pub fn define(&mut self, v: Var, p: Polynomial) {
        if let Some(t) = (&p - &Polynomial::var(v.clone())).to_linterm() {
            self.linear.push(LinConstraint { lhs: t, rel: Rel::Eq });
        }
        self.defs.push((v, p));
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut vs = self.linear.vars();
        for (v, p) in &self.defs {
            vs.insert(v.clone());
            vs.extend(p.vars());
        }
        vs
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Relation {
        Relation {
            linear: self.linear.rename(map),
            defs: self.defs.iter().map(|(v, p)| (map.get(v).cloned().unwrap_or_else(|| v.clone()), p.rename(map))).collect(),
        }
    }

    pub fn extend(&mut self, other: &Relation) {
        self.linear.extend(&other.linear);
        self.defs.extend(other.defs.iter().cloned());
    }

    /// Every equality of the relation as a polynomial that must vanish.
    pub fn equations(&self) -> Vec<Polynomial> {
        let mut eqs: Vec<Polynomial> = self
            .linear
            .constraints()
            .iter()
            .filter(|c| c.rel == Rel::Eq)
            .map(|c| Polynomial::from_linterm(&c.lhs))
            .collect();
        eqs.extend(self.defs.iter().map(|(v, p)| p - &Polynomial::var(v.clone())));
        eqs
    }

    /// Expresses as many variables outside `known` as possible in terms of
    /// `known`. See [`solve_equations`].
    pub fn solve(&self, known: &BTreeSet<Var>) -> Solved {
        solve_equations(self.equations(), known)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<String> = self.linear.constraints().iter().map(|c| c.to_source()).collect();
        items.extend(self.defs.iter().filter(|(_, p)| p.to_linterm().is_none()).map(|(v, p)| format!("{v} = {p}")));
        if items.is_empty() {
            write!(f, "true")
        } else {
            write!(f, "{}", items.join(", "))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Solved {
    /// Definitions over `known` and over variables left unresolved.
    pub defs: BTreeMap<Var, Polynomial>,
    /// Equations that could not be used to eliminate a variable.
    pub residual: Vec<Polynomial>,
}

impl Solved {
    /// The definition of `v` when it only mentions variables in `known`.
    pub fn closed(&self, v: &str, known: &BTreeSet<Var>) -> Option<Polynomial> {
        if known.contains(v) {
            return Some(Polynomial::var(v));
        }
        self.defs.get(v).filter(|p| p.vars().is_subset(known)).cloned()
    }
}

/// Gaussian elimination over polynomial equations. An unknown is eliminated
/// from an equation in which it occurs with degree one and a constant
/// coefficient; its definition is substituted everywhere else.
pub fn solve_equations(eqs: Vec<Polynomial>, known: &BTreeSet<Var>) -> Solved {
    let mut eqs: Vec<Polynomial> = eqs.into_iter().filter(|p| !p.is_zero()).collect();
    let mut defs: BTreeMap<Var, Polynomial> = BTreeMap::new();
    loop {
        let pick = eqs.iter().enumerate().find_map(|(i, p)| {
            p.vars().into_iter().filter(|v| !known.contains(v)).find_map(|v| {
                if p.degree_in(&v) != 1 {
                    return None;
                }
                let cs = p.coefficients_in(&v);
                let c = cs.get(&1)?.as_constant()?;
                (!c.is_zero()).then(|| (i, v, c))
            })
        });
        let Some((i, v, c)) = pick else { break };
        let p = eqs.remove(i);
        // c*v + rest = 0
        let rest = &p - &Polynomial::var(v.clone()).scale(&c);
        let def = rest.scale(&(-c.recip()));
        for q in eqs.iter_mut() {
            *q = q.substitute(&v, &def);
        }
        eqs.retain(|q| !q.is_zero());
        for d in defs.values_mut() {
            *d = d.substitute(&v, &def);
        }
        defs.insert(v, def);
    }
    Solved { defs, residual: eqs }
}
