//! Linear ranking functions via Farkas' lemma.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::One;

use super::fm::fix_values;
use super::{entails, is_sat, ConstraintStore, LinConstraint, LinTerm, Rational, Rel, Var};

/// A linear ranking function over a loop's pre-state variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankingFn {
    pub term: LinTerm,
}

impl fmt::Display for RankingFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.term.fmt(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no linear ranking function found")]
pub struct NoRankingFound;

fn rho(i: usize) -> Var {
    format!("$rho{i}")
}

const RHO0: &str = "$rho";

/// Synthesizes `r(x̄) = Σ ρᵢ·xᵢ + ρ₀` with `body ⊨ r(pre) ≥ 0` and
/// `body ⊨ r(pre) ≥ r(post) + 1`.
///
/// Strict body constraints are weakened to non-strict ones, which keeps the
/// method sound; callers wanting integer reasoning tighten the body first.
/// Among the solutions, coefficients are fixed in order of `pre`, each to 0
/// when possible, so earlier variables are preferred to stay out of the
/// ranking only if later ones can take over.
pub fn synth_ranking(body: &ConstraintStore, pre: &[Var], post: &[Var]) -> Result<RankingFn, NoRankingFound> {
    assert_eq!(pre.len(), post.len(), "pre and post tuples differ in length");
    if !is_sat(body) {
        return Ok(RankingFn { term: LinTerm::zero() });
    }
    let mut rows: Vec<LinTerm> = Vec::new();
    for c in body.constraints() {
        rows.push(c.lhs.clone());
        if c.rel == Rel::Eq {
            rows.push(-&c.lhs);
        }
    }
    let mut zs: BTreeSet<Var> = body.vars();
    zs.extend(pre.iter().cloned());
    zs.extend(post.iter().cloned());

    let mut unknowns = ConstraintStore::new();
    let lam = |i: usize| format!("$lam{i}");
    let mu = |i: usize| format!("$mu{i}");
    for i in 0..rows.len() {
        for m in [lam(i), mu(i)] {
            unknowns.push(LinConstraint::ge(&LinTerm::var(m), &LinTerm::zero()));
        }
    }
    for z in &zs {
        let mut g1 = LinTerm::zero();
        let mut g2 = LinTerm::zero();
        if let Some(j) = pre.iter().position(|p| p == z) {
            g1.add_coeff(rho(j), -Rational::one());
            g2.add_coeff(rho(j), -Rational::one());
        }
        if let Some(j) = post.iter().position(|p| p == z) {
            g2.add_coeff(rho(j), Rational::one());
        }
        let mut s1 = LinTerm::zero();
        let mut s2 = LinTerm::zero();
        for (i, r) in rows.iter().enumerate() {
            let a = r.coeff(z);
            s1.add_coeff(lam(i), a.clone());
            s2.add_coeff(mu(i), a);
        }
        unknowns.push(LinConstraint::eq(&s1, &g1));
        unknowns.push(LinConstraint::eq(&s2, &g2));
    }
    let mut c1 = LinTerm::zero();
    let mut c2 = LinTerm::zero();
    for (i, r) in rows.iter().enumerate() {
        c1.add_coeff(lam(i), r.constant_part().clone());
        c2.add_coeff(mu(i), r.constant_part().clone());
    }
    unknowns.push(LinConstraint::ge(&c1, &-&LinTerm::var(RHO0)));
    unknowns.push(LinConstraint::ge(&c2, &LinTerm::int(1)));
    if !is_sat(&unknowns) {
        return Err(NoRankingFound);
    }

    let mut seq: Vec<Var> = (0..pre.len()).map(rho).collect();
    seq.push(RHO0.to_string());
    let (vals, _) = fix_values(&unknowns, &seq).ok_or(NoRankingFound)?;
    let mut term = LinTerm::constant(vals[RHO0].clone());
    for (j, p) in pre.iter().enumerate() {
        term.add_coeff(p.clone(), vals[&rho(j)].clone());
    }
    let r = RankingFn { term };
    if verify_ranking(body, &r, pre, post) {
        Ok(r)
    } else {
        Err(NoRankingFound)
    }
}

/// Checks both ranking conditions by entailment.
pub fn verify_ranking(body: &ConstraintStore, r: &RankingFn, pre: &[Var], post: &[Var]) -> bool {
    let map = pre.iter().cloned().zip(post.iter().cloned()).collect();
    let after = r.term.rename(&map);
    let bounded = LinConstraint::ge(&r.term, &LinTerm::zero());
    let decreasing = LinConstraint::ge(&r.term, &(&after + &LinTerm::int(1)));
    entails(body, &bounded) && entails(body, &decreasing)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> LinTerm {
        LinTerm::var(s)
    }
    fn n(k: i64) -> LinTerm {
        LinTerm::int(k)
    }
    fn vars(vs: &[&str]) -> Vec<Var> {
        vs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn example_loop_ranks_by_x() {
        let body = ConstraintStore::from_constraints([
            LinConstraint::gt(&v("x1"), &n(0)),
            LinConstraint::gt(&v("y1"), &n(0)),
            LinConstraint::eq(&v("x2"), &(&v("x1") - &n(1))),
            LinConstraint::eq(&v("y2"), &(&v("y1") + &v("x1"))),
        ]);
        let (pre, post) = (vars(&["x1", "y1"]), vars(&["x2", "y2"]));
        let r = synth_ranking(&body, &pre, &post).unwrap();
        assert_eq!(r.term, v("x1"));
        assert!(verify_ranking(&body, &r, &pre, &post));
    }

    #[test]
    fn inner_loop_ranks_by_b() {
        let body = ConstraintStore::from_constraints([
            LinConstraint::gt(&v("a1"), &n(0)),
            LinConstraint::gt(&v("b1"), &n(0)),
            LinConstraint::eq(&v("b2"), &(&v("b1") - &n(1))),
            LinConstraint::eq(&v("a2"), &v("a1")),
        ]);
        let (pre, post) = (vars(&["a1", "b1"]), vars(&["a2", "b2"]));
        let r = synth_ranking(&body, &pre, &post).unwrap();
        assert_eq!(r.term, v("b1"));
    }

    #[test]
    fn diverging_loop_has_no_ranking() {
        let body = ConstraintStore::from_constraints([
            LinConstraint::eq(&v("x2"), &(&v("x1") + &n(1))),
            LinConstraint::gt(&v("x1"), &n(0)),
        ]);
        assert_eq!(synth_ranking(&body, &vars(&["x1"]), &vars(&["x2"])), Err(NoRankingFound));
    }

    #[test]
    fn infeasible_body_ranks_trivially() {
        let body = ConstraintStore::from_constraints([LinConstraint::falsum()]);
        let r = synth_ranking(&body, &vars(&["x1"]), &vars(&["x2"])).unwrap();
        assert_eq!(r.term, LinTerm::zero());
    }
}
