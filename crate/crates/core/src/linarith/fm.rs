//! Fourier–Motzkin elimination with Gaussian pre-elimination of equalities.

use std::collections::{BTreeMap, BTreeSet};

use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::{ConstraintStore, LinConstraint, LinTerm, Rational, Rel, Var};

pub const DEFAULT_FM_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("constraint count exceeded cap of {cap} during elimination")]
pub struct SizeBlowup {
    pub cap: usize,
}

/// Outcome of normalizing one row.
enum Norm {
    Trivial,
    Infeasible,
    Row(LinConstraint),
}

/// Scales a row so that its first coefficient has magnitude one (and is
/// positive for equalities), then classifies constant rows.
fn normalize(c: LinConstraint) -> Norm {
    let first = c.lhs.coeffs().values().next().cloned();
    match first {
        None => match c.holds(&BTreeMap::new()) {
            Some(true) => Norm::Trivial,
            _ => Norm::Infeasible,
        },
        Some(a) => {
            let s = match c.rel {
                Rel::Eq => a.recip(),
                _ => a.abs().recip(),
            };
            Norm::Row(LinConstraint { lhs: c.lhs.scale(&s), rel: c.rel })
        }
    }
}

/// A working set of rows. `None` means the set is known infeasible.
struct Rows {
    rows: Vec<LinConstraint>,
}

impl Rows {
    fn new(cs: impl IntoIterator<Item = LinConstraint>) -> Option<Rows> {
        let mut r = Rows { rows: Vec::new() };
        for c in cs {
            if !r.add(c) {
                return None;
            }
        }
        r.dedupe();
        Some(r)
    }

    /// Returns false when the row is a constant contradiction.
    fn add(&mut self, c: LinConstraint) -> bool {
        match normalize(c) {
            Norm::Trivial => true,
            Norm::Infeasible => false,
            Norm::Row(r) => {
                self.rows.push(r);
                true
            }
        }
    }

    /// Among parallel inequalities keep only the tightest one. A tighter
    /// row has a larger constant; on ties a strict row wins.
    fn dedupe(&mut self) {
        let mut best: BTreeMap<BTreeMap<Var, Rational>, LinConstraint> = BTreeMap::new();
        let mut eqs: Vec<LinConstraint> = Vec::new();
        for r in self.rows.drain(..) {
            if r.rel == Rel::Eq {
                if !eqs.contains(&r) {
                    eqs.push(r);
                }
                continue;
            }
            let key = r.lhs.coeffs().clone();
            match best.get(&key) {
                Some(old) => {
                    let (ko, kn) = (old.lhs.constant_part(), r.lhs.constant_part());
                    if kn > ko || (kn == ko && r.rel == Rel::Lt) {
                        best.insert(key, r);
                    }
                }
                None => {
                    best.insert(key, r);
                }
            }
        }
        self.rows = eqs;
        self.rows.extend(best.into_values());
    }
}

fn substitute_all(rows: Vec<LinConstraint>, v: &str, t: &LinTerm) -> Option<Rows> {
    Rows::new(rows.into_iter().map(|r| r.substitute(v, t)))
}

/// Eliminates every variable of `elim` from `cs`. Returns `Ok(None)` when
/// the constraints are infeasible.
fn eliminate(
    cs: &[LinConstraint],
    elim: &BTreeSet<Var>,
    cap: Option<usize>,
) -> Result<Option<Vec<LinConstraint>>, SizeBlowup> {
    let Some(mut rows) = Rows::new(cs.iter().cloned()) else {
        return Ok(None);
    };
    // Gaussian elimination of equalities first.
    loop {
        let pick = rows.rows.iter().enumerate().find_map(|(i, r)| {
            if r.rel != Rel::Eq {
                return None;
            }
            r.lhs.vars().find(|v| elim.contains(*v)).map(|v| (i, v.clone()))
        });
        let Some((i, v)) = pick else { break };
        let row = rows.rows.remove(i);
        let a = row.lhs.coeff(&v);
        let mut rest = row.lhs.clone();
        rest.add_coeff(v.clone(), -a.clone());
        let def = rest.scale(&(-a.recip()));
        match substitute_all(rows.rows, &v, &def) {
            Some(r) => rows = r,
            None => return Ok(None),
        }
    }
    // Fourier–Motzkin on the remaining variables, cheapest first.
    loop {
        let present: BTreeSet<&Var> =
            rows.rows.iter().flat_map(|r| r.lhs.vars()).filter(|v| elim.contains(*v)).collect();
        let Some(v) = present
            .iter()
            .min_by_key(|v| {
                let (mut p, mut n) = (0usize, 0usize);
                for r in &rows.rows {
                    let c = r.lhs.coeff(v);
                    if c.is_positive() {
                        p += 1;
                    } else if c.is_negative() {
                        n += 1;
                    }
                }
                p * n
            })
            .map(|v| (*v).clone())
        else {
            break;
        };
        let (mut pos, mut neg, mut keep) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows.rows.drain(..) {
            let c = r.lhs.coeff(&v);
            if c.is_positive() {
                pos.push(r);
            } else if c.is_negative() {
                neg.push(r);
            } else {
                keep.push(r);
            }
        }
        let mut next = Rows { rows: keep };
        for p in &pos {
            let a = p.lhs.coeff(&v);
            for n in &neg {
                let b = -n.lhs.coeff(&v);
                let lhs = &p.lhs.scale(&b) + &n.lhs.scale(&a);
                let rel = if p.rel == Rel::Lt || n.rel == Rel::Lt { Rel::Lt } else { Rel::Le };
                if !next.add(LinConstraint { lhs, rel }) {
                    return Ok(None);
                }
            }
        }
        next.dedupe();
        if let Some(cap) = cap {
            if next.rows.len() > cap {
                return Err(SizeBlowup { cap });
            }
        }
        rows = next;
    }
    Ok(Some(rows.rows))
}

/// Rational satisfiability of a conjunction.
pub fn is_sat(phi: &ConstraintStore) -> bool {
    let all = phi.vars();
    matches!(eliminate(phi.constraints(), &all, None), Ok(Some(_)))
}

/// `phi ⊨ c` over the rationals, decided as unsatisfiability of `phi ∧ ¬c`.
pub fn entails(phi: &ConstraintStore, c: &LinConstraint) -> bool {
    c.negate().into_iter().all(|d| !is_sat(&phi.with(d)))
}

/// Projects `phi` onto `keep` with the default size cap.
pub fn project(phi: &ConstraintStore, keep: &BTreeSet<Var>) -> Result<ConstraintStore, SizeBlowup> {
    project_with_cap(phi, keep, DEFAULT_FM_CAP)
}

pub fn project_with_cap(
    phi: &ConstraintStore,
    keep: &BTreeSet<Var>,
    cap: usize,
) -> Result<ConstraintStore, SizeBlowup> {
    let elim: BTreeSet<Var> = phi.vars().difference(keep).cloned().collect();
    Ok(match eliminate(phi.constraints(), &elim, Some(cap))? {
        Some(rows) => rows.into_iter().map(denormalize).collect(),
        None => ConstraintStore::from_constraints([LinConstraint::falsum()]),
    })
}

/// Rescales a row to integer coefficients with a positive leading
/// coefficient where that is free, for readability of projected stores.
fn denormalize(c: LinConstraint) -> LinConstraint {
    let lhs = c.lhs.clear_denominators();
    let mut g = lhs.constant_part().numer().clone();
    for k in lhs.coeffs().values() {
        g = g.gcd(k.numer());
    }
    if g.is_zero() || g.is_one() {
        return LinConstraint { lhs, rel: c.rel };
    }
    let s = Rational::from_integer(g).recip();
    LinConstraint { lhs: lhs.scale(&s), rel: c.rel }
}

/// Parametric bounds of a variable. Strictness is not recorded; the bounds
/// are the infimum and supremum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub lower: Option<LinTerm>,
    pub upper: Option<LinTerm>,
}

/// All undominated lower and upper bound terms of `v` over `params`.
/// A candidate is dropped when the projected store entails that another
/// candidate is at least as tight.
pub fn bound_candidates(
    phi: &ConstraintStore,
    v: &str,
    params: &BTreeSet<Var>,
) -> Result<(Vec<LinTerm>, Vec<LinTerm>), SizeBlowup> {
    let mut keep = params.clone();
    keep.insert(v.to_string());
    let proj = project(phi, &keep)?;
    if !is_sat(&proj) {
        return Ok((vec![], vec![]));
    }
    let (mut lows, mut ups) = (Vec::new(), Vec::new());
    for c in proj.constraints() {
        let a = c.lhs.coeff(v);
        if a.is_zero() {
            continue;
        }
        let mut rest = c.lhs.clone();
        rest.add_coeff(v.to_string(), -a.clone());
        let bound = rest.scale(&(-a.recip()));
        match c.rel {
            Rel::Eq => {
                lows.push(bound.clone());
                ups.push(bound);
            }
            _ if a.is_positive() => ups.push(bound),
            _ => lows.push(bound),
        }
    }
    let lows = prune(&proj, lows, |a, b| LinConstraint::ge(a, b));
    let ups = prune(&proj, ups, |a, b| LinConstraint::le(a, b));
    Ok((lows, ups))
}

/// Keeps candidates not dominated by another; `tighter(a, b)` states that
/// `a` is at least as tight as `b`.
fn prune(
    ctx: &ConstraintStore,
    cands: Vec<LinTerm>,
    tighter: impl Fn(&LinTerm, &LinTerm) -> LinConstraint,
) -> Vec<LinTerm> {
    let mut uniq: Vec<LinTerm> = Vec::new();
    for c in cands {
        if !uniq.contains(&c) {
            uniq.push(c);
        }
    }
    let mut out: Vec<LinTerm> = Vec::new();
    for (i, c) in uniq.iter().enumerate() {
        let dominated = uniq.iter().enumerate().any(|(j, d)| {
            if i == j || !entails(ctx, &tighter(d, c)) {
                return false;
            }
            // Mutual domination: keep the earliest one only.
            !entails(ctx, &tighter(c, d)) || j < i
        });
        if !dominated {
            out.push(c.clone());
        }
    }
    out
}

/// Tightest bounds of `v` in terms of `params`. When several candidates are
/// incomparable the first is returned; see [`bound_candidates`].
pub fn var_bounds(phi: &ConstraintStore, v: &str, params: &BTreeSet<Var>) -> Result<Bounds, SizeBlowup> {
    let (lows, ups) = bound_candidates(phi, v, params)?;
    Ok(Bounds { lower: lows.into_iter().next(), upper: ups.into_iter().next() })
}

/// One endpoint of a one-dimensional interval.
#[derive(Clone, Debug)]
struct End {
    value: Rational,
    strict: bool,
}

/// The interval of a single variable described by `rows`.
fn interval(rows: &[LinConstraint], v: &str) -> (Option<End>, Option<End>) {
    let (mut lo, mut hi): (Option<End>, Option<End>) = (None, None);
    for r in rows {
        let a = r.lhs.coeff(v);
        if a.is_zero() {
            continue;
        }
        let x = -r.lhs.constant_part() / &a;
        let strict = r.rel == Rel::Lt;
        let tighten_hi = |hi: &mut Option<End>| match hi {
            Some(h) if h.value < x || (h.value == x && h.strict) => {}
            _ => *hi = Some(End { value: x.clone(), strict }),
        };
        let tighten_lo = |lo: &mut Option<End>| match lo {
            Some(l) if l.value > x || (l.value == x && l.strict) => {}
            _ => *lo = Some(End { value: x.clone(), strict }),
        };
        match r.rel {
            Rel::Eq => {
                tighten_hi(&mut hi);
                tighten_lo(&mut lo);
            }
            _ if a.is_positive() => tighten_hi(&mut hi),
            _ => tighten_lo(&mut lo),
        }
    }
    (lo, hi)
}

/// Picks a value in the interval: zero when allowed, otherwise the
/// admissible value nearest to zero, preferring integers.
fn pick(lo: Option<End>, hi: Option<End>) -> Rational {
    let admits = |x: &Rational| {
        lo.as_ref().is_none_or(|l| if l.strict { *x > l.value } else { *x >= l.value })
            && hi.as_ref().is_none_or(|h| if h.strict { *x < h.value } else { *x <= h.value })
    };
    let zero = Rational::zero();
    if admits(&zero) {
        return zero;
    }
    let cands = match (&lo, &hi) {
        (Some(l), _) if l.value >= zero => {
            vec![l.value.clone(), l.value.floor() + Rational::one()]
        }
        (_, Some(h)) => vec![h.value.clone(), h.value.ceil() - Rational::one()],
        _ => vec![],
    };
    for c in cands {
        if admits(&c) {
            return c;
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) => (l.value + h.value) / Rational::from_integer(2.into()),
        (Some(l), None) => l.value + Rational::one(),
        (None, Some(h)) => h.value - Rational::one(),
        (None, None) => zero,
    }
}

/// A rational point satisfying `phi`, or `None` if unsatisfiable. Variables
/// are fixed in the order given by `order` (remaining ones afterwards, by
/// name), each to zero if possible and otherwise to the nearest admissible
/// value.
pub fn find_point(phi: &ConstraintStore, order: &[Var]) -> Option<BTreeMap<Var, Rational>> {
    if !is_sat(phi) {
        return None;
    }
    let mut seq: Vec<Var> = order.to_vec();
    for v in phi.vars() {
        if !seq.contains(&v) {
            seq.push(v);
        }
    }
    let (point, _) = fix_values(phi, &seq)?;
    Some(point)
}

/// Fixes the variables of `seq` one at a time as in [`find_point`] and
/// returns the chosen values with the residual store.
pub(crate) fn fix_values(
    phi: &ConstraintStore,
    seq: &[Var],
) -> Option<(BTreeMap<Var, Rational>, ConstraintStore)> {
    let mut cur = phi.clone();
    let mut point = BTreeMap::new();
    for v in seq {
        let all = cur.vars();
        if !all.contains(v) {
            point.insert(v.clone(), Rational::zero());
            continue;
        }
        let mut elim = all;
        elim.remove(v);
        let rows = eliminate(cur.constraints(), &elim, None).ok()??;
        let (lo, hi) = interval(&rows, v);
        let x = pick(lo, hi);
        cur = cur.substitute(v, &LinTerm::constant(x.clone()));
        point.insert(v.clone(), x);
    }
    Some((point, cur))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linarith::{rat, CmpOp};

    fn v(s: &str) -> LinTerm {
        LinTerm::var(s)
    }
    fn n(k: i64) -> LinTerm {
        LinTerm::int(k)
    }
    fn store(cs: Vec<LinConstraint>) -> ConstraintStore {
        ConstraintStore::from_constraints(cs)
    }
    fn set(vs: &[&str]) -> BTreeSet<Var> {
        vs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn contradiction_is_unsat() {
        let s = store(vec![LinConstraint::gt(&v("x"), &n(0)), LinConstraint::le(&v("x"), &n(0))]);
        assert!(!is_sat(&s));
    }

    #[test]
    fn fig1_c1_then_c2_feasible() {
        let s = store(vec![
            LinConstraint::gt(&v("a"), &n(0)),
            LinConstraint::gt(&v("b"), &n(0)),
            LinConstraint::le(&(&v("b") - &n(1)), &n(0)),
        ]);
        assert!(is_sat(&s));
        let env: BTreeMap<Var, Rational> = [("a".into(), rat(1)), ("b".into(), rat(1))].into();
        assert_eq!(s.holds(&env), Some(true));
    }

    #[test]
    fn entailment_examples() {
        let k0 = store(vec![LinConstraint::eq(&v("k"), &n(0))]);
        assert!(entails(&k0, &LinConstraint::le(&v("k"), &n(0))));
        let pos = store(vec![LinConstraint::gt(&v("x"), &n(0))]);
        assert!(!entails(&pos, &LinConstraint::gt(&v("x"), &n(1))));
        // a1 = a, a2 = a1 - k2, a2 <= 0, k2 <= a1  entails  k2 = a
        let s = store(vec![
            LinConstraint::eq(&v("a1"), &v("a")),
            LinConstraint::eq(&v("a2"), &(&v("a1") - &v("k2"))),
            LinConstraint::le(&v("a2"), &n(0)),
            LinConstraint::le(&v("k2"), &v("a1")),
        ]);
        assert!(entails(&s, &LinConstraint::le(&v("k2"), &v("a"))));
        assert!(entails(&s, &LinConstraint::ge(&v("k2"), &v("a"))));
        assert!(entails(&s, &LinConstraint::eq(&v("k2"), &v("a"))));
    }

    #[test]
    fn unsat_store_entails_anything() {
        let s = store(vec![LinConstraint::falsum()]);
        assert!(entails(&s, &LinConstraint::new(v("x"), CmpOp::Lt)));
    }

    #[test]
    fn projection_examples() {
        let s = store(vec![
            LinConstraint::le(&v("k1"), &(&v("a2") + &n(1))),
            LinConstraint::ge(&v("k1"), &n(0)),
            LinConstraint::eq(&v("a2"), &(&v("a") - &v("k2"))),
            LinConstraint::eq(&v("k2"), &v("a")),
        ]);
        let p = project(&s, &set(&["k1"])).unwrap();
        let expect = store(vec![
            LinConstraint::ge(&v("k1"), &n(0)),
            LinConstraint::le(&v("k1"), &n(1)),
        ]);
        assert_eq!(p.vars(), set(&["k1"]));
        for c in expect.constraints() {
            assert!(entails(&p, c));
        }
        for c in p.constraints() {
            assert!(entails(&expect, c));
        }

        let s = store(vec![LinConstraint::eq(&v("x"), &v("y")), LinConstraint::eq(&v("y"), &n(3))]);
        let p = project(&s, &set(&["x"])).unwrap();
        assert_eq!(p, store(vec![LinConstraint::eq(&v("x"), &n(3))]));

        let s = store(vec![
            LinConstraint::eq(&v("b1"), &(&v("b") - &v("k3"))),
            LinConstraint::le(&n(0), &v("k3")),
            LinConstraint::le(&v("k3"), &v("b")),
        ]);
        let p = project(&s, &set(&["b1", "b"])).unwrap();
        let expect = store(vec![LinConstraint::le(&n(0), &v("b1")), LinConstraint::le(&v("b1"), &v("b"))]);
        for c in expect.constraints() {
            assert!(entails(&p, c));
        }
        for c in p.constraints() {
            assert!(entails(&expect, c));
        }
    }

    #[test]
    fn bounds_examples() {
        let s = store(vec![
            LinConstraint::le(&n(0), &v("k1")),
            LinConstraint::le(&v("k1"), &v("b")),
            LinConstraint::gt(&v("a"), &n(0)),
        ]);
        let b = var_bounds(&s, "k1", &set(&["a", "b"])).unwrap();
        assert_eq!(b.lower, Some(n(0)));
        assert_eq!(b.upper, Some(v("b")));

        let b = var_bounds(&ConstraintStore::new(), "x", &BTreeSet::new()).unwrap();
        assert_eq!(b, Bounds { lower: None, upper: None });

        let s = store(vec![
            LinConstraint::le(&v("k1"), &(&v("a2") + &n(1))),
            LinConstraint::ge(&v("k1"), &n(0)),
            LinConstraint::eq(&v("a2"), &(&v("a") - &v("k2"))),
            LinConstraint::eq(&v("k2"), &v("a")),
        ]);
        let b = var_bounds(&s, "k1", &BTreeSet::new()).unwrap();
        assert_eq!(b.lower, Some(n(0)));
        assert_eq!(b.upper, Some(n(1)));
    }

    #[test]
    fn dominated_bounds_are_pruned() {
        let s = store(vec![
            LinConstraint::le(&v("k"), &v("a")),
            LinConstraint::le(&v("k"), &(&v("a") + &n(3))),
            LinConstraint::le(&v("k"), &v("b")),
        ]);
        let (_, ups) = bound_candidates(&s, "k", &set(&["a", "b"])).unwrap();
        assert_eq!(ups, vec![v("a"), v("b")]);
    }

    #[test]
    fn size_cap_is_enforced() {
        // Many pairwise combinations through one eliminated variable.
        let mut cs = Vec::new();
        for i in 0..20 {
            let xi = format!("x{i}");
            cs.push(LinConstraint::le(&v(&xi), &v("z")));
            cs.push(LinConstraint::le(&v("z"), &(&v(&format!("y{i}")) + &n(i))));
        }
        let s = store(cs);
        let mut keep = s.vars();
        keep.remove("z");
        assert_eq!(project_with_cap(&s, &keep, 50), Err(SizeBlowup { cap: 50 }));
        assert!(project(&s, &keep).is_ok());
    }

    #[test]
    fn find_point_prefers_zero_then_nearest() {
        let s = store(vec![LinConstraint::gt(&v("x"), &n(0)), LinConstraint::lt(&v("x"), &n(1))]);
        let p = find_point(&s, &[]).unwrap();
        assert_eq!(p["x"], crate::linarith::ratio(1, 2));
        let s = store(vec![LinConstraint::ge(&v("x"), &n(2)), LinConstraint::le(&v("y"), &v("x"))]);
        let p = find_point(&s, &["x".into(), "y".into()]).unwrap();
        assert_eq!(p["x"], rat(2));
        assert_eq!(p["y"], rat(0));
        assert_eq!(s.holds(&p), Some(true));
    }
}
