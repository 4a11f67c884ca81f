//! Symbolic interval arithmetic with candidate-set endpoints.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Signed;
use serde_json::{json, Value};

use crate::linarith::{bound_candidates, entails, is_sat, ConstraintStore, LinConstraint, LinTerm, Rational, Var};
use crate::poly::{Monomial, Polynomial};

/// Endpoint sets larger than this are widened to unbounded.
pub const MAX_CANDIDATES: usize = 16;

/// Variables assumed nonnegative when comparing polynomial endpoints.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signs {
    pub nonneg: BTreeSet<Var>,
}

impl Signs {
    pub fn new(nonneg: impl IntoIterator<Item = Var>) -> Self {
        Signs { nonneg: nonneg.into_iter().collect() }
    }

    fn monomial_nonneg(&self, m: &Monomial) -> bool {
        m.powers().iter().all(|(v, e)| e % 2 == 0 || self.nonneg.contains(v))
    }

    /// Sufficient check for `p ≥ 0`: every term is a nonnegative multiple of
    /// a monomial that is nonnegative under the assumptions.
    pub fn provably_nonneg(&self, p: &Polynomial) -> bool {
        p.terms().iter().all(|(m, c)| !c.is_negative() && self.monomial_nonneg(m))
    }

    pub fn le(&self, a: &Polynomial, b: &Polynomial) -> bool {
        self.provably_nonneg(&(b - a))
    }
}

/// Lower endpoint `min(lo)` and upper endpoint `max(hi)`; `None` is unbounded.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymInterval {
    pub lower: Option<Vec<Polynomial>>,
    pub upper: Option<Vec<Polynomial>>,
}

fn dedup(cs: Vec<Polynomial>) -> Vec<Polynomial> {
    let mut out: Vec<Polynomial> = Vec::new();
    for c in cs {
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Drops candidates that cannot be the extreme one. `beats(a, b)` states
/// that `a` is at least as extreme as `b`.
fn prune(cs: Vec<Polynomial>, beats: impl Fn(&Polynomial, &Polynomial) -> bool) -> Option<Vec<Polynomial>> {
    let cs = dedup(cs);
    let out: Vec<Polynomial> = cs
        .iter()
        .enumerate()
        .filter(|(i, c)| !cs.iter().enumerate().any(|(j, d)| j != *i && beats(d, c) && (!beats(c, d) || j < *i)))
        .map(|(_, c)| c.clone())
        .collect();
    (out.len() <= MAX_CANDIDATES).then_some(out)
}

fn pairs(a: &[Polynomial], b: &[Polynomial], op: impl Fn(&Polynomial, &Polynomial) -> Polynomial) -> Vec<Polynomial> {
    a.iter().flat_map(|x| b.iter().map(|y| op(x, y)).collect::<Vec<_>>()).collect()
}

impl SymInterval {
    pub fn exact(p: Polynomial) -> Self {
        SymInterval { lower: Some(vec![p.clone()]), upper: Some(vec![p]) }
    }

    pub fn unbounded() -> Self {
        SymInterval { lower: None, upper: None }
    }

    pub fn new(lower: Option<Polynomial>, upper: Option<Polynomial>) -> Self {
        SymInterval { lower: lower.map(|p| vec![p]), upper: upper.map(|p| vec![p]) }
    }

    /// The single value of a degenerate interval.
    pub fn as_exact(&self) -> Option<&Polynomial> {
        match (&self.lower, &self.upper) {
            (Some(l), Some(u)) if l.len() == 1 && l == u => Some(&l[0]),
            _ => None,
        }
    }

    fn normalized(lower: Option<Vec<Polynomial>>, upper: Option<Vec<Polynomial>>, s: &Signs) -> Self {
        SymInterval {
            lower: lower.and_then(|l| prune(l, |a, b| s.le(a, b))),
            upper: upper.and_then(|u| prune(u, |a, b| s.le(b, a))),
        }
    }

    pub fn add(&self, o: &SymInterval, s: &Signs) -> Self {
        let lo = self.lower.as_ref().zip(o.lower.as_ref()).map(|(a, b)| pairs(a, b, |x, y| x + y));
        let hi = self.upper.as_ref().zip(o.upper.as_ref()).map(|(a, b)| pairs(a, b, |x, y| x + y));
        Self::normalized(lo, hi, s)
    }

    pub fn neg(&self) -> Self {
        let n = |v: &Vec<Polynomial>| v.iter().map(|p| -p).collect::<Vec<_>>();
        SymInterval { lower: self.upper.as_ref().map(n), upper: self.lower.as_ref().map(n) }
    }

    fn nonneg(&self, s: &Signs) -> bool {
        self.lower.as_ref().is_some_and(|l| l.iter().all(|p| s.provably_nonneg(p)))
    }

    fn nonpos(&self, s: &Signs) -> bool {
        self.upper.as_ref().is_some_and(|u| u.iter().all(|p| s.provably_nonneg(&-p)))
    }

    pub fn mul(&self, o: &SymInterval, s: &Signs) -> Self {
        if let (Some(a), Some(b), Some(c), Some(d)) = (&self.lower, &self.upper, &o.lower, &o.upper) {
            let xs: Vec<Polynomial> = dedup(a.iter().chain(b).cloned().collect());
            let ys: Vec<Polynomial> = dedup(c.iter().chain(d).cloned().collect());
            let ps = pairs(&xs, &ys, |x, y| x * y);
            return Self::normalized(Some(ps.clone()), Some(ps), s);
        }
        if self.nonneg(s) && o.nonneg(s) {
            let lo = pairs(self.lower.as_ref().unwrap(), o.lower.as_ref().unwrap(), |x, y| x * y);
            let hi = self.upper.as_ref().zip(o.upper.as_ref()).map(|(a, b)| pairs(a, b, |x, y| x * y));
            return Self::normalized(Some(lo), hi, s);
        }
        if self.nonpos(s) {
            return self.neg().mul(o, s).neg();
        }
        if o.nonpos(s) {
            return self.mul(&o.neg(), s).neg();
        }
        Self::unbounded()
    }

    pub fn pow(&self, e: u32, s: &Signs) -> Self {
        (0..e).fold(Self::exact(Polynomial::one()), |acc, _| acc.mul(self, s))
    }

    pub fn hull(&self, o: &SymInterval, s: &Signs) -> Self {
        let cat = |a: &Option<Vec<Polynomial>>, b: &Option<Vec<Polynomial>>| {
            a.as_ref().zip(b.as_ref()).map(|(x, y)| x.iter().chain(y).cloned().collect::<Vec<_>>())
        };
        Self::normalized(cat(&self.lower, &o.lower), cat(&self.upper, &o.upper), s)
    }

    /// Numeric endpoints at a point; `None` inside stands for infinity.
    pub fn eval(&self, env: &BTreeMap<Var, Rational>) -> Option<(Option<Rational>, Option<Rational>)> {
        let ev = |cs: &Vec<Polynomial>| cs.iter().map(|p| p.eval(env)).collect::<Option<Vec<Rational>>>();
        let lo = match &self.lower {
            Some(cs) => Some(ev(cs)?.into_iter().min()?),
            None => None,
        };
        let hi = match &self.upper {
            Some(cs) => Some(ev(cs)?.into_iter().max()?),
            None => None,
        };
        Some((lo, hi))
    }

    pub fn contains(&self, env: &BTreeMap<Var, Rational>, x: &Rational) -> Option<bool> {
        let (lo, hi) = self.eval(env)?;
        Some(lo.is_none_or(|l| l <= *x) && hi.is_none_or(|h| *x <= h))
    }

    pub fn to_json(&self) -> Value {
        let end = |e: &Option<Vec<Polynomial>>, key: &str| match e {
            None => Value::Null,
            Some(cs) if cs.len() == 1 => cs[0].to_json(),
            Some(cs) => json!({ key: cs.iter().map(|p| p.to_json()).collect::<Vec<_>>() }),
        };
        json!({ "lower": end(&self.lower, "min"), "upper": end(&self.upper, "max") })
    }

    pub fn from_json(v: &Value) -> Option<SymInterval> {
        let end = |e: &Value, key: &str| -> Option<Option<Vec<Polynomial>>> {
            match e {
                Value::Null => Some(None),
                Value::Object(m) => m.get(key)?.as_array()?.iter().map(Polynomial::from_json).collect::<Option<Vec<_>>>().map(Some),
                other => Polynomial::from_json(other).map(|p| Some(vec![p])),
            }
        };
        Some(SymInterval { lower: end(v.get("lower")?, "min")?, upper: end(v.get("upper")?, "max")? })
    }
}

impl fmt::Display for SymInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(p) = self.as_exact() {
            return write!(f, "= {p}");
        }
        let end = |e: &Option<Vec<Polynomial>>, op: &str, inf: &str| match e {
            None => inf.to_string(),
            Some(cs) if cs.len() == 1 => cs[0].to_string(),
            Some(cs) => format!("{op}({})", cs.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")),
        };
        write!(f, "in [{}, {}]", end(&self.lower, "min", "-inf"), end(&self.upper, "max", "+inf"))
    }
}

/// A conjunction of linear facts together with output expressions over
/// inputs and counters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case {
    pub store: ConstraintStore,
    pub outputs: Vec<(Var, Option<Polynomial>)>,
    pub counters: Vec<Var>,
}

/// Counter values after substitution: exact terms and remaining intervals.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CounterValues {
    pub exact: Vec<(Var, LinTerm)>,
    pub ranges: Vec<(Var, SymInterval)>,
}

/// Output intervals of a case, or `None` when the case is infeasible.
///
/// Counters fixed by the store are substituted first, repeatedly; every
/// other counter is replaced by its first lower and upper bound over the
/// inputs, and outputs are evaluated monomial by monomial.
pub fn intervalize(case: &Case, inputs: &[Var], s: &Signs) -> Option<(Vec<(Var, SymInterval)>, CounterValues)> {
    if !is_sat(&case.store) {
        return None;
    }
    let ins: BTreeSet<Var> = inputs.iter().cloned().collect();
    let mut store = case.store.clone();
    let mut outs = case.outputs.clone();
    let mut todo: Vec<Var> = case.counters.clone();
    let mut values = CounterValues::default();
    loop {
        let fixed = todo.iter().enumerate().find_map(|(i, k)| {
            let (lows, ups) = bound_candidates(&store, k, &ins).ok()?;
            match (lows.as_slice(), ups.as_slice()) {
                ([l], [u]) if entails(&store, &LinConstraint::ge(l, u)) => Some((i, l.clone())),
                _ => None,
            }
        });
        let Some((i, t)) = fixed else { break };
        let k = todo.remove(i);
        store = store.substitute(&k, &t);
        let tp = Polynomial::from_linterm(&t);
        for (_, p) in outs.iter_mut() {
            if let Some(p) = p {
                *p = p.substitute(&k, &tp);
            }
        }
        values.exact.push((k, t));
    }
    let mut ranges: BTreeMap<Var, SymInterval> = BTreeMap::new();
    for k in &todo {
        let iv = match bound_candidates(&store, k, &ins) {
            Ok((lows, ups)) => SymInterval::new(
                lows.first().map(Polynomial::from_linterm),
                ups.first().map(Polynomial::from_linterm),
            ),
            Err(e) => {
                log::warn!("bounds of {k}: {e}; using [0, +inf]");
                SymInterval::new(Some(Polynomial::zero()), None)
            }
        };
        values.ranges.push((k.clone(), iv.clone()));
        ranges.insert(k.clone(), iv);
    }
    let result = outs
        .iter()
        .map(|(v, p)| {
            let iv = match p {
                Some(p) if p.vars().iter().all(|x| ins.contains(x) || ranges.contains_key(x)) => evaluate(p, &ranges, s),
                _ => SymInterval::unbounded(),
            };
            (v.clone(), iv)
        })
        .collect();
    Some((result, values))
}

/// Interval of `p`, grouping terms by their monomial in the interval
/// variables so that each group has a point coefficient.
pub fn evaluate(p: &Polynomial, ranges: &BTreeMap<Var, SymInterval>, s: &Signs) -> SymInterval {
    let mut groups: BTreeMap<Monomial, Polynomial> = BTreeMap::new();
    for (m, c) in p.terms() {
        let (mut iv_part, mut pt_part) = (Vec::new(), Vec::new());
        for (v, e) in m.powers() {
            if ranges.contains_key(v) {
                iv_part.push((v.clone(), *e));
            } else {
                pt_part.push((v.clone(), *e));
            }
        }
        let coeff = Polynomial::term(Monomial::from_powers(pt_part), c.clone());
        let g = groups.entry(Monomial::from_powers(iv_part)).or_insert_with(Polynomial::zero);
        *g = &*g + &coeff;
    }
    let mut total = SymInterval::exact(Polynomial::zero());
    for (m, coeff) in groups {
        let mut iv = SymInterval::exact(coeff);
        for (v, e) in m.powers() {
            iv = iv.mul(&ranges[v].pow(*e, s), s);
        }
        total = total.add(&iv, s);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linarith::rat;
    use proptest::prelude::*;

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    fn signs(vs: &[&str]) -> Signs {
        Signs::new(vs.iter().map(|v| v.to_string()))
    }

    fn iv(lo: &str, hi: &str) -> SymInterval {
        SymInterval::new(Some(p(lo)), Some(p(hi)))
    }

    #[test]
    fn sign_checks() {
        let s = signs(&["x"]);
        assert!(s.provably_nonneg(&p("x^2 + y^2 + x")));
        assert!(!s.provably_nonneg(&p("y")));
        assert!(!s.provably_nonneg(&p("x - 1")));
        assert!(s.le(&p("y - x"), &p("y")));
    }

    #[test]
    fn loop_level_example() {
        let s = signs(&["X", "Y"]);
        let ranges: BTreeMap<Var, SymInterval> = [("K".to_string(), iv("0", "X"))].into();
        assert_eq!(evaluate(&p("X - K"), &ranges, &s), iv("0", "X"));
        assert_eq!(evaluate(&p("Y - 1/2*K^2 + K*X + 1/2*K"), &ranges, &s), iv("Y - 1/2*X^2", "Y + X^2 + 1/2*X"));
        assert_eq!(evaluate(&p("Z + K*X + K*Y + K"), &ranges, &s), iv("Z", "Z + X^2 + X*Y + X"));
    }

    #[test]
    fn square_of_symmetric_interval() {
        let s = Signs::default();
        let x = SymInterval::new(Some(Polynomial::int(-1)), Some(Polynomial::int(1)));
        assert_eq!(x.mul(&x, &s), x);
    }

    #[test]
    fn undecided_signs_keep_candidates() {
        let s = Signs::default();
        let r = SymInterval::exact(p("y")).mul(&iv("0", "x"), &s);
        assert_eq!(r.lower.as_ref().unwrap().len(), 2);
        assert!(r.to_json()["lower"]["min"].is_array());
        assert_eq!(SymInterval::from_json(&r.to_json()).unwrap(), r);
        assert!(r.to_string().starts_with("in [min("));
    }

    #[test]
    fn unbounded_factors() {
        let s = signs(&["x"]);
        let half = SymInterval::new(Some(Polynomial::zero()), None);
        let r = SymInterval::exact(p("-x")).mul(&half, &s);
        assert_eq!(r.upper, Some(vec![Polynomial::zero()]));
        assert_eq!(r.lower, None);
        assert_eq!(SymInterval::exact(p("y")).mul(&half, &s), SymInterval::unbounded());
    }

    #[test]
    fn hull_and_contains() {
        let s = signs(&["a", "b"]);
        let h = SymInterval::exact(p("a")).hull(&SymInterval::exact(p("b")), &s);
        assert_eq!(h.lower.as_ref().unwrap().len(), 2);
        let env: BTreeMap<Var, Rational> = [("a".to_string(), rat(1)), ("b".to_string(), rat(3))].into();
        assert_eq!(h.eval(&env), Some((Some(rat(1)), Some(rat(3)))));
        assert_eq!(h.contains(&env, &rat(2)), Some(true));
        assert_eq!(h.contains(&env, &rat(4)), Some(false));
        let h2 = iv("0", "a").hull(&iv("a", "a + b"), &s);
        assert_eq!(h2, iv("0", "a + b"));
    }

    #[test]
    fn exact_counter_is_substituted() {
        let k = LinTerm::var("K");
        let a = LinTerm::var("A");
        let store = ConstraintStore::from_constraints([
            LinConstraint::ge(&k, &LinTerm::zero()),
            LinConstraint::le(&k, &a),
            LinConstraint::le(&(&a - &k), &LinTerm::zero()),
        ]);
        let case = Case { store, outputs: vec![("A'".into(), Some(p("A - K")))], counters: vec!["K".into()] };
        let (outs, vals) = intervalize(&case, &["A".to_string()], &signs(&["A"])).unwrap();
        assert_eq!(outs[0].1, SymInterval::exact(Polynomial::zero()));
        assert_eq!(vals.exact, vec![("K".to_string(), a)]);
    }

    fn arb_poly() -> impl Strategy<Value = Polynomial> {
        proptest::collection::vec((-3i64..4, 0u32..3, 0u32..3), 1..4).prop_map(|ts| {
            ts.into_iter().fold(Polynomial::zero(), |acc, (c, ex, ek)| {
                let m = Monomial::from_powers([("x".to_string(), ex), ("k".to_string(), ek)].into_iter().filter(|(_, e)| *e > 0));
                &acc + &Polynomial::term(m, rat(c))
            })
        })
    }

    proptest! {
        /// Enclosure: every value of `p` with `k ∈ [0, x]` lies in the interval.
        #[test]
        fn evaluation_encloses(poly in arb_poly(), x in 0i64..6) {
            let s = signs(&["x"]);
            let ranges: BTreeMap<Var, SymInterval> = [("k".to_string(), iv("0", "x"))].into();
            let r = evaluate(&poly, &ranges, &s);
            for k in 0..=x {
                let env: BTreeMap<Var, Rational> = [("x".to_string(), rat(x)), ("k".to_string(), rat(k))].into();
                let v = poly.eval(&env).unwrap();
                prop_assert_eq!(r.contains(&env, &v), Some(true), "{} at x={} k={}: {}", poly, x, k, r);
            }
        }
    }
}
