//! Exact rational linear arithmetic.
//!
//! Linear terms, constraints in `lhs REL 0` form, conjunctive constraint
//! stores, and the decision procedures built on Fourier–Motzkin
//! elimination: satisfiability, entailment, projection, parametric bounds
//! and linear ranking-function synthesis.

mod fm;
mod ranking;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub use fm::{
    bound_candidates, entails, find_point, is_sat, project, project_with_cap, var_bounds, Bounds,
    SizeBlowup, DEFAULT_FM_CAP,
};
pub use ranking::{synth_ranking, verify_ranking, NoRankingFound, RankingFn};

/// Exact rational number. Always in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Variable identifier.
pub type Var = String;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Renders a rational as `n` or `n/d`.
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// A linear expression `Σ cᵢ·vᵢ + c₀`. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinTerm {
    coeffs: BTreeMap<Var, Rational>,
    constant: Rational,
}

impl LinTerm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational) -> Self {
        LinTerm { coeffs: BTreeMap::new(), constant: c }
    }

    pub fn int(c: i64) -> Self {
        Self::constant(rat(c))
    }

    pub fn var(v: impl Into<Var>) -> Self {
        Self::scaled_var(v, Rational::one())
    }

    pub fn scaled_var(v: impl Into<Var>, c: Rational) -> Self {
        let mut t = Self::zero();
        t.add_coeff(v.into(), c);
        t
    }

    pub fn from_parts(coeffs: impl IntoIterator<Item = (Var, Rational)>, constant: Rational) -> Self {
        let mut t = Self::constant(constant);
        for (v, c) in coeffs {
            t.add_coeff(v, c);
        }
        t
    }

    pub fn add_coeff(&mut self, v: Var, c: Rational) {
        if c.is_zero() {
            return;
        }
        let sum = self.coeff(&v) + c;
        if sum.is_zero() {
            self.coeffs.remove(&v);
        } else {
            self.coeffs.insert(v, sum);
        }
    }

    pub fn add_constant(&mut self, c: &Rational) {
        self.constant += c;
    }

    pub fn coeff(&self, v: &str) -> Rational {
        self.coeffs.get(v).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeffs(&self) -> &BTreeMap<Var, Rational> {
        &self.coeffs
    }

    pub fn constant_part(&self) -> &Rational {
        &self.constant
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.coeffs.keys()
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.coeffs.contains_key(v)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, c: &Rational) -> LinTerm {
        if c.is_zero() {
            return LinTerm::zero();
        }
        LinTerm {
            coeffs: self.coeffs.iter().map(|(v, k)| (v.clone(), k * c)).collect(),
            constant: &self.constant * c,
        }
    }

    /// Replaces `v` by `replacement` everywhere.
    pub fn substitute(&self, v: &str, replacement: &LinTerm) -> LinTerm {
        match self.coeffs.get(v) {
            None => self.clone(),
            Some(c) => {
                let mut rest = self.clone();
                rest.coeffs.remove(v);
                &rest + &replacement.scale(c)
            }
        }
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> LinTerm {
        let mut t = LinTerm::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            t.add_coeff(map.get(v).cloned().unwrap_or_else(|| v.clone()), c.clone());
        }
        t
    }

    /// Evaluates the term; `None` if some variable is unassigned.
    pub fn eval(&self, env: &BTreeMap<Var, Rational>) -> Option<Rational> {
        let mut acc = self.constant.clone();
        for (v, c) in &self.coeffs {
            acc += c * env.get(v)?;
        }
        Some(acc)
    }

    /// Evaluates with the known part of `env`, leaving a residual term.
    pub fn partial_eval(&self, env: &BTreeMap<Var, Rational>) -> LinTerm {
        let mut t = LinTerm::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            match env.get(v) {
                Some(x) => t.constant += c * x,
                None => t.add_coeff(v.clone(), c.clone()),
            }
        }
        t
    }

    /// True when every coefficient and the constant are integers.
    pub fn is_integral(&self) -> bool {
        self.constant.is_integer() && self.coeffs.values().all(|c| c.is_integer())
    }

    /// Multiplies by the lcm of the denominators so that all coefficients
    /// become integers.
    pub fn clear_denominators(&self) -> LinTerm {
        let mut l = self.constant.denom().clone();
        for c in self.coeffs.values() {
            l = l.lcm(c.denom());
        }
        self.scale(&Rational::from_integer(l))
    }
}

impl Add for &LinTerm {
    type Output = LinTerm;
    fn add(self, rhs: &LinTerm) -> LinTerm {
        let mut t = self.clone();
        for (v, c) in &rhs.coeffs {
            t.add_coeff(v.clone(), c.clone());
        }
        t.constant += &rhs.constant;
        t
    }
}

impl Sub for &LinTerm {
    type Output = LinTerm;
    fn sub(self, rhs: &LinTerm) -> LinTerm {
        self + &(-rhs)
    }
}

impl Neg for &LinTerm {
    type Output = LinTerm;
    fn neg(self) -> LinTerm {
        self.scale(&-Rational::one())
    }
}

impl Mul<&Rational> for &LinTerm {
    type Output = LinTerm;
    fn mul(self, rhs: &Rational) -> LinTerm {
        self.scale(rhs)
    }
}

fn write_terms<'a>(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (Option<&'a str>, Rational)>,
) -> fmt::Result {
    let mut first = true;
    for (v, c) in terms {
        let neg = c.is_negative();
        let mag = c.abs();
        if first {
            if neg {
                write!(f, "-")?;
            }
        } else {
            write!(f, "{}", if neg { " - " } else { " + " })?;
        }
        first = false;
        match v {
            Some(v) if mag.is_one() => write!(f, "{v}")?,
            Some(v) => write!(f, "{}*{v}", fmt_rational(&mag))?,
            None => write!(f, "{}", fmt_rational(&mag))?,
        }
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

impl fmt::Display for LinTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let consts = (!self.constant.is_zero()).then(|| (None, self.constant.clone()));
        write_terms(
            f,
            self.coeffs
                .iter()
                .map(|(v, c)| (Some(v.as_str()), c.clone()))
                .chain(consts),
        )
    }
}

/// Canonical relation of a constraint `lhs REL 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Eq,
    Le,
    Lt,
}

/// Surface comparison operator, before normalization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Le,
    Lt,
    Ge,
    Gt,
}

/// `lhs REL 0`, with `≥`/`>` normalized to `≤`/`<` by negation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinConstraint {
    pub lhs: LinTerm,
    pub rel: Rel,
}

impl LinConstraint {
    pub fn new(lhs: LinTerm, op: CmpOp) -> Self {
        match op {
            CmpOp::Eq => LinConstraint { lhs, rel: Rel::Eq },
            CmpOp::Le => LinConstraint { lhs, rel: Rel::Le },
            CmpOp::Lt => LinConstraint { lhs, rel: Rel::Lt },
            CmpOp::Ge => LinConstraint { lhs: -&lhs, rel: Rel::Le },
            CmpOp::Gt => LinConstraint { lhs: -&lhs, rel: Rel::Lt },
        }
    }

    /// `a OP b`.
    pub fn cmp(a: &LinTerm, op: CmpOp, b: &LinTerm) -> Self {
        Self::new(a - b, op)
    }

    pub fn eq(a: &LinTerm, b: &LinTerm) -> Self {
        Self::cmp(a, CmpOp::Eq, b)
    }

    pub fn le(a: &LinTerm, b: &LinTerm) -> Self {
        Self::cmp(a, CmpOp::Le, b)
    }

    pub fn lt(a: &LinTerm, b: &LinTerm) -> Self {
        Self::cmp(a, CmpOp::Lt, b)
    }

    pub fn ge(a: &LinTerm, b: &LinTerm) -> Self {
        Self::cmp(a, CmpOp::Ge, b)
    }

    pub fn gt(a: &LinTerm, b: &LinTerm) -> Self {
        Self::cmp(a, CmpOp::Gt, b)
    }

    pub fn falsum() -> Self {
        LinConstraint { lhs: LinTerm::int(1), rel: Rel::Le }
    }

    pub fn vars(&self) -> impl Iterator<Item = &Var> {
        self.lhs.vars()
    }

    /// The negation as a disjunction of constraints.
    pub fn negate(&self) -> Vec<LinConstraint> {
        let neg = -&self.lhs;
        match self.rel {
            Rel::Le => vec![LinConstraint { lhs: neg, rel: Rel::Lt }],
            Rel::Lt => vec![LinConstraint { lhs: neg, rel: Rel::Le }],
            Rel::Eq => vec![
                LinConstraint { lhs: self.lhs.clone(), rel: Rel::Lt },
                LinConstraint { lhs: neg, rel: Rel::Lt },
            ],
        }
    }

    pub fn holds(&self, env: &BTreeMap<Var, Rational>) -> Option<bool> {
        let v = self.lhs.eval(env)?;
        Some(match self.rel {
            Rel::Eq => v.is_zero(),
            Rel::Le => !v.is_positive(),
            Rel::Lt => v.is_negative(),
        })
    }

    pub fn substitute(&self, v: &str, t: &LinTerm) -> LinConstraint {
        LinConstraint { lhs: self.lhs.substitute(v, t), rel: self.rel }
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> LinConstraint {
        LinConstraint { lhs: self.lhs.rename(map), rel: self.rel }
    }

    /// Tightens a strict integral constraint `t < 0` to `t + 1 ≤ 0`.
    pub fn tighten_integer(&self) -> LinConstraint {
        if self.rel != Rel::Lt {
            return self.clone();
        }
        let t = self.lhs.clear_denominators();
        let mut lhs = t;
        lhs.add_constant(&Rational::one());
        LinConstraint { lhs, rel: Rel::Le }
    }

    /// Renders as `pos REL neg` so that re-parsing yields the same `lhs`.
    pub fn to_source(&self) -> String {
        let lhs = if self.lhs.is_integral() { self.lhs.clone() } else { self.lhs.clear_denominators() };
        let mut pos = LinTerm::zero();
        let mut neg = LinTerm::zero();
        for (v, c) in lhs.coeffs() {
            if c.is_positive() {
                pos.add_coeff(v.clone(), c.clone());
            } else {
                neg.add_coeff(v.clone(), -c);
            }
        }
        let k = lhs.constant_part();
        if k.is_positive() {
            pos.add_constant(k);
        } else {
            neg.add_constant(&-k);
        }
        let op = match self.rel {
            Rel::Eq => "=",
            Rel::Le => "<=",
            Rel::Lt => "<",
        };
        format!("{pos} {op} {neg}")
    }
}

impl fmt::Display for LinConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.rel {
            Rel::Eq => "=",
            Rel::Le => "<=",
            Rel::Lt => "<",
        };
        write!(f, "{} {op} 0", self.lhs)
    }
}

/// A conjunction of linear constraints.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConstraintStore {
    constraints: Vec<LinConstraint>,
}

impl ConstraintStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_constraints(cs: impl IntoIterator<Item = LinConstraint>) -> Self {
        let mut s = Self::new();
        for c in cs {
            s.push(c);
        }
        s
    }

    pub fn push(&mut self, c: LinConstraint) {
        if !self.constraints.contains(&c) {
            self.constraints.push(c);
        }
    }

    pub fn extend(&mut self, other: &ConstraintStore) {
        for c in &other.constraints {
            self.push(c.clone());
        }
    }

    pub fn with(&self, c: LinConstraint) -> ConstraintStore {
        let mut s = self.clone();
        s.push(c);
        s
    }

    pub fn and(&self, other: &ConstraintStore) -> ConstraintStore {
        let mut s = self.clone();
        s.extend(other);
        s
    }

    pub fn constraints(&self) -> &[LinConstraint] {
        &self.constraints
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.constraints.iter().flat_map(|c| c.vars().cloned()).collect()
    }

    pub fn substitute(&self, v: &str, t: &LinTerm) -> ConstraintStore {
        Self::from_constraints(self.constraints.iter().map(|c| c.substitute(v, t)))
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> ConstraintStore {
        Self::from_constraints(self.constraints.iter().map(|c| c.rename(map)))
    }

    pub fn holds(&self, env: &BTreeMap<Var, Rational>) -> Option<bool> {
        let mut all = true;
        for c in &self.constraints {
            all &= c.holds(env)?;
        }
        Some(all)
    }

    /// Integer normalization: strict constraints with rational coefficients
    /// are tightened to non-strict ones (`t < 0` becomes `t + 1 ≤ 0` after
    /// clearing denominators).
    pub fn tighten_integer(&self) -> ConstraintStore {
        Self::from_constraints(self.constraints.iter().map(|c| c.tighten_integer()))
    }

    /// Drops constraints that are syntactically trivial (`0 ≤ 0`, `0 = 0`, ...).
    pub fn without_trivial(&self) -> ConstraintStore {
        Self::from_constraints(self.constraints.iter().filter(|c| {
            !(c.lhs.is_constant() && c.holds(&BTreeMap::new()) == Some(true))
        }).cloned())
    }
}

impl fmt::Display for ConstraintStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.constraints.is_empty() {
            return write!(f, "true");
        }
        let parts: Vec<String> = self.constraints.iter().map(|c| c.to_source()).collect();
        write!(f, "{}", parts.join(", "))
    }
}

impl FromIterator<LinConstraint> for ConstraintStore {
    fn from_iter<I: IntoIterator<Item = LinConstraint>>(iter: I) -> Self {
        Self::from_constraints(iter)
    }
}
