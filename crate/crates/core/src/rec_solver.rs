//! Closed forms for first-order recurrences with polynomial inhomogeneous part.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::linarith::{Rational, Var};
use crate::poly::Polynomial;
use crate::rd_sc::{remove_constants, symbolic_constants, RdError};
use crate::recurrences::{app_target, app_var, scc_order, EqKind, EqSystem, RecurrenceError};

pub const DEFAULT_MAX_DEGREE: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolveError {
    #[error("closed form would have degree {degree} in the counter, above the cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },
    #[error("unsupported recurrence for {func}: {reason}")]
    UnsupportedRecurrence { func: String, reason: String },
    #[error(transparent)]
    NotConstant(#[from] RdError),
    #[error(transparent)]
    Recurrence(#[from] RecurrenceError),
}

fn unsupported(func: &str, reason: impl Into<String>) -> SolveError {
    SolveError::UnsupportedRecurrence { func: func.to_string(), reason: reason.into() }
}

fn binomial(n: u32, k: u32) -> Rational {
    (0..k).fold(Rational::one(), |acc, i| acc * Rational::from_integer((n - i).into()) / Rational::from_integer((i + 1).into()))
}

fn kvar(k: &str) -> Polynomial {
    Polynomial::var(k.to_string())
}

/// `S_d(k) = Σ_{i=1..k} i^d` for `d = 0..=max`.
fn power_sums(k: &str, max: u32) -> Vec<Polynomial> {
    let k1 = &kvar(k) + &Polynomial::one();
    let mut sums: Vec<Polynomial> = Vec::new();
    for d in 0..=max {
        let mut s = &k1.pow(d + 1) - &Polynomial::one();
        for (j, sj) in sums.iter().enumerate() {
            s = &s - &sj.scale(&binomial(d + 1, j as u32));
        }
        sums.push(s.scale(&(Rational::one() / Rational::from_integer((d + 1).into()))));
    }
    sums
}

/// `Σ_{i=1..k} p(i)` as a polynomial in `k`.
pub fn sum_poly(p: &Polynomial, k: &str, cap: u32) -> Result<Polynomial, SolveError> {
    let d = p.degree_in(k);
    if d + 1 > cap {
        return Err(SolveError::DegreeCap { degree: d + 1, cap });
    }
    let sums = power_sums(k, d);
    let mut out = Polynomial::zero();
    for (e, c) in p.coefficients_in(k) {
        out = &out + &(&c * &sums[e as usize]);
    }
    Ok(out)
}

/// `poly + c·base^counter`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedForm {
    pub func: String,
    pub counter: Var,
    pub poly: Polynomial,
    pub exp: Option<(Rational, Polynomial)>,
}

impl ClosedForm {
    pub fn as_polynomial(&self) -> Option<&Polynomial> {
        self.exp.is_none().then_some(&self.poly)
    }

    pub fn eval(&self, env: &BTreeMap<Var, Rational>) -> Option<Rational> {
        let mut v = self.poly.eval(env)?;
        if let Some((a, c)) = &self.exp {
            let k = env.get(&self.counter)?;
            if !k.is_integer() || k < &Rational::zero() {
                return None;
            }
            let n: u32 = k.to_integer().try_into().ok()?;
            v += c.eval(env)? * num_traits::pow(a.clone(), n as usize);
        }
        Some(v)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "function": self.func,
            "counter": self.counter,
            "closed_form": self.to_string(),
            "poly": self.poly.to_json(),
            "exp": self.exp.as_ref().map(|(a, c)| json!({ "base": a.to_string(), "coeff": c.to_json() })),
        })
    }
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exp {
            None => write!(f, "{}", self.poly),
            Some((a, c)) if self.poly.is_zero() => write!(f, "({c})*({a})^{}", self.counter),
            Some((a, c)) => write!(f, "{} + ({c})*({a})^{}", self.poly, self.counter),
        }
    }
}

/// Solves `f(0) = b`, `f(k) = a·f(k-1) + p(k)` for `k > 0`.
pub fn solve_first_order(
    func: &str,
    k: &str,
    a: &Rational,
    p: &Polynomial,
    b: &Polynomial,
    cap: u32,
) -> Result<ClosedForm, SolveError> {
    if b.mentions(k) {
        return Err(unsupported(func, "base value depends on the counter"));
    }
    if a.is_one() {
        let poly = b + &sum_poly(p, k, cap)?;
        return Ok(ClosedForm { func: func.into(), counter: k.into(), poly, exp: None });
    }
    let d = p.degree_in(k);
    if d > cap {
        return Err(SolveError::DegreeCap { degree: d, cap });
    }
    // q(k) - a·q(k-1) = p(k), solved from the leading coefficient down
    let pc = p.coefficients_in(k);
    let mut q: Vec<Polynomial> = vec![Polynomial::zero(); d as usize + 1];
    let one_minus_a = Rational::one() - a;
    for m in (0..=d).rev() {
        let mut acc = pc.get(&m).cloned().unwrap_or_else(Polynomial::zero);
        for j in m + 1..=d {
            let sign = if (j - m) % 2 == 0 { Rational::one() } else { -Rational::one() };
            acc = &acc + &q[j as usize].scale(&(a * binomial(j, m) * sign));
        }
        q[m as usize] = acc.scale(&(Rational::one() / &one_minus_a));
    }
    let kk = kvar(k);
    let poly = q.iter().enumerate().fold(Polynomial::zero(), |s, (j, c)| &s + &(c * &kk.pow(j as u32)));
    let coeff = b - &q[0];
    let exp = (!coeff.is_zero()).then(|| (a.clone(), coeff));
    Ok(ClosedForm { func: func.into(), counter: k.into(), poly, exp })
}

/// Symbolic check that `cf` satisfies the recurrence.
pub fn verify(cf: &ClosedForm, a: &Rational, p: &Polynomial, b: &Polynomial) -> bool {
    let k = &cf.counter;
    let zero = Polynomial::zero();
    let c0 = cf.exp.as_ref().map(|(_, c)| c).unwrap_or(&zero);
    let base_ok = (&(&cf.poly.substitute(k, &zero) + c0) - b).is_zero();
    let prev = cf.poly.substitute(k, &(&kvar(k) - &Polynomial::one()));
    let step_ok = (&(&cf.poly - &prev.scale(a)) - p).is_zero();
    let exp_ok = cf.exp.as_ref().is_none_or(|(base, c)| base == a && !c.mentions(k));
    base_ok && step_ok && exp_ok
}

/// Replaces applications of `cf.func` in `rhs` by the closed form at `k-1`.
pub fn substitute_solution(rhs: &Polynomial, cf: &ClosedForm) -> Result<Polynomial, SolveError> {
    let app = app_var(&cf.func);
    if !rhs.mentions(&app) {
        return Ok(rhs.clone());
    }
    let Some(poly) = cf.as_polynomial() else {
        return Err(unsupported(&cf.func, "exponential closed form used by another function"));
    };
    let prev = poly.substitute(&cf.counter, &(&kvar(&cf.counter) - &Polynomial::one()));
    Ok(rhs.substitute(&app, &prev))
}

/// Closed forms of every function, solved callees first.
pub fn solve_system(sys: &EqSystem, cap: u32) -> Result<Vec<ClosedForm>, SolveError> {
    let mut solved: Vec<ClosedForm> = Vec::new();
    for group in scc_order(sys)? {
        let f = &group[0];
        let mut sub = sys.clone();
        sub.functions = vec![f.clone()];
        sub.tracks = sys.functions.iter().zip(&sys.tracks).filter(|(g, _)| *g == f).map(|(_, t)| t.clone()).collect();
        sub.equations.retain(|e| &e.func == f);
        for eq in &mut sub.equations {
            for cf in &solved {
                eq.rhs = substitute_solution(&eq.rhs, cf)?;
            }
        }
        let params: BTreeSet<Var> = sub.params.iter().cloned().collect();
        let consts = symbolic_constants(&sub, &params);
        if let Some(v) = params.iter().find(|v| !consts.contains(*v)) {
            return Err(RdError::NotConstant(v.clone()).into());
        }
        let sub = remove_constants(&sub, &consts)?;
        let back: BTreeMap<Var, Var> = sub.constants.iter().cloned().collect();

        let (Some(step), Some(base)) = (sub.step(f), sub.base(f)) else {
            return Err(unsupported(f, "missing base or step equation"));
        };
        debug_assert_eq!(base.kind, EqKind::Base);
        let app = app_var(f);
        let parts = step.rhs.coefficients_in(&app);
        if parts.keys().any(|&d| d > 1) {
            return Err(unsupported(f, "non-linear in the previous value"));
        }
        let a = match parts.get(&1) {
            None => Rational::zero(),
            Some(c) => c.as_constant().ok_or_else(|| unsupported(f, "coefficient of the previous value is not constant"))?,
        };
        let p = parts.get(&0).cloned().unwrap_or_else(Polynomial::zero).rename(&back);
        if let Some(v) = p.vars().iter().find(|v| app_target(v).is_some()) {
            return Err(unsupported(f, format!("unsolved application {v}")));
        }
        let b = base.rhs.rename(&back);
        let cf = solve_first_order(f, &sys.counter, &a, &p, &b, cap)?;
        if !verify(&cf, &a, &p, &b) {
            return Err(unsupported(f, "closed form failed verification"));
        }
        log::debug!("{f} = {cf}");
        solved.push(cf);
    }
    let order: BTreeMap<&String, usize> = sys.functions.iter().enumerate().map(|(i, f)| (f, i)).collect();
    solved.sort_by_key(|cf| order[&cf.func]);
    Ok(solved)
}

#[cfg(test)]
mod tests;
