//! Multivariate polynomials with exact rational coefficients.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::linarith::{fmt_rational, LinTerm, Rational, Var};

/// A power product. Zero exponents are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial(BTreeMap<Var, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(v: impl Into<Var>) -> Self {
        Monomial([(v.into(), 1)].into())
    }

    pub fn from_powers(powers: impl IntoIterator<Item = (Var, u32)>) -> Self {
        Monomial(powers.into_iter().filter(|(_, e)| *e > 0).collect())
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn exponent(&self, v: &str) -> u32 {
        self.0.get(v).copied().unwrap_or(0)
    }

    pub fn powers(&self) -> &BTreeMap<Var, u32> {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.0.clone();
        for (v, e) in &other.0 {
            *m.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(m)
    }

    fn without(&self, v: &str) -> Monomial {
        let mut m = self.0.clone();
        m.remove(v);
        Monomial(m)
    }
}

/// Graded order: total degree first, then the exponent of the
/// alphabetically smallest variable where the two differ.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            let vars: BTreeSet<&Var> = self.0.keys().chain(other.0.keys()).collect();
            for v in vars {
                match self.exponent(v).cmp(&other.exponent(v)) {
                    Ordering::Equal => continue,
                    o => return o,
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(v, e)| if *e == 1 { v.clone() } else { format!("{v}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// A polynomial as a map from monomials to non-zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Rational>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        Self::term(Monomial::one(), c)
    }

    pub fn int(c: i64) -> Self {
        Self::constant(Rational::from_integer(BigInt::from(c)))
    }

    pub fn var(v: impl Into<Var>) -> Self {
        Self::term(Monomial::var(v), Rational::one())
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let sum = self.terms.get(&m).cloned().unwrap_or_else(Rational::zero) + c;
        if sum.is_zero() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, sum);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Monomial, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: &str) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.0.keys().cloned()).collect()
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.terms.keys().any(|m| m.0.contains_key(v))
    }

    pub fn scale(&self, c: &Rational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial { terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect() }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Groups by powers of `v`: `self = Σ coeffs[e] · v^e`.
    pub fn coefficients_in(&self, v: &str) -> BTreeMap<u32, Polynomial> {
        let mut out: BTreeMap<u32, Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            out.entry(m.exponent(v)).or_default().add_term(m.without(v), c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    pub fn substitute(&self, v: &str, by: &Polynomial) -> Polynomial {
        if !self.mentions(v) {
            return self.clone();
        }
        let mut out = Polynomial::zero();
        for (e, c) in self.coefficients_in(v) {
            out = &out + &(&c * &by.pow(e));
        }
        out
    }

    /// Simultaneous substitution.
    pub fn substitute_all(&self, map: &BTreeMap<Var, Polynomial>) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(c.clone());
            for (v, e) in &m.0 {
                let f = match map.get(v) {
                    Some(p) => p.pow(*e),
                    None => Polynomial::term(Monomial::from_powers([(v.clone(), *e)]), Rational::one()),
                };
                t = &t * &f;
            }
            out = &out + &t;
        }
        out
    }

    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Polynomial {
        let sub = map.iter().map(|(a, b)| (a.clone(), Polynomial::var(b.clone()))).collect();
        self.substitute_all(&sub)
    }

    pub fn eval(&self, env: &BTreeMap<Var, Rational>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in &m.0 {
                let x = env.get(v)?;
                for _ in 0..*e {
                    t *= x;
                }
            }
            acc += t;
        }
        Some(acc)
    }

    /// Substitutes the known part of `env`.
    pub fn partial_eval(&self, env: &BTreeMap<Var, Rational>) -> Polynomial {
        let sub = env.iter().map(|(v, x)| (v.clone(), Polynomial::constant(x.clone()))).collect();
        self.substitute_all(&sub)
    }

    pub fn from_linterm(t: &LinTerm) -> Polynomial {
        let mut p = Polynomial::constant(t.constant_part().clone());
        for (v, c) in t.coeffs() {
            p.add_term(Monomial::var(v.clone()), c.clone());
        }
        p
    }

    /// `Some` when the polynomial has degree at most one.
    pub fn to_linterm(&self) -> Option<LinTerm> {
        let mut t = LinTerm::zero();
        for (m, c) in &self.terms {
            match m.degree() {
                0 => t.add_constant(c),
                1 => t.add_coeff(m.0.keys().next().unwrap().clone(), c.clone()),
                _ => return None,
            }
        }
        Some(t)
    }

    /// True when every coefficient is non-negative.
    pub fn has_nonneg_coeffs(&self) -> bool {
        self.terms.values().all(|c| !c.is_negative())
    }

    /// Monomial-list encoding: `[{"coeff": "n/d", "powers": {v: e}}]`.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .rev()
                .map(|(m, c)| {
                    let powers: serde_json::Map<String, Value> =
                        m.0.iter().map(|(v, e)| (v.clone(), json!(e))).collect();
                    json!({ "coeff": format!("{}/{}", c.numer(), c.denom()), "powers": powers })
                })
                .collect(),
        )
    }

    pub fn from_json(v: &Value) -> Option<Polynomial> {
        let mut p = Polynomial::zero();
        for t in v.as_array()? {
            let (n, d) = t.get("coeff")?.as_str()?.split_once('/')?;
            let c = Rational::new(n.parse().ok()?, d.parse().ok()?);
            let mut powers = Vec::new();
            for (var, e) in t.get("powers")?.as_object()? {
                powers.push((var.clone(), e.as_u64()?.to_u32()?));
            }
            p.add_term(Monomial::from_powers(powers), c);
        }
        Some(p)
    }

    /// Parses expressions such as `y - 1/2*k^2 + k*x + 1/2*k` or
    /// `1/2*a*(a - 1)`.
    pub fn parse(s: &str) -> Result<Polynomial, String> {
        let mut p = PolyParser { s: s.as_bytes(), i: 0 };
        let e = p.expr()?;
        p.ws();
        if p.i != p.s.len() {
            return Err(format!("unexpected input at offset {}", p.i));
        }
        Ok(e)
    }
}

struct PolyParser<'a> {
    s: &'a [u8],
    i: usize,
}

impl PolyParser<'_> {
    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.i).copied()
    }

    fn expr(&mut self) -> Result<Polynomial, String> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.i += 1;
            let t = self.term()?;
            acc = if c == b'+' { &acc + &t } else { &acc - &t };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial, String> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.i += 1;
                    acc = &acc * &self.factor()?;
                }
                Some(b'(') => acc = &acc * &self.factor()?,
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Polynomial, String> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.i += 1;
            let e = self.number()?;
            let e = e.to_u32().ok_or("exponent too large")?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<BigInt, String> {
        self.ws();
        let start = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        std::str::from_utf8(&self.s[start..self.i])
            .unwrap()
            .parse()
            .map_err(|_| format!("expected number at offset {start}"))
    }

    fn atom(&mut self) -> Result<Polynomial, String> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(-&self.factor()?)
            }
            Some(b'(') => {
                self.i += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(format!("expected ')' at offset {}", self.i));
                }
                self.i += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.number()?;
                let mut d = BigInt::one();
                if self.peek() == Some(b'/') {
                    self.i += 1;
                    d = self.number()?;
                }
                Ok(Polynomial::constant(Rational::new(n, d)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' || c == b'$' => {
                let start = self.i;
                while self.i < self.s.len()
                    && (self.s[self.i].is_ascii_alphanumeric() || b"_$'".contains(&self.s[self.i]))
                {
                    self.i += 1;
                }
                Ok(Polynomial::var(std::str::from_utf8(&self.s[start..self.i]).unwrap()))
            }
            _ => Err(format!("unexpected input at offset {}", self.i)),
        }
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for (m, c) in &rhs.terms {
            p.add_term(m.clone(), c.clone());
        }
        p
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(&-Rational::one())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut p = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                p.add_term(m1.mul(m2), c1 * c2);
            }
        }
        p
    }
}

/// Highest-degree terms first, e.g. `-1/2*k^2 + k*x + 1/2*k + y`.
impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            if m.is_one() {
                write!(f, "{}", fmt_rational(&mag))?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{}*{m}", fmt_rational(&mag))?;
            }
        }
        Ok(())
    }
}
