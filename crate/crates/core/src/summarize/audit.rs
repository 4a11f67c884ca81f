//! Differential check of a program summary against concrete execution.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::ToPrimitive;
use serde_json::{json, Value};

use super::interval::SymInterval;
use super::{CaseResult, ProgramSummary};
use crate::chc::{simulate, Program};
use crate::linarith::{project, rat, ConstraintStore, Rational, Var};
use crate::path_clauses::PathProgram;

/// Grids with more points than this are not audited.
const MAX_POINTS: usize = 100_000;
/// Counter assignments tried per case and point.
const MAX_ASSIGNMENTS: usize = 200_000;
/// Range used for counters without an upper bound.
const OPEN_RANGE: i64 = 64;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RowStatus {
    /// Every terminal value is reproduced by the closed forms of some case.
    Exact,
    /// Inside the intervals but not reproduced exactly.
    Enclosed,
    Violations(Vec<String>),
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditRow {
    pub input: Vec<Rational>,
    pub terminals: Vec<Vec<Rational>>,
    pub status: RowStatus,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditReport {
    pub grid: u32,
    pub inputs: Vec<Var>,
    pub rows: Vec<AuditRow>,
    pub note: Option<String>,
}

fn tuple(xs: &[Rational]) -> String {
    format!("({})", xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
}

fn numeric(iv: &SymInterval, env: &BTreeMap<Var, Rational>) -> String {
    match iv.eval(env) {
        Some((lo, hi)) => format!(
            "[{}, {}]",
            lo.map(|x| x.to_string()).unwrap_or_else(|| "-inf".into()),
            hi.map(|x| x.to_string()).unwrap_or_else(|| "+inf".into())
        ),
        None => "[?]".into(),
    }
}

impl AuditReport {
    pub fn violations(&self) -> Vec<String> {
        self.rows
            .iter()
            .flat_map(|r| match &r.status {
                RowStatus::Violations(v) => v.clone(),
                _ => vec![],
            })
            .collect()
    }

    pub fn count(&self, pred: impl Fn(&RowStatus) -> bool) -> usize {
        self.rows.iter().filter(|r| pred(&r.status)).count()
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let (status, detail) = match &r.status {
                    RowStatus::Exact => ("exact", Value::Null),
                    RowStatus::Enclosed => ("enclosed", Value::Null),
                    RowStatus::Violations(v) => ("violation", json!(v)),
                    RowStatus::Skipped(s) => ("skipped", json!(s)),
                };
                json!({
                    "input": r.input.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                    "terminals": r.terminals.iter().map(|t| t.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
                    "status": status,
                    "detail": detail,
                })
            })
            .collect();
        json!({ "grid": self.grid, "inputs": self.inputs, "rows": rows, "note": self.note })
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "check over [0,{}]^{} for ({})", self.grid, self.inputs.len(), self.inputs.join(","))?;
        if let Some(n) = &self.note {
            writeln!(f, "  {n}")?;
        }
        for r in &self.rows {
            let outs = r.terminals.iter().map(|t| tuple(t)).collect::<Vec<_>>().join(" ");
            match &r.status {
                RowStatus::Exact => writeln!(f, "  {} -> {outs}  exact", tuple(&r.input))?,
                RowStatus::Enclosed => writeln!(f, "  {} -> {outs}  enclosed", tuple(&r.input))?,
                RowStatus::Violations(v) => writeln!(f, "  {} -> {outs}  VIOLATION {}", tuple(&r.input), v.join("; "))?,
                RowStatus::Skipped(s) => writeln!(f, "  {}  skipped: {s}", tuple(&r.input))?,
            }
        }
        let n = |p: fn(&RowStatus) -> bool| self.count(p);
        writeln!(
            f,
            "exact {}, enclosed {}, violations {}, skipped {}",
            n(|s| matches!(s, RowStatus::Exact)),
            n(|s| matches!(s, RowStatus::Enclosed)),
            n(|s| matches!(s, RowStatus::Violations(_))),
            n(|s| matches!(s, RowStatus::Skipped(_)))
        )
    }
}

fn to_i64(x: &Rational) -> Option<i64> {
    x.to_integer().to_i64()
}

/// Whether some integer counter assignment within the case's ranges
/// satisfies the case and yields `values` as its outputs.
fn reproduces(c: &CaseResult, store: &ConstraintStore, env: &BTreeMap<Var, Rational>, values: &[Rational]) -> bool {
    let mut env = env.clone();
    for (k, t) in &c.counters.exact {
        match t.eval(&env) {
            Some(x) => env.insert(k.clone(), x),
            None => return false,
        };
    }
    let mut ranges: Vec<(Var, i64, i64)> = Vec::new();
    for (k, iv) in &c.counters.ranges {
        let Some((lo, hi)) = iv.eval(&env) else { return false };
        let lo = lo.map(|l| to_i64(&l.ceil()).unwrap_or(0)).unwrap_or(0).max(0);
        let hi = hi.map(|h| to_i64(&h.floor()).unwrap_or(lo)).unwrap_or(lo + OPEN_RANGE);
        if hi < lo {
            return false;
        }
        ranges.push((k.clone(), lo, hi));
    }
    let total = ranges.iter().try_fold(1usize, |acc, (_, lo, hi)| acc.checked_mul((hi - lo + 1) as usize));
    if total.is_none_or(|t| t > MAX_ASSIGNMENTS) {
        return false;
    }
    let mut idx: Vec<i64> = ranges.iter().map(|(_, lo, _)| *lo).collect();
    loop {
        for ((k, _, _), x) in ranges.iter().zip(&idx) {
            env.insert(k.clone(), rat(*x));
        }
        let outs_ok = c.top.case.outputs.iter().zip(values).all(|((_, p), v)| p.as_ref().and_then(|p| p.eval(&env)).as_ref() == Some(v));
        if outs_ok && store.holds(&env) == Some(true) {
            return true;
        }
        let mut i = 0;
        loop {
            if i == idx.len() {
                return false;
            }
            if idx[i] < ranges[i].2 {
                idx[i] += 1;
                break;
            }
            idx[i] = ranges[i].1;
            i += 1;
        }
    }
}

pub(crate) fn audit(p: &Program, pp: &PathProgram, s: &ProgramSummary, grid: u32, budget: usize) -> AuditReport {
    let m = s.inputs.len();
    let side = grid as usize + 1;
    let mut report = AuditReport { grid, inputs: s.inputs.clone(), rows: vec![], note: None };
    if side.checked_pow(m as u32).is_none_or(|n| n > MAX_POINTS) {
        report.note = Some(format!("grid of {side}^{m} points is too large; not audited"));
        return report;
    }
    let outputs: BTreeMap<&Var, &SymInterval> = s.outputs.iter().map(|(v, iv)| (v, iv)).collect();
    // Case constraints over inputs and counters only, so that a counter
    // assignment can be checked by evaluation.
    let stores: Vec<Option<ConstraintStore>> = s
        .cases
        .iter()
        .map(|c| {
            let keep = s.inputs.iter().cloned().chain(c.top.case.counters.iter().cloned()).collect();
            project(&c.top.case.store, &keep).ok()
        })
        .collect();
    let mut point = vec![0u32; m];
    loop {
        let input: Vec<Rational> = point.iter().map(|x| rat(i64::from(*x))).collect();
        let env: BTreeMap<Var, Rational> = s.inputs.iter().cloned().zip(input.iter().cloned()).collect();
        let row = match simulate(p, &input, budget) {
            Err(e) => AuditRow { input: input.clone(), terminals: vec![], status: RowStatus::Skipped(e.to_string()) },
            Ok(ts) => {
                let mut violations = Vec::new();
                let mut exact = true;
                for t in &ts {
                    for (i, x) in t.values.iter().enumerate() {
                        let name = super::top::output_name(pp, &t.pred, i, t.values.len());
                        match outputs.get(&name) {
                            None => violations.push(format!("({})={}: {name}={x} has no interval", s.inputs.join(","), tuple(&input))),
                            Some(iv) if iv.contains(&env, x) != Some(true) => violations.push(format!(
                                "({})={}: {name}={x} outside {}",
                                s.inputs.join(","),
                                tuple(&input),
                                numeric(iv, &env)
                            )),
                            Some(_) => {}
                        }
                    }
                    exact &= s
                        .cases
                        .iter()
                        .zip(&stores)
                        .filter(|(c, _)| c.top.exit_pred == t.pred)
                        .any(|(c, st)| st.as_ref().is_some_and(|st| reproduces(c, st, &env, &t.values)));
                }
                let status = if !violations.is_empty() {
                    RowStatus::Violations(violations)
                } else if exact {
                    RowStatus::Exact
                } else {
                    RowStatus::Enclosed
                };
                AuditRow { input: input.clone(), terminals: ts.into_iter().map(|t| t.values).collect(), status }
            }
        };
        report.rows.push(row);
        let mut i = m;
        loop {
            if i == 0 {
                return report;
            }
            i -= 1;
            if point[i] < grid {
                point[i] += 1;
                break;
            }
            point[i] = 0;
        }
    }
}
