//! Loop summaries, top-level intervals and the enclosure audit.

mod audit;
mod interval;
mod loops;
mod top;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde_json::{json, Value};

use crate::chc::{build_cfg, Cfg, Program, TRUE_NODE};
use crate::graph::sccs;
use crate::linarith::{LinConstraint, LinTerm, Var};
use crate::path_clauses::{add_counters, generate, unfold_simplify, CountedProgram, PathProgram};
use crate::pathexpr::{eliminate_multipath, path_expression, RegExpr, StarOrder};
use crate::poly::Polynomial;
use crate::rec_solver::DEFAULT_MAX_DEGREE;

pub use audit::{AuditReport, AuditRow, RowStatus};
pub use interval::{evaluate, intervalize, Case, CounterValues, Signs, SymInterval, MAX_CANDIDATES};
pub use loops::{CounterInfo, LoopSummary};
pub use top::{output_name, TopCase};

/// Pipeline stage, used to label errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Cfg,
    PathExpression,
    PathProgram,
    Counters,
    Recurrences,
    Solve,
    Summary,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Cfg => "cfg",
            Stage::PathExpression => "path expression",
            Stage::PathProgram => "path program",
            Stage::Counters => "counters",
            Stage::Recurrences => "recurrences",
            Stage::Solve => "solve",
            Stage::Summary => "summary",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{stage}: {message}")]
pub struct SummarizeError {
    pub stage: Stage,
    pub message: String,
}

impl SummarizeError {
    pub fn new(stage: Stage, message: impl Into<String>) -> Self {
        SummarizeError { stage, message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    pub star_order: StarOrder,
    /// Assume every input is nonnegative.
    pub assume_nonneg: bool,
    /// Further inputs assumed nonnegative.
    pub assume: Vec<Var>,
    pub max_degree: u32,
    /// Side of the audit grid `[0, grid]^m`; `None` skips the audit.
    pub grid: Option<u32>,
    pub fresh_counters: bool,
    /// Step budget per simulated run in the audit.
    pub sim_budget: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            star_order: StarOrder::File,
            assume_nonneg: true,
            assume: vec![],
            max_degree: DEFAULT_MAX_DEGREE,
            grid: Some(4),
            fresh_counters: false,
            sim_budget: 10_000,
        }
    }
}

impl Options {
    pub fn signs(&self, inputs: &[Var]) -> Signs {
        let mut s: BTreeSet<Var> = self.assume.iter().cloned().collect();
        if self.assume_nonneg {
            s.extend(inputs.iter().cloned());
        }
        Signs { nonneg: s }
    }
}

/// Artifacts of the stages before loop summarization.
#[derive(Clone, Debug)]
pub struct Front {
    pub program: Program,
    pub cfg: Cfg,
    pub start: String,
    pub raw: RegExpr,
    pub rewritten: RegExpr,
    pub path_program: PathProgram,
    pub counted: CountedProgram,
}

pub fn front(p: &Program, opts: &Options) -> Result<Front, SummarizeError> {
    let cfg = build_cfg(p);
    let start = p.entry.0.clone();
    if !cfg.has_node(&start) {
        return Err(SummarizeError::new(Stage::Cfg, format!("entry predicate {start} has no clauses")));
    }
    let raw = path_expression(&cfg, &start, TRUE_NODE);
    if raw == RegExpr::Empty {
        return Err(SummarizeError::new(Stage::PathExpression, format!("no path from {start} to an exit")));
    }
    let rewritten = eliminate_multipath(&raw, opts.star_order);
    let path_program = unfold_simplify(&generate(p, &rewritten, &start, TRUE_NODE));
    let counted = add_counters(&path_program).map_err(|e| SummarizeError::new(Stage::Counters, e.to_string()))?;
    Ok(Front { program: p.clone(), cfg, start, raw, rewritten, path_program, counted })
}

/// Summaries of every loop, callees first.
pub fn summarize_loops(f: &Front, opts: &Options) -> Result<Vec<LoopSummary>, SummarizeError> {
    let cp = &f.counted;
    let names: Vec<String> = cp.loops.iter().map(|l| l.pred.clone()).collect();
    let order = sccs(&names, |p| cp.loop_of(p).map(|l| l.body.calls.iter().map(|a| a.pred.clone()).collect()).unwrap_or_default());
    let lopts = loops::LoopOptions {
        integer: f.program.integer,
        fresh_counters: opts.fresh_counters,
        max_degree: opts.max_degree,
    };
    let all_counters = cp.counters();
    let mut done: BTreeMap<String, LoopSummary> = BTreeMap::new();
    for group in order {
        if group.len() > 1 {
            return Err(SummarizeError::new(Stage::Summary, format!("loops {group:?} call each other")));
        }
        let l = cp.loop_of(&group[0]).expect("loop exists");
        let s = loops::summarize_loop(l, &cp.program, &done, &all_counters, &lopts)?;
        done.insert(s.pred.clone(), s);
    }
    Ok(names.iter().map(|n| done.remove(n).expect("every loop summarized")).collect())
}

/// Intervals of a loop's outputs over any number of iterations allowed by
/// its counter bounds, ignoring how the loop is left.
pub fn loop_intervals(s: &LoopSummary, signs: &Signs) -> Vec<(Var, SymInterval)> {
    let mut store = s.constraints();
    for v in &s.inputs {
        if signs.nonneg.contains(v) {
            store.push(LinConstraint::ge(&LinTerm::var(v.clone()), &LinTerm::zero()));
        }
    }
    let case = Case {
        store,
        outputs: s.closed_forms.iter().map(|(v, p)| (format!("{v}'"), Some(p.clone()))).collect(),
        counters: s.all_counters(),
    };
    match intervalize(&case, &s.inputs, signs) {
        Some((outs, _)) => outs,
        None => case.outputs.iter().map(|(v, _)| (v.clone(), SymInterval::unbounded())).collect(),
    }
}

/// A feasible top-level case with its intervals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub top: TopCase,
    pub outputs: Vec<(Var, SymInterval)>,
    pub counters: CounterValues,
}

#[derive(Clone, Debug)]
pub struct ProgramSummary {
    pub entry: (String, usize),
    pub inputs: Vec<Var>,
    pub loops: Vec<LoopSummary>,
    pub cases: Vec<CaseResult>,
    pub outputs: Vec<(Var, SymInterval)>,
    pub signs: Signs,
    pub fresh_counters: bool,
    pub fidelity_notes: Vec<String>,
    pub audit: Option<AuditReport>,
}

pub fn summarize_program(p: &Program, opts: &Options) -> Result<ProgramSummary, SummarizeError> {
    let f = front(p, opts)?;
    summarize_front(&f, opts)
}

pub fn summarize_front(f: &Front, opts: &Options) -> Result<ProgramSummary, SummarizeError> {
    let loops = summarize_loops(f, opts)?;
    let pp = &f.counted.program;
    let inputs = pp.entry_args.clone();
    let signs = opts.signs(&inputs);
    let done: BTreeMap<String, LoopSummary> = loops.iter().map(|s| (s.pred.clone(), s.clone())).collect();
    let tops = top::top_cases(pp, &done, &f.counted.counters(), &signs, f.program.integer)?;
    let mut cases = Vec::new();
    for t in tops {
        let Some((outputs, counters)) = intervalize(&t.case, &inputs, &signs) else {
            log::debug!("case {} {:?} is infeasible", t.clause, t.branch);
            continue;
        };
        cases.push(CaseResult { top: t, outputs, counters });
    }
    let mut outputs: Vec<(Var, SymInterval)> = Vec::new();
    for c in &cases {
        for (v, iv) in &c.outputs {
            match outputs.iter_mut().find(|(w, _)| w == v) {
                Some((_, acc)) => *acc = acc.hull(iv, &signs),
                None => outputs.push((v.clone(), iv.clone())),
            }
        }
    }
    let mut s = ProgramSummary {
        entry: f.program.entry.clone(),
        inputs,
        loops,
        cases,
        outputs,
        signs,
        fresh_counters: opts.fresh_counters,
        fidelity_notes: vec![],
        audit: None,
    };
    if let Some(grid) = opts.grid {
        let report = audit::audit(&f.program, pp, &s, grid, opts.sim_budget);
        s.fidelity_notes = report.violations();
        s.audit = Some(report);
    }
    Ok(s)
}

impl ProgramSummary {
    pub fn output(&self, v: &str) -> Option<&SymInterval> {
        self.outputs.iter().find(|(w, _)| w == v).map(|(_, iv)| iv)
    }

    pub fn loop_summary(&self, pred: &str) -> Option<&LoopSummary> {
        self.loops.iter().find(|l| l.pred == pred)
    }

    pub fn to_json(&self) -> Value {
        let outputs: serde_json::Map<String, Value> = self.outputs.iter().map(|(v, iv)| (v.clone(), iv.to_json())).collect();
        json!({
            "entry": format!("{}/{}", self.entry.0, self.entry.1),
            "loops": self.loops.iter().map(|l| l.to_json()).collect::<Vec<_>>(),
            "outputs": outputs,
            "assumptions": {
                "nonneg": self.signs.nonneg.iter().collect::<Vec<_>>(),
                "fresh_counters": self.fresh_counters,
            },
            "fidelity_notes": self.fidelity_notes,
        })
    }
}

impl fmt::Display for ProgramSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "entry {}/{} with inputs ({})", self.entry.0, self.entry.1, self.inputs.join(","))?;
        for l in &self.loops {
            write!(f, "{l}")?;
        }
        writeln!(f, "outputs:")?;
        for (v, iv) in &self.outputs {
            writeln!(f, "  {v} {iv}")?;
        }
        if !self.signs.nonneg.is_empty() {
            writeln!(f, "assuming {} >= 0", self.signs.nonneg.iter().cloned().collect::<Vec<_>>().join(", "))?;
        }
        for n in &self.fidelity_notes {
            writeln!(f, "note: {n}")?;
        }
        Ok(())
    }
}

/// The closed forms of a loop with every counter set to zero.
pub fn at_zero(s: &LoopSummary) -> Vec<(Var, Polynomial)> {
    let zero: BTreeMap<Var, Polynomial> = s.all_counters().into_iter().map(|k| (k, Polynomial::zero())).collect();
    s.closed_forms.iter().map(|(v, p)| (v.clone(), p.substitute_all(&zero))).collect()
}

#[cfg(test)]
mod tests;
