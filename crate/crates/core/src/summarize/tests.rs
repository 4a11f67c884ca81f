use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::chc::parse_program;
use crate::linarith::{rat, Rational};
use crate::testutil::{EX41, FIG1};

const ACC: &str = "aux(X,Y,Z,W) :- X>0, aux(X-1,Y+1,X+Y+1+Z,W).\naux(X,Y,Z,W) :- X<=0.";

fn poly(s: &str) -> Polynomial {
    Polynomial::parse(s).unwrap()
}

fn summary(src: &str) -> ProgramSummary {
    summarize_program(&parse_program(src).unwrap(), &Options::default()).unwrap()
}

fn closed(s: &LoopSummary, v: &str) -> Polynomial {
    s.closed_forms.iter().find(|(w, _)| w == v).unwrap().1.clone()
}

fn bounds(iv: &SymInterval) -> (Polynomial, Polynomial) {
    let lo = iv.lower.as_ref().expect("lower bound");
    let hi = iv.upper.as_ref().expect("upper bound");
    assert_eq!((lo.len(), hi.len()), (1, 1), "single candidates expected, got {iv}");
    (lo[0].clone(), hi[0].clone())
}

fn env(pairs: &[(&str, i64)]) -> BTreeMap<Var, Rational> {
    pairs.iter().map(|(v, x)| (v.to_string(), rat(*x))).collect()
}

fn named<'a>(ivs: &'a [(Var, SymInterval)], v: &str) -> &'a SymInterval {
    &ivs.iter().find(|(w, _)| w == v).unwrap().1
}

#[test]
fn inner_loop_of_nested_program() {
    let s = summary(FIG1);
    let l = s.loop_summary("wh2").unwrap();
    assert_eq!(closed(l, "A"), poly("A"));
    assert_eq!(closed(l, "B"), poly("B - K1"));
    assert_eq!(l.counters[0].upper, Some(poly("B").to_linterm().unwrap()));
}

#[test]
fn outer_loop_of_nested_program() {
    let s = summary(FIG1);
    let l = s.loop_summary("wh5").unwrap();
    assert_eq!(l.counter, "K2");
    assert_eq!(closed(l, "A"), poly("A - K2"));
    assert_eq!(closed(l, "B"), poly("B + 1/2*K2*(2*A - K2 - 2*K1 + 1)"));
    assert_eq!(l.counters[0].upper, Some(poly("A").to_linterm().unwrap()));
    let carried = l.counters.iter().find(|k| k.name == "K1").unwrap();
    assert_eq!(carried.upper, Some(poly("A - K2 + 1").to_linterm().unwrap()));
}

/// Runs the outer loop of the nested program directly, the inner loop
/// being exhausted in every outer iteration.
fn nested_oracle(mut a: i64, mut b: i64) -> (i64, i64) {
    while a > 0 {
        while b > 0 {
            b -= 1;
        }
        b += a;
        a -= 1;
    }
    (a, b)
}

#[test]
fn nested_program_outputs() {
    let s = summary(FIG1);
    assert_eq!(s.output("A'").unwrap().as_exact(), Some(&poly("0")));
    let (lo, hi) = bounds(s.output("B'").unwrap());
    assert_eq!(lo, poly("1/2*A^2 - 1/2*A"));
    assert_eq!(hi, poly("B + 1/2*A^2 + 1/2*A"));
    let (_, b) = nested_oracle(3, 2);
    assert_eq!(b, 1);
    let iv = s.output("B'").unwrap();
    assert_eq!(iv.contains(&env(&[("A", 3), ("B", 2)]), &rat(b)), Some(false));
}

#[test]
fn audit_reports_the_enclosure_failure() {
    let s = summary(FIG1);
    assert!(s.fidelity_notes.iter().any(|n| n == "(A,B)=(3,2): B'=1 outside [3, 8]"), "{:?}", s.fidelity_notes);
    let report = s.audit.as_ref().unwrap();
    for r in &report.rows {
        let a: i64 = r.input[0].to_integer().try_into().unwrap();
        let b: i64 = r.input[1].to_integer().try_into().unwrap();
        let (oa, ob) = nested_oracle(a, b);
        assert_eq!(r.terminals, vec![vec![rat(oa), rat(ob)]]);
        let inside = s.output("B'").unwrap().contains(&env(&[("A", a), ("B", b)]), &rat(ob));
        assert_eq!(matches!(r.status, RowStatus::Violations(_)), inside == Some(false));
    }
}

#[test]
fn single_loop_intervals() {
    let s = summary(EX41);
    let l = &s.loops[0];
    let ivs = loop_intervals(l, &s.signs);
    assert_eq!(bounds(named(&ivs, "X'")), (poly("0"), poly("X")));
    assert_eq!(bounds(named(&ivs, "Y'")), (poly("Y - 1/2*X^2"), poly("Y + 1/2*X + X^2")));
}

#[test]
fn single_loop_audit_is_exact() {
    let s = summary(EX41);
    let a = s.audit.as_ref().unwrap();
    assert_eq!(a.rows.len(), 25);
    assert!(a.rows.iter().all(|r| r.status == RowStatus::Exact), "{a}");
}

#[test]
fn accumulator_intervals() {
    let s = summary(ACC);
    let ivs = loop_intervals(&s.loops[0], &s.signs);
    assert_eq!(bounds(named(&ivs, "Z'")), (poly("Z"), poly("Z + X*(X + Y + 1)")));
    assert_eq!(s.output("Z'").unwrap().as_exact(), Some(&poly("Z + X^2 + X*Y + X")));
    assert_eq!(s.output("W'").unwrap().as_exact(), Some(&poly("W")));
}

#[test]
fn loop_free_program() {
    let s = summary("p(X,Y) :- X>=0, q(X+1,2*Y).\nq(U,V) :- V<=U.");
    assert!(s.loops.is_empty());
    assert_eq!(s.output("q.1").unwrap().as_exact(), Some(&poly("X + 1")));
    assert_eq!(s.output("q.2").unwrap().as_exact(), Some(&poly("2*Y")));
    let a = s.audit.as_ref().unwrap();
    assert_eq!(a.count(|r| *r == RowStatus::Exact), 11, "{a}");
    assert_eq!(a.count(|r| matches!(r, RowStatus::Skipped(_))), 14, "{a}");
}

#[test]
fn diverging_loop_has_no_counter_bound() {
    let s = summary("p(X) :- X>0, p(X).\np(X) :- X<=0.");
    assert_eq!(s.loops[0].counters[0].upper, None);
    assert_eq!(s.output("X'").unwrap().as_exact(), Some(&poly("X")));
}

#[test]
fn negative_bound_splits_into_zero_iterations() {
    let src = "w(X,Y) :- X>Y, w(X-1,Y).\nw(X,Y) :- X<=Y.";
    let opts = Options { assume_nonneg: false, ..Options::default() };
    let s = summarize_program(&parse_program(src).unwrap(), &opts).unwrap();
    assert!(s.cases.iter().any(|c| c.top.branch.iter().any(|(_, b)| !b)));
    assert!(s.fidelity_notes.is_empty(), "{:?}", s.fidelity_notes);
}

#[test]
fn json_shape() {
    let s = summary(FIG1);
    let j = s.to_json();
    assert_eq!(j["entry"], "wh/2");
    assert_eq!(j["loops"].as_array().unwrap().len(), 2);
    let b = SymInterval::from_json(&j["outputs"]["B'"]).unwrap();
    assert_eq!(&b, s.output("B'").unwrap());
    assert!(!j["fidelity_notes"].as_array().unwrap().is_empty());
}

#[test]
fn stage_is_reported() {
    let p = parse_program("p(X) :- X>0, p(X-1).").unwrap();
    let e = summarize_program(&p, &Options::default()).unwrap_err();
    assert_eq!(e.stage, Stage::PathExpression);
    assert!(e.to_string().starts_with(&format!("{}:", e.stage)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn zero_iterations_are_identity(a in 1i64..3, b in -2i64..3, c in -2i64..3) {
        let src = format!("w(X,Y) :- X>0, w(X-{a},Y+{b}*X+{c}).\nw(X,Y) :- X<=0.");
        let s = summarize_program(&parse_program(&src).unwrap(), &Options { grid: None, ..Options::default() }).unwrap();
        for (v, p) in at_zero(&s.loops[0]) {
            prop_assert_eq!(p, Polynomial::var(v));
        }
    }

    #[test]
    fn closed_forms_match_iteration(a in 1i64..3, b in -2i64..3, c in -2i64..3, x in 0i64..7, y in 0i64..4) {
        let src = format!("w(X,Y) :- X>0, w(X-{a},Y+{b}*X+{c}).\nw(X,Y) :- X<=0.");
        let s = summarize_program(&parse_program(&src).unwrap(), &Options { grid: None, ..Options::default() }).unwrap();
        let l = &s.loops[0];
        let (mut xi, mut yi, mut k) = (x, y, 0);
        while xi > 0 {
            yi += b * xi + c;
            xi -= a;
            k += 1;
        }
        let e = env(&[("X", x), ("Y", y), (l.counter.as_str(), k)]);
        prop_assert_eq!(closed(l, "X").eval(&e), Some(rat(xi)));
        prop_assert_eq!(closed(l, "Y").eval(&e), Some(rat(yi)));
        let out = s.output("Y'").unwrap();
        prop_assert_eq!(out.contains(&env(&[("X", x), ("Y", y)]), &rat(yi)), Some(true));
    }
}
