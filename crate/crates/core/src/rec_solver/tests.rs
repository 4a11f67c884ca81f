use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::linarith::{rat, ratio, ConstraintStore, LinConstraint, LinTerm};
use crate::recurrences::{extract, LoopStep, RecEq};
use crate::testutil::{counted, EX41};

fn p(s: &str) -> Polynomial {
    Polynomial::parse(s).unwrap()
}

fn env(xs: &[(&str, i64)]) -> BTreeMap<Var, Rational> {
    xs.iter().map(|(v, x)| (v.to_string(), rat(*x))).collect()
}

#[test]
fn small_power_sums() {
    assert_eq!(sum_poly(&Polynomial::one(), "k", 8).unwrap(), p("k"));
    assert_eq!(sum_poly(&p("k"), "k", 8).unwrap(), p("1/2*k^2 + 1/2*k"));
    assert_eq!(sum_poly(&p("k^2"), "k", 8).unwrap(), p("1/3*k^3 + 1/2*k^2 + 1/6*k"));
    assert_eq!(sum_poly(&p("x*k + y"), "k", 8).unwrap(), p("1/2*x*k^2 + 1/2*x*k + y*k"));
}

#[test]
fn degree_cap() {
    assert_eq!(sum_poly(&p("k^8"), "k", 8), Err(SolveError::DegreeCap { degree: 9, cap: 8 }));
    assert!(sum_poly(&p("k^7"), "k", 8).is_ok());
}

#[test]
fn example_loop_closed_forms() {
    let (_, cp) = counted(EX41);
    let s = extract(&LoopStep::from_loop(&cp.loops[0], "wh").unwrap(), false).unwrap();
    let cfs = solve_system(&s, DEFAULT_MAX_DEGREE).unwrap();
    assert_eq!(cfs.len(), 2);
    assert_eq!(cfs[0].func, "wh^X");
    assert_eq!(cfs[0].poly, p("X - K1"));
    assert_eq!(cfs[1].func, "wh^Y");
    assert_eq!(cfs[1].poly, p("Y - 1/2*K1^2 + K1*X + 1/2*K1"));
    // oracle: iterating the equations
    for x in -3..=4 {
        for y in -3..=4 {
            for k in 0..=25u32 {
                let mut e = env(&[("X", x), ("Y", y)]);
                let it = s.iterate(&e, k).unwrap();
                e.insert("K1".into(), rat(k.into()));
                for cf in &cfs {
                    assert_eq!(cf.eval(&e).unwrap(), it[&cf.func]);
                }
            }
        }
    }
}

fn eq(id: &str, func: &str, kind: EqKind, rhs: Polynomial) -> RecEq {
    let k = LinTerm::var("k");
    let condition = match kind {
        EqKind::Step => ConstraintStore::from_constraints([LinConstraint::gt(&k, &LinTerm::int(0))]),
        EqKind::Base => ConstraintStore::from_constraints([LinConstraint::eq(&k, &LinTerm::int(0))]),
    };
    RecEq { id: id.into(), func: func.into(), kind, rhs, condition }
}

/// Three functions; `f^z` adds `x + y + 1` each step.
fn xyz() -> EqSystem {
    let app = |f: &str| Polynomial::var(app_var(f));
    EqSystem {
        counter: "k".into(),
        params: vec!["x".into(), "y".into(), "z".into()],
        functions: vec!["f^x".into(), "f^y".into(), "f^z".into()],
        tracks: vec!["x".into(), "y".into(), "z".into()],
        equations: vec![
            eq("e1", "f^x", EqKind::Step, app("f^x")),
            eq("e2", "f^x", EqKind::Base, p("x")),
            eq("e3", "f^y", EqKind::Step, &app("f^y") + &Polynomial::one()),
            eq("e4", "f^y", EqKind::Base, p("y")),
            eq("e5", "f^z", EqKind::Step, &(&app("f^z") + &app("f^x")) - &(&app("f^y") - &p("y - k"))),
            eq("e6", "f^z", EqKind::Base, p("z")),
        ],
        guards: ConstraintStore::new(),
        constants: vec![],
    }
}

#[test]
fn dependent_functions() {
    let cfs = solve_system(&xyz(), 8).unwrap();
    assert_eq!(cfs[1].poly, p("y + k"));
    let s = xyz();
    for k in 0..=10u32 {
        let e = env(&[("x", 2), ("y", -1), ("z", 5)]);
        let it = s.iterate(&e, k).unwrap();
        let mut e2 = e.clone();
        e2.insert("k".into(), rat(k.into()));
        assert_eq!(cfs[2].eval(&e2).unwrap(), it["f^z"]);
    }
}

#[test]
fn accumulating_sum() {
    let mut s = xyz();
    s.equations[4].rhs = &Polynomial::var(app_var("f^z")) + &p("x + y + 1");
    let cfs = solve_system(&s, 8).unwrap();
    assert_eq!(cfs[2].poly, p("z + k*x + k*y + k"));
}

#[test]
fn geometric_recurrence() {
    let cf = solve_first_order("f", "k", &rat(2), &Polynomial::one(), &p("b"), 8).unwrap();
    assert_eq!(cf.poly, p("-1"));
    assert_eq!(cf.exp, Some((rat(2), p("b + 1"))));
    assert!(verify(&cf, &rat(2), &Polynomial::one(), &p("b")));
    assert!(substitute_solution(&Polynomial::var(app_var("f")), &cf).is_err());
    assert_eq!(substitute_solution(&p("x"), &cf).unwrap(), p("x"));
}

#[test]
fn substitution_uses_previous_counter() {
    let cf = ClosedForm { func: "g".into(), counter: "k".into(), poly: p("x + 2*k"), exp: None };
    let rhs = &Polynomial::var(app_var("g")) + &p("1");
    assert_eq!(substitute_solution(&rhs, &cf).unwrap(), p("x + 2*k - 1"));
}

#[test]
fn varying_parameter_is_rejected() {
    let mut s = xyz();
    s.equations[0].condition.push(LinConstraint::le(&LinTerm::var("x"), &LinTerm::int(3)));
    assert!(matches!(solve_system(&s, 8), Err(SolveError::NotConstant(_))));
}

#[test]
fn nonlinear_previous_value_is_rejected() {
    let mut s = xyz();
    s.equations[0].rhs = Polynomial::var(app_var("f^x")).pow(2);
    assert!(matches!(solve_system(&s, 8), Err(SolveError::UnsupportedRecurrence { .. })));
}

fn iterate(a: &Rational, p: &Polynomial, b: &Rational, n: u32) -> Rational {
    let mut v = b.clone();
    for i in 1..=n {
        v = a * v + p.eval(&env(&[("k", i.into())])).unwrap();
    }
    v
}

proptest! {
    #[test]
    fn power_sum_identity(d in 0u32..7, n in 0i64..30) {
        let s = sum_poly(&Polynomial::var("k").pow(d), "k", 8).unwrap();
        let want: Rational = (1..=n).map(|i| num_traits::pow(rat(i), d as usize)).sum();
        prop_assert_eq!(s.eval(&env(&[("k", n)])).unwrap(), want);
    }

    #[test]
    fn first_order_solutions_match_iteration(
        an in -3i64..4, ad in 1i64..3,
        cs in proptest::collection::vec(-5i64..6, 1..4),
        b in -5i64..6,
    ) {
        let a = ratio(an, ad);
        let poly = cs.iter().enumerate().fold(Polynomial::zero(), |s, (j, c)| &s + &p("k").pow(j as u32).scale(&rat(*c)));
        let cf = solve_first_order("f", "k", &a, &poly, &Polynomial::constant(rat(b)), 8).unwrap();
        prop_assert!(verify(&cf, &a, &poly, &Polynomial::constant(rat(b))));
        for n in 0..12u32 {
            prop_assert_eq!(cf.eval(&env(&[("k", n.into())])).unwrap(), iterate(&a, &poly, &rat(b), n));
        }
    }
}
