mod common;

use common::*;
use loopsum::summarize::{front, Options, RowStatus};

#[test]
fn nested_path_program_matches_hand_written_clauses() {
    let f = front(&load("fig1.chc"), &Options::default()).unwrap();
    isomorphic(&f.path_program, FIG3).unwrap();
}

#[test]
fn isomorphism_check_rejects_a_changed_guard() {
    let f = front(&load("fig1.chc"), &Options::default()).unwrap();
    let bad = FIG3.replace("B1 > 0, B2", "B1 >= 0, B2");
    assert!(isomorphic(&f.path_program, &bad).is_err());
}

#[test]
fn path_clauses_derive_the_same_terminals() {
    for name in ["fig1.chc", "ex41.chc", "triangle.chc", "accumulator.chc"] {
        let p = load(name);
        let f = front(&p, &Options::default()).unwrap();
        for input in grid(p.entry.1, 4) {
            let (direct, path) = terminal_sets(&p, &f.path_program, &input, 200).unwrap();
            assert_eq!(direct, path, "{name} at {input:?}");
            let (_, counted) = terminal_sets(&p, &f.counted.program, &input, 200).unwrap();
            assert_eq!(direct, counted, "{name} at {input:?} with counters");
        }
    }
}

#[test]
fn closed_forms_verify_everywhere() {
    for name in ALL_PROGRAMS {
        let s = summary(name, None);
        for l in &s.loops {
            check_closed_forms(&l.system, &l.solutions, &sample_params(&l.system), 25).unwrap_or_else(|e| panic!("{name} {}: {e}", l.pred));
        }
    }
}

#[test]
fn single_loops_are_enclosed() {
    for name in SINGLE_LOOPS {
        let s = summary(name, Some(4));
        let a = s.audit.as_ref().unwrap();
        assert!(a.violations().is_empty(), "{name}: {:?}", a.violations());
        assert_eq!(a.count(|r| matches!(r, RowStatus::Skipped(_))), 0, "{name}");
    }
}

#[test]
fn closed_forms_hit_terminal_values_at_ranking() {
    for name in SINGLE_LOOPS {
        ranking_exactness(name).unwrap();
    }
}
