//! Shared fixtures for unit tests.

use crate::chc::{build_cfg, parse_program, Program, TRUE_NODE};
use crate::path_clauses::{add_counters, generate, unfold_simplify, CountedProgram};
use crate::pathexpr::{eliminate_multipath, path_expression, StarOrder};

pub const FIG1: &str = "wh(A,B) :- A>0, B>0, wh(A,B-1).\nwh(A,B) :- A>0, B<=0, wh(A-1,B+A).\nwh(A,B) :- A<=0.";
pub const EX41: &str = "wh(X,Y) :- X>0, Y>0, wh(X-1,Y+X).\nwh(X,Y) :- X<=0.\nwh(X,Y) :- Y<=0.";

pub fn counted(text: &str) -> (Program, CountedProgram) {
    let p = parse_program(text).unwrap();
    let start = p.entry.0.clone();
    let e = eliminate_multipath(&path_expression(&build_cfg(&p), &start, TRUE_NODE), StarOrder::File);
    let cp = add_counters(&unfold_simplify(&generate(&p, &e, &start, TRUE_NODE))).unwrap();
    (p, cp)
}
