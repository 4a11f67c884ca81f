//! Loop summarization for linear constrained Horn clauses.

pub mod linarith;
pub mod poly;
pub mod chc;
pub mod graph;
pub mod pathexpr;
pub mod path_clauses;
pub mod recurrences;
pub mod rd_sc;
pub mod rec_solver;
pub mod relation;
pub mod summarize;

#[cfg(test)]
pub(crate) mod testutil;
