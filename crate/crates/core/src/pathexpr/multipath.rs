//! Rewriting starred alternations into nested single-path loops.

use super::RegExpr;
use crate::chc::cmp_clause_ids;

/// Operand order for the rewrite `(e1 + e2)* = e1* (e2 e1*)*`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StarOrder {
    /// Ascending clause identifier of the first letters.
    #[default]
    File,
    /// Descending, which yields the mirrored nesting.
    Reverse,
}

/// Alternatives of `e` once concatenation is distributed over alternation.
/// Stars are opaque.
fn distribute(e: &RegExpr) -> Vec<RegExpr> {
    match e {
        RegExpr::Empty => vec![],
        RegExpr::Alt(a, b) => {
            let mut v = distribute(a);
            for x in distribute(b) {
                if !v.contains(&x) {
                    v.push(x);
                }
            }
            v
        }
        RegExpr::Concat(a, b) => {
            let (xs, ys) = (distribute(a), distribute(b));
            let mut v = Vec::new();
            for x in &xs {
                for y in &ys {
                    let c = RegExpr::concat(x.clone(), y.clone());
                    if !v.contains(&c) {
                        v.push(c);
                    }
                }
            }
            v
        }
        e => vec![e.clone()],
    }
}

fn sort_key(e: &RegExpr) -> Option<String> {
    e.first().into_iter().min_by(|a, b| cmp_clause_ids(a, b))
}

/// `(a1 + … + am)*` for alternation-free `ai`, by repeated application of
/// the binary rule with `e1 = a1 + … + a(m-1)` and `e2 = am`.
fn nest(alts: &[RegExpr]) -> RegExpr {
    match alts {
        [] => RegExpr::Epsilon,
        [a] => RegExpr::star(a.clone()),
        _ => {
            let (last, init) = alts.split_last().unwrap();
            let inner = nest(init);
            RegExpr::concat(inner.clone(), RegExpr::star(RegExpr::concat(last.clone(), inner)))
        }
    }
}

/// Rewrites `e` so that no star encloses an alternation, preserving the
/// language.
pub fn eliminate_multipath(e: &RegExpr, order: StarOrder) -> RegExpr {
    match e {
        RegExpr::Empty | RegExpr::Epsilon | RegExpr::Letter(_) => e.clone(),
        RegExpr::Concat(a, b) => RegExpr::concat(eliminate_multipath(a, order), eliminate_multipath(b, order)),
        RegExpr::Alt(a, b) => RegExpr::alt(eliminate_multipath(a, order), eliminate_multipath(b, order)),
        RegExpr::Star(body) => {
            let body = eliminate_multipath(body, order);
            // ε inside a star contributes nothing.
            let mut alts: Vec<RegExpr> = distribute(&body).into_iter().filter(|a| *a != RegExpr::Epsilon).collect();
            alts.sort_by(|a, b| {
                let (ka, kb) = (sort_key(a), sort_key(b));
                let by_id = match (&ka, &kb) {
                    (Some(x), Some(y)) => cmp_clause_ids(x, y),
                    _ => ka.cmp(&kb),
                };
                by_id.then_with(|| a.to_string().cmp(&b.to_string()))
            });
            if order == StarOrder::Reverse {
                alts.reverse();
            }
            nest(&alts)
        }
    }
}

/// True when some star has an alternation in its body outside nested stars.
pub fn has_alt_under_star(e: &RegExpr) -> bool {
    fn alt_outside_stars(e: &RegExpr) -> bool {
        match e {
            RegExpr::Alt(..) => true,
            RegExpr::Concat(a, b) => alt_outside_stars(a) || alt_outside_stars(b),
            _ => false,
        }
    }
    match e {
        RegExpr::Empty | RegExpr::Epsilon | RegExpr::Letter(_) => false,
        RegExpr::Concat(a, b) | RegExpr::Alt(a, b) => has_alt_under_star(a) || has_alt_under_star(b),
        RegExpr::Star(body) => alt_outside_stars(body) || has_alt_under_star(body),
    }
}
