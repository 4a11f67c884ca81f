//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use loopsum::chc::{parse_clauses, parse_program, simulate, Head, Program};
use loopsum::linarith::{entails, project, rat, ConstraintStore, Rational, Var};
use loopsum::path_clauses::{eval_top, PathProgram};
use loopsum::pathexpr::RegExpr;
use loopsum::poly::Polynomial;
use loopsum::recurrences::{app_var, EqSystem};
use loopsum::rec_solver::ClosedForm;
use loopsum::summarize::{summarize_program, Options, ProgramSummary};
use proptest::prelude::*;

/// The nested example's path program written out by hand.
pub const FIG3: &str = "
    path(A,B) :- wh2(A,B,A1,B1), wh5(A1,B1,A2,B2), A2 <= 0.
    wh2(A,B,A1,B1) :- A1 = A, B1 = B.
    wh2(A,B,A1,B2) :- wh2(A,B,A1,B1), A1 > 0, B1 > 0, B2 = B1 - 1.
    wh5(A,B,A1,B1) :- A1 = A, B1 = B.
    wh5(A,B,A2,B2) :- wh5(A,B,A1,B1), A1 > 0, B1 <= 0, wh2(A1 - 1, B1 + A1, A2, B2).
";

pub const LETTERS: [&str; 4] = ["a", "b", "c", "d"];

/// Raw trees of depth at most 4 over four letters, bypassing the
/// simplifying constructors.
pub fn expr() -> impl Strategy<Value = RegExpr> {
    let leaf = prop_oneof![
        8 => prop::sample::select(LETTERS.to_vec()).prop_map(RegExpr::letter),
        1 => Just(RegExpr::Epsilon),
    ];
    leaf.prop_recursive(4, 32, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| RegExpr::Concat(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| RegExpr::Alt(Box::new(a), Box::new(b))),
            inner.prop_map(|a| RegExpr::Star(Box::new(a))),
        ]
    })
}

pub fn depth(e: &RegExpr) -> usize {
    match e {
        RegExpr::Concat(a, b) | RegExpr::Alt(a, b) => 1 + depth(a).max(depth(b)),
        RegExpr::Star(a) => 1 + depth(a),
        _ => 0,
    }
}

/// Every input in `[0, n]^m`, first coordinate fastest.
pub fn grid(m: usize, n: i64) -> Vec<Vec<Rational>> {
    let side = (n + 1) as usize;
    (0..side.pow(m as u32)).map(|p| (0..m).map(|i| rat(((p / side.pow(i as u32)) % side) as i64)).collect()).collect()
}

/// For a single-loop program whose first clause is the loop: at every grid
/// point the closed forms at the observed iteration count give the terminal
/// values, and a loop that runs at all runs exactly to its ranking value.
pub fn ranking_exactness(name: &str) -> Result<(), String> {
    let p = load(name);
    let s = summary(name, None);
    let l = &s.loops[0];
    let ranking = l.counters[0].ranking.clone().ok_or_else(|| format!("{name}: no ranking"))?;
    for input in grid(p.entry.1, 4) {
        let env: BTreeMap<Var, Rational> = l.inputs.iter().cloned().zip(input.iter().cloned()).collect();
        let terminals = simulate(&p, &input, 10_000).map_err(|e| e.to_string())?;
        let [t] = terminals.as_slice() else { return Err(format!("{name}: {} terminals at {input:?}", terminals.len())) };
        let iterations = rat(t.trace.iter().filter(|c| *c == "c1").count() as i64);
        let mut e = env.clone();
        e.insert(l.counter.clone(), iterations.clone());
        for (i, (v, cf)) in l.closed_forms.iter().enumerate() {
            if cf.eval(&e).as_ref() != Some(&t.values[i]) {
                return Err(format!("{name}: {v}' at {input:?}"));
            }
        }
        let r = ranking.eval(&env).ok_or("ranking left variables open")?;
        if iterations > rat(0) && iterations != r.clone().max(rat(0)).floor() {
            return Err(format!("{name}: {iterations} iterations at {input:?}, ranking {r}"));
        }
    }
    Ok(())
}

pub fn program_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/programs").join(name)
}

pub fn load(name: &str) -> Program {
    parse_program(&std::fs::read_to_string(program_path(name)).unwrap()).unwrap()
}

pub fn summary(name: &str, grid: Option<u32>) -> ProgramSummary {
    summarize_program(&load(name), &Options { grid, ..Options::default() }).unwrap()
}

pub fn poly(s: &str) -> Polynomial {
    Polynomial::parse(s).unwrap()
}

/// Single-loop programs with polynomial updates, besides the worked one.
pub const SINGLE_LOOPS: [&str; 6] = ["ex41.chc", "squares.chc", "triangle.chc", "cubic.chc", "step2.chc", "mixed.chc"];

/// Every sample program that summarizes.
pub const ALL_PROGRAMS: [&str; 10] = [
    "fig1.chc",
    "ex41.chc",
    "accumulator.chc",
    "straight.chc",
    "squares.chc",
    "triangle.chc",
    "cubic.chc",
    "step2.chc",
    "mixed.chc",
    "diverge.chc",
];

/// End positions of all matches of `e` in `w` starting at `i`, by
/// backtracking over the tree.
fn ends(e: &RegExpr, w: &[&str], i: usize) -> BTreeSet<usize> {
    match e {
        RegExpr::Empty => BTreeSet::new(),
        RegExpr::Epsilon => BTreeSet::from([i]),
        RegExpr::Letter(c) => {
            if w.get(i) == Some(&c.as_str()) {
                BTreeSet::from([i + 1])
            } else {
                BTreeSet::new()
            }
        }
        RegExpr::Concat(a, b) => ends(a, w, i).into_iter().flat_map(|j| ends(b, w, j)).collect(),
        RegExpr::Alt(a, b) => ends(a, w, i).union(&ends(b, w, i)).copied().collect(),
        RegExpr::Star(a) => {
            let mut seen = BTreeSet::from([i]);
            let mut todo = vec![i];
            while let Some(j) = todo.pop() {
                for k in ends(a, w, j) {
                    if k > j && seen.insert(k) {
                        todo.push(k);
                    }
                }
            }
            seen
        }
    }
}

pub fn matches(e: &RegExpr, w: &[&str]) -> bool {
    ends(e, w, 0).contains(&w.len())
}

/// All words over `alphabet` of length at most `n`.
pub fn words<'a>(alphabet: &[&'a str], n: usize) -> Vec<Vec<&'a str>> {
    let mut all = vec![vec![]];
    let mut layer: Vec<Vec<&str>> = vec![vec![]];
    for _ in 0..n {
        layer = layer
            .iter()
            .flat_map(|w| alphabet.iter().map(move |c| w.iter().copied().chain([*c]).collect::<Vec<_>>()))
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}

/// The first word of length at most `n` on which the two expressions
/// disagree.
pub fn language_difference<'a>(a: &RegExpr, b: &RegExpr, alphabet: &[&'a str], n: usize) -> Option<Vec<&'a str>> {
    words(alphabet, n).into_iter().find(|w| matches(a, w) != matches(b, w))
}

/// Position automaton of an expression: one state per letter occurrence.
pub struct Positions {
    labels: Vec<String>,
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
    follow: Vec<BTreeSet<usize>>,
    nullable: bool,
}

struct Parts {
    first: BTreeSet<usize>,
    last: BTreeSet<usize>,
    nullable: bool,
}

impl Positions {
    pub fn new(e: &RegExpr) -> Positions {
        let mut p = Positions { labels: vec![], first: BTreeSet::new(), last: BTreeSet::new(), follow: vec![], nullable: false };
        let parts = p.build(e);
        p.first = parts.first;
        p.last = parts.last;
        p.nullable = parts.nullable;
        p
    }

    fn build(&mut self, e: &RegExpr) -> Parts {
        match e {
            RegExpr::Empty => Parts { first: BTreeSet::new(), last: BTreeSet::new(), nullable: false },
            RegExpr::Epsilon => Parts { first: BTreeSet::new(), last: BTreeSet::new(), nullable: true },
            RegExpr::Letter(c) => {
                self.labels.push(c.clone());
                self.follow.push(BTreeSet::new());
                let i = self.labels.len() - 1;
                Parts { first: BTreeSet::from([i]), last: BTreeSet::from([i]), nullable: false }
            }
            RegExpr::Alt(a, b) => {
                let (a, b) = (self.build(a), self.build(b));
                Parts { first: &a.first | &b.first, last: &a.last | &b.last, nullable: a.nullable || b.nullable }
            }
            RegExpr::Concat(a, b) => {
                let (a, b) = (self.build(a), self.build(b));
                for i in &a.last {
                    self.follow[*i].extend(b.first.iter().copied());
                }
                Parts {
                    first: if a.nullable { &a.first | &b.first } else { a.first },
                    last: if b.nullable { &a.last | &b.last } else { b.last },
                    nullable: a.nullable && b.nullable,
                }
            }
            RegExpr::Star(a) => {
                let a = self.build(a);
                for i in &a.last {
                    self.follow[*i].extend(a.first.iter().copied());
                }
                Parts { first: a.first, last: a.last, nullable: true }
            }
        }
    }

    /// `None` is the start state.
    fn step(&self, from: Option<&BTreeSet<usize>>, c: &str) -> BTreeSet<usize> {
        let next: BTreeSet<usize> = match from {
            None => self.first.clone(),
            Some(s) => s.iter().flat_map(|i| self.follow[*i].iter().copied()).collect(),
        };
        next.into_iter().filter(|i| self.labels[*i] == c).collect()
    }

    fn accepts(&self, at: Option<&BTreeSet<usize>>) -> bool {
        match at {
            None => self.nullable,
            Some(s) => s.iter().any(|i| self.last.contains(i)),
        }
    }
}

/// The first word of length at most `n` accepted by exactly one of the
/// two expressions, by walking the word tree with both automata.
pub fn first_disagreement(a: &RegExpr, b: &RegExpr, alphabet: &[&str], n: usize) -> Option<Vec<String>> {
    let (pa, pb) = (Positions::new(a), Positions::new(b));
    fn walk(
        pa: &Positions,
        pb: &Positions,
        sa: Option<&BTreeSet<usize>>,
        sb: Option<&BTreeSet<usize>>,
        word: &mut Vec<String>,
        alphabet: &[&str],
        n: usize,
    ) -> Option<Vec<String>> {
        if pa.accepts(sa) != pb.accepts(sb) {
            return Some(word.clone());
        }
        if word.len() == n {
            return None;
        }
        for c in alphabet {
            let (na, nb) = (pa.step(sa, c), pb.step(sb, c));
            if na.is_empty() && nb.is_empty() {
                continue;
            }
            word.push(c.to_string());
            let r = walk(pa, pb, Some(&na), Some(&nb), word, alphabet, n);
            word.pop();
            if r.is_some() {
                return r;
            }
        }
        None
    }
    walk(&pa, &pb, None, None, &mut vec![], alphabet, n)
}

/// A clause as its predicate sequence (head first) and its constraint
/// restated over positional argument names.
struct Shape {
    preds: Vec<String>,
    store: ConstraintStore,
    positions: BTreeSet<Var>,
}

fn shape(atoms: Vec<(String, Vec<Var>)>, constraint: &ConstraintStore) -> Shape {
    let mut store = constraint.clone();
    let mut positions = BTreeSet::new();
    let mut preds = Vec::new();
    for (i, (pred, args)) in atoms.iter().enumerate() {
        preds.push(pred.clone());
        for (j, v) in args.iter().enumerate() {
            let pos = format!("pos_{i}_{j}");
            let eq = loopsum::linarith::LinConstraint::eq(
                &loopsum::linarith::LinTerm::var(pos.clone()),
                &loopsum::linarith::LinTerm::var(v.clone()),
            );
            store.push(eq);
            positions.insert(pos);
        }
    }
    let store = project(&store, &positions).unwrap();
    Shape { preds, store, positions }
}

fn equivalent(a: &ConstraintStore, b: &ConstraintStore) -> bool {
    a.constraints().iter().all(|c| entails(b, c)) && b.constraints().iter().all(|c| entails(a, c))
}

/// Whether the path program is isomorphic to the clauses in `expected`:
/// some bijection of predicate names maps every clause to exactly one
/// expected clause with the same atom sequence and an equivalent
/// constraint over argument positions.
pub fn isomorphic(pp: &PathProgram, expected: &str) -> Result<(), String> {
    let exp = parse_clauses(expected).map_err(|e| e.to_string())?;
    let ours: Vec<Shape> = pp
        .clauses
        .iter()
        .map(|c| {
            let atoms = std::iter::once(&c.head).chain(&c.body).map(|a| (a.pred.clone(), a.args.clone())).collect();
            shape(atoms, &c.constraint)
        })
        .collect();
    let theirs: Vec<Shape> = exp
        .iter()
        .map(|c| {
            let Head::Atom(h) = &c.head else { panic!("expected clauses have atom heads") };
            let atoms = std::iter::once(h).chain(&c.body).map(|a| (a.predicate.clone(), a.args.clone())).collect();
            shape(atoms, &c.constraint)
        })
        .collect();
    if ours.len() != theirs.len() {
        return Err(format!("{} clauses, expected {}", ours.len(), theirs.len()));
    }
    let names = |ss: &[Shape]| ss.iter().flat_map(|s| s.preds.clone()).collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>();
    let (ln, rn) = (names(&ours), names(&theirs));
    if ln.len() != rn.len() {
        return Err(format!("predicates {ln:?} against {rn:?}"));
    }
    for perm in permutations(rn.len()) {
        let map: BTreeMap<&String, &String> = ln.iter().zip(perm.iter().map(|i| &rn[*i])).collect();
        let mut used = vec![false; theirs.len()];
        let all = ours.iter().all(|o| {
            let preds: Vec<&String> = o.preds.iter().map(|p| map[p]).collect();
            let hit = theirs.iter().enumerate().find(|(i, t)| {
                !used[*i] && t.preds.iter().collect::<Vec<_>>() == preds && t.positions == o.positions && equivalent(&t.store, &o.store)
            });
            match hit {
                Some((i, _)) => {
                    used[i] = true;
                    true
                }
                None => false,
            }
        });
        if all {
            return Ok(());
        }
    }
    Err("no predicate renaming makes the clause sets agree".into())
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Terminal valuations of direct derivation and of path-clause derivation
/// from `input`, each sorted.
pub fn terminal_sets(p: &Program, pp: &PathProgram, input: &[Rational], steps: usize) -> Result<(Vec<Vec<Rational>>, Vec<Vec<Rational>>), String> {
    let mut direct: Vec<Vec<Rational>> = simulate(p, input, steps).map_err(|e| e.to_string())?.into_iter().map(|t| t.values).collect();
    let mut path: Vec<Vec<Rational>> = eval_top(pp, input, p.integer, steps)
        .map_err(|e| e.to_string())?
        .into_iter()
        .filter_map(|o| o.exit.map(|e| e.1))
        .collect();
    direct.sort();
    path.sort();
    Ok((direct, path))
}

/// Checks a set of closed forms against its recurrence system: the base
/// value at counter zero, the step equation as a polynomial identity with
/// previous values replaced by the closed forms one iteration earlier,
/// and numeric iteration for counters `0..=iterations` at `params`.
pub fn check_closed_forms(sys: &EqSystem, forms: &[ClosedForm], params: &BTreeMap<Var, Rational>, iterations: i64) -> Result<(), String> {
    let k = sys.counter.clone();
    let poly_of = |f: &str| -> Result<Polynomial, String> {
        let cf = forms.iter().find(|c| c.func == f).ok_or_else(|| format!("no closed form for {f}"))?;
        cf.as_polynomial().cloned().ok_or_else(|| format!("{f} is not polynomial"))
    };
    let earlier = &Polynomial::var(k.clone()) - &Polynomial::int(1);
    for f in &sys.functions {
        let cf = poly_of(f)?;
        let base = sys.base(f).ok_or_else(|| format!("{f} has no base equation"))?;
        if cf.substitute(&k, &Polynomial::zero()) != base.rhs {
            return Err(format!("{f}: base mismatch"));
        }
        if let Some(step) = sys.step(f) {
            let mut rhs = step.rhs.clone();
            for g in &sys.functions {
                rhs = rhs.substitute(&app_var(g), &poly_of(g)?.substitute(&k, &earlier));
            }
            if rhs != cf {
                return Err(format!("{f}: step mismatch, {rhs} against {cf}"));
            }
        }
    }
    let mut prev: BTreeMap<Var, Rational> = BTreeMap::new();
    for i in 0..=iterations {
        let mut env = params.clone();
        env.insert(k.clone(), rat(i));
        let mut cur = BTreeMap::new();
        for f in &sys.functions {
            let v = if i == 0 {
                sys.base(f).unwrap().rhs.eval(&env)
            } else {
                let mut e = env.clone();
                for g in &sys.functions {
                    e.insert(app_var(g), prev[g].clone());
                }
                match sys.step(f) {
                    Some(s) => s.rhs.eval(&e),
                    None => Some(prev[f].clone()),
                }
            }
            .ok_or_else(|| format!("{f}: iteration left variables open"))?;
            let want = poly_of(f)?.eval(&env).ok_or_else(|| format!("{f}: closed form left variables open"))?;
            if v != want {
                return Err(format!("{f} at {k}={i}: iteration gives {v}, closed form {want}"));
            }
            cur.insert(f.clone(), v);
        }
        prev = cur;
    }
    Ok(())
}

/// Small distinct values for every parameter of a system.
pub fn sample_params(sys: &EqSystem) -> BTreeMap<Var, Rational> {
    sys.params.iter().enumerate().map(|(i, v)| (v.clone(), rat(2 * i as i64 + 3))).collect()
}
