//! Lexer and recursive-descent parser for the clause syntax.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::Zero;

use super::{Atom, Clause, Head, Program};
use crate::linarith::{CmpOp, ConstraintStore, LinConstraint, LinTerm, Rational, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontError {
    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("clause {0} is not linear: it has more than one body atom")]
    NonLinearClause(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    LParen,
    RParen,
    Comma,
    Dot,
    Neck,
    Colon,
    Hash,
    Slash,
    Plus,
    Minus,
    Star,
    Rel(CmpOp),
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, FrontError> {
    Err(FrontError::Parse { line, col, msg: msg.into() })
}

fn lex(text: &str) -> Result<Vec<Spanned>, FrontError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut adv = 1;
        let tok = match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            c if c.is_whitespace() || c == '\u{feff}' => None,
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '#' => Some(Tok::Hash),
            '/' => Some(Tok::Slash),
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '=' => Some(Tok::Rel(CmpOp::Eq)),
            ':' if chars.get(i + 1) == Some(&'-') => {
                adv = 2;
                Some(Tok::Neck)
            }
            ':' => Some(Tok::Colon),
            '<' | '>' => {
                let eq = chars.get(i + 1) == Some(&'=');
                if eq {
                    adv = 2;
                }
                Some(Tok::Rel(match (c, eq) {
                    ('<', false) => CmpOp::Lt,
                    ('<', true) => CmpOp::Le,
                    ('>', false) => CmpOp::Gt,
                    _ => CmpOp::Ge,
                }))
            }
            c if c.is_ascii_digit() => {
                let s: String = chars[i..].iter().take_while(|c| c.is_ascii_digit()).collect();
                adv = s.len();
                Some(Tok::Int(s.parse().unwrap()))
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let s: String =
                    chars[i..].iter().take_while(|c| c.is_ascii_alphanumeric() || **c == '_').collect();
                adv = s.len();
                Some(Tok::Ident(s))
            }
            other => return err(l0, c0, format!("unexpected character {other:?}")),
        };
        if let Some(tok) = tok {
            out.push(Spanned { tok, line: l0, col: c0 });
        }
        i += adv;
        col += adv;
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

fn is_var(s: &str) -> bool {
    s.starts_with(|c: char| c.is_ascii_uppercase() || c == '_')
}

/// A parsed argument or term before normalization.
type Expr = LinTerm;

struct RawAtom {
    predicate: String,
    args: Vec<Expr>,
    line: usize,
    col: usize,
}

enum RawHead {
    Atom(RawAtom),
    False,
}

struct RawClause {
    label: Option<String>,
    head: RawHead,
    constraints: Vec<LinConstraint>,
    atoms: Vec<RawAtom>,
    falsum: bool,
    line: usize,
    col: usize,
}

/// Nesting limit for parentheses and unary minus.
const MAX_DEPTH: usize = 200;

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    depth: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), FrontError> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            let (l, c) = self.here();
            err(l, c, format!("expected {what}, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, FrontError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => {
                let (l, c) = self.here();
                err(l, c, format!("expected {what}, found {}", describe(&t)))
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, FrontError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    acc = &acc + &self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, FrontError> {
        let mut acc = self.factor()?;
        while *self.peek() == Tok::Star {
            let (l, c) = self.here();
            self.bump();
            let rhs = self.factor()?;
            acc = if acc.is_constant() {
                rhs.scale(acc.constant_part())
            } else if rhs.is_constant() {
                acc.scale(rhs.constant_part())
            } else {
                return err(l, c, "product of two non-constant terms");
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, FrontError> {
        let (l, c) = self.here();
        if self.depth >= MAX_DEPTH {
            return err(l, c, "expression nested too deeply");
        }
        self.depth += 1;
        let r = self.factor_inner(l, c);
        self.depth -= 1;
        r
    }

    fn factor_inner(&mut self, l: usize, c: usize) -> Result<Expr, FrontError> {
        match self.bump() {
            Tok::Int(n) => Ok(LinTerm::constant(Rational::from_integer(n))),
            Tok::Minus => Ok(-&self.factor()?),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(s) if is_var(&s) => Ok(LinTerm::var(s)),
            Tok::Ident(s) => err(l, c, format!("expected a variable or integer, found identifier {s:?}")),
            t => err(l, c, format!("expected an expression, found {}", describe(&t))),
        }
    }

    fn atom_rest(&mut self, predicate: String, line: usize, col: usize) -> Result<RawAtom, FrontError> {
        self.expect(Tok::LParen, "'('")?;
        let mut args = vec![self.expr()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "')'")?;
        Ok(RawAtom { predicate, args, line, col })
    }

    fn clause(&mut self) -> Result<RawClause, FrontError> {
        let (line, col) = self.here();
        let mut label = None;
        if *self.peek() == Tok::Hash {
            self.bump();
            label = Some(self.ident("clause label")?);
            self.expect(Tok::Colon, "':'")?;
        }
        let (hl, hc) = self.here();
        let name = self.ident("clause head")?;
        let head = if name == "false" && *self.peek() != Tok::LParen {
            RawHead::False
        } else if is_var(&name) {
            return err(hl, hc, format!("clause head {name:?} must be a predicate"));
        } else {
            RawHead::Atom(self.atom_rest(name, hl, hc)?)
        };
        let mut rc = RawClause { label, head, constraints: vec![], atoms: vec![], falsum: false, line, col };
        if *self.peek() == Tok::Neck {
            self.bump();
            loop {
                self.item(&mut rc)?;
                if *self.peek() != Tok::Comma {
                    break;
                }
                self.bump();
            }
        }
        self.expect(Tok::Dot, "'.' at end of clause")?;
        Ok(rc)
    }

    fn item(&mut self, rc: &mut RawClause) -> Result<(), FrontError> {
        let (l, c) = self.here();
        if let Tok::Ident(s) = self.peek().clone() {
            if !is_var(&s) {
                let followed_by_paren = *self.peek_at(1) == Tok::LParen;
                match (s.as_str(), followed_by_paren) {
                    ("true", false) => {
                        self.bump();
                        return Ok(());
                    }
                    ("false", false) => {
                        self.bump();
                        rc.falsum = true;
                        return Ok(());
                    }
                    (_, true) => {
                        self.bump();
                        let a = self.atom_rest(s, l, c)?;
                        rc.atoms.push(a);
                        return Ok(());
                    }
                    _ => return err(l, c, format!("unexpected identifier {s:?}")),
                }
            }
        }
        let lhs = self.expr()?;
        let (rl, rcol) = self.here();
        let op = match self.bump() {
            Tok::Rel(op) => op,
            t => return err(rl, rcol, format!("expected a comparison, found {}", describe(&t))),
        };
        let rhs = self.expr()?;
        rc.constraints.push(LinConstraint::cmp(&lhs, op, &rhs));
        Ok(())
    }

    fn directive(&mut self) -> Result<(String, usize, usize, usize), FrontError> {
        let (l, c) = self.here();
        self.bump();
        self.expect(Tok::LParen, "'('")?;
        let name = self.ident("predicate name")?;
        self.expect(Tok::Slash, "'/'")?;
        let (nl, nc) = self.here();
        let arity = match self.bump() {
            Tok::Int(n) => usize::try_from(n).or_else(|_| err(nl, nc, "arity too large"))?,
            t => return err(nl, nc, format!("expected arity, found {}", describe(&t))),
        };
        self.expect(Tok::RParen, "')'")?;
        self.expect(Tok::Dot, "'.'")?;
        Ok((name, arity, l, c))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier {s:?}"),
        Tok::Int(n) => format!("integer {n}"),
        Tok::Eof => "end of input".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::Comma => "','".into(),
        Tok::Dot => "'.'".into(),
        Tok::Neck => "':-'".into(),
        Tok::Colon => "':'".into(),
        Tok::Hash => "'#'".into(),
        Tok::Slash => "'/'".into(),
        Tok::Plus => "'+'".into(),
        Tok::Minus => "'-'".into(),
        Tok::Star => "'*'".into(),
        Tok::Rel(_) => "comparison".into(),
    }
}

/// Generates fresh variable names that avoid a given set.
struct Fresh<'a> {
    used: &'a mut BTreeSet<Var>,
}

impl Fresh<'_> {
    fn named_after(&mut self, e: &Expr) -> Var {
        let stem = match e.vars().collect::<Vec<_>>().as_slice() {
            [v] => v.trim_end_matches(|c: char| c.is_ascii_digit()).to_string(),
            _ => "V".to_string(),
        };
        let stem = if stem.is_empty() || stem == "_" { "V".to_string() } else { stem };
        let mut i = 1;
        loop {
            let cand = format!("{stem}{i}");
            if self.used.insert(cand.clone()) {
                return cand;
            }
            i += 1;
        }
    }
}

/// Turns argument expressions into distinct variables, recording defining
/// equalities for everything that is not a fresh plain variable.
fn normalize_args(args: &[Expr], fresh: &mut Fresh, eqs: &mut Vec<LinConstraint>) -> Vec<Var> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for e in args {
        let plain = (e.coeffs().len() == 1
            && e.constant_part().is_zero()
            && e.coeffs().values().next().is_some_and(|c| *c == Rational::from_integer(1.into())))
        .then(|| e.vars().next().unwrap().clone());
        match plain {
            Some(v) if seen.insert(v.clone()) => out.push(v),
            _ => {
                let v = fresh.named_after(e);
                eqs.push(LinConstraint::eq(&LinTerm::var(v.clone()), e));
                seen.insert(v.clone());
                out.push(v);
            }
        }
    }
    out
}

/// A clause with any number of body atoms, as accepted by the grammar.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralClause {
    pub id: String,
    pub head: Head,
    pub constraint: ConstraintStore,
    pub body: Vec<Atom>,
}

type EntryDirective = Option<(String, usize, usize, usize)>;

fn parse_general(text: &str) -> Result<(Vec<GeneralClause>, EntryDirective), FrontError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, depth: 0 };
    let mut raws = Vec::new();
    let mut entry: EntryDirective = None;
    while *p.peek() != Tok::Eof {
        let is_directive =
            matches!(p.peek(), Tok::Ident(s) if s == "entry") && *p.peek_at(1) == Tok::LParen && {
                // `entry(x/1).` versus a clause whose head predicate is `entry`.
                matches!(p.peek_at(2), Tok::Ident(_)) && *p.peek_at(3) == Tok::Slash
            };
        if is_directive {
            let d = p.directive()?;
            if entry.is_some() {
                return err(d.2, d.3, "duplicate entry directive");
            }
            entry = Some(d);
        } else {
            raws.push(p.clause()?);
        }
    }

    let mut clauses = Vec::new();
    let mut ids = BTreeSet::new();
    let mut arities: BTreeMap<String, usize> = BTreeMap::new();
    for (n, rc) in raws.into_iter().enumerate() {
        let id = rc.label.clone().unwrap_or_else(|| format!("c{}", n + 1));
        if !ids.insert(id.clone()) {
            return err(rc.line, rc.col, format!("duplicate clause identifier {id}"));
        }
        let atoms: Vec<&RawAtom> = match &rc.head {
            RawHead::Atom(a) => std::iter::once(a).chain(rc.atoms.iter()).collect(),
            RawHead::False => rc.atoms.iter().collect(),
        };
        for a in atoms {
            if let Some(&k) = arities.get(&a.predicate) {
                if k != a.args.len() {
                    return err(a.line, a.col, format!("predicate {} used with arities {k} and {}", a.predicate, a.args.len()));
                }
            }
            arities.insert(a.predicate.clone(), a.args.len());
        }
        let mut used: BTreeSet<Var> = BTreeSet::new();
        let mut add_vars = |e: &Expr| used.extend(e.vars().cloned());
        if let RawHead::Atom(a) = &rc.head {
            a.args.iter().for_each(&mut add_vars);
        }
        rc.atoms.iter().flat_map(|a| a.args.iter()).for_each(&mut add_vars);
        rc.constraints.iter().for_each(|c| add_vars(&c.lhs));
        let mut fresh = Fresh { used: &mut used };
        let mut eqs = Vec::new();
        let head = match &rc.head {
            RawHead::Atom(a) => Head::Atom(Atom::new(a.predicate.clone(), normalize_args(&a.args, &mut fresh, &mut eqs))),
            RawHead::False => Head::False,
        };
        let body = rc
            .atoms
            .iter()
            .map(|a| Atom::new(a.predicate.clone(), normalize_args(&a.args, &mut fresh, &mut eqs)))
            .collect();
        let mut constraint = ConstraintStore::from_constraints(rc.constraints.iter().cloned());
        for e in eqs {
            constraint.push(e);
        }
        if rc.falsum {
            constraint.push(LinConstraint::falsum());
        }
        clauses.push(GeneralClause { id, head, constraint, body });
    }
    Ok((clauses, entry))
}

/// Parses clauses without the linearity restriction. Used to re-read
/// generated path programs.
pub fn parse_clauses(text: &str) -> Result<Vec<GeneralClause>, FrontError> {
    Ok(parse_general(text)?.0)
}

/// Parses a program, assigning `c1, c2, …` to unlabeled clauses in file order
/// and normalizing atom arguments to distinct variables.
pub fn parse_program(text: &str) -> Result<Program, FrontError> {
    let (general, entry) = parse_general(text)?;
    let mut clauses = Vec::new();
    for g in general {
        if g.body.len() > 1 {
            return Err(FrontError::NonLinearClause(g.id));
        }
        let GeneralClause { id, head, constraint, body } = g;
        clauses.push(Clause { id, head, constraint, body: body.into_iter().next() });
    }
    let entry = match entry {
        Some((name, arity, l, c)) => {
            let ok = clauses.iter().any(|cl| cl.head.atom().is_some_and(|a| a.predicate == name && a.args.len() == arity));
            if !ok {
                return err(l, c, format!("entry predicate {name}/{arity} is not the head of any clause"));
            }
            (name, arity)
        }
        None => match clauses.iter().find_map(|c| c.head.atom()) {
            Some(a) => (a.predicate.clone(), a.args.len()),
            None => return err(1, 1, "program has no clause with a predicate head"),
        },
    };
    Ok(Program { clauses, entry, integer: true })
}
