//! Timed ATL: surface syntax, core formulas, desugaring and negation pushdown.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::dbm::Cmp;
use crate::lex::{describe, tokenize, Cursor, Tok};
use crate::model::Tmg;

/// A set of players as a bit mask over player indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlayerSet(pub u64);

impl PlayerSet {
    pub fn from_indices(ix: impl IntoIterator<Item = usize>) -> Self {
        PlayerSet(ix.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn contains(self, p: usize) -> bool {
        self.0 & (1 << p) != 0
    }

    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..64).filter(move |i| self.0 & (1 << i) != 0)
    }
}

/// `lhs ⋈ k` or `lhs - rhs ⋈ k` over clock names (model or formula clocks).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ClockAtom {
    pub lhs: String,
    pub rhs: Option<String>,
    pub op: Cmp,
    pub k: i64,
}

impl ClockAtom {
    pub fn negate(&self) -> Vec<ClockAtom> {
        let c = |op| ClockAtom { op, ..self.clone() };
        match self.op {
            Cmp::Lt => vec![c(Cmp::Ge)],
            Cmp::Le => vec![c(Cmp::Gt)],
            Cmp::Eq => vec![c(Cmp::Lt), c(Cmp::Gt)],
            Cmp::Ge => vec![c(Cmp::Lt)],
            Cmp::Gt => vec![c(Cmp::Le)],
        }
    }
}

impl fmt::Display for ClockAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.rhs {
            None => write!(f, "{} {} {}", self.lhs, self.op.symbol(), self.k),
            Some(r) => write!(f, "{} - {} {} {}", self.lhs, r, self.op.symbol(), self.k),
        }
    }
}

/// Path operators of the surface syntax.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Path {
    Next(Box<Expr>),
    Until(Box<Expr>, Box<Expr>),
    BoundedUntil(Box<Expr>, Box<Expr>, bool, i64),
    Eventually(Box<Expr>),
    BoundedEventually(Box<Expr>, bool, i64),
    Always(Box<Expr>),
}

/// Surface formulas as parsed; `strict` in bounded paths means `<`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    True,
    False,
    Prop(String),
    Clock(ClockAtom),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    /// `forced`: `<<S>>`, otherwise `[[S]]`.
    Quant { forced: bool, coalition: PlayerSet, path: Path },
    Freeze(String, Box<Expr>),
}

/// Core formulas.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(String),
    Clock(ClockAtom),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Next(PlayerSet, Box<Formula>),
    ForcedUntil(PlayerSet, Box<Formula>, Box<Formula>),
    PossibleUntil(PlayerSet, Box<Formula>, Box<Formula>),
    Freeze(String, Box<Formula>),
}

use Formula as F;

fn bx<T>(t: T) -> Box<T> {
    Box::new(t)
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        F::Not(bx(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        F::And(bx(a), bx(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        F::Or(bx(a), bx(b))
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            F::True | F::False | F::Atom(_) | F::Clock(_) => vec![],
            F::Not(a) | F::Next(_, a) | F::Freeze(_, a) => vec![a],
            F::Or(a, b) | F::And(a, b) | F::ForcedUntil(_, a, b) | F::PossibleUntil(_, a, b) => vec![a, b],
        }
    }

    /// Formula clocks in order of first appearance (preorder).
    pub fn formula_clocks(&self) -> Vec<String> {
        fn go(f: &Formula, out: &mut Vec<String>) {
            if let F::Freeze(z, _) = f {
                if !out.contains(z) {
                    out.push(z.clone());
                }
            }
            for c in f.children() {
                go(c, out);
            }
        }
        let mut out = Vec::new();
        go(self, &mut out);
        out
    }

    /// Largest constant compared against clock `z` anywhere in the formula.
    pub fn max_constant_for(&self, z: &str) -> i64 {
        let own = match self {
            F::Clock(c) if c.lhs == z || c.rhs.as_deref() == Some(z) => c.k.abs(),
            _ => 0,
        };
        self.children().into_iter().map(|c| c.max_constant_for(z)).fold(own, i64::max)
    }

    pub fn display<'a>(&'a self, players: &'a [String]) -> FormulaDisplay<'a> {
        FormulaDisplay { f: self, players }
    }
}

pub struct FormulaDisplay<'a> {
    f: &'a Formula,
    players: &'a [String],
}

impl<'a> fmt::Display for FormulaDisplay<'a> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let co = |s: &PlayerSet| -> String {
            s.indices()
                .map(|i| self.players.get(i).cloned().unwrap_or_else(|| format!("#{i}")))
                .collect::<Vec<_>>()
                .join(",")
        };
        let players = self.players;
        let sub = |g: &'a Formula| FormulaDisplay { f: g, players };
        match self.f {
            F::True => write!(f, "true"),
            F::False => write!(f, "false"),
            F::Atom(p) => write!(f, "{p}"),
            F::Clock(c) => write!(f, "{c}"),
            F::Not(a) => write!(f, "!{}", sub(a)),
            F::Or(a, b) => write!(f, "({} || {})", sub(a), sub(b)),
            F::And(a, b) => write!(f, "({} && {})", sub(a), sub(b)),
            F::Next(s, a) => write!(f, "<<{}>> X {}", co(s), sub(a)),
            F::ForcedUntil(s, a, b) => write!(f, "<<{}>> ({} U {})", co(s), sub(a), sub(b)),
            F::PossibleUntil(s, a, b) => write!(f, "[[{}]] ({} U {})", co(s), sub(a), sub(b)),
            F::Freeze(z, a) => write!(f, "{z}.{}", sub(a)),
        }
    }
}

/// Generates `_z0, _z1, …` for bounded operators.
#[derive(Default)]
pub struct FreshClocks {
    next: usize,
}

impl FreshClocks {
    pub fn fresh(&mut self) -> String {
        let z = format!("_z{}", self.next);
        self.next += 1;
        z
    }
}

/// Replace all sugar by core kinds.
pub fn desugar(e: &Expr) -> Formula {
    desugar_with(e, &mut FreshClocks::default())
}

pub fn desugar_with(e: &Expr, fresh: &mut FreshClocks) -> Formula {
    match e {
        Expr::True => F::True,
        Expr::False => F::False,
        Expr::Prop(p) => F::Atom(p.clone()),
        Expr::Clock(c) => F::Clock(c.clone()),
        Expr::Not(a) => F::not(desugar_with(a, fresh)),
        Expr::And(a, b) => F::and(desugar_with(a, fresh), desugar_with(b, fresh)),
        Expr::Or(a, b) => F::or(desugar_with(a, fresh), desugar_with(b, fresh)),
        Expr::Freeze(z, a) => F::Freeze(z.clone(), bx(desugar_with(a, fresh))),
        Expr::Quant { forced, coalition, path } => {
            let s = *coalition;
            let until = |a: Formula, b: Formula| {
                if *forced {
                    F::ForcedUntil(s, bx(a), bx(b))
                } else {
                    F::PossibleUntil(s, bx(a), bx(b))
                }
            };
            match path {
                Path::Next(a) => {
                    let a = desugar_with(a, fresh);
                    if *forced {
                        F::Next(s, bx(a))
                    } else {
                        F::not(F::Next(s, bx(F::not(a))))
                    }
                }
                Path::Until(a, b) => until(desugar_with(a, fresh), desugar_with(b, fresh)),
                Path::Eventually(a) => until(F::True, desugar_with(a, fresh)),
                Path::Always(a) => {
                    let neg = F::not(desugar_with(a, fresh));
                    // <<S>>G p = ![[S]](true U !p) and [[S]]G p = !<<S>>(true U !p).
                    if *forced {
                        F::not(F::PossibleUntil(s, bx(F::True), bx(neg)))
                    } else {
                        F::not(F::ForcedUntil(s, bx(F::True), bx(neg)))
                    }
                }
                Path::BoundedUntil(a, b, strict, k) => {
                    let z = fresh.fresh();
                    let a = desugar_with(a, fresh);
                    let b = desugar_with(b, fresh);
                    let bound = F::Clock(ClockAtom {
                        lhs: z.clone(),
                        rhs: None,
                        op: if *strict { Cmp::Lt } else { Cmp::Le },
                        k: *k,
                    });
                    F::Freeze(z, bx(until(F::and(a, bound), b)))
                }
                Path::BoundedEventually(b, strict, k) => {
                    let z = fresh.fresh();
                    let b = desugar_with(b, fresh);
                    let bound = F::Clock(ClockAtom {
                        lhs: z.clone(),
                        rhs: None,
                        op: if *strict { Cmp::Lt } else { Cmp::Le },
                        k: *k,
                    });
                    F::Freeze(z, bx(until(F::and(F::True, bound), b)))
                }
            }
        }
    }
}

/// Push negations towards the leaves; they stop above Next and the untils.
pub fn push_negations(f: &Formula) -> Formula {
    match f {
        F::True | F::False | F::Atom(_) | F::Clock(_) => f.clone(),
        F::Not(a) => negate(a),
        F::Or(a, b) => F::or(push_negations(a), push_negations(b)),
        F::And(a, b) => F::and(push_negations(a), push_negations(b)),
        F::Next(s, a) => F::Next(*s, bx(push_negations(a))),
        F::ForcedUntil(s, a, b) => F::ForcedUntil(*s, bx(push_negations(a)), bx(push_negations(b))),
        F::PossibleUntil(s, a, b) => F::PossibleUntil(*s, bx(push_negations(a)), bx(push_negations(b))),
        F::Freeze(z, a) => F::Freeze(z.clone(), bx(push_negations(a))),
    }
}

fn negate(f: &Formula) -> Formula {
    match f {
        F::True => F::False,
        F::False => F::True,
        F::Not(a) => push_negations(a),
        F::Or(a, b) => F::and(negate(a), negate(b)),
        F::And(a, b) => F::or(negate(a), negate(b)),
        F::Clock(c) => {
            let mut parts = c.negate().into_iter().map(F::Clock);
            let first = parts.next().expect("negation is nonempty");
            parts.fold(first, F::or)
        }
        // The freeze resets z whatever the truth value below is.
        F::Freeze(z, a) => F::Freeze(z.clone(), bx(negate(a))),
        F::Atom(_) => F::not(f.clone()),
        F::Next(..) | F::ForcedUntil(..) | F::PossibleUntil(..) => F::not(push_negations(f)),
    }
}

/// Maximal number of Not nodes on a root-to-leaf path.
pub fn negation_depth(f: &Formula) -> usize {
    let below = f.children().into_iter().map(negation_depth).max().unwrap_or(0);
    below + usize::from(matches!(f, F::Not(_)))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: unknown player `{name}`")]
    UnknownPlayer { line: usize, name: String },
    #[error("line {line}: unknown proposition `{name}`")]
    UnknownProposition { line: usize, name: String },
    #[error("line {line}: unknown clock `{name}`")]
    UnknownClock { line: usize, name: String },
    #[error("line {line}: formula clock `{name}` collides with a model clock")]
    ClockCollision { line: usize, name: String },
    #[error("line {line}: duplicate query name `{name}`")]
    DuplicateName { line: usize, name: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Query {
    pub name: String,
    pub expr: Expr,
    pub expected: Option<bool>,
}

impl Query {
    /// Desugared and negation-pushed core formula.
    pub fn core(&self) -> Formula {
        push_negations(&desugar(&self.expr))
    }
}

struct QParser<'m> {
    c: Cursor,
    line: usize,
    model: &'m Tmg,
    props: BTreeSet<String>,
    scope: Vec<String>,
}

impl QParser<'_> {
    fn err(&self, msg: impl Into<String>) -> QueryError {
        let (line, col) = self.c.here();
        QueryError::Syntax { line, col, msg: msg.into() }
    }

    fn expect(&mut self, s: &str) -> Result<(), QueryError> {
        if self.c.eat_sym(s) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{s}`, found {}", describe(self.c.peek()))))
        }
    }

    fn ident(&mut self) -> Result<String, QueryError> {
        match self.c.peek().clone() {
            Tok::Ident(s) => {
                self.c.bump();
                Ok(s)
            }
            t => Err(self.err(format!("expected identifier, found {}", describe(&t)))),
        }
    }

    fn int(&mut self) -> Result<i64, QueryError> {
        let neg = self.c.eat_sym("-");
        match self.c.peek().clone() {
            Tok::Int(v) => {
                self.c.bump();
                Ok(if neg { -v } else { v })
            }
            t => Err(self.err(format!("expected integer, found {}", describe(&t)))),
        }
    }

    fn formula(&mut self) -> Result<Expr, QueryError> {
        let mut l = self.conj()?;
        while self.c.eat_sym("||") {
            let r = self.conj()?;
            l = Expr::Or(bx(l), bx(r));
        }
        Ok(l)
    }

    fn conj(&mut self) -> Result<Expr, QueryError> {
        let mut l = self.unary()?;
        while self.c.eat_sym("&&") {
            let r = self.unary()?;
            l = Expr::And(bx(l), bx(r));
        }
        Ok(l)
    }

    fn coalition(&mut self, close: &str) -> Result<PlayerSet, QueryError> {
        let mut ix = Vec::new();
        if !self.c.at_sym(close) {
            loop {
                let name = self.ident()?;
                let i = self
                    .model
                    .player_index(&name)
                    .ok_or(QueryError::UnknownPlayer { line: self.line, name })?;
                ix.push(i);
                if !self.c.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect(close)?;
        Ok(PlayerSet::from_indices(ix))
    }

    fn bound_op(&mut self) -> Option<bool> {
        if self.c.eat_sym("<") {
            Some(true)
        } else if self.c.eat_sym("<=") {
            Some(false)
        } else {
            None
        }
    }

    fn path(&mut self) -> Result<Path, QueryError> {
        if self.c.at_ident("X") {
            self.c.bump();
            return Ok(Path::Next(bx(self.unary()?)));
        }
        if self.c.at_ident("F") {
            self.c.bump();
            if let Some(strict) = self.bound_op() {
                let k = self.int()?;
                return Ok(Path::BoundedEventually(bx(self.unary()?), strict, k));
            }
            return Ok(Path::Eventually(bx(self.unary()?)));
        }
        if self.c.at_ident("G") {
            self.c.bump();
            return Ok(Path::Always(bx(self.unary()?)));
        }
        if self.c.eat_sym("(") {
            let a = self.formula()?;
            if !self.c.at_ident("U") {
                return Err(self.err(format!("expected `U`, found {}", describe(self.c.peek()))));
            }
            self.c.bump();
            let p = match self.bound_op() {
                Some(strict) => {
                    let k = self.int()?;
                    let b = self.formula()?;
                    Path::BoundedUntil(bx(a), bx(b), strict, k)
                }
                None => Path::Until(bx(a), bx(self.formula()?)),
            };
            self.expect(")")?;
            return Ok(p);
        }
        Err(self.err(format!("expected path operator, found {}", describe(self.c.peek()))))
    }

    fn clock_name(&self, name: &str) -> Result<(), QueryError> {
        if self.model.clock_index(name).is_some() || self.scope.iter().any(|z| z == name) {
            Ok(())
        } else {
            Err(QueryError::UnknownClock { line: self.line, name: name.to_string() })
        }
    }

    fn unary(&mut self) -> Result<Expr, QueryError> {
        if self.c.eat_sym("!") {
            return Ok(Expr::Not(bx(self.unary()?)));
        }
        if self.c.eat_sym("<<") {
            let s = self.coalition(">>")?;
            return Ok(Expr::Quant { forced: true, coalition: s, path: self.path()? });
        }
        if self.c.eat_sym("[[") {
            let s = self.coalition("]]")?;
            return Ok(Expr::Quant { forced: false, coalition: s, path: self.path()? });
        }
        if self.c.eat_sym("(") {
            let f = self.formula()?;
            self.expect(")")?;
            return Ok(f);
        }
        let name = self.ident()?;
        match name.as_str() {
            "true" => return Ok(Expr::True),
            "false" => return Ok(Expr::False),
            _ => {}
        }
        if self.c.eat_sym(".") {
            if self.model.clock_index(&name).is_some() {
                return Err(QueryError::ClockCollision { line: self.line, name });
            }
            self.scope.push(name.clone());
            let body = self.unary();
            self.scope.pop();
            return Ok(Expr::Freeze(name, bx(body?)));
        }
        let is_cmp = matches!(self.c.peek(), Tok::Sym("<" | "<=" | "==" | ">=" | ">" | "-"));
        if is_cmp {
            self.clock_name(&name)?;
            let rhs = if self.c.eat_sym("-") {
                let r = self.ident()?;
                self.clock_name(&r)?;
                Some(r)
            } else {
                None
            };
            let op = match self.c.bump() {
                Tok::Sym("<") => Cmp::Lt,
                Tok::Sym("<=") => Cmp::Le,
                Tok::Sym("==") => Cmp::Eq,
                Tok::Sym(">=") => Cmp::Ge,
                Tok::Sym(">") => Cmp::Gt,
                t => return Err(self.err(format!("expected comparison, found {}", describe(&t)))),
            };
            let k = self.int()?;
            return Ok(Expr::Clock(ClockAtom { lhs: name, rhs, op, k }));
        }
        if !self.props.contains(&name) {
            return Err(QueryError::UnknownProposition { line: self.line, name });
        }
        Ok(Expr::Prop(name))
    }
}

/// Parse a single formula against a model.
pub fn parse_formula(text: &str, model: &Tmg) -> Result<Expr, QueryError> {
    parse_formula_at(text, model, 1, 0)
}

fn parse_formula_at(text: &str, model: &Tmg, line: usize, col0: usize) -> Result<Expr, QueryError> {
    let toks = tokenize(text, line - 1).map_err(|e| QueryError::Syntax {
        line: e.line,
        col: e.col + col0,
        msg: e.msg,
    })?;
    let mut p = QParser { c: Cursor::new(toks), line, model, props: model.propositions(), scope: Vec::new() };
    let f = p.formula().map_err(|e| match e {
        QueryError::Syntax { line, col, msg } => QueryError::Syntax { line, col: col + col0, msg },
        other => other,
    })?;
    if !p.c.at_eof() {
        let (l, c) = p.c.here();
        return Err(QueryError::Syntax { line: l, col: c + col0, msg: format!("unexpected {}", describe(p.c.peek())) });
    }
    Ok(f)
}

/// Parse a query file: one `name: formula [=> true|false]` per line.
pub fn parse_queries(text: &str, model: &Tmg) -> Result<Vec<Query>, QueryError> {
    let mut out: Vec<Query> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = match raw.find("//") {
            Some(p) => &raw[..p],
            None => raw,
        };
        if content.trim().is_empty() {
            continue;
        }
        let colon = content.find(':').ok_or(QueryError::Syntax {
            line,
            col: 1,
            msg: "expected `name: formula`".into(),
        })?;
        let name = content[..colon].trim().to_string();
        let name_ok = !name.is_empty()
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if !name_ok {
            return Err(QueryError::Syntax { line, col: 1, msg: format!("bad query name `{name}`") });
        }
        if out.iter().any(|q| q.name == name) {
            return Err(QueryError::DuplicateName { line, name });
        }
        let mut body = &content[colon + 1..];
        let mut expected = None;
        if let Some(p) = body.rfind("=>") {
            let verdict = body[p + 2..].trim();
            expected = Some(match verdict {
                "true" => true,
                "false" => false,
                _ => {
                    return Err(QueryError::Syntax {
                        line,
                        col: colon + p + 4,
                        msg: format!("expected `true` or `false` after `=>`, found `{verdict}`"),
                    })
                }
            });
            body = &body[..p];
        }
        // Pad so reported columns refer to the original line.
        let padded = format!("{}{}", " ".repeat(colon + 1), body);
        let expr = parse_formula_at(&padded, model, line, 0)?;
        out.push(Query { name, expr, expected });
    }
    Ok(out)
}
