//! Timed multiplayer games: structure, textual format and concrete steps.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_rational::Rational64;
use thiserror::Error;

use crate::dbm::{Cmp, Comparison, Dbm};
use crate::lex::{describe, tokenize, Cursor, Tok};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("duplicate action `{0}`")]
    DuplicateAction(String),
    #[error("duplicate location `{0}`")]
    DuplicateLocation(String),
    #[error("duplicate clock or player `{0}`")]
    DuplicateName(String),
    #[error("invariant of `{0}` uses a strict upper bound")]
    StrictUpperInvariant(String),
    #[error("invariant of `{0}` uses a diagonal constraint")]
    DiagonalInvariant(String),
    #[error("guard of `{0}` uses a diagonal constraint")]
    DiagonalGuard(String),
    #[error("unknown clock `{0}`")]
    UnknownClock(String),
    #[error("unknown player `{0}`")]
    UnknownPlayer(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("unknown action `{0}`")]
    UnknownAction(String),
    #[error("no initial location")]
    MissingInit,
    #[error("more than one initial location")]
    MultipleInit,
    #[error("missing `system` block")]
    MissingSystem,
    #[error("missing ceiling")]
    MissingCeiling,
    #[error("constant {k} in `{at}` exceeds the ceiling {ceiling}")]
    AboveCeiling { at: String, k: i64, ceiling: i64 },
    #[error("negative delay")]
    NegativeDelay,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub name: String,
    /// Non-diagonal, no strict upper bounds; over model clocks.
    pub invariant: Vec<Comparison>,
    pub labels: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub action: String,
    pub source: usize,
    pub target: usize,
    pub player: usize,
    pub guard: Vec<Comparison>,
    /// Matrix indices of the reset clocks.
    pub resets: Vec<usize>,
}

/// A timed automaton whose edges (one action each) are owned by players.
/// Clock `c` (0-based) is matrix index `c + 1` in every derived frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tmg {
    pub clocks: Vec<String>,
    pub players: Vec<String>,
    pub ceiling: i64,
    pub locations: Vec<Location>,
    pub init: usize,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcreteState {
    pub location: usize,
    /// One rational per clock of the frame (model clocks first).
    pub valuation: Vec<Rational64>,
}

impl Tmg {
    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn player_index(&self, name: &str) -> Option<usize> {
        self.players.iter().position(|p| p == name)
    }

    pub fn clock_index(&self, name: &str) -> Option<usize> {
        self.clocks.iter().position(|c| c == name).map(|i| i + 1)
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.action == name)
    }

    /// The proposition universe: every label used somewhere.
    pub fn propositions(&self) -> BTreeSet<String> {
        self.locations.iter().flat_map(|l| l.labels.iter().cloned()).collect()
    }

    pub fn has_label(&self, loc: usize, p: &str) -> bool {
        self.locations[loc].labels.contains(p)
    }

    /// Invariant zone of a location in a frame of dimension `dim`.
    pub fn invariant_dbm(&self, loc: usize, dim: usize) -> Dbm {
        Dbm::from_comparisons(dim, &self.locations[loc].invariant)
    }

    pub fn guard_dbm(&self, edge: usize, dim: usize) -> Dbm {
        Dbm::from_comparisons(dim, &self.edges[edge].guard)
    }

    pub fn invariant_holds(&self, loc: usize, v: &[Rational64]) -> bool {
        self.locations[loc].invariant.iter().all(|c| c.holds(v))
    }

    pub fn initial_state(&self, clocks: usize) -> ConcreteState {
        ConcreteState { location: self.init, valuation: vec![Rational64::from_integer(0); clocks] }
    }

    /// The successor via edge `edge`, if guard and both invariants hold.
    pub fn step_edge(&self, s: &ConcreteState, edge: usize) -> Option<ConcreteState> {
        let e = &self.edges[edge];
        if e.source != s.location
            || !self.invariant_holds(s.location, &s.valuation)
            || !e.guard.iter().all(|c| c.holds(&s.valuation))
        {
            return None;
        }
        let mut v = s.valuation.clone();
        for &x in &e.resets {
            v[x - 1] = Rational64::from_integer(0);
        }
        if !self.invariant_holds(e.target, &v) {
            return None;
        }
        Some(ConcreteState { location: e.target, valuation: v })
    }

    pub fn discrete_step(&self, s: &ConcreteState, action: &str) -> Result<Option<ConcreteState>, ModelError> {
        let a = self
            .action_index(action)
            .ok_or_else(|| ModelError::UnknownAction(action.to_string()))?;
        Ok(self.step_edge(s, a))
    }

    /// Invariants are convex, so checking the endpoint suffices.
    pub fn delay_step(&self, s: &ConcreteState, delta: Rational64) -> Result<Option<ConcreteState>, ModelError> {
        if delta < Rational64::from_integer(0) {
            return Err(ModelError::NegativeDelay);
        }
        if !self.invariant_holds(s.location, &s.valuation) {
            return Ok(None);
        }
        let v: Vec<Rational64> = s.valuation.iter().map(|x| x + delta).collect();
        if !self.invariant_holds(s.location, &v) {
            return Ok(None);
        }
        Ok(Some(ConcreteState { location: s.location, valuation: v }))
    }

    /// Edge indices enabled at `s`, in declaration order.
    pub fn enabled_edges(&self, s: &ConcreteState) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.step_edge(s, e).is_some()).collect()
    }

    pub fn enabled_actions(&self, s: &ConcreteState) -> Vec<String> {
        self.enabled_edges(s).into_iter().map(|e| self.edges[e].action.clone()).collect()
    }

    /// Is some invariant upper bound tight at `v` (no positive delay possible)?
    pub fn is_timelocked(&self, loc: usize, v: &[Rational64]) -> bool {
        self.locations[loc].invariant.iter().any(|c| {
            matches!(c.op, Cmp::Le | Cmp::Eq) && v[c.lhs - 1] == Rational64::from_integer(c.k)
        })
    }

    /// Largest constant used in guards and invariants.
    pub fn max_constant(&self) -> i64 {
        let g = self.edges.iter().flat_map(|e| e.guard.iter().map(|c| c.k.abs()));
        let i = self.locations.iter().flat_map(|l| l.invariant.iter().map(|c| c.k.abs()));
        g.chain(i).max().unwrap_or(0)
    }
}

fn syntax(c: &Cursor, msg: impl Into<String>) -> ModelError {
    let (line, col) = c.here();
    ModelError::Syntax { line, col, msg: msg.into() }
}

fn expect_sym(c: &mut Cursor, s: &str) -> Result<(), ModelError> {
    if c.eat_sym(s) {
        Ok(())
    } else {
        Err(syntax(c, format!("expected `{s}`, found {}", describe(c.peek()))))
    }
}

fn expect_ident(c: &mut Cursor) -> Result<String, ModelError> {
    match c.peek().clone() {
        Tok::Ident(s) => {
            c.bump();
            Ok(s)
        }
        t => Err(syntax(c, format!("expected identifier, found {}", describe(&t)))),
    }
}

fn expect_int(c: &mut Cursor) -> Result<i64, ModelError> {
    let neg = c.eat_sym("-");
    match c.peek().clone() {
        Tok::Int(v) => {
            c.bump();
            Ok(if neg { -v } else { v })
        }
        t => Err(syntax(c, format!("expected integer, found {}", describe(&t)))),
    }
}

fn ident_list(c: &mut Cursor) -> Result<Vec<String>, ModelError> {
    let mut v = vec![expect_ident(c)?];
    while c.eat_sym(",") {
        v.push(expect_ident(c)?);
    }
    Ok(v)
}

fn parse_cmp_op(c: &mut Cursor) -> Result<Cmp, ModelError> {
    let op = match c.peek() {
        Tok::Sym("<") => Cmp::Lt,
        Tok::Sym("<=") => Cmp::Le,
        Tok::Sym("==") => Cmp::Eq,
        Tok::Sym(">=") => Cmp::Ge,
        Tok::Sym(">") => Cmp::Gt,
        t => return Err(syntax(c, format!("expected comparison, found {}", describe(t)))),
    };
    c.bump();
    Ok(op)
}

/// A raw comparison with clock names still unresolved.
struct RawCmp {
    lhs: String,
    rhs: Option<String>,
    op: Cmp,
    k: i64,
}

fn parse_conjunction(c: &mut Cursor) -> Result<Vec<RawCmp>, ModelError> {
    if c.at_ident("true") {
        c.bump();
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    loop {
        let lhs = expect_ident(c)?;
        let rhs = if c.eat_sym("-") { Some(expect_ident(c)?) } else { None };
        let op = parse_cmp_op(c)?;
        let k = expect_int(c)?;
        out.push(RawCmp { lhs, rhs, op, k });
        if !c.eat_sym("&&") {
            break;
        }
    }
    Ok(out)
}

struct RawLocation {
    name: String,
    invariant: Vec<RawCmp>,
    init: bool,
    labels: Vec<String>,
}

struct RawEdge {
    action: String,
    source: String,
    target: String,
    player: Option<String>,
    guard: Vec<RawCmp>,
    resets: Vec<String>,
}

/// Parse and validate a model file.
pub fn parse_model(text: &str) -> Result<Tmg, ModelError> {
    let toks = tokenize(text, 0)
        .map_err(|e| ModelError::Syntax { line: e.line, col: e.col, msg: e.msg })?;
    let mut c = Cursor::new(toks);
    let mut clocks: Option<Vec<String>> = None;
    let mut players: Option<Vec<String>> = None;
    let mut ceiling: Option<i64> = None;
    let mut seen_system = false;
    let mut locs: Vec<RawLocation> = Vec::new();
    let mut edges: Vec<RawEdge> = Vec::new();

    while !c.at_eof() {
        let kw = expect_ident(&mut c)?;
        match kw.as_str() {
            "system" => {
                seen_system = true;
                expect_sym(&mut c, "{")?;
                while !c.eat_sym("}") {
                    let key = expect_ident(&mut c)?;
                    expect_sym(&mut c, ":")?;
                    match key.as_str() {
                        "clocks" => clocks = Some(if c.at_sym(";") { Vec::new() } else { ident_list(&mut c)? }),
                        "players" => players = Some(ident_list(&mut c)?),
                        "ceiling" => ceiling = Some(expect_int(&mut c)?),
                        _ => return Err(syntax(&c, format!("unknown system key `{key}`"))),
                    }
                    expect_sym(&mut c, ";")?;
                }
            }
            "location" => {
                let name = expect_ident(&mut c)?;
                let mut l = RawLocation { name, invariant: Vec::new(), init: false, labels: Vec::new() };
                expect_sym(&mut c, "{")?;
                while !c.eat_sym("}") {
                    let key = expect_ident(&mut c)?;
                    match key.as_str() {
                        "init" => l.init = true,
                        "invariant" => {
                            expect_sym(&mut c, ":")?;
                            l.invariant.extend(parse_conjunction(&mut c)?);
                        }
                        "labels" => {
                            expect_sym(&mut c, ":")?;
                            if !c.at_sym(";") {
                                l.labels.extend(ident_list(&mut c)?);
                            }
                        }
                        _ => return Err(syntax(&c, format!("unknown location key `{key}`"))),
                    }
                    expect_sym(&mut c, ";")?;
                }
                locs.push(l);
            }
            "edge" => {
                let action = expect_ident(&mut c)?;
                expect_sym(&mut c, ":")?;
                let source = expect_ident(&mut c)?;
                expect_sym(&mut c, "->")?;
                let target = expect_ident(&mut c)?;
                let mut e = RawEdge { action, source, target, player: None, guard: Vec::new(), resets: Vec::new() };
                expect_sym(&mut c, "{")?;
                while !c.eat_sym("}") {
                    let key = expect_ident(&mut c)?;
                    expect_sym(&mut c, ":")?;
                    match key.as_str() {
                        "player" => e.player = Some(expect_ident(&mut c)?),
                        "guard" => e.guard.extend(parse_conjunction(&mut c)?),
                        "reset" => {
                            if !c.at_sym(";") {
                                e.resets.extend(ident_list(&mut c)?);
                            }
                        }
                        _ => return Err(syntax(&c, format!("unknown edge key `{key}`"))),
                    }
                    expect_sym(&mut c, ";")?;
                }
                edges.push(e);
            }
            _ => return Err(syntax(&c, format!("expected `system`, `location` or `edge`, found `{kw}`"))),
        }
    }

    if !seen_system {
        return Err(ModelError::MissingSystem);
    }
    let clocks = clocks.unwrap_or_default();
    let players = players.unwrap_or_default();
    let ceiling = ceiling.ok_or(ModelError::MissingCeiling)?;
    let mut names: Vec<&String> = clocks.iter().chain(players.iter()).collect();
    names.sort();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(ModelError::DuplicateName(w[0].clone()));
    }

    let clock_idx = |n: &str| -> Result<usize, ModelError> {
        clocks
            .iter()
            .position(|x| x == n)
            .map(|i| i + 1)
            .ok_or_else(|| ModelError::UnknownClock(n.to_string()))
    };
    let resolve = |raw: &[RawCmp], at: &str| -> Result<Vec<Comparison>, ModelError> {
        raw.iter()
            .map(|r| {
                if r.k.abs() > ceiling {
                    return Err(ModelError::AboveCeiling { at: at.to_string(), k: r.k, ceiling });
                }
                let lhs = clock_idx(&r.lhs)?;
                let rhs = match &r.rhs {
                    Some(n) => clock_idx(n)?,
                    None => 0,
                };
                Ok(Comparison::new(lhs, rhs, r.op, r.k))
            })
            .collect()
    };

    let mut loc_index: HashMap<String, usize> = HashMap::new();
    let mut locations = Vec::new();
    let mut init = None;
    for l in &locs {
        if loc_index.insert(l.name.clone(), locations.len()).is_some() {
            return Err(ModelError::DuplicateLocation(l.name.clone()));
        }
        let inv = resolve(&l.invariant, &l.name)?;
        for cmp in &inv {
            if cmp.is_diagonal() {
                return Err(ModelError::DiagonalInvariant(l.name.clone()));
            }
            if cmp.op == Cmp::Lt {
                return Err(ModelError::StrictUpperInvariant(l.name.clone()));
            }
        }
        if l.init {
            if init.is_some() {
                return Err(ModelError::MultipleInit);
            }
            init = Some(locations.len());
        }
        locations.push(Location { name: l.name.clone(), invariant: inv, labels: l.labels.iter().cloned().collect() });
    }
    let init = init.ok_or(ModelError::MissingInit)?;

    let mut seen_actions = BTreeSet::new();
    let mut out_edges = Vec::new();
    for e in &edges {
        if !seen_actions.insert(e.action.clone()) {
            return Err(ModelError::DuplicateAction(e.action.clone()));
        }
        let source = *loc_index.get(&e.source).ok_or_else(|| ModelError::UnknownLocation(e.source.clone()))?;
        let target = *loc_index.get(&e.target).ok_or_else(|| ModelError::UnknownLocation(e.target.clone()))?;
        let pname = e.player.clone().ok_or_else(|| ModelError::UnknownPlayer(format!("<none for {}>", e.action)))?;
        let player = players.iter().position(|p| *p == pname).ok_or(ModelError::UnknownPlayer(pname))?;
        let guard = resolve(&e.guard, &e.action)?;
        if guard.iter().any(|g| g.is_diagonal()) {
            return Err(ModelError::DiagonalGuard(e.action.clone()));
        }
        let mut resets = Vec::new();
        for r in &e.resets {
            let x = clock_idx(r)?;
            if !resets.contains(&x) {
                resets.push(x);
            }
        }
        out_edges.push(Edge { action: e.action.clone(), source, target, player, guard, resets });
    }

    Ok(Tmg { clocks, players, ceiling, locations, init, edges: out_edges })
}

fn fmt_conj(cs: &[Comparison], clocks: &[String]) -> String {
    cs.iter()
        .map(|c| {
            let n = |i: usize| clocks[i - 1].as_str();
            if c.rhs == 0 {
                format!("{} {} {}", n(c.lhs), c.op.symbol(), c.k)
            } else {
                format!("{} - {} {} {}", n(c.lhs), n(c.rhs), c.op.symbol(), c.k)
            }
        })
        .collect::<Vec<_>>()
        .join(" && ")
}

/// Prints the model in the input format; `parse_model` reads it back.
impl fmt::Display for Tmg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "system {{ clocks: {}; ", self.clocks.join(", "))?;
        writeln!(f, "players: {}; ceiling: {}; }}", self.players.join(", "), self.ceiling)?;
        for (i, l) in self.locations.iter().enumerate() {
            write!(f, "location {} {{", l.name)?;
            if !l.invariant.is_empty() {
                write!(f, " invariant: {};", fmt_conj(&l.invariant, &self.clocks))?;
            }
            if i == self.init {
                write!(f, " init;")?;
            }
            if !l.labels.is_empty() {
                write!(f, " labels: {};", l.labels.iter().cloned().collect::<Vec<_>>().join(", "))?;
            }
            writeln!(f, " }}")?;
        }
        for e in &self.edges {
            write!(
                f,
                "edge {}: {} -> {} {{ player: {};",
                e.action, self.locations[e.source].name, self.locations[e.target].name, self.players[e.player]
            )?;
            if !e.guard.is_empty() {
                write!(f, " guard: {};", fmt_conj(&e.guard, &self.clocks))?;
            }
            if !e.resets.is_empty() {
                let rs: Vec<&str> = e.resets.iter().map(|&x| self.clocks[x - 1].as_str()).collect();
                write!(f, " reset: {};", rs.join(", "))?;
            }
            writeln!(f, " }}")?;
        }
        Ok(())
    }
}

/// The running example: three players, one clock, five locations.
pub const FIG1_MODEL: &str = "\
// Three-player example game.
system { clocks: x; players: I, II, III; ceiling: 6; }
location A { invariant: x <= 4; init; labels: a; }
location B { invariant: x <= 5; labels: b; }
location C { labels: c; }
location D { invariant: x <= 3; labels: d; }
location Goal { labels: goal; }
edge a1: A -> B { player: I; }
edge a2: B -> C { player: I; }
edge a3: B -> Goal { player: III; guard: x <= 2; }
edge a4: B -> D { player: II; guard: x <= 3; }
edge a5: C -> Goal { player: II; }
edge a6: D -> Goal { player: III; }
";
