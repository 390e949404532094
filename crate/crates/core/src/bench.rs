//! The three-player example game's queries and the scalable benchmark families.

/// The example's property table with the verdicts as published.
pub const FIG1_QUERIES: &str = "\
p1:  <<I>> F goal                 => false
p2:  <<II>> F goal                => true
p3:  <<III>> F goal               => false
p4:  <<I,III>> F goal             => true
p5:  [[II]] F goal                => true
p6:  <<II>> (!c U goal)           => false
p7:  <<I,III>> (!c U goal)        => true
p8:  <<I>> G !<<III>> F goal      => true
p9:  <<II>> G !<<III>> F goal     => false
p10: <<II>> F<5 goal              => false
";

/// Published verdicts that the semantics do not reproduce; see the README.
pub const FIG1_KNOWN_CONFLICTS: &[&str] = &["p8"];

use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    TrainGate,
    Standoff,
    PhaseKing,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::TrainGate, Family::Standoff, Family::PhaseKing];

    pub fn name(self) -> &'static str {
        match self {
            Family::TrainGate => "train-gate",
            Family::Standoff => "standoff",
            Family::PhaseKing => "phase-king",
        }
    }

    /// Supported instance sizes.
    pub fn sizes(self) -> std::ops::RangeInclusive<usize> {
        match self {
            Family::TrainGate => 2..=7,
            Family::Standoff => 2..=5,
            Family::PhaseKing => 3..=6,
        }
    }
}

impl FromStr for Family {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Family, BenchError> {
        Family::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| BenchError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, thiserror::Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("unknown benchmark family `{0}` (train-gate, standoff, phase-king)")]
    UnknownFamily(String),
    #[error("{family} supports sizes {lo}..={hi}, got {n}")]
    OutOfRange { family: &'static str, n: usize, lo: usize, hi: usize },
}

/// A generated model file and its query file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub model: String,
    pub queries: String,
}

pub fn generate(family: Family, n: usize) -> Result<Instance, BenchError> {
    let r = family.sizes();
    if !r.contains(&n) {
        return Err(BenchError::OutOfRange { family: family.name(), n, lo: *r.start(), hi: *r.end() });
    }
    Ok(match family {
        Family::TrainGate => train_gate(n),
        Family::Standoff => standoff(n),
        Family::PhaseKing => phase_king(n),
    })
}

fn players(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Train status: Far, Up (approaching), Stopped, on the Bridge.
const STATUS: [char; 4] = ['F', 'U', 'S', 'B'];

fn train_gate(n: usize) -> Instance {
    let mut states: Vec<Vec<char>> = vec![vec![]];
    for _ in 0..n {
        states = states.into_iter().flat_map(|s| STATUS.iter().map(move |&c| [s.clone(), vec![c]].concat())).collect();
    }
    // At most one train approaches and at most one is on the bridge.
    states.retain(|s| s.iter().filter(|&&c| c == 'U').count() <= 1 && s.iter().filter(|&&c| c == 'B').count() <= 1);
    let name = |s: &[char]| format!("s_{}", s.iter().collect::<String>());
    let mut m = String::new();
    let ps = players("T", n).join(", ");
    writeln!(m, "// Train-gate with {n} trains: F far, U approaching, S stopped, B on the bridge.").unwrap();
    writeln!(m, "system {{ clocks: x, y; players: {ps}, Ctrl; ceiling: 4; }}").unwrap();
    for s in &states {
        let mut inv = Vec::new();
        if s.contains(&'U') {
            inv.push("y <= 3");
        }
        if s.contains(&'B') {
            inv.push("x <= 4");
        }
        let mut line = format!("location {} {{", name(s));
        if !inv.is_empty() {
            write!(line, " invariant: {};", inv.join(" && ")).unwrap();
        }
        if s.iter().all(|&c| c == 'F') {
            line += " init;";
        }
        if let Some(i) = s.iter().position(|&c| c == 'B') {
            write!(line, " labels: crossing_{};", i + 1).unwrap();
        }
        line += " }";
        writeln!(m, "{line}").unwrap();
    }
    writeln!(m, "location crash {{ labels: collision; }}").unwrap();
    for s in &states {
        let src = name(s);
        let bridge_busy = s.contains(&'B');
        let approaching = s.contains(&'U');
        for i in 0..n {
            let with = |c: char| {
                let mut t = s.clone();
                t[i] = c;
                name(&t)
            };
            let t = i + 1;
            let suf = &src[2..];
            match s[i] {
                'F' if !approaching => writeln!(m, "edge appr{t}_{suf}: {src} -> {} {{ player: T{t}; reset: y; }}", with('U')),
                'U' => {
                    writeln!(m, "edge stop{t}_{suf}: {src} -> {} {{ player: Ctrl; }}", with('S')).unwrap();
                    if bridge_busy {
                        writeln!(m, "edge enter{t}_{suf}: {src} -> crash {{ player: T{t}; guard: y >= 2; }}")
                    } else {
                        writeln!(m, "edge enter{t}_{suf}: {src} -> {} {{ player: T{t}; guard: y >= 2; reset: x; }}", with('B'))
                    }
                }
                'S' if !bridge_busy => writeln!(m, "edge go{t}_{suf}: {src} -> {} {{ player: Ctrl; reset: x; }}", with('B')),
                'B' => writeln!(m, "edge leave{t}_{suf}: {src} -> {} {{ player: T{t}; guard: x >= 1; }}", with('F')),
                _ => Ok(()),
            }
            .unwrap();
        }
    }
    let k = n.min(3);
    let trains = players("T", k).join(",");
    let queries = format!(
        "\
trains_collide:   <<{trains}>> F collision            => false
t1_crosses:       <<T1>> F crossing_1                 => false
ctrl_safe:        <<Ctrl>> G !collision               => true
ctrl_t1_cross:    <<Ctrl,T1>> F crossing_1            => true
some_collision:   [[ ]] F collision                   => true
ctrl_until:       <<Ctrl>> (!collision U crossing_1)  => false
collide_by2:      [[ ]] F<=2 collision                => true
collide_before2:  [[ ]] F<2 collision                 => false
t1_t2_next_safe:  <<T1,T2>> X !collision              => true
"
    );
    Instance { model: m, queries }
}

fn standoff(n: usize) -> Instance {
    // Per cowboy: 0 dead, 1 alive and unloaded, 2 alive and loaded.
    let mut states: Vec<Vec<u8>> = vec![vec![]];
    for _ in 0..n {
        states = states.into_iter().flat_map(|s| (0..3u8).map(move |c| [s.clone(), vec![c]].concat())).collect();
    }
    states.retain(|s| s.iter().any(|&c| c > 0));
    let name = |s: &[u8]| format!("s_{}", s.iter().map(|c| c.to_string()).collect::<String>());
    let ceiling = n.max(2);
    let mut m = String::new();
    writeln!(m, "// Standoff with {n} cowboys: 0 dead, 1 alive and unloaded, 2 alive and loaded.").unwrap();
    writeln!(m, "system {{ clocks: t, r; players: {}, Guns; ceiling: {ceiling}; }}", players("C", n).join(", ")).unwrap();
    for s in &states {
        let mut labels: Vec<String> = (0..n).filter(|&i| s[i] > 0).map(|i| format!("alive_{}", i + 1)).collect();
        if s.iter().filter(|&&c| c > 0).count() == 1 {
            labels.push("last_one".into());
        }
        let init = if s.iter().all(|&c| c == 1) { " init;" } else { "" };
        writeln!(m, "location {} {{{init} labels: {}; }}", name(s), labels.join(", ")).unwrap();
    }
    for s in &states {
        let src = name(s);
        let suf = &src[2..];
        for i in 0..n {
            if s[i] == 1 {
                let mut t = s.clone();
                t[i] = 2;
                writeln!(m, "edge reload{}_{suf}: {src} -> {} {{ player: Guns; guard: r >= 1; reset: r; }}", i + 1, name(&t))
                    .unwrap();
            }
            if s[i] == 2 {
                for j in (0..n).filter(|&j| j != i && s[j] > 0) {
                    let mut t = s.clone();
                    t[i] = 1;
                    t[j] = 0;
                    writeln!(
                        m,
                        "edge shoot{}at{}_{suf}: {src} -> {} {{ player: C{}; reset: r; }}",
                        i + 1,
                        j + 1,
                        name(&t),
                        i + 1
                    )
                    .unwrap();
                }
            }
        }
    }
    let h = n.div_ceil(2);
    let team = players("C", h).join(",");
    let any_alive = (1..=h).map(|i| format!("alive_{i}")).collect::<Vec<_>>().join(" || ");
    let k = n - 1;
    let queries = format!(
        "\
c1_alive_1s:      <<C1>> (alive_1 U t > 1)                     => false
half_survives:    <<Guns,{team}>> G ({any_alive})              => true
someone_last:     [[ ]] F last_one                             => true
always_last:      << >> F last_one                             => false
c1_wins_by_{k}:    <<Guns,C1>> F<={k} (last_one && alive_1)     => true
c1_wins_before_{k}: <<Guns,C1>> F<{k} (last_one && alive_1)     => false
c1_cannot_hide:   [[C1]] F !alive_1                            => true
guns_protect_c1:  <<Guns,C1>> G alive_1                        => true
"
    );
    Instance { model: m, queries }
}

fn phase_king(n: usize) -> Instance {
    let mut m = String::new();
    let names = players("n", n);
    writeln!(m, "// Phase king with {n} nodes: the king broadcasts a tiebreaker, then nodes update in turn.").unwrap();
    writeln!(m, "system {{ clocks: x; players: {}; ceiling: 1; }}", names.join(", ")).unwrap();
    let vals = |bits: u32| (0..n).map(|i| if bits >> i & 1 == 1 { '1' } else { '0' }).collect::<String>();
    let bcast = |k: usize, bits: u32| format!("k{}_{}_b", k + 1, vals(bits));
    let upd = |k: usize, bits: u32, j: usize, b: u32| format!("k{}_{}_u{}v{b}", k + 1, vals(bits), j + 1);
    let init_bits: u32 = 1 << 1;
    let cons3 = |bits: u32| (bits & 1) == (bits >> 1 & 1) && (bits >> 1 & 1) == (bits >> 2 & 1);
    for k in 0..n {
        for bits in 0..1u32 << n {
            let label = if cons3(bits) { " labels: cons3;" } else { "" };
            let init = if k == 0 && bits == init_bits { " init;" } else { "" };
            writeln!(m, "location {} {{ invariant: x <= 1;{init}{label} }}", bcast(k, bits)).unwrap();
            for j in 0..n {
                for b in 0..2 {
                    writeln!(m, "location {} {{ invariant: x <= 1;{label} }}", upd(k, bits, j, b)).unwrap();
                }
            }
        }
    }
    for k in 0..n {
        for bits in 0..1u32 << n {
            let src = bcast(k, bits);
            for b in 0..2 {
                writeln!(m, "edge king{}_{b}_{src}: {src} -> {} {{ player: n{}; reset: x; }}", k + 1, upd(k, bits, 0, b), k + 1)
                    .unwrap();
            }
            for j in 0..n {
                for b in 0..2u32 {
                    let src = upd(k, bits, j, b);
                    let next = |bits: u32| if j + 1 < n { upd(k, bits, j + 1, b) } else { bcast((k + 1) % n, bits) };
                    let mine = bits >> j & 1;
                    let same = (0..n).filter(|&i| bits >> i & 1 == mine).count();
                    let adopted = (bits & !(1 << j)) | (b << j);
                    writeln!(m, "edge adopt_{src}: {src} -> {} {{ player: n{}; reset: x; }}", next(adopted), j + 1).unwrap();
                    // Only a strict majority value may be kept against the king.
                    if mine != b && 2 * same > n {
                        writeln!(m, "edge keep_{src}: {src} -> {} {{ player: n{}; reset: x; }}", next(bits), j + 1).unwrap();
                    }
                }
            }
        }
    }
    let stable = if n <= 5 { "true" } else { "false" };
    let queries = format!(
        "\
some_consensus:   [[ ]] F cons3                                => true
all_consensus:    << >> F cons3                                => false
stay_consensus:   << >> G (!cons3 || <<n1,n2,n3>> G cons3)     => {stable}
trio_consensus:   <<n1,n2,n3>> F cons3                         => true
"
    );
    Instance { model: m, queries }
}
