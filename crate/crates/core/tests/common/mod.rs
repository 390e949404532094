#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use tatl::encoding::{check, CheckResult, Config, Mode};
use tatl::engine::Options;
use tatl::logic::{desugar, parse_formula, push_negations, Formula};
use tatl::model::{parse_model, Tmg};

pub const MODES: [Mode; 3] = [Mode::Equal, Mode::Incl, Mode::Expand];

/// The six engine configurations: three modes, with and without unsat.
pub fn configs() -> Vec<Config> {
    MODES.iter().flat_map(|&m| [Config::new(m, false), Config::new(m, true)]).collect()
}

pub fn config_name(c: Config) -> String {
    format!("{:?}{}", c.mode, if c.unsat { "+unsat" } else { "" }).to_lowercase()
}

pub fn core(text: &str, m: &Tmg) -> Formula {
    push_negations(&desugar(&parse_formula(text, m).unwrap_or_else(|e| panic!("{text}: {e}"))))
}

pub fn run(m: &Tmg, f: &Formula, cfg: Config) -> CheckResult {
    check(m, f, cfg, &Options::default()).unwrap()
}

/// Random model text: 1-2 clocks, 1-3 players, 2-4 locations, constants <= `kmax`,
/// no diagonal constraints. Labels `p` and `q` each occur at least once.
pub fn random_model_text(rng: &mut ChaCha8Rng, kmax: i64) -> String {
    let clocks: &[&str] = if rng.gen_bool(0.5) { &["x"] } else { &["x", "y"] };
    let players = rng.gen_range(1..=3);
    let locs = rng.gen_range(2..=4);
    let mut out = format!(
        "system {{ clocks: {}; players: {}; ceiling: {kmax}; }}\n",
        clocks.join(", "),
        (0..players).map(|p| format!("P{p}")).collect::<Vec<_>>().join(", ")
    );
    let mut labels: Vec<Vec<&str>> = (0..locs)
        .map(|_| {
            let mut l = Vec::new();
            if rng.gen_bool(0.4) {
                l.push("p");
            }
            if rng.gen_bool(0.3) {
                l.push("q");
            }
            l
        })
        .collect();
    for p in ["p", "q"] {
        if !labels.iter().any(|l| l.contains(&p)) {
            let i = rng.gen_range(0..locs);
            labels[i].push(p);
        }
    }
    for (i, l) in labels.iter().enumerate() {
        out += &format!("location l{i} {{");
        if rng.gen_bool(0.4) {
            let c = clocks.choose(rng).unwrap();
            out += &format!(" invariant: {c} <= {};", rng.gen_range(1..=kmax));
        }
        if i == 0 {
            out += " init;";
        }
        if !l.is_empty() {
            out += &format!(" labels: {};", l.join(", "));
        }
        out += " }\n";
    }
    for e in 0..rng.gen_range(1..=6) {
        out += &format!(
            "edge a{e}: l{} -> l{} {{ player: P{};",
            rng.gen_range(0..locs),
            rng.gen_range(0..locs),
            rng.gen_range(0..players)
        );
        let guards: Vec<String> = (0..rng.gen_range(0..=2))
            .map(|_| {
                let op = ["<", "<=", "==", ">=", ">"].choose(rng).unwrap();
                format!("{} {op} {}", clocks.choose(rng).unwrap(), rng.gen_range(0..=kmax))
            })
            .collect();
        if !guards.is_empty() {
            out += &format!(" guard: {};", guards.join(" && "));
        }
        let resets: Vec<&str> = clocks.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
        if !resets.is_empty() {
            out += &format!(" reset: {};", resets.join(", "));
        }
        out += " }\n";
    }
    out
}

pub fn random_model(rng: &mut ChaCha8Rng, kmax: i64) -> Tmg {
    let text = random_model_text(rng, kmax);
    parse_model(&text).unwrap_or_else(|e| panic!("{e}\n{text}"))
}

fn coalition(rng: &mut ChaCha8Rng, m: &Tmg) -> String {
    m.players.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect::<Vec<_>>().join(",")
}

/// A random surface formula over `p`, `q` and model clocks, nesting up to `depth`.
pub fn random_formula(rng: &mut ChaCha8Rng, m: &Tmg, depth: u32) -> String {
    let leaf = |rng: &mut ChaCha8Rng| match rng.gen_range(0..6) {
        0 => "p".to_string(),
        1 => "q".to_string(),
        2 => "!p".to_string(),
        3 => format!("{} <= {}", m.clocks[0], rng.gen_range(0..=3)),
        4 => "true".to_string(),
        _ => "!q".to_string(),
    };
    if depth == 0 {
        return leaf(rng);
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, m, depth - 1);
    let (open, close) = if rng.gen_bool(0.5) { ("<<", ">>") } else { ("[[", "]]") };
    let s = coalition(rng, m);
    match rng.gen_range(0..9) {
        0 => format!("{open}{s}{close} F {}", sub(rng)),
        1 => format!("{open}{s}{close} G {}", sub(rng)),
        2 => format!("{open}{s}{close} ({} U {})", sub(rng), sub(rng)),
        3 => format!("{open}{s}{close} X {}", sub(rng)),
        4 => format!("{open}{s}{close} F<={} {}", rng.gen_range(0..=3), sub(rng)),
        5 => format!("z{depth}.({open}{s}{close} F (z{depth} >= {} && {}))", rng.gen_range(1..=2), sub(rng)),
        6 => format!("!({})", sub(rng)),
        7 => format!("({}) && ({})", sub(rng), sub(rng)),
        _ => format!("({}) || ({})", sub(rng), sub(rng)),
    }
}
