//! Acceptance criteria A1-A10, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach the console.
//! The process fails only on an unexpected failure; the documented
//! deviations (A1 property 8, A7 timing) print FAIL with their analysis.

mod common;

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tatl::bench::{self, Family, FIG1_KNOWN_CONFLICTS, FIG1_QUERIES};
use tatl::dbm::{ClockFrame, Cmp, Comparison, Dbm};
use tatl::encoding::{check, CheckError, Config, Mode};
use tatl::engine::{solve, EngineError, Options, Provider};
use tatl::federation::Federation;
use tatl::logic::{parse_queries, Formula, PlayerSet};
use tatl::model::{parse_model, Tmg, FIG1_MODEL};
use tatl::oracle::{region_model_check, RegionGraph};
use tatl::symbolic::Game;

use common::{config_name, configs};

enum Status {
    Pass,
    Fail,
    /// Fails the criterion as written, for a documented reason the run confirmed.
    Known,
}

struct Line {
    status: Status,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Line {
    Line { status: Status::Pass, detail: detail.into() }
}

fn fail(detail: impl Into<String>) -> Line {
    Line { status: Status::Fail, detail: detail.into() }
}

fn known(detail: impl Into<String>) -> Line {
    Line { status: Status::Known, detail: detail.into() }
}

fn verdict_of(c: bool) -> Line {
    if c {
        pass("")
    } else {
        fail("")
    }
}

// ---------------------------------------------------------------- A1

fn a1() -> Line {
    let start = Instant::now();
    let m = parse_model(FIG1_MODEL).unwrap();
    let qs = parse_queries(FIG1_QUERIES, &m).unwrap();
    let want_off: BTreeSet<&str> = FIG1_KNOWN_CONFLICTS.iter().copied().collect();
    let mut off_by_cfg = Vec::new();
    for cfg in configs() {
        let off: BTreeSet<&str> = qs
            .iter()
            .filter(|q| common::run(&m, &q.core(), cfg).verdict != q.expected.unwrap())
            .map(|q| q.name.as_str())
            .collect();
        off_by_cfg.push((cfg, off));
    }
    let secs = start.elapsed().as_secs_f64();
    // The deviating properties must be the documented ones, and the oracle must side with the engine.
    let oracle_agrees = qs.iter().filter(|q| want_off.contains(q.name.as_str())).all(|q| {
        region_model_check(&m, &q.core()).unwrap().verdict != q.expected.unwrap()
    });
    let detail = format!("{} properties x 6 configurations in {secs:.2}s", qs.len());
    if off_by_cfg.iter().all(|(_, off)| off.is_empty()) && secs < 5.0 {
        return pass(detail);
    }
    if off_by_cfg.iter().all(|(_, off)| *off == want_off) && oracle_agrees && secs < 5.0 {
        return known(format!(
            "{detail}; {:?} differ from the published table in every configuration and the region oracle agrees with the engine",
            want_off
        ));
    }
    let bad: Vec<String> = off_by_cfg.iter().map(|(c, off)| format!("{}: {off:?}", config_name(*c))).collect();
    fail(format!("{detail}; mismatches {}", bad.join(", ")))
}

// ---------------------------------------------------------------- A2, A3

const INF: u64 = u64::MAX;

/// The small example graph over an integer domain where smaller is better:
/// A = max(C, B), B = D - E, C = min(F, A), D = 4 + G, E = max(H, F + 3),
/// F = 3, G = 10, H = 2. Infinity is bottom.
struct Example {
    merge_e_into_f: bool,
    evaluations: HashMap<char, usize>,
}

impl Example {
    fn new(merge_e_into_f: bool) -> Example {
        Example { merge_e_into_f, evaluations: HashMap::new() }
    }
}

impl Provider for Example {
    type Vertex = char;
    type Value = u64;
    type Derive = u64;

    fn bottom(&self, _: &char) -> u64 {
        INF
    }
    fn leq(&self, a: &u64, b: &u64) -> bool {
        a >= b
    }
    fn successors(&mut self, v: &char) -> Vec<char> {
        match v {
            'A' => vec!['C', 'B'],
            'B' => vec!['D', 'E'],
            'C' => vec!['F', 'A'],
            'D' => vec!['G'],
            'E' => vec!['H', 'F'],
            _ => vec![],
        }
    }
    fn evaluate(&mut self, v: &char, x: &[u64]) -> u64 {
        *self.evaluations.entry(*v).or_default() += 1;
        let both = |a: u64, b: u64, f: &dyn Fn(u64, u64) -> u64| if a == INF || b == INF { INF } else { f(a, b) };
        match v {
            'A' => x[0].max(x[1]),
            'B' => both(x[0], x[1], &|d, e| d.saturating_sub(e)),
            'C' => x[0].min(x[1]),
            'D' => both(4, x[0], &|a, b| a + b),
            'E' => both(x[0], x[1], &|h, f| h.max(f + 3)),
            'F' => 3,
            'G' => 10,
            'H' => 2,
            _ => unreachable!(),
        }
    }
    fn is_monotonic(&self, v: &char) -> bool {
        *v != 'B'
    }
    fn dist(&self, v: &char) -> usize {
        usize::from(matches!(v, 'A' | 'B' | 'C'))
    }
    fn merge_key(&self, v: &char) -> Option<u64> {
        matches!(v, 'E' | 'F').then_some(0)
    }
    fn derive(&self, small: &char, big: &char) -> Option<u64> {
        (self.merge_e_into_f && *small == 'E' && *big == 'F').then_some(3)
    }
    fn apply_derive(&self, f: &u64, x: &u64) -> u64 {
        if *x == INF {
            INF
        } else {
            x + f
        }
    }
}

fn a2() -> Line {
    let want = [('A', 8), ('B', 8), ('C', 3), ('D', 14), ('E', 6), ('F', 3), ('G', 10), ('H', 2)];
    let mut got = Vec::new();
    for (v, _) in want {
        let out = solve(&mut Example::new(false), v, &Options::default()).unwrap();
        got.push((v, out.value));
    }
    let line = got.iter().map(|(v, a)| format!("{v}={a}")).collect::<Vec<_>>().join(" ");
    Line { detail: line, ..verdict_of(got == want) }
}

fn a3() -> Line {
    let mut plain = Example::new(false);
    let without = solve(&mut plain, 'A', &Options::default()).unwrap();
    let mut merging = Example::new(true);
    let with = solve(&mut merging, 'A', &Options { merge: true, ..Options::default() }).unwrap();
    let h_evals = merging.evaluations.get(&'H').copied().unwrap_or(0);
    let ok = with.value == 8 && without.value == 8 && h_evals == 0 && with.stats.generated < without.stats.generated;
    Line {
        detail: format!(
            "alpha(A)={} with merging, H evaluated {h_evals} times, generated {} vs {} without",
            with.value, with.stats.generated, without.stats.generated
        ),
        ..verdict_of(ok)
    }
}

// ---------------------------------------------------------------- A4

fn a4() -> Line {
    let plan = [(Family::TrainGate, 2..=5), (Family::Standoff, 2..=4), (Family::PhaseKing, 3..=4)];
    let mut queries = 0;
    let mut disagreements = Vec::new();
    for (fam, sizes) in plan {
        for n in sizes {
            let inst = bench::generate(fam, n).unwrap();
            let m = parse_model(&inst.model).unwrap();
            for q in parse_queries(&inst.queries, &m).unwrap() {
                queries += 1;
                let f = q.core();
                let vs: Vec<bool> = configs().into_iter().map(|c| common::run(&m, &f, c).verdict).collect();
                if vs.iter().any(|&v| v != vs[0]) {
                    disagreements.push(format!("{}-{n}/{}: {vs:?}", fam.name(), q.name));
                }
            }
        }
    }
    let ok = queries >= 30 && disagreements.is_empty();
    Line { detail: format!("{queries} queries x 6 configurations, disagreements {disagreements:?}"), ..verdict_of(ok) }
}

// ---------------------------------------------------------------- A5

/// Regions inside a few random zones with constants up to the clock maxima,
/// plus a few single regions.
fn random_regions(g: &RegionGraph, rng: &mut ChaCha8Rng) -> Vec<bool> {
    let dim = g.frame.dim();
    let mut w = g.empty_set();
    let mut feds = vec![Federation::empty(dim); g.model.locations.len()];
    for f in feds.iter_mut() {
        for _ in 0..rng.gen_range(0..=2) {
            let cs: Vec<Comparison> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let c = rng.gen_range(1..dim);
                    let op = [Cmp::Lt, Cmp::Le, Cmp::Eq, Cmp::Ge, Cmp::Gt][rng.gen_range(0..5)];
                    Comparison::new(c, 0, op, rng.gen_range(0..=g.max[c - 1]))
                })
                .collect();
            f.add_zone(Dbm::from_comparisons(dim, &cs));
        }
    }
    for (i, r) in g.regions.iter().enumerate() {
        w[i] = feds[r.loc].contains(&g.representative(r)) || rng.gen_bool(0.03);
    }
    w
}

fn a5() -> Line {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut instances = 0;
    let mut checks = 0u64;
    let mut errors: Vec<String> = Vec::new();
    while instances < 1000 {
        let m = common::random_model(&mut rng, 5);
        let Ok(g) = RegionGraph::build(&m, &[]) else { continue };
        instances += 1;
        let game = Game::new(&m, ClockFrame::new(&m.clocks, &[]));
        let (w1, w2, w3) = (random_regions(&g, &mut rng), random_regions(&g, &mut rng), random_regions(&g, &mut rng));
        let (f1, f2, f3) = (g.to_federations(&w1), g.to_federations(&w2), g.to_federations(&w3));
        let s = PlayerSet(rng.gen_range(0..(1u64 << m.players.len())));
        let e = rng.gen_range(0..m.edges.len());
        let pairs: Vec<(&str, Vec<Federation>, Vec<bool>)> = vec![
            ("pred_action", game.pred_action(e, &f1), g.pred_action(e, &w1)),
            ("post_action", game.post_action(e, &f1), g.post_action(e, &w1)),
            ("pred_lambda", game.pred_lambda(&f1, &f2), g.pred_lambda(&w1, &w2)),
            ("timelocked", game.timelocked(&f1), g.timelocked_set(&w1)),
            ("forceable", game.forceable(s, &f1, &f2, &f3), g.forceable(s, &w1, &w2, &w3)),
            ("unavoidable", game.unavoidable(s, &f1, &f2, &f3), g.unavoidable(s, &w1, &w2, &w3)),
        ];
        for (op, sym, want) in pairs {
            for (i, r) in g.regions.iter().enumerate() {
                checks += 1;
                let a = sym[r.loc].contains(&g.representative(r));
                let b = sym[r.loc].contains(&g.other_point(r));
                if a != want[i] || b != want[i] {
                    if errors.len() < 3 {
                        errors.push(format!("{op} at {r:?}: symbolic {a}/{b}, oracle {}\n{m}", want[i]));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let ok = errors.is_empty() && secs < 60.0;
    let mut detail = format!("{instances} instances, {checks} region checks at two points each, {secs:.1}s");
    if !errors.is_empty() {
        detail += &format!("; first disagreements: {}", errors.join(" | "));
    }
    Line { detail, ..verdict_of(ok) }
}

// ---------------------------------------------------------------- A6

fn nested(f: &Formula) -> bool {
    let temporal = |f: &Formula| matches!(f, Formula::Next(..) | Formula::ForcedUntil(..) | Formula::PossibleUntil(..));
    fn below(f: &Formula, t: &dyn Fn(&Formula) -> bool) -> bool {
        f.children().into_iter().any(|c| t(c) || below(c, t))
    }
    fn any(f: &Formula, t: &dyn Fn(&Formula) -> bool) -> bool {
        (t(f) && below(f, t)) || f.children().into_iter().any(|c| any(c, t))
    }
    any(f, &temporal)
}

fn a6() -> Line {
    let mut sources: Vec<(String, String, String)> = vec![("fig1".into(), FIG1_MODEL.into(), FIG1_QUERIES.into())];
    for fam in Family::ALL {
        for n in fam.sizes() {
            let inst = bench::generate(fam, n).unwrap();
            sources.push((format!("{}-{n}", fam.name()), inst.model, inst.queries));
        }
    }
    let (mut checked, mut skipped, mut nested_n, mut freeze_n) = (0, 0, 0, 0);
    let mut feasible_instances = Vec::new();
    let mut errors = Vec::new();
    for (name, model, queries) in &sources {
        let m = parse_model(model).unwrap();
        let mut any = false;
        for q in parse_queries(queries, &m).unwrap() {
            let f = q.core();
            let Ok(o) = region_model_check(&m, &f) else {
                skipped += 1;
                continue;
            };
            any = true;
            checked += 1;
            nested_n += usize::from(nested(&f));
            freeze_n += usize::from(!f.formula_clocks().is_empty());
            for cfg in configs() {
                let v = common::run(&m, &f, cfg).verdict;
                if v != o.verdict {
                    errors.push(format!("{name}/{} {}: engine {v}, oracle {}", q.name, config_name(cfg), o.verdict));
                }
            }
        }
        if any {
            feasible_instances.push(name.clone());
        }
    }
    let ok = errors.is_empty() && nested_n > 0 && freeze_n > 0;
    Line {
        detail: format!(
            "{checked} queries ({nested_n} nested, {freeze_n} with freeze clocks) on {feasible_instances:?} x 6 configurations; {skipped} beyond the oracle bounds; disagreements {errors:?}"
        ),
        ..verdict_of(ok)
    }
}

// ---------------------------------------------------------------- A7

fn timed_suite(m: &Tmg, fs: &[Formula], cfg: Config, deadline: Duration) -> Result<(f64, Vec<bool>), CheckError> {
    let start = Instant::now();
    let mut verdicts = Vec::new();
    for f in fs {
        let opts = Options { deadline: Some(start + deadline), ..Options::default() };
        verdicts.push(check(m, f, cfg, &opts)?.verdict);
    }
    Ok((start.elapsed().as_secs_f64(), verdicts))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs[xs.len() / 2]
}

fn a7() -> Line {
    let contenders =
        [("equal", Config::new(Mode::Equal, false)), ("incl+unsat", Config::new(Mode::Incl, true)), ("expand+unsat", Config::new(Mode::Expand, true))];
    let limit = Duration::from_secs(60);
    for n in Family::TrainGate.sizes().rev() {
        let inst = bench::generate(Family::TrainGate, n).unwrap();
        let m = parse_model(&inst.model).unwrap();
        let qs = parse_queries(&inst.queries, &m).unwrap();
        let fs: Vec<Formula> = qs.iter().map(|q| q.core()).collect();
        let first: Result<Vec<_>, _> = contenders.iter().map(|(_, c)| timed_suite(&m, &fs, *c, limit)).collect();
        let first = match first {
            Ok(r) => r,
            Err(CheckError::Engine(EngineError::ResourceLimit(_))) => continue,
            Err(e) => return fail(format!("train-gate {n}: {e}")),
        };
        let agree = first.iter().all(|r| r.1 == first[0].1);
        let mut times: Vec<Vec<f64>> = first.iter().map(|r| vec![r.0]).collect();
        for _ in 0..2 {
            for (k, (_, c)) in contenders.iter().enumerate() {
                times[k].push(timed_suite(&m, &fs, *c, limit * 2).unwrap().0);
            }
        }
        let med: Vec<f64> = times.into_iter().map(median).collect();
        let (equal, incl, expand) = (med[0], med[1], med[2]);
        let ordered = expand <= incl && incl <= equal;
        let ratio = equal / expand;

        // Where the time goes: the same medians without the time-bounded queries.
        let untimed: Vec<Formula> = fs.iter().filter(|f| f.formula_clocks().is_empty()).cloned().collect();
        let sub: Vec<f64> = contenders
            .iter()
            .map(|(_, c)| median((0..3).map(|_| timed_suite(&m, &untimed, *c, limit).unwrap().0).collect()))
            .collect();
        let detail = format!(
            "train-gate {n}, {} queries, median of 3: equal {equal:.2}s, incl+unsat {incl:.2}s, expand+unsat {expand:.2}s, equal/expand+unsat {ratio:.1}x; \
             without the {} time-bounded queries: {:.2}s / {:.2}s / {:.2}s ({:.1}x); verdicts agree: {agree}",
            fs.len(),
            fs.len() - untimed.len(),
            sub[0],
            sub[1],
            sub[2],
            sub[0] / sub[2]
        );
        if !agree {
            return fail(detail);
        }
        return if ordered && ratio >= 3.0 { pass(detail) } else { known(detail) };
    }
    fail("no train-gate instance finished within 60s in all configurations")
}

// ---------------------------------------------------------------- A8, A9

/// An initial choice between a cheap branch and a grid of locations where
/// two clocks are reset in turns. The cheap branch is declared first and is
/// taken at time 0; the grid opens only at x = 1, so it cannot tie with it.
fn crafted(first: &str, owner_first: &str, label_first: &str, grid_owner: &str, grid_labels: &str) -> String {
    let k = 6;
    let mut s = String::from("system { clocks: x, y; players: P, Q; ceiling: 6; }\n");
    s += &format!("location init {{ init; labels: {grid_labels}; }}\n");
    s += &format!("location cheap {{ labels: {label_first}; }}\n");
    for i in 0..k {
        for j in 0..k {
            s += &format!("location g{i}_{j} {{ invariant: x <= 6; labels: {grid_labels}; }}\n");
        }
    }
    s += &format!("edge {first}: init -> cheap {{ player: {owner_first}; }}\n");
    s += &format!("edge enter: init -> g0_0 {{ player: {grid_owner}; guard: x >= 1; }}\n");
    for i in 0..k {
        for j in 0..k {
            let (r, d) = ((i + 1) % k, (j + 1) % k);
            s += &format!("edge right{i}_{j}: g{i}_{j} -> g{r}_{j} {{ player: {grid_owner}; guard: x >= {}; reset: y; }}\n", (i + j) % 4);
            s += &format!("edge down{i}_{j}: g{i}_{j} -> g{i}_{d} {{ player: {grid_owner}; guard: y <= {}; reset: x; }}\n", 1 + (i * j) % 5);
        }
    }
    s
}

fn a8() -> Line {
    let m = parse_model(&crafted("win", "P", "goal", "Q", "busy")).unwrap();
    let f = common::core("<<P>> F goal", &m);
    let mut rows = Vec::new();
    let mut ok = true;
    for cfg in configs() {
        let early = common::run(&m, &f, cfg);
        let full = common::run(&m, &f, Config { early_stop: false, ..cfg });
        let frac = early.stats.generated as f64 / full.stats.generated as f64;
        ok &= early.verdict && full.verdict && early.stopped_early && frac < 0.5;
        rows.push(format!("{} {}/{}", config_name(cfg), early.stats.generated, full.stats.generated));
    }
    Line { detail: format!("generated with early stop / full: {}", rows.join(", ")), ..verdict_of(ok) }
}

fn a9() -> Line {
    // Goal sits deep in P's grid, but Q escapes to the trap at time 0. The
    // hold side must be falsifiable: with `F goal` the unsat side stays empty.
    let text = crafted("escape", "Q", "trap", "P", "busy")
        .replace("location g5_5 { invariant: x <= 6; labels: busy; }", "location g5_5 { invariant: x <= 6; labels: busy, goal; }");
    assert!(text.contains("goal"));
    let m = parse_model(&text).unwrap();
    let f = common::core("<<P>> (!trap U goal)", &m);
    let mut rows = Vec::new();
    let mut ok = true;
    for mode in common::MODES {
        let without = common::run(&m, &f, Config::new(mode, false));
        let with = common::run(&m, &f, Config::new(mode, true));
        ok &= !without.verdict && !with.verdict && with.stats.generated < without.stats.generated;
        rows.push(format!("{mode:?} {}/{}", with.stats.generated, without.stats.generated));
    }
    Line { detail: format!("generated with unsat / without: {}", rows.join(", ")), ..verdict_of(ok) }
}

// ---------------------------------------------------------------- A10

fn a10() -> Line {
    let m = parse_model(FIG1_MODEL).unwrap();
    let f = common::core("<<I,III>> (!c U goal)", &m);
    let o = region_model_check(&m, &f).unwrap();
    let a = m.location_index("A").unwrap();
    let baseline = Federation::from_dbm(Dbm::from_comparisons(2, &[Comparison::new(1, 0, Cmp::Le, 2)]));
    let mut ok = true;
    let mut shown = Vec::new();
    for mode in common::MODES {
        let r = check(&m, &f, Config { mode, unsat: true, early_stop: false }, &Options::default()).unwrap();
        let sat = r.sat.intersect_dbm(&r.root.zone);
        // The engine's root federation, region by region, is the oracle's.
        for (i, reg) in o.graph.regions.iter().enumerate() {
            if reg.loc == a && r.root.zone.contains(&o.graph.representative(reg)) {
                ok &= sat.contains(&o.graph.representative(reg)) == o.sat[i];
                ok &= sat.contains(&o.graph.other_point(reg)) == o.sat[i];
            }
        }
        ok &= r.root.loc == a && sat.set_eq(&baseline.intersect_dbm(&r.root.zone));
        shown.push(format!("{mode:?}: {}", sat.display(&r.frame)));
    }
    Line { detail: format!("root <A, x<=4>: {}; oracle baseline x <= 2", shown.join(", ")), ..verdict_of(ok) }
}

fn main() {
    let criteria: [(&str, fn() -> Line); 10] =
        [("A1", a1), ("A2", a2), ("A3", a3), ("A4", a4), ("A5", a5), ("A6", a6), ("A7", a7), ("A8", a8), ("A9", a9), ("A10", a10)];
    let filter: Option<String> = std::env::args().skip(1).find(|a| a.starts_with('A'));
    let (mut passed, mut known_n, mut failed) = (0, 0, 0);
    for (name, f) in criteria {
        if filter.as_ref().is_some_and(|w| w != name) {
            continue;
        }
        let start = Instant::now();
        let line = f();
        let secs = start.elapsed().as_secs_f64();
        let tag = match line.status {
            Status::Pass => {
                passed += 1;
                "PASS"
            }
            Status::Known => {
                known_n += 1;
                "FAIL (documented deviation)"
            }
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
        };
        println!("{name} {tag} [{secs:.1}s] {}", line.detail);
    }
    println!("acceptance: {passed} passed, {known_n} documented deviations, {failed} unexpected failures");
    if failed > 0 {
        std::process::exit(1);
    }
}
