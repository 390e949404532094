mod common;

use std::collections::HashMap;
use std::path::PathBuf;
use std::process::Command;

use tatl::bench::{self, Family};
use tatl::encoding::{Config, Mode};
use tatl::logic::{parse_queries, PlayerSet};
use tatl::model::{parse_model, FIG1_MODEL};
use tatl::oracle::{OracleError, RegionGraph};

fn fig1_graph() -> RegionGraph {
    RegionGraph::build(&parse_model(FIG1_MODEL).unwrap(), &[]).unwrap()
}

/// Regions at `loc` satisfying `pred` on (integer part, fraction is zero).
fn at(g: &RegionGraph, loc: &str, pred: impl Fn(i64, bool) -> bool) -> Vec<usize> {
    let l = g.model.location_index(loc).unwrap();
    (0..g.len()).filter(|&i| g.regions[i].loc == l && pred(g.regions[i].ints[0], g.regions[i].ranks[0] == 0)).collect()
}

fn set(g: &RegionGraph, pred: impl Fn(usize) -> bool) -> Vec<bool> {
    (0..g.len()).map(pred).collect()
}

#[test]
fn published_profile_witnesses_the_until() {
    let g = fig1_graph();
    let m = &g.model;
    let (i, iii) = (m.player_index("I").unwrap(), m.player_index("III").unwrap());
    let e = |a: &str| m.action_index(a).unwrap();
    let mut profile = HashMap::new();
    for r in at(&g, "A", |_, _| true) {
        profile.insert((i, r), e("a1"));
    }
    for r in at(&g, "B", |k, int| k == 5 && int) {
        profile.insert((i, r), e("a2"));
    }
    for r in at(&g, "B", |k, int| k < 2 || (k == 2 && int)) {
        profile.insert((iii, r), e("a3"));
    }
    for r in at(&g, "D", |_, _| true) {
        profile.insert((iii, r), e("a6"));
    }
    let c = m.location_index("C").unwrap();
    let goal = m.location_index("Goal").unwrap();
    let w1 = set(&g, |r| g.regions[r].loc != c);
    let w2 = set(&g, |r| g.regions[r].loc == goal);
    let s = PlayerSet::from_indices([i, iii]);
    assert_eq!(g.check_strategy_witness(s, &profile, &w1, &w2, g.initial()), Ok(true));

    // III too late at B: the run may be sent to C by I's forced move at x = 5.
    for r in at(&g, "B", |_, _| true) {
        profile.remove(&(iii, r));
    }
    assert_eq!(g.check_strategy_witness(s, &profile, &w1, &w2, g.initial()), Ok(false));
}

#[test]
fn empty_profile_of_the_empty_coalition() {
    let g = fig1_graph();
    let goal = g.model.location_index("Goal").unwrap();
    let w1 = g.full_set();
    let w2 = set(&g, |r| g.regions[r].loc == goal);
    // Nobody is obliged to leave C.
    let r = g.check_strategy_witness(PlayerSet::default(), &HashMap::new(), &w1, &w2, g.initial());
    assert_eq!(r, Ok(false));
}

#[test]
fn waiting_at_a_time_lock_is_not_a_strategy() {
    let g = fig1_graph();
    let i = g.model.player_index("I").unwrap();
    let w = g.full_set();
    let r = g.check_strategy_witness(PlayerSet::from_indices([i]), &HashMap::new(), &w, &w, g.initial());
    assert!(matches!(r, Err(OracleError::InvalidProfile(_))), "{r:?}");
    let bad = HashMap::from([((i, 0), g.model.action_index("a5").unwrap())]);
    assert!(g.check_strategy_witness(PlayerSet::from_indices([i]), &bad, &w, &w, g.initial()).is_err());
}

fn shipped(fam: Family, n: usize, cfg: Config) -> Vec<(String, bool, bool, usize)> {
    let inst = bench::generate(fam, n).unwrap();
    let m = parse_model(&inst.model).unwrap();
    parse_queries(&inst.queries, &m)
        .unwrap()
        .into_iter()
        .map(|q| {
            let r = common::run(&m, &q.core(), cfg);
            (q.name, q.expected.expect("benchmark queries carry verdicts"), r.verdict, r.stats.generated)
        })
        .collect()
}

#[test]
fn every_shipped_benchmark_verdict() {
    for fam in Family::ALL {
        for n in fam.sizes() {
            for (name, want, got, _) in shipped(fam, n, Config::new(Mode::Expand, true)) {
                assert_eq!(got, want, "{} {n} {name}", fam.name());
            }
        }
    }
}

#[test]
fn documented_examples() {
    let verdict = |fam, n, q: &str| {
        shipped(fam, n, Config::new(Mode::Incl, false)).into_iter().find(|r| r.0 == q).map(|r| r.2).unwrap()
    };
    assert!(!verdict(Family::TrainGate, 3, "t1_crosses"));
    assert!(!verdict(Family::Standoff, 3, "c1_alive_1s"));
    assert!(verdict(Family::PhaseKing, 3, "some_consensus"));
    assert!(verdict(Family::PhaseKing, 5, "stay_consensus"));
    assert!(!verdict(Family::PhaseKing, 6, "stay_consensus"));
}

#[test]
fn generation_is_deterministic_and_bounded() {
    for fam in Family::ALL {
        let n = *fam.sizes().start();
        assert_eq!(bench::generate(fam, n).unwrap(), bench::generate(fam, n).unwrap());
        assert!(bench::generate(fam, *fam.sizes().end() + 1).is_err());
        assert!(bench::generate(fam, 1).is_err());
        assert_eq!(fam.name().parse::<Family>().unwrap(), fam);
    }
    assert!("no-such-family".parse::<Family>().is_err());
}

#[test]
fn runs_are_deterministic() {
    for cfg in common::configs() {
        let a = shipped(Family::TrainGate, 3, cfg);
        let b = shipped(Family::TrainGate, 3, cfg);
        assert_eq!(a, b, "{}", common::config_name(cfg));
    }
}

struct Scratch(PathBuf);

impl Scratch {
    fn new(tag: &str) -> Scratch {
        let p = std::env::temp_dir().join(format!("tatl-test-{tag}-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&p);
        std::fs::create_dir_all(&p).unwrap();
        Scratch(p)
    }
    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.0.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

fn tatl(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tatl")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn cli_bench_then_check() {
    let dir = Scratch::new("bench");
    let d = dir.0.to_str().unwrap();
    let (code, out, _) = tatl(&["bench", "standoff", "2", "--out", d]);
    assert_eq!(code, 0);
    let files: Vec<&str> = out.lines().collect();
    assert_eq!(files.len(), 2);
    assert!(files[0].ends_with("standoff-2.tmg") && files[1].ends_with("standoff-2.tatl"));

    let (code, out, _) = tatl(&["check", "--model", files[0], "--queries", files[1], "--unsat", "--oracle"]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out.lines().count(), 8);
    assert!(out.lines().all(|l| l.ends_with("oracle=agree")), "{out}");

    let (code, out, _) =
        tatl(&["check", "--model", files[0], "--queries", files[1], "--engine", "expand", "--stats", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["schema"], "tatl-report/1");
    assert_eq!(v["config"]["engine"], "expand");
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 8);
    for r in results {
        assert!(r["stats"]["generated"].as_u64().unwrap() > 0);
        assert_eq!(r["matches"], true);
        assert!(["satisfied", "not-satisfied"].contains(&r["verdict"].as_str().unwrap()));
    }
    assert_eq!(v["summary"]["exit_code"], 0);

    let (code, _, err) = tatl(&["bench", "standoff", "99", "--out", d]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn cli_exit_codes() {
    let dir = Scratch::new("codes");
    let model = dir.file("fig1.tmg", FIG1_MODEL);
    let m = model.to_str().unwrap();
    let check = |q: &str, extra: &[&str]| {
        let qs = dir.file("q.tatl", q);
        let mut args = vec!["check", "--model", m, "--queries", qs.to_str().unwrap()];
        args.extend_from_slice(extra);
        tatl(&args)
    };
    assert_eq!(check("", &[]), (0, String::new(), String::new()));
    let (code, out, _) = check("ok: <<II>> F goal => true\nno: <<I>> F goal => true\n", &[]);
    assert_eq!((code, out.as_str()), (1, "ok satisfied\nno not-satisfied MISMATCH\n"));
    assert_eq!(check("p: <<II>> F goal\n", &[]).0, 0);
    assert_eq!(check("p: <<II>> F\n", &[]).0, 2);
    assert_eq!(check("p: <<II>> F goal => true\n", &["--max-vertices", "1"]).0, 3);
    let bad = dir.file("bad.tmg", "system { clocks: x; }");
    let (code, _, err) = tatl(&["check", "--model", bad.to_str().unwrap(), "--queries", m]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.tmg"));
    let (code, out, _) = check(bench::FIG1_QUERIES, &["--oracle"]);
    assert_eq!(code, 1);
    let wrong: Vec<&str> = out.lines().filter(|l| l.contains("MISMATCH")).collect();
    assert_eq!(wrong.len(), bench::FIG1_KNOWN_CONFLICTS.len());
    assert!(out.lines().all(|l| l.ends_with("oracle=agree")), "{out}");
}
