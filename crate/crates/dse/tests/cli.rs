mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use common::*;
use serde_json::json;
use theta_dse::commands::{cmd_compare, cmd_run};
use theta_dse::io::{read_json, read_trace_csv, trace_path, Aggregate, Summary, AGGREGATE_JSON};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(CLI).args(args).current_dir(cwd).env_remove("THETA_DSE_SEED").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Reads `(evaluations, best_reward)` pairs straight from the CSV text.
fn scan_best(path: &Path) -> Vec<(u64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let ei = header.iter().position(|h| *h == "evaluations").unwrap();
    let bi = header.iter().position(|h| *h == "best_reward").unwrap();
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[ei].parse().unwrap(), f[bi].parse().unwrap())
        })
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[test]
fn minimal_config_runs_to_the_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "space": {"preset": "1x2"},
        "env": {"synthetic": {}},
        "method": {"resonance": {"architecture": "mlp:32", "hyper": {"max_evaluations": 64}}},
        "seeds": [1],
        "output_dir": "out"
    });
    fs::write(dir.path().join("exp.json"), cfg.to_string()).unwrap();
    let o = cli(&["run", "--config", "exp.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let traces: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().starts_with("trace_"))
        .collect();
    assert_eq!(traces.len(), 1);
    let s: Summary = read_json(&out.join("summary_seed1.json")).unwrap();
    assert_eq!(s.best_reward, Some(0.0));
    assert_eq!(s.reached_optimum, Some(true));
    assert!(out.join("checkpoint_seed1.bin").is_file());
    assert!(out.join("aggregate.csv").is_file());
}

#[test]
fn eight_seeds_give_eight_distinct_traces() {
    let dir = tempfile::tempdir().unwrap();
    let seeds: Vec<u64> = (1..=8).collect();
    let exp = synthetic_experiment("4x6", dir.path(), &seeds, 80);
    let report = cmd_run(&exp, &mut std::io::sink()).unwrap();
    assert_eq!(report.seeds.len(), 8);
    let mut contents: Vec<Vec<u8>> = seeds.iter().map(|s| fs::read(trace_path(dir.path(), *s)).unwrap()).collect();
    contents.sort();
    contents.dedup();
    assert_eq!(contents.len(), 8);
}

#[test]
fn aggregate_matches_an_independent_scan_of_the_traces() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = [3, 4, 5];
    let exp = synthetic_experiment("6x10", dir.path(), &seeds, 1500);
    cmd_run(&exp, &mut std::io::sink()).unwrap();
    let agg: Aggregate = read_json(&dir.path().join(AGGREGATE_JSON)).unwrap();

    for budget in [10, 100, 1000, 1500] {
        let per_seed: Vec<f64> = seeds
            .iter()
            .filter_map(|s| {
                scan_best(&trace_path(dir.path(), *s))
                    .into_iter()
                    .filter(|(e, b)| *e <= budget && b.is_finite())
                    .map(|(_, b)| b)
                    .reduce(f64::max)
            })
            .collect();
        let stat = agg.budgets.iter().find(|b| b.budget == budget).unwrap();
        assert_eq!(stat.seeds, per_seed.len(), "budget {budget}");
        if per_seed.is_empty() {
            assert_eq!(stat.median, None);
        } else {
            assert_eq!(stat.median, Some(median(per_seed.clone())), "budget {budget}");
            assert_eq!(stat.max, per_seed.iter().copied().reduce(f64::max));
            assert_eq!(stat.min, per_seed.iter().copied().reduce(f64::min));
        }
    }

    let traces: Vec<_> = seeds.iter().map(|s| (*s, read_trace_csv(&trace_path(dir.path(), *s)).unwrap())).collect();
    let again = Aggregate::from_traces(&agg.method, &agg.space, agg.max_evaluations, agg.optimum_reward, &traces);
    assert_eq!(again, agg);
}

#[test]
fn compare_with_itself_gives_identical_columns() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    cmd_run(&synthetic_experiment("3x5", &run, &[1, 2], 120), &mut std::io::sink()).unwrap();
    let out = dir.path().join("cmp");
    let report = cmd_compare(&[run.clone(), run.clone()], None, Some(&out)).unwrap();
    assert_eq!(report.threshold, Some(0.0));
    let lines: Vec<&str> = report.verdict.lines().filter(|l| l.starts_with("resonance")).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], lines[1]);
    assert!(lines[0].contains("reached_optimum="));

    let csv = fs::read_to_string(out.join("compare.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    let (a, b) = rows.split_at(rows.len() / 2);
    assert_eq!(a, b);
    assert!(out.join("verdict.txt").is_file());
}

#[test]
fn compare_reports_ga_next_to_resonance() {
    let dir = tempfile::tempdir().unwrap();
    let res = dir.path().join("res");
    let ga = dir.path().join("ga");
    for (method, out) in [("resonance", &res), ("ga", &ga)] {
        let o = cli(
            &["bench", "tiny-5x8", "--method", method, "--seeds", "1..2", "--max-evals", "200", "--out", out.to_str().unwrap()],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = cli(&["compare", res.to_str().unwrap(), ga.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    let v = stdout(&o);
    assert!(v.lines().any(|l| l.starts_with("resonance") && l.contains("reached_optimum=")));
    assert!(v.lines().any(|l| l.starts_with("ga") && l.contains("reached_optimum=")));
}

#[test]
fn compare_rejects_empty_and_single_directories() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let e = empty.to_str().unwrap();
    assert_eq!(cli(&["compare", e, e], dir.path()).status.code(), Some(2));
    assert_eq!(cli(&["compare", e], dir.path()).status.code(), Some(2));
}

#[test]
fn compare_rejects_a_bad_trace_schema() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    cmd_run(&synthetic_experiment("2x3", &run, &[1], 16), &mut std::io::sink()).unwrap();
    fs::write(trace_path(&run, 1), "cycle,evaluations\n1,8\n").unwrap();
    let r = run.to_str().unwrap();
    assert_eq!(cli(&["compare", r, r], dir.path()).status.code(), Some(2));
}

#[test]
fn bench_headers_echo_space_facts() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("paper-20x64", vec!["D: 20", "1.329228e36", "total_width: 1280"]),
        ("tiny-5x8", vec!["D: 5", "space_size: 32768", "cardinalities: 8,8,8,8,8"]),
        ("soc-shape", vec!["D: 18", "total_width: 106", "3.467318e12"]),
    ];
    for (preset, expect) in cases {
        let out = dir.path().join(preset);
        let o = cli(
            &["bench", preset, "--seeds", "1", "--max-evals", "8", "--arch", "mlp:8", "--out", out.to_str().unwrap()],
            dir.path(),
        );
        assert!(o.status.success(), "{preset}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        for e in expect {
            assert!(text.contains(e), "{preset}: missing {e:?} in\n{text}");
        }
    }
}

#[test]
fn default_seeds_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let o = Command::new(CLI)
        .args(["bench", "tiny-5x8", "--method", "ga", "--max-evals", "40", "--out", out.to_str().unwrap()])
        .env("THETA_DSE_SEED", "10")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(stdout(&o).contains("seeds: 10,11,12,13,14,15,16,17"));
    assert!(trace_path(&out, 17).is_file());
}

#[test]
fn space_info_describes_presets_and_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["space-info", "--preset", "soc"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("D: 18") && text.contains("total_width: 106") && text.contains("space_size: 3467318400000"));

    fs::write(dir.path().join("s.json"), stub_space().to_json()).unwrap();
    let o = cli(&["space-info", "s.json"], dir.path());
    assert!(stdout(&o).contains("cardinalities: 3,2"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(cli(&["bench", "huge-1x1"], d).status.code(), Some(2));
    assert_eq!(cli(&["run", "--config", "missing.json"], d).status.code(), Some(2));
    assert_eq!(cli(&["frobnicate"], d).status.code(), Some(2));
    assert_eq!(cli(&["bench", "tiny-5x8", "--seeds", "x"], d).status.code(), Some(2));
    assert_eq!(cli(&["bench", "tiny-5x8", "--method", "ga", "--arch", "mlp:8"], d).status.code(), Some(2));
    assert_eq!(cli(&["space-info"], d).status.code(), Some(2));

    fs::write(d.join("bad.json"), r#"{"space": {"preset": "2x2"}}"#).unwrap();
    assert_eq!(cli(&["run", "--config", "bad.json"], d).status.code(), Some(2));

    let no_weights = json!({
        "space": stub_space(),
        "env": {"external": {"command": [STUB]}},
        "method": {"ga": {}},
        "output_dir": "o"
    });
    fs::write(d.join("nw.json"), no_weights.to_string()).unwrap();
    assert_eq!(cli(&["run", "--config", "nw.json"], d).status.code(), Some(2));
}

#[test]
fn evaluator_crash_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "space": stub_space(),
        "env": {"external": {"command": [STUB, "--spec", json!({"objectives": {"score": {}}, "crash_after": 5}).to_string()]}},
        "method": {"ga": {"population_size": 4}},
        "objective_weights": {"score": 1.0},
        "seeds": [1],
        "max_evaluations": 50,
        "output_dir": "o"
    });
    fs::write(dir.path().join("c.json"), cfg.to_string()).unwrap();
    let o = cli(&["run", "--config", "c.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let s: Summary = read_json(&dir.path().join("o/summary_seed1.json")).unwrap();
    assert_eq!(s.evaluations_used, 5);
    assert!(trace_path(&dir.path().join("o"), 1).is_file());
}
