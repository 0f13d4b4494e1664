use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const COLUMNS: &str = "atomic_ops,global_reads,global_writes,global_transactions,shared_bytes_per_block,cache_hits,cache_accesses,cache_hit_rate";

fn gnnsched(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gnnsched")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn planted(dir: &Path, seed: &str) -> PathBuf {
    let p = dir.join(format!("planted{seed}.txt"));
    let o = gnnsched(&[
        "generate", "--communities", "8", "--size", "64", "--p-in", "0.3", "--p-out", "0.01", "--shuffle", "--seed",
        seed, "--out", p.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    p
}

/// Parses a single-row cost CSV into `(column, value)` pairs.
fn cost_row(csv: &str) -> Vec<(String, f64)> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let values = lines.next().unwrap().split(',').map(|v| v.parse().unwrap());
    header.into_iter().map(String::from).zip(values).collect()
}

fn read_values(p: &Path) -> Vec<f64> {
    fs::read_to_string(p).unwrap().split([',', '\n']).filter(|t| !t.is_empty()).map(|t| t.parse().unwrap()).collect()
}

fn column(row: &[(String, f64)], name: &str) -> f64 {
    row.iter().find(|(k, _)| k == name).unwrap().1
}

#[test]
fn stats_on_path_graph() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "path.txt", "0 1\n1 2\n");
    let o = gnnsched(&["stats", "--input", p.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("nodes 3"));
    assert!(out.contains("aes 1.0000"));
    // √1 > ⌊√3 / 100⌋ = 0, so the span rule fires even on a tiny path
    assert!(out.contains("sqrt_aes 1.0000") && out.contains("threshold 0"));
    assert!(out.contains("reorder true"));
}

#[test]
fn stats_recommends_reorder_for_shuffled_planted_graph() {
    let dir = TempDir::new().unwrap();
    let p = planted(dir.path(), "0");
    let o = gnnsched(&["stats", "--input", p.to_str().unwrap(), "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reorder"], true);
    assert_eq!(v["nodes"], 512);
}

#[test]
fn empty_file_reports_no_edges() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "empty.txt", "");
    let o = gnnsched(&["stats", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no edges"));
}

#[test]
fn parse_errors_carry_file_and_line() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "bad.txt", "0 1\n2 -3\n");
    let o = gnnsched(&["stats", "--input", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.txt") && err.contains("line 2"), "{err}");
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(gnnsched(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gnnsched(&["run", "--input", "x", "--strategy", "fast"]).status.code(), Some(1));
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "g.txt", "0 1\n");
    let o = gnnsched(&["run", "--input", p.to_str().unwrap(), "--ngs", "2", "--dw", "40", "--tpb", "32"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(gnnsched(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_input_file_exits_two() {
    assert_eq!(gnnsched(&["stats", "--input", "/nonexistent/graph.txt"]).status.code(), Some(2));
}

#[test]
fn generate_is_deterministic_and_forced_probabilities_give_cliques() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (planted(dir.path(), "5"), dir.path().join("again.txt"));
    gnnsched(&[
        "generate", "--communities", "8", "--size", "64", "--p-in", "0.3", "--p-out", "0.01", "--shuffle", "--seed", "5",
        "--out", b.to_str().unwrap(),
    ]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let o = gnnsched(&["generate", "--communities", "2", "--size", "4", "--p-in", "1", "--p-out", "0"]);
    let edges: Vec<(usize, usize)> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with("nodes"))
        .map(|l| {
            let mut it = l.split_whitespace().map(|t| t.parse::<usize>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert_eq!(edges.len(), 12);
    assert!(edges.iter().all(|&(s, d)| s / 4 == d / 4));
}

#[test]
fn run_defaults_emit_cost_columns() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "g.txt", "0 1\n1 2\n2 3\n3 0\n0 2\n");
    let o = gnnsched(&["run", "--input", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().next().unwrap(), COLUMNS);
}

#[test]
fn strategies_agree_on_features_but_not_atomics() {
    let dir = TempDir::new().unwrap();
    let p = planted(dir.path(), "1");
    let mut atomics = Vec::new();
    let mut features: Vec<Vec<f64>> = Vec::new();
    for s in ["naive", "warpshared"] {
        let f = dir.path().join(format!("{s}.csv"));
        let o = gnnsched(&[
            "run", "--input", p.to_str().unwrap(), "--strategy", s, "--ngs", "8", "--dw", "16", "--tpb", "128",
            "--features-out", f.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        atomics.push(column(&cost_row(&stdout(&o)), "atomic_ops"));
        features.push(read_values(&f));
    }
    // same addends, different summation order
    assert_eq!(features[0].len(), features[1].len());
    for (a, b) in features[0].iter().zip(&features[1]) {
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }
    assert!(atomics[1] < atomics[0]);
}

#[test]
fn reordering_raises_hit_rate_and_keeps_values() {
    let dir = TempDir::new().unwrap();
    let p = planted(dir.path(), "2");
    let mut rates = Vec::new();
    let mut features = Vec::new();
    for flag in ["--no-reorder", "--reorder"] {
        let f = dir.path().join(format!("{flag}.csv"));
        let o = gnnsched(&[
            "run", "--input", p.to_str().unwrap(), flag, "--ngs", "16", "--dw", "16", "--tpb", "128",
            "--features-out", f.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        rates.push(column(&cost_row(&stdout(&o)), "cache_hit_rate"));
        features.push(read_values(&f));
    }
    assert!(rates[1] > rates[0], "{rates:?}");
    for (a, b) in features[0].iter().zip(&features[1]) {
        assert!((a - b).abs() <= 1e-12 * b.abs());
    }
}

#[test]
fn run_is_deterministic_and_json_mirrors_csv() {
    let dir = TempDir::new().unwrap();
    let p = planted(dir.path(), "3");
    let args = ["run", "--input", p.to_str().unwrap(), "--seed", "9"];
    let (a, b) = (gnnsched(&args), gnnsched(&args));
    assert_eq!(a.stdout, b.stdout);
    let j = gnnsched(&[&args[..], &["--json"]].concat());
    let text = stdout(&j);
    serde_json::from_str::<serde_json::Value>(&text).unwrap();
    let positions: Vec<usize> = COLUMNS.split(',').map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn simulate_lists_every_strategy() {
    let dir = TempDir::new().unwrap();
    let p = planted(dir.path(), "4");
    let o = gnnsched(&["simulate", "--input", p.to_str().unwrap(), "--ngs", "4", "--dw", "16", "--tpb", "64"]);
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], format!("strategy,{COLUMNS}"));
    let names: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["naive", "unit", "warpshared"]);
}

#[test]
fn schedule_plan_decide_search_produce_json() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "g.txt", "0 1\n0 2\n0 3\n1 2\n");
    let input = p.to_str().unwrap();
    for cmd in ["schedule", "plan"] {
        let o = gnnsched(&[cmd, "--input", input, "--ngs", "2", "--dw", "8", "--tpb", "64", "--dim", "4"]);
        assert!(o.status.success());
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap();
    }
    let d: serde_json::Value =
        serde_json::from_slice(&gnnsched(&["decide", "--input", input, "--dim", "64", "--json"]).stdout).unwrap();
    assert_eq!(d["params"]["dw"], 32);
    let s = gnnsched(&["search", "--input", input, "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&s.stdout).unwrap();
    assert_eq!(v["trace"].as_array().unwrap().len(), 15);
}

#[test]
fn reorder_writes_mapping_and_relabeled_edges() {
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "g.txt", "0 2\n2 4\n4 0\n1 3\n3 5\n5 1\n");
    let (out, map) = (dir.path().join("r.txt"), dir.path().join("m.json"));
    let o = gnnsched(&[
        "reorder", "--input", p.to_str().unwrap(), "--out", out.to_str().unwrap(), "--mapping", map.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(map).unwrap()).unwrap();
    assert_eq!(m["old_to_new"].as_array().unwrap().len(), 6);
    // relabeled triangles occupy {0,1,2} and {3,4,5}
    let body = fs::read_to_string(out).unwrap();
    for l in body.lines().filter(|l| !l.starts_with("nodes")) {
        let v: Vec<usize> = l.split_whitespace().map(|t| t.parse().unwrap()).collect();
        assert_eq!(v[0] / 3, v[1] / 3, "{l}");
    }
}
