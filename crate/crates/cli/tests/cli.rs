//! End-to-end tests of the `hdt` binary: output formats, exit codes, and
//! byte-for-byte reproducibility of emitted CSV files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hdt() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdt"))
}

fn write(dir: &Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, content).unwrap();
    path
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

const TRIANGLE: &str = "0 1\n1 2\n2 0\n";

fn ring(n: usize) -> String {
    (0..n).map(|i| format!("{} {}\n", i, (i + 1) % n)).collect()
}

#[test]
fn ingest_reports_stats() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "triangle.txt", TRIANGLE);
    let out = run(hdt().arg("ingest").arg(&graph));
    assert!(out.status.success());
    assert_eq!(stdout(&out), "nodes=3 edges=3 avg_degree=2.000\n");
}

#[test]
fn ingest_uses_largest_component() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "two.txt", "0 1\n2 3\n3 4\n4 2\n");
    let out = run(hdt().arg("ingest").arg(&graph));
    assert!(out.status.success());
    assert_eq!(stdout(&out), "nodes=3 edges=3 avg_degree=2.000\n");
}

#[test]
fn ingest_parse_error_is_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "bad.txt", "0 1\n0 x\n");
    let out = run(hdt().arg("ingest").arg(&graph));
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 2"), "stderr: {}", stderr(&out));
}

#[test]
fn missing_graph_is_exit_2() {
    let out = run(hdt().arg("ingest").arg("/nonexistent/graph.txt"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "ring.txt", &ring(12));
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out_path in [&out_a, &out_b] {
        let out = run(hdt()
            .args(["run", "--sampler", "mhrw", "--alpha", "2", "--total-steps", "400"])
            .args(["--replications", "3", "--seed", "7"])
            .arg("--graph")
            .arg(&graph)
            .arg("--output")
            .arg(out_path));
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        // resolved config echoed
        assert!(stderr(&out).contains("# sampler = mhrw"));
    }
    let a = fs::read(&out_a).unwrap();
    let b = fs::read(&out_b).unwrap();
    assert_eq!(a, b);

    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("step,cost,metric,mean,stderr"));
    assert!(text.contains("# seed = 7"));
    assert!(text.lines().any(|l| l.contains(",tvd,")));
    assert!(text.lines().any(|l| l.contains(",nrmse,")));
}

#[test]
fn embedded_header_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "ring.txt", &ring(10));
    let out_path = dir.path().join("curves.csv");
    let out = run(hdt()
        .args(["run", "--sampler", "mhrw", "--alpha", "1", "--total-steps", "300"])
        .args(["--replications", "2", "--seed", "5"])
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(&out_path));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let original = fs::read_to_string(&out_path).unwrap();

    // strip the comment header back into a config file and replay it
    let config_text: String = original
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect();
    let config = write(dir.path(), "replay.conf", &config_text);
    let replay_path = dir.path().join("replayed.csv");
    let out = run(hdt()
        .args(["run", "--config"])
        .arg(&config)
        .arg("--output")
        .arg(&replay_path));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let replayed = fs::read_to_string(&replay_path).unwrap();
    assert_eq!(original, replayed);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "ring.txt", &ring(10));
    let config = write(
        dir.path(),
        "base.conf",
        &format!(
            "sampler = mhrw\nalpha = 1\ntotal_steps = 200\nreplications = 2\nseed = 4\ngraph = {}\n",
            graph.display()
        ),
    );
    let out_path = dir.path().join("o.csv");
    let out = run(hdt()
        .args(["run", "--alpha", "3", "--config"])
        .arg(&config)
        .arg("--output")
        .arg(&out_path));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# alpha = 3"), "flag did not override file");
    assert!(text.contains("# total_steps = 200"));
}

#[test]
fn invalid_flag_combination_is_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "ring.txt", &ring(8));
    let out = run(hdt()
        .args(["run", "--sampler", "srrw", "--alpha", "1", "--total-steps", "100"])
        .args(["--lru-ratio", "0.5"])
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(dir.path().join("x.csv")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("lru_ratio"));

    let out = run(hdt()
        .args(["run", "--sampler", "nope", "--total-steps", "100"])
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(dir.path().join("y.csv")));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn budget_emits_srrw_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "ring.txt", &ring(10));
    let out_path = dir.path().join("budget.csv");
    let out = run(hdt()
        .args(["budget", "--sampler", "mhrw", "--alpha", "3", "--budget", "2000"])
        .args(["--replications", "2", "--seed", "3"])
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(&out_path));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.lines().any(|l| l.contains(",tvd,")));
    assert!(text.lines().any(|l| l.contains(",srrw_tvd,")));

    // srrw as the configured sampler: no comparison section
    let out_path = dir.path().join("srrw.csv");
    let out = run(hdt()
        .args(["budget", "--sampler", "srrw", "--alpha", "3", "--budget", "2000"])
        .args(["--replications", "2", "--seed", "3"])
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(&out_path));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.lines().any(|l| l.contains(",tvd,")));
    assert!(!text.contains("srrw_tvd"));
}

#[test]
fn explicit_weight_file_target() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "tri.txt", TRIANGLE);
    let weights = write(dir.path(), "w.txt", "0 1.0\n1 2.0\n2 4.0\n");
    let out_path = dir.path().join("w.csv");
    let out = run(hdt()
        .args(["run", "--sampler", "mhrw", "--alpha", "1", "--total-steps", "200"])
        .args(["--replications", "2", "--seed", "6", "--truth", "uniform"])
        .arg("--target")
        .arg(format!("file:{}", weights.display()))
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(&out_path));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# truth = uniform"));

    // weight file not covering every node is a data error
    let partial = write(dir.path(), "partial.txt", "0 1.0\n1 2.0\n");
    let out = run(hdt()
        .args(["run", "--sampler", "mhrw", "--total-steps", "200", "--truth", "uniform"])
        .arg("--target")
        .arg(format!("file:{}", partial.display()))
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(dir.path().join("p.csv")));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_requires_budget_key() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "ring.txt", &ring(8));
    let out = run(hdt()
        .args(["budget", "--sampler", "mhrw", "--total-steps", "100"])
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(dir.path().join("z.csv")));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn spectral_triangle_values() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "triangle.txt", TRIANGLE);
    let out_path = dir.path().join("spectral.csv");
    let out = run(hdt()
        .args(["spectral", "--alpha", "1"])
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(&out_path));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();

    let section = |name: &str| -> Vec<Vec<f64>> {
        let mut rows = Vec::new();
        let mut in_section = false;
        for line in text.lines() {
            if let Some(s) = line.strip_prefix("# section ") {
                in_section = s == name;
                continue;
            }
            if in_section && !line.starts_with('#') {
                rows.push(
                    line.split(',')
                        .map(|t| t.parse::<f64>().unwrap())
                        .collect(),
                );
            }
        }
        rows
    };

    let eigen = &section("eigenvalues")[0];
    assert!((eigen[0] - 1.0).abs() < 1e-10);
    assert!((eigen[1] + 0.5).abs() < 1e-10);
    for i in 0..3 {
        assert!((section("v_base")[i][i] - 2.0 / 27.0).abs() < 1e-10);
        assert!((section("v_hdt")[i][i] - 2.0 / 81.0).abs() < 1e-10);
        assert!((section("v_srrw")[i][i] - 1.0 / 27.0).abs() < 1e-10);
    }
}

#[test]
fn spectral_rejects_oversized_graph() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "big.txt", &ring(2500));
    let out = run(hdt()
        .arg("spectral")
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(dir.path().join("s.csv")));
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("2000"));
}

#[test]
fn ode_from_target_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("ode.csv");
    let out = run(hdt()
        .args(["ode", "--mu", "uniform:3", "--alpha", "2", "--x0", "mu"])
        .args(["--step-size", "0.05", "--steps", "40"])
        .arg("--output")
        .arg(&out_path));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    let third = 1.0 / 3.0;
    for line in text.lines().filter(|l| !l.starts_with('#') && !l.starts_with('t')) {
        let fields: Vec<f64> = line.split(',').map(|t| t.parse().unwrap()).collect();
        for v in &fields[1..] {
            assert!((v - third).abs() < 1e-12);
        }
    }
}

#[test]
fn ode_converges_from_off_target_start() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("ode.csv");
    let out = run(hdt()
        .args(["ode", "--mu", "0.2,0.3,0.5", "--alpha", "1", "--x0", "0.8,0.1,0.1"])
        .args(["--step-size", "0.01", "--steps", "4000"])
        .arg("--output")
        .arg(&out_path));
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = fs::read_to_string(&out_path).unwrap();
    let last = text.lines().last().unwrap();
    let fields: Vec<f64> = last.split(',').map(|t| t.parse().unwrap()).collect();
    let expected = [0.2, 0.3, 0.5];
    for (v, e) in fields[1..].iter().zip(expected) {
        assert!((v - e).abs() < 1e-6, "terminal {v} vs {e}");
    }
}

#[test]
fn labels_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "ring.txt", &ring(20));
    let a_path = dir.path().join("a.labels");
    let b_path = dir.path().join("b.labels");
    for path in [&a_path, &b_path] {
        let out = run(hdt()
            .args(["labels", "--p", "0.3", "--seed", "7"])
            .arg("--graph")
            .arg(&graph)
            .arg("--output")
            .arg(path));
        assert!(out.status.success(), "stderr: {}", stderr(&out));
    }
    assert_eq!(fs::read(&a_path).unwrap(), fs::read(&b_path).unwrap());

    let text = fs::read_to_string(&a_path).unwrap();
    let labels: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(labels.len(), 20);
    for line in labels {
        let mut tok = line.split_whitespace();
        let _node: u64 = tok.next().unwrap().parse().unwrap();
        let bit: u8 = tok.next().unwrap().parse().unwrap();
        assert!(bit <= 1);
    }
}

#[test]
fn labels_p_zero_gives_zero_truth() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write(dir.path(), "ring.txt", &ring(9));
    let out_path = dir.path().join("zero.labels");
    let out = run(hdt()
        .args(["labels", "--p", "0", "--seed", "1"])
        .arg("--graph")
        .arg(&graph)
        .arg("--output")
        .arg(&out_path));
    assert!(out.status.success());
    let text = fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# uniform_truth = 0"));
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        assert!(line.ends_with(" 0"));
    }
}
