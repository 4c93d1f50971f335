//! End-to-end runs of the `quadhpm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_quadhpm"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    let prefix = format!("{key}: ");
    report
        .lines()
        .find_map(|l| l.strip_prefix(prefix.as_str()))
        .unwrap_or_else(|| panic!("missing key {key} in\n{report}"))
}

fn parse_vector(text: &str) -> Vec<f64> {
    text.trim_matches(['[', ']'])
        .split(", ")
        .map(|s| s.parse().unwrap())
        .collect()
}

#[test]
fn solve_appendix_prints_x_tilde() {
    let path = fixture("appendix_a.json");
    let out = run(&["solve", path.to_str().unwrap(), "--order", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout(&out);
    let x = parse_vector(value(&report, "x_tilde"));
    assert!((x[0] + 4.8765625e-2).abs() < 1e-9 && (x[1] - 5.1265625e-2).abs() < 1e-9);
    let err: f64 = value(&report, "error_empirical").parse().unwrap();
    assert!((err - 1.1061184e-6).abs() < 1e-9);
    assert_eq!(value(&report, "order_c"), "2");
}

#[test]
fn solve_without_order_records_choice() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    // The appendix system without a stored order.
    let text = std::fs::read_to_string(fixture("appendix_a.json")).unwrap();
    let stripped: String = text.lines().filter(|l| !l.contains("order_c")).collect::<Vec<_>>().join("\n");
    let stripped = stripped.replace("\"epsilon\": 1e-3,", "\"epsilon\": 1e-3");
    std::fs::write(&path, stripped).unwrap();
    let out = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout(&out);
    assert_eq!(value(&report, "order_source"), "precision_rule");
    let c: usize = value(&report, "order_c").parse().unwrap();
    assert!(c >= 1);
}

#[test]
fn verify_appendix_passes() {
    let out = run(&["verify-appendix"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout(&out);
    let err: f64 = value(&report, "error_empirical").parse().unwrap();
    assert!((err - 1.1061184e-6).abs() < 1e-9);
    assert!(!report.contains("FAIL"));
}

#[test]
fn embed_linear_system_has_only_f1_and_identity_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("a.txt");
    let layout = dir.path().join("layout.txt");
    let path = fixture("linear.json");
    let out = run(&[
        "embed",
        path.to_str().unwrap(),
        "--order",
        "1",
        "--dump-matrix",
        matrix.to_str().unwrap(),
        "--dump-layout",
        layout.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let dump = std::fs::read_to_string(&matrix).unwrap();
    let mut lines = dump.lines();
    let header: Vec<usize> = lines.next().unwrap().split(' ').map(|s| s.parse().unwrap()).collect();
    // N = 2 + 4·(1 + 1) = 10.
    assert_eq!(header[0], 10);
    let entries: Vec<(usize, usize, f64)> = lines
        .map(|l| {
            let p: Vec<&str> = l.split(' ').collect();
            (p[0].parse().unwrap(), p[1].parse().unwrap(), p[2].parse().unwrap())
        })
        .collect();
    assert_eq!(entries.len(), header[1]);
    // y₀ row block holds F₁ only.
    let top: Vec<_> = entries.iter().filter(|e| e.0 < 2).collect();
    assert_eq!(top, vec![&(0, 0, 2.0), &(0, 1, 1.0), &(1, 1, 4.0)]);
    // Rows 2..6: F₁⊗I plus identity; rows 6..10: I⊗F₁.
    let f1 = [[2.0, 1.0], [0.0, 4.0]];
    let mut expected = Vec::new();
    for r in 0..4 {
        for c in 0..4 {
            let (i, p) = (r / 2, r % 2);
            let (j, q) = (c / 2, c % 2);
            let v = if p == q { f1[i][j] } else { 0.0 };
            if v != 0.0 {
                expected.push((2 + r, 2 + c, v));
            }
        }
        expected.push((2 + r, 6 + r, 1.0));
    }
    for r in 0..4 {
        for c in 0..4 {
            let v = if r / 2 == c / 2 { f1[r % 2][c % 2] } else { 0.0 };
            if v != 0.0 {
                expected.push((6 + r, 6 + c, v));
            }
        }
    }
    expected.sort_by_key(|e| (e.0, e.1));
    let rest: Vec<_> = entries.iter().filter(|e| e.0 >= 2).cloned().collect();
    assert_eq!(rest, expected);

    let b = std::fs::read_to_string(format!("{}.b", matrix.display())).unwrap();
    // b = (−F₀, 0, −F₀⊗F₀) with F₀ = (1, −2).
    assert_eq!(b, "10 6\n0 0 -1.0\n1 0 2.0\n6 0 -1.0\n7 0 2.0\n8 0 2.0\n9 0 -4.0\n");
    let layout_text = std::fs::read_to_string(&layout).unwrap();
    assert_eq!(layout_text, "0 0 - 0 2\n1 0 - 2 4 0 0\n1 0 1 6 4 0 0\n");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let path = fixture("appendix_a.json");
    let mut reports = Vec::new();
    let mut dumps = Vec::new();
    for k in 0..2 {
        let m = dir.path().join(format!("m{k}"));
        let out = run(&["analyze", path.to_str().unwrap(), "--dump-matrix", m.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        // The dump path itself appears in the report; compare the rest.
        let report: String = stdout(&out).lines().filter(|l| !l.contains("_dump")).collect();
        reports.push(report);
        dumps.push(std::fs::read(&m).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(dumps[0], dumps[1]);
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    assert_eq!(run(&["solve", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["solve", "/nonexistent/problem.json"]).status.code(), Some(2));
    let good = fixture("appendix_a.json");
    assert_eq!(run(&["solve", good.to_str().unwrap(), "--order", "65"]).status.code(), Some(2));
    assert_eq!(run(&["solve", good.to_str().unwrap(), "--solver", "magic"]).status.code(), Some(2));
}

#[test]
fn divergent_system_exits_3_unless_order_forced() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("div.json");
    // 1 + x + x² = 0: R = 4.
    std::fs::write(&path, r#"{"n": 1, "f0": [1.0], "f1": [[0, 0, 1.0]], "f2": [[0, 0, 1.0]]}"#).unwrap();
    assert_eq!(run(&["solve", path.to_str().unwrap()]).status.code(), Some(3));
    let forced = run(&["solve", path.to_str().unwrap(), "--order", "3"]);
    assert_eq!(forced.status.code(), Some(0));
    let report = stdout(&forced);
    assert!(report.contains("divergence_warning"));
    assert_eq!(value(&report, "newton_converged"), "false");
}

#[test]
fn selftest_passes_with_seed() {
    let out = run(&["selftest", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("suite.success_probability: PASS"));
}
