// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn subtrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_subtrack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn small<'a>(extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "run", "--n", "40", "--d", "3", "--obs", "15", "--steps", "80", "--seed", "5",
    ];
    v.extend_from_slice(extra);
    v
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(code(&subtrack(&["--help"])), 0);
    assert_eq!(code(&subtrack(&["--version"])), 0);
    assert_eq!(code(&subtrack(&["run", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        vec![],
        vec!["run", "--algo", "svd"],
        vec!["run", "--n", "many"],
        vec!["run", "--step", "fixed"],
        vec!["run", "--eta", "0.1"],
        vec!["run", "--d", "300"],
        vec!["run", "--algo", "isvd-full", "--obs", "60"],
        vec!["run", "--snapshot-every", "10"],
        vec!["equivalence", "--threshold", "-1"],
    ] {
        let out = subtrack(&args);
        assert_eq!(
            code(&out),
            1,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn run_writes_trace_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "trace.csv");
    let out = subtrack(&small(&["--out", &csv]));
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,error,residual_norm,sigma"));
    assert_eq!(lines.count(), 80);

    let meta = fs::read_to_string(format!("{csv}.meta.json")).unwrap();
    assert!(meta.contains("\"algorithm\": \"grouse\""));
    assert!(meta.contains("\"step_policy\": \"greedy\""));
}

#[test]
fn trace_goes_to_stdout_without_out() {
    let out = subtrack(&small(&["--algo", "brand", "--decay", "0.9"]));
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("step,error,residual_norm,sigma\n"));
    assert_eq!(stdout.lines().count(), 81);
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("brand: 80 steps"));
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = path(dir.path(), "a.csv");
    let b = path(dir.path(), "b.csv");
    let extra = ["--step", "fixed", "--eta", "0.3", "--noise", "0.01"];
    assert_eq!(
        code(&subtrack(&small(&[&extra[..], &["--out", &a]].concat()))),
        0
    );
    assert_eq!(
        code(&subtrack(&small(&[&extra[..], &["--out", &b]].concat()))),
        0
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn exported_stream_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let stream = path(dir.path(), "obs.txt");
    let first = path(dir.path(), "first.csv");
    let second = path(dir.path(), "second.csv");
    let algo = ["--algo", "isvd-partial"];
    assert_eq!(
        code(&subtrack(&small(
            &[&algo[..], &["--out", &first, "--export-stream", &stream]].concat()
        ))),
        0
    );
    assert_eq!(
        code(&subtrack(&small(
            &[&algo[..], &["--out", &second, "--import-stream", &stream]].concat()
        ))),
        0
    );
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    assert_eq!(fs::read_to_string(&stream).unwrap().lines().count(), 80);
}

#[test]
fn snapshots_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path(dir.path(), "t.csv");
    assert_eq!(
        code(&subtrack(&small(&[
            "--out",
            &csv,
            "--snapshot-every",
            "40"
        ]))),
        0
    );
    for step in [40, 80] {
        let basis = fs::read_to_string(format!("{csv}.step{step}.basis")).unwrap();
        assert!(basis.starts_with("40 3\n"));
        assert_eq!(basis.lines().count(), 41);
    }
}

#[test]
fn bad_stream_file_is_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let stream = path(dir.path(), "bad.txt");
    fs::write(&stream, "1;1,2;0.5,0.5\n2;3;oops\n").unwrap();
    let out = subtrack(&small(&["--import-stream", &stream]));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("line 2"));

    // Indices beyond n are caught when the step runs.
    fs::write(&stream, "1;1,99;0.5,0.5\n").unwrap();
    let out = subtrack(&small(&["--import-stream", &stream]));
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stderr).unwrap().contains("step 1"));

    let out = subtrack(&small(&[
        "--import-stream",
        &path(dir.path(), "missing.txt"),
    ]));
    assert_eq!(code(&out), 2);
}

#[test]
fn equivalence_passes_and_fails_by_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let report = path(dir.path(), "report.csv");
    let base = [
        "equivalence",
        "--trials",
        "4",
        "--n",
        "40",
        "--d",
        "3",
        "--obs",
        "15",
        "--steps",
        "20",
    ];

    let out = subtrack(&[&base[..], &["--out", &report]].concat());
    assert_eq!(code(&out), 0);
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.starts_with("trials=4 ") && summary.trim_end().ends_with("result=PASS"));
    let csv = fs::read_to_string(&report).unwrap();
    assert!(csv.starts_with("trial,worst_step,max_discrepancy\n"));
    assert_eq!(csv.lines().count(), 5);

    fs::remove_file(&report).unwrap();
    let out = subtrack(&[&base[..], &["--threshold", "0", "--out", &report]].concat());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .contains("result=FAIL"));
    assert_eq!(fs::read_to_string(&report).unwrap().lines().count(), 5);
}
