//! End-to-end tests of the `menger` binary: flag contract, exit codes,
//! stdout/stderr separation, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

fn menger(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_menger"))
        .args(args)
        .current_dir(dir)
        .env_remove("MENGER_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn gen_then_energy_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let gen = menger(
        &["gen", "--shape", "circle", "--n", "256", "--out", "c.json"],
        dir.path(),
    );
    assert!(gen.status.success(), "{}", stderr(&gen));
    assert!(stdout(&gen).is_empty(), "gen keeps stdout clean");

    let energy = menger(
        &["energy", "--in", "c.json", "--name", "Mp", "--p", "3"],
        dir.path(),
    );
    assert!(energy.status.success());
    let value: f64 = stdout(&energy).trim().parse().unwrap();
    let target = (2.0 * std::f64::consts::PI).powi(3);
    assert!(
        (value - target).abs() / target < 0.02,
        "triple sum at n=256 lands within 2% of the circle limit, got {value}"
    );
    assert!(stderr(&energy).contains("elapsed:"), "timing goes to stderr");
}

#[test]
fn numeric_output_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    menger(
        &[
            "gen", "--shape", "circle", "--n", "64", "--seed", "9", "--perturb", "0.05",
            "--out", "w.json",
        ],
        dir.path(),
    );
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        for _ in 0..2 {
            let out = menger(
                &[
                    "energy", "--in", "w.json", "--name", "Mp", "--p", "3.5", "--workers",
                    workers,
                ],
                dir.path(),
            );
            assert!(out.status.success());
            outputs.push(out.stdout);
        }
    }
    assert!(
        outputs.windows(2).all(|w| w[0] == w[1]),
        "stdout must be byte-identical across worker counts and reruns"
    );
}

#[test]
fn seventeen_significant_digits_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    menger(
        &["gen", "--shape", "circle", "--n", "32", "--out", "c.json"],
        dir.path(),
    );
    let out = menger(&["energy", "--in", "c.json", "--name", "TK"], dir.path());
    let text = stdout(&out);
    // mantissa with 16 digits after the decimal point, exponent field
    let mantissa = text.trim().split('e').next().unwrap();
    let digits = mantissa.split('.').nth(1).unwrap();
    assert_eq!(digits.len(), 16, "got {text:?}");
}

#[test]
fn scale_invariance_advisory_goes_to_stderr() {
    let dir = tempfile::tempdir().unwrap();
    menger(
        &["gen", "--shape", "circle", "--n", "32", "--out", "c.json"],
        dir.path(),
    );
    let out = menger(
        &["energy", "--in", "c.json", "--name", "Ip", "--p", "2"],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(stderr(&out).contains("scale-invariance threshold"));
    assert!(!stdout(&out).contains("note"), "stdout stays numeric");

    let above = menger(
        &["energy", "--in", "c.json", "--name", "Ip", "--p", "2.5"],
        dir.path(),
    );
    assert!(!stderr(&above).contains("scale-invariance threshold"));
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();

    // 1: unknown flag
    let out = menger(&["energy", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).lines().count() == 1, "one-line diagnostic");

    // 1: unreadable file
    let out = menger(&["energy", "--in", "missing.json", "--name", "TK"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.json"));

    // 1: malformed JSON
    std::fs::write(dir.path().join("bad.json"), "{\"vertices\": 3}").unwrap();
    let out = menger(&["energy", "--in", "bad.json", "--name", "TK"], dir.path());
    assert_eq!(out.status.code(), Some(1));

    // 1: missing exponent for a p-energy
    menger(
        &["gen", "--shape", "circle", "--n", "24", "--out", "c.json"],
        dir.path(),
    );
    let out = menger(&["energy", "--in", "c.json", "--name", "Mp"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("requires an exponent"));

    // 0: passing check suite
    let out = menger(
        &["check", "--suite", "ordering", "--in", "c.json", "--p", "1,2,3"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));

    // 2: failing check suite (knots sit far from 1/thickness at p=32)
    menger(
        &["gen", "--shape", "torus-knot", "--n", "96", "--out", "t.json"],
        dir.path(),
    );
    let out = menger(&["check", "--suite", "plimits", "--in", "t.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&out);
    assert!(text.starts_with("FAIL"), "table leads with the verdict");
    assert!(
        text.lines().last().unwrap().starts_with('{'),
        "machine-readable report on the last line"
    );
}

#[test]
fn check_reports_are_parseable_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = menger(&["check", "--suite", "farymilnor", "--n", "64"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let json_line = text.lines().last().unwrap();
    let report: serde_json::Value = serde_json::from_str(json_line).unwrap();
    assert_eq!(report["status"], "pass");
    assert!(report["items"].as_array().unwrap().len() >= 2);
}

#[test]
fn flow_writes_csv_log_and_output_curve() {
    let dir = tempfile::tempdir().unwrap();
    menger(
        &[
            "gen", "--shape", "circle", "--n", "24", "--seed", "5", "--perturb", "0.02",
            "--out", "p.json",
        ],
        dir.path(),
    );
    let out = menger(
        &[
            "flow", "--in", "p.json", "--name", "Mp", "--p", "3", "--max-iters", "5",
            "--grad-tol", "1e-10", "--snapshot-every", "2", "--snapshot-prefix", "snap",
            "--out", "relaxed.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,energy,grad_norm,step"));
    let energies: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(!energies.is_empty());
    assert!(
        energies.windows(2).all(|w| w[1] < w[0]),
        "descent log is strictly decreasing: {energies:?}"
    );
    assert!(dir.path().join("relaxed.json").exists());
    assert!(dir.path().join("snap000000.json").exists());
    assert!(dir.path().join("snap000002.json").exists());
    assert!(stderr(&out).contains("status:"));
}

#[test]
fn gen_validates_shape_specific_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = menger(
        &["gen", "--shape", "pinched", "--n", "48", "--out", "p.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--gap"));

    let out = menger(
        &["gen", "--shape", "circle", "--gap", "0.1", "--n", "48", "--out", "c.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));

    let out = menger(
        &["gen", "--shape", "circle", "--n", "48", "--seed", "1", "--out", "c.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "--seed demands --perturb");

    let out = menger(
        &[
            "gen", "--shape", "torus-knot", "--p-torus", "2", "--q-torus", "4", "--n", "48",
            "--out", "t.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1), "non-coprime winding counts");
    assert!(stderr(&out).contains("coprime"));
}

#[test]
fn workers_env_var_is_honored_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    menger(
        &["gen", "--shape", "circle", "--n", "32", "--out", "c.json"],
        dir.path(),
    );
    let with_env = Command::new(env!("CARGO_BIN_EXE_menger"))
        .args(["energy", "--in", "c.json", "--name", "Up", "--p", "2"])
        .current_dir(dir.path())
        .env("MENGER_WORKERS", "2")
        .output()
        .unwrap();
    assert!(with_env.status.success());

    let flag_overrides = Command::new(env!("CARGO_BIN_EXE_menger"))
        .args(["energy", "--in", "c.json", "--name", "Up", "--p", "2", "--workers", "1"])
        .current_dir(dir.path())
        .env("MENGER_WORKERS", "2")
        .output()
        .unwrap();
    assert!(flag_overrides.status.success());
    assert_eq!(with_env.stdout, flag_overrides.stdout);

    let bad = Command::new(env!("CARGO_BIN_EXE_menger"))
        .args(["energy", "--in", "c.json", "--name", "Up", "--p", "2"])
        .current_dir(dir.path())
        .env("MENGER_WORKERS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("MENGER_WORKERS"));
}

#[test]
fn bench_separates_numbers_from_timings() {
    let dir = tempfile::tempdir().unwrap();
    let out = menger(&["bench", "--name", "Up", "--n-list", "32,64"], dir.path());
    assert!(out.status.success());
    let numbers = stdout(&out);
    assert_eq!(numbers.lines().count(), 2);
    for line in numbers.lines() {
        let mut fields = line.split(' ');
        let _n: usize = fields.next().unwrap().parse().unwrap();
        let _v: f64 = fields.next().unwrap().parse().unwrap();
    }
    assert!(stderr(&out).contains("bench Up(p=1) n=32:"));

    let reruns = menger(&["bench", "--name", "Up", "--n-list", "32,64"], dir.path());
    assert_eq!(out.stdout, reruns.stdout, "numbers diff clean across runs");
}

#[test]
fn gen_is_reproducible_at_the_byte_level() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.json", "b.json"] {
        let run = menger(
            &[
                "gen", "--shape", "pinched", "--gap", "0.05", "--n", "64", "--seed", "42",
                "--perturb", "0.01", "--out", out,
            ],
            dir.path(),
        );
        assert!(run.status.success(), "{}", stderr(&run));
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b, "identical invocations write identical files");
}
