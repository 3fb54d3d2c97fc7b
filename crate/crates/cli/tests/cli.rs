//! End-to-end checks of the binary: exit codes, provenance comments, and
//! byte-identical reruns.

use std::fs;
use std::path::Path;
use std::process::Command;

fn regsde() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regsde"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

#[test]
fn missing_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = regsde()
        .args(["--config", "/nonexistent/config.toml", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists(), "no files may be written on config error");
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(&cfg, "command = \"gen\"\nseed = 1\ntypo_key = 3\n");
    let status = regsde().arg("--config").arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bad_generator_name_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(
        &cfg,
        "command = \"gen\"\nseed = 1\n[driver]\nr = \"nosuch\"\nq = \"zero\"\npaths = 1\n",
    );
    let out = dir.path().join("out");
    let status = regsde()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn gen_writes_expected_files_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(
        &cfg,
        "command = \"gen\"\nseed = 99\n[grid]\nn_steps = 256\n[driver]\nr = \"fbm:0.4\"\nq = \"zero\"\npaths = 4\n",
    );
    let run = |out: &Path| {
        let status = regsde()
            .arg("--config")
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .arg("--quiet")
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    };
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    run(&out1);
    run(&out2);
    for i in 0..4 {
        let name = format!("path_{i:03}.csv");
        let a = fs::read(out1.join(&name)).unwrap();
        let b = fs::read(out2.join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between reruns");
        let text = String::from_utf8(a).unwrap();
        let mut lines = text.lines();
        let comment = lines.next().unwrap();
        assert!(comment.starts_with("# regsde "), "provenance comment: {comment}");
        assert!(comment.contains("config_sha256="));
        assert!(comment.contains("seed=99"));
        assert_eq!(lines.next().unwrap(), "t,value");
        assert_eq!(lines.count(), 257);
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    write(
        &cfg,
        "command = \"gen\"\nseed = 1\n[grid]\nn_steps = 128\n[driver]\nr = \"brownian\"\nq = \"zero\"\npaths = 1\n",
    );
    let run = |out: &Path, seed: Option<&str>| {
        let mut c = regsde();
        c.arg("--config").arg(&cfg).arg("--out").arg(out).arg("--quiet");
        if let Some(s) = seed {
            c.args(["--seed", s]);
        }
        assert_eq!(c.status().unwrap().code(), Some(0));
    };
    let o1 = dir.path().join("d1");
    let o2 = dir.path().join("d2");
    let o3 = dir.path().join("d3");
    run(&o1, None);
    run(&o2, Some("2"));
    run(&o3, Some("1"));
    let read = |o: &Path| fs::read(o.join("path_000.csv")).unwrap();
    assert_ne!(read(&o1), read(&o2), "different seeds must differ");
    assert_eq!(read(&o1), read(&o3), "--seed equal to config seed must match");
}

#[test]
fn var_and_integrate_tables_have_declared_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("v.toml");
    write(
        &cfg,
        concat!(
            "command = \"var\"\nseed = 5\n[grid]\nn_steps = 512\n",
            "[driver]\nr = \"brownian\"\nq = \"zero\"\npaths = 1\n",
            "[ladder]\ncoarse = 3\nfine = 5\n[ensemble]\nreplications = 8\n",
            "[var]\norder = 2\ntimes = [0.5, 1.0]\n",
        ),
    );
    let out = dir.path().join("out");
    assert_eq!(
        regsde().arg("--config").arg(&cfg).arg("--out").arg(&out).arg("--quiet").status().unwrap().code(),
        Some(0)
    );
    let text = fs::read_to_string(out.join("variation.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# regsde "));
    assert_eq!(lines.next().unwrap(), "eps,t,value,stderr");
    // 3 ladder points x 2 report times
    assert_eq!(lines.count(), 6);

    let cfg = dir.path().join("i.toml");
    write(
        &cfg,
        concat!(
            "command = \"integrate\"\nseed = 5\n[grid]\nn_steps = 512\n",
            "[driver]\nr = \"brownian\"\nq = \"zero\"\npaths = 1\n",
            "[ladder]\ncoarse = 4\nfine = 5\n",
            "[integrate]\nintegrand = \"x\"\n",
        ),
    );
    let out = dir.path().join("iout");
    assert_eq!(
        regsde().arg("--config").arg(&cfg).arg("--out").arg(&out).arg("--quiet").status().unwrap().code(),
        Some(0)
    );
    for name in ["integrate_04.csv", "integrate_05.csv"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "t,symmetric,forward,bracket_half");
    }
}

#[test]
fn solve_exports_solution_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.toml");
    write(
        &cfg,
        concat!(
            "command = \"solve\"\nseed = 3\n[grid]\nn_steps = 512\n",
            "[driver]\nr = \"fbm:0.7\"\nq = \"zero\"\npaths = 1\n",
            "[solve]\ncoefficient = \"linear\"\ncase = \"hoelder\"\neta = 1.0\n",
        ),
    );
    let out = dir.path().join("out");
    assert_eq!(
        regsde().arg("--config").arg(&cfg).arg("--out").arg(&out).arg("--quiet").status().unwrap().code(),
        Some(0)
    );
    let text = fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# regsde "));
    assert_eq!(lines.next().unwrap(), "t,x,y");
    assert_eq!(lines.count(), 513);
}

#[test]
fn demo_nonuniq_reports_two_solutions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("n.toml");
    write(
        &cfg,
        concat!(
            "command = \"demo-nonuniq\"\nseed = 3\n[grid]\nn_steps = 512\n",
            "[driver]\nr = \"linear\"\nq = \"zero\"\npaths = 1\n",
            "[nonuniq]\nexponent = 0.5\n",
        ),
    );
    let out = dir.path().join("out");
    let output = regsde()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = fs::read_to_string(out.join("nonuniqueness.csv")).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "t,xi,x1,x2");
    let last = text.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    // xi = t ends at 1; the two solutions end 0.25 apart
    assert!((cols[1] - 1.0).abs() < 1e-12);
    assert!((cols[3] - cols[2] - 0.25).abs() < 1e-9);
}
