//! End-to-end checks of the `locmix` binary: exit codes, determinism and
//! output formats.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_locmix"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("locmix-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn simulate_then_fit_roundtrip_and_byte_identical_rerun() {
    let dir = workdir("roundtrip");
    let data = dir.join("data.txt");
    let out = run(&[
        "simulate",
        "--family",
        "binomial:10",
        "--mu",
        "5.0",
        "--count",
        "40",
        "--seed",
        "7",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let n_lines = fs::read_to_string(&data)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .count();
    assert_eq!(n_lines, 40);

    let fit1 = dir.join("fit1.json");
    let fit2 = dir.join("fit2.json");
    for p in [&fit1, &fit2] {
        let out = run(&[
            "fit",
            "--family",
            "binomial:10",
            "--order",
            "4",
            "--data",
            data.to_str().unwrap(),
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let a = fs::read(&fit1).unwrap();
    let b = fs::read(&fit2).unwrap();
    // byte-identical output apart from the differing --out path in the echo
    let norm = |bytes: &[u8], tag: &str| {
        String::from_utf8(bytes.to_vec()).unwrap().replace(tag, "OUT")
    };
    assert_eq!(
        norm(&a, fit1.to_str().unwrap()),
        norm(&b, fit2.to_str().unwrap())
    );
    let report: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(report["loglik"].as_f64().unwrap() >= report["loglik_unmixed"].as_f64().unwrap());
}

#[test]
fn empty_data_is_a_usage_error() {
    let dir = workdir("empty");
    let data = dir.join("empty.txt");
    fs::write(&data, "# only comments\n\n").unwrap();
    let out = run(&[
        "fit",
        "--family",
        "poisson",
        "--order",
        "3",
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn marginal_requires_epsilon() {
    let dir = workdir("noeps");
    let data = dir.join("data.txt");
    fs::write(&data, "4\n5\n6\n5\n4\n").unwrap();
    let out = run(&[
        "marginal",
        "--family",
        "binomial:10",
        "--order",
        "4",
        "--data",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stderr(&out).contains("epsilon"), "{}", stderr(&out));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = workdir("badcfg");
    let cfg = dir.join("cfg.json");
    fs::write(&cfg, r#"{"family": "poisson", "orderr": 3}"#).unwrap();
    let out = run(&["boundary", "--config", cfg.to_str().unwrap(), "--mu", "2.0"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn config_file_with_flag_override() {
    let dir = workdir("cfg");
    let data = dir.join("data.txt");
    fs::write(&data, "3\n4\n5\n6\n5\n4\n5\n").unwrap();
    let cfg = dir.join("cfg.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"family": {{"kind": "binomial", "n": 10}}, "order": 3, "data": "{}"}}"#,
            data.to_str().unwrap()
        ),
    )
    .unwrap();
    // flag overrides the config's order
    let out = run(&["fit", "--config", cfg.to_str().unwrap(), "--order", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["model"]["order"].as_u64(), Some(4));
}

#[test]
fn rate_check_csv_shape() {
    let out = run(&[
        "rate-check",
        "--family",
        "poisson",
        "--order",
        "3",
        "--mu",
        "2.0",
        "--kind",
        "discrete",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let row = text
        .lines()
        .find(|l| l.starts_with("discrete,"))
        .expect("data row");
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[..3], ["discrete", "3", "2"]);
    let slope: f64 = fields[3].parse().unwrap();
    assert!((slope - 2.0).abs() < 0.3, "slope {slope}");
    assert_eq!(fields[4], "true");
}

#[test]
fn rate_check_rejects_bad_schedule() {
    let out = run(&[
        "rate-check",
        "--family",
        "poisson",
        "--order",
        "3",
        "--mu",
        "2.0",
        "--eps-schedule",
        "0.01,0.02,0.04",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn region_csv_has_header_and_degenerate_row() {
    let out = run(&[
        "region",
        "--family",
        "binomial:20",
        "--order",
        "4",
        "--mu",
        "8.0",
        "--m-lo",
        "6.0",
        "--m-hi",
        "10.0",
        "--grid",
        "5",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("mu1,mu2,rho,lambda2,lambda3,lambda4"));
    let first: Vec<f64> = rows
        .next()
        .unwrap()
        .split(',')
        .map(|f| f.parse().unwrap())
        .collect();
    assert_eq!(&first[..3], &[8.0, 8.0, 1.0]);
    assert!(first[3..].iter().all(|&l| l == 0.0));
}

#[test]
fn simulate_is_deterministic_under_seed() {
    let args = [
        "simulate", "--family", "poisson", "--mu", "3.0", "--count", "25", "--seed", "11",
    ];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "simulate", "--family", "poisson", "--mu", "3.0", "--count", "25", "--seed", "12",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn thread_cap_does_not_change_marginal_output() {
    let dir = workdir("threads");
    let data = dir.join("data.txt");
    fs::write(&data, "4\n5\n6\n5\n4\n7\n3\n5\n").unwrap();
    let args = [
        "marginal",
        "--family",
        "binomial:10",
        "--order",
        "3",
        "--data",
        data.to_str().unwrap(),
        "--epsilon",
        "1.0",
        "--draws",
        "64",
        "--mu-points",
        "9",
        "--seed",
        "5",
    ];
    let one = bin().args(args).env("LOCMIX_THREADS", "1").output().unwrap();
    let four = bin().args(args).env("LOCMIX_THREADS", "4").output().unwrap();
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(one.stdout, four.stdout);
}
