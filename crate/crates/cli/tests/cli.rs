use std::fs;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn hbridge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbridge")).args(args).output().expect("binary runs")
}

fn sh(line: &str) -> Output {
    hbridge(&line.split_whitespace().collect::<Vec<_>>())
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn verify_kernels_lists_residuals() {
    let out = hbridge(&["verify-kernels", "--kernel", "tanh:1:0", "--tol", "1e-6", "--seed", "7"]);
    assert_eq!(code(&out), 0);
    let v = report(&out);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["status"], "pass");
    let k = &v["results"]["kernels"][0];
    for key in ["chapman_kolmogorov", "eigen", "normalization", "duality"] {
        assert!(k[key].as_f64().unwrap() < 1e-6, "{key}");
    }
}

#[test]
fn verify_kernels_whole_catalog() {
    let out = hbridge(&["verify-kernels"]);
    assert_eq!(code(&out), 0);
    assert_eq!(report(&out)["results"]["kernels"].as_array().unwrap().len(), 7);
}

#[test]
fn shared_bridges_pass() {
    let out = sh("compare-bridges --a gaussian --b tanh:1:0 --x 0 --t 1 --y 0.5 --n 20000 --seed 7");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = report(&out);
    assert!(v["results"]["ks"]["p_value"].as_f64().unwrap() > 0.01);
    assert!(v["results"]["energy"]["p_value"].as_f64().unwrap() > 0.01);
    assert_eq!(v["results"]["ks"]["method"], "ks");
}

#[test]
fn flipped_variants_separate_at_the_origin() {
    let out = sh("compare-bridges --a flipbessel:X --b flipbessel:Y --x 0 --t 1 --y 1 --n 5000");
    assert_eq!(code(&out), 1);
    let v = report(&out);
    assert_eq!(v["status"], "fail");
    assert_eq!(v["failure"]["invariant"], "bridges.first_step_sign");
    assert_eq!(v["failure"]["observed"], 1.0);
    assert_eq!(v["results"]["first_step_positive"]["a"], 1.0);
    assert_eq!(v["results"]["first_step_positive"]["b"], 0.0);
}

#[test]
fn flipped_variants_agree_away_from_the_origin() {
    let out = sh("compare-bridges --a flipbessel:X --b flipbessel:Y --x 0.7 --t 1 --y -1 --n 5000 --energy-n 400");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&hbridge(&[])), 2);
    assert_eq!(code(&hbridge(&["frobnicate"])), 2);
    assert_eq!(code(&hbridge(&["verify-kernels", "--bogus", "1"])), 2);
    assert_eq!(code(&hbridge(&["verify-kernels", "--kernel", "cauchy"])), 2);
    assert_eq!(code(&hbridge(&["sample-bridge", "--t", "-1"])), 2);
    assert_eq!(code(&hbridge(&["sample-bridge", "--n", "0"])), 2);
    assert_eq!(code(&hbridge(&["sde-crosscheck", "--kernel", "bessel3"])), 2);
    assert_eq!(code(&hbridge(&["sample-bridge", "--kernel", "bessel3", "--x", "-1"])), 2);
    assert_eq!(code(&hbridge(&["--help"])), 0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# bridge run\ncommand = sample-bridge\nkernel = gaussian  # Brownian\nn = 300\nseed = 3\ny = 1\n")
        .unwrap();
    let out = hbridge(&["--config", cfg.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(code(&out), 0);
    let v = report(&out);
    assert_eq!(v["command"], "sample-bridge");
    assert_eq!(v["config"]["seed"], "5");
    assert_eq!(v["config"]["n"], "300");
    assert_eq!(v["results"]["paths"], 300);

    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&hbridge(&["verify-kernels", "--config", cfg.to_str().unwrap()])), 2);
    assert_eq!(code(&hbridge(&["verify-kernels", "--config", "/nonexistent/run.conf"])), 2);
}

fn without_timestamp(text: &str) -> String {
    text.lines().filter(|l| !l.contains("\"generated_at\"")).collect::<Vec<_>>().join("\n")
}

#[test]
fn same_config_and_seed_give_identical_reports() {
    let dir = tempdir().unwrap();
    let paths: Vec<String> = (0..3).map(|i| dir.path().join(format!("r{i}.json")).display().to_string()).collect();
    let base =
        ["compare-bridges", "--a", "gaussian", "--b", "drift:1", "--y", "0.3", "--n", "3000", "--energy-n", "300"];
    for (i, p) in paths.iter().enumerate() {
        let mut args = base.to_vec();
        args.extend(["--out", p.as_str()]);
        if i == 2 {
            args.extend(["--threads", "1"]);
        }
        let out = hbridge(&args);
        assert_eq!(code(&out), 0);
    }
    let texts: Vec<String> = paths.iter().map(|p| fs::read_to_string(p).unwrap()).collect();
    assert_eq!(texts[0].matches("generated_at").count(), 1);
    // The out path and thread count are echoed in the config block; drop them too.
    let strip = |t: &str| {
        without_timestamp(t)
            .lines()
            .filter(|l| !l.contains("\"out\"") && !l.contains("\"threads\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&texts[0]), strip(&texts[1]));
    assert_eq!(strip(&texts[0]), strip(&texts[2]));
}

#[test]
fn sample_bridge_writes_long_csv() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("paths.csv");
    let out = hbridge(&[
        "sample-bridge",
        "--kernel",
        "bessel3",
        "--x",
        "0.5",
        "--y",
        "1",
        "--n",
        "50",
        "--grid",
        "0,0.25,0.5,1",
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "draw_id,time,value");
    assert_eq!(lines.len(), 1 + 50 * 4);
    assert_eq!(lines[1], "0,0,0.5");
    assert_eq!(lines[4], "0,1,1");
}

#[test]
fn verify_chain_from_file() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("chain.txt");
    fs::write(&path, "# three states\n3\n-2 1 1\n1 -2 0.5\n1 1 -2.5\n1 1 1\n").unwrap();
    let out = hbridge(&["verify-chain", "--chain", path.to_str().unwrap(), "--x", "0", "--y", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let v = report(&out);
    assert_eq!(v["results"]["recovery"]["verified"], true);
    assert_eq!(v["results"]["states"], 3);
}

#[test]
fn unrelated_chains_fail_recovery() {
    let out = hbridge(&["verify-chain", "--chain", "random:8:1", "--chain-b", "random:8:2"]);
    assert_eq!(code(&out), 1);
    assert_eq!(report(&out)["failure"]["invariant"], "finite_chain.bridges_equal");
}

#[test]
fn extract_psi_recovers_cosh() {
    let dir = tempdir().unwrap();
    let csv = dir.path().join("psi.csv");
    let out = hbridge(&["extract-psi", "--a", "gaussian", "--b", "tanh:1:0", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = report(&out);
    assert!((v["results"]["lambda"].as_f64().unwrap() - 0.5).abs() < 1e-10);
    for line in fs::read_to_string(&csv).unwrap().lines().skip(1) {
        let (z, psi) = line.split_once(',').unwrap();
        let (z, psi): (f64, f64) = (z.parse().unwrap(), psi.parse().unwrap());
        assert!((psi / z.cosh() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn bessel_demo_and_sde_crosscheck() {
    let out = hbridge(&["bessel-demo", "--t", "0.5", "--n", "20000"]);
    assert_eq!(code(&out), 0);
    let out = hbridge(&["sde-crosscheck", "--kernel", "drift:0.5", "--n", "20000", "--dt", "0.01", "--tol", "0.05"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}
