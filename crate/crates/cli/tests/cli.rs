use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn modwave(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn summary(dir: &Path, args: &[&str]) -> (Output, Value) {
    let path = dir.join("summary.json");
    let mut all = args.to_vec();
    let p = path.to_str().unwrap();
    all.extend(["--summary", p]);
    let out = modwave(&all);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    (out, v)
}

#[test]
fn bbm_sweep_flips_once_at_sqrt3() {
    let dir = tempfile::tempdir().unwrap();
    let (out, s) = summary(
        dir.path(),
        &[
            "index",
            "--equation",
            "bbm",
            "--k-range",
            "0.5,3",
            "--k-steps",
            "251",
        ],
    );
    let flips = s["flips"].as_array().unwrap();
    assert_eq!(flips.len(), 1);
    let (lo, hi) = (
        flips[0]["k_lo"].as_f64().unwrap(),
        flips[0]["k_hi"].as_f64().unwrap(),
    );
    assert!(lo <= 3f64.sqrt() && 3f64.sqrt() <= hi);
    assert!((s["critical_wavenumber"].as_f64().unwrap() - 3f64.sqrt()).abs() < 1e-9);
    let text = stdout(&out);
    assert!(text.starts_with("k,i1,i2m,i2p,i3m,i3p,i_eq,ind,verdict,resonances\n"));
    assert_eq!(text.lines().count(), 252);
    assert!(!text.contains('\r'));
}

#[test]
fn boussinesq_sweep_is_stable_after_pencil() {
    let dir = tempfile::tempdir().unwrap();
    let (_, s) = summary(
        dir.path(),
        &["index", "--equation", "boussinesq", "--k-range", "0.1,10"],
    );
    let verdicts = s["verdicts"].as_object().unwrap();
    assert_eq!(verdicts.len(), 1);
    assert_eq!(verdicts["ModulationallyStable"], 251);
}

#[test]
fn fractional_kdv_at_alpha_one_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let (_, s) = summary(dir.path(), &["index", "--equation", "kdv", "--alpha", "1"]);
    assert_eq!(
        s["verdicts"]
            .as_object()
            .unwrap()
            .keys()
            .collect::<Vec<_>>(),
        ["Degenerate"]
    );
}

#[test]
fn csv_is_byte_stable_across_runs_and_thread_counts() {
    let args = ["index", "--equation", "boussinesq", "--k-steps", "40"];
    let one = Command::new(env!("CARGO_BIN_EXE_modwave"))
        .args(args)
        .env("MODWAVE_THREADS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_modwave"))
        .args(args)
        .env("MODWAVE_THREADS", "4")
        .output()
        .unwrap();
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, modwave(&args).stdout);
}

#[test]
fn bad_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_modwave"))
        .args(["index", "--k", "1"])
        .env("MODWAVE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn diagram_orders_thresholds_and_draws_svg() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("fig.svg");
    let csv = dir.path().join("grid.csv");
    let (_, s) = summary(
        dir.path(),
        &[
            "diagram",
            "--alpha-range",
            "3,3",
            "--alpha-steps",
            "1",
            "--svg",
            svg.to_str().unwrap(),
            "-o",
            csv.to_str().unwrap(),
        ],
    );
    let k_of = |i: usize| s["curves"][i]["points"][0]["k"].as_f64().unwrap();
    assert_eq!(s["curves"][0]["equation"], "bbm");
    assert_eq!(s["curves"][1]["equation"], "boussinesq");
    assert!(k_of(0) > k_of(1));
    assert!((s["kdv_threshold_alpha"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let svg = std::fs::read_to_string(svg).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 2);
    let grid = std::fs::read_to_string(csv).unwrap();
    assert!(grid.starts_with("alpha,equation,k,ind,sign\n"));
    // above the level curve the sign is negative
    for line in grid.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let k: f64 = f[2].parse().unwrap();
        let kc = if f[1] == "bbm" { k_of(0) } else { k_of(1) };
        if (k - kc).abs() > 1e-9 {
            assert_eq!(f[4], if k > kc { "-1" } else { "1" }, "{line}");
        }
    }
}

#[test]
fn diagram_kdv_row_at_two_is_stable() {
    let out = modwave(&[
        "diagram",
        "--alpha-range",
        "2,2",
        "--alpha-steps",
        "1",
        "--diagram-equations",
        "kdv",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).lines().skip(1).all(|l| l.ends_with(",1")));
}

#[test]
fn spectrum_examples() {
    let dir = tempfile::tempdir().unwrap();
    for (args, unstable) in [
        (["--equation", "bbm", "--k", "1", "--xi", "0.01"], false),
        (["--equation", "bbm", "--k", "2", "--xi", "0.005"], true),
        (
            ["--equation", "boussinesq", "--k", "1", "--xi", "0.01"],
            false,
        ),
    ] {
        let mut all = vec!["spectrum", "--a", "0.01", "-n", "32"];
        all.extend(args);
        let (out, s) = summary(dir.path(), &all);
        let max_re = s["max_re"].as_f64().unwrap();
        assert_eq!(max_re > 1e-8, unstable, "{args:?}: {max_re}");
        assert!(stdout(&out).starts_with("xi,index,re,im\n"));
    }
}

#[test]
fn zero_amplitude_spectrum_is_imaginary() {
    let dir = tempfile::tempdir().unwrap();
    let (_, s) = summary(
        dir.path(),
        &[
            "spectrum",
            "--equation",
            "boussinesq",
            "--a",
            "0",
            "--xi-range",
            "0,0.5",
            "--xi-steps",
            "5",
        ],
    );
    assert!(s["max_re"].as_f64().unwrap() <= 1e-10);
    assert_eq!(s["slices"].as_array().unwrap().len(), 5);
}

#[test]
fn empty_xi_range_is_a_config_error() {
    let out = modwave(&["spectrum", "--xi-range", "0.3,0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("xi_range"));
}

#[test]
fn large_amplitude_warns() {
    let out = modwave(&["wave", "--a", "0.08"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn wave_speed_matches_expansion() {
    let dir = tempfile::tempdir().unwrap();
    let (out, s) = summary(
        dir.path(),
        &[
            "wave",
            "--equation",
            "boussinesq",
            "--k",
            "1",
            "--a",
            "0.01",
        ],
    );
    let a: f64 = 0.01;
    let expected = 0.5f64.sqrt() * (1.0 - 5.0 * a * a / 12.0);
    assert!((s["speed"].as_f64().unwrap() - expected).abs() < 1e-7);
    assert!(stdout(&out).starts_with("j,u_hat,u_stokes,q_hat,q_stokes\n"));
}

#[test]
fn resonances_and_collisions() {
    let dir = tempfile::tempdir().unwrap();
    let (out, s) = summary(
        dir.path(),
        &[
            "resonances",
            "--equation",
            "bbm",
            "--k-range",
            "0.1,5",
            "--k",
            "1.8",
        ],
    );
    let text = stdout(&out);
    assert!(
        text.starts_with("resonance,index,location,k\nR1,i1,at,1.73205080756"),
        "{text}"
    );
    let hits = s["collisions"].as_array().unwrap();
    let xi = (1.0f64 - 3.0 / (1.8 * 1.8)).sqrt();
    assert!(hits
        .iter()
        .any(|c| c["n1"] == -1 && c["n2"] == 1 && (c["xi"].as_f64().unwrap() - xi).abs() < 1e-10));
    let (_, s) = summary(dir.path(), &["resonances", "--equation", "bbm", "--k", "1"]);
    assert!(s["collisions"].as_array().unwrap().is_empty());
}

#[test]
fn validate_subset() {
    let out = modwave(&["validate", "--only", "quartic"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("[PASS] #8 quartic"), "{text}");
    assert!(text.ends_with("1/1 checks passed\n"));
}

#[test]
fn validate_failure_sets_exit_code() {
    let out = modwave(&["validate", "--only", "collision-floor"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("[FAIL] #2 collision-floor"));
}

#[test]
fn config_round_trip_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"equation": "boussinesq", "symbol": {"name": "m", "expr": "1/sqrt(1+c*k^2)", "params": {"c": 0.1}},
            "k_range": [0.1, 2.5], "k_steps": 12, "a": 0.005, "xi": 0.0625, "n": 40}"#,
    )
    .unwrap();
    let first = modwave(&["--config", cfg.to_str().unwrap(), "index", "--print-config"]);
    assert!(first.status.success());
    let emitted = dir.path().join("emitted.json");
    std::fs::write(&emitted, &first.stdout).unwrap();
    let second = modwave(&[
        "--config",
        emitted.to_str().unwrap(),
        "index",
        "--print-config",
    ]);
    assert_eq!(first.stdout, second.stdout);

    let over = modwave(&[
        "index",
        "--config",
        cfg.to_str().unwrap(),
        "--k-steps",
        "3",
        "--print-config",
    ]);
    let v: Value = serde_json::from_slice(&over.stdout).unwrap();
    assert_eq!(v["k_steps"], 3);
    assert_eq!(v["equation"], "boussinesq");
}

#[test]
fn config_errors_report_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{\n  \"k\": 1.0,\n  \"k_step\": 4\n}\n").unwrap();
    let out = modwave(&["index", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("k_step") && err.contains("line 3"), "{err}");
}
