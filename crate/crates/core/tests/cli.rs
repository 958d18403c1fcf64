use std::path::Path;
use std::process::Command;

fn siltlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_siltlab"))
        .args(args)
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    siltlab(args).status.code().unwrap()
}

#[test]
fn malformed_config_exits_two_and_names_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "eps_schedule = [0.01, 0.1]\n").unwrap();
    let out = siltlab(&["verify-tanaka", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps_schedule"));

    std::fs::write(&cfg, "study = \"tail-lemma\"\n").unwrap();
    assert_eq!(
        code(&["verify-tanaka", "--config", cfg.to_str().unwrap()]),
        2
    );
    assert_eq!(code(&["tail-lemma", "--threads", "0"]), 2);
    assert_eq!(code(&["tail-lemma", "--n-paths", "1"]), 2);
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    assert_eq!(
        code(&[
            "classical-tanaka",
            "--n-paths",
            "4",
            "--out",
            out.to_str().unwrap()
        ]),
        3
    );
}

#[test]
fn small_study_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(
        &cfg,
        "x_values = [0.3]\neps_schedule = [0.1, 0.05]\ndt_schedule = [1e-3]\nn_paths = 50\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let c = code(&[
        "classical-tanaka",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(c == 0 || c == 1, "exit {c}");
    for f in ["replicates.csv", "aggregate.csv", "summary.json"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["study"], "classical-tanaka");
    assert_eq!(summary["pass"].as_bool(), Some(c == 0));
    let rows = std::fs::read_to_string(out.join("replicates.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 2 * 50);
}

#[test]
fn simulate_writes_path_curve_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "dt_schedule = [1e-2]\n").unwrap();
    let out = dir.path().join("sim");
    let o = out.to_str().unwrap();
    assert_eq!(
        code(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            o,
            "--replicate",
            "2"
        ]),
        0
    );
    let path = std::fs::read_to_string(Path::new(o).join("path.csv")).unwrap();
    assert_eq!(path.lines().count(), 1 + 101);
    assert!(out.join("curve.csv").is_file() && out.join("report.csv").is_file());
}
