use std::process::{Command, Output};

fn spinlab(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinlab"))
        .args(args)
        .env("SPINLAB_THREADS", threads)
        .output()
        .expect("binary runs")
}

#[test]
fn betac_prints_a_decimal() {
    let out = spinlab(&["betac", "--d", "100"], "1");
    assert!(out.status.success());
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((v * 10.0 - 0.5).abs() < 0.025);
}

#[test]
fn sample_is_byte_identical_across_thread_counts() {
    let args = ["sample", "--n", "8", "--d", "4", "--beta-frac", "0.5", "--seed", "1", "--replicas", "2"];
    let a = spinlab(&args, "1");
    let b = spinlab(&args, "4");
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(a.stdout.starts_with(b"replica,sweep,energy,magnetization,spins\n"));
}

#[test]
fn partition_fail_exits_two_with_witness() {
    let out = spinlab(&["partition", "--n", "200", "--d", "8", "--epsilon", "0.3", "--seed", "7"], "2");
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    match v["status"].as_str().unwrap() {
        "fail" => {
            assert_eq!(out.status.code(), Some(2));
            assert!(!v["failure_message"].as_str().unwrap().is_empty());
        }
        "ok" => assert_eq!(out.status.code(), Some(0)),
        other => panic!("status {other}"),
    }
}

#[test]
fn partition_accepts_threshold_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let th = dir.path().join("th.json");
    std::fs::write(
        &th,
        r#"{"path_range":1,"short_cycle":3,"cycle_separation":4,"unicyclic_radius":4,"tree_radius":8,
            "cycle_buffer":1,"refine_buffer":1,"refine_radius":3,"verdict_budget":1000000}"#,
    )
    .unwrap();
    let out_path = dir.path().join("p.json");
    let out = spinlab(
        &[
            "partition", "--n", "300", "--d", "8", "--mean-degree", "0.5", "--beta", "0.6", "--epsilon", "0.5",
            "--seed", "4", "--thresholds", th.to_str().unwrap(), "--output", out_path.to_str().unwrap(),
        ],
        "1",
    );
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["thresholds"]["tree_radius"], 8);
    assert_eq!(out.status.code(), Some(if v["status"] == "ok" { 0 } else { 2 }));
}

#[test]
fn bad_flags_exit_64_with_json_error() {
    let out = spinlab(&["mix", "--epsilon", "1.5"], "1");
    assert_eq!(out.status.code(), Some(64));
    let err = String::from_utf8(out.stderr).unwrap();
    let last = err.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(last).unwrap();
    assert_eq!(v["error"], "config");

    let out = spinlab(&["frobnicate"], "1");
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn runtime_errors_are_machine_readable() {
    let out = spinlab(&["mix", "--n", "30", "--d", "3", "--beta", "0.3"], "1");
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    let v: serde_json::Value = serde_json::from_str(err.lines().last().unwrap()).unwrap();
    assert_eq!(v["error"], "too_large");
}

#[test]
fn tails_and_iharabass_report_within_bounds() {
    let out = spinlab(&["tails", "theta", "--d", "30", "--delta", "0.5", "--samples", "5000"], "2");
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("harness,params,samples,empirical,bound,mc_sigma\n"));

    let out = spinlab(&["iharabass", "--trials", "500"], "2");
    let text = String::from_utf8(out.stdout).unwrap();
    let residual: f64 = text.lines().nth(1).unwrap().split(',').nth(3).unwrap().parse().unwrap();
    assert!(residual <= 1e-8);
}

#[test]
fn json_format_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("js.json");
    let out = spinlab(
        &["jsnorm", "--n", "60", "--d", "3", "--beta-frac", "0.5", "--replicas", "3", "--format", "json", "--output", path.to_str().unwrap()],
        "2",
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 3);
}
