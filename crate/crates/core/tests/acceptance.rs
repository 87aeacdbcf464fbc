//! Acceptance suite: one pass/fail line per criterion, then a replay of the
//! binary under different worker counts.

use std::process::Command;

use spinlab::rng::configured_threads;
use spinlab::verification::{determinism_commands, run_criterion, CRITERION_COUNT};

const SEED: u64 = 20_240_601;

fn binary_replay() -> (bool, String) {
    let dir = tempfile::tempdir().expect("temp dir");
    let mut mismatched = Vec::new();
    for (i, cmd) in determinism_commands().into_iter().enumerate() {
        let mut outputs = Vec::new();
        for threads in ["1", "4"] {
            let path = dir.path().join(format!("{i}-{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_spinlab"))
                .args(&cmd)
                .arg("--output")
                .arg(&path)
                .env("SPINLAB_THREADS", threads)
                .status()
                .expect("binary runs");
            outputs.push((status.code(), std::fs::read(&path).unwrap_or_default()));
        }
        if outputs[0] != outputs[1] || outputs[0].1.is_empty() {
            mismatched.push(cmd[0].clone());
        }
    }
    (mismatched.is_empty(), format!("binary under SPINLAB_THREADS=1 vs 4, mismatched: {mismatched:?}"))
}

fn main() {
    let threads = configured_threads();
    let mut failed = Vec::new();
    for id in 1..=CRITERION_COUNT {
        match run_criterion(id, SEED, threads) {
            Ok(mut outcome) => {
                if id == 15 {
                    let (ok, detail) = binary_replay();
                    outcome.passed &= ok;
                    outcome.detail = format!("{}; {detail}", outcome.detail);
                }
                println!("{outcome}");
                if !outcome.passed {
                    failed.push(id);
                }
            }
            Err(e) => {
                println!("criterion {id:>2} [FAIL] error: {e}");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {CRITERION_COUNT} criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
