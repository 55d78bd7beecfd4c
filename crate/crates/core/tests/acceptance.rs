//! Acceptance suite: one PASS/FAIL line per criterion, run with
//! `cargo test --release --test acceptance -- --nocapture`.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ghzsim::checks::{self, Check, ThresholdCheckConfig};
use ghzsim::ghz::Teleporter;
use ghzsim::steane::SteaneCode;

const SEED: u64 = 42;
const MC_SAMPLES: u64 = 100_000;

fn timed(label: &str, f: impl FnOnce() -> Check) -> Check {
    let start = Instant::now();
    let mut c = f();
    c.name = label.to_string();
    c.detail = format!("{} [{:.1} s]", c.detail, start.elapsed().as_secs_f64());
    c
}

fn run_cli(args: &[&str], threads: usize, out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_ghzsim"))
        .args(args)
        .args(["--threads", &threads.to_string(), "--out"])
        .arg(out)
        .env_remove("GHZSIM_OUT_DIR")
        .output()
        .expect("binary runs");
    assert!(
        status.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    std::fs::read(out).expect("report written")
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().expect("tempdir");
    let seed = SEED.to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["bs-table"],
        vec![
            "logical-bm",
            "--n",
            "8",
            "--samples",
            "100000",
            "--seed",
            &seed,
        ],
        vec![
            "teleport",
            "--n",
            "4",
            "--eta",
            "0.2",
            "--samples",
            "100000",
            "--seed",
            &seed,
        ],
        vec!["curves", "--max-nbar", "20", "--step", "2"],
        vec![
            "curves",
            "--max-nbar",
            "20",
            "--step",
            "2",
            "--format",
            "json",
        ],
        vec![
            "threshold",
            "--n",
            "4",
            "--samples",
            "10000",
            "--levels",
            "3",
            "--seed",
            &seed,
        ],
    ];
    let mut problems = Vec::new();
    for (i, args) in runs.iter().enumerate() {
        let a = run_cli(args, 1, &dir.path().join(format!("{i}-a")));
        let b = run_cli(args, 4, &dir.path().join(format!("{i}-b")));
        let c = run_cli(args, 4, &dir.path().join(format!("{i}-c")));
        if a != b || b != c {
            problems.push(args[0].to_string());
        }
    }
    Check {
        name: String::new(),
        passed: problems.is_empty(),
        detail: if problems.is_empty() {
            format!(
                "{} reports byte-identical across 1 and 4 workers and reruns",
                runs.len()
            )
        } else {
            format!("differing reports: {}", problems.join(", "))
        },
    }
}

#[test]
fn acceptance() {
    let mut results = Vec::new();
    results.push(timed("1 bs-exactness", checks::bs_exactness));
    results.push(timed("2 logical-bm-success", || {
        checks::logical_bm_success(MC_SAMPLES, SEED, 4, 8).expect("runs")
    }));
    results.push(timed("3 teleportation", || {
        checks::teleportation(MC_SAMPLES, SEED, &Teleporter::default()).expect("runs")
    }));
    results.push(timed("4 loss-law", || {
        checks::loss_law(MC_SAMPLES, SEED).expect("runs")
    }));
    results.push(timed("5 scheme-curves", checks::scheme_curves));
    results.push(timed("6 steane-decoder", || {
        checks::decoder_exhaustive(&SteaneCode::new())
    }));
    results.push(timed("7 thresholds", || {
        let scan = checks::threshold_scan(&ThresholdCheckConfig {
            samples: 10_000,
            levels: 3,
            replicas: 5,
            seed: SEED,
            n_min: 3,
            n_max: 8,
        });
        match scan {
            Ok(r) => checks::threshold_shape(&r),
            Err(e) => Check {
                name: String::new(),
                passed: false,
                detail: e.to_string(),
            },
        }
    }));
    results.push(timed("8 determinism", determinism));

    // Bypass libtest capture so the verdicts show up without --nocapture.
    let mut err = std::io::stderr().lock();
    for c in &results {
        writeln!(err, "{}", c.line()).unwrap();
    }
    drop(err);
    let failed: Vec<&str> = results
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.as_str())
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
