use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ckdv_cli::config::{Cadence, GridSpec, OutputSpec, SystemSpec, TauSpec, TimeSpec};
use ckdv_cli::RunConfig;
use ckdv_core::analytic::{InitialCondition, SolitonParams};
use ckdv_core::Boundary;
use proptest::prelude::*;

fn ckdv(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ckdv"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

const QUICK: &str = r#"
scenario = "hs-soliton-A2"
[grid]
h = 0.4
[time]
t0 = 0.05
[output]
directory = "quick"
snapshot_every = { time = 0.025 }
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn lists_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let out = ckdv(&["scenarios"], dir.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.contains("hs-multisoliton"));
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "quick.toml", QUICK);
    let out = ckdv(&["run", &cfg], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("quick");
    for f in [
        "snapshots.csv",
        "diagnostics.ndjson",
        "error_series.csv",
        "stability.json",
        "manifest.json",
        "snap_000000.csv",
        "conserved.svg",
        "error.svg",
        "profile_000000.svg",
    ] {
        assert!(run.join(f).exists(), "missing {f}");
    }
    let snap = fs::read_to_string(run.join("snap_000000.csv")).unwrap();
    let mut lines = snap.lines();
    assert_eq!(lines.next(), Some("x,theta1,theta2"));
    assert_eq!(lines.count(), 100);

    let index = fs::read_to_string(run.join("snapshots.csv")).unwrap();
    assert!(index.starts_with("step,t,file\n"));
    assert!(index.lines().count() >= 3);

    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["scenario"], "hs-soliton-A2");
    assert_eq!(manifest["soliton"]["origin_amplitude"], 2.0);
    assert_eq!(manifest["status"], "Completed");

    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("stability.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "Pass");

    let log = fs::read_to_string(run.join("diagnostics.ndjson")).unwrap();
    let first: serde_json::Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!(first["step"], 0);
    assert_eq!(first["peak_count_mode1"], 1);
    assert!(first["conserved_hs"].is_number());
}

#[test]
fn scenario_name_runs_directly_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = ckdv(
        &["run", "hs-nonsmooth-triangle", "--set", "grid.h=0.4", "--set", "time.t0=0.02", "--out", "tri"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("tri/snap_000000.csv").exists());
    assert!(!dir.path().join("tri/error_series.csv").exists());
}

#[test]
fn stability_gate_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "big.toml", &format!("{QUICK}\n"));
    let refused = ckdv(&["run", &cfg, "--set", "time.tau=0.5"], dir.path());
    assert_eq!(code(&refused), 3);
    assert!(String::from_utf8_lossy(&refused.stderr).contains("--force-unstable"));
    let forced = ckdv(&["run", &cfg, "--set", "time.tau=0.5", "--force-unstable"], dir.path());
    assert!(matches!(code(&forced), 0 | 4));
}

#[test]
fn divergence_exits_with_four_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = ckdv(
        &[
            "run",
            "hs-soliton-A2",
            "--set",
            "time.tau=0.0045",
            "--force-unstable",
            "--out",
            "blown",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("blown");
    assert!(run.join("snap_000000.csv").exists());
    let manifest = fs::read_to_string(run.join("manifest.json")).unwrap();
    assert!(manifest.contains("Diverged"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", "scenario = \"hs-soliton\"\n[grid]\nh = 0.3\n");
    assert_eq!(code(&ckdv(&["run", &bad], dir.path())), 2);
    assert_eq!(code(&ckdv(&["run", "no-such-file.toml"], dir.path())), 2);
    let unknown = write_config(dir.path(), "unknown.toml", "scenario = \"hs-soliton\"\nbogus = 1\n");
    assert_eq!(code(&ckdv(&["run", &unknown], dir.path())), 2);
}

#[test]
fn repeated_runs_write_identical_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "quick.toml", QUICK);
    assert_eq!(code(&ckdv(&["run", &cfg, "--out", "a"], dir.path())), 0);
    assert_eq!(code(&ckdv(&["run", &cfg, "--out", "b"], dir.path())), 0);
    let index = fs::read_to_string(dir.path().join("a/snapshots.csv")).unwrap();
    for line in index.lines().skip(1) {
        let file = line.rsplit(',').next().unwrap();
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
    let last = index.lines().last().unwrap().rsplit(',').next().unwrap().to_string();
    let out = ckdv(
        &["compare", &format!("a/{last}"), &format!("b/{last}")],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("theta1: max |diff| 0.000000e0"), "{text}");
}

#[test]
fn sweep_makes_one_directory_per_combination() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "quick.toml", QUICK);
    let out = ckdv(
        &["sweep", &cfg, "--vary", "ic.m=0.8,1.0", "--vary", "grid.h=0.4,0.5", "--out", "sw"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for label in ["ic.m=0.8_grid.h=0.4", "ic.m=1.0_grid.h=0.5"] {
        assert!(dir.path().join("sw").join(label).join("manifest.json").exists(), "{label}");
    }
    let table = fs::read_to_string(dir.path().join("sw/sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn converge_writes_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "quick.toml", QUICK);
    let out = ckdv(&["converge", &cfg, "--h-list", "0.5,0.4", "--out", "conv"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("conv/convergence.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "h,tau,error,order,diverged");
    assert_eq!(rows.len(), 3);
    assert!(rows[2].split(',').nth(3).is_some_and(|o| !o.is_empty()));
    let unsorted = ckdv(&["converge", &cfg, "--h-list", "0.4,0.5"], dir.path());
    assert_eq!(code(&unsorted), 2);
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        0.05..0.5f64,
        0.0..5.0f64,
        prop::option::of(1e-7..1e-3f64),
        0.5..2.0f64,
        0.3..1.5f64,
        0.0..0.9f64,
        prop::bool::ANY,
        prop::option::of(1u64..1000),
    )
        .prop_map(|(h, t0, tau, alpha, m, d, padded, every)| RunConfig {
            scenario: None,
            system: SystemSpec::preset("hs-integrable"),
            grid: GridSpec {
                x0: -10.0,
                x1: 10.0,
                h,
                boundary: if padded { Boundary::ZeroPadded } else { Boundary::Periodic },
            },
            time: TimeSpec {
                t0,
                tau: tau.map_or(TauSpec::Auto, TauSpec::Fixed),
                alpha,
            },
            ic: InitialCondition::HsSoliton(SolitonParams::new(m, d).unwrap()),
            output: OutputSpec {
                snapshot_every: every.map(Cadence::Steps),
                ..OutputSpec::default()
            },
        })
}

proptest! {
    #[test]
    fn config_toml_round_trip(cfg in arb_config()) {
        let text = cfg.to_toml();
        prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }
}
