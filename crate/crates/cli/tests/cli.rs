use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sheetlab_cli::manifest::{RunManifest, MANIFEST_FILE};

fn sheetlab(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sheetlab"))
        .args(args)
        .arg("--out")
        .arg(root)
        .env("SHEETLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_dir(o: &Output) -> PathBuf {
    let text = stdout(o);
    let line = text.lines().find_map(|l| l.strip_prefix("run directory: ")).expect("run directory line");
    PathBuf::from(line)
}

fn run_ok(root: &Path, args: &[&str]) -> PathBuf {
    let o = sheetlab(root, args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    run_dir(&o)
}

#[test]
fn exponents_prints_exact_k3_values() {
    let root = tempfile::tempdir().unwrap();
    let o = sheetlab(root.path(), &["exponents", "--k", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for v in ["q > 26/9", "q < 7/3", "q < 16/7"] {
        assert!(text.contains(v), "missing {v} in\n{text}");
    }
    let table = std::fs::read_to_string(run_dir(&o).join("exponents.csv")).unwrap();
    assert!(table.contains("\r\n3,26/9,7/3,16/7,3/1,2/5,"), "{table}");
}

#[test]
fn unknown_flag_is_usage_error() {
    let root = tempfile::tempdir().unwrap();
    let o = sheetlab(root.path(), &["knapp", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = sheetlab(root.path(), &["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let root = tempfile::tempdir().unwrap();
    let o = sheetlab(root.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for cmd in ["simulate", "transform", "decay", "spectrum", "knapp", "exponents", "figures", "replay"] {
        assert!(stdout(&o).contains(cmd), "help lists {cmd}");
    }
}

#[test]
fn validation_errors_exit_one_and_leave_no_run() {
    let root = tempfile::tempdir().unwrap();
    assert_eq!(sheetlab(root.path(), &["exponents", "--k", "0"]).status.code(), Some(1));
    assert_eq!(sheetlab(root.path(), &["simulate", "--level", "80"]).status.code(), Some(1));
    assert_eq!(sheetlab(root.path(), &["knapp", "--delta-lo", "4", "--delta-hi", "5"]).status.code(), Some(1));
    assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 0);
}

#[test]
fn coverage_failure_exits_two() {
    let root = tempfile::tempdir().unwrap();
    // A coarse sheet looks rectifiable, so at theta = 0.5 every s on a grid
    // above 0.75 still has growing energy.
    let o = sheetlab(
        root.path(),
        &["spectrum", "--samples", "3000", "--seeds", "2", "--level", "8", "--radius-hi", "10", "--theta", "0.5,1"],
    );
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("coverage"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let root = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sheetlab"))
        .args(["exponents", "--out"])
        .arg(root.path())
        .env("SHEETLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"simulate": {"k": 2, "level": 6, "seed": 11}}"#).unwrap();
    let dir = run_ok(&root.path().join("runs"), &["simulate", "--config", cfg.to_str().unwrap(), "--level", "5"]);
    let m = RunManifest::load(&dir.join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.config["k"], 2);
    assert_eq!(m.config["level"], 5);
    assert_eq!(m.config["seed"], 11);
    assert_eq!(m.config["alpha"], 0.45);
    assert_eq!(m.seeds.len(), 2);
    assert!(dir.join("path_2.csv").is_file());
}

#[test]
fn unknown_config_key_exits_one() {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"levle": 6}"#).unwrap();
    let o = sheetlab(root.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

/// One small run of every command, each replayed into a fresh directory.
#[test]
fn every_command_replays_byte_identically() {
    let root = tempfile::tempdir().unwrap();
    let runs = root.path().join("runs");
    let decay = run_ok(&runs, &["decay", "--level", "8", "--samples", "1500", "--radius", "256", "--levels", "7,8"]);
    let knapp = run_ok(&runs, &["knapp", "--level", "10", "--delta-lo", "3", "--delta-hi", "6"]);
    let spectrum = run_ok(
        &runs,
        &[
            "spectrum",
            "--samples",
            "2000",
            "--seeds",
            "2",
            "--level",
            "10",
            "--radius-hi",
            "10",
            "--theta",
            "0.5,1",
            "--frostman",
            "--frostman-level",
            "10",
            "--frostman-radius-hi",
            "6",
            "--frostman-centres",
            "10",
        ],
    );
    let mut dirs = vec![
        run_ok(&runs, &["simulate", "--k", "2", "--level", "8"]),
        run_ok(&runs, &["transform", "--level", "8", "--count", "5"]),
        run_ok(&runs, &["exponents", "--k", "4"]),
        run_ok(&runs, &["figures", "--from", decay.to_str().unwrap()]),
        run_ok(&runs, &["figures", "--from", knapp.to_str().unwrap(), "--figures", "knapp_scaling"]),
        run_ok(&runs, &["figures", "--from", spectrum.to_str().unwrap(), "--figures", "spectrum_curves"]),
    ];
    dirs.extend([decay, knapp, spectrum]);

    let replay_root = root.path().join("replays");
    for dir in dirs {
        let manifest_path = dir.join(MANIFEST_FILE);
        let original = RunManifest::load(&manifest_path).unwrap();
        assert!(!original.outputs.is_empty(), "{} has outputs", dir.display());
        let o = sheetlab(&replay_root, &["replay", manifest_path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}: {}", dir.display(), String::from_utf8_lossy(&o.stderr));
        let fresh = run_dir(&o);
        assert_ne!(fresh, dir);
        for name in original.outputs.keys() {
            let a = std::fs::read(dir.join(name)).unwrap();
            let b = std::fs::read(fresh.join(name)).unwrap();
            assert!(a == b, "{name} differs after replay of {}", original.command);
        }
        let replayed = RunManifest::load(&fresh.join(MANIFEST_FILE)).unwrap();
        assert_eq!(replayed.config, original.config);
        assert_eq!(replayed.seeds, original.seeds);
    }
}

#[test]
fn tampered_manifest_fails_replay() {
    let root = tempfile::tempdir().unwrap();
    let dir = run_ok(root.path(), &["exponents", "--k", "2"]);
    let path = dir.join(MANIFEST_FILE);
    let mut m = RunManifest::load(&path).unwrap();
    m.outputs.insert("exponents.csv".into(), "0".repeat(64));
    m.write(&dir).unwrap();
    let o = sheetlab(root.path(), &["replay", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("exponents.csv differs"));
}

#[test]
fn figure_without_table_names_it() {
    let root = tempfile::tempdir().unwrap();
    let o = sheetlab(root.path(), &["figures", "--figures", "knapp_scaling"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("knapp_scaling.csv"));
}

#[test]
fn default_figures_generate_exact_tables() {
    let root = tempfile::tempdir().unwrap();
    let dir = run_ok(root.path(), &["figures"]);
    for f in ["spectrum_theory.csv", "exponents.csv", "spectrum_curves.svg", "restriction_bounds.svg"] {
        assert!(dir.join(f).is_file(), "{f}");
    }
    let svg = std::fs::read_to_string(dir.join("restriction_bounds.svg")).unwrap();
    for label in ["Stein", "sufficient", "necessary", "Hambrook"] {
        assert!(svg.contains(label), "legend has {label}");
    }
}
