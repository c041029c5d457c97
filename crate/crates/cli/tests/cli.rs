use std::path::Path;
use std::process::{Command, Output};

fn cim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cim"))
        .args(args)
        .env_remove("CIM_WORKERS")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_K4: &str = "n_trials = 20\n[problem]\nkind = \"complete\"\nn = 4\n[sim]\nt_max = 200.0\n";

#[test]
fn missing_config_exits_1_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let r = cim(&[
        "solve",
        "--config",
        path(&dir.path().join("absent.toml")),
        "--out",
        path(&out),
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists());

    let r = cim(&["solve", "--out", path(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn malformed_or_invalid_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    for (name, text) in [
        ("typo.toml", "n_trails = 5\n[problem]\nkind = \"complete\"\nn = 4\n"),
        ("zero.toml", "n_trials = 0\n[problem]\nkind = \"complete\"\nn = 4\n"),
        (
            "dt.toml",
            "n_trials = 5\n[problem]\nkind = \"complete\"\nn = 4\n[sim]\ndt = -1.0\n",
        ),
        (
            "gset.toml",
            "n_trials = 5\n[problem]\nkind = \"gset\"\npath = \"missing.txt\"\n",
        ),
    ] {
        let cfg = dir.path().join(name);
        std::fs::write(&cfg, text).unwrap();
        let r = cim(&["solve", "--config", path(&cfg), "--out", path(&out)]);
        assert_eq!(
            r.status.code(),
            Some(1),
            "{name}: {}",
            String::from_utf8_lossy(&r.stderr)
        );
    }
    let cfg = dir.path().join("squeeze.toml");
    std::fs::write(&cfg, "p_values = [1.5]\n").unwrap();
    assert_eq!(
        cim(&["squeeze", "--config", path(&cfg), "--out", path(&out)])
            .status
            .code(),
        Some(1)
    );
    assert!(!out.exists());
}

#[test]
fn readout_table_has_sixteen_rows() {
    let dir = tempfile::tempdir().unwrap();
    let r = cim(&["readout-table", "--out", path(dir.path())]);
    assert!(r.status.success());
    let csv = std::fs::read_to_string(dir.path().join("readout_table.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 17);
    assert_eq!(lines[1], "|0000⟩,[1111],I_m");
    assert_eq!(lines[6], "|π0π0⟩,[0000],0");
    assert!(!csv.contains('\r'));
}

#[test]
fn reruns_are_byte_identical_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k4.toml");
    std::fs::write(&cfg, SMALL_K4).unwrap();
    let run = |out: &str, extra: &[&str]| {
        let out = dir.path().join(out);
        let mut args = vec!["solve", "--config", path(&cfg), "--out", path(&out)];
        args.extend_from_slice(extra);
        assert!(cim(&args).status.success());
        std::fs::read(out.join("trials.csv")).unwrap()
    };
    let a = run("a", &[]);
    assert_eq!(a, run("b", &["--workers", "3"]));
    assert_ne!(a, run("c", &["--seed", "99"]));
    assert_eq!(a, run("a", &[]));
}

#[test]
fn check_mode_exits_3_on_band_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k4.toml");
    std::fs::write(&cfg, format!("{SMALL_K4}[check]\nq_raw = [2.0, 3.0]\n")).unwrap();
    let out = dir.path().join("out");
    let r = cim(&["solve", "--config", path(&cfg), "--out", path(&out), "--check"]);
    assert_eq!(r.status.code(), Some(3));
    assert!(out.join("summary.json").exists());
    // Without --check the violation is only reported.
    assert!(cim(&["solve", "--config", path(&cfg), "--out", path(&out)])
        .status
        .success());
}

#[test]
fn independent_writes_its_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ind.toml");
    std::fs::write(
        &cfg,
        "trials = 16\n[sim]\nt_max = 300.0\n[sim.pump]\nkind = \"constant\"\np = 1.5\n",
    )
    .unwrap();
    let r = cim(&["independent", "--config", path(&cfg), "--out", path(dir.path())]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    for f in ["histogram.csv", "levels.csv", "checks.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(String::from_utf8_lossy(&r.stdout).contains("states_uniform = "));
}
