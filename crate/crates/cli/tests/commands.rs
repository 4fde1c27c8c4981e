use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ci_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/ci.toml")
}

fn hptowec(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hptowec"))
        .arg("--config")
        .arg(ci_config())
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn simulate_writes_metrics_and_refuses_outside_box() {
    let dir = tempfile::tempdir().unwrap();
    let refused = hptowec(dir.path(), &["simulate"]);
    assert_eq!(code(&refused), 2);
    assert!(!dir.path().join("metrics.toml").exists());

    let ok = hptowec(dir.path(), &["simulate", "--allow-outside-box"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let metrics: toml::Table = toml::from_str(&std::fs::read_to_string(dir.path().join("metrics.toml")).unwrap()).unwrap();
    let m = metrics["metrics"].as_table().unwrap();
    for key in [
        "mean_absorbed",
        "mean_mech",
        "mean_elec",
        "rpf",
        "max_pto_force",
        "max_piston_pressure",
        "min_piston_pressure",
        "max_float_disp",
        "max_spar_disp",
    ] {
        assert!(m.contains_key(key), "missing {key}");
    }
    assert!(dir.path().join("series.csv").exists());
    assert!(dir.path().join("meta.toml").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[sim]\ndt = 0.05\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_hptowec"))
        .arg("--config")
        .arg(&cfg)
        .arg("calibrate")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    assert_eq!(code(&hptowec(dir.path(), &["optimize", "--algorithm", "nm", "--budget", "0"])), 2);
    assert_eq!(code(&hptowec(dir.path(), &["optimize", "--algorithm", "gsf2", "--budget", "100"])), 2);
    assert_eq!(code(&hptowec(dir.path(), &["optimize", "--algorithm", "pso"])), 2);
    assert_eq!(code(&hptowec(dir.path(), &["sweep", "--pair", "ap,foo"])), 2);
}

#[test]
fn sweep_all_pairs_on_a_two_point_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = hptowec(dir.path(), &["sweep", "--all-pairs", "--grid", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("sweep_") && n.ends_with("_power.csv"))
        .collect();
    assert_eq!(files.len(), 6);
    for f in files {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        assert_eq!(text.lines().count(), 1 + 4);
    }
}

#[test]
fn optimize_then_compare_with_a_malformed_trace() {
    let dir = tempfile::tempdir().unwrap();
    let nm = dir.path().join("nm");
    let o = hptowec(&nm, &["optimize", "--algorithm", "nelder-mead", "--budget", "60"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trace = nm.join("trace_nelder-mead.csv");
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 61);
    for f in ["summary.csv", "best_design.toml", "convergence_nelder-mead.csv", "region.toml", "meta.toml"] {
        assert!(nm.join(f).exists(), "missing {f}");
    }

    let bad = dir.path().join("trace_bad.csv");
    std::fs::write(&bad, "not,a,trace\n1,2,3\n").unwrap();
    let cmp = dir.path().join("cmp");
    let o = hptowec(
        &cmp,
        &["compare", trace.to_str().unwrap(), bad.to_str().unwrap(), trace.to_str().unwrap(), "--horizon", "40"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trace_bad.csv"));
    let matrix = std::fs::read_to_string(cmp.join("convergence.csv")).unwrap();
    let rows: Vec<&str> = matrix.lines().collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1].split(',').count(), 41);
    assert_eq!(rows[1], rows[2]);
    assert_eq!(std::fs::read_to_string(cmp.join("comparison.csv")).unwrap().lines().count(), 3);
}
