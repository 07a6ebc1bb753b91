//! End-to-end tests of the `bctau` binary: exit codes, manifests and outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bctau"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bctau-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn manifest(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("manifest JSON on stdout")
}

fn check_values(m: &serde_json::Value, stage: &str) -> Vec<f64> {
    m["stages"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == stage)
        .unwrap_or_else(|| panic!("stage {stage} missing"))["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["value"].as_f64().unwrap())
        .collect()
}

#[test]
fn constant_pipeline_is_exact() {
    let o = run(&["pipeline", "--grid", "32", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&o);
    assert_eq!(m["passed"], true);
    // Solve: the converged flag then the residual.
    assert!(check_values(&m, "gauss solve")[1] <= 1e-12);
    for v in check_values(&m, "flatness") {
        assert!(v <= 1e-12, "{v}");
    }
    for v in check_values(&m, "period holonomy") {
        assert!(v <= 1e-12, "{v}");
    }
    assert!(m["stages"].as_array().unwrap().iter().any(|s| s["name"] == "affine roundtrip"));
}

#[test]
fn unit_beltrami_coefficient_is_a_config_error() {
    let dir = scratch("mu1");
    let cfg = write(&dir, "mu1.toml", "[chart]\nmu = [1.0, 0.0]\n");
    let o = run(&["gauss", "solve", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("principal symbol"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_are_config_errors() {
    let dir = scratch("unknown");
    let cfg = write(&dir, "bad.toml", "grid = 32\n[cubic]\ngamma = [1.0, 0.0]\n");
    let o = run(&["pipeline", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown field"), "{}", stderr(&o));
}

#[test]
fn reducible_generators_fail_on_transversality() {
    let o = run(&["rep", "anosov", "--example", "reducible", "--len", "4"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("criterion 10"), "{err}");
    assert!(err.contains("transversality"), "{err}");
}

#[test]
fn generator_files_are_validated() {
    let dir = scratch("gens");
    let z = "[0.0, 0.0]";
    let two = "[2.0, 0.0]";
    let one = "[1.0, 0.0]";
    let m = format!("[[{two}, {z}, {z}], [{z}, {one}, {z}], [{z}, {z}, {one}]]");
    let gens = write(&dir, "gens.json", &format!("[{m}]"));
    let o = run(&["rep", "anosov", "--gens", &gens]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn same_seed_gives_identical_manifests() {
    let a = run(&["accept", "--id", "1", "--id", "10", "--seed", "7", "--json"]);
    let b = run(&["accept", "--id", "1", "--id", "10", "--seed", "7", "--json", "--threads", "1"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["accept", "--id", "1", "--seed", "8", "--json"]);
    assert_ne!(manifest(&a)["config_hash"], manifest(&c)["config_hash"]);
}

#[test]
fn out_dir_receives_manifest_and_fields() {
    let dir = scratch("out");
    let out1 = dir.join("one");
    let out2 = dir.join("two");
    for out in [&out1, &out2] {
        let o = run(&["pipeline", "--grid", "16", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    for f in ["manifest.json", "solve.json", "psi.csv", "flatness.csv", "periods.json", "fplus.csv"] {
        assert!(out1.join(f).is_file(), "{f} missing");
    }
    let m1 = fs::read(out1.join("manifest.json")).unwrap();
    let m2 = fs::read(out2.join("manifest.json")).unwrap();
    assert_eq!(m1, m2);
    let psi = fs::read_to_string(out1.join("psi.csv")).unwrap();
    assert_eq!(psi.lines().count(), 16);
}

#[test]
fn holonomy_around_a_loop_file() {
    let dir = scratch("loop");
    let lp = write(&dir, "loop.json", r#"["+x", "+y", "-x", "-y"]"#);
    let o = run(&["conn", "holonomy", "--loop", &lp, "--grid", "16", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let m = manifest(&o);
    assert!(check_values(&m, "loop holonomy").iter().all(|v| *v <= 1e-12));
    let open = write(&dir, "open.json", r#"["+x"]"#);
    let o = run(&["conn", "holonomy", "--loop", &open, "--grid", "16"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn criterion_subcommands_report_one_line() {
    let o = run(&["algebra"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.starts_with("PASS  1 algebra isomorphism"), "{out}");
}

#[test]
fn config_driven_goldman_and_affine() {
    let dir = scratch("goldman");
    let cfg = write(&dir, "g.toml", "[goldman]\nqdot = [0.3, -0.2]\ngrids = [16, 32]\n");
    let o = run(&["rep", "goldman", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let off = write(&dir, "off.toml", "[chart]\nmu = [0.2, 0.0]\n");
    let o = run(&["affine", "roundtrip", "--config", &off]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Hitchin-locus"), "{}", stderr(&o));
}

#[test]
fn shipped_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["constant.toml", "sheared.toml"] {
        let cfg = dir.join(name);
        let o = run(&["pipeline", "--config", cfg.to_str().unwrap(), "--grid", "32"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
    let lp = dir.join("square_loop.json");
    let sheared = dir.join("sheared.toml");
    let o = run(&["conn", "holonomy", "--loop", lp.to_str().unwrap(), "--config", sheared.to_str().unwrap(), "--grid", "32"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["rep", "goldman", "--config", dir.join("goldman.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["pipeline", "--config", dir.join("unit_mu.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
