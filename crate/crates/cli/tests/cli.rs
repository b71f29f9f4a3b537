use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sphere-spectra"));
    cmd.env_remove("SPHERE_SPECTRA_OUT");
    cmd
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

// Small enough to finish in well under a second.
fn tiny_run(name: &str, dir: &Path, extra: &[&str]) -> Output {
    let mut cmd = bin();
    cmd.args(["run", name, "--out"]).arg(dir);
    for kv in ["m=8", "epochs=40", "n_samples=20", "record_every=2", "ell_max=4"] {
        cmd.args(["--set", kv]);
    }
    cmd.args(extra).output().unwrap()
}

#[test]
fn list_shows_all_registered_cases() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    for name in [
        "zero_fixed_default",
        "zero_trainable_highfreq",
        "trig_fixed_default",
        "trig_trainable_highfreq",
    ] {
        assert!(text.contains(name), "{name} missing from:\n{text}");
    }
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn expand_relu_prints_table() {
    let out = bin().args(["expand-relu", "--ell-max", "6"]).output().unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("ell,"));
    assert_eq!(lines.count(), 7);
}

#[test]
fn spectrum_of_single_term_target() {
    let out = bin()
        .args(["spectrum", "--target", "sum:1/1/1", "--ell-max", "3", "--grid-ell", "16"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    // ℓ = 0..=3 gives 16 coefficients plus the header.
    assert_eq!(text.lines().count(), 17);
}

#[test]
fn unknown_experiment_is_an_error() {
    let out = bin().args(["run", "no_such_case"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_set_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "zero_fixed_default", "--set", "lr"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("KEY=VALUE"));
}

#[test]
fn run_writes_artifacts_and_diagnose_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let out = tiny_run("zero_fixed_default", &run_dir, &["--set", "max_final_loss=10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for file in [
        "loss.csv",
        "harmonics.csv",
        "params_initial.csv",
        "params_final.csv",
        "verdict.csv",
        "meta.txt",
        "curves_j0.csv",
        "raster.csv",
    ] {
        assert!(run_dir.join(file).is_file(), "{file} not written");
    }

    let diag = bin().arg("diagnose").arg(&run_dir).output().unwrap();
    assert!(diag.status.success());
    assert!(!stdout(&diag).contains("differ"), "{}", stdout(&diag));
}

#[test]
fn meta_file_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    let out = tiny_run("zero_trainable_default", &first, &["--no-plotdata"]);
    assert!(out.status.code().is_some_and(|c| c < 2));
    assert!(!first.join("raster.csv").exists());

    let out = bin()
        .args(["run", "zero_trainable_default", "--no-plotdata", "--config"])
        .arg(first.join("meta.txt"))
        .arg("--out")
        .arg(&second)
        .output()
        .unwrap();
    assert!(out.status.code().is_some_and(|c| c < 2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(first.join("loss.csv")).unwrap(),
        fs::read_to_string(second.join("loss.csv")).unwrap()
    );
}

#[test]
fn output_root_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = bin();
    cmd.env("SPHERE_SPECTRA_OUT", dir.path())
        .args(["run", "zero_fixed_default", "--no-plotdata"]);
    for kv in ["m=4", "epochs=10", "n_samples=10", "record_every=1", "ell_max=2"] {
        cmd.args(["--set", kv]);
    }
    let out = cmd.output().unwrap();
    assert!(out.status.code().is_some_and(|c| c < 2));
    assert!(dir.path().join("zero_fixed_default/loss.csv").is_file());
}

#[test]
fn violated_bound_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = tiny_run("zero_fixed_default", dir.path(), &["--no-plotdata", "--set", "max_final_loss=1e-30"]);
    assert_eq!(out.status.code(), Some(1));
}
