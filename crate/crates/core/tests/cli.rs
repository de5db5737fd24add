use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn morse_flow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morse-flow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn ricci_sym_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flow.t_end = 0.1\nflow.steps = 4\ngrid.n_r = 16\ngrid.n_theta = 8\n");
    let out = dir.path().join("out");
    let res = morse_flow(&["ricci-sym", &cfg, "--snapshot-every", "2"], &out);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 6);
    for n in [0, 2, 4] {
        assert!(out.join(format!("field_{n:06}.txt")).exists());
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], true);
    assert_eq!(manifest["steps_completed"], 4);
}

#[test]
fn snapshot_restarts_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let cfg = write_config(dir.path(), "flow.steps = 2\nflow.t_end = 0.02\ngrid.n_x = 9\ngrid.n_y = 9\n");
    let res = morse_flow(&["pme", &cfg, "--snapshot-every", "1"], &first);
    assert_eq!(res.status.code(), Some(0));
    let cfg = write_config(
        dir.path(),
        "flow.steps = 2\nflow.t_end = 0.02\ngrid.n_x = 9\ngrid.n_y = 9\ninit.kind = snapshot\ninit.path = first/field_000002.txt\n",
    );
    let res = morse_flow(&["pme", &cfg], &dir.path().join("second"));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn unnorm_past_extinction_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flow.t_end = 0.6\n");
    let res = morse_flow(&["ricci-unnorm", &cfg], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("t_end"));
}

#[test]
fn beta_domain_is_checked() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "pme.beta = 0.4\n");
    assert_eq!(morse_flow(&["pme", &cfg], &dir.path().join("a")).status.code(), Some(2));
    let cfg = write_config(dir.path(), "pme.beta = 1\nflow.steps = 2\ngrid.n_x = 9\ngrid.n_y = 9\n");
    assert_eq!(morse_flow(&["pme", &cfg], &dir.path().join("b")).status.code(), Some(2));
    let res = morse_flow(&["pme", &cfg, "--allow-heat"], &dir.path().join("c"));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flow.steps = 4\nflow.stepz = 4\n");
    let res = morse_flow(&["ricci-reg", &cfg], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 2"));
    let res = morse_flow(&["ricci-reg", "/nonexistent/run.cfg"], &dir.path().join("out"));
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn non_converged_step_exits_with_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flow.steps = 5\ngrid.n_r = 16\ngrid.n_theta = 8\nsolver.max_iters = 1\n");
    let out = dir.path().join("out");
    let res = morse_flow(&["ricci-sym", &cfg], &out);
    assert_eq!(res.status.code(), Some(3));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["passed"], false);
    assert!(manifest["failure"].as_str().unwrap().contains("step 1"));
}

#[test]
fn identical_runs_give_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "flow.steps = 5\nflow.t_end = 0.5\ngrid.n_r = 16\ngrid.n_theta = 8\n");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(morse_flow(&["ricci-reg", &cfg, "--seed", "9"], &a).status.code(), Some(0));
    assert_eq!(morse_flow(&["ricci-reg", &cfg, "--seed", "9"], &b).status.code(), Some(0));
    assert_eq!(fs::read(a.join("trace.csv")).unwrap(), fs::read(b.join("trace.csv")).unwrap());
    let c = dir.path().join("c");
    assert_eq!(morse_flow(&["ricci-reg", &cfg, "--seed", "10"], &c).status.code(), Some(0));
    assert_ne!(fs::read(a.join("trace.csv")).unwrap(), fs::read(c.join("trace.csv")).unwrap());
}

#[test]
fn validate_lists_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = morse_flow(&["validate"], &out);
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(res.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 9);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let criteria = manifest["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 9);
    assert!(criteria.iter().all(|c| !c["measured"].as_array().unwrap().is_empty()));
}
