use std::path::Path;
use std::process::Command;

fn bench() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rvmrls-bench"));
    c.env_remove("RVMRLS_BENCH_OUT");
    c
}

const SMALL: &str = r#"
version = 1
seeds = [0, 1]
timing = false

[[scenarios]]
name = "short"
sample_count = 300

[[algorithms]]
name = "RVM-RLS"
kind = "rvm-rls"

[[algorithms]]
name = "LMS"
kind = "lms"
"#;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_then_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.toml", SMALL);
    let out = dir.path().join("out");
    let st = bench().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let stdout = String::from_utf8(st.stdout).unwrap();
    assert!(stdout.contains("scenario: short"));
    assert!(out.join("reports.csv").exists());

    let st = bench().arg("table").arg(out.join("reports.csv")).output().unwrap();
    assert_eq!(st.status.code(), Some(0));
    assert!(String::from_utf8(st.stdout).unwrap().contains("RVM-RLS"));
}

#[test]
fn out_dir_from_environment_and_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "exp.toml", SMALL);
    let out = dir.path().join("env_out");
    let st = bench()
        .env("RVMRLS_BENCH_OUT", &out)
        .args(["run", "--no-traces", "--seed-override", "7", "--workers", "1"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let reports = std::fs::read_to_string(out.join("reports.csv")).unwrap();
    assert_eq!(reports.lines().count(), 3);
    assert!(reports.lines().skip(1).all(|l| l.split(',').nth(2) == Some("7")));
    assert!(!out.join("traces").exists());
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", &format!("{SMALL}\nunknown_key = 3\n"));
    let st = bench().arg("run").arg(&bad).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&st.stderr).contains("unknown_key"));

    let st = bench().arg("run").arg(dir.path().join("missing.toml")).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn failed_cells_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("kind = \"lms\"", "kind = \"lms\"\ninit_window = 400");
    let cfg = write(dir.path(), "exp.toml", &text);
    let out = dir.path().join("out");
    let st = bench().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&st.stderr).contains("LMS"));
    // the healthy cells still produced results
    assert_eq!(std::fs::read_to_string(out.join("reports.csv")).unwrap().lines().count(), 3);
}

#[test]
fn synth_writes_scenario_csv() {
    let dir = tempfile::tempdir().unwrap();
    let sc = write(dir.path(), "sc.toml", "version = 1\nseed = 2\nsample_count = 250\n");
    let out = dir.path().join("nested/trace.csv");
    let st = bench().arg("synth").arg(&sc).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("t,H,p,z,outlier"));
    assert_eq!(text.lines().count(), 251);

    let bad = write(dir.path(), "bad.toml", "version = 1\noutlier_fraction = 2.0\n");
    let st = bench().arg("synth").arg(&bad).arg("--out").arg(&out).output().unwrap();
    assert_eq!(st.status.code(), Some(2));
}

#[test]
fn table_on_missing_file_fails() {
    let st = bench().args(["table", "/nonexistent/reports.csv"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
}
