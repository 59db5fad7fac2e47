//! End-to-end runs of the `wgsolve` binary.

use std::process::{Command, Output};

fn wgsolve(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgsolve")).args(args).output().unwrap()
}

fn without_seconds(csv: &str) -> Vec<String> {
    csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect()
}

#[test]
fn repeated_runs_write_identical_tables() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2).map(|i| dir.path().join(format!("run{i}.csv"))).collect();
    for p in &paths {
        let out = wgsolve(&["--problem", "cdr-layer", "--degree", "1", "--levels", "1:3", "--epsilon", "1e-4", "--out"]
            .iter()
            .copied()
            .chain([p.to_str().unwrap()])
            .collect::<Vec<_>>());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = std::fs::read_to_string(&paths[0]).unwrap();
    let b = std::fs::read_to_string(&paths[1]).unwrap();
    assert_eq!(a.lines().next().unwrap(), wgfem::study::CSV_HEADER);
    assert_eq!(a.lines().count(), 4);
    assert_eq!(without_seconds(&a), without_seconds(&b));
}

#[test]
fn table_goes_to_stdout_without_out() {
    let out = wgsolve(&["--problem", "transport", "--degree", "0", "--levels", "1:2"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with(wgfem::study::CSV_HEADER), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with(|c: char| c.is_ascii_digit())).count(), 2);
}

#[test]
fn epsilon_on_maxwell_is_a_usage_error() {
    let out = wgsolve(&["--problem", "maxwell2d", "--epsilon", "1e-3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon is not a maxwell2d parameter"));
}

#[test]
fn invalid_mesh_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.msh");
    std::fs::write(&path, "not a mesh\n").unwrap();
    let spec = format!("file:{}", path.display());
    let out = wgsolve(&["--problem", "transport", "--levels", "1:1", "--mesh", &spec]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn dump_solution_writes_centroid_values() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let out = wgsolve(&[
        "--problem",
        "transport",
        "--degree",
        "1",
        "--levels",
        "2:2",
        "--out",
        table.to_str().unwrap(),
        "--dump-solution",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dump = std::fs::read_to_string(dir.path().join("t.solution.csv")).unwrap();
    assert!(dump.starts_with("x,y,comp0\n"));
    assert_eq!(dump.lines().count(), 5);
}

#[test]
fn help_lists_the_flags() {
    let out = wgsolve(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--problem", "--degree", "--levels", "--epsilon", "--mu", "--mesh", "--out", "--dump-solution"] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
}
