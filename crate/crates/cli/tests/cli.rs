use std::process::Command;

fn shorwire(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_shorwire"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn table1_lists_every_coprime() {
    let out = shorwire(&["table1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2   4   7   8  11  13  14"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn ideal_run_writes_report_and_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("c2");
    let out = shorwire(&[
        "run",
        "--co-prime",
        "2",
        "--mode",
        "ideal",
        "--seed",
        "7",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for f in [
        "report.json",
        "density_matrix.csv",
        "outcomes.csv",
        "summary.csv",
    ] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let first = std::fs::read(out_dir.join("report.json")).unwrap();
    let again = shorwire(&[
        "run",
        "--co-prime",
        "2",
        "--mode",
        "ideal",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(again.status.success());
    assert_eq!(first, std::fs::read(out_dir.join("report.json")).unwrap());
}

#[test]
fn physical_run_without_layout_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = shorwire(&[
        "run",
        "--mode",
        "physical",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("device layout"));
}

#[test]
fn unknown_mode_is_rejected() {
    let out = shorwire(&["run", "--mode", "noisy"]);
    assert!(!out.status.success());
}
