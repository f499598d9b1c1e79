use std::path::Path;
use std::process::Command;

fn gsgp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gsgp"))
}

#[test]
fn synthetic_campaign_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let status = gsgp()
        .args(["--synthetic", "polynomial:60:2:0.1:5", "--strategy", "u:5", "--strategy", "g:0.5"])
        .args(["--runs", "3", "--generations", "5", "--pop", "10", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("baseline"));
    for f in ["report.json", "runs.csv", "trajectories.csv", "boxplot_test.csv", "boxplot_train.csv", "metadata.json"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("\"name\": \"u:1\""));
    assert!(report.contains("\"name\": \"g:0.5\""));
    let boxplot = std::fs::read_to_string(out.join("boxplot_test.csv")).unwrap();
    assert_eq!(boxplot.lines().next().unwrap(), "u:1,u:5,g:0.5");
    assert_eq!(boxplot.lines().count(), 4);
}

#[test]
fn dataset_file_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/fixtures/concrete_excerpt.csv");
    let output = gsgp()
        .arg("--dataset")
        .arg(&fixture)
        .args(["--header", "--runs", "2", "--generations", "3", "--pop", "6", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(String::from_utf8_lossy(&output.stdout).contains("10 rows x 8 features"));
}

#[test]
fn missing_input_exits_one() {
    let output = gsgp().args(["--runs", "1"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn bad_strategy_exits_one() {
    let output = gsgp().args(["--synthetic", "polynomial:30:2", "--strategy", "x:3"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn unreadable_dataset_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let output = gsgp().args(["--dataset", "/nonexistent/file.csv", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stderr).starts_with("error:"));
}

#[test]
fn help_exits_zero() {
    let output = gsgp().arg("--help").output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&output.stdout).contains("--strategy"));
}
