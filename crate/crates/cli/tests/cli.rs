use std::process::Command;

fn rbnk(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rbnk")).args(args).output().unwrap()
}

#[test]
fn help_exits_zero() {
    assert_eq!(rbnk(&["--help"]).status.code(), Some(0));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(rbnk(&["nonsense"]).status.code(), Some(1));
    assert_eq!(rbnk(&["fig1", "--R", "x"]).status.code(), Some(1));
    assert_eq!(rbnk(&["stats", "--cell", "B=1,K=0"]).status.code(), Some(1));
    assert_eq!(rbnk(&["stats", "--cell", "nonsense", "--cell", "B=1,K=0"]).status.code(), Some(1));
}

#[test]
fn mode_mismatch_is_usage_error() {
    let manifest = concat!(env!("CARGO_MANIFEST_DIR"), "/manifests/fig3_desk.json");
    let out = rbnk(&["evolve-b", "--manifest", manifest]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not `evolve-b`"));
}

#[test]
fn missing_results_is_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("absent");
    let out = rbnk(&["stats", "--dir", dir.to_str().unwrap(), "--cell", "B=1,K=0", "--cell", "B=5,K=0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stats_prints_one_row_per_metric() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let run = rbnk(&["evolve", "-q", "--out", out, "--runs", "2", "--generations", "20", "--cell", "B=1,K=0", "--cell", "B=5,K=0"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let stats = rbnk(&["stats", "--dir", out, "--cell", "B=1,K=0", "--cell", "B=5,K=0", "--metric", "fitness"]);
    assert!(stats.status.success());
    let text = String::from_utf8(stats.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "cell_a,cell_b,metric,t,df,p");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("\"B=1,K=0,V=0\",\"B=5,K=0,V=0\",fitness,"));
}

#[test]
fn validate_passes() {
    let out = rbnk(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).matches("PASS").count(), 7);
}
