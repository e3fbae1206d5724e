use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tiledigits"))
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn analyze_tile() {
    let o = run(&["analyze", "--base", "4", "--digits", "0,1,8,9", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "tile");
    assert_eq!(v["blocking"], serde_json::json!([2, 16]));
}

#[test]
fn analyze_not_tile_reports_structure_failure() {
    let o = run(&["analyze", "--base", "4", "--digits", "0,1,4,5"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("verdict: not-tile"));
    assert!(text.contains("prime-power structure: fails"));
}

#[test]
fn analyze_binary_standard() {
    let o = run(&["analyze", "--base", "2", "--digits", "0,1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(r#""blocking":[2]"#));
}

#[test]
fn cross_check_records_digit_strings() {
    let o = run(&["analyze", "--base", "4", "--digits", "0,1,8,9", "--format", "json", "--cross-check"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["protasov_blocking"].as_array().unwrap().len(), 9);
    let o = run(&["analyze", "--base", "4", "--digits", "0,1,4,5", "--cross-check"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn input_errors_exit_2() {
    for args in [
        vec!["analyze", "--base", "4", "--digits", "0,1,-3,5"],
        vec!["analyze", "--base", "4", "--digits", "0,1,8"],
        vec!["analyze", "--base", "4", "--digits", "0,1,1,8"],
        vec!["analyze", "--base", "4", "--digits", "0,2,4,6"],
        vec!["analyze", "--base", "4"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn dot_output_highlights_blocking() {
    let o = run(&["analyze", "--base", "4", "--digits", "0,1,8,9", "--format", "dot"]);
    let text = stdout(&o);
    assert!(text.starts_with("digraph"));
    assert!(text.contains("n16 [label=\"Φ_16\", style=filled"));
}

#[test]
fn construct_fixtures() {
    let cases = [
        ("modulo_b12.json", "{0,1,4,8,9,17,25,33,41,72,76,80}"),
        ("second_order_b12.json", "{0,1,96,97,2304,2305,2400,2401,4608,4609,4704,4705}"),
        ("product_b12_squared.json", "{0,1,288,289,2304,2305,2592,2593,4608,4609,4896,4897}"),
        ("standard_b6.json", "{0,1,2,3,4,5}"),
        ("weak_b4.json", "{0,1,9,24}"),
    ];
    for (name, want) in cases {
        let path = fixture(name);
        let o = run(&["construct", "--recipe", path.to_str().unwrap(), "--cross-check"]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert!(text.contains(&format!("constructed: {want}")), "{name}: {text}");
        assert!(text.contains("verdict: tile"));
    }
}

#[test]
fn construct_reports_bad_stage() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"kind":"modulo","base":12,"parts":[[0,1],[0,4,8],[0,2]],"exponents":[0,1],
            "representatives":[[],[[5,18]]]}"#,
    )
    .unwrap();
    let o = run(&["construct", "--recipe", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stage 1"), "{err}");
}

#[test]
fn kernels_listing() {
    let o = run(&["kernels", "--base", "4", "--max-degree", "9"]);
    assert_eq!(o.status.code(), Some(0));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(lines, vec!["{2,4}  degree 3", "{4,8}  degree 6", "{2,16}  degree 9"]);
}

#[test]
fn geometry_summary_and_pairs() {
    let o = run(&["geometry", "--base", "4", "--digits", "0,1,8,9", "--depth", "1"]);
    assert_eq!(stdout(&o).trim(), "[0,1] ∪ [2,3] measure 2");
    let o = run(&["geometry", "--base", "4", "--digits", "0,1,8,9", "--depth", "1", "--pairs"]);
    assert_eq!(stdout(&o), "0/1 1/1\n2/1 3/1\n");
    let o = run(&["geometry", "--base", "4", "--digits", "0,1,8,9", "--format", "svg"]);
    assert!(stdout(&o).starts_with("<svg"));
}

#[test]
fn oracle_integer_tiling() {
    let o = run(&["oracle", "--digits", "0,1,4,5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("period 8, L={0,2}"));
    let o = run(&["oracle", "--digits", "0,1,3", "--period-cap", "30"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn certificate_round_trip_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cert.json");
    let o = run(&["analyze", "--base", "12", "--digits", "0,1,4,8,9,17,25,33,41,72,76,80", "--format", "json"]);
    std::fs::write(&path, &o.stdout).unwrap();
    let v = run(&["verify", "--certificate", path.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(0));

    let forged = stdout(&o).replace("\"digits\":[0,1,4,8,", "\"digits\":[0,1,5,8,");
    std::fs::write(&path, forged).unwrap();
    let v = run(&["verify", "--certificate", path.to_str().unwrap()]);
    assert_eq!(v.status.code(), Some(2));
}

#[test]
fn batch_mode() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sets.txt");
    std::fs::write(&path, "0,1,8,9\n# comment\n0,1,4,5\n0,1,2,3\n").unwrap();
    let o = run(&["batch", "--base", "4", "--file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let verdicts: Vec<String> = stdout(&o)
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["verdict"].to_string())
        .collect();
    assert_eq!(verdicts, vec!["\"tile\"", "\"not-tile\"", "\"tile\""]);
}

#[test]
fn cache_file_persists() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cyclo.cache");
    let p = path.to_str().unwrap();
    let o = run(&["--cache", p, "cache", "--max-index", "60"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(path.exists());
    let o = run(&["--cache", p, "analyze", "--base", "4", "--digits", "0,1,8,9"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["cache", "--max-index", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tree_dot_output() {
    let o = run(&["tree", "--base", "6", "--max-index", "18"]);
    let text = stdout(&o);
    assert!(text.contains("n3 -> n9;"));
    assert!(text.contains("n3 -> n18;"));
}
