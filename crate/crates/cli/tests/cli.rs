use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_billiard-book"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn compile_writes_book_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("book.json");
    let o = run(&["compile", p(&fixture("games/two-inside.json")), "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let book = billiard_book::book::book_from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(book.leaves.len(), 4);
    let report = std::fs::read_to_string(dir.path().join("book.json.report.json")).unwrap();
    assert!(report.contains("\"leaf_count\": 4"));
}

#[test]
fn compile_rejects_invalid_games() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("book.json");
    let o = run(&["compile", p(&fixture("games/consecutive-outside.json")), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).lines().any(|l| l.starts_with("ConsecutiveOutside")));
    assert!(!out.exists());
}

#[test]
fn compile_needs_general_flag_for_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let game = dir.path().join("game.json");
    std::fs::write(&game, r#"{"family": {"a": 9, "b": 4}, "betas": [0, 2, 2], "signature": [1, 1, 1]}"#).unwrap();
    let out = dir.path().join("book.json");
    assert_eq!(code(&run(&["compile", p(&game), "--out", p(&out)])), 2);
    let o = run(&["compile", p(&game), "--general", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("leaves: 5"));
}

#[test]
fn missing_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("book.json");
    assert_eq!(code(&run(&["compile", "/nonexistent/game.json", "--out", p(&out)])), 3);
    assert_eq!(code(&run(&["fomenko", "/nonexistent/book.json"])), 3);
    let bad_out = dir.path().join("no/such/dir/book.json");
    assert_eq!(code(&run(&["compile", p(&fixture("games/two-inside.json")), "--out", p(&bad_out)])), 3);
}

#[test]
fn malformed_book_is_invalid_input() {
    let dir = tempfile::tempdir().unwrap();
    let book = dir.path().join("book.json");
    std::fs::write(&book, r#"{"family": {"a": 9, "b": 4}, "leaves": [{"id": 1, "ring": 2}], "gluings": []}"#).unwrap();
    assert_eq!(code(&run(&["fomenko", p(&book)])), 2);
}

#[test]
fn simulate_conserves_caustic() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let svg = dir.path().join("t.svg");
    let book = fixture("annulus-two-disks.json");
    let args = ["simulate", p(&book), "--caustic", "6", "--events", "100", "--csv", p(&csv), "--svg", p(&svg)];
    let o = run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let drift: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("drift: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(drift < 1e-9);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 101);
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));

    // identical inputs give identical bytes
    let first = std::fs::read(&csv).unwrap();
    assert_eq!(stdout(&run(&args)), stdout(&o));
    assert_eq!(std::fs::read(&csv).unwrap(), first);
}

#[test]
fn simulate_zero_events() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let o = run(&[
        "simulate",
        p(&fixture("annulus-two-disks.json")),
        "--caustic",
        "6",
        "--events",
        "0",
        "--csv",
        p(&csv),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 1);
}

#[test]
fn simulate_tangent_to_inconsistent_gluing_is_singular() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let o = run(&[
        "simulate",
        p(&fixture("two-annuli-two-disks.json")),
        "--leaf",
        "1",
        "--pos=-2,1.4142135623730951",
        "--vel",
        "1,0",
        "--csv",
        p(&csv),
    ]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(csv.exists());
}

#[test]
fn simulate_rejects_points_outside_the_leaf() {
    let o = run(&[
        "simulate",
        p(&fixture("annulus-two-disks.json")),
        "--leaf",
        "1",
        "--pos=0,0",
        "--vel",
        "1,0",
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn fomenko_census() {
    let dir = tempfile::tempdir().unwrap();
    for (name, census) in [
        ("annulus-two-disks.json", "A:4 C2:1"),
        ("two-annuli-two-disks.json", "A:6 B:2 C2:2"),
        ("nested-with-outer-annulus.json", "A:5 B:3 C2:1"),
    ] {
        let dot = dir.path().join("g.dot");
        let o = run(&["fomenko", p(&fixture(name)), "--dot", p(&dot)]);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        assert_eq!(stdout(&o).trim(), census);
        assert!(std::fs::read_to_string(&dot).unwrap().starts_with("graph fomenko {"));
    }
}

#[test]
fn verify_compiled_book() {
    let dir = tempfile::tempdir().unwrap();
    let book = dir.path().join("book.json");
    let game = fixture("games/three-outside-last.json");
    assert_eq!(code(&run(&["compile", p(&game), "--out", p(&book)])), 0);
    let o = run(&["verify", p(&book), p(&game), "--samples", "100"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = run(&["verify", p(&book), p(&fixture("games/three-inside.json")), "--samples", "5"]);
    assert_eq!(code(&o), 6);
    assert!(stderr(&o).contains("diverges at event"));

    let o = run(&["verify", p(&book), p(&game), "--samples", "0"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));
}
