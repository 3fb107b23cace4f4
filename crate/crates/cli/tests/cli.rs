use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conformflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn toy() -> String {
    fixture("toy.pnml").display().to_string()
}

#[test]
fn align_lp_prints_four_moves_and_cost_one() {
    let o = run(&["align", "--model", &toy(), "--trace", "a,b,e", "--method", "lp"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let moves = out
        .lines()
        .filter(|l| ["SYNC\t", "MODEL\t", "LOG\t", "MODEL_TAU\t"].iter().any(|k| l.starts_with(k)))
        .count();
    assert_eq!(moves, 4, "{out}");
    assert!(out.contains("# total_cost 1\n"), "{out}");
    assert!(out.contains("method: LP"));
}

#[test]
fn align_both_reports_agreement() {
    let o = run(&["align", "--model", &toy(), "--trace", "a,b,e", "--method", "both"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("A* cost 1 / LP cost 1: AGREE"));
}

#[test]
fn align_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("al.json");
    let o = run(&[
        "align",
        "--model",
        &toy(),
        "--trace",
        "a,b,e",
        "--method",
        "astar",
        "--heuristic",
        "zero",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 1);
}

#[test]
fn missing_model_is_parse_error() {
    let o = run(&["align", "--model", "does-not-exist.pnml", "--trace", "a"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_model_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.pnml");
    std::fs::write(&path, "<pnml><net").unwrap();
    let o = run(&["inspect", "--model", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_epsilon_is_rejected() {
    let o = run(&["align", "--model", &toy(), "--trace", "a", "--epsilon", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tiny_search_timeout_exits_with_timeout_code() {
    let insurance = fixture("insurance.pnml").display().to_string();
    let o = run(&[
        "align",
        "--model",
        &insurance,
        "--trace",
        "x,y,z,w,v,u",
        "--method",
        "astar",
        "--timeout-ms",
        "1",
        "--heuristic",
        "zero",
    ]);
    // The run may finish inside one millisecond on a fast machine.
    assert!(matches!(o.status.code(), Some(0) | Some(4)), "{:?}", o.status);
}

#[test]
fn truncated_lp_exits_with_timeout_code() {
    let o = run(&["align", "--model", &toy(), "--trace", "a,b,e", "--method", "lp", "--max-depth", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("LP outcome: TRUNCATED"));
}

#[test]
fn inspect_toy_reports_graph_dimensions() {
    let o = run(&["inspect", "--model", &toy(), "--trace", "a,b,e"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("RG: 24 nodes, 50 edges; TU column structure: OK"));
}

#[test]
fn inspect_empty_trace_has_only_model_moves() {
    let o = run(&["inspect", "--model", &toy()]);
    let out = stdout(&o);
    assert!(out.contains("(0 SYNC, 5 MODEL, 0 MODEL_TAU, 0 LOG)"), "{out}");
}

#[test]
fn inspect_tiny_limits_flag_truncation() {
    let o = run(&["inspect", "--model", &toy(), "--trace", "a,b,e", "--max-nodes", "3"]);
    assert!(stdout(&o).contains("truncated: yes"));
}

#[test]
fn conformance_writes_rows_in_log_order() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let o = run(&[
        "conformance",
        "--model",
        &toy(),
        "--log",
        fixture("toy.xes").to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--parallel",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("case_id,model_id,log_id,trace_length"));
    let ids: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["toy", "c2", "c3"]);
    assert!(stdout(&o).contains("cost agreement: 3/3 (100.0%)"));
}

#[test]
fn gen_then_bench_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let o = run(&[
        "gen",
        "--spec",
        "seq(a, and(b,c), e)",
        "--traces",
        "10",
        "--delete-prob",
        "0.2",
        "--seed",
        "3",
        "--out",
        corpus.join("m").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["model.pnml", "clean.xes", "noisy.xes"] {
        assert!(corpus.join("m").join(f).exists());
    }
    let csv = dir.path().join("bench.csv");
    let o = run(&["bench", "--corpus", corpus.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("by trace length"));
    assert!(out.contains("1-10") && out.contains("11-20") && out.contains(">100"));
    assert!(out.contains("cost agreement: 20/20 (100.0%)"), "{out}");
    let text = std::fs::read_to_string(&csv).unwrap();
    let clean_costs: Vec<&str> = text
        .lines()
        .filter(|l| l.contains(",clean.xes,"))
        .map(|l| l.split(',').nth(6).unwrap())
        .collect();
    assert_eq!(clean_costs.len(), 10);
    assert!(clean_costs.iter().all(|c| *c == "0.000002"), "{clean_costs:?}");
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let gen = |name: &str| {
        let out = dir.path().join(name);
        let o = run(&["gen", "--activities", "8", "--traces", "5", "--swap-prob", "0.3", "--seed", "9", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        (
            std::fs::read_to_string(out.join("model.pnml")).unwrap(),
            std::fs::read_to_string(out.join("noisy.xes")).unwrap(),
        )
    };
    assert_eq!(gen("a"), gen("b"));
}

#[test]
fn gen_empty_alphabet_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["gen", "--spec", "tau", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_corpus_reports_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bench", "--corpus", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
}
