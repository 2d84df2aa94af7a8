use std::process::Command;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use plsql_away::corpus::corpus_entry;
use plsql_away::runtime::Registry;
use plsql_away::{QueryId, Value};
use plsql_away_cli::{cmd_diff, run, BENCH_HEADER};

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("plsql-away").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn corpus(path: &str) -> String {
    format!("{}/../../corpus/{path}", env!("CARGO_MANIFEST_DIR"))
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s.trim()).unwrap_or_else(|e| panic!("{e}: {s}"))
}

#[test]
fn compile_sql_starts_with_the_cte_header() {
    let (code, out, _) = cli(&[
        "compile",
        &corpus("walk/function.sql"),
        "--stage",
        "sql",
        "--dialect",
        "postgres",
    ]);
    assert_eq!(code, 0);
    assert!(out.starts_with("WITH RECURSIVE run("), "{out}");
}

#[test]
fn compile_ssa_matches_the_snapshot() {
    let (code, out, _) = cli(&["compile", &corpus("walk/function.sql"), "--stage", "ssa"]);
    assert_eq!(code, 0);
    let golden = std::fs::read_to_string(format!(
        "{}/../core/tests/golden/walk.ssa",
        env!("CARGO_MANIFEST_DIR")
    ))
    .unwrap();
    assert_eq!(out, golden);
}

#[test]
fn compile_writes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("walk.sql");
    let p = path.to_str().unwrap();
    let (code, out, _) = cli(&["compile", "walk", "--dialect", "sqlite", "--out", p]);
    assert_eq!((code, out.as_str()), (0, ""));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("WITH RECURSIVE run(") && !text.contains("LATERAL"));
}

#[test]
fn compile_ast_stage_reparses() {
    let (code, out, _) = cli(&["compile", "parse", "--stage", "ast"]);
    assert_eq!(code, 0);
    plsql_away::frontend::parse_function(&out).unwrap();
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(cli(&["compile", "walk", "--stage", "bogus"]).0, 2);
    assert_eq!(cli(&["compile", "walk", "--dialect", "oracle"]).0, 2);
    assert_eq!(cli(&["run", "walk", "--engine", "cte"]).0, 2);
    assert_eq!(cli(&["run", "walk", "--args", "1"]).0, 2);
    assert_eq!(cli(&["run", "no-such-function"]).0, 2);
    assert_eq!(cli(&["frobnicate"]).0, 2);
    assert_eq!(cli(&[]).0, 2);
}

#[test]
fn help_exits_0() {
    let (code, out, _) = cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("compile") && out.contains("bench"));
}

#[test]
fn sqlite_iterate_is_a_semantic_error() {
    let (code, _, err) = cli(&[
        "compile",
        "walk",
        "--dialect",
        "sqlite",
        "--mode",
        "iterate",
    ]);
    assert_eq!(code, 1);
    assert!(err.contains("sqlite"), "{err}");
}

#[test]
fn syntax_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.sql");
    std::fs::write(
        &path,
        "CREATE FUNCTION f() RETURNS int AS $$ BEGIN RETURN; END; $$ LANGUAGE PLPGSQL;",
    )
    .unwrap();
    let (code, _, err) = cli(&["compile", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn run_fibonacci_on_the_cte() {
    let (code, out, _) = cli(&[
        "run",
        "fibonacci",
        "--args",
        "10",
        "--engine",
        "cte-recursive",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["value"], 55);
    assert_eq!(v["rows_emitted"], 22);
    assert_eq!(v["engine"], "cte-recursive");
}

#[test]
fn run_walk_gives_the_pinned_value() {
    let pinned = corpus_entry("walk").unwrap().expectations[0]
        .expected
        .clone();
    let (code, out, _) = cli(&[
        "run", "walk", "--args", "(0,2)", "5", "-5", "10", "--seed", "42", "--engine", "ast",
    ]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["value"], serde_json::to_value(&pinned).unwrap());
}

#[test]
fn run_fibonacci_zero() {
    let (code, out, _) = cli(&["run", "fibonacci", "--args", "0", "--engine", "anf"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["value"], 0);
}

#[test]
fn run_a_file_with_explicit_data() {
    let (code, out, _) = cli(&[
        "run",
        &corpus("walk/function.sql"),
        "--args",
        "(0,2)",
        "5",
        "-5",
        "10",
        "--data-dir",
        &corpus("walk/data"),
        "--engine",
        "cte-iterate",
    ]);
    assert_eq!(code, 0);
    let v = json(&out);
    assert_eq!(v["max_working_set"], 2);
    let (_, ast, _) = cli(&["run", "walk", "--args", "(0,2)", "5", "-5", "10"]);
    assert_eq!(v["value"], json(&ast)["value"]);
}

#[test]
fn evaluation_errors_exit_1() {
    let (code, _, err) = cli(&["run", "fibonacci", "--args", "93"]);
    assert_eq!(code, 1);
    assert!(err.contains("overflow"), "{err}");
}

#[test]
fn diff_passes_on_the_corpus() {
    let (code, out, _) = cli(&["diff", "walk", "--trials", "50", "--seed", "7"]);
    assert_eq!(code, 0, "{out}");
    let (code, out, _) = cli(&["diff", "fibonacci", "--trials", "100"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("0 divergent"));
}

#[test]
fn diff_reports_a_broken_evaluator() {
    // the edge lookup answers differently on every call, so engines that
    // share it cannot agree
    let mut entry = corpus_entry("traverse").unwrap();
    let calls = Arc::new(AtomicI64::new(0));
    let mut reg = Registry::new();
    reg.register(QueryId(1), move |_, _| {
        let n = calls.fetch_add(1, Ordering::Relaxed);
        // a dead end every fifth call, so the returned node tracks the call count
        Ok(if n % 5 == 4 {
            Value::Null
        } else {
            Value::Int(n)
        })
    });
    entry.registry = Arc::new(reg);
    let mut out = Vec::new();
    let code = cmd_diff(&entry, 20, 5, true, &mut out).unwrap();
    let report = String::from_utf8(out).unwrap();
    assert_eq!(code, 1, "{report}");
    assert!(report.contains("DIVERGED"));
    assert!(
        report.contains("reproduce: plsql-away run traverse --args"),
        "{report}"
    );
    assert!(report.contains("trial seed"));
}

#[test]
fn bench_parse_space_law() {
    let (code, out, _) = cli(&["bench", "parse", "--grid", "100,200,400"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], BENCH_HEADER);
    let retained: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(retained, ["5050", "20100", "80200"]);
    for l in &lines[1..] {
        assert_eq!(l.split(',').nth(5), Some("2"), "{l}");
    }
}

#[test]
fn bench_walk_rows_grow_linearly() {
    let (code, out, _) = cli(&["bench", "walk", "--grid", "10,100"]);
    assert_eq!(code, 0);
    let rows: Vec<u64> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // two worker invocations per step, plus the loop exit and the result row
    assert_eq!(rows, [2 * 10 + 2, 2 * 100 + 2]);
}

#[test]
fn bench_empty_grid_is_header_only() {
    let (code, out, _) = cli(&["bench", "walk"]);
    assert_eq!(code, 0);
    assert_eq!(out, format!("{BENCH_HEADER}\n"));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_plsql-away");
    let status = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .env_remove("PLSQL_AWAY_DSN")
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(status(&["run", "fibonacci", "--args", "5"]), Some(0));
    assert_eq!(status(&["run", "fibonacci", "--args", "93"]), Some(1));
    assert_eq!(status(&["compile", "walk", "--stage", "bogus"]), Some(2));
    let out = Command::new(bin)
        .args(["run", "fibonacci", "--args", "20", "--engine", "udf"])
        .output()
        .unwrap();
    assert_eq!(json(&String::from_utf8(out.stdout).unwrap())["value"], 6765);
}
