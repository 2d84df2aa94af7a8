use plsql_away::corpus::corpus_entry;
use plsql_away::frontend::interpret_ast;
use plsql_away::runtime::{simulate_query, TableOracle};
use plsql_away::sqlgen::{emit_cte, wrap_inline, CteMode, Dialect};
use plsql_away::{compile, EmitError, Value};

#[test]
fn let_binding_shadows_a_row_column() {
    // the FOR bound is a let in the entry function and a column of `run`
    let src = "CREATE FUNCTION f(b int) RETURNS int AS $$
               BEGIN
                 FOR i IN 1..b % 4 LOOP
                   b = b - 1;
                 END LOOP;
                 RETURN b;
               END; $$ LANGUAGE PLPGSQL;";
    let c = compile(src).unwrap();
    for dialect in [Dialect::Postgres, Dialect::Sqlite] {
        let q = emit_cte(&c.udf, dialect, CteMode::Recursive).unwrap();
        for b in 0..8 {
            let want = interpret_ast(&c.ast, &[Value::Int(b)], &mut TableOracle::empty(0)).unwrap();
            let got = simulate_query(&q, &[Value::Int(b)], &mut TableOracle::empty(0))
                .unwrap()
                .value;
            assert_eq!(got, want, "{dialect} b={b}\n{}", q.text);
        }
    }
}

#[test]
fn sqlite_has_no_iterate_mode() {
    let c = corpus_entry("fibonacci").unwrap().compile().unwrap();
    assert_eq!(
        emit_cte(&c.udf, Dialect::Sqlite, CteMode::Iterate).unwrap_err(),
        EmitError::UnsupportedCombination {
            dialect: "sqlite",
            mode: "iterate"
        }
    );
}

#[test]
fn iterate_mode_changes_only_the_header() {
    let c = corpus_entry("fibonacci").unwrap().compile().unwrap();
    assert!(c.iterate.text.starts_with("WITH ITERATE run("));
    assert_eq!(
        c.iterate.text.replacen("WITH ITERATE", "WITH RECURSIVE", 1),
        c.recursive.text
    );
}

#[test]
fn inline_form_uses_placeholders() {
    let c = corpus_entry("fibonacci").unwrap().compile().unwrap();
    let inline = wrap_inline(&c.recursive);
    assert!(inline.starts_with("(WITH RECURSIVE run(") && inline.ends_with(')'));
    assert!(inline.contains(" :n AS n"), "{inline}");
    assert!(!c.recursive.text.contains(":n"));
}

#[test]
fn bound_query_has_literal_seed() {
    let c = corpus_entry("walk").unwrap().compile().unwrap();
    let args = [
        Value::coord(0, 2),
        Value::Int(5),
        Value::Int(-5),
        Value::Int(10),
    ];
    let bound = c.recursive.bind(&args);
    assert!(
        bound.text.contains("ROW(0, 2) AS location_1"),
        "{}",
        bound.text
    );
    assert!(bound.text.contains("5 AS win"));
    let e = corpus_entry("walk").unwrap();
    let free = simulate_query(&c.recursive, &args, &mut e.oracle(42)).unwrap();
    let fixed = simulate_query(&bound, &[], &mut e.oracle(42)).unwrap();
    assert_eq!(free, fixed);
}

#[test]
fn sqlite_text_literal_types() {
    let c = corpus_entry("parse").unwrap().compile().unwrap();
    let q = emit_cte(&c.udf, Dialect::Sqlite, CteMode::Recursive).unwrap();
    assert!(
        q.text.contains("CAST(NULL AS integer) AS result"),
        "{}",
        q.text
    );
    assert!(!q.text.to_ascii_uppercase().contains("LATERAL"));
}
