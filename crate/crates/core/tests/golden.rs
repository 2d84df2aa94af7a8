//! Byte-for-byte snapshots. Regenerate with `UPDATE_GOLDEN=1 cargo test --test golden`.

use std::path::PathBuf;

use plsql_away::corpus::{corpus_entries, corpus_entry};
use plsql_away::{anf, ssa, udf};

fn check(file: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(file);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected =
        std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(
        expected == actual,
        "{file} differs from snapshot:\n--- expected\n{expected}\n--- actual\n{actual}"
    );
}

#[test]
fn walk_intermediate_forms() {
    let c = corpus_entry("walk").unwrap().compile().unwrap();
    check("walk.ssa", &ssa::dump(&c.ssa));
    check("walk.anf", &anf::dump(&c.anf));
    check("walk.udf", &udf::dump(&c.udf));
}

#[test]
fn postgres_recursive_sql() {
    for e in corpus_entries() {
        let c = e.compile().unwrap();
        check(
            &format!("{}.postgres.sql", e.name),
            &format!("{}\n", c.recursive.text),
        );
    }
}

#[test]
fn sqlite_recursive_sql() {
    use plsql_away::sqlgen::{emit_cte, CteMode, Dialect};
    let c = corpus_entry("walk").unwrap().compile().unwrap();
    let q = emit_cte(&c.udf, Dialect::Sqlite, CteMode::Recursive).unwrap();
    check("walk.sqlite.sql", &format!("{}\n", q.text));
}
