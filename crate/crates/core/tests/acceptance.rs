//! Acceptance criteria, one line of output per criterion.
//! Run with `cargo test --test acceptance -- --nocapture` to see the report.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use plsql_away::anf::{check_tail_positions, interpret_anf};
use plsql_away::corpus::{corpus_entries, corpus_entry, CorpusEntry};
use plsql_away::harness::{diff_trials, run_engine, trial_seeds, Engine, Trial};
use plsql_away::runtime::{simulate_query, OracleCall, QueryOracle};
use plsql_away::sqlgen::{emit_cte, CteMode, Dialect};
use plsql_away::{Compiled, Value};

type Outcome = Result<String, String>;

const TRIALS: usize = 64;

/// Every corpus run: the pinned expectations plus seeded random trials.
fn corpus_runs(e: &CorpusEntry) -> Vec<(Vec<Value>, u32)> {
    let mut runs: Vec<_> = e
        .expectations
        .iter()
        .map(|x| (x.args.clone(), x.seed))
        .collect();
    runs.extend(
        trial_seeds(11, TRIALS)
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                let t = Trial::new(e, i, s);
                (t.args, t.oracle_seed)
            }),
    );
    runs
}

fn compiled() -> Vec<(CorpusEntry, Compiled)> {
    corpus_entries()
        .into_iter()
        .map(|e| {
            let c = e.compile().expect("corpus compiles");
            (e, c)
        })
        .collect()
}

fn stage_equivalence() -> Outcome {
    let start = Instant::now();
    let mut total = 0;
    for (e, c) in compiled() {
        let r = diff_trials(&e, &c, TRIALS, 2024);
        total += r.trials;
        if !r.passed() {
            return Err(r.to_string());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        return Err(format!(
            "{total} trials agreed but took {secs:.1}s (limit 30s)"
        ));
    }
    Ok(format!(
        "{total} trials x 6 engines agree exactly in {secs:.2}s"
    ))
}

fn walk_fidelity() -> Outcome {
    let e = corpus_entry("walk").unwrap();
    let c = e.compile().unwrap();
    let args = [
        Value::coord(0, 2),
        Value::Int(5),
        Value::Int(-5),
        Value::Int(10),
    ];
    let pinned = e
        .expectations
        .iter()
        .find(|x| x.args == args && x.seed == 42)
        .ok_or("no pinned expectation for walk((0,2), 5, -5, 10) seed 42")?
        .expected
        .clone();
    let Value::Int(r) = pinned else {
        return Err(format!("pinned value {pinned} is not an int"));
    };
    // a nonzero result is ±(the step at which the walk stopped)
    let iterations = if r == 0 {
        10
    } else {
        r.unsigned_abs() as usize
    };
    for engine in Engine::ALL {
        let mut o = e.oracle(42);
        let got = run_engine(&c, engine, &args, &mut o)
            .map_err(|err| format!("{engine}: {err}"))?
            .value;
        if got != pinned {
            return Err(format!("{engine} returned {got}, pinned {pinned}"));
        }
        let log = o.call_log();
        if log.len() != 4 * iterations {
            return Err(format!(
                "{engine}: {} oracle calls for {iterations} iterations",
                log.len()
            ));
        }
        for (k, chunk) in log.chunks(4).enumerate() {
            let shape: Vec<&str> = chunk
                .iter()
                .map(|c| match c {
                    OracleCall::Query { .. } => "query",
                    OracleCall::Random { .. } => "random",
                })
                .collect();
            if shape != ["query", "random", "query", "query"] {
                return Err(format!("{engine}: iteration {k} made calls {shape:?}"));
            }
        }
    }
    Ok(format!(
        "walk = {r} on all engines; {iterations} iterations x (3 queries + 1 random draw)"
    ))
}

fn tail_positions() -> Outcome {
    for (e, c) in compiled() {
        let v = check_tail_positions(&c.anf);
        if !v.is_empty() {
            return Err(format!("{}: {v:?}", e.name));
        }
    }
    Ok("0 violations across 4 functions".into())
}

fn template_fidelity() -> Outcome {
    let golden = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for (e, c) in compiled() {
        let text = &c.recursive.text;
        let file = golden.join(format!("{}.postgres.sql", e.name));
        let snapshot =
            std::fs::read_to_string(&file).map_err(|err| format!("{}: {err}", file.display()))?;
        if snapshot != format!("{text}\n") {
            return Err(format!(
                "{}: emitted SQL differs from {}",
                e.name,
                file.display()
            ));
        }
        let count = |needle: &str| text.matches(needle).count();
        let checks = [
            ("header", text.starts_with("WITH RECURSIVE run(\"call?\"")),
            ("one seed arm", count("SELECT true AS \"call?\"") == 1),
            ("one recursive arm", count("UNION ALL") == 1),
            ("guard r.\"call?\"", count("WHERE  r.\"call?\"") == 1),
            (
                "extraction guarded by NOT r.\"call?\"",
                text.ends_with("SELECT r.result\nFROM   run AS r\nWHERE  NOT r.\"call?\""),
            ),
        ];
        if let Some((what, _)) = checks.iter().find(|(_, ok)| !ok) {
            return Err(format!("{}: {what} missing", e.name));
        }
    }
    Ok("4 snapshots match byte-for-byte; seed, recursive arm and extraction present".into())
}

fn space_law() -> Outcome {
    let e = corpus_entry("parse").unwrap();
    let c = e.compile().unwrap();
    let mut cells = Vec::new();
    for n in [100u64, 200, 400] {
        let input: String = "ab12_".chars().cycle().take(n as usize).collect();
        let args = [Value::text(input)];
        let rec =
            simulate_query(&c.recursive, &args, &mut e.oracle(0)).map_err(|err| err.to_string())?;
        let it =
            simulate_query(&c.iterate, &args, &mut e.oracle(0)).map_err(|err| err.to_string())?;
        if it.max_working_set > 2 {
            return Err(format!(
                "n={n}: iterate max_working_set {}",
                it.max_working_set
            ));
        }
        if rec.retained_cells != n * (n + 1) / 2 {
            return Err(format!(
                "n={n}: recursive retained_cells {} != {}",
                rec.retained_cells,
                n * (n + 1) / 2
            ));
        }
        cells.push(rec.retained_cells);
    }
    let ratios: Vec<f64> = cells
        .windows(2)
        .map(|w| w[1] as f64 / w[0] as f64)
        .collect();
    if ratios.iter().any(|r| !(3.9..=4.1).contains(r)) {
        return Err(format!("doubling ratios {ratios:?}"));
    }
    Ok(format!(
        "retained_cells {cells:?}, ratios {:.3}/{:.3}, iterate working set <= 2",
        ratios[0], ratios[1]
    ))
}

fn row_accounting() -> Outcome {
    let mut runs = 0;
    for (e, c) in compiled() {
        for (args, seed) in corpus_runs(&e) {
            let (_, stats) = interpret_anf(&c.anf, &args, &mut e.oracle(seed))
                .map_err(|err| format!("{} {args:?}: {err}", e.name))?;
            for q in [&c.recursive, &c.iterate] {
                let sim = simulate_query(q, &args, &mut e.oracle(seed))
                    .map_err(|err| format!("{}: {err}", e.name))?;
                if sim.rows_emitted != stats.invocations + 1 {
                    return Err(format!(
                        "{} {:?} ({}): rows_emitted {} vs {} invocations",
                        e.name, args, q.mode, sim.rows_emitted, stats.invocations
                    ));
                }
            }
            runs += 1;
        }
    }
    Ok(format!(
        "rows_emitted = invocations + 1 on {runs} runs, both modes"
    ))
}

fn dialect_equivalence() -> Outcome {
    let mut runs = 0;
    for (e, c) in compiled() {
        let sqlite =
            emit_cte(&c.udf, Dialect::Sqlite, CteMode::Recursive).map_err(|err| err.to_string())?;
        if sqlite
            .text
            .split(|ch: char| !ch.is_ascii_alphanumeric())
            .any(|w| w.eq_ignore_ascii_case("lateral"))
        {
            return Err(format!("{}: sqlite emission contains LATERAL", e.name));
        }
        for (args, seed) in corpus_runs(&e) {
            let pg = simulate_query(&c.recursive, &args, &mut e.oracle(seed));
            let lite = simulate_query(&sqlite, &args, &mut e.oracle(seed));
            if pg != lite {
                return Err(format!(
                    "{} {:?}: postgres {pg:?}, sqlite {lite:?}",
                    e.name, args
                ));
            }
            runs += 1;
        }
    }
    Ok(format!("no LATERAL in sqlite output; {runs} runs agree"))
}

/// `Ok(None)` when no connection string is configured.
fn live_fibonacci() -> Result<Option<String>, String> {
    let Some(dsn) = std::env::var("PLSQL_AWAY_DSN")
        .ok()
        .filter(|d| !d.is_empty())
    else {
        return Ok(None);
    };
    let c = corpus_entry("fibonacci").unwrap().compile().unwrap();
    let (mut a, mut b) = (0i64, 1i64);
    for n in 1..=20 {
        (a, b) = (b, a + b);
        let sql = format!("SELECT ({})", c.recursive.bind(&[Value::Int(n)]).text);
        let out = Command::new("psql")
            .args([dsn.as_str(), "-X", "-A", "-t", "-c", &sql])
            .output()
            .map_err(|e| e.to_string())?;
        let got = String::from_utf8_lossy(&out.stdout).trim().to_string();
        if !out.status.success() || got != a.to_string() {
            return Err(format!(
                "n={n}: expected {a}, got {got:?} {}",
                String::from_utf8_lossy(&out.stderr).trim()
            ));
        }
    }
    Ok(Some("fib(1..20) matches on the live engine".into()))
}

type Criterion = fn() -> Outcome;

#[test]
fn acceptance() {
    let criteria: [(&str, Criterion); 7] = [
        ("stage equivalence", stage_equivalence),
        ("walk fidelity", walk_fidelity),
        ("tail-position guarantee", tail_positions),
        ("template fidelity", template_fidelity),
        ("space law", space_law),
        ("row accounting", row_accounting),
        ("dialect equivalence", dialect_equivalence),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(detail) => {
                println!("criterion {} ({name}): FAIL - {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    match live_fibonacci() {
        Ok(None) => {
            println!("criterion 8 (live engine, non-gating): SKIP - PLSQL_AWAY_DSN not set")
        }
        Ok(Some(detail)) => println!("criterion 8 (live engine, non-gating): PASS - {detail}"),
        Err(detail) => println!("criterion 8 (live engine, non-gating): FAIL - {detail}"),
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
