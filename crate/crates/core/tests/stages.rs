mod support;

use plsql_away::anf::check_tail_positions;
use plsql_away::corpus::{corpus_entries, corpus_entry};
use plsql_away::harness::{run_engine, Engine};
use plsql_away::runtime::{simulate_query, TableOracle};
use plsql_away::sqlgen::{emit_cte, CteMode, Dialect};
use plsql_away::ssa::{lower_to_ssa, simplify_ssa, verify, Cfg};
use plsql_away::{compile, Compiled, Value};
use proptest::prelude::*;

fn fib(n: i64) -> i64 {
    let (mut a, mut b) = (0i64, 1i64);
    for _ in 0..n.max(0) {
        (a, b) = (b, a + b);
    }
    a
}

#[test]
fn pinned_expectations_hold_on_every_engine() {
    for e in corpus_entries() {
        assert!(!e.expectations.is_empty(), "{} has no pinned runs", e.name);
        let c = e.compile().unwrap();
        for x in &e.expectations {
            for engine in Engine::ALL {
                let got = run_engine(&c, engine, &x.args, &mut e.oracle(x.seed)).map(|o| o.value);
                assert_eq!(
                    got,
                    Ok(x.expected.clone()),
                    "{} {engine} {:?}",
                    e.name,
                    x.args
                );
            }
        }
    }
}

#[test]
fn fibonacci_matches_an_iterative_oracle() {
    let e = corpus_entry("fibonacci").unwrap();
    let c = e.compile().unwrap();
    for n in -2..=90 {
        for engine in Engine::ALL {
            let got = run_engine(&c, engine, &[Value::Int(n)], &mut e.oracle(0))
                .unwrap()
                .value;
            assert_eq!(got, Value::Int(fib(n)), "fib({n}) on {engine}");
        }
    }
}

#[test]
fn fibonacci_overflow_is_reported_alike() {
    let e = corpus_entry("fibonacci").unwrap();
    let c = e.compile().unwrap();
    // fib(93) does not fit in 64 bits
    for engine in Engine::ALL {
        let got = run_engine(&c, engine, &[Value::Int(93)], &mut e.oracle(0));
        assert!(
            matches!(got, Err(plsql_away::EvalError::Overflow(_))),
            "{engine}: {got:?}"
        );
    }
}

#[test]
fn corpus_anf_has_only_tail_calls() {
    for e in corpus_entries() {
        assert_eq!(
            check_tail_positions(&e.compile().unwrap().anf),
            Vec::<String>::new(),
            "{}",
            e.name
        );
    }
}

fn assert_stages_agree(c: &Compiled, args: &[Value], src: &str) -> Result<(), TestCaseError> {
    let sqlite = emit_cte(&c.udf, Dialect::Sqlite, CteMode::Recursive).unwrap();
    let reference = run_engine(c, Engine::Ast, args, &mut TableOracle::empty(0)).map(|o| o.value);
    for engine in Engine::ALL {
        let got = run_engine(c, engine, args, &mut TableOracle::empty(0)).map(|o| o.value);
        prop_assert_eq!(&got, &reference, "{} on {:?}\n{}", engine, args, src);
    }
    let got = simulate_query(&sqlite, args, &mut TableOracle::empty(0)).map(|s| s.value);
    prop_assert_eq!(&got, &reference, "sqlite on {:?}\n{}", args, src);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn random_functions_agree_on_all_stages(seed in any::<u64>()) {
        let src = support::random_function(seed);
        let c = compile(&src).unwrap_or_else(|e| panic!("{e}\n{src}"));
        prop_assert!(check_tail_positions(&c.anf).is_empty());
        assert_stages_agree(&c, &support::random_args(seed), &src)?;
    }

    #[test]
    fn ssa_invariants_hold(seed in any::<u64>()) {
        let src = support::random_function(seed);
        let ast = plsql_away::frontend::parse_function(&src).unwrap();
        let raw = lower_to_ssa(&ast);
        prop_assert_eq!(verify(&raw), Vec::<String>::new(), "{}", raw);
        let simple = simplify_ssa(&raw);
        prop_assert_eq!(verify(&simple), Vec::<String>::new(), "{}", simple);
        prop_assert!(simple.phi_count() <= raw.phi_count());
        prop_assert_eq!(&simplify_ssa(&simple), &simple);
        // every φ has exactly one operand per predecessor
        let cfg = Cfg::new(&simple);
        for b in &simple.blocks {
            let i = cfg.index(&b.label).unwrap();
            for phi in &b.phis {
                prop_assert_eq!(phi.sources.len(), cfg.preds[i].len(), "{} in {}", phi.target, b.label);
            }
        }
    }

    #[test]
    fn corpus_stages_agree(pick in 0usize..4, seed in any::<u64>()) {
        let e = &corpus_entries()[pick];
        let c = e.compile().unwrap();
        let trial = plsql_away::harness::Trial::new(e, 0, seed);
        let reference = run_engine(&c, Engine::Ast, &trial.args, &mut e.oracle(trial.oracle_seed)).map(|o| o.value);
        for engine in Engine::ALL {
            let got = run_engine(&c, engine, &trial.args, &mut e.oracle(trial.oracle_seed)).map(|o| o.value);
            prop_assert_eq!(&got, &reference, "{} {} {:?}", e.name, engine, trial.args);
        }
    }
}
