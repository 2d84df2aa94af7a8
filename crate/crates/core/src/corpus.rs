//! The bundled example functions, their table data, query evaluators, and
//! pinned expected results.

use std::path::PathBuf;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::expr::QueryId;
use crate::runtime::{parse_table, Registry, TableOracle, Tables};
use crate::value::Value;
use crate::{compile, Compiled};

/// One pinned run: `expected` is what every engine must return for `args`
/// under an oracle seeded with `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub args: Vec<Value>,
    pub seed: u32,
    pub expected: Value,
}

/// Draws one random argument vector for a function.
pub type ArgGenerator = fn(&mut ChaCha8Rng, &Tables) -> Vec<Value>;

#[derive(Clone)]
pub struct CorpusEntry {
    pub name: String,
    pub source: String,
    /// `(file name, contents)` of each CSV table.
    pub data: &'static [(&'static str, &'static str)],
    pub tables: Arc<Tables>,
    pub registry: Arc<Registry>,
    pub expectations: Vec<Expectation>,
    pub gen_args: ArgGenerator,
    /// Arguments that make the function run about `n` loop iterations.
    pub sized_args: fn(u64) -> Vec<Value>,
}

impl std::fmt::Debug for CorpusEntry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorpusEntry")
            .field("name", &self.name)
            .field("tables", &self.tables.names().collect::<Vec<_>>())
            .field("registry", &self.registry)
            .finish_non_exhaustive()
    }
}

impl CorpusEntry {
    pub fn compile(&self) -> Result<Compiled, Error> {
        Ok(compile(&self.source)?)
    }

    /// A fresh oracle over this entry's tables and evaluators.
    pub fn oracle(&self, seed: u32) -> TableOracle {
        TableOracle::new(self.tables.clone(), self.registry.clone(), seed)
    }

    /// Where the entry's CSV files live in the source tree, if it has any.
    pub fn data_dir(&self) -> Option<PathBuf> {
        (!self.data.is_empty()).then(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("../../corpus")
                .join(&self.name)
                .join("data")
        })
    }

    pub fn random_args(&self, rng: &mut ChaCha8Rng) -> Vec<Value> {
        (self.gen_args)(rng, &self.tables)
    }
}

macro_rules! corpus_file {
    ($name:literal, $file:literal) => {
        include_str!(concat!("../../../corpus/", $name, "/", $file))
    };
}

const WALK_DATA: &[(&str, &str)] = &[
    ("actions.csv", corpus_file!("walk", "data/actions.csv")),
    ("cells.csv", corpus_file!("walk", "data/cells.csv")),
    ("policy.csv", corpus_file!("walk", "data/policy.csv")),
];
const PARSE_DATA: &[(&str, &str)] = &[
    ("classes.csv", corpus_file!("parse", "data/classes.csv")),
    (
        "transitions.csv",
        corpus_file!("parse", "data/transitions.csv"),
    ),
];
const TRAVERSE_DATA: &[(&str, &str)] = &[("edges.csv", corpus_file!("traverse", "data/edges.csv"))];

/// walk, fibonacci, parse, traverse, in that order.
pub fn corpus_entries() -> Vec<CorpusEntry> {
    vec![
        entry(
            "walk",
            corpus_file!("walk", "function.sql"),
            WALK_DATA,
            walk_registry(),
            corpus_file!("walk", "expect.json"),
            (walk_args, walk_sized),
        ),
        entry(
            "fibonacci",
            corpus_file!("fibonacci", "function.sql"),
            &[],
            Registry::new(),
            corpus_file!("fibonacci", "expect.json"),
            (fibonacci_args, |n| vec![int(n)]),
        ),
        entry(
            "parse",
            corpus_file!("parse", "function.sql"),
            PARSE_DATA,
            parse_registry(),
            corpus_file!("parse", "expect.json"),
            (parse_args, |n| {
                vec![Value::text(
                    "ab12_".chars().cycle().take(n as usize).collect::<String>(),
                )]
            }),
        ),
        entry(
            "traverse",
            corpus_file!("traverse", "function.sql"),
            TRAVERSE_DATA,
            traverse_registry(),
            corpus_file!("traverse", "expect.json"),
            // node 7 sits on a cycle, so only the budget stops the walk
            (traverse_args, |n| vec![Value::Int(7), int(n)]),
        ),
    ]
}

pub fn corpus_entry(name: &str) -> Option<CorpusEntry> {
    corpus_entries().into_iter().find(|e| e.name == name)
}

fn entry(
    name: &'static str,
    source: &'static str,
    data: &'static [(&'static str, &'static str)],
    registry: Registry,
    expect: &'static str,
    (gen_args, sized_args): (ArgGenerator, fn(u64) -> Vec<Value>),
) -> CorpusEntry {
    let mut tables = Tables::default();
    for (file, text) in data {
        let stem = file.trim_end_matches(".csv");
        tables.insert(
            parse_table(stem, file, text)
                .unwrap_or_else(|e| panic!("bundled table {name}/{file}: {e}")),
        );
    }
    let expectations =
        serde_json::from_str(expect).unwrap_or_else(|e| panic!("bundled {name}/expect.json: {e}"));
    CorpusEntry {
        name: name.to_string(),
        source: source.to_string(),
        data,
        tables: Arc::new(tables),
        registry: Arc::new(registry),
        expectations,
        gen_args,
        sized_args,
    }
}

fn as_coord(v: &Value) -> Option<(i64, i64)> {
    match v {
        Value::Tuple(xy) => match xy.as_slice() {
            [Value::Int(x), Value::Int(y)] => Some((*x, *y)),
            _ => None,
        },
        _ => None,
    }
}

fn param(params: &[Value], i: usize) -> Result<&Value, String> {
    params.get(i).ok_or_else(|| {
        format!(
            "expected at least {} parameters, got {}",
            i + 1,
            params.len()
        )
    })
}

/// First value of `column` over rows matching all `(column, value)` conditions,
/// with SQL equality: a NULL condition value matches nothing.
fn lookup(
    tables: &Tables,
    table: &str,
    conds: &[(&str, &Value)],
    column: &str,
) -> Result<Value, String> {
    if conds.iter().any(|(_, v)| v.is_null()) {
        return Ok(Value::Null);
    }
    let t = tables.require(table)?;
    Ok(t.records()
        .find(|r| conds.iter().all(|(c, v)| r.get(c) == *v))
        .map_or(Value::Null, |r| r.get(column).clone()))
}

/// Q1 picks the policy's action, Q2 samples the successor cell, Q3 reads the reward.
fn walk_registry() -> Registry {
    let mut reg = Registry::new();
    reg.register(QueryId(1), |t, p| {
        lookup(t, "policy", &[("loc", param(p, 0)?)], "action")
    });
    reg.register(QueryId(2), |t, p| {
        let (location, movement, roll) = (param(p, 0)?, param(p, 1)?, param(p, 2)?);
        let roll = match roll {
            Value::Null => return Ok(Value::Null),
            Value::Float(x) => *x,
            other => return Err(format!("roll must be a float, got {}", other.kind())),
        };
        if location.is_null() || movement.is_null() {
            return Ok(Value::Null);
        }
        let actions = t.require("actions")?;
        let mut moves: Vec<(&Value, f64)> = actions
            .records()
            .filter(|r| r.get("here") == location && r.get("action") == movement)
            .map(|r| match r.get("prob") {
                Value::Float(p) => Ok((r.get("there"), *p)),
                other => Err(format!("prob must be a float, got {}", other.kind())),
            })
            .collect::<Result<_, _>>()?;
        moves.sort_by_key(|(there, _)| as_coord(there));
        // each move owns the window [sum of earlier probs, sum including its own)
        let mut lo = 0.0;
        for (there, prob) in moves {
            let hi = lo + prob;
            if roll >= lo && roll < hi {
                return Ok(there.clone());
            }
            lo = hi;
        }
        Ok(Value::Null)
    });
    reg.register(QueryId(3), |t, p| {
        lookup(t, "cells", &[("loc", param(p, 0)?)], "reward")
    });
    reg
}

fn parse_registry() -> Registry {
    let mut reg = Registry::new();
    reg.register(QueryId(1), |t, p| {
        let (state, symbol) = (param(p, 0)?, param(p, 1)?);
        let class = match lookup(t, "classes", &[("ch", symbol)], "class")? {
            Value::Null => Value::text("other"),
            c => c,
        };
        lookup(
            t,
            "transitions",
            &[("source", state), ("class", &class)],
            "target",
        )
    });
    reg
}

fn traverse_registry() -> Registry {
    let mut reg = Registry::new();
    reg.register(QueryId(1), |t, p| {
        let node = param(p, 0)?;
        if node.is_null() {
            return Ok(Value::Null);
        }
        let edges = t.require("edges")?;
        let min = edges
            .records()
            .filter(|r| r.get("src") == node)
            .filter_map(|r| match r.get("dst") {
                Value::Int(d) => Some(*d),
                _ => None,
            })
            .min();
        Ok(min.map_or(Value::Null, Value::Int))
    });
    reg
}

fn int(n: u64) -> Value {
    Value::Int(i64::try_from(n).unwrap_or(i64::MAX))
}

/// Thresholds out of reach, so every one of the `n` steps executes.
fn walk_sized(n: u64) -> Vec<Value> {
    vec![
        Value::coord(0, 2),
        Value::Int(1_000_000),
        Value::Int(-1_000_000),
        int(n),
    ]
}

fn walk_args(rng: &mut ChaCha8Rng, tables: &Tables) -> Vec<Value> {
    let cells = tables.get("cells").expect("walk has a cells table");
    let origin = cells.rows[rng.gen_range(0..cells.len())][0].clone();
    vec![
        origin,
        Value::Int(rng.gen_range(1..=6)),
        Value::Int(rng.gen_range(-6..=-1)),
        Value::Int(rng.gen_range(0..=40)),
    ]
}

fn fibonacci_args(rng: &mut ChaCha8Rng, _: &Tables) -> Vec<Value> {
    vec![Value::Int(rng.gen_range(-3..=90))]
}

fn parse_args(rng: &mut ChaCha8Rng, _: &Tables) -> Vec<Value> {
    const ALPHABET: &[u8] = b"ab9Z0_-x7 ";
    let len = rng.gen_range(0..=30);
    let s: String = (0..len)
        .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
        .collect();
    vec![Value::text(s)]
}

fn traverse_args(rng: &mut ChaCha8Rng, _: &Tables) -> Vec<Value> {
    vec![
        Value::Int(rng.gen_range(-2..=12)),
        Value::Int(rng.gen_range(-1..=25)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::QueryOracle;

    #[test]
    fn names_in_order() {
        let names: Vec<_> = corpus_entries().into_iter().map(|e| e.name).collect();
        assert_eq!(names, ["walk", "fibonacci", "parse", "traverse"]);
    }

    #[test]
    fn every_query_has_an_evaluator() {
        for e in corpus_entries() {
            let c = e.compile().unwrap();
            for q in &c.ast.queries {
                assert!(
                    e.registry.contains(q.id),
                    "{}: {} unregistered",
                    e.name,
                    q.id
                );
            }
        }
    }

    #[test]
    fn fibonacci_needs_no_tables() {
        let e = corpus_entry("fibonacci").unwrap();
        assert!(e.data.is_empty() && e.data_dir().is_none());
        assert_eq!(e.registry.ids().count(), 0);
        assert!(e.compile().unwrap().ast.queries.is_empty());
    }

    #[test]
    fn walk_rewards_match_the_grid() {
        let e = corpus_entry("walk").unwrap();
        let mut o = e.oracle(0);
        for (x, want) in [(2, -2), (3, 0), (4, -1)] {
            assert_eq!(
                o.eval_query(QueryId(3), &[Value::coord(x, 0)]),
                Ok(Value::Int(want))
            );
        }
    }

    #[test]
    fn walk_move_probabilities_sum_to_one() {
        let e = corpus_entry("walk").unwrap();
        let actions = e.tables.get("actions").unwrap();
        let mut sums = std::collections::BTreeMap::new();
        for r in actions.records() {
            let Value::Float(p) = r.get("prob") else {
                panic!("prob column")
            };
            *sums
                .entry((as_coord(r.get("here")), format!("{}", r.get("action"))))
                .or_insert(0.0) += p;
        }
        assert_eq!(sums.len(), 21 * 4);
        for (k, s) in sums {
            assert!((s - 1.0_f64).abs() < 1e-9, "{k:?} sums to {s}");
        }
    }

    #[test]
    fn walk_sampling_covers_the_unit_interval() {
        let e = corpus_entry("walk").unwrap();
        let mut o = e.oracle(0);
        let from = Value::coord(3, 2);
        let arrow = Value::text("→");
        let at = |o: &mut TableOracle, roll: f64| {
            o.eval_query(
                QueryId(2),
                &[from.clone(), arrow.clone(), Value::Float(roll)],
            )
            .unwrap()
        };
        // ordered destinations (3,2) 0.1, (3,3) 0.1, (4,2) 0.8
        assert_eq!(at(&mut o, 0.0), Value::coord(3, 2));
        assert_eq!(at(&mut o, 0.15), Value::coord(3, 3));
        assert_eq!(at(&mut o, 0.999_999), Value::coord(4, 2));
        assert_eq!(at(&mut o, 0.5), Value::coord(4, 2));
    }

    #[test]
    fn parse_classifies_unknown_symbols_as_other() {
        let e = corpus_entry("parse").unwrap();
        let mut o = e.oracle(0);
        let step = |o: &mut TableOracle, s: i64, c: &str| {
            o.eval_query(QueryId(1), &[Value::Int(s), Value::text(c)])
        };
        assert_eq!(step(&mut o, 0, "7"), Ok(Value::Int(1)));
        assert_eq!(step(&mut o, 1, "q"), Ok(Value::Int(3)));
        assert_eq!(step(&mut o, 0, "-"), Ok(Value::Int(3)));
        assert_eq!(step(&mut o, 2, "_"), Ok(Value::Int(0)));
    }

    #[test]
    fn traverse_follows_the_smallest_successor() {
        let e = corpus_entry("traverse").unwrap();
        let mut o = e.oracle(0);
        assert_eq!(
            o.eval_query(QueryId(1), &[Value::Int(0)]),
            Ok(Value::Int(1))
        );
        assert_eq!(o.eval_query(QueryId(1), &[Value::Int(4)]), Ok(Value::Null));
    }

    #[test]
    fn data_dir_holds_the_bundled_files() {
        let e = corpus_entry("walk").unwrap();
        let dir = e.data_dir().unwrap();
        let loaded = crate::runtime::load_tables(&dir).unwrap();
        assert_eq!(&loaded, e.tables.as_ref());
    }
}
