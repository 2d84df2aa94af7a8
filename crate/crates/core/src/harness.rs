//! Differential testing: run one function through every engine on seeded
//! random inputs and report any disagreement.

use std::fmt;
use std::mem::discriminant;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::anf::interpret_anf;
use crate::corpus::CorpusEntry;
use crate::error::EvalError;
use crate::frontend::interpret_ast;
use crate::runtime::{simulate_query, QueryOracle, SimResult};
use crate::ssa::interpret_ssa;
use crate::udf::interpret_udf;
use crate::value::Value;
use crate::Compiled;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Ast,
    Ssa,
    Anf,
    Udf,
    CteRecursive,
    CteIterate,
}

impl Engine {
    pub const ALL: [Engine; 6] = [
        Engine::Ast,
        Engine::Ssa,
        Engine::Anf,
        Engine::Udf,
        Engine::CteRecursive,
        Engine::CteIterate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Ast => "ast",
            Engine::Ssa => "ssa",
            Engine::Anf => "anf",
            Engine::Udf => "udf",
            Engine::CteRecursive => "cte-recursive",
            Engine::CteIterate => "cte-iterate",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown engine `{s}` (expected one of ast, ssa, anf, udf, cte-recursive, cte-iterate)"))
    }
}

/// An engine's answer plus whatever it can tell about the work done.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub value: Value,
    /// Worker invocations (anf only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invocations: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", flatten)]
    pub sim: Option<SimResult>,
}

impl RunOutput {
    fn value(value: Value) -> Self {
        RunOutput {
            value,
            invocations: None,
            sim: None,
        }
    }
}

pub fn run_engine(
    c: &Compiled,
    engine: Engine,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
) -> Result<RunOutput, EvalError> {
    Ok(match engine {
        Engine::Ast => RunOutput::value(interpret_ast(&c.ast, args, oracle)?),
        Engine::Ssa => RunOutput::value(interpret_ssa(&c.ssa, args, oracle)?),
        Engine::Anf => {
            let (value, stats) = interpret_anf(&c.anf, args, oracle)?;
            RunOutput {
                value,
                invocations: Some(stats.invocations),
                sim: None,
            }
        }
        Engine::Udf => RunOutput::value(interpret_udf(&c.udf, args, oracle)?.0),
        Engine::CteRecursive | Engine::CteIterate => {
            let q = if engine == Engine::CteRecursive {
                &c.recursive
            } else {
                &c.iterate
            };
            let sim = simulate_query(q, args, oracle)?;
            RunOutput {
                value: sim.value.clone(),
                invocations: None,
                sim: Some(sim),
            }
        }
    })
}

/// One seeded random input. `seed` regenerates both `args` and `oracle_seed`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub index: usize,
    pub seed: u64,
    pub args: Vec<Value>,
    pub oracle_seed: u32,
}

impl Trial {
    pub fn new(entry: &CorpusEntry, index: usize, seed: u64) -> Trial {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let args = entry.random_args(&mut rng);
        Trial {
            index,
            seed,
            args,
            oracle_seed: rng.gen(),
        }
    }
}

/// Per-trial seeds derived from one base seed.
pub fn trial_seeds(base: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    (0..n).map(|_| rng.gen()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub trial: Trial,
    pub outcomes: Vec<(Engine, Result<Value, EvalError>)>,
}

/// Result of a differential run over one function.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffReport {
    pub function: String,
    pub base_seed: u64,
    pub trials: usize,
    /// Trials on which every engine failed with the same kind of error.
    pub agreed_errors: usize,
    pub divergences: Vec<Divergence>,
}

impl DiffReport {
    pub fn passed(&self) -> bool {
        self.divergences.is_empty()
    }
}

fn shell_arg(v: &Value) -> String {
    let s = match v {
        Value::Text(s) => s.clone(),
        other => other.to_string(),
    };
    if !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b"-.+_".contains(&b))
    {
        s
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "ok" } else { "DIVERGED" };
        writeln!(
            f,
            "{}: {} trials (seed {}), {} divergent, {} agreed errors: {verdict}",
            self.function,
            self.trials,
            self.base_seed,
            self.divergences.len(),
            self.agreed_errors
        )?;
        for d in &self.divergences {
            let args: Vec<String> = d.trial.args.iter().map(Value::to_string).collect();
            writeln!(
                f,
                "  trial {} (trial seed {}): args [{}], oracle seed {}",
                d.trial.index,
                d.trial.seed,
                args.join(", "),
                d.trial.oracle_seed
            )?;
            for (engine, outcome) in &d.outcomes {
                match outcome {
                    Ok(v) => writeln!(f, "    {engine:<14} {v}")?,
                    Err(e) => writeln!(f, "    {engine:<14} error: {e}")?,
                }
            }
            let shell: Vec<String> = d.trial.args.iter().map(shell_arg).collect();
            writeln!(
                f,
                "    reproduce: plsql-away run {} --args {} --seed {} --engine <engine>",
                self.function,
                shell.join(" "),
                d.trial.oracle_seed
            )?;
        }
        Ok(())
    }
}

fn agree(a: &Result<Value, EvalError>, b: &Result<Value, EvalError>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x == y,
        (Err(x), Err(y)) => discriminant(x) == discriminant(y),
        _ => false,
    }
}

/// Runs `trial` on all engines, each with a fresh oracle; `Err` carries the
/// divergence, `Ok(true)` an error every engine agreed on.
pub fn run_trial(entry: &CorpusEntry, c: &Compiled, trial: &Trial) -> Result<bool, Divergence> {
    let outcomes: Vec<(Engine, Result<Value, EvalError>)> = Engine::ALL
        .into_iter()
        .map(|engine| {
            let mut oracle = entry.oracle(trial.oracle_seed);
            (
                engine,
                run_engine(c, engine, &trial.args, &mut oracle).map(|o| o.value),
            )
        })
        .collect();
    let first = &outcomes[0].1;
    if outcomes.iter().all(|(_, o)| agree(first, o)) {
        Ok(first.is_err())
    } else {
        Err(Divergence {
            trial: trial.clone(),
            outcomes,
        })
    }
}

fn report(entry: &CorpusEntry, seed: u64, results: Vec<Result<bool, Divergence>>) -> DiffReport {
    let mut r = DiffReport {
        function: entry.name.clone(),
        base_seed: seed,
        trials: results.len(),
        agreed_errors: 0,
        divergences: Vec::new(),
    };
    for res in results {
        match res {
            Ok(err) => r.agreed_errors += usize::from(err),
            Err(d) => r.divergences.push(d),
        }
    }
    r
}

/// Differential run over `trials` random inputs, spread across threads when
/// the `parallel` feature is enabled.
pub fn diff_trials(entry: &CorpusEntry, c: &Compiled, trials: usize, seed: u64) -> DiffReport {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let results = trial_seeds(seed, trials)
            .into_par_iter()
            .enumerate()
            .map(|(i, s)| run_trial(entry, c, &Trial::new(entry, i, s)))
            .collect();
        report(entry, seed, results)
    }
    #[cfg(not(feature = "parallel"))]
    diff_trials_sequential(entry, c, trials, seed)
}

/// As [`diff_trials`], always on the calling thread. Reports are identical.
pub fn diff_trials_sequential(
    entry: &CorpusEntry,
    c: &Compiled,
    trials: usize,
    seed: u64,
) -> DiffReport {
    let results = trial_seeds(seed, trials)
        .into_iter()
        .enumerate()
        .map(|(i, s)| run_trial(entry, c, &Trial::new(entry, i, s)))
        .collect();
    report(entry, seed, results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_entry;

    #[test]
    fn engine_names_round_trip() {
        for e in Engine::ALL {
            assert_eq!(e.name().parse::<Engine>(), Ok(e));
        }
        assert!("cte".parse::<Engine>().is_err());
    }

    #[test]
    fn trials_are_reproducible_from_their_seed() {
        let e = corpus_entry("walk").unwrap();
        let seeds = trial_seeds(7, 5);
        assert_eq!(seeds, trial_seeds(7, 5));
        assert_eq!(Trial::new(&e, 3, seeds[3]), Trial::new(&e, 3, seeds[3]));
    }

    #[test]
    fn parallel_and_sequential_reports_match() {
        let e = corpus_entry("traverse").unwrap();
        let c = e.compile().unwrap();
        assert_eq!(
            diff_trials(&e, &c, 20, 3),
            diff_trials_sequential(&e, &c, 20, 3)
        );
    }

    #[test]
    fn shell_args_are_quoted_when_needed() {
        assert_eq!(shell_arg(&Value::Int(-5)), "-5");
        assert_eq!(shell_arg(&Value::coord(0, 2)), "'(0,2)'");
        assert_eq!(shell_arg(&Value::text("")), "''");
        assert_eq!(shell_arg(&Value::text("it's")), r"'it'\''s'");
    }
}
