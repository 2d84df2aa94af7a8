//! The `plsql-away` command line: compile, run, diff, bench.
//!
//! Exit codes: 0 success, 1 semantic failure or divergence, 2 usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use plsql_away::corpus::{corpus_entry, CorpusEntry};
use plsql_away::frontend::print_function;
use plsql_away::harness::{diff_trials, diff_trials_sequential, run_engine, Engine};
use plsql_away::runtime::{load_tables, simulate_query, Registry, TableOracle, Tables};
use plsql_away::sqlgen::{emit_cte, CteMode, Dialect};
use plsql_away::{anf, compile, ssa, udf, Compiled, Value};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(
    name = "plsql-away",
    version,
    about = "Compile PL/pgSQL-style functions into recursive CTEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Stage {
    Ast,
    Ssa,
    Anf,
    Udf,
    Sql,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Print one intermediate form, or the emitted SQL.
    Compile {
        /// Function source file, or the name of a bundled function.
        file: String,
        #[arg(long, value_enum, default_value = "sql")]
        stage: Stage,
        #[arg(long, default_value = "postgres", value_parser = parse_dialect)]
        dialect: Dialect,
        #[arg(long, default_value = "recursive", value_parser = parse_mode)]
        mode: CteMode,
        /// Write here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a function with one engine and print the result as JSON.
    Run {
        /// Bundled function name or source file.
        function: String,
        /// Arguments in declaration order, e.g. `--args "(0,2)" 5 -5 10`.
        #[arg(long, num_args = 0.., allow_negative_numbers = true)]
        args: Vec<String>,
        /// Seed of the oracle's random stream.
        #[arg(long, default_value_t = 42)]
        seed: u32,
        #[arg(long, default_value = "ast", value_parser = parse_engine)]
        engine: Engine,
        /// Directory of CSV tables, replacing the bundled data.
        #[arg(long)]
        data_dir: Option<PathBuf>,
        /// Also execute the emitted query on a live engine via `psql`
        /// (cte engines only; skipped when unset).
        #[arg(long, env = "PLSQL_AWAY_DSN", hide_env_values = true)]
        dsn: Option<String>,
    },
    /// Run seeded random inputs through all six engines and compare.
    Diff {
        function: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run trials on the calling thread only.
        #[arg(long)]
        sequential: bool,
    },
    /// Print simulator row counts for a grid of iteration counts as CSV.
    Bench {
        function: String,
        /// Comma-separated iteration counts.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        grid: Vec<u64>,
        #[arg(long, default_value_t = 42)]
        seed: u32,
    },
}

fn parse_dialect(s: &str) -> Result<Dialect, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<CteMode, String> {
    s.parse()
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse()
}

/// A mistake in how the command was invoked (exit code 2).
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    Usage(message.into()).into()
}

/// Parses `argv` and runs the command. Returns the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Cmd::Compile {
            file,
            stage,
            dialect,
            mode,
            out: path,
        } => cmd_compile(&file, stage, dialect, mode, path.as_deref(), out),
        Cmd::Run {
            function,
            args,
            seed,
            engine,
            data_dir,
            dsn,
        } => cmd_run(
            &function,
            &args,
            seed,
            engine,
            data_dir.as_deref(),
            dsn.as_deref(),
            out,
        ),
        Cmd::Diff {
            function,
            trials,
            seed,
            sequential,
        } => {
            resolve(&function, None).and_then(|s| cmd_diff(&s.entry, trials, seed, sequential, out))
        }
        Cmd::Bench {
            function,
            grid,
            seed,
        } => cmd_bench(&function, &grid, seed, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.is::<Usage>() {
                2
            } else {
                1
            }
        }
    }
}

/// A function to operate on: a bundled entry, or a source file wrapped as one.
struct Subject {
    entry: CorpusEntry,
    compiled: Compiled,
}

/// Looks `function` up in the corpus, else reads it as a file. A file whose
/// function shares a bundled entry's name reuses that entry's evaluators.
fn resolve(function: &str, data_dir: Option<&Path>) -> Result<Subject> {
    let bundled = corpus_entry(function).filter(|_| !Path::new(function).is_file());
    let mut entry = match bundled {
        Some(e) => e,
        None => {
            if !Path::new(function).is_file() {
                return Err(usage(format!(
                    "`{function}` is neither a bundled function (walk, fibonacci, parse, traverse) nor a file"
                )));
            }
            let source =
                std::fs::read_to_string(function).with_context(|| format!("reading {function}"))?;
            let name = compile(&source)?.ast.name;
            let mut entry = corpus_entry(&name).unwrap_or_else(|| CorpusEntry {
                name: name.clone(),
                source: String::new(),
                data: &[],
                tables: Arc::new(Tables::default()),
                registry: Arc::new(Registry::new()),
                expectations: Vec::new(),
                gen_args: |_, _| Vec::new(),
                sized_args: |_| Vec::new(),
            });
            entry.source = source;
            entry.expectations.clear();
            entry
        }
    };
    if let Some(dir) = data_dir {
        entry.tables = Arc::new(load_tables(dir)?);
    }
    let compiled = entry.compile()?;
    Ok(Subject { entry, compiled })
}

fn cmd_compile(
    file: &str,
    stage: Stage,
    dialect: Dialect,
    mode: CteMode,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32> {
    let source = match corpus_entry(file) {
        Some(e) if !Path::new(file).is_file() => e.source,
        _ if !Path::new(file).is_file() => return Err(usage(format!("no such file `{file}`"))),
        _ => std::fs::read_to_string(file).with_context(|| format!("reading {file}"))?,
    };
    let c = compile(&source)?;
    let text = match stage {
        Stage::Ast => print_function(&c.ast),
        Stage::Ssa => ssa::dump(&c.ssa),
        Stage::Anf => anf::dump(&c.anf),
        Stage::Udf => udf::dump(&c.udf),
        Stage::Sql => format!("{}\n", emit_cte(&c.udf, dialect, mode)?.text),
    };
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(0)
}

fn parse_args(c: &Compiled, raw: &[String]) -> Result<Vec<Value>> {
    let params = &c.ast.params;
    if raw.len() != params.len() {
        let names: Vec<String> = params
            .iter()
            .map(|p| format!("{} {}", p.name, p.ty))
            .collect();
        return Err(usage(format!(
            "{} expects {} arguments ({}), got {}",
            c.ast.name,
            params.len(),
            names.join(", "),
            raw.len()
        )));
    }
    params
        .iter()
        .zip(raw)
        .map(|(p, a)| {
            p.ty.parse_literal(a)
                .map_err(|e| usage(format!("argument {}: {e}", p.name)))
        })
        .collect()
}

fn cmd_run(
    function: &str,
    raw: &[String],
    seed: u32,
    engine: Engine,
    data_dir: Option<&Path>,
    dsn: Option<&str>,
    out: &mut dyn Write,
) -> Result<i32> {
    let s = resolve(function, data_dir)?;
    let args = parse_args(&s.compiled, raw)?;
    let mut oracle = TableOracle::new(s.entry.tables.clone(), s.entry.registry.clone(), seed);
    let result = run_engine(&s.compiled, engine, &args, &mut oracle)?;
    let mut report = serde_json::to_value(&result)?;
    report["engine"] = json!(engine.name());
    if let (Some(dsn), Engine::CteRecursive | Engine::CteIterate) =
        (dsn.filter(|d| !d.is_empty()), engine)
    {
        let q = if engine == Engine::CteRecursive {
            &s.compiled.recursive
        } else {
            &s.compiled.iterate
        };
        report["live"] = match live_query(dsn, &q.bind(&args).text) {
            Ok(v) => json!({ "value": v }),
            Err(e) => json!({ "error": format!("{e:#}") }),
        };
    }
    writeln!(out, "{report}")?;
    Ok(0)
}

/// Runs `SELECT (<query>)` through `psql` and returns its single output cell.
fn live_query(dsn: &str, query: &str) -> Result<String> {
    let sql = format!("SELECT ({query})");
    let output = Command::new("psql")
        .args([dsn, "-X", "-A", "-t", "-v", "ON_ERROR_STOP=1", "-c", &sql])
        .output()
        .context("running psql")?;
    if !output.status.success() {
        bail!("psql: {}", String::from_utf8_lossy(&output.stderr).trim());
    }
    Ok(String::from_utf8_lossy(&output.stdout).trim().to_string())
}

/// Differential run of `entry` on all engines; exit 1 if any trial diverges.
pub fn cmd_diff(
    entry: &CorpusEntry,
    trials: usize,
    seed: u64,
    sequential: bool,
    out: &mut dyn Write,
) -> Result<i32> {
    let c = entry.compile()?;
    let report = if sequential {
        diff_trials_sequential(entry, &c, trials, seed)
    } else {
        diff_trials(entry, &c, trials, seed)
    };
    write!(out, "{report}")?;
    Ok(if report.passed() { 0 } else { 1 })
}

pub const BENCH_HEADER: &str =
    "iterations,rows_emitted_recursive,max_working_set_recursive,retained_cells_recursive,\
rows_emitted_iterate,max_working_set_iterate,retained_cells_iterate";

fn cmd_bench(function: &str, grid: &[u64], seed: u32, out: &mut dyn Write) -> Result<i32> {
    let Some(entry) = corpus_entry(function) else {
        return Err(usage(format!(
            "bench needs a bundled function (walk, fibonacci, parse, traverse), got `{function}`"
        )));
    };
    let c = entry.compile()?;
    writeln!(out, "{BENCH_HEADER}")?;
    for &n in grid {
        let args = (entry.sized_args)(n);
        let mut row = vec![n.to_string()];
        for q in [&c.recursive, &c.iterate] {
            let r = simulate_query(q, &args, &mut entry.oracle(seed))
                .with_context(|| format!("{} at {n} iterations ({})", entry.name, q.mode))?;
            row.extend(
                [r.rows_emitted, r.max_working_set, r.retained_cells].map(|x| x.to_string()),
            );
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(0)
}
