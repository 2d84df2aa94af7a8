//! Simulation of the emitted CTE: the union-all fixpoint over table `run`,
//! with accounting of how many rows each evaluation strategy keeps around.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::EvalError;
use crate::eval::{check_args, check_result, eval, StepBudget, DEFAULT_ITERATION_CAP};
use crate::runtime::QueryOracle;
use crate::sqlgen::{
    adapt_body, base_row, call_row, eval_node, pick, CteMode, RowExpr, RowScope, RunRow, SqlQuery,
};
use crate::udf::{UdfExpr, UdfProgram};
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub value: Value,
    /// Rows ever produced, including the seed row.
    pub rows_emitted: u64,
    /// Peak number of rows held at once.
    pub max_working_set: u64,
    /// Peak total text payload (in characters) of the rows held at once.
    pub retained_cells: u64,
}

/// Simulates the CTE for `u` by evaluating its adapted body on each working row.
pub fn simulate_cte(
    u: &UdfProgram,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
    mode: CteMode,
) -> Result<SimResult, EvalError> {
    simulate_cte_capped(u, args, oracle, mode, DEFAULT_ITERATION_CAP)
}

/// As [`simulate_cte`], aborting after `cap` recursive steps.
pub fn simulate_cte_capped(
    u: &UdfProgram,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
    mode: CteMode,
    cap: u64,
) -> Result<SimResult, EvalError> {
    check_args(&u.params, args)?;
    let top: HashMap<String, Value> = u
        .params
        .iter()
        .map(|p| p.name.clone())
        .zip(args.iter().cloned())
        .collect();
    let UdfExpr::Call { tag, slots } = &u.initial else {
        return Err(EvalError::MalformedRow(
            "wrapper does not call the worker".into(),
        ));
    };
    let scope = RowScope {
        r: &top,
        vars: top.clone(),
    };
    let seed = call_row(*tag, slots, &scope, oracle)?;
    let body = adapt_body(u);
    let width = body.columns.len();
    let value = fixpoint(seed, &body.columns, mode, cap, oracle, &mut |r, oracle| {
        let mut scope = RowScope {
            r,
            vars: HashMap::new(),
        };
        eval_row(&body.expr, width, &mut scope, oracle)
    })?;
    Ok(SimResult {
        value: check_result(u.return_type, value.value)?,
        ..value
    })
}

/// Simulates an emitted query's plan in its own dialect shape (LATERAL
/// chain or nested derived tables) and mode.
pub fn simulate_query(
    q: &SqlQuery,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
) -> Result<SimResult, EvalError> {
    check_args(&q.plan.params, args)?;
    let top: HashMap<String, Value> = q
        .plan
        .params
        .iter()
        .map(|p| p.name.clone())
        .zip(args.iter().cloned())
        .collect();
    let mut seed = Vec::with_capacity(q.plan.seed.len());
    for e in &q.plan.seed {
        seed.push(eval(e, &top, oracle)?);
    }
    let seed = RunRow {
        call: true,
        args: seed,
        result: Value::Null,
    };
    let columns: Vec<String> = q.plan.columns.iter().map(|c| c.name.clone()).collect();
    let width = columns.len();
    let value = fixpoint(
        seed,
        &columns,
        q.mode,
        DEFAULT_ITERATION_CAP,
        oracle,
        &mut |r, oracle| {
            let mut scope = RowScope {
                r,
                vars: HashMap::new(),
            };
            eval_node(&q.plan.body, width, &mut scope, oracle)
        },
    )?;
    Ok(SimResult {
        value: check_result(q.result_type, value.value)?,
        ..value
    })
}

type Step<'a> =
    dyn FnMut(&HashMap<String, Value>, &mut dyn QueryOracle) -> Result<RunRow, EvalError> + 'a;

/// Iterates from `seed` until a base-case row appears. Each call row yields
/// exactly one successor row.
fn fixpoint(
    seed: RunRow,
    columns: &[String],
    mode: CteMode,
    cap: u64,
    oracle: &mut dyn QueryOracle,
    step: &mut Step,
) -> Result<SimResult, EvalError> {
    let width = columns.len();
    seed.validate(width)?;
    let mut budget = StepBudget::new(cap);
    let mut rows_emitted = 1u64;
    let mut retained = seed.text_payload() as u64;
    let mut max_working_set = 1u64;
    let mut retained_cells = retained;
    let mut current = seed;
    while current.call {
        budget.tick()?;
        let r: HashMap<String, Value> = columns
            .iter()
            .cloned()
            .zip(current.args.iter().cloned())
            .collect();
        let next = step(&r, oracle)?;
        next.validate(width)?;
        rows_emitted += 1;
        let payload = next.text_payload() as u64;
        match mode {
            CteMode::Recursive => {
                retained += payload;
                max_working_set = rows_emitted;
                retained_cells = retained;
            }
            CteMode::Iterate => {
                // the current row and its successor coexist during the step
                max_working_set = max_working_set.max(2);
                retained_cells = retained_cells.max(retained + payload);
                retained = payload;
            }
        }
        current = next;
    }
    Ok(SimResult {
        value: current.result,
        rows_emitted,
        max_working_set,
        retained_cells,
    })
}

fn eval_row(
    e: &RowExpr,
    width: usize,
    scope: &mut RowScope,
    oracle: &mut dyn QueryOracle,
) -> Result<RunRow, EvalError> {
    match e {
        RowExpr::CallRow { tag, args } => call_row(*tag, args, scope, oracle),
        RowExpr::BaseRow(v) => base_row(v, width, scope, oracle),
        RowExpr::Case { arms, otherwise } => {
            let arm = pick(arms, otherwise.as_deref(), scope, oracle)?;
            eval_row(arm, width, scope, oracle)
        }
        RowExpr::LetChain { bindings, body } => {
            let saved = scope.vars.clone();
            for (var, value) in bindings {
                let v = eval(value, scope, oracle)?;
                scope.vars.insert(var.clone(), v);
            }
            let out = eval_row(body, width, scope, oracle);
            scope.vars = saved;
            out
        }
    }
}
