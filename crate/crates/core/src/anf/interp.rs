//! ANF execution over a flat function table. A function body sees only the
//! top-level parameters and its own parameters, so a missed lambda lifting
//! shows up as an undefined variable.

use std::collections::HashMap;

use crate::anf::{AnfExpr, AnfFunction, AnfProgram};
use crate::error::EvalError;
use crate::eval::{check_args, check_result, eval, truthy, StepBudget, DEFAULT_ITERATION_CAP};
use crate::runtime::QueryOracle;
use crate::value::Value;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AnfStats {
    pub tail_calls: u64,
    /// Function bodies entered, counting the top-level body unless it only jumps.
    pub invocations: u64,
}

/// Whether the top-level body only jumps into a function, i.e. does no work
/// of its own (the defunctionalized worker then needs no entry function).
pub(crate) fn jumps_directly(body: &AnfExpr) -> bool {
    match body {
        AnfExpr::TailCall { .. } => true,
        AnfExpr::LetRec { body, .. } => matches!(**body, AnfExpr::TailCall { .. }),
        _ => false,
    }
}

pub fn interpret_anf(
    p: &AnfProgram,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
) -> Result<(Value, AnfStats), EvalError> {
    interpret_anf_capped(p, args, oracle, DEFAULT_ITERATION_CAP)
}

/// As [`interpret_anf`], aborting after `cap` tail calls.
pub fn interpret_anf_capped(
    p: &AnfProgram,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
    cap: u64,
) -> Result<(Value, AnfStats), EvalError> {
    check_args(&p.params, args)?;
    let table: HashMap<&str, &AnfFunction> = p
        .functions()
        .into_iter()
        .map(|f| (f.name.as_str(), f))
        .collect();
    let top: HashMap<String, Value> = p
        .params
        .iter()
        .map(|p| p.name.clone())
        .zip(args.iter().cloned())
        .collect();
    let mut env = top.clone();
    let mut budget = StepBudget::new(cap);
    let mut stats = AnfStats {
        tail_calls: 0,
        invocations: u64::from(!jumps_directly(&p.body)),
    };
    let mut cur = &p.body;
    loop {
        match cur {
            AnfExpr::Let { var, value, body } => {
                let v = eval(value, &env, oracle)?;
                env.insert(var.clone(), v);
                cur = body;
            }
            AnfExpr::If {
                cond,
                then_branch,
                else_branch,
            } => {
                cur = if truthy(&eval(cond, &env, oracle)?)? {
                    then_branch
                } else {
                    else_branch
                };
            }
            AnfExpr::LetRec { body, .. } => cur = body,
            AnfExpr::Return(e) => {
                let v = eval(e, &env, oracle)?;
                return Ok((check_result(p.return_type, v)?, stats));
            }
            AnfExpr::TailCall { func, args } => {
                let f = table
                    .get(func.as_str())
                    .ok_or_else(|| EvalError::Undefined(format!("function {func}")))?;
                if f.params.len() != args.len() {
                    return Err(EvalError::Arguments(format!(
                        "{func} takes {} arguments, got {}",
                        f.params.len(),
                        args.len()
                    )));
                }
                let values = args
                    .iter()
                    .map(|a| eval(a, &env, oracle))
                    .collect::<Result<Vec<_>, _>>()?;
                budget.tick()?;
                stats.tail_calls += 1;
                stats.invocations += 1;
                env = top.clone();
                env.extend(f.params.iter().cloned().zip(values));
                cur = &f.body;
            }
        }
    }
}
