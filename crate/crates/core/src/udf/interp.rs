//! Executes the worker as a loop: each self-call rebinds the slots.

use std::collections::HashMap;

use crate::error::EvalError;
use crate::eval::{check_args, check_result, eval, truthy, StepBudget, DEFAULT_ITERATION_CAP};
use crate::runtime::QueryOracle;
use crate::udf::{UdfExpr, UdfProgram};
use crate::value::Value;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UdfStats {
    /// Worker invocations, including the first one from the wrapper.
    pub calls: u64,
}

pub fn interpret_udf(
    p: &UdfProgram,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
) -> Result<(Value, UdfStats), EvalError> {
    interpret_udf_capped(p, args, oracle, DEFAULT_ITERATION_CAP)
}

/// As [`interpret_udf`], aborting after `cap` recursive calls.
pub fn interpret_udf_capped(
    p: &UdfProgram,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
    cap: u64,
) -> Result<(Value, UdfStats), EvalError> {
    check_args(&p.params, args)?;
    let mut env: HashMap<String, Value> = p
        .params
        .iter()
        .map(|p| p.name.clone())
        .zip(args.iter().cloned())
        .collect();
    let mut budget = StepBudget::new(cap);
    let mut stats = UdfStats::default();
    let mut cur = &p.initial;
    loop {
        match cur {
            UdfExpr::Let { var, value, body } => {
                let v = eval(value, &env, oracle)?;
                env.insert(var.clone(), v);
                cur = body;
            }
            UdfExpr::Case { arms, otherwise } => {
                let mut next = None;
                for (g, arm) in arms {
                    if truthy(&eval(g, &env, oracle)?)? {
                        next = Some(arm);
                        break;
                    }
                }
                cur = match (next, otherwise) {
                    (Some(a), _) => a,
                    (None, Some(o)) => o,
                    (None, None) => {
                        let tag = p
                            .dispatch
                            .as_ref()
                            .and_then(|d| env.get(d))
                            .cloned()
                            .unwrap_or(Value::Null);
                        return Err(EvalError::Dispatch(format!(
                            "no case matches {} = {tag}",
                            p.dispatch.as_deref().unwrap_or("?")
                        )));
                    }
                };
            }
            UdfExpr::Return(e) => {
                let v = eval(e, &env, oracle)?;
                return Ok((check_result(p.return_type, v)?, stats));
            }
            UdfExpr::Call { tag, slots } => {
                let values = slots
                    .iter()
                    .map(|s| eval(s, &env, oracle))
                    .collect::<Result<Vec<_>, _>>()?;
                if stats.calls > 0 {
                    budget.tick()?;
                }
                stats.calls += 1;
                env = p.slots.iter().map(|s| s.name.clone()).zip(values).collect();
                if let (Some(d), Some(t)) = (&p.dispatch, tag) {
                    env.insert(d.clone(), Value::Int(*t));
                }
                cur = &p.body;
            }
        }
    }
}
