//! Direct execution of SSA: φs are resolved against the block control came from.

use std::collections::HashMap;

use crate::error::EvalError;
use crate::eval::{check_args, check_result, eval, truthy, StepBudget, DEFAULT_ITERATION_CAP};
use crate::runtime::QueryOracle;
use crate::ssa::{SsaProgram, Terminator};
use crate::value::Value;

pub fn interpret_ssa(
    p: &SsaProgram,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
) -> Result<Value, EvalError> {
    interpret_ssa_capped(p, args, oracle, DEFAULT_ITERATION_CAP)
}

/// As [`interpret_ssa`], aborting after `cap` jumps.
pub fn interpret_ssa_capped(
    p: &SsaProgram,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
    cap: u64,
) -> Result<Value, EvalError> {
    check_args(&p.params, args)?;
    let index: HashMap<&str, usize> = p
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| (b.label.as_str(), i))
        .collect();
    let find = |l: &str| {
        index
            .get(l)
            .copied()
            .ok_or_else(|| EvalError::Undefined(format!("label {l}")))
    };
    let mut env: HashMap<String, Value> = p
        .params
        .iter()
        .map(|p| p.name.clone())
        .zip(args.iter().cloned())
        .collect();
    let mut budget = StepBudget::new(cap);
    let mut cur = find(&p.entry)?;
    let mut prev: Option<&str> = None;
    loop {
        let block = &p.blocks[cur];
        // φs read their operands simultaneously
        let mut incoming = Vec::with_capacity(block.phis.len());
        for phi in &block.phis {
            let from = prev.ok_or_else(|| {
                EvalError::Undefined(format!("phi {} in entry block", phi.target))
            })?;
            let (_, src) = phi.sources.iter().find(|(l, _)| l == from).ok_or_else(|| {
                EvalError::Undefined(format!("phi {} has no operand for {from}", phi.target))
            })?;
            incoming.push((phi.target.clone(), eval(src, &env, oracle)?));
        }
        env.extend(incoming);
        for (v, e) in &block.assigns {
            let value = eval(e, &env, oracle)?;
            env.insert(v.clone(), value);
        }
        let next = match &block.term {
            Terminator::Return(e) => return check_result(p.return_type, eval(e, &env, oracle)?),
            Terminator::Goto(l) => l,
            Terminator::CondGoto {
                cond,
                then_label,
                else_label,
            } => {
                if truthy(&eval(cond, &env, oracle)?)? {
                    then_label
                } else {
                    else_label
                }
            }
        };
        budget.tick()?;
        prev = Some(&block.label);
        cur = find(next)?;
    }
}
