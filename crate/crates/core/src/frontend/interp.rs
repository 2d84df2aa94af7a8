//! Reference interpreter: statement-by-statement execution of the AST.
//!
//! This fixes the language's semantics; every later stage is checked against it.

use std::collections::HashMap;

use crate::error::EvalError;
use crate::eval::{
    binary, check_args, check_result, eval, truthy, StepBudget, DEFAULT_ITERATION_CAP,
};
use crate::expr::{BinOp, Expr};
use crate::frontend::ast::{FunctionAst, Stmt};
use crate::runtime::QueryOracle;
use crate::value::Value;

enum Flow {
    Normal,
    Exit(Option<String>),
    Continue(Option<String>),
    Return(Value),
}

struct Interp<'o> {
    env: HashMap<String, Value>,
    oracle: &'o mut dyn QueryOracle,
    budget: StepBudget,
}

pub fn interpret_ast(
    ast: &FunctionAst,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
) -> Result<Value, EvalError> {
    interpret_ast_capped(ast, args, oracle, DEFAULT_ITERATION_CAP)
}

/// As [`interpret_ast`], aborting after `cap` loop iterations.
pub fn interpret_ast_capped(
    ast: &FunctionAst,
    args: &[Value],
    oracle: &mut dyn QueryOracle,
    cap: u64,
) -> Result<Value, EvalError> {
    check_args(&ast.params, args)?;
    let env = ast
        .params
        .iter()
        .map(|p| p.name.clone())
        .zip(args.iter().cloned())
        .collect();
    let mut it = Interp {
        env,
        oracle,
        budget: StepBudget::new(cap),
    };
    for d in &ast.decls {
        let v = match &d.init {
            Some(e) => it.eval(e)?,
            None => Value::Null,
        };
        it.env.insert(d.name.clone(), v);
    }
    match it.block(&ast.body)? {
        Flow::Return(v) => check_result(ast.return_type, v),
        _ => Err(EvalError::MissingReturn),
    }
}

/// Whether a loop-control flow targets the loop labelled `label`.
fn targets(target: &Option<String>, label: &Option<String>) -> bool {
    target.is_none() || target == label
}

impl Interp<'_> {
    fn eval(&mut self, e: &Expr) -> Result<Value, EvalError> {
        eval(e, &self.env, self.oracle)
    }

    fn cond(&mut self, e: &Expr) -> Result<bool, EvalError> {
        let v = self.eval(e)?;
        truthy(&v)
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Flow, EvalError> {
        for s in stmts {
            match self.stmt(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    /// Runs one loop iteration's body; `Some(flow)` means leave the loop with `flow`.
    fn iteration(
        &mut self,
        label: &Option<String>,
        body: &[Stmt],
    ) -> Result<Option<Flow>, EvalError> {
        self.budget.tick()?;
        Ok(match self.block(body)? {
            Flow::Normal => None,
            Flow::Continue(t) if targets(&t, label) => None,
            Flow::Exit(t) if targets(&t, label) => Some(Flow::Normal),
            other => Some(other),
        })
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow, EvalError> {
        match s {
            Stmt::Assign { var, expr } => {
                let v = self.eval(expr)?;
                self.env.insert(var.clone(), v);
                Ok(Flow::Normal)
            }
            Stmt::Return(e) => Ok(Flow::Return(self.eval(e)?)),
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.cond(cond)? {
                    self.block(then_branch)
                } else {
                    self.block(else_branch)
                }
            }
            Stmt::Exit { label, cond } => Ok(match cond {
                Some(c) if !self.cond(c)? => Flow::Normal,
                _ => Flow::Exit(label.clone()),
            }),
            Stmt::Continue { label, cond } => Ok(match cond {
                Some(c) if !self.cond(c)? => Flow::Normal,
                _ => Flow::Continue(label.clone()),
            }),
            Stmt::While { label, cond, body } => {
                while self.cond(cond)? {
                    if let Some(flow) = self.iteration(label, body)? {
                        return Ok(flow);
                    }
                }
                Ok(Flow::Normal)
            }
            Stmt::Loop { label, body } => loop {
                if let Some(flow) = self.iteration(label, body)? {
                    return Ok(flow);
                }
            },
            Stmt::ForRange {
                label,
                var,
                lo,
                hi,
                body,
            } => {
                // bounds are evaluated once; the test and increment are ordinary `<=` and `+`
                let lo = self.eval(lo)?;
                let hi = self.eval(hi)?;
                let mut i = lo;
                let flow = loop {
                    if !truthy(&binary(BinOp::Le, i.clone(), hi.clone())?)? {
                        break Flow::Normal;
                    }
                    self.env.insert(var.clone(), i.clone());
                    if let Some(flow) = self.iteration(label, body)? {
                        break flow;
                    }
                    i = binary(BinOp::Add, i, Value::Int(1))?;
                };
                self.env.remove(var);
                Ok(flow)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_function;
    use crate::runtime::TableOracle;

    fn run(src: &str, args: &[Value]) -> Result<Value, EvalError> {
        let f = parse_function(src).unwrap();
        interpret_ast(&f, args, &mut TableOracle::empty(0))
    }

    fn wrap(body: &str) -> String {
        format!("CREATE FUNCTION f(n int) RETURNS int AS $$ {body} $$ LANGUAGE PLPGSQL")
    }

    #[test]
    fn labelled_exit_and_continue() {
        let src = wrap(
            "DECLARE s int = 0; BEGIN
               <<outer>> FOR i IN 1..n LOOP
                 FOR j IN 1..n LOOP
                   CONTINUE outer WHEN j > i;
                   EXIT outer WHEN s > 100;
                   s = s + 1;
                 END LOOP;
               END LOOP outer;
               RETURN s; END;",
        );
        // sum_{i=1..n} i, capped once it passes 100
        assert_eq!(run(&src, &[Value::Int(4)]), Ok(Value::Int(10)));
        assert_eq!(run(&src, &[Value::Int(30)]), Ok(Value::Int(101)));
    }

    #[test]
    fn uninitialized_declarations_are_null() {
        let src = wrap("DECLARE x int; BEGIN IF x IS NULL THEN RETURN 1; END IF; RETURN 0; END;");
        assert_eq!(run(&src, &[Value::Int(0)]), Ok(Value::Int(1)));
    }

    #[test]
    fn iteration_cap_aborts_runaway_loops() {
        let f = parse_function(&wrap("BEGIN LOOP n = n + 1; END LOOP; END;")).unwrap();
        let r = interpret_ast_capped(&f, &[Value::Int(0)], &mut TableOracle::empty(0), 1000);
        assert_eq!(r, Err(EvalError::IterationCap(1000)));
    }

    #[test]
    fn argument_types_are_checked() {
        let src = wrap("BEGIN RETURN n; END;");
        assert!(matches!(
            run(&src, &[Value::text("x")]),
            Err(EvalError::TypeMismatch(_))
        ));
        assert!(matches!(run(&src, &[]), Err(EvalError::Arguments(_))));
    }

    #[test]
    fn result_type_is_checked() {
        let src = wrap("BEGIN RETURN 'x'; END;");
        assert!(matches!(
            run(&src, &[Value::Int(0)]),
            Err(EvalError::TypeMismatch(_))
        ));
    }
}
