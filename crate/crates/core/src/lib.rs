//! Compiles PL/pgSQL-style functions into pure SQL.
//!
//! The pipeline is AST → SSA → ANF → defunctionalized UDF → recursive CTE.
//! Each stage has its own interpreter so the stages can be checked against one
//! another on the same inputs.

pub mod anf;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod expr;
pub mod frontend;
pub mod harness;
pub mod runtime;
pub mod sqlgen;
pub mod ssa;
pub mod udf;
pub mod value;

pub use error::{CompileError, EmitError, Error, EvalError, TableError};
pub use expr::{Expr, QueryId};
pub use value::{TypeTag, Value};

use frontend::{parse_function, FunctionAst};
use sqlgen::{emit_cte, CteMode, Dialect, SqlQuery};

/// Every intermediate form of one function, plus its postgres emissions.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub ast: FunctionAst,
    pub ssa: ssa::SsaProgram,
    pub anf: anf::AnfProgram,
    pub udf: udf::UdfProgram,
    pub recursive: SqlQuery,
    pub iterate: SqlQuery,
}

/// Runs the whole pipeline on `source`.
pub fn compile(source: &str) -> Result<Compiled, CompileError> {
    let ast = parse_function(source)?;
    let ssa = ssa::simplify_ssa(&ssa::lower_to_ssa(&ast));
    let violations = ssa::verify(&ssa);
    if !violations.is_empty() {
        return Err(CompileError::Semantic(format!(
            "invalid SSA: {}",
            violations.join("; ")
        )));
    }
    let anf = anf::ssa_to_anf(&ssa);
    let udf = udf::defunctionalize(&anf);
    let emit = |mode| {
        emit_cte(&udf, Dialect::Postgres, mode).map_err(|e| CompileError::Semantic(e.to_string()))
    };
    let recursive = emit(CteMode::Recursive)?;
    let iterate = emit(CteMode::Iterate)?;
    Ok(Compiled {
        ast,
        ssa,
        anf,
        udf,
        recursive,
        iterate,
    })
}
