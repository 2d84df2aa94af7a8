//! Parsing and reference interpretation of the supported PL/pgSQL subset.

mod ast;
mod interp;
mod lexer;
mod parser;
mod printer;
mod query;

pub use ast::{walk_stmts, Decl, FunctionAst, Param, Stmt};
pub use interp::{interpret_ast, interpret_ast_capped};
pub use parser::parse_function;
pub use printer::{print_function, SourceStyle};
pub use query::{QueryTemplate, Segment};

/// The function's embedded queries, ordered by source position.
pub fn extract_embedded_queries(ast: &FunctionAst) -> Vec<QueryTemplate> {
    ast.queries.clone()
}
