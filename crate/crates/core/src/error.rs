use thiserror::Error;

/// Errors raised while reading a function definition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("unsupported construct {construct} at {line}:{col}")]
    Unsupported {
        construct: String,
        line: usize,
        col: usize,
    },
    #[error("undeclared variable `{name}` at {line}:{col}")]
    Undeclared {
        name: String,
        line: usize,
        col: usize,
    },
    #[error("{0}")]
    Semantic(String),
}

/// Errors raised by any of the evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow in {0}")]
    Overflow(String),
    #[error("undefined variable `{0}`")]
    Undefined(String),
    #[error("iteration cap of {0} exceeded")]
    IterationCap(u64),
    #[error("query oracle: {0}")]
    Oracle(String),
    #[error("call to `{0}` outside tail position")]
    NonTailCall(String),
    #[error("argument mismatch: {0}")]
    Arguments(String),
    #[error("no dispatch arm for {0}")]
    Dispatch(String),
    #[error("malformed run row: {0}")]
    MalformedRow(String),
    #[error("invalid cast: {0}")]
    InvalidCast(String),
    #[error("control reached end of function without RETURN")]
    MissingReturn,
}

/// Errors raised while loading CSV table data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TableError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}:{line}: duplicate key {key}")]
    DuplicateKey {
        file: String,
        line: usize,
        key: String,
    },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Invalid(String),
}

/// Errors raised while emitting SQL.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmitError {
    #[error("{mode} mode is not available for the {dialect} dialect")]
    UnsupportedCombination {
        dialect: &'static str,
        mode: &'static str,
    },
}

/// Umbrella error for callers that drive the whole pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Emit(#[from] EmitError),
}
