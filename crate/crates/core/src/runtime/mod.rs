//! Query oracles, table data, and the recursive-CTE simulator.

mod oracle;
mod sim;
mod tables;

pub use oracle::{
    next_random, Evaluator, OracleCall, OracleError, QueryOracle, Registry, TableOracle,
};
pub use sim::{simulate_cte, simulate_cte_capped, simulate_query, SimResult};
pub use tables::{load_tables, parse_table, Column, Record, Table, Tables};
