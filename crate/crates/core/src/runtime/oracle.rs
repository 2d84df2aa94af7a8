//! Query oracles: stand-ins for a DBMS evaluating embedded queries.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::QueryId;
use crate::runtime::tables::Tables;
use crate::value::Value;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("no evaluator registered for {0}")]
    UnknownQuery(QueryId),
    #[error("{id}: {message}")]
    Failed { id: QueryId, message: String },
}

/// One observable oracle interaction, in call order.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleCall {
    Query { id: QueryId, params: Vec<Value> },
    Random { value: f64 },
}

/// Evaluates embedded queries and supplies randomness.
pub trait QueryOracle {
    fn eval_query(&mut self, id: QueryId, params: &[Value]) -> Result<Value, OracleError>;

    /// Next value in `[0, 1)`.
    fn next_random(&mut self) -> f64;

    fn call_log(&self) -> &[OracleCall];
}

const LCG_A: u32 = 1_664_525;
const LCG_C: u32 = 1_013_904_223;

/// One step of the shared linear congruential generator.
///
/// `state' = (1664525 * state + 1013904223) mod 2^32`, value `state' / 2^32`.
pub fn next_random(state: u32) -> (f64, u32) {
    let next = state.wrapping_mul(LCG_A).wrapping_add(LCG_C);
    (f64::from(next) / 4_294_967_296.0, next)
}

/// Routine answering one embedded query over shared tables.
pub type Evaluator = Arc<dyn Fn(&Tables, &[Value]) -> Result<Value, String> + Send + Sync>;

/// Query-id → evaluator registrations for one function.
#[derive(Clone, Default)]
pub struct Registry {
    evaluators: BTreeMap<QueryId, Evaluator>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(
        &mut self,
        id: QueryId,
        f: impl Fn(&Tables, &[Value]) -> Result<Value, String> + Send + Sync + 'static,
    ) -> &mut Self {
        self.evaluators.insert(id, Arc::new(f));
        self
    }

    pub fn contains(&self, id: QueryId) -> bool {
        self.evaluators.contains_key(&id)
    }

    pub fn ids(&self) -> impl Iterator<Item = QueryId> + '_ {
        self.evaluators.keys().copied()
    }
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.evaluators.keys()).finish()
    }
}

/// Oracle backed by in-memory tables and registered evaluators.
///
/// Table data and registrations are shared; the rng state and call log are
/// per-instance, so concurrent simulations each take their own oracle.
#[derive(Debug, Clone)]
pub struct TableOracle {
    tables: Arc<Tables>,
    registry: Arc<Registry>,
    rng_state: u32,
    log: Vec<OracleCall>,
}

impl TableOracle {
    pub fn new(tables: Arc<Tables>, registry: Arc<Registry>, seed: u32) -> Self {
        TableOracle {
            tables,
            registry,
            rng_state: seed,
            log: Vec::new(),
        }
    }

    /// An oracle with no tables and no queries, for query-free functions.
    pub fn empty(seed: u32) -> Self {
        Self::new(Arc::new(Tables::default()), Arc::new(Registry::new()), seed)
    }

    pub fn tables(&self) -> &Tables {
        &self.tables
    }

    pub fn query_count(&self) -> usize {
        self.log
            .iter()
            .filter(|c| matches!(c, OracleCall::Query { .. }))
            .count()
    }

    pub fn random_count(&self) -> usize {
        self.log
            .iter()
            .filter(|c| matches!(c, OracleCall::Random { .. }))
            .count()
    }
}

impl QueryOracle for TableOracle {
    fn eval_query(&mut self, id: QueryId, params: &[Value]) -> Result<Value, OracleError> {
        self.log.push(OracleCall::Query {
            id,
            params: params.to_vec(),
        });
        let f = self
            .registry
            .evaluators
            .get(&id)
            .ok_or(OracleError::UnknownQuery(id))?;
        f(&self.tables, params).map_err(|message| OracleError::Failed { id, message })
    }

    fn next_random(&mut self) -> f64 {
        let (value, state) = next_random(self.rng_state);
        self.rng_state = state;
        self.log.push(OracleCall::Random { value });
        value
    }

    fn call_log(&self) -> &[OracleCall] {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcg_matches_the_recurrence() {
        assert_eq!(
            next_random(0),
            (1_013_904_223.0 / 4_294_967_296.0, 1_013_904_223)
        );
        assert_eq!(next_random(42).1, 1_083_814_273);
        assert_eq!(next_random(42).0, 1_083_814_273.0 / 4_294_967_296.0);
        // wraps modulo 2^32
        let (_, s) = next_random(u32::MAX);
        assert_eq!(
            u64::from(s),
            (1_664_525u64 * u64::from(u32::MAX) + 1_013_904_223) % (1 << 32)
        );
    }

    #[test]
    fn random_stream_ignores_query_calls() {
        let mut reg = Registry::new();
        reg.register(QueryId(1), |_, _| Ok(Value::Int(7)));
        let reg = Arc::new(reg);
        let tables = Arc::new(Tables::default());
        let mut a = TableOracle::new(tables.clone(), reg.clone(), 9);
        let mut b = TableOracle::new(tables, reg, 9);
        let x = a.next_random();
        a.eval_query(QueryId(1), &[]).unwrap();
        let y = a.next_random();
        assert_eq!((x, y), (b.next_random(), b.next_random()));
        assert_eq!(a.query_count(), 1);
        assert_eq!(a.random_count(), 2);
    }

    #[test]
    fn unknown_query_is_an_error() {
        let mut o = TableOracle::empty(0);
        assert_eq!(
            o.eval_query(QueryId(3), &[]),
            Err(OracleError::UnknownQuery(QueryId(3)))
        );
    }
}
