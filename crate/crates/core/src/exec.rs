//! Execution strategy for independent per-query work.
//!
//! Pipeline stages hand every query to an executor and get the results back
//! in input order, so the output never depends on how the work was spread
//! across threads.

use alloc::vec::Vec;

use crate::Result;

pub trait Executor: Sync {
    /// Applies `f` to every item and returns the results in input order.
    fn map<I, T, F>(&self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send;

    /// Like [`Executor::map`], failing with the first error in input order.
    fn try_map<I, T, F>(&self, items: &[I], f: F) -> Result<Vec<T>>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> Result<T> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<I, T, F>(&self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        items.iter().map(f).collect()
    }
}
