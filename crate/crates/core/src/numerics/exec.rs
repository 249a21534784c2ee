/// Runs independent work units `0..n` and returns their results in index
/// order, whatever order they were computed in.
///
/// Every stochastic routine derives its randomness from the unit index, so
/// results do not depend on the executor or its thread count.
pub trait Executor: Sync {
    fn map<T, F>(&self, n: usize, f: F) -> alloc::vec::Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs every unit on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, F>(&self, n: usize, f: F) -> alloc::vec::Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..n).map(f).collect()
    }
}
