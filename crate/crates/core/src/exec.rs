//! Batch evaluation strategy.
//!
//! With the `parallel` feature (on by default) batches fan out over the rayon
//! pool; without it every batch runs in order on the calling thread. Results
//! are always returned in input order, so outputs never depend on scheduling.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// `Parallel` when the crate was built with rayon support.
    pub fn available_parallelism(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `f` applied to every item, results in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_strategies_preserve_order() {
        let items: Vec<u64> = (0..1000).collect();
        let f = |x: &u64| x * x + 1;
        let seq = Execution::Sequential.map(&items, f);
        let par = Execution::Parallel.map(&items, f);
        assert_eq!(seq, par);
        assert_eq!(seq[999], 999 * 999 + 1);
    }
}
