//! Execution strategy for batch fan-out: rayon when the `parallel`
//! feature is enabled, plain iteration otherwise.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How batch operations distribute independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    /// Process items one at a time, in input order.
    Sequential,
    /// Fan out across the rayon pool. Results keep input order. Without
    /// the `parallel` feature this degrades to sequential execution.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Map `f` over `items`; the output preserves input order.
    pub fn map<T, U, F>(self, items: Vec<T>, f: F) -> Vec<U>
    where
        T: Send,
        U: Send,
        F: Fn(T) -> U + Sync + Send,
    {
        match self {
            Exec::Sequential => items.into_iter().map(f).collect(),
            Exec::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    items.into_par_iter().map(f).collect()
                }
                #[cfg(not(feature = "parallel"))]
                {
                    items.into_iter().map(f).collect()
                }
            }
        }
    }

    /// Fold items into accumulators and merge them. `merge` must be
    /// associative and commutative; the grouping of chunks under
    /// `Parallel` is unspecified but the merged result is not.
    pub fn fold_merge<T, A, FF, FM>(
        self,
        items: Vec<T>,
        init: impl Fn() -> A + Sync + Send,
        fold: FF,
        merge: FM,
    ) -> A
    where
        T: Send,
        A: Send,
        FF: Fn(A, T) -> A + Sync + Send,
        FM: Fn(A, A) -> A + Sync + Send,
    {
        match self {
            Exec::Sequential => items.into_iter().fold(init(), fold),
            Exec::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    items
                        .into_par_iter()
                        .fold(&init, &fold)
                        .reduce(&init, &merge)
                }
                #[cfg(not(feature = "parallel"))]
                {
                    let _ = merge;
                    items.into_iter().fold(init(), fold)
                }
            }
        }
    }
}
