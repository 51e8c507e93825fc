//! Ordered data-parallel map over independent work items.
//!
//! With the `parallel` feature the map runs on a rayon pool; without it, or
//! with a single worker, it runs sequentially. Results always come back in
//! item order, so the output never depends on the worker count.

use crate::error::{ReachError, Result};

#[derive(Debug)]
pub struct Workers {
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
    sequential: bool,
}

impl Default for Workers {
    fn default() -> Self {
        Self::new(None).expect("default worker pool")
    }
}

impl Workers {
    /// `None` uses the global pool sized to the machine; `Some(1)` runs
    /// sequentially.
    pub fn new(count: Option<usize>) -> Result<Self> {
        match count {
            Some(0) => Err(ReachError::Config("worker count must be at least 1".into())),
            Some(1) => Ok(Self::sequential()),
            #[cfg(feature = "parallel")]
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| ReachError::Config(format!("cannot start {n} workers: {e}")))?;
                Ok(Self {
                    pool: Some(pool),
                    sequential: false,
                })
            }
            #[cfg(not(feature = "parallel"))]
            Some(_) => Ok(Self::sequential()),
            None => Ok(Self {
                #[cfg(feature = "parallel")]
                pool: None,
                sequential: cfg!(not(feature = "parallel")),
            }),
        }
    }

    pub fn sequential() -> Self {
        Self {
            #[cfg(feature = "parallel")]
            pool: None,
            sequential: true,
        }
    }

    pub fn is_sequential(&self) -> bool {
        self.sequential
    }

    /// `f(index, item)` for every item, in item order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> R + Sync + Send,
    {
        if self.sequential {
            return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let run = || items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
            match &self.pool {
                Some(pool) => pool.install(run),
                None => run(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!("sequential flag is always set without the parallel feature")
    }

    /// Like [`Workers::map`] for fallible work; the first error in item order wins.
    pub fn try_map<T, R, F>(&self, items: &[T], f: F) -> Result<Vec<R>>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &T) -> Result<R> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }
}
