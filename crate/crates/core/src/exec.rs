//! Ordered map over independent jobs, parallel when the `parallel` feature is on.

/// How independent jobs are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Worker pool with at most `jobs` threads (`None` = one per logical core).
    /// Without the `parallel` feature this runs sequentially.
    #[default]
    Parallel,
    ParallelJobs(usize),
}

impl Exec {
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Exec::Sequential,
            Some(n) => Exec::ParallelJobs(n),
            None => Exec::Parallel,
        }
    }

    /// Applies `f` to every item; results come back in input order regardless
    /// of execution mode.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            #[cfg(feature = "parallel")]
            Exec::ParallelJobs(n) => {
                use rayon::prelude::*;
                match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
                    Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                    Err(_) => items.iter().map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel | Exec::ParallelJobs(_) => items.iter().map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved_in_every_mode() {
        let items: Vec<u64> = (0..257).collect();
        let expected: Vec<u64> = items.iter().map(|x| x * x).collect();
        for exec in [Exec::Sequential, Exec::Parallel, Exec::ParallelJobs(3)] {
            assert_eq!(exec.map(&items, |x| x * x), expected);
        }
    }
}
