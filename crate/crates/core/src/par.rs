//! Optional data parallelism over independent subproblems.

/// Whether independent subproblems may run on the rayon pool. Without the
/// `parallel` feature both settings run sequentially. Results never depend
/// on the setting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

/// Applies `f` to every item, preserving order.
pub fn map<T, U, F>(p: Parallelism, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if p == Parallelism::Parallel && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = p;
    items.iter().map(f).collect()
}

/// Seed for the work on the cell pair `(source, target)`, so that results
/// do not depend on scheduling.
pub fn pair_seed(seed: u64, source: u32, target: u32) -> u64 {
    let mut x = seed ^ ((source as u64) << 32 | target as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 31;
    x = x.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x ^ (x >> 29)
}
