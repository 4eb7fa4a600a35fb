//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these dispatch to rayon; without it they are
//! ordinary iterator loops. Results are always collected in input order, so
//! callers see the same output regardless of the backend or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum items per rayon task.
#[cfg(feature = "parallel")]
const MIN_PAR_LEN: usize = 16;

macro_rules! if_rayon {
    ($par:expr, $seq:expr) => {{
        #[cfg(feature = "parallel")]
        {
            $par
        }
        #[cfg(not(feature = "parallel"))]
        {
            $seq
        }
    }};
}

/// `items.iter().map(f).collect()`, possibly in parallel.
pub fn map_collect<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if_rayon!(
        items.par_iter().with_min_len(MIN_PAR_LEN).map(f).collect(),
        items.iter().map(f).collect()
    )
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if_rayon!(
        (0..n).into_par_iter().with_min_len(MIN_PAR_LEN).map(f).collect(),
        (0..n).map(f).collect()
    )
}

/// Calls `f(chunk_index, chunk)` for consecutive `chunk_len`-sized chunks.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk_len = chunk_len.max(1);
    if_rayon!(
        data.par_chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c)),
        data.chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c))
    )
}

/// Number of worker threads the current backend would use.
pub fn current_num_threads() -> usize {
    if_rayon!(rayon::current_num_threads(), 1)
}

/// Pairwise (cascade) summation in a fixed split order.
///
/// The result depends only on the input sequence, never on scheduling.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 8;
    if values.len() <= LEAF {
        let mut s = 0.0;
        for v in values {
            s += v;
        }
        return s;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Arithmetic mean via [`pairwise_sum`]; `None` for an empty slice.
pub fn ordered_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(pairwise_sum(values) / values.len() as f64)
    }
}
