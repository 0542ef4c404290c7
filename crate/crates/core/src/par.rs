//! Order-preserving map over indices, parallel when the `parallel` feature is on.

use alloc::vec::Vec;

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, S, I, F>(n: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map_init(init, |s, i| f(s, i)).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, S, I, F>(n: usize, init: I, f: F) -> Vec<T>
where
    I: Fn() -> S,
    F: Fn(&mut S, usize) -> T,
{
    let mut state = init();
    (0..n).map(|i| f(&mut state, i)).collect()
}

/// Like [`map_indexed`], but hands out contiguous index blocks of size
/// `block` and concatenates the per-block outputs.
pub(crate) fn map_blocks<T, S, I, F>(n: usize, block: usize, init: I, f: F) -> Vec<T>
where
    T: Send,
    S: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, core::ops::Range<usize>) -> Vec<T> + Sync + Send,
{
    let blocks = n.div_ceil(block);
    map_indexed(blocks, init, |s, b| f(s, b * block..n.min((b + 1) * block))).into_iter().flatten().collect()
}
