//! Deterministic data-parallel helpers.
//!
//! All reductions in this crate run over a fixed chunk decomposition and are
//! combined in chunk order, so results are bitwise independent of the worker
//! count. Chunk counts are fixed constants, never derived from the thread
//! pool.

use rayon::prelude::*;

/// Number of chunks used for deterministic reductions.
pub const REDUCE_CHUNKS: usize = 64;

/// Sum `f(i)` over `0..n` deterministically: chunked in parallel, chunk sums
/// combined sequentially in chunk order.
pub fn det_sum(n: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let chunk = n.div_ceil(REDUCE_CHUNKS);
    let partials: Vec<f64> = (0..n.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk;
            let hi = (lo + chunk).min(n);
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            acc
        })
        .collect();
    partials.iter().sum()
}

/// Elementwise map into a new vector, parallel over fixed chunks.
pub fn det_map(n: usize, f: impl Fn(usize) -> f64 + Sync) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let chunk = n.div_ceil(REDUCE_CHUNKS).max(1);
    out.par_chunks_mut(chunk).enumerate().for_each(|(c, slice)| {
        let lo = c * chunk;
        for (k, v) in slice.iter_mut().enumerate() {
            *v = f(lo + k);
        }
    });
    out
}

/// Accumulate per-chunk output fields produced by `fill(chunk_index, buf)`
/// into a single field, combining in chunk order.
pub fn det_accumulate(len: usize, chunks: usize, fill: impl Fn(usize, &mut [f64]) + Sync) -> Vec<f64> {
    let partials: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut buf = vec![0.0; len];
            fill(c, &mut buf);
            buf
        })
        .collect();
    let mut out = vec![0.0; len];
    for buf in partials {
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o += b;
        }
    }
    out
}
