//! Compensated summation and the deterministic blocked parallel reduction
//! used by every quadrature kernel.
//!
//! Bit-reproducibility contract: a reduction over outer indices `0..n` is
//! split into fixed-size blocks that do not depend on the worker count. Each
//! block is summed sequentially (Neumaier-compensated, in index order), the
//! per-block partials are gathered in block order, and the final combine is
//! again a sequential compensated sum. Two runs with different thread counts
//! therefore perform the identical sequence of floating-point operations.

use rayon::prelude::*;

/// Outer indices per reduction block. Fixed so the partition, and hence the
/// result, is independent of the thread count.
pub const BLOCK: usize = 16;

/// Neumaier's variant of Kahan summation: also compensates when the incoming
/// term is larger than the running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc.total()
    }
}

/// Deterministic parallel sum of `block_term(range)` over `0..n` partitioned
/// into [`BLOCK`]-sized blocks. `block_term` must itself be deterministic for
/// a given range; blocks are combined in block-index order.
pub fn blocked_sum<F>(n: usize, block_term: F) -> f64
where
    F: Fn(std::ops::Range<usize>) -> f64 + Sync + Send,
{
    let ranges: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(BLOCK)
        .map(|lo| lo..(lo + BLOCK).min(n))
        .collect();
    let partials: Vec<f64> = ranges.into_par_iter().map(block_term).collect();
    NeumaierSum::sum_iter(partials)
}

/// Deterministic parallel minimum of `block_min(range)` over `0..n`.
/// `f64::min` over non-NaN values is order-independent, so this is exact for
/// any partition; the blocked form just mirrors [`blocked_sum`].
pub fn blocked_min<F>(n: usize, block_min: F) -> f64
where
    F: Fn(std::ops::Range<usize>) -> f64 + Sync + Send,
{
    let ranges: Vec<std::ops::Range<usize>> = (0..n)
        .step_by(BLOCK)
        .map(|lo| lo..(lo + BLOCK).min(n))
        .collect();
    ranges
        .into_par_iter()
        .map(block_min)
        .reduce(|| f64::INFINITY, f64::min)
}
