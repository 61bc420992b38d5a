//! Median-of-means primitives: seeded equal-size block partitions and
//! order-statistic quantiles of per-block means.
//!
//! Quantile convention, used consistently everywhere: the α-quantile of K
//! values is the ⌈αK⌉-th smallest (1-indexed) — the *lower representative* of
//! the set of admissible α-quantiles. Ties among blocks break toward the
//! smallest block index. Both conventions are load-bearing: they make every
//! downstream consumer (including the solver's median-block selection)
//! deterministic.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// 1-indexed order statistic picked by the α-quantile over `k` values:
/// ⌈αk⌉ clamped into [1, k].
pub(crate) fn order_index(alpha: f64, k: usize) -> usize {
    let raw = (alpha * k as f64).ceil() as usize;
    raw.clamp(1, k)
}

/// Lower-representative α-quantile: the ⌈αK⌉-th smallest of `values`.
///
/// The returned value u always satisfies the defining cardinality conditions:
/// at least (1−α)K components are ≥ u and at least αK components are ≤ u.
pub fn quantile(values: &[f64], alpha: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidInput("quantile of an empty vector".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "quantile level must lie in (0,1), got {alpha}"
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("quantile input contains NaN".into()));
    }
    let j = order_index(alpha, values.len());
    let mut buf = values.to_vec();
    let (_, v, _) = buf.select_nth_unstable_by(j - 1, |a, b| a.total_cmp(b));
    Ok(*v)
}

/// Index of the entry realizing the median (α = 1/2 lower representative);
/// among entries equal to the median value, the smallest index wins.
pub fn median_index(values: &[f64]) -> usize {
    debug_assert!(!values.is_empty());
    let j = order_index(0.5, values.len());
    let mut buf = values.to_vec();
    let (_, &mut m, _) = buf.select_nth_unstable_by(j - 1, |a, b| a.total_cmp(b));
    values
        .iter()
        .position(|&v| v == m || (v.is_nan() && m.is_nan()))
        .expect("median value came from the input")
}

/// Equal-size blocks over sample indices {0..n−1}, built from one seeded
/// shuffle. The n mod k leftover samples — a random subset, not the tail —
/// are dropped. Indices within each block are sorted ascending so that block
/// sums have a fixed summation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    n: usize,
    block_len: usize,
    blocks: Vec<Vec<usize>>,
    seed: u64,
}

impl BlockPartition {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!(
                "cannot split {n} samples into {k} blocks"
            )));
        }
        let mut idx: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        idx.shuffle(&mut rng);
        let block_len = n / k;
        let blocks = (0..k)
            .map(|j| {
                let mut blk = idx[j * block_len..(j + 1) * block_len].to_vec();
                blk.sort_unstable();
                blk
            })
            .collect();
        Ok(BlockPartition { n, block_len, blocks, seed })
    }

    /// Number of samples the partition was built over.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of samples actually covered by blocks: k·⌊n/k⌋.
    pub fn n_used(&self) -> usize {
        self.block_len * self.blocks.len()
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block(&self, j: usize) -> &[usize] {
        &self.blocks[j]
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Per-block means of `values`, in block order. `values` is indexed by
    /// original sample index, so it must cover all of {0..n−1}.
    pub fn block_means(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() < self.n {
            return Err(Error::InvalidInput(format!(
                "got {} values for a partition over {} samples",
                values.len(),
                self.n
            )));
        }
        let inv_len = 1.0 / self.block_len as f64;
        Ok(self
            .blocks
            .iter()
            .map(|blk| blk.iter().map(|&i| values[i]).sum::<f64>() * inv_len)
            .collect())
    }
}

/// α-quantile of the per-block means of `values`. α = 1/2 is the
/// median-of-means, robust to up to ⌈K/2⌉−1 corrupted blocks.
pub fn mom_statistic(values: &[f64], partition: &BlockPartition, alpha: f64) -> Result<f64> {
    let means = partition.block_means(values)?;
    quantile(&means, alpha)
}
