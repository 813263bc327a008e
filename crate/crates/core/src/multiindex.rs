//! Multi-index sets: graded basis indices and the push/fork generator of
//! constant-sum indices used by the high-order moment expansion.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Default refusal threshold for enumerations.
pub const DEFAULT_CAPACITY: u128 = 100_000_000;

/// Fixed-length vector of non-negative integers.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zeros(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    /// Total degree `|i|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// `C(n, k)` in 128-bit arithmetic; `None` on overflow.
pub fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        // acc * (n - j) / (j + 1) stays integral at every step
        acc = acc.checked_mul(n - j)? / (j + 1);
    }
    Some(acc)
}

/// Number of multi-indices with `|i| = m` over `p` slots, `C(m+p-1, m)`.
pub fn constant_sum_count(m: u32, p: usize) -> Option<u128> {
    if p == 0 {
        return Some(u128::from(m == 0));
    }
    binomial(m as u128 + p as u128 - 1, m as u128)
}

/// All n-variate indices of total degree ≤ d, graded order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedIndexSet {
    n: usize,
    d: usize,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
}

impl GradedIndexSet {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, linear: usize) -> Option<&MultiIndex> {
        self.indices.get(linear)
    }

    pub fn position(&self, index: &MultiIndex) -> Option<usize> {
        self.lookup.get(index).copied()
    }
}

/// Expected basis size `(n+d)!/(n! d!)`.
pub fn basis_size(n: usize, d: usize) -> Option<u128> {
    binomial((n + d) as u128, d as u128)
}

/// Graded multi-indices: total degree ascending, lexicographically
/// descending within a degree, zero index first.
pub fn graded_basis_indices(n: usize, d: usize) -> Result<GradedIndexSet> {
    graded_basis_indices_with_limit(n, d, DEFAULT_CAPACITY)
}

pub fn graded_basis_indices_with_limit(n: usize, d: usize, limit: u128) -> Result<GradedIndexSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let p = basis_size(n, d).unwrap_or(u128::MAX);
    if p > limit {
        return Err(Error::Capacity { requested: p, limit });
    }
    let mut indices = Vec::with_capacity(p as usize);
    let mut buf = vec![0u32; n];
    for degree in 0..=d as u32 {
        push_descending(&mut buf, 0, degree, &mut indices);
    }
    let lookup = indices
        .iter()
        .enumerate()
        .map(|(k, i)| (i.clone(), k))
        .collect();
    Ok(GradedIndexSet {
        n,
        d,
        indices,
        lookup,
    })
}

fn push_descending(buf: &mut [u32], slot: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if slot + 1 == buf.len() {
        buf[slot] = remaining;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for v in (0..=remaining).rev() {
        buf[slot] = v;
        push_descending(buf, slot + 1, remaining - v, out);
    }
    buf[slot] = 0;
}

/// Streaming generator of `{i : |i| = m}` over `p` slots.
///
/// Starts with every item in the last slot. While the last slot is
/// non-empty one item is pushed into the slot before it; otherwise the
/// trailing non-empty slot is forked: one item moves one slot towards the
/// front and the rest return to the last slot. The emission order is
/// lexicographically ascending, which makes ranks easy to compute.
#[derive(Debug, Clone)]
pub struct ConstantSumIterator {
    m: u32,
    state: Vec<u32>,
    pending: bool,
    remaining: Option<u128>,
}

impl ConstantSumIterator {
    pub fn new(m: u32, p: usize) -> Self {
        let mut state = vec![0; p];
        if let Some(last) = state.last_mut() {
            *last = m;
        }
        Self {
            m,
            state,
            pending: p > 0 || m == 0,
            remaining: None,
        }
    }

    /// Iterator positioned at the `rank`-th index of the sequence, emitting
    /// at most `count` items. Used to split the set between workers.
    pub fn from_rank(m: u32, p: usize, rank: u128, count: u128) -> Result<Self> {
        let total = constant_sum_count(m, p).ok_or(Error::Capacity {
            requested: u128::MAX,
            limit: u128::MAX,
        })?;
        if rank >= total {
            return Ok(Self {
                m,
                state: vec![0; p],
                pending: false,
                remaining: Some(0),
            });
        }
        let mut state = vec![0u32; p];
        let mut rank = rank;
        let mut left = m;
        for slot in 0..p.saturating_sub(1) {
            let tail_slots = p - slot - 1;
            let mut v = 0u32;
            loop {
                let block = constant_sum_count(left - v, tail_slots).unwrap_or(u128::MAX);
                if rank < block {
                    break;
                }
                rank -= block;
                v += 1;
            }
            state[slot] = v;
            left -= v;
        }
        if let Some(last) = state.last_mut() {
            *last = left;
        }
        Ok(Self {
            m,
            state,
            pending: true,
            remaining: Some(count),
        })
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn slots(&self) -> usize {
        self.state.len()
    }

    /// Advances and lends the next index without allocating.
    pub fn next_index(&mut self) -> Option<&[u32]> {
        if let Some(r) = self.remaining {
            if r == 0 {
                return None;
            }
        }
        if self.pending {
            self.pending = false;
        } else if !self.advance() {
            return None;
        }
        if let Some(r) = self.remaining.as_mut() {
            *r -= 1;
        }
        Some(&self.state)
    }

    fn advance(&mut self) -> bool {
        let p = self.state.len();
        if p <= 1 {
            return false;
        }
        if self.state[p - 1] > 0 {
            // push
            self.state[p - 1] -= 1;
            self.state[p - 2] += 1;
            return true;
        }
        // fork the trailing non-empty slot
        let Some(k) = (0..p - 1).rev().find(|&k| self.state[k] > 0) else {
            return false;
        };
        if k == 0 {
            return false;
        }
        let rest = self.state[k] - 1;
        self.state[k] = 0;
        self.state[k - 1] += 1;
        self.state[p - 1] = rest;
        true
    }
}

impl Iterator for ConstantSumIterator {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        self.next_index().map(|s| MultiIndex(s.to_vec()))
    }
}

/// `m! / (i_1! ⋯ i_p!)`, computed as a product of binomials so that no
/// intermediate factorial is formed.
pub fn multinomial_coefficient(m: u32, index: &[u32]) -> Result<u128> {
    let total: u64 = index.iter().map(|&v| v as u64).sum();
    if total != m as u64 {
        return Err(Error::Contract(format!(
            "multinomial index sums to {total}, expected {m}"
        )));
    }
    let mut left = m as u128;
    let mut acc: u128 = 1;
    for &v in index {
        if v == 0 {
            continue;
        }
        let b = binomial(left, v as u128)
            .ok_or_else(|| Error::Numeric("multinomial coefficient overflow".into()))?;
        acc = acc
            .checked_mul(b)
            .ok_or_else(|| Error::Numeric("multinomial coefficient overflow".into()))?;
        left -= v as u128;
    }
    Ok(acc)
}
