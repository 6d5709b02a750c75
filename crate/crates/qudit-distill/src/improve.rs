//! Entropy-reducing preprocessing and hybrid rates: recurrence iteration,
//! local subspace projection, strategy optimization and large-dimension
//! asymptotics.

use crate::error::{Error, Result};
use crate::states::{hashing_rate_isotropic, isotropic_entropy};
use std::fmt;

/// Split of C^d into orthogonal blocks of dimensions q_i with sum d.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    d: usize,
    blocks: Vec<usize>,
}

impl Partition {
    pub fn new(d: usize, blocks: Vec<usize>) -> Result<Self> {
        if blocks.is_empty() || blocks.iter().any(|&q| q < 1) {
            return Err(Error::InvalidPartition(format!("{blocks:?}")));
        }
        if blocks.iter().sum::<usize>() != d {
            return Err(Error::InvalidPartition(format!(
                "blocks {blocks:?} do not sum to {d}"
            )));
        }
        Ok(Self { d, blocks })
    }

    /// The trivial partition {d} (no projection at all).
    pub fn trivial(d: usize) -> Self {
        Self { d, blocks: vec![d] }
    }

    /// b near-equal blocks: sizes floor(d/b) and floor(d/b)+1.
    pub fn near_equal(d: usize, b: usize) -> Result<Self> {
        if b < 1 || b > d {
            return Err(Error::InvalidPartition(format!("{b} blocks of dim {d}")));
        }
        let q = d / b;
        let r = d % b;
        let mut blocks = vec![q + 1; r];
        blocks.extend(std::iter::repeat(q).take(b - r));
        Self::new(d, blocks)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|q| q.to_string()).collect();
        write!(out, "{{{}}}", parts.join("+"))
    }
}

/// One round of the recurrence map on an isotropic state.
///
/// `p_keep_paper` and `p_keep_derived` are the two candidate keep
/// probabilities (they differ by a factor d; the dense oracle referees which
/// one is physical — see `recurrence_step_dense`). All rate accounting in
/// this crate uses the derived value.
#[derive(Debug, Clone, Copy)]
pub struct RecurrenceResult {
    pub f_prime: f64,
    pub p_keep_paper: f64,
    pub p_keep_derived: f64,
}

/// Fidelity map and keep probability for one recurrence round in dimension d.
pub fn recurrence_step(d: usize, f: f64) -> Result<RecurrenceResult> {
    if d < 2 {
        return Err(Error::BadModulus(d as u64));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    let dd = d as f64;
    let num = 1.0 + f * (dd * f * (dd * dd + dd - 1.0) - 2.0);
    let den = dd.powi(3) * f * f - 2.0 * dd * f + dd * dd + dd - 1.0;
    let f_prime = (num / den).clamp(0.0, 1.0);
    let p_keep_paper = den / ((dd + 1.0) * (dd + 1.0) * dd * (dd - 1.0));
    let p_keep_derived = ((f * dd + 1.0).powi(2) * (dd - 1.0) + dd * dd * (1.0 - f).powi(2))
        / ((dd + 1.0) * (dd + 1.0) * (dd - 1.0));
    Ok(RecurrenceResult { f_prime, p_keep_paper, p_keep_derived })
}

/// Rate of k recurrence rounds (re-twirling to isotropic each round)
/// followed by hashing, in bits per initial copy.
///
/// Yield ledger: each round consumes one target per kept source and discards
/// on mismatch, so the copy count scales by p_j / 2 per round; the derived
/// keep probability is used.
pub fn recurrence_then_hash_rate(d: usize, f: f64, rounds: usize) -> Result<f64> {
    let mut f_cur = f;
    let mut survival = 1.0;
    for _ in 0..rounds {
        let step = recurrence_step(d, f_cur)?;
        survival *= step.p_keep_derived / 2.0;
        f_cur = step.f_prime;
    }
    Ok(survival * hashing_rate_isotropic(d, f_cur))
}

/// Outcome of projecting one block: kept with probability p, leaving an
/// isotropic state on C^q (x) C^q with fidelity f.
#[derive(Debug, Clone, Copy)]
pub struct BlockOutcome {
    pub q: usize,
    pub p: f64,
    pub f: f64,
}

/// Both parties project onto the same partition block and keep on equal
/// outcomes; per-block keep probability and conditional fidelity.
pub fn subspace_projection(d: usize, f: f64, partition: &Partition) -> Result<Vec<BlockOutcome>> {
    if partition.d() != d {
        return Err(Error::InvalidPartition(format!(
            "partition of {} used at d = {d}",
            partition.d()
        )));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    let dd = d as f64;
    let eps = (1.0 - f) / (dd * dd - 1.0);
    let mut out = Vec::with_capacity(partition.blocks().len());
    for &q in partition.blocks() {
        let qq = q as f64;
        let p = (qq / dd) * f + eps * (qq * qq - qq / dd);
        let fi = if p > 0.0 {
            ((f * qq / dd + eps * (1.0 - qq / dd)) / p).clamp(0.0, 1.0)
        } else {
            1.0
        };
        out.push(BlockOutcome { q, p, f: fi });
    }
    Ok(out)
}

/// Hashing rate after the subspace projection:
/// sum_i p_i max(0, log2 q_i - S(isotropic(q_i, f_i))).
pub fn subspace_rate(d: usize, f: f64, partition: &Partition) -> Result<f64> {
    let mut rate = 0.0;
    for block in subspace_projection(d, f, partition)? {
        if block.q < 2 {
            continue;
        }
        let bits = (block.q as f64).log2() - isotropic_entropy(block.q, block.f);
        rate += block.p * bits.max(0.0);
    }
    Ok(rate)
}

/// Twirl d = 2^m onto m isotropic qubit pairs and hash each on the two-qubit
/// level; per-pair fidelity f_1 = f + (1-f)(4^(m-1) - 1)/(4^m - 1).
pub fn qubit_level_rate(m: usize, f: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::Precondition("m must be >= 1".to_string()));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    let four_m = 4f64.powi(m as i32);
    let f1 = f + (1.0 - f) * (four_m / 4.0 - 1.0) / (four_m - 1.0);
    let per_pair = 1.0 - isotropic_entropy(2, f1);
    Ok(m as f64 * per_pair.max(0.0))
}

/// Large-dimension subspace bounds for d = 2^m and m equal blocks.
#[derive(Debug, Clone, Copy)]
pub struct LargeDReport {
    pub p_tilde: f64,
    pub f_tilde: f64,
    pub p_exact: f64,
    pub f_exact: f64,
    /// Exact subspace rate for the equal-block partition, divided by m.
    pub normalized_rate: f64,
}

/// Bounds p~ = (f - 4^-m)/m, f~ = fm/(fm + 1) against the exact equal-block
/// projection at d = 2^m with m blocks of dimension 2^m / m.
///
/// Restricted to m a power of two so the block dimension is integral, and to
/// m >= 1/(1-f) where the bounds are valid.
pub fn large_d_asymptotics(m: usize, f: f64) -> Result<LargeDReport> {
    if m < 1 || !m.is_power_of_two() {
        return Err(Error::Precondition(format!(
            "m = {m} must be a power of two"
        )));
    }
    if !(0.0..1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    if (m as f64) * (1.0 - f) < 1.0 {
        return Err(Error::Precondition(format!(
            "m = {m} < 1/(1 - f) at f = {f}"
        )));
    }
    let d = 1usize
        .checked_shl(m as u32)
        .ok_or_else(|| Error::Precondition(format!("2^{m} overflows")))?;
    let mm = m as f64;
    let p_tilde = (f - 4f64.powi(-(m as i32))) / mm;
    let f_tilde = f * mm / (f * mm + 1.0);
    let partition = Partition::near_equal(d, m)?;
    let blocks = subspace_projection(d, f, &partition)?;
    let first = blocks[0];
    if first.p < p_tilde || first.f < f_tilde {
        return Err(Error::VerificationFailed {
            context: format!("equal-block bounds at m = {m}, f = {f}"),
            deviation: (p_tilde - first.p).max(f_tilde - first.f),
        });
    }
    let normalized_rate = subspace_rate(d, f, &partition)? / mm;
    Ok(LargeDReport {
        p_tilde,
        f_tilde,
        p_exact: first.p,
        f_exact: first.f,
        normalized_rate,
    })
}

/// A candidate distillation strategy for isotropic inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Strategy {
    Hashing,
    RecurrenceThenHash { rounds: usize },
    Subspace { partition: Partition },
}

impl fmt::Display for Strategy {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Hashing => write!(out, "hashing"),
            Strategy::RecurrenceThenHash { rounds } => write!(out, "recurrence:{rounds}"),
            Strategy::Subspace { partition } => write!(out, "subspace:{partition}"),
        }
    }
}

/// Default recurrence depth explored by [`best_strategy_rate`].
pub const BEST_STRATEGY_MAX_ROUNDS: usize = 8;

/// Candidate partition family for a given d: near-equal splits into b blocks
/// for each b from 2 to d, capped to divisors-of-d splits above d = 64.
pub fn candidate_partitions(d: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    for b in 2..=d {
        if d > 64 && d % b != 0 {
            continue;
        }
        if let Ok(p) = Partition::near_equal(d, b) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

/// Rate of a single strategy on isotropic(d, f).
pub fn strategy_rate(d: usize, f: f64, strategy: &Strategy) -> Result<f64> {
    match strategy {
        Strategy::Hashing => Ok(hashing_rate_isotropic(d, f)),
        Strategy::RecurrenceThenHash { rounds } => recurrence_then_hash_rate(d, f, *rounds),
        Strategy::Subspace { partition } => subspace_rate(d, f, partition),
    }
}

/// Maximize the rate over plain hashing, recurrence depths up to
/// [`BEST_STRATEGY_MAX_ROUNDS`], and the candidate partition family.
pub fn best_strategy_rate(d: usize, f: f64) -> Result<(Strategy, f64)> {
    let mut candidates = vec![Strategy::Hashing];
    for k in 1..=BEST_STRATEGY_MAX_ROUNDS {
        candidates.push(Strategy::RecurrenceThenHash { rounds: k });
    }
    for partition in candidate_partitions(d) {
        candidates.push(Strategy::Subspace { partition });
    }
    let mut best = (Strategy::Hashing, hashing_rate_isotropic(d, f));
    for strategy in candidates {
        let rate = strategy_rate(d, f, &strategy)?;
        if rate > best.1 {
            best = (strategy, rate);
        }
    }
    Ok(best)
}
