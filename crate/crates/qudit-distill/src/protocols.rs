//! Breeding and hashing as classical index-vector processes: outcome
//! functions, backaction updates, finite-n identification simulations and
//! asymptotic round counts.
//!
//! A sequence of n entangled pairs is the vector S = (k_1..k_n, l_1..l_n);
//! a measurement plan is the multiplicity vector M = (s_1..s_n, p_1..p_n)
//! plus, for hashing, the pre-rotation parameter g.

use crate::error::{Error, Result};
use crate::states::{entropy, BellDiagonalState};
use crate::zmod::{dot_mod, fork_rng, is_prime, sample_uniform_vector, IndexVector, Prng};
use rand::Rng;
use std::collections::HashMap;

/// Measurement plan: BCS/mBCS multiplicities plus the hashing pre-rotation.
#[derive(Debug, Clone)]
pub struct MeasurementPlan {
    pub m: IndexVector,
    pub g: u64,
    pub modulus: u64,
}

impl MeasurementPlan {
    pub fn new(m: IndexVector, g: u64, modulus: u64) -> Result<Self> {
        if g >= modulus {
            return Err(Error::EntryOutOfRange { entry: g, modulus });
        }
        Ok(Self { m, g, modulus })
    }
}

/// Protocol flavour for the identification simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolMode {
    Breeding,
    /// Breeding with predistilled targets of prime dimension d' >= d.
    BreedingCrossDim { dprime: u64 },
    Hashing,
}

/// Sample the index sequence of n copies of a Bell-diagonal state,
/// laid out as (k_1..k_n, l_1..l_n).
pub fn sample_sequence(state: &BellDiagonalState, n: usize, rng: &mut Prng) -> IndexVector {
    let d = state.dim();
    let mut shifts = Vec::with_capacity(n);
    let mut phases = Vec::with_capacity(n);
    for _ in 0..n {
        let (k, l) = sample_pair(state, rng);
        shifts.push(k as u64);
        phases.push(l as u64);
    }
    shifts.extend(phases);
    IndexVector::new(shifts, d as u64).expect("sampled entries are < d")
}

fn sample_pair(state: &BellDiagonalState, rng: &mut Prng) -> (usize, usize) {
    let d = state.dim();
    let x: f64 = rng.gen();
    let mut acc = 0.0;
    for k in 0..d {
        for l in 0..d {
            acc += state.prob(k, l);
            if x < acc {
                return (k, l);
            }
        }
    }
    (d - 1, d - 1)
}

/// Outcome of a breeding measurement: <M, S> mod plan.modulus.
///
/// In the cross-dimension variant the modulus is a prime d' >= d and the
/// sequence entries embed into Z_d'.
pub fn breeding_outcome(s: &IndexVector, plan: &MeasurementPlan) -> Result<u64> {
    if plan.modulus > s.modulus() && !is_prime(plan.modulus) {
        return Err(Error::PrimeRequired(plan.modulus));
    }
    let s = s.embed(plan.modulus)?;
    dot_mod(&plan.m, &s, plan.modulus)
}

fn split_target(s: &IndexVector) -> Result<(IndexVector, u64, u64)> {
    let len = s.len();
    if len < 2 || len % 2 != 0 {
        return Err(Error::LengthMismatch { left: len, right: len + 1 });
    }
    let n = len / 2;
    let e = s.entries();
    let mut r = Vec::with_capacity(2 * n - 2);
    r.extend_from_slice(&e[..n - 1]);
    r.extend_from_slice(&e[n..2 * n - 1]);
    let target_shift = e[n - 1];
    let target_phase = e[2 * n - 1];
    Ok((IndexVector::new(r, s.modulus())?, target_shift, target_phase))
}

/// Final shift index of the measured target in a hashing round:
/// <M, R> - sum_i M_i M_(i+n-1) l_t + k_t + g l_t (mod d), with the n-th
/// pair as target and first all BCS, then all mBCS operations.
pub fn hashing_outcome(s: &IndexVector, plan: &MeasurementPlan) -> Result<u64> {
    let d = plan.modulus;
    if d != s.modulus() {
        return Err(Error::BadModulus(plan.modulus));
    }
    let (r, target_shift, target_phase) = split_target(s)?;
    if plan.m.len() != r.len() {
        return Err(Error::LengthMismatch { left: plan.m.len(), right: r.len() });
    }
    let n1 = r.len() / 2; // number of sources
    let mut acc = dot_mod(&plan.m, &r, d)?;
    let m = plan.m.entries();
    for i in 0..n1 {
        let cross = (m[i] * m[i + n1]) % d * (target_phase % d) % d;
        acc = (acc + d - cross % d) % d;
    }
    acc = (acc + target_shift) % d;
    acc = (acc + plan.g * target_phase) % d;
    Ok(acc)
}

/// Backaction of a hashing round on the remaining sources: the target pair is
/// removed and each source a picks up shift + p_a l_t, phase - s_a l_t.
pub fn hashing_update(s: &IndexVector, plan: &MeasurementPlan) -> Result<IndexVector> {
    let d = plan.modulus;
    if d != s.modulus() {
        return Err(Error::BadModulus(plan.modulus));
    }
    let (r, _, target_phase) = split_target(s)?;
    if plan.m.len() != r.len() {
        return Err(Error::LengthMismatch { left: plan.m.len(), right: r.len() });
    }
    let n1 = r.len() / 2;
    let m = plan.m.entries();
    let e = r.entries();
    let mut out = Vec::with_capacity(2 * n1);
    for a in 0..n1 {
        out.push((e[a] + m[a + n1] * target_phase) % d);
    }
    for a in 0..n1 {
        out.push((e[n1 + a] + (d - (m[a] * target_phase) % d)) % d);
    }
    IndexVector::new(out, d)
}

/// Rounds needed asymptotically: ceil(n S(rho) / log2 modulus).
pub fn asymptotic_breeding_rounds(state: &BellDiagonalState, n: usize) -> usize {
    let s = entropy(state);
    let per_round = (state.dim() as f64).log2();
    (n as f64 * s / per_round).ceil() as usize
}

/// Isotropic distribution over the prime-power product basis: d = d'^p,
/// weight f on the all-zero index tuple and (1-f)/(d^2-1) elsewhere.
///
/// The factor structure is kept explicit so the hashing protocol can run on
/// p n pairs of prime dimension d'.
#[derive(Debug, Clone, Copy)]
pub struct FactoredIsotropic {
    pub dprime: u64,
    pub p: usize,
    pub f: f64,
}

/// Build the factored distribution, rejecting composite d'.
pub fn prime_power_distribution(dprime: u64, p: usize, f: f64) -> Result<FactoredIsotropic> {
    if !is_prime(dprime) {
        return Err(Error::PrimeRequired(dprime));
    }
    if p == 0 {
        return Err(Error::Precondition("p must be >= 1".to_string()));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    Ok(FactoredIsotropic { dprime, p, f })
}

impl FactoredIsotropic {
    pub fn total_dim(&self) -> u64 {
        self.dprime.pow(self.p as u32)
    }

    /// Full probability table over (Z_d'^2)^p, as the spectrum of the state.
    /// Identical numbers to the isotropic table in dimension d = d'^p.
    pub fn flat_table(&self) -> Result<BellDiagonalState> {
        let d = self.total_dim() as usize;
        crate::states::IsotropicState::new(d, self.f)
            .map(|s| crate::states::isotropic_to_bell_diagonal(&s))
    }

    /// Per-copy support: every 2p-tuple (k_1..k_p, l_1..l_p) over Z_d' with
    /// its probability.
    pub fn copy_support(&self) -> Result<Vec<(Vec<u64>, f64)>> {
        let d = self.dprime;
        let count = (d as u128).pow(2 * self.p as u32);
        if count > 1 << 20 {
            return Err(Error::EnumerationBound { count });
        }
        let dd = self.total_dim() as f64;
        let rest = (1.0 - self.f) / (dd * dd - 1.0);
        let mut out = Vec::with_capacity(count as usize);
        let mut tuple = vec![0u64; 2 * self.p];
        loop {
            let p = if tuple.iter().all(|&x| x == 0) { self.f } else { rest };
            out.push((tuple.clone(), p));
            let mut pos = 0;
            loop {
                if pos == tuple.len() {
                    return Ok(out);
                }
                tuple[pos] += 1;
                if tuple[pos] < d {
                    break;
                }
                tuple[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// Per-copy index model driving the identification simulation: each copy
/// contributes `pairs_per_copy` pairs of dimension `modulus`.
#[derive(Debug, Clone)]
pub struct CopyModel {
    pub modulus: u64,
    pub pairs_per_copy: usize,
    /// (k_1..k_p, l_1..l_p) tuples with nonzero probability.
    pub support: Vec<(Vec<u64>, f64)>,
}

impl CopyModel {
    pub fn from_state(state: &BellDiagonalState) -> Self {
        let support = state
            .support()
            .into_iter()
            .map(|(k, l)| (vec![k as u64, l as u64], state.prob(k, l)))
            .collect();
        Self { modulus: state.dim() as u64, pairs_per_copy: 1, support }
    }

    pub fn from_factored(f: &FactoredIsotropic) -> Result<Self> {
        Ok(Self {
            modulus: f.dprime,
            pairs_per_copy: f.p,
            support: f.copy_support()?,
        })
    }

    pub fn entropy_bits(&self) -> f64 {
        crate::states::shannon_entropy(
            &self.support.iter().map(|(_, p)| *p).collect::<Vec<_>>(),
        )
    }

    fn sample_copy(&self, rng: &mut Prng) -> &[u64] {
        let x: f64 = rng.gen();
        let mut acc = 0.0;
        for (tuple, p) in &self.support {
            acc += p;
            if x < acc {
                return tuple;
            }
        }
        &self.support.last().expect("support is nonempty").0
    }

    /// Assemble the flat sequence (k_1..k_N, l_1..l_N) from n sampled copies.
    fn sample_sequence(&self, n: usize, rng: &mut Prng) -> IndexVector {
        let np = self.pairs_per_copy;
        let mut shifts = Vec::with_capacity(n * np);
        let mut phases = Vec::with_capacity(n * np);
        for _ in 0..n {
            let tuple = self.sample_copy(rng);
            shifts.extend_from_slice(&tuple[..np]);
            phases.extend_from_slice(&tuple[np..]);
        }
        shifts.extend(phases);
        IndexVector::new(shifts, self.modulus).expect("support entries are < modulus")
    }

    fn sequence_from_copies(&self, copies: &[usize]) -> (IndexVector, f64) {
        let np = self.pairs_per_copy;
        let mut shifts = Vec::with_capacity(copies.len() * np);
        let mut phases = Vec::with_capacity(copies.len() * np);
        let mut prob = 1.0;
        for &c in copies {
            let (tuple, p) = &self.support[c];
            shifts.extend_from_slice(&tuple[..np]);
            phases.extend_from_slice(&tuple[np..]);
            prob *= p;
        }
        shifts.extend(phases);
        (
            IndexVector::new(shifts, self.modulus).expect("support entries are < modulus"),
            prob,
        )
    }
}

/// Options for [`simulate_identification`].
#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub n: usize,
    pub mode: ProtocolMode,
    pub max_rounds: usize,
    pub trials: usize,
    /// Posterior-mass success threshold (success when the true sequence
    /// carries at least 1 - delta of the surviving probability).
    pub delta: f64,
    /// Exact posterior enumeration; errors when the candidate space exceeds
    /// the 2^24 bound. When false, a sampled typical set is used.
    pub exact: bool,
    /// Cap on the sampled candidate set in Monte Carlo mode.
    pub candidate_cap: usize,
    pub seed: u64,
}

impl Default for SimulateOptions {
    fn default() -> Self {
        Self {
            n: 2,
            mode: ProtocolMode::Breeding,
            max_rounds: 16,
            trials: 100,
            delta: 1e-6,
            exact: true,
            candidate_cap: 1 << 16,
            seed: 0,
        }
    }
}

/// Cumulative success statistics after a given number of rounds.
#[derive(Debug, Clone, Copy)]
pub struct RoundStats {
    pub round: usize,
    /// Fraction of trials identified (singleton or posterior) by this round.
    pub success_prob: f64,
    /// Standard error of the success fraction.
    pub stderr: f64,
    /// Mean yield in bits per copy over all trials, counting a trial as
    /// zero-yield while unidentified.
    pub mean_yield_per_copy: f64,
}

/// Aggregate result of an identification simulation.
#[derive(Debug, Clone)]
pub struct SimulationReport {
    pub per_round: Vec<RoundStats>,
    pub trials: usize,
    /// Fraction of trials that reached singleton identification.
    pub singleton_rate: f64,
    /// Survival fraction of non-true candidates, one entry per observed
    /// round with at least one wrong candidate.
    pub shrink_fractions: Vec<f64>,
}

impl SimulationReport {
    pub fn mean_shrink_factor(&self) -> Option<(f64, f64)> {
        if self.shrink_fractions.is_empty() {
            return None;
        }
        let n = self.shrink_fractions.len() as f64;
        let mean = self.shrink_fractions.iter().sum::<f64>() / n;
        let var = self
            .shrink_fractions
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / n;
        Some((mean, (var / n).sqrt()))
    }
}

/// Run the finite-n identification experiment.
///
/// Per trial: sample a true sequence, iterate random measurement plans,
/// eliminate candidates inconsistent with the observed outcome (updating every
/// candidate with its own hypothesized target phase in hashing mode), and
/// record the round at which the survivor set pins down the truth.
pub fn simulate_identification(
    model: &CopyModel,
    opts: &SimulateOptions,
) -> Result<SimulationReport> {
    let d = model.modulus;
    match opts.mode {
        ProtocolMode::Hashing => {
            if !is_prime(d) {
                return Err(Error::PrimeRequired(d));
            }
        }
        ProtocolMode::BreedingCrossDim { dprime } => {
            if dprime < d {
                return Err(Error::Precondition(format!(
                    "d' = {dprime} must be >= d = {d}"
                )));
            }
            if !is_prime(dprime) {
                return Err(Error::PrimeRequired(dprime));
            }
        }
        ProtocolMode::Breeding => {}
    }

    let support_len = model.support.len() as u128;
    let candidate_space = support_len.pow(opts.n as u32);
    if opts.exact && candidate_space > 1 << 24 {
        return Err(Error::EnumerationBound { count: candidate_space });
    }

    let n_pairs = opts.n * model.pairs_per_copy;
    let log2_d = (d as f64).log2();
    let measurement_modulus = match opts.mode {
        ProtocolMode::BreedingCrossDim { dprime } => dprime,
        _ => d,
    };

    let mut success_round: Vec<Option<usize>> = Vec::with_capacity(opts.trials);
    let mut yields: Vec<f64> = Vec::with_capacity(opts.trials);
    let mut shrink_fractions = Vec::new();

    for trial in 0..opts.trials {
        let mut rng = fork_rng(opts.seed, trial as u64 + 1);
        let truth = model.sample_sequence(opts.n, &mut rng);

        // candidate set with weights
        let mut candidates: HashMap<IndexVector, f64> = HashMap::new();
        if opts.exact {
            let mut copies = vec![0usize; opts.n];
            loop {
                let (seq, prob) = model.sequence_from_copies(&copies);
                candidates.insert(seq, prob);
                let mut pos = 0;
                loop {
                    if pos == copies.len() {
                        break;
                    }
                    copies[pos] += 1;
                    if copies[pos] < model.support.len() {
                        break;
                    }
                    copies[pos] = 0;
                    pos += 1;
                }
                if copies.iter().all(|&c| c == 0) {
                    break;
                }
            }
        } else {
            let target = typical_set_size(model, opts.n).min(opts.candidate_cap as f64) as usize;
            let target = target.max(1);
            let mut attempts = 0usize;
            while candidates.len() < target && attempts < 64 * target {
                let seq = model.sample_sequence(opts.n, &mut rng);
                candidates.entry(seq).or_insert(1.0);
                attempts += 1;
            }
            candidates.insert(truth.clone(), 1.0);
        }

        let mut current_truth = truth.clone();
        let mut identified_at: Option<usize> = None;
        let mut remaining_pairs = n_pairs;

        for round in 0..=opts.max_rounds {
            if is_identified(&candidates, &current_truth, opts.delta) {
                identified_at = Some(round);
                break;
            }
            if round == opts.max_rounds {
                break;
            }
            match opts.mode {
                ProtocolMode::Breeding | ProtocolMode::BreedingCrossDim { .. } => {
                    let m = sample_uniform_vector(
                        current_truth.len(),
                        measurement_modulus,
                        &mut rng,
                    )?;
                    let plan = MeasurementPlan::new(m, 0, measurement_modulus)?;
                    let observed = breeding_outcome(&current_truth, &plan)?;
                    let before_wrong = candidates.len().saturating_sub(1);
                    candidates.retain(|seq, _| {
                        breeding_outcome(seq, &plan).map(|o| o == observed).unwrap_or(false)
                    });
                    debug_assert!(candidates.contains_key(&current_truth));
                    if !candidates.contains_key(&current_truth) {
                        return Err(Error::Precondition(
                            "true sequence eliminated".to_string(),
                        ));
                    }
                    if before_wrong > 0 {
                        let after_wrong = candidates.len() - 1;
                        shrink_fractions.push(after_wrong as f64 / before_wrong as f64);
                    }
                }
                ProtocolMode::Hashing => {
                    if remaining_pairs < 1 {
                        break;
                    }
                    let m = sample_uniform_vector(2 * remaining_pairs - 2, d, &mut rng)?;
                    let g = rng.gen_range(0..d);
                    let plan = MeasurementPlan::new(m, g, d)?;
                    let observed = hashing_outcome(&current_truth, &plan)?;
                    let before_wrong = candidates.len().saturating_sub(1);
                    let mut next: HashMap<IndexVector, f64> = HashMap::new();
                    for (seq, w) in candidates.drain() {
                        if hashing_outcome(&seq, &plan)? != observed {
                            continue;
                        }
                        // each candidate evolves with its own hypothesized
                        // target phase (self-consistent histories)
                        let updated = hashing_update(&seq, &plan)?;
                        *next.entry(updated).or_insert(0.0) += w;
                    }
                    current_truth = hashing_update(&current_truth, &plan)?;
                    candidates = next;
                    if !candidates.contains_key(&current_truth) {
                        return Err(Error::Precondition(
                            "true sequence eliminated".to_string(),
                        ));
                    }
                    remaining_pairs -= 1;
                    if before_wrong > 0 {
                        let after_wrong = candidates.len() - 1;
                        shrink_fractions.push(after_wrong as f64 / before_wrong as f64);
                    }
                    if remaining_pairs == 0 {
                        if is_identified(&candidates, &current_truth, opts.delta) {
                            identified_at = Some(round + 1);
                        }
                        break;
                    }
                }
            }
        }

        success_round.push(identified_at);
        yields.push(match identified_at {
            Some(r) => yield_bits(opts.mode, n_pairs, r, d, measurement_modulus) / opts.n as f64,
            None => 0.0,
        });
    }

    let trials = opts.trials as f64;
    let mut per_round = Vec::with_capacity(opts.max_rounds + 1);
    for round in 0..=opts.max_rounds {
        let mut successes = 0usize;
        let mut yield_sum = 0.0;
        for (sr, y) in success_round.iter().zip(&yields) {
            if let Some(r) = sr {
                if *r <= round {
                    successes += 1;
                    yield_sum += y;
                }
            }
        }
        let p = successes as f64 / trials;
        per_round.push(RoundStats {
            round,
            success_prob: p,
            stderr: (p * (1.0 - p) / trials).sqrt(),
            mean_yield_per_copy: yield_sum / trials,
        });
    }
    let singleton_rate =
        success_round.iter().filter(|s| s.is_some()).count() as f64 / trials;
    let _ = log2_d;

    Ok(SimulationReport { per_round, trials: opts.trials, singleton_rate, shrink_fractions })
}

fn typical_set_size(model: &CopyModel, n: usize) -> f64 {
    2f64.powf((n as f64 * model.entropy_bits()).ceil())
}

fn is_identified(candidates: &HashMap<IndexVector, f64>, truth: &IndexVector, delta: f64) -> bool {
    if candidates.len() == 1 {
        return candidates.contains_key(truth);
    }
    let total: f64 = candidates.values().sum();
    let w = candidates.get(truth).copied().unwrap_or(0.0);
    total > 0.0 && w / total >= 1.0 - delta
}

fn yield_bits(
    mode: ProtocolMode,
    n_pairs: usize,
    rounds: usize,
    d: u64,
    measurement_modulus: u64,
) -> f64 {
    let log2_d = (d as f64).log2();
    match mode {
        ProtocolMode::Breeding | ProtocolMode::BreedingCrossDim { .. } => {
            let cost = rounds as f64 * (measurement_modulus as f64).log2();
            (n_pairs as f64 * log2_d - cost).max(0.0)
        }
        ProtocolMode::Hashing => (n_pairs.saturating_sub(rounds)) as f64 * log2_d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{isotropic_to_bell_diagonal, IsotropicState};
    use crate::zmod::seed_rng;
    use approx::assert_abs_diff_eq;

    fn iv(entries: &[u64], d: u64) -> IndexVector {
        IndexVector::new(entries.to_vec(), d).unwrap()
    }

    #[test]
    fn sample_sequence_pure_state_is_zero() {
        let state = BellDiagonalState::pure(3, 0, 0).unwrap();
        let mut rng = seed_rng(0);
        let s = sample_sequence(&state, 5, &mut rng);
        assert!(s.is_zero());
        assert_eq!(s.len(), 10);
    }

    #[test]
    fn sample_sequence_matches_distribution() {
        let state = isotropic_to_bell_diagonal(&IsotropicState::new(2, 0.7).unwrap());
        let mut rng = seed_rng(1);
        let trials = 25_000usize;
        let mut count00 = 0usize;
        for _ in 0..trials {
            let s = sample_sequence(&state, 2, &mut rng);
            for a in 0..2 {
                if s.entries()[a] == 0 && s.entries()[2 + a] == 0 {
                    count00 += 1;
                }
            }
        }
        let n = (2 * trials) as f64;
        let sigma = (n * 0.7 * 0.3).sqrt();
        assert!((count00 as f64 - 0.7 * n).abs() < 3.0 * sigma);

        // determinism
        let mut a = seed_rng(9);
        let mut b = seed_rng(9);
        assert_eq!(sample_sequence(&state, 8, &mut a), sample_sequence(&state, 8, &mut b));
    }

    #[test]
    fn breeding_outcome_examples() {
        // single BCS on copy a reads k_a
        let s = iv(&[2, 1, 0, 1, 2, 0], 3);
        let m = iv(&[0, 1, 0, 0, 0, 0], 3);
        let plan = MeasurementPlan::new(m, 0, 3).unwrap();
        assert_eq!(breeding_outcome(&s, &plan).unwrap(), 1);

        let s = iv(&[1, 2, 0, 2, 1, 1], 3);
        let m = iv(&[1, 0, 2, 0, 1, 1], 3);
        let plan = MeasurementPlan::new(m, 0, 3).unwrap();
        assert_eq!(breeding_outcome(&s, &plan).unwrap(), 0);
    }

    #[test]
    fn breeding_crossdim_outcome() {
        let s = iv(&[1, 1, 1, 1], 2);
        let m = iv(&[2, 1, 0, 2], 3);
        let plan = MeasurementPlan::new(m, 0, 3).unwrap();
        assert_eq!(breeding_outcome(&s, &plan).unwrap(), 2);
        // composite d' rejected
        let m4 = iv(&[2, 1, 0, 2], 4);
        let plan = MeasurementPlan::new(m4, 0, 4).unwrap();
        assert!(breeding_outcome(&s, &plan).is_err());
    }

    #[test]
    fn hashing_outcome_examples() {
        // n=1: no sources, outcome = k_t + g l_t
        let s = iv(&[2, 1], 3);
        let plan =
            MeasurementPlan::new(IndexVector::new(vec![], 3).unwrap(), 2, 3).unwrap();
        assert_eq!(hashing_outcome(&s, &plan).unwrap(), 1);

        // d=2, n=2 worked example
        let s = iv(&[1, 0, 1, 1], 2);
        let plan = MeasurementPlan::new(iv(&[1, 1], 2), 1, 2).unwrap();
        assert_eq!(hashing_outcome(&s, &plan).unwrap(), 0);

        // g=0 and target (0,0) reduces to <M, R>
        let s = iv(&[1, 0, 1, 0], 2);
        let plan = MeasurementPlan::new(iv(&[1, 1], 2), 0, 2).unwrap();
        let (r, _, _) = split_target(&s).unwrap();
        assert_eq!(
            hashing_outcome(&s, &plan).unwrap(),
            dot_mod(&plan.m, &r, 2).unwrap()
        );
    }

    #[test]
    fn hashing_update_examples() {
        // zero target phase: sources unchanged
        let s = iv(&[1, 2, 2, 0], 3);
        let plan = MeasurementPlan::new(iv(&[2, 1], 3), 1, 3).unwrap();
        let updated = hashing_update(&s, &plan).unwrap();
        assert_eq!(updated, iv(&[1, 2], 3));

        // d=2 worked example: source (1,1) -> (0,0)
        let s = iv(&[1, 0, 1, 1], 2);
        let plan = MeasurementPlan::new(iv(&[1, 1], 2), 1, 2).unwrap();
        assert_eq!(hashing_update(&s, &plan).unwrap(), iv(&[0, 0], 2));
    }

    #[test]
    fn hashing_matches_dense_oracle_d2() {
        // all sequences x all plans x all g at d=2, n=2
        for code in 0..16u64 {
            let s = iv(
                &[code & 1, (code >> 1) & 1, (code >> 2) & 1, (code >> 3) & 1],
                2,
            );
            for sm in 0..2u64 {
                for pm in 0..2u64 {
                    for g in 0..2u64 {
                        let plan = MeasurementPlan::new(iv(&[sm, pm], 2), g, 2).unwrap();
                        let outcome = hashing_outcome(&s, &plan).unwrap();
                        let updated = hashing_update(&s, &plan).unwrap();
                        let e = s.entries();
                        let dense = crate::oracle::hashing_step_dense(
                            2,
                            (e[0] as usize, e[2] as usize),
                            (e[1] as usize, e[3] as usize),
                            sm as usize,
                            pm as usize,
                            g as usize,
                        )
                        .unwrap();
                        assert_eq!(dense.outcome as u64, outcome, "S={e:?} M=({sm},{pm}) g={g}");
                        assert_eq!(
                            (dense.new_source.0 as u64, dense.new_source.1 as u64),
                            (updated.entries()[0], updated.entries()[1]),
                            "S={e:?} M=({sm},{pm}) g={g}"
                        );
                        assert_eq!(dense.target_phase as u64, e[3]);
                    }
                }
            }
        }
    }

    #[test]
    fn hashing_matches_dense_oracle_d3_sampled() {
        let mut rng = seed_rng(4);
        for _ in 0..40 {
            let e: Vec<u64> = (0..4).map(|_| rng.gen_range(0..3u64)).collect();
            let s = iv(&e, 3);
            let sm = rng.gen_range(0..3u64);
            let pm = rng.gen_range(0..3u64);
            let g = rng.gen_range(0..3u64);
            let plan = MeasurementPlan::new(iv(&[sm, pm], 3), g, 3).unwrap();
            let outcome = hashing_outcome(&s, &plan).unwrap();
            let updated = hashing_update(&s, &plan).unwrap();
            let dense = crate::oracle::hashing_step_dense(
                3,
                (e[0] as usize, e[2] as usize),
                (e[1] as usize, e[3] as usize),
                sm as usize,
                pm as usize,
                g as usize,
            )
            .unwrap();
            assert_eq!(dense.outcome as u64, outcome, "S={e:?} M=({sm},{pm}) g={g}");
            assert_eq!(
                (dense.new_source.0 as u64, dense.new_source.1 as u64),
                (updated.entries()[0], updated.entries()[1])
            );
        }
    }

    #[test]
    fn hashing_pairwise_survival_bounded() {
        // three-case analysis: for every S != S', the fraction of (M, g)
        // giving equal outcomes is at most 1/d (exhaustive at d=2,3; n=2)
        for d in [2u64, 3] {
            let seqs: Vec<Vec<u64>> = (0..d.pow(4))
                .map(|c| (0..4).map(|i| (c / d.pow(i)) % d).collect())
                .collect();
            for a in &seqs {
                for b in &seqs {
                    if a == b {
                        continue;
                    }
                    let sa = iv(a, d);
                    let sb = iv(b, d);
                    let mut collisions = 0u64;
                    let mut total = 0u64;
                    for sm in 0..d {
                        for pm in 0..d {
                            for g in 0..d {
                                let plan =
                                    MeasurementPlan::new(iv(&[sm, pm], d), g, d).unwrap();
                                if hashing_outcome(&sa, &plan).unwrap()
                                    == hashing_outcome(&sb, &plan).unwrap()
                                {
                                    collisions += 1;
                                }
                                total += 1;
                            }
                        }
                    }
                    assert!(
                        collisions * d <= total,
                        "d={d} S={a:?} S'={b:?}: {collisions}/{total}"
                    );
                }
            }
        }
    }

    #[test]
    fn asymptotic_rounds_examples() {
        let pure = BellDiagonalState::pure(5, 1, 1).unwrap();
        assert_eq!(asymptotic_breeding_rounds(&pure, 100), 0);

        let mixed = BellDiagonalState::maximally_mixed(3).unwrap();
        assert_eq!(asymptotic_breeding_rounds(&mixed, 7), 14);

        let iso = isotropic_to_bell_diagonal(&IsotropicState::new(2, 0.9).unwrap());
        assert_eq!(asymptotic_breeding_rounds(&iso, 100), 63);
    }

    #[test]
    fn prime_power_examples() {
        assert!(prime_power_distribution(4, 2, 0.5).is_err());
        let f = prime_power_distribution(2, 2, 0.5).unwrap();
        assert_eq!(f.total_dim(), 4);
        let table = f.flat_table().unwrap();
        let iso = isotropic_to_bell_diagonal(&IsotropicState::new(4, 0.5).unwrap());
        assert_abs_diff_eq!(entropy(&table), entropy(&iso), epsilon = 1e-12);

        let point = prime_power_distribution(3, 1, 1.0).unwrap();
        let support = point.copy_support().unwrap();
        let total: f64 = support.iter().map(|(_, p)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        assert_eq!(support.iter().filter(|(_, p)| *p > 0.0).count(), 1);
    }

    #[test]
    fn simulate_pure_state_succeeds_immediately() {
        let state = BellDiagonalState::pure(2, 1, 0).unwrap();
        let model = CopyModel::from_state(&state);
        let opts = SimulateOptions {
            n: 3,
            trials: 20,
            max_rounds: 4,
            seed: 5,
            ..Default::default()
        };
        let report = simulate_identification(&model, &opts).unwrap();
        assert_eq!(report.per_round[0].success_prob, 1.0);
        assert_abs_diff_eq!(report.per_round[0].mean_yield_per_copy, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn simulate_breeding_small_support() {
        // support {(0,0), (1,0)} per pair: 1 bit of entropy per copy
        let state = BellDiagonalState::new(2, vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        let model = CopyModel::from_state(&state);
        let opts = SimulateOptions {
            n: 2,
            trials: 400,
            max_rounds: 10,
            seed: 12,
            ..Default::default()
        };
        let report = simulate_identification(&model, &opts).unwrap();
        // success probability after r rounds obeys 1 - 2^(nS - r), up to
        // binomial sampling noise
        let trials = report.trials as f64;
        for stats in &report.per_round {
            let bound = 1.0 - 2f64.powf(2.0 - stats.round as f64);
            let slack = 3.0 * (bound.clamp(0.0, 1.0) * (1.0 - bound).abs() / trials).sqrt();
            assert!(
                stats.success_prob >= bound - slack - 1e-12,
                "round {}: {} < {bound} - {slack}",
                stats.round,
                stats.success_prob
            );
        }
        assert!(report.per_round.last().unwrap().success_prob > 0.99);
    }

    #[test]
    fn simulate_hashing_runs_and_identifies() {
        let state = BellDiagonalState::new(2, vec![0.5, 0.0, 0.5, 0.0]).unwrap();
        let model = CopyModel::from_state(&state);
        let opts = SimulateOptions {
            n: 4,
            mode: ProtocolMode::Hashing,
            trials: 200,
            max_rounds: 4,
            seed: 3,
            ..Default::default()
        };
        let report = simulate_identification(&model, &opts).unwrap();
        let last = report.per_round.last().unwrap();
        assert!(last.success_prob > 0.5, "success = {}", last.success_prob);
    }

    #[test]
    fn simulate_hashing_rejects_composite_d() {
        let state = BellDiagonalState::maximally_mixed(4).unwrap();
        let model = CopyModel::from_state(&state);
        let opts = SimulateOptions { mode: ProtocolMode::Hashing, ..Default::default() };
        assert!(matches!(
            simulate_identification(&model, &opts),
            Err(Error::PrimeRequired(4))
        ));
    }

    #[test]
    fn simulate_exact_mode_bound() {
        let state = BellDiagonalState::maximally_mixed(5).unwrap();
        let model = CopyModel::from_state(&state);
        let opts = SimulateOptions { n: 8, trials: 1, ..Default::default() };
        assert!(matches!(
            simulate_identification(&model, &opts),
            Err(Error::EnumerationBound { .. })
        ));
    }

    #[test]
    fn simulate_monte_carlo_mode() {
        let state = isotropic_to_bell_diagonal(&IsotropicState::new(2, 0.95).unwrap());
        let model = CopyModel::from_state(&state);
        let opts = SimulateOptions {
            n: 10,
            mode: ProtocolMode::Hashing,
            exact: false,
            trials: 50,
            max_rounds: 10,
            candidate_cap: 4096,
            seed: 21,
            ..Default::default()
        };
        let report = simulate_identification(&model, &opts).unwrap();
        // success probability is monotone in rounds by construction;
        // late rounds should dominate early ones
        let first = report.per_round.first().unwrap().success_prob;
        let last = report.per_round.last().unwrap().success_prob;
        assert!(last >= first);
        assert!(last > 0.3, "late success = {last}");
    }

    #[test]
    fn breeding_shrink_factor_near_one_over_d() {
        let state = BellDiagonalState::maximally_mixed(3).unwrap();
        let model = CopyModel::from_state(&state);
        let opts = SimulateOptions {
            n: 2,
            trials: 300,
            max_rounds: 12,
            seed: 8,
            ..Default::default()
        };
        let report = simulate_identification(&model, &opts).unwrap();
        let (mean, se) = report.mean_shrink_factor().unwrap();
        assert!(
            (mean - 1.0 / 3.0).abs() < 3.0 * se + 0.02,
            "mean shrink {mean}, se {se}"
        );
    }
}
