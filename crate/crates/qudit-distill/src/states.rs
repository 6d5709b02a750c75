//! Probability-level state representations and entropy/rate functionals.
//!
//! Everything here works on the spectrum of a Bell-diagonal state; no dense
//! matrices are involved. Entropies are in bits throughout.

use crate::error::{Error, Result};

/// Shannon entropy in bits of a probability vector, with 0 log 0 := 0.
pub fn shannon_entropy(probs: &[f64]) -> f64 {
    probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

/// Binary-style entropy of a two-outcome split (f, 1-f).
pub fn entropy_two(f: f64) -> f64 {
    shannon_entropy(&[f, 1.0 - f])
}

/// A state diagonal in the maximally entangled basis, held as the
/// probability table lambda[k][l] (row = shift index, column = phase index).
#[derive(Debug, Clone)]
pub struct BellDiagonalState {
    d: usize,
    lambda: Vec<f64>, // row-major d x d
}

impl BellDiagonalState {
    /// Build from a row-major d*d probability table.
    ///
    /// Renormalizes when the sum deviates from 1 by at most 1e-9 and rejects
    /// larger deviations or negative entries.
    pub fn new(d: usize, lambda: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::BadModulus(d as u64));
        }
        if lambda.len() != d * d {
            return Err(Error::LengthMismatch { left: lambda.len(), right: d * d });
        }
        for &p in &lambda {
            if p < 0.0 {
                return Err(Error::NegativeProbability(p));
            }
        }
        let sum: f64 = lambda.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { sum });
        }
        let lambda = lambda.into_iter().map(|p| p / sum).collect();
        Ok(Self { d, lambda })
    }

    pub fn pure(d: usize, k: usize, l: usize) -> Result<Self> {
        if k >= d || l >= d {
            return Err(Error::IndexOutOfRange { d, k, l });
        }
        let mut lambda = vec![0.0; d * d];
        lambda[k * d + l] = 1.0;
        Self::new(d, lambda)
    }

    pub fn maximally_mixed(d: usize) -> Result<Self> {
        Self::new(d, vec![1.0 / (d * d) as f64; d * d])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn prob(&self, k: usize, l: usize) -> f64 {
        self.lambda[k * self.d + l]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.lambda
    }

    /// Index pairs (k, l) carrying nonzero probability.
    pub fn support(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.d {
            for l in 0..self.d {
                if self.prob(k, l) > 0.0 {
                    out.push((k, l));
                }
            }
        }
        out
    }
}

/// Depolarized maximally entangled state, fixed by its fidelity f.
#[derive(Debug, Clone, Copy)]
pub struct IsotropicState {
    pub d: usize,
    pub f: f64,
}

impl IsotropicState {
    pub fn new(d: usize, f: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidFidelity(f));
        }
        if d < 2 {
            return Err(Error::BadModulus(d as u64));
        }
        Ok(Self { d, f })
    }
}

/// Spectrum of a rank <= d state diagonal on the phase-index row k = 0.
#[derive(Debug, Clone)]
pub struct LowRankSpectrum {
    pub d: usize,
    pub mu: Vec<f64>,
}

impl LowRankSpectrum {
    pub fn new(d: usize, mu: Vec<f64>) -> Result<Self> {
        if mu.len() != d {
            return Err(Error::LengthMismatch { left: mu.len(), right: d });
        }
        for &p in &mu {
            if p < 0.0 {
                return Err(Error::NegativeProbability(p));
            }
        }
        let sum: f64 = mu.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { sum });
        }
        let mu = mu.into_iter().map(|p| p / sum).collect();
        Ok(Self { d, mu })
    }
}

/// Named per-copy rates in bits, with normalized variants (divided by log2 d).
#[derive(Debug, Clone, Default)]
pub struct RateReport {
    pub entries: Vec<(String, f64)>,
    pub log2_d: f64,
}

impl RateReport {
    pub fn new(d: usize) -> Self {
        Self { entries: Vec::new(), log2_d: (d as f64).log2() }
    }

    pub fn push(&mut self, name: &str, rate_bits: f64) {
        self.entries.push((name.to_string(), rate_bits));
    }

    pub fn normalized(&self, name: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, r)| r / self.log2_d)
    }
}

/// Von Neumann entropy of a Bell-diagonal state (= Shannon entropy of the
/// spectrum), in bits.
pub fn entropy(state: &BellDiagonalState) -> f64 {
    shannon_entropy(&state.lambda)
}

/// Expand an isotropic state into its full probability table:
/// lambda_00 = f, lambda_ij = (1-f)/(d^2-1) elsewhere.
pub fn isotropic_to_bell_diagonal(s: &IsotropicState) -> BellDiagonalState {
    let d = s.d;
    let rest = (1.0 - s.f) / ((d * d - 1) as f64);
    let mut lambda = vec![rest; d * d];
    lambda[0] = s.f;
    BellDiagonalState::new(d, lambda).expect("isotropic table is normalized by construction")
}

/// Entropy of an isotropic state without materializing the d^2 table.
pub fn isotropic_entropy(d: usize, f: f64) -> f64 {
    let rest = (d * d - 1) as f64;
    let mut h = 0.0;
    if f > 0.0 {
        h -= f * f.log2();
    }
    if f < 1.0 {
        let p = (1.0 - f) / rest;
        h -= (1.0 - f) * p.log2();
    }
    h
}

/// Breeding/hashing rate log2 d - S(rho), clamped at zero.
pub fn hashing_rate(state: &BellDiagonalState) -> f64 {
    ((state.d as f64).log2() - entropy(state)).max(0.0)
}

/// Same rate straight from the isotropic parameters.
pub fn hashing_rate_isotropic(d: usize, f: f64) -> f64 {
    ((d as f64).log2() - isotropic_entropy(d, f)).max(0.0)
}

/// Relative entropy of entanglement of an isotropic state:
/// log2 d - (1-f) log2(d-1) - S(f, 1-f) for f > 1/d, zero otherwise.
pub fn er_isotropic(d: usize, f: f64) -> f64 {
    let dd = d as f64;
    if f <= 1.0 / dd {
        return 0.0;
    }
    let mut e = dd.log2();
    if f < 1.0 {
        e -= (1.0 - f) * (dd - 1.0).log2();
        e -= entropy_two(f);
    }
    e
}

/// E_R / log2 d, which tends to f for large d.
pub fn er_normalized_limit(d: usize, f: f64) -> f64 {
    er_isotropic(d, f) / (d as f64).log2()
}

/// Bell-diagonal table of a low-rank state: row k = 0 carries mu, the rest
/// is zero.
pub fn low_rank_state(mu: &LowRankSpectrum) -> BellDiagonalState {
    let d = mu.d;
    let mut lambda = vec![0.0; d * d];
    lambda[..d].copy_from_slice(&mu.mu);
    BellDiagonalState::new(d, lambda).expect("spectrum is normalized by construction")
}

/// E_R upper bound log2 d - S(mu) for the low-rank family; coincides with the
/// hashing rate, which is therefore optimal there.
pub fn er_bound_low_rank(mu: &LowRankSpectrum) -> f64 {
    (mu.d as f64).log2() - shannon_entropy(&mu.mu)
}
