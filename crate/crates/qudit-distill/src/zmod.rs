//! Exact arithmetic over vectors of residues modulo d.
//!
//! Index vectors carry their modulus and every binary operation checks for
//! modulus compatibility up front. The collision machinery counts measurement
//! vectors consistent with a zero outcome both by brute force and through a
//! gcd-based closed form; the two paths are cross-checked in the tests.

use crate::error::{Error, Result};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A fixed-length sequence of residues in {0, ..., d-1}.
///
/// Holds either the shift/phase indices of a sequence of maximally entangled
/// pairs or the multiplicity vector of a measurement plan.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexVector {
    modulus: u64,
    entries: Vec<u64>,
}

impl IndexVector {
    pub fn new(entries: Vec<u64>, modulus: u64) -> Result<Self> {
        if modulus < 2 {
            return Err(Error::BadModulus(modulus));
        }
        for &e in &entries {
            if e >= modulus {
                return Err(Error::EntryOutOfRange { entry: e, modulus });
            }
        }
        Ok(Self { modulus, entries })
    }

    pub fn zero(len: usize, modulus: u64) -> Result<Self> {
        Self::new(vec![0; len], modulus)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[u64] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&e| e == 0)
    }

    /// Pointwise addition modulo d.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (a + b) % self.modulus)
            .collect();
        Ok(Self { modulus: self.modulus, entries })
    }

    /// Pointwise difference modulo d.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(&a, &b)| (self.modulus + a - b) % self.modulus)
            .collect();
        Ok(Self { modulus: self.modulus, entries })
    }

    /// Reinterpret the entries in a larger modulus (Z_d embeds into Z_{d'}).
    pub fn embed(&self, modulus: u64) -> Result<Self> {
        if modulus < self.modulus {
            return Err(Error::BadModulus(modulus));
        }
        Ok(Self { modulus, entries: self.entries.clone() })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch { left: self.len(), right: other.len() });
        }
        if self.modulus != other.modulus {
            return Err(Error::BadModulus(other.modulus));
        }
        Ok(())
    }
}

/// Exact reduced fraction with positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    numerator: u128,
    denominator: u128,
}

impl Rational {
    pub fn new(numerator: u128, denominator: u128) -> Self {
        assert!(denominator > 0, "denominator must be positive");
        let g = gcd_u128(numerator, denominator);
        if g == 0 {
            return Self { numerator: 0, denominator: 1 };
        }
        Self { numerator: numerator / g, denominator: denominator / g }
    }

    pub fn numerator(&self) -> u128 {
        self.numerator
    }

    pub fn denominator(&self) -> u128 {
        self.denominator
    }

    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // exact cross-multiplication; reduced operands keep this in range
        (self.numerator * other.denominator).cmp(&(other.numerator * self.denominator))
    }
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Scalar product of a measurement vector with a sequence vector, mod `modulus`.
///
/// The sequence entries may live in a smaller Z_d than `modulus` (cross
/// dimension breeding uses d' > d); both vectors' entries must still be below
/// `modulus`.
pub fn dot_mod(m: &IndexVector, s: &IndexVector, modulus: u64) -> Result<u64> {
    if modulus < 2 {
        return Err(Error::BadModulus(modulus));
    }
    if m.len() != s.len() {
        return Err(Error::LengthMismatch { left: m.len(), right: s.len() });
    }
    let mut acc: u64 = 0;
    for (&a, &b) in m.entries.iter().zip(&s.entries) {
        if a >= modulus {
            return Err(Error::EntryOutOfRange { entry: a, modulus });
        }
        if b >= modulus {
            return Err(Error::EntryOutOfRange { entry: b, modulus });
        }
        acc = (acc + (a % modulus) * (b % modulus)) % modulus;
    }
    Ok(acc)
}

const BRUTE_FORCE_BOUND: u128 = 1 << 24;

/// Exact probability that a uniform random M satisfies <M, deltaS> = 0,
/// counted by full enumeration of Z_modulus^m.
pub fn collision_probability_brute(delta_s: &IndexVector, modulus: u64) -> Result<Rational> {
    if delta_s.is_zero() {
        return Err(Error::ZeroDifference);
    }
    let m = delta_s.len() as u32;
    let total = (modulus as u128).pow(m);
    if total > BRUTE_FORCE_BOUND {
        return Err(Error::EnumerationBound { count: total });
    }
    let mut hits: u128 = 0;
    let mut current = vec![0u64; delta_s.len()];
    loop {
        let mut acc = 0u64;
        for (&mi, &si) in current.iter().zip(delta_s.entries()) {
            acc = (acc + mi * si) % modulus;
        }
        if acc == 0 {
            hits += 1;
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == current.len() {
                return Ok(Rational::new(hits, total));
            }
            current[pos] += 1;
            if current[pos] < modulus {
                break;
            }
            current[pos] = 0;
            pos += 1;
        }
    }
}

/// Closed-form collision count: with g = gcd(deltaS_1, ..., deltaS_m, d),
/// the equation <M, deltaS> = 0 has g * d^(m-1) solutions in Z_d^m.
pub fn collision_probability_closed(delta_s: &IndexVector, modulus: u64) -> Result<Rational> {
    if delta_s.is_zero() {
        return Err(Error::ZeroDifference);
    }
    let g = delta_s
        .entries()
        .iter()
        .fold(modulus, |acc, &e| gcd_u64(acc, e));
    let m = delta_s.len() as u32;
    let total = (modulus as u128).pow(m);
    let count = g as u128 * (modulus as u128).pow(m - 1);
    Ok(Rational::new(count, total))
}

/// Collision probability, brute force when feasible, closed form otherwise.
pub fn collision_probability(delta_s: &IndexVector, modulus: u64) -> Result<Rational> {
    let m = delta_s.len() as u32;
    if (modulus as u128).pow(m) <= BRUTE_FORCE_BOUND {
        collision_probability_brute(delta_s, modulus)
    } else {
        collision_probability_closed(delta_s, modulus)
    }
}

/// Trial-division primality test.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut i = 3u64;
    while i * i <= n {
        if n % i == 0 {
            return false;
        }
        i += 2;
    }
    true
}

/// The crate-wide reproducible generator (ChaCha with 8 rounds).
///
/// Workers never share a generator; they derive one with [`fork_rng`].
pub type Prng = ChaCha8Rng;

/// Seed a fresh generator from a user-facing seed.
pub fn seed_rng(seed: u64) -> Prng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive an independent stream for worker `index` from the same seed.
pub fn fork_rng(seed: u64, index: u64) -> Prng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Vector with i.i.d. uniform entries in {0, ..., modulus-1}.
pub fn sample_uniform_vector(length: usize, modulus: u64, rng: &mut Prng) -> Result<IndexVector> {
    if modulus < 2 {
        return Err(Error::BadModulus(modulus));
    }
    let entries = (0..length).map(|_| rng.gen_range(0..modulus)).collect();
    IndexVector::new(entries, modulus)
}
