//! Minimal dense state-vector machinery for the verification oracle.
//!
//! States live on a list of sites with individual dimensions (cross-dimension
//! operations mix d and d' sites). All gates the oracle needs are either
//! one-site unitaries or basis permutations, which keeps the application code
//! short.

use ndarray::Array2;
use num_complex::Complex64;

pub type C64 = Complex64;

/// Hard cap on the total Hilbert dimension the oracle will touch.
pub const ORACLE_DIM_CAP: usize = 4096;

/// Dense state vector over a product of finite-dimensional sites,
/// row-major in the site order.
#[derive(Debug, Clone)]
pub struct SiteState {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl SiteState {
    pub fn zero(dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Self { dims, amps: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn total_dim(&self) -> usize {
        self.amps.len()
    }

    pub fn encode(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        let mut flat = 0;
        for (i, &d) in idx.iter().zip(&self.dims) {
            debug_assert!(*i < d);
            flat = flat * d + i;
        }
        flat
    }

    pub fn decode(&self, mut flat: usize, out: &mut [usize]) {
        for pos in (0..self.dims.len()).rev() {
            out[pos] = flat % self.dims[pos];
            flat /= self.dims[pos];
        }
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        debug_assert_eq!(self.dims, other.dims);
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Overlap magnitude |<self|other>|; phase-insensitive comparison.
    pub fn overlap_abs(&self, other: &Self) -> f64 {
        self.inner(other).norm()
    }

    /// Tensor product self (x) other, sites of `other` appended.
    pub fn kron(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self { dims, amps }
    }

    /// Apply a one-site unitary at `site`.
    pub fn apply_one_site(&mut self, site: usize, op: &Array2<C64>) {
        let ds = self.dims[site];
        assert_eq!(op.nrows(), ds);
        assert_eq!(op.ncols(), ds);
        let stride: usize = self.dims[site + 1..].iter().product();
        let block = stride * ds;
        let mut scratch = vec![C64::new(0.0, 0.0); ds];
        for base in (0..self.amps.len()).step_by(block) {
            for offset in 0..stride {
                for v in 0..ds {
                    scratch[v] = self.amps[base + v * stride + offset];
                }
                for v in 0..ds {
                    let mut acc = C64::new(0.0, 0.0);
                    for w in 0..ds {
                        acc += op[(v, w)] * scratch[w];
                    }
                    self.amps[base + v * stride + offset] = acc;
                }
            }
        }
    }

    /// Apply a permutation of the computational basis, given as a map on
    /// multi-indices (in place of the full unitary matrix).
    pub fn apply_basis_map<F>(&mut self, f: F)
    where
        F: Fn(&mut [usize]),
    {
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        let mut idx = vec![0usize; self.dims.len()];
        for flat in 0..self.amps.len() {
            self.decode(flat, &mut idx);
            f(&mut idx);
            out[self.encode(&idx)] = self.amps[flat];
        }
        self.amps = out;
    }

    /// Controlled shift: target <- target + control (mod target dim).
    pub fn apply_controlled_shift(&mut self, control: usize, target: usize) {
        let dt = self.dims[target];
        self.apply_basis_map(|idx| {
            idx[target] = (idx[target] + idx[control]) % dt;
        });
    }
}

/// d x d identity.
pub fn identity(d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |(i, j)| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Elementwise complex conjugate.
pub fn conjugate(m: &Array2<C64>) -> Array2<C64> {
    m.mapv(|c| c.conj())
}

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    let mut out = m.t().to_owned();
    out.mapv_inplace(|c| c.conj());
    out
}

/// Largest |entry| of a - b.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
