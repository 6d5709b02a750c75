//! Dense-matrix ground truth for every symbolic index-transformation rule.
//!
//! The oracle exists for correctness, not scale: total Hilbert dimensions are
//! capped at [`tensor::ORACLE_DIM_CAP`], and state-vector comparisons are made
//! at projector level (up to a global phase) with an absolute tolerance of
//! 1e-10.

pub mod tensor;

use crate::error::{Error, Result};
use crate::states::BellDiagonalState;
use ndarray::Array2;
use tensor::{conjugate, dagger, max_abs_diff, SiteState, C64, ORACLE_DIM_CAP};

pub const TOL: f64 = 1e-10;

fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

fn eta(d: usize) -> C64 {
    phase(2.0 * std::f64::consts::PI / d as f64)
}

fn check_index(d: usize, k: usize, l: usize) -> Result<()> {
    if k >= d || l >= d {
        return Err(Error::IndexOutOfRange { d, k, l });
    }
    Ok(())
}

fn check_cap(dim: usize) -> Result<()> {
    if dim > ORACLE_DIM_CAP {
        return Err(Error::OracleCap { dim, cap: ORACLE_DIM_CAP });
    }
    Ok(())
}

/// The Weyl unitary U_kl = sum_r eta^(r l) |k+r><r|.
pub fn weyl_unitary(d: usize, k: usize, l: usize) -> Result<Array2<C64>> {
    check_index(d, k, l)?;
    let e = eta(d);
    let mut u = Array2::from_elem((d, d), C64::new(0.0, 0.0));
    for r in 0..d {
        u[((k + r) % d, r)] = e.powu((r * l) as u32);
    }
    Ok(u)
}

/// Discrete Fourier matrix V = d^(-1/2) sum eta^(kl) |k><l|.
pub fn dft_matrix(d: usize) -> Array2<C64> {
    let e = eta(d);
    let norm = 1.0 / (d as f64).sqrt();
    Array2::from_shape_fn((d, d), |(k, l)| e.powu((k * l) as u32) * norm)
}

/// Diagonal rotation with u(g)[k] a square root of eta^(k^2 g).
///
/// For odd d the half-angle exponent is taken modulo d via the inverse of 2,
/// which keeps the phase well defined on residues.
pub fn u_gate(d: usize, g: usize) -> Array2<C64> {
    let gp = if d % 2 == 0 { g } else { g * (d + 1) };
    let mut u = Array2::from_elem((d, d), C64::new(0.0, 0.0));
    for k in 0..d {
        let theta = std::f64::consts::PI * ((k * k * gp) % (2 * d)) as f64 / d as f64;
        u[(k, k)] = phase(theta);
    }
    u
}

/// v(g) = V^dagger u(g) V.
pub fn v_gate(d: usize, g: usize) -> Array2<C64> {
    let v = dft_matrix(d);
    dagger(&v).dot(&u_gate(d, g)).dot(&v)
}

/// The maximally entangled state Psi_kl = (1 (x) U_kl)|Omega> on two sites.
pub fn max_entangled(d: usize, k: usize, l: usize) -> Result<SiteState> {
    check_index(d, k, l)?;
    check_cap(d * d)?;
    let e = eta(d);
    let norm = 1.0 / (d as f64).sqrt();
    let mut s = SiteState::zero(vec![d, d]);
    for a in 0..d {
        let idx = s.encode(&[a, (k + a) % d]);
        s.amps_mut()[idx] = e.powu((a * l) as u32) * norm;
    }
    Ok(s)
}

/// Psi_ij (x) Psi_kl on sites (A_s, B_s, A_t, B_t); target may have a
/// different local dimension.
fn pair_product(d: usize, ij: (usize, usize), dt: usize, kl: (usize, usize)) -> Result<SiteState> {
    check_cap(d * d * dt * dt)?;
    let source = max_entangled(d, ij.0, ij.1)?;
    let target = max_entangled(dt, kl.0, kl.1)?;
    Ok(source.kron(&target))
}

fn assert_matches(out: &SiteState, predicted: &SiteState, context: &str) -> Result<()> {
    let deviation = 1.0 - out.overlap_abs(predicted);
    if deviation.abs() > TOL {
        return Err(Error::VerificationFailed { context: context.to_string(), deviation });
    }
    Ok(())
}

/// Per-dimension basis report: largest deviations from orthonormality and
/// from the Weyl composition rule.
#[derive(Debug, Clone, Copy)]
pub struct BasisReport {
    pub d: usize,
    pub max_orthonormality_deviation: f64,
    pub max_weyl_deviation: f64,
}

/// Check tr(U_ij^dag U_kl) = d delta_ik delta_jl and
/// U_ij U_kl = eta^(jk) U_(i+k, j+l) for all index pairs.
pub fn check_basis(d: usize) -> Result<BasisReport> {
    check_cap(d * d)?;
    let e = eta(d);
    let units: Vec<Vec<Array2<C64>>> = (0..d)
        .map(|i| (0..d).map(|j| weyl_unitary(d, i, j).unwrap()).collect())
        .collect();
    let mut max_ortho: f64 = 0.0;
    let mut max_weyl: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let tr: C64 = dagger(&units[i][j]).dot(&units[k][l]).diag().sum();
                    let expected = if i == k && j == l {
                        C64::new(d as f64, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    };
                    let dev = (tr - expected).norm();
                    if dev > max_ortho {
                        max_ortho = dev;
                    }
                    if dev > TOL * d as f64 {
                        return Err(Error::VerificationFailed {
                            context: format!("orthonormality at ({i},{j}),({k},{l})"),
                            deviation: dev,
                        });
                    }

                    let product = units[i][j].dot(&units[k][l]);
                    let expected = units[(i + k) % d][(j + l) % d].mapv(|c| c * e.powu((j * k) as u32));
                    let dev = max_abs_diff(&product, &expected);
                    if dev > max_weyl {
                        max_weyl = dev;
                    }
                    if dev > TOL {
                        return Err(Error::VerificationFailed {
                            context: format!("Weyl relation at ({i},{j}),({k},{l})"),
                            deviation: dev,
                        });
                    }
                }
            }
        }
    }
    Ok(BasisReport { d, max_orthonormality_deviation: max_ortho, max_weyl_deviation: max_weyl })
}

fn apply_bcs(state: &mut SiteState) {
    // Alice: sites 0 -> 2, Bob: sites 1 -> 3
    state.apply_controlled_shift(0, 2);
    state.apply_controlled_shift(1, 3);
}

fn apply_mbcs(state: &mut SiteState, d: usize) {
    let v = dft_matrix(d);
    let vc = conjugate(&v);
    state.apply_one_site(0, &v);
    state.apply_one_site(1, &vc);
    apply_bcs(state);
    state.apply_one_site(0, &dagger(&v));
    state.apply_one_site(1, &dagger(&vc));
}

/// Dense check of the bilateral controlled shift:
/// Psi_ij (x) Psi_kl -> Psi_(i, j-l) (x) Psi_(k+i, l).
pub fn verify_bcs(
    d: usize,
    source: (usize, usize),
    target: (usize, usize),
) -> Result<((usize, usize), (usize, usize))> {
    let (i, j) = source;
    let (k, l) = target;
    check_index(d, i, j)?;
    check_index(d, k, l)?;
    let mut state = pair_product(d, source, d, target)?;
    apply_bcs(&mut state);
    let new_source = (i, (d + j - l) % d);
    let new_target = ((k + i) % d, l);
    let predicted = pair_product(d, new_source, d, new_target)?;
    assert_matches(&state, &predicted, &format!("BCS d={d} {source:?},{target:?}"))?;
    Ok((new_source, new_target))
}

/// Dense check of the modified bilateral controlled shift:
/// P_ij (x) P_kl -> P_(i+l, j) (x) P_(k+j, l).
pub fn verify_mbcs(
    d: usize,
    source: (usize, usize),
    target: (usize, usize),
) -> Result<((usize, usize), (usize, usize))> {
    let (i, j) = source;
    let (k, l) = target;
    check_index(d, i, j)?;
    check_index(d, k, l)?;
    let mut state = pair_product(d, source, d, target)?;
    apply_mbcs(&mut state, d);
    let new_source = ((i + l) % d, j);
    let new_target = ((k + j) % d, l);
    let predicted = pair_product(d, new_source, d, new_target)?;
    assert_matches(&state, &predicted, &format!("mBCS d={d} {source:?},{target:?}"))?;
    Ok((new_source, new_target))
}

/// Dense check of the index swap (V (x) V-bar) P_ij (...)^* = P_(j, -i).
pub fn verify_v_swap(d: usize, source: (usize, usize)) -> Result<(usize, usize)> {
    let (i, j) = source;
    check_index(d, i, j)?;
    let mut state = max_entangled(d, i, j)?;
    let v = dft_matrix(d);
    state.apply_one_site(0, &v);
    state.apply_one_site(1, &conjugate(&v));
    let swapped = (j, (d - i) % d);
    let predicted = max_entangled(d, swapped.0, swapped.1)?;
    assert_matches(&state, &predicted, &format!("V swap d={d} {source:?}"))?;
    Ok(swapped)
}

/// Dense check of the bilateral phase rotations:
/// u(g) (x) u-bar(g): P_kl -> P_(k, l-gk) and
/// v(g) (x) v-bar(g): P_kl -> P_(k+gl, l).
pub fn verify_phase_rotations(
    d: usize,
    g: usize,
    kl: (usize, usize),
) -> Result<((usize, usize), (usize, usize))> {
    let (k, l) = kl;
    check_index(d, k, l)?;
    if g >= d {
        return Err(Error::IndexOutOfRange { d, k: g, l: 0 });
    }

    let u = u_gate(d, g);
    let mut state = max_entangled(d, k, l)?;
    state.apply_one_site(0, &u);
    state.apply_one_site(1, &conjugate(&u));
    let u_mapped = (k, (d + l - (g * k) % d) % d);
    let predicted = max_entangled(d, u_mapped.0, u_mapped.1)?;
    assert_matches(&state, &predicted, &format!("u rotation d={d} g={g} {kl:?}"))?;

    let v = v_gate(d, g);
    let mut state = max_entangled(d, k, l)?;
    state.apply_one_site(0, &v);
    state.apply_one_site(1, &conjugate(&v));
    let v_mapped = ((k + g * l) % d, l);
    let predicted = max_entangled(d, v_mapped.0, v_mapped.1)?;
    assert_matches(&state, &predicted, &format!("v rotation d={d} g={g} {kl:?}"))?;

    Ok((u_mapped, v_mapped))
}

/// Result of the cross-dimension BCS check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossdimReport {
    pub source: (usize, usize),
    /// Target index reached by the non-wrapping source branches.
    pub nominal_target: (usize, usize),
    /// True when the output is exactly the product
    /// Psi_ij (x) Psi'_(k+i, 0), i.e. when i = 0 or d' = d. Otherwise the
    /// branches of the source superposition that wrap around in Z_d drag the
    /// target to k + i - d (mod d') instead, entangling source and target.
    pub product_form: bool,
    pub max_deviation: f64,
}

/// Dense check of the controlled shift between dimensions d and d' (prime,
/// d' >= d) on a target with zero phase index. The exact action is
///
///   Psi_ij (x) Psi'_(k,0) ->
///     (1/sqrt d) sum_r eta^(rj) |r, r+i mod d| (x) Psi'_(k + w(r), 0),
///
/// with w(r) = i for r + i < d and w(r) = i - d (mod d') otherwise; the
/// clean product form with target index k + i holds iff no branch wraps.
pub fn verify_crossdim_bcs(
    d: usize,
    dprime: usize,
    source: (usize, usize),
    target_shift: usize,
) -> Result<CrossdimReport> {
    let (i, j) = source;
    check_index(d, i, j)?;
    check_index(dprime, target_shift, 0)?;
    if dprime < d {
        return Err(Error::Precondition(format!("d' = {dprime} must be >= d = {d}")));
    }
    if !crate::zmod::is_prime(dprime as u64) {
        return Err(Error::PrimeRequired(dprime as u64));
    }
    let mut state = pair_product(d, source, dprime, (target_shift, 0))?;
    apply_bcs(&mut state);

    let e = eta(d);
    let norm = 1.0 / ((d * dprime) as f64).sqrt();
    let mut predicted = SiteState::zero(vec![d, d, dprime, dprime]);
    for r in 0..d {
        let w = if r + i < d { i } else { i + dprime - d };
        let c = (target_shift + w) % dprime;
        let amp = e.powu((r * j) as u32) * norm;
        for s in 0..dprime {
            let idx = predicted.encode(&[r, (r + i) % d, s, (s + c) % dprime]);
            predicted.amps_mut()[idx] += amp;
        }
    }
    assert_matches(
        &state,
        &predicted,
        &format!("cross-dim BCS d={d} d'={dprime} {source:?} k={target_shift}"),
    )?;
    let product = pair_product(d, source, dprime, ((target_shift + i) % dprime, 0))?;
    let product_deviation = 1.0 - state.overlap_abs(&product);
    Ok(CrossdimReport {
        source,
        nominal_target: ((target_shift + i) % dprime, 0),
        product_form: product_deviation.abs() <= TOL,
        max_deviation: (1.0 - state.overlap_abs(&predicted)).abs(),
    })
}

/// Isotropic density matrix f |Omega><Omega| + (1-f)/(d^2-1) (1 - |Omega><Omega|).
pub fn isotropic_density(d: usize, f: f64) -> Result<Array2<C64>> {
    check_cap(d * d)?;
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    let omega = max_entangled(d, 0, 0)?;
    let n = d * d;
    let rest = (1.0 - f) / (n as f64 - 1.0);
    let mut rho = Array2::from_elem((n, n), C64::new(0.0, 0.0));
    for a in 0..n {
        rho[(a, a)] = C64::new(rest, 0.0);
        for b in 0..n {
            rho[(a, b)] += omega.amps()[a] * omega.amps()[b].conj() * (f - rest);
        }
    }
    Ok(rho)
}

/// Discrete twirl T(rho) = d^-2 sum_g g rho g^dag over g = U_ij (x) U_(i,-j).
///
/// Verifies that the result is diagonal in the Psi basis and returns the
/// diagonal as a Bell-diagonal probability table.
pub fn twirl(rho: &Array2<C64>, d: usize) -> Result<BellDiagonalState> {
    let n = d * d;
    check_cap(n)?;
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::InvalidDensityMatrix(format!(
            "expected {n}x{n}, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let trace: C64 = rho.diag().sum();
    if (trace - C64::new(1.0, 0.0)).norm() > 1e-9 {
        return Err(Error::InvalidDensityMatrix(format!("trace = {trace}")));
    }
    if max_abs_diff(rho, &dagger(rho)) > 1e-9 {
        return Err(Error::InvalidDensityMatrix("not hermitian".to_string()));
    }

    let mut avg = Array2::from_elem((n, n), C64::new(0.0, 0.0));
    for i in 0..d {
        for j in 0..d {
            let g = kron(&weyl_unitary(d, i, j)?, &weyl_unitary(d, i, (d - j) % d)?);
            avg += &g.dot(rho).dot(&dagger(&g));
        }
    }
    avg.mapv_inplace(|c| c / (n as f64));

    // expand in the Psi basis; off-diagonals must vanish
    let basis: Vec<SiteState> = (0..d)
        .flat_map(|k| (0..d).map(move |l| (k, l)))
        .map(|(k, l)| max_entangled(d, k, l).unwrap())
        .collect();
    let mut lambda = vec![0.0; n];
    for (a, pa) in basis.iter().enumerate() {
        for (b, pb) in basis.iter().enumerate() {
            let mut elem = C64::new(0.0, 0.0);
            for x in 0..n {
                for y in 0..n {
                    elem += pa.amps()[x].conj() * avg[(x, y)] * pb.amps()[y];
                }
            }
            if a == b {
                if elem.im.abs() > TOL || elem.re < -TOL {
                    return Err(Error::InvalidDensityMatrix(format!(
                        "twirl diagonal entry {a} = {elem}"
                    )));
                }
                lambda[a] = elem.re.max(0.0);
            } else if elem.norm() > TOL {
                return Err(Error::VerificationFailed {
                    context: format!("twirl off-diagonal ({a},{b})"),
                    deviation: elem.norm(),
                });
            }
        }
    }
    BellDiagonalState::new(d, lambda)
}

fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    ndarray::linalg::kron(a, b)
}

/// Fidelity of one qubit pair after tracing a global isotropic state on
/// d = 2^m down to that pair. Oracle for the qubit-level comparison curve.
pub fn reduced_pair_fidelity(m: usize, f: f64) -> Result<f64> {
    if !(1..=3).contains(&m) {
        return Err(Error::Precondition(format!("m = {m} outside oracle range 1..=3")));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidFidelity(f));
    }
    let d = 1usize << m;
    let rho = isotropic_density(d, f)?;
    // global index a*d + b with Alice digit a, Bob digit b; keep bit 0 of each
    let mut sigma = [[C64::new(0.0, 0.0); 4]; 4];
    for a0 in 0..2usize {
        for b0 in 0..2usize {
            for a0p in 0..2usize {
                for b0p in 0..2usize {
                    let mut acc = C64::new(0.0, 0.0);
                    for ar in 0..d / 2 {
                        for br in 0..d / 2 {
                            let row = (a0 + 2 * ar) * d + (b0 + 2 * br);
                            let col = (a0p + 2 * ar) * d + (b0p + 2 * br);
                            acc += rho[(row, col)];
                        }
                    }
                    sigma[a0 * 2 + b0][a0p * 2 + b0p] = acc;
                }
            }
        }
    }
    let omega2 = max_entangled(2, 0, 0)?;
    let mut fid = C64::new(0.0, 0.0);
    for x in 0..4 {
        for y in 0..4 {
            fid += omega2.amps()[x].conj() * sigma[x][y] * omega2.amps()[y];
        }
    }
    Ok(fid.re)
}

/// Result of the dense two-copy hashing step on basis states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashingDense {
    pub new_source: (usize, usize),
    /// Final shift index of the target = difference of the measurement
    /// outcomes.
    pub outcome: usize,
    pub target_phase: usize,
}

/// Evolve Psi_source (x) Psi_target through one hashing round densely:
/// v(g) rotation on the target, then `s` BCS and `p` mBCS operations,
/// and decompose the result in the Psi basis.
pub fn hashing_step_dense(
    d: usize,
    source: (usize, usize),
    target: (usize, usize),
    s: usize,
    p: usize,
    g: usize,
) -> Result<HashingDense> {
    check_index(d, source.0, source.1)?;
    check_index(d, target.0, target.1)?;
    let mut state = pair_product(d, source, d, target)?;
    let v = v_gate(d, g);
    state.apply_one_site(2, &v);
    state.apply_one_site(3, &conjugate(&v));
    for _ in 0..s {
        apply_bcs(&mut state);
    }
    for _ in 0..p {
        apply_mbcs(&mut state, d);
    }
    // the evolved state must be a single Psi (x) Psi basis state
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let cand = pair_product(d, (i, j), d, (k, l))?;
                    if state.overlap_abs(&cand) > 1.0 - TOL {
                        return Ok(HashingDense {
                            new_source: (i, j),
                            outcome: k,
                            target_phase: l,
                        });
                    }
                }
            }
        }
    }
    Err(Error::VerificationFailed {
        context: format!("hashing step d={d} {source:?},{target:?} s={s} p={p} g={g}"),
        deviation: 1.0,
    })
}

/// Dense referee for the recurrence step: BCS on two isotropic copies,
/// measure both target qudits, keep on equal outcomes.
///
/// Returns (keep probability, post-selected fidelity).
pub fn recurrence_step_dense(d: usize, f: f64) -> Result<(f64, f64)> {
    let n4 = d * d * d * d;
    check_cap(n4)?;
    let iso = isotropic_density(d, f)?;
    // rho_iso (x) rho_iso on sites (A_s, B_s, A_t, B_t)
    let n2 = d * d;
    let mut rho = Array2::from_elem((n4, n4), C64::new(0.0, 0.0));
    let enc = |a: usize, b: usize, c: usize, e: usize| ((a * d + b) * d + c) * d + e;
    for row_s in 0..n2 {
        for col_s in 0..n2 {
            for row_t in 0..n2 {
                for col_t in 0..n2 {
                    let row = enc(row_s / d, row_s % d, row_t / d, row_t % d);
                    let col = enc(col_s / d, col_s % d, col_t / d, col_t % d);
                    rho[(row, col)] = iso[(row_s, col_s)] * iso[(row_t, col_t)];
                }
            }
        }
    }
    // conjugate by the BCS permutation
    let perm: Vec<usize> = (0..n4)
        .map(|x| {
            let (a_s, b_s, a_t, b_t) = (x / (d * d * d), (x / (d * d)) % d, (x / d) % d, x % d);
            enc(a_s, b_s, (a_t + a_s) % d, (b_t + b_s) % d)
        })
        .collect();
    let mut rot = Array2::from_elem((n4, n4), C64::new(0.0, 0.0));
    for x in 0..n4 {
        for y in 0..n4 {
            rot[(perm[x], perm[y])] = rho[(x, y)];
        }
    }
    // project target sites onto |m,m> and trace them out
    let mut sigma = Array2::from_elem((n2, n2), C64::new(0.0, 0.0));
    for m in 0..d {
        for row_s in 0..n2 {
            for col_s in 0..n2 {
                let row = enc(row_s / d, row_s % d, m, m);
                let col = enc(col_s / d, col_s % d, m, m);
                sigma[(row_s, col_s)] += rot[(row, col)];
            }
        }
    }
    let p_keep: f64 = sigma.diag().iter().map(|c| c.re).sum();
    let omega = max_entangled(d, 0, 0)?;
    let mut fid = C64::new(0.0, 0.0);
    for x in 0..n2 {
        for y in 0..n2 {
            fid += omega.amps()[x].conj() * sigma[(x, y)] * omega.amps()[y];
        }
    }
    Ok((p_keep, fid.re / p_keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use tensor::identity;

    #[test]
    fn weyl_unitary_examples() {
        let u = weyl_unitary(2, 0, 0).unwrap();
        assert!(max_abs_diff(&u, &identity(2)) < TOL);

        // bit flip
        let u = weyl_unitary(2, 1, 0).unwrap();
        let mut x = Array2::from_elem((2, 2), C64::new(0.0, 0.0));
        x[(0, 1)] = C64::new(1.0, 0.0);
        x[(1, 0)] = C64::new(1.0, 0.0);
        assert!(max_abs_diff(&u, &x) < TOL);

        // diag(1, eta, eta^2) at d=3
        let u = weyl_unitary(3, 0, 1).unwrap();
        let e = eta(3);
        for r in 0..3 {
            assert!((u[(r, r)] - e.powu(r as u32)).norm() < TOL);
        }
        assert!(weyl_unitary(3, 3, 0).is_err());
    }

    #[test]
    fn weyl_unitaries_are_unitary() {
        for d in 2..=6 {
            for k in 0..d {
                for l in 0..d {
                    let u = weyl_unitary(d, k, l).unwrap();
                    let prod = dagger(&u).dot(&u);
                    assert!(max_abs_diff(&prod, &identity(d)) < TOL);
                }
            }
        }
    }

    #[test]
    fn max_entangled_basics() {
        // Psi_00 = d^(-1/2) sum |jj>
        let s = max_entangled(3, 0, 0).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let amp = s.amps()[s.encode(&[a, b])];
                if a == b {
                    assert!((amp - C64::new(1.0 / 3f64.sqrt(), 0.0)).norm() < TOL);
                } else {
                    assert!(amp.norm() < TOL);
                }
            }
        }
        // orthonormality of the full basis
        for d in [2usize, 3, 5] {
            let basis: Vec<SiteState> = (0..d * d)
                .map(|x| max_entangled(d, x / d, x % d).unwrap())
                .collect();
            for (a, pa) in basis.iter().enumerate() {
                for (b, pb) in basis.iter().enumerate() {
                    let ip = pa.inner(pb).norm();
                    let expected = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - expected).abs() < TOL, "d={d} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn bell_basis_at_d2() {
        // the four Psi_kl at d=2 are the Bell states up to phases
        let sq = 1.0 / 2f64.sqrt();
        let cases = [
            ((0, 0), [sq, 0.0, 0.0, sq]),
            ((1, 0), [0.0, sq, sq, 0.0]),
            ((0, 1), [sq, 0.0, 0.0, -sq]),
            ((1, 1), [0.0, sq, -sq, 0.0]),
        ];
        for ((k, l), amps) in cases {
            let mut bell = SiteState::zero(vec![2, 2]);
            for (i, &a) in amps.iter().enumerate() {
                bell.amps_mut()[i] = C64::new(a, 0.0);
            }
            let psi = max_entangled(2, k, l).unwrap();
            assert!(psi.overlap_abs(&bell) > 1.0 - TOL, "({k},{l})");
        }
    }

    #[test]
    fn check_basis_small_dims() {
        for d in 2..=8 {
            let report = check_basis(d).unwrap();
            assert!(report.max_orthonormality_deviation < TOL * d as f64);
            assert!(report.max_weyl_deviation < TOL);
        }
    }

    #[test]
    fn bcs_examples() {
        assert_eq!(verify_bcs(2, (1, 1), (1, 0)).unwrap(), ((1, 1), (0, 0)));
        assert_eq!(verify_bcs(3, (1, 2), (2, 1)).unwrap(), ((1, 1), (0, 1)));
        // source unchanged iff target phase is zero
        for d in [2usize, 3] {
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        let (src, _) = verify_bcs(d, (i, j), (k, 0)).unwrap();
                        assert_eq!(src, (i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn mbcs_examples() {
        assert_eq!(verify_mbcs(2, (0, 1), (1, 1)).unwrap(), ((1, 1), (0, 1)));
        assert_eq!(verify_mbcs(3, (2, 2), (1, 2)).unwrap(), ((1, 2), (0, 2)));
        // l = 0: source shift unchanged, target picks up the source phase
        assert_eq!(verify_mbcs(3, (1, 2), (2, 0)).unwrap(), ((1, 2), (1, 0)));
    }

    #[test]
    fn v_swap_examples() {
        assert_eq!(verify_v_swap(2, (1, 0)).unwrap(), (0, 1));
        assert_eq!(verify_v_swap(3, (0, 0)).unwrap(), (0, 0));
        assert_eq!(verify_v_swap(5, (2, 3)).unwrap(), (3, 3));
    }

    #[test]
    fn phase_rotation_examples() {
        // g = 0 is the identity
        assert_eq!(verify_phase_rotations(3, 0, (2, 1)).unwrap(), ((2, 1), (2, 1)));
        let (u_map, _) = verify_phase_rotations(2, 1, (1, 1)).unwrap();
        assert_eq!(u_map, (1, 0));
        let (_, v_map) = verify_phase_rotations(3, 2, (1, 1)).unwrap();
        assert_eq!(v_map, (0, 1));
    }

    #[test]
    fn index_maps_full_coverage_small_dims() {
        for d in [2usize, 3, 5] {
            for i in 0..d {
                for j in 0..d {
                    verify_v_swap(d, (i, j)).unwrap();
                    for g in 0..d {
                        verify_phase_rotations(d, g, (i, j)).unwrap();
                    }
                    for k in 0..d {
                        for l in 0..d {
                            verify_bcs(d, (i, j), (k, l)).unwrap();
                            verify_mbcs(d, (i, j), (k, l)).unwrap();
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn index_maps_sampled_other_dims() {
        use rand::Rng;
        let mut rng = crate::zmod::seed_rng(3);
        for d in [4usize, 6, 7] {
            for _ in 0..20 {
                let i = rng.gen_range(0..d);
                let j = rng.gen_range(0..d);
                let k = rng.gen_range(0..d);
                let l = rng.gen_range(0..d);
                let g = rng.gen_range(0..d);
                verify_bcs(d, (i, j), (k, l)).unwrap();
                verify_mbcs(d, (i, j), (k, l)).unwrap();
                verify_v_swap(d, (i, j)).unwrap();
                verify_phase_rotations(d, g, (k, l)).unwrap();
            }
        }
    }

    #[test]
    fn crossdim_examples() {
        // wrapping source shift: nominal target 2+1 mod 3, but no clean
        // product (the r = 1 branch drags the target to k + i - d instead)
        let r = verify_crossdim_bcs(2, 3, (1, 1), 2).unwrap();
        assert_eq!(r.nominal_target, (0, 0));
        assert!(!r.product_form);

        let r = verify_crossdim_bcs(3, 5, (2, 1), 4).unwrap();
        assert_eq!(r.nominal_target, (1, 0));
        assert!(!r.product_form);

        // zero source shift: exact product, everything unchanged
        let r = verify_crossdim_bcs(2, 3, (0, 1), 0).unwrap();
        assert_eq!(r.nominal_target, (0, 0));
        assert!(r.product_form);

        // equal dimensions reduce to the ordinary BCS: product always holds
        for i in 0..3 {
            let r = verify_crossdim_bcs(3, 3, (i, 1), 2).unwrap();
            assert_eq!(r.nominal_target, ((2 + i) % 3, 0));
            assert!(r.product_form);
        }

        assert!(verify_crossdim_bcs(3, 4, (0, 0), 0).is_err());
        assert!(verify_crossdim_bcs(5, 3, (0, 0), 0).is_err());
    }

    #[test]
    fn crossdim_product_form_iff_no_wrap() {
        // full coverage at d=2, d'=3: the product form of the map holds
        // exactly when the source shift index is zero
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..3 {
                    let r = verify_crossdim_bcs(2, 3, (i, j), k).unwrap();
                    assert_eq!(r.product_form, i == 0, "i={i} j={j} k={k}");
                    assert!(r.max_deviation < TOL);
                }
            }
        }
    }

    #[test]
    fn twirl_examples() {
        // fixed point: P_kl
        let psi = max_entangled(2, 1, 1).unwrap();
        let n = 4;
        let mut rho = Array2::from_elem((n, n), C64::new(0.0, 0.0));
        for a in 0..n {
            for b in 0..n {
                rho[(a, b)] = psi.amps()[a] * psi.amps()[b].conj();
            }
        }
        let t = twirl(&rho, 2).unwrap();
        assert_abs_diff_eq!(t.prob(1, 1), 1.0, epsilon = TOL);

        // maximally mixed input
        let mut rho = Array2::from_elem((n, n), C64::new(0.0, 0.0));
        for a in 0..n {
            rho[(a, a)] = C64::new(0.25, 0.0);
        }
        let t = twirl(&rho, 2).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                assert_abs_diff_eq!(t.prob(k, l), 0.25, epsilon = TOL);
            }
        }

        // |00><00| at d=2: lambda_00 = lambda_01 = 1/2
        let mut rho = Array2::from_elem((n, n), C64::new(0.0, 0.0));
        rho[(0, 0)] = C64::new(1.0, 0.0);
        let t = twirl(&rho, 2).unwrap();
        assert_abs_diff_eq!(t.prob(0, 0), 0.5, epsilon = TOL);
        assert_abs_diff_eq!(t.prob(0, 1), 0.5, epsilon = TOL);
        assert_abs_diff_eq!(t.prob(1, 0), 0.0, epsilon = TOL);
        assert_abs_diff_eq!(t.prob(1, 1), 0.0, epsilon = TOL);
    }

    #[test]
    fn twirl_is_idempotent_and_normalized() {
        use rand::Rng;
        let mut rng = crate::zmod::seed_rng(17);
        for d in [2usize, 3] {
            let n = d * d;
            // random density matrix rho = A A^dag / tr
            let a = Array2::from_shape_fn((n, n), |_| {
                C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let mut rho = a.dot(&dagger(&a));
            let tr: f64 = rho.diag().iter().map(|c| c.re).sum();
            rho.mapv_inplace(|c| c / tr);
            let once = twirl(&rho, d).unwrap();
            let sum: f64 = once.probabilities().iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);

            // rebuild the twirled density matrix and twirl again
            let mut rho2 = Array2::from_elem((n, n), C64::new(0.0, 0.0));
            for k in 0..d {
                for l in 0..d {
                    let psi = max_entangled(d, k, l).unwrap();
                    for x in 0..n {
                        for y in 0..n {
                            rho2[(x, y)] +=
                                psi.amps()[x] * psi.amps()[y].conj() * once.prob(k, l);
                        }
                    }
                }
            }
            let twice = twirl(&rho2, d).unwrap();
            for k in 0..d {
                for l in 0..d {
                    assert_abs_diff_eq!(twice.prob(k, l), once.prob(k, l), epsilon = TOL);
                }
            }
        }
    }

    #[test]
    fn twirl_rejects_bad_input() {
        let mut rho = Array2::from_elem((4, 4), C64::new(0.0, 0.0));
        rho[(0, 0)] = C64::new(2.0, 0.0);
        assert!(twirl(&rho, 2).is_err());
    }

    #[test]
    fn reduced_pair_fidelity_examples() {
        assert_abs_diff_eq!(reduced_pair_fidelity(1, 0.37).unwrap(), 0.37, epsilon = TOL);
        assert_abs_diff_eq!(reduced_pair_fidelity(2, 1.0).unwrap(), 1.0, epsilon = TOL);
        for m in [2usize, 3] {
            for f in [0.0, 0.25, 0.5, 0.9] {
                let dense = reduced_pair_fidelity(m, f).unwrap();
                let pow = 4f64.powi(m as i32);
                let closed = f + (1.0 - f) * (pow / 4.0 - 1.0) / (pow - 1.0);
                assert_abs_diff_eq!(dense, closed, epsilon = TOL);
            }
        }
        assert!(reduced_pair_fidelity(4, 0.5).is_err());
    }

    #[test]
    fn recurrence_dense_fixed_point() {
        let (p, f) = recurrence_step_dense(2, 1.0).unwrap();
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn oracle_cap_enforced() {
        assert!(check_basis(100).is_err());
    }
}
