//! Command implementations behind the `qd` binary: sweeps, simulations,
//! verification suites and low-rank optimality reports, all emitting
//! deterministic CSV/tables.

use crate::error::{Error, Result};
use crate::improve::{
    candidate_partitions, qubit_level_rate, recurrence_then_hash_rate, subspace_rate, Partition,
};
use crate::oracle;
use crate::protocols::{
    prime_power_distribution, simulate_identification, CopyModel, ProtocolMode, SimulateOptions,
};
use crate::states::{
    er_isotropic, hashing_rate, hashing_rate_isotropic, isotropic_to_bell_diagonal, low_rank_state,
    shannon_entropy, er_bound_low_rank, IsotropicState, LowRankSpectrum,
};
use crate::zmod::{collision_probability, fork_rng, is_prime, IndexVector, Rational};
use rand::Rng;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

/// Parameters for rate sweeps and protocol simulations.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub d: usize,
    pub dprime: Option<u64>,
    pub p: usize,
    pub f_start: f64,
    pub f_stop: f64,
    pub f_points: usize,
    pub f: f64,
    pub strategies: Vec<String>,
    pub n: usize,
    pub trials: usize,
    pub max_rounds: usize,
    pub seed: u64,
    pub mode: String,
    pub exact: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            d: 2,
            dprime: None,
            p: 1,
            f_start: 0.0,
            f_stop: 1.0,
            f_points: 101,
            f: 0.9,
            strategies: vec!["hashing".to_string(), "er".to_string()],
            n: 4,
            trials: 200,
            max_rounds: 16,
            seed: 0,
            mode: "breeding".to_string(),
            exact: true,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::InvalidConfig(format!("d = {} must be >= 2", self.d)));
        }
        if self.f_points < 2 {
            return Err(Error::InvalidConfig(format!(
                "f-points = {} must be >= 2",
                self.f_points
            )));
        }
        if !(0.0..=1.0).contains(&self.f_start)
            || !(0.0..=1.0).contains(&self.f_stop)
            || self.f_start >= self.f_stop
        {
            return Err(Error::InvalidConfig(format!(
                "f-grid [{}, {}] must satisfy 0 <= start < stop <= 1",
                self.f_start, self.f_stop
            )));
        }
        if !(0.0..=1.0).contains(&self.f) {
            return Err(Error::InvalidConfig(format!("f = {} out of [0, 1]", self.f)));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let step = (self.f_stop - self.f_start) / (self.f_points - 1) as f64;
        (0..self.f_points)
            .map(|i| self.f_start + i as f64 * step)
            .collect()
    }
}

/// Load `key=value` lines ('#' comments) into the config; unknown keys error.
pub fn apply_config_file(config: &mut SweepConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidConfig(format!("{}:{}: expected key=value", path.display(), lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |what: &str| Error::InvalidConfig(format!("{key}: bad {what} '{value}'"));
        match key {
            "d" => config.d = value.parse().map_err(|_| bad("integer"))?,
            "dprime" => config.dprime = Some(value.parse().map_err(|_| bad("integer"))?),
            "p" => config.p = value.parse().map_err(|_| bad("integer"))?,
            "f-start" => config.f_start = value.parse().map_err(|_| bad("number"))?,
            "f-stop" => config.f_stop = value.parse().map_err(|_| bad("number"))?,
            "f-points" => config.f_points = value.parse().map_err(|_| bad("integer"))?,
            "f" => config.f = value.parse().map_err(|_| bad("number"))?,
            "strategies" => {
                config.strategies = value.split(',').map(|s| s.trim().to_string()).collect()
            }
            "n" => config.n = value.parse().map_err(|_| bad("integer"))?,
            "trials" => config.trials = value.parse().map_err(|_| bad("integer"))?,
            "rounds" => config.max_rounds = value.parse().map_err(|_| bad("integer"))?,
            "seed" => config.seed = value.parse().map_err(|_| bad("integer"))?,
            "mode" => config.mode = value.to_string(),
            "exact" => config.exact = value.parse().map_err(|_| bad("bool"))?,
            other => {
                return Err(Error::InvalidConfig(format!("unknown config key '{other}'")))
            }
        }
    }
    Ok(())
}

/// One column of the rates CSV.
#[derive(Debug, Clone)]
enum RateColumn {
    Hashing,
    Er,
    Recurrence(usize),
    Subspace(Partition),
    /// Max over the 2^j equal-split family (power-of-two d) or the
    /// near-equal candidate family otherwise; includes the trivial
    /// partition, i.e. plain hashing.
    Envelope,
    QubitLevel,
}

impl RateColumn {
    fn name(&self) -> String {
        match self {
            RateColumn::Hashing => "hashing".to_string(),
            RateColumn::Er => "er".to_string(),
            RateColumn::Recurrence(k) => format!("recurrence{k}"),
            RateColumn::Subspace(p) => {
                let parts: Vec<String> =
                    p.blocks().iter().map(|q| q.to_string()).collect();
                format!("subspace_{}", parts.join("_"))
            }
            RateColumn::Envelope => "envelope".to_string(),
            RateColumn::QubitLevel => "qubit_level".to_string(),
        }
    }

    fn rate(&self, d: usize, f: f64) -> Result<f64> {
        match self {
            RateColumn::Hashing => Ok(hashing_rate_isotropic(d, f)),
            RateColumn::Er => Ok(er_isotropic(d, f)),
            RateColumn::Recurrence(k) => recurrence_then_hash_rate(d, f, *k),
            RateColumn::Subspace(p) => subspace_rate(d, f, p),
            RateColumn::Envelope => {
                let mut best = hashing_rate_isotropic(d, f);
                for p in envelope_partitions(d)? {
                    best = best.max(subspace_rate(d, f, &p)?);
                }
                Ok(best)
            }
            RateColumn::QubitLevel => {
                let m = power_of_two_exponent(d)?;
                qubit_level_rate(m, f)
            }
        }
    }
}

fn power_of_two_exponent(d: usize) -> Result<usize> {
    if !d.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "d = {d} must be a power of two for this strategy"
        )));
    }
    Ok(d.trailing_zeros() as usize)
}

/// Partition family over which the envelope is taken.
fn envelope_partitions(d: usize) -> Result<Vec<Partition>> {
    if d.is_power_of_two() {
        let m = power_of_two_exponent(d)?;
        (0..=m)
            .map(|j| Partition::near_equal(d, 1 << (m - j)))
            .collect()
    } else {
        Ok(candidate_partitions(d))
    }
}

/// Parse a strategy selector: hashing | er | recurrence:K | subspace:q1+q2
/// | subspace:q1,q2 | envelope | qubit.
fn parse_strategy(d: usize, text: &str) -> Result<RateColumn> {
    let bad = || Error::InvalidConfig(format!("unknown strategy '{text}'"));
    match text {
        "hashing" => return Ok(RateColumn::Hashing),
        "er" => return Ok(RateColumn::Er),
        "envelope" => return Ok(RateColumn::Envelope),
        "qubit" | "qubit-level" => return Ok(RateColumn::QubitLevel),
        _ => {}
    }
    if let Some(k) = text.strip_prefix("recurrence:") {
        return Ok(RateColumn::Recurrence(k.parse().map_err(|_| bad())?));
    }
    if let Some(spec) = text.strip_prefix("subspace:") {
        let blocks: Vec<usize> = spec
            .split(|c| c == '+' || c == ',')
            .map(|q| q.parse().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        return Ok(RateColumn::Subspace(Partition::new(d, blocks)?));
    }
    Err(bad())
}

fn push_f64(line: &mut String, value: f64) {
    let _ = write!(line, ",{value}");
}

/// Rate sweep over the f-grid; per strategy two columns: raw bits per copy
/// and the rate normalized by log2 d.
pub fn cmd_rates(config: &SweepConfig) -> Result<String> {
    config.validate()?;
    let d = config.d;
    let columns: Vec<RateColumn> = config
        .strategies
        .iter()
        .map(|s| parse_strategy(d, s))
        .collect::<Result<_>>()?;
    if columns.is_empty() {
        return Err(Error::InvalidConfig("no strategies selected".to_string()));
    }
    let mut header = String::from("f");
    for c in &columns {
        let _ = write!(header, ",{0}_bits,{0}_norm", c.name());
    }
    let log2_d = (d as f64).log2();
    let rows: Vec<Result<String>> = config
        .grid()
        .par_iter()
        .map(|&f| {
            let mut line = format!("{f}");
            for c in &columns {
                let bits = c.rate(d, f)?;
                push_f64(&mut line, bits);
                push_f64(&mut line, bits / log2_d);
            }
            Ok(line)
        })
        .collect();
    let mut out = header;
    out.push('\n');
    for row in rows {
        out.push_str(&row?);
        out.push('\n');
    }
    Ok(out)
}

/// Identification simulation; CSV of success probability and yield versus
/// rounds.
pub fn cmd_simulate(config: &SweepConfig) -> Result<String> {
    config.validate()?;
    let mode = match config.mode.as_str() {
        "breeding" => ProtocolMode::Breeding,
        "breeding-crossdim" => {
            let dprime = config.dprime.ok_or_else(|| {
                Error::InvalidConfig("breeding-crossdim requires dprime".to_string())
            })?;
            ProtocolMode::BreedingCrossDim { dprime }
        }
        "hashing" => ProtocolMode::Hashing,
        other => {
            return Err(Error::InvalidConfig(format!("unknown mode '{other}'")))
        }
    };
    let model = match config.dprime {
        Some(dprime) if config.p > 1 || dprime.pow(config.p as u32) == config.d as u64 => {
            let factored = prime_power_distribution(dprime, config.p, config.f)?;
            CopyModel::from_factored(&factored)?
        }
        _ => {
            let iso = IsotropicState::new(config.d, config.f)?;
            CopyModel::from_state(&isotropic_to_bell_diagonal(&iso))
        }
    };
    let opts = SimulateOptions {
        n: config.n,
        mode,
        max_rounds: config.max_rounds,
        trials: config.trials,
        exact: config.exact,
        seed: config.seed,
        ..Default::default()
    };
    let report = simulate_identification(&model, &opts)?;
    let mut out = String::from("rounds,success_prob,mean_yield_bits_per_copy,stderr\n");
    for row in &report.per_round {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.round, row.success_prob, row.mean_yield_per_copy, row.stderr
        );
    }
    Ok(out)
}

/// Exhaustive collision-probability table: for prime d every nonzero
/// difference vector collides with probability exactly 1/d; for composite d
/// a counterexample is reported.
pub fn cmd_lemma1(d_list: &[u64], m_max: usize) -> Result<String> {
    let mut out = String::from("d,m,status,detail\n");
    for &d in d_list {
        for m in 1..=m_max {
            let row = lemma1_row(d, m)?;
            out.push_str(&row);
            out.push('\n');
        }
    }
    Ok(out)
}

fn lemma1_row(d: u64, m: usize) -> Result<String> {
    let target = Rational::new(1, d as u128);
    let mut worst: Option<(Vec<u64>, Rational)> = None;
    let mut delta = vec![0u64; m];
    'outer: loop {
        // odometer over all nonzero difference vectors
        let mut pos = 0;
        loop {
            if pos == m {
                break 'outer;
            }
            delta[pos] += 1;
            if delta[pos] < d {
                break;
            }
            delta[pos] = 0;
            pos += 1;
        }
        let v = IndexVector::new(delta.clone(), d)?;
        let p = collision_probability(&v, d)?;
        if p != target && worst.as_ref().map_or(true, |(_, w)| p > *w) {
            worst = Some((delta.clone(), p));
        }
    }
    Ok(match worst {
        None => format!("{d},{m},pass,all nonzero deltas collide with probability 1/{d}"),
        Some((delta, p)) => format!(
            "{d},{m},counterexample,delta={delta:?} probability {}/{}",
            p.numerator(),
            p.denominator()
        ),
    })
}

/// Hard cap on the dimension the verification suite will accept.
pub const ORACLE_VERIFY_D_MAX: usize = 6;

/// Dense-oracle verification suite: one pass/fail row per checked rule and
/// dimension.
pub fn cmd_oracle_verify(d_max: usize) -> Result<String> {
    if d_max < 2 {
        return Err(Error::InvalidConfig("d-max must be >= 2".to_string()));
    }
    if d_max > ORACLE_VERIFY_D_MAX {
        return Err(Error::OracleCap {
            dim: d_max,
            cap: ORACLE_VERIFY_D_MAX,
        });
    }
    let mut out = String::from("check,d,status,max_deviation\n");
    let mut push = |name: &str, d: usize, r: Result<f64>| match r {
        Ok(dev) => {
            let _ = writeln!(out, "{name},{d},pass,{dev:.3e}");
            Ok(())
        }
        Err(Error::VerificationFailed { context, deviation }) => {
            let _ = writeln!(out, "{name},{d},FAIL,{deviation:.3e} ({context})");
            Ok(())
        }
        Err(e) => Err(e),
    };
    for d in 2..=d_max {
        push(
            "weyl-basis",
            d,
            oracle::check_basis(d)
                .map(|r| r.max_orthonormality_deviation.max(r.max_weyl_deviation)),
        )?;
        push("twirl", d, twirl_deviation(d))?;
        push("bcs-map", d, coverage_bcs(d))?;
        push("mbcs-map", d, coverage_mbcs(d))?;
        push("v-swap", d, coverage_v_swap(d))?;
        push("phase-rotations", d, coverage_phase_rotations(d))?;
        if let Some(dprime) = (d as u64..=2 * d as u64 + 1).find(|&x| is_prime(x)) {
            push("crossdim-bcs", d, coverage_crossdim(d, dprime as usize))?;
        }
        if d <= 3 {
            push("recurrence-referee", d, recurrence_referee(d))?;
        }
    }
    Ok(out)
}

fn twirl_deviation(d: usize) -> Result<f64> {
    let rho = oracle::isotropic_density(d, 0.73)?;
    let twirled = oracle::twirl(&rho, d)?;
    let expected = isotropic_to_bell_diagonal(&IsotropicState::new(d, 0.73)?);
    let dev = twirled
        .probabilities()
        .iter()
        .zip(expected.probabilities())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if dev > oracle::TOL {
        return Err(Error::VerificationFailed {
            context: format!("twirl of isotropic density at d = {d}"),
            deviation: dev,
        });
    }
    Ok(dev)
}

fn coverage_bcs(d: usize) -> Result<f64> {
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    oracle::verify_bcs(d, (i, j), (k, l))?;
                }
            }
        }
    }
    Ok(0.0)
}

fn coverage_mbcs(d: usize) -> Result<f64> {
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    oracle::verify_mbcs(d, (i, j), (k, l))?;
                }
            }
        }
    }
    Ok(0.0)
}

fn coverage_v_swap(d: usize) -> Result<f64> {
    for k in 0..d {
        for l in 0..d {
            oracle::verify_v_swap(d, (k, l))?;
        }
    }
    Ok(0.0)
}

fn coverage_phase_rotations(d: usize) -> Result<f64> {
    for g in 0..d {
        for k in 0..d {
            for l in 0..d {
                oracle::verify_phase_rotations(d, g, (k, l))?;
            }
        }
    }
    Ok(0.0)
}

fn coverage_crossdim(d: usize, dprime: usize) -> Result<f64> {
    for i in 0..d {
        for j in 0..d {
            for k in 0..dprime {
                oracle::verify_crossdim_bcs(d, dprime, (i, j), k)?;
            }
        }
    }
    Ok(0.0)
}

/// Referee the two recurrence keep-probability conventions against the dense
/// simulation; returns the deviation of the confirmed (derived) value.
fn recurrence_referee(d: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in [0.3, 0.55, 0.7, 0.9] {
        let (p_dense, f_dense) = oracle::recurrence_step_dense(d, f)?;
        let step = crate::improve::recurrence_step(d, f)?;
        let dev_derived = (p_dense - step.p_keep_derived).abs();
        let dev_paper = (p_dense - step.p_keep_paper).abs();
        let dev_f = (f_dense - step.f_prime).abs();
        if dev_derived > oracle::TOL || dev_f > oracle::TOL {
            return Err(Error::VerificationFailed {
                context: format!("recurrence step at d = {d}, f = {f}"),
                deviation: dev_derived.max(dev_f),
            });
        }
        if dev_paper < dev_derived {
            return Err(Error::VerificationFailed {
                context: format!(
                    "keep-probability referee at d = {d}, f = {f}: stated convention closer"
                ),
                deviation: dev_paper,
            });
        }
        worst = worst.max(dev_derived.max(dev_f));
    }
    Ok(worst)
}

/// Low-rank optimality report: for spectra supported on one Weyl index row,
/// the hashing rate meets the relative-entropy bound exactly.
pub fn cmd_lowrank(d: usize, samples: usize, seed: u64) -> Result<String> {
    if d < 2 {
        return Err(Error::InvalidConfig(format!("d = {d} must be >= 2")));
    }
    let mut worst: f64 = 0.0;
    let mut rng = fork_rng(seed, 0);
    for _ in 0..samples {
        let mut mu: Vec<f64> = (0..d).map(|_| -(rng.gen::<f64>()).ln()).collect();
        let total: f64 = mu.iter().sum();
        for x in &mut mu {
            *x /= total;
        }
        let spectrum = LowRankSpectrum::new(d, mu)?;
        let rate = hashing_rate(&low_rank_state(&spectrum));
        let bound = er_bound_low_rank(&spectrum);
        let direct = (d as f64).log2() - shannon_entropy(&spectrum.mu);
        worst = worst
            .max((rate - bound).abs())
            .max((rate - direct).abs());
    }
    // boundary cases
    let uniform = LowRankSpectrum::new(d, vec![1.0 / d as f64; d])?;
    let uniform_rate = hashing_rate(&low_rank_state(&uniform));
    let mut point = vec![0.0; d];
    point[0] = 1.0;
    let point_rate = hashing_rate(&low_rank_state(&LowRankSpectrum::new(d, point)?));
    let mut out = String::new();
    let _ = writeln!(out, "d={d} samples={samples} seed={seed}");
    let _ = writeln!(out, "max |rate - er_bound| = {worst:.3e}");
    let _ = writeln!(out, "uniform spectrum rate = {uniform_rate}");
    let _ = writeln!(out, "point-mass spectrum rate = {point_rate} (log2 d = {})", (d as f64).log2());
    let _ = writeln!(
        out,
        "status: {}",
        if worst <= 1e-12 { "pass" } else { "FAIL" }
    );
    if worst > 1e-12 {
        return Err(Error::VerificationFailed {
            context: format!("low-rank optimality at d = {d}"),
            deviation: worst,
        });
    }
    Ok(out)
}

/// Initialize the global worker pool from QD_THREADS, once.
pub fn init_threads() {
    if let Ok(text) = std::env::var("QD_THREADS") {
        if let Ok(threads) = text.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build_global();
        }
    }
}

/// Write `content` to `path`, or to stdout when no path is given.
pub fn emit(content: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            std::fs::write(p, content)?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}
