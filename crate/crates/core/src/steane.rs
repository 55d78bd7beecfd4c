//! Steane [[7,1,3]] code, erasure-aware decoding, a Monte Carlo model of
//! one telecorrection round, concatenation, and threshold search.
//!
//! # Round model
//!
//! A logical qubit at level `L + 1` is teleported through an encoded Bell
//! pair made of seven level-`L` qubits. For each of the seven positions:
//!
//! * the entangling gate (itself a gate teleportation) fails with
//!   probability `p_fail`; the position is erased in both the X and Z
//!   outcome words and receives uniformly random X and Z flips;
//! * otherwise the transversal logical Bell measurement fails with
//!   probability `p_fail`; a failed measurement still reads the X-sector
//!   outcome, so only the X word is erased (random X flip);
//! * unlocated flips accumulate over the exposure locations of the round:
//!   one data-memory location, two offline channel locations (if enabled)
//!   and two gate locations. Each location flips Z with probability `p_z`
//!   and X with probability `p_x`; the net flip is their parity.
//!
//! Both words are decoded with [`SteaneCode::decode_with_erasures`]. A
//! decoder failure in either sector is a located failure of the level-up
//! qubit; otherwise an odd-weight residual is a logical flip in that sector.

use std::ops::Add;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::campaign::run_trials;
use crate::error::{Error, Result};
use crate::loss::{bm_failure_prob, qubit_loss_prob, LossChannel};
use crate::rng::StreamFactory;

pub const BLOCK: usize = 7;
const FULL: u8 = 0b111_1111;

/// Row `r` has bit `j` set iff bit `r` of `j + 1` is set.
pub const PARITY_CHECK: [u8; 3] = [0b101_0101, 0b110_0110, 0b111_1000];

pub fn weight(x: u8) -> u32 {
    x.count_ones()
}

pub fn syndrome_of(pattern: u8) -> u8 {
    PARITY_CHECK.iter().enumerate().fold(0, |acc, (r, row)| {
        acc | (((weight(row & pattern) & 1) as u8) << r)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "correction", rename_all = "snake_case")]
pub enum Decoded {
    Correction(u8),
    Failure,
}

/// Code tables. Patterns are 7-bit words, bit `j` for position `j`.
#[derive(Debug, Clone)]
pub struct SteaneCode {
    /// All 16 patterns for each syndrome value.
    cosets: [[u8; 16]; 8],
    /// Decoder output for every (syndrome, erasure mask).
    table: Vec<Decoded>,
}

impl Default for SteaneCode {
    fn default() -> Self {
        Self::new()
    }
}

impl SteaneCode {
    pub fn new() -> Self {
        let mut cosets = [[0u8; 16]; 8];
        let mut fill = [0usize; 8];
        for e in 0..=FULL {
            let s = syndrome_of(e) as usize;
            cosets[s][fill[s]] = e;
            fill[s] += 1;
        }
        let mut table = Vec::with_capacity(8 * 128);
        for coset in &cosets {
            for erased in 0..=FULL {
                table.push(Self::solve(coset, erased));
            }
        }
        Self { cosets, table }
    }

    fn solve(coset: &[u8; 16], erased: u8) -> Decoded {
        // best (cost, pattern) per logical class; class = weight parity
        let mut best: [Option<(u32, u8)>; 2] = [None, None];
        for &c in coset {
            let class = (weight(c) & 1) as usize;
            let cost = weight(c & !erased & FULL);
            if best[class].is_none_or(|(b, _)| cost < b) {
                best[class] = Some((cost, c));
            }
        }
        match (best[0], best[1]) {
            (Some((a, ca)), Some((b, cb))) => match a.cmp(&b) {
                std::cmp::Ordering::Less => Decoded::Correction(ca),
                std::cmp::Ordering::Greater => Decoded::Correction(cb),
                std::cmp::Ordering::Equal => Decoded::Failure,
            },
            _ => unreachable!("every coset contains both logical classes"),
        }
    }

    pub fn parity_check(&self) -> [u8; 3] {
        PARITY_CHECK
    }

    pub fn logical_support(&self) -> u8 {
        FULL
    }

    pub fn coset(&self, syndrome: u8) -> &[u8; 16] {
        &self.cosets[(syndrome & 7) as usize]
    }

    /// `syndrome` is three bits, one per parity-check row; `erasures` is a
    /// 7-bit position mask.
    pub fn decode_with_erasures(&self, syndrome: &[u8], erasures: u8) -> Result<Decoded> {
        if syndrome.len() != 3 || syndrome.iter().any(|&b| b > 1) {
            return Err(Error::MalformedSyndrome(format!(
                "expected 3 bits, got {syndrome:?}"
            )));
        }
        if erasures > FULL {
            return Err(Error::InvalidParameter(format!(
                "erasure mask {erasures:#b} exceeds 7 positions"
            )));
        }
        let s = syndrome
            .iter()
            .enumerate()
            .fold(0u8, |acc, (r, &b)| acc | (b << r));
        Ok(self.lookup(s, erasures))
    }

    #[inline]
    pub fn lookup(&self, syndrome: u8, erasures: u8) -> Decoded {
        self.table[(syndrome as usize) * 128 + erasures as usize]
    }

    /// Decodes a flip pattern; `None` on decoder failure, else whether a
    /// logical flip remains.
    #[inline]
    pub fn residual_logical(&self, flips: u8, erasures: u8) -> Option<bool> {
        match self.lookup(syndrome_of(flips), erasures) {
            Decoded::Failure => None,
            Decoded::Correction(c) => Some(weight(flips ^ c) & 1 == 1),
        }
    }
}

pub fn syndrome_bits(pattern: u8) -> [u8; 3] {
    let s = syndrome_of(pattern);
    [s & 1, (s >> 1) & 1, (s >> 2) & 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorRates {
    pub p_fail: f64,
    pub p_z: f64,
    pub p_x: f64,
    pub level: usize,
}

impl ErrorRates {
    pub fn max_rate(&self) -> f64 {
        self.p_fail.max(self.p_z).max(self.p_x)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("p_fail", self.p_fail),
            ("p_z", self.p_z),
            ("p_x", self.p_x),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelecorrectionConfig {
    pub n_photons: usize,
    pub eta: f64,
    pub samples: u64,
    pub levels: usize,
    pub memory_steps: u32,
    pub offline_loss: bool,
}

pub const MIN_SAMPLES: u64 = 1000;
pub const MAX_LEVELS: usize = 5;
const GATE_LOCATIONS: u32 = 2;
const OFFLINE_LOCATIONS: u32 = 2;
const MEMORY_LOCATIONS: u32 = 1;

impl TelecorrectionConfig {
    pub fn new(n_photons: usize, samples: u64, levels: usize) -> Self {
        Self {
            n_photons,
            eta: 0.0,
            samples,
            levels,
            memory_steps: 1,
            offline_loss: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_photons == 0 {
            return Err(Error::InvalidParameter(
                "n_photons must be at least 1".into(),
            ));
        }
        LossChannel::new(self.eta)?;
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!(
                "samples must be at least {MIN_SAMPLES}"
            )));
        }
        if !(1..=MAX_LEVELS).contains(&self.levels) {
            return Err(Error::InvalidParameter(format!(
                "levels must be in 1..={MAX_LEVELS}"
            )));
        }
        if self.memory_steps == 0 {
            return Err(Error::InvalidParameter(
                "memory_steps must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Exposure locations per position per round.
    pub fn flip_locations(&self) -> u32 {
        MEMORY_LOCATIONS
            + GATE_LOCATIONS
            + if self.offline_loss {
                OFFLINE_LOCATIONS
            } else {
                0
            }
    }
}

pub fn physical_rates(n_photons: usize, eta: f64, memory_steps: u32) -> ErrorRates {
    let p_z = (memory_steps as f64 * qubit_loss_prob(n_photons, eta) / 2.0).min(1.0);
    ErrorRates {
        p_fail: bm_failure_prob(n_photons, eta),
        p_z,
        p_x: 0.0,
        level: 0,
    }
}

/// Probability of an odd number of flips among `k` independent locations.
pub fn odd_flip_prob(p: f64, k: u32) -> f64 {
    (1.0 - (1.0 - 2.0 * p).powi(k as i32)) / 2.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RoundTally {
    pub trials: u64,
    pub failures: u64,
    pub z_errors: u64,
    pub x_errors: u64,
}

impl Add for RoundTally {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            failures: self.failures + o.failures,
            z_errors: self.z_errors + o.z_errors,
            x_errors: self.x_errors + o.x_errors,
        }
    }
}

impl RoundTally {
    pub fn rates(&self, level: usize) -> ErrorRates {
        let ok = self.trials - self.failures;
        let frac = |k: u64, n: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
        ErrorRates {
            p_fail: frac(self.failures, self.trials),
            p_z: frac(self.z_errors, ok),
            p_x: frac(self.x_errors, ok),
            level,
        }
    }
}

/// One telecorrection round. The number of random draws is fixed, and every
/// event is a threshold on its own uniform, so runs at different input
/// rates share random numbers.
pub fn simulate_round(
    code: &SteaneCode,
    rates: &ErrorRates,
    locations: u32,
    rng: &mut ChaCha8Rng,
) -> RoundTally {
    let qz = odd_flip_prob(rates.p_z, locations);
    let qx = odd_flip_prob(rates.p_x, locations);
    let (mut erased_both, mut erased_x, mut z, mut x) = (0u8, 0u8, 0u8, 0u8);
    for j in 0..BLOCK {
        let bit = 1u8 << j;
        let gate: f64 = rng.random();
        let bm: f64 = rng.random();
        let uz: f64 = rng.random();
        let ux: f64 = rng.random();
        let coins: u8 = rng.random();
        if uz < qz {
            z |= bit;
        }
        if ux < qx {
            x |= bit;
        }
        if gate < rates.p_fail {
            erased_both |= bit;
            z = (z & !bit) | (coins & 1) << j;
            x = (x & !bit) | (coins >> 1 & 1) << j;
        } else if bm < rates.p_fail {
            erased_x |= bit;
            x = (x & !bit) | (coins >> 2 & 1) << j;
        }
    }
    let z_res = code.residual_logical(z, erased_both);
    let x_res = code.residual_logical(x, erased_both | erased_x);
    match (z_res, x_res) {
        (Some(zl), Some(xl)) => RoundTally {
            trials: 1,
            failures: 0,
            z_errors: zl as u64,
            x_errors: xl as u64,
        },
        _ => RoundTally {
            trials: 1,
            failures: 1,
            z_errors: 0,
            x_errors: 0,
        },
    }
}

pub fn simulate_level(
    code: &SteaneCode,
    rates_in: &ErrorRates,
    config: &TelecorrectionConfig,
    streams: &StreamFactory,
) -> Result<ErrorRates> {
    rates_in.validate()?;
    let locations = config.flip_locations();
    let tally = run_trials(streams, config.samples, |_, rng| {
        simulate_round(code, rates_in, locations, rng)
    });
    Ok(tally.rates(rates_in.level + 1))
}

/// Level-0 rates followed by `config.levels` simulated levels. Level `L`
/// draws from `streams.child(L)`, independent of `eta`.
pub fn concatenate(
    code: &SteaneCode,
    config: &TelecorrectionConfig,
    streams: &StreamFactory,
) -> Result<Vec<ErrorRates>> {
    config.validate()?;
    let mut out = vec![physical_rates(
        config.n_photons,
        config.eta,
        config.memory_steps,
    )];
    for level in 1..=config.levels {
        let next = simulate_level(
            code,
            out.last().expect("non-empty"),
            config,
            &streams.child(level as u64),
        )?;
        out.push(next);
    }
    Ok(out)
}

/// The last simulated level has a strictly smaller maximum rate than the one
/// before (or both are zero).
pub fn is_contracting(history: &[ErrorRates]) -> bool {
    match history {
        [.., prev, last] => {
            let (a, b) = (prev.max_rate(), last.max_rate());
            (a == 0.0 && b == 0.0) || b < a
        }
        _ => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchConfig {
    pub replicas: usize,
    pub seed: u64,
    pub eta_low: f64,
    pub eta_high: f64,
    /// Stop when `hi / lo` falls below this ratio.
    pub bracket_ratio: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            replicas: 5,
            seed: 42,
            eta_low: 1e-5,
            eta_high: 1e-1,
            bracket_ratio: 1.05,
        }
    }
}

pub const MIN_REPLICAS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdResult {
    pub n_photons: usize,
    pub eta_threshold: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub levels_used: usize,
    pub replica_thresholds: Vec<f64>,
}

/// Bisection for one independent replica.
pub fn bisect_threshold(
    code: &SteaneCode,
    config: &TelecorrectionConfig,
    search: &SearchConfig,
    streams: &StreamFactory,
) -> Result<f64> {
    let contracting = |eta: f64| -> Result<bool> {
        let cfg = TelecorrectionConfig { eta, ..*config };
        Ok(is_contracting(&concatenate(code, &cfg, streams)?))
    };
    let (mut lo, mut hi) = (search.eta_low, search.eta_high);
    if !contracting(lo)? {
        return Err(Error::NoThresholdFound(format!(
            "N = {}: error rates grow already at eta = {lo:e}",
            config.n_photons
        )));
    }
    if contracting(hi)? {
        return Ok(hi);
    }
    while hi / lo > search.bracket_ratio {
        let mid = (lo * hi).sqrt();
        if contracting(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}

pub fn find_threshold(
    code: &SteaneCode,
    config: &TelecorrectionConfig,
    search: &SearchConfig,
) -> Result<ThresholdResult> {
    config.validate()?;
    if config.levels < 2 {
        return Err(Error::InvalidParameter(
            "threshold search needs at least 2 levels".into(),
        ));
    }
    if search.replicas < MIN_REPLICAS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_REPLICAS} replicas are required"
        )));
    }
    if !(search.eta_low > 0.0 && search.eta_low < search.eta_high && search.eta_high <= 1.0) {
        return Err(Error::InvalidParameter("invalid eta bracket".into()));
    }
    if search.bracket_ratio.is_nan() || search.bracket_ratio <= 1.0 {
        return Err(Error::InvalidParameter(
            "bracket ratio must exceed 1".into(),
        ));
    }
    let root = StreamFactory::new(search.seed).child(config.n_photons as u64);
    let replica_thresholds = (0..search.replicas)
        .map(|r| bisect_threshold(code, config, search, &root.child(r as u64)))
        .collect::<Result<Vec<f64>>>()?;
    let (mean, half) = mean_and_ci_half_width(&replica_thresholds);
    Ok(ThresholdResult {
        n_photons: config.n_photons,
        eta_threshold: mean,
        ci_low: mean - half,
        ci_high: mean + half,
        levels_used: config.levels,
        replica_thresholds,
    })
}

/// Sample mean and the half-width of its 95% Student-t interval.
pub fn mean_and_ci_half_width(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .expect("valid dof")
        .inverse_cdf(0.975);
    (mean, t * (var / n).sqrt())
}
