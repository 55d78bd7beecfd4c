//! Per-photon loss channel acting on GHZ-encoded qubits.
//!
//! Losing `k` of `N` photons from `a|+>^N + b|->^N` leaves either
//! `a|+>^(N-k) + b|->^(N-k)` or the phase-flipped `a|+>^(N-k) - b|->^(N-k)`
//! with equal weight. [`sample_loss`] draws one fair coin per lost photon
//! and XORs them. For any `k >= 1` the XOR of `k` fair coins is itself a fair
//! coin, so this matches drawing a single coin, and it composes correctly
//! when a qubit is exposed in several stages.

use rand::Rng;

use crate::error::{Error, Result};
use crate::ghz::LogicalQubit;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossChannel {
    eta: f64,
}

impl LossChannel {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!(
                "loss rate {eta} outside [0, 1]"
            )));
        }
        Ok(Self { eta })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossEvent {
    pub mask: Vec<bool>,
    pub k: usize,
    pub z_flip: bool,
}

impl LossEvent {
    pub fn none(n: usize) -> Self {
        Self {
            mask: vec![false; n],
            k: 0,
            z_flip: false,
        }
    }
}

pub fn sample_loss<R: Rng + ?Sized>(n: usize, eta: f64, rng: &mut R) -> Result<LossEvent> {
    let channel = LossChannel::new(eta)?;
    Ok(sample_loss_with(n, channel, rng))
}

pub fn sample_loss_with<R: Rng + ?Sized>(n: usize, channel: LossChannel, rng: &mut R) -> LossEvent {
    let mut mask = Vec::with_capacity(n);
    let mut k = 0;
    let mut z_flip = false;
    for _ in 0..n {
        let lost = rng.random::<f64>() < channel.eta;
        if lost {
            k += 1;
            z_flip ^= rng.random::<bool>();
        }
        mask.push(lost);
    }
    LossEvent { mask, k, z_flip }
}

pub fn apply_loss(q: &LogicalQubit, ev: &LossEvent) -> Result<LogicalQubit> {
    if ev.mask.len() != q.photons_present {
        return Err(Error::LengthMismatch {
            expected: q.photons_present,
            got: ev.mask.len(),
        });
    }
    let mut out = q.clone();
    out.photons_present -= ev.k;
    if ev.k > 0 && ev.z_flip {
        out.amp_minus = -out.amp_minus;
        out.z_flag = !out.z_flag;
    }
    Ok(out)
}

/// Closed-form loss mixture: `(weight, state)` pairs summing to one.
pub fn loss_mixture(q: &LogicalQubit, eta: f64) -> Result<Vec<(f64, LogicalQubit)>> {
    LossChannel::new(eta)?;
    let n = q.photons_present;
    let mut out = Vec::with_capacity(2 * n + 1);
    for k in 0..=n {
        let w = binomial(n, k) * (1.0 - eta).powi((n - k) as i32) * eta.powi(k as i32);
        let kept = LossEvent {
            mask: (0..n).map(|i| i < k).collect(),
            k,
            z_flip: false,
        };
        let base = apply_loss(q, &kept)?;
        if k == 0 {
            out.push((w, base));
        } else {
            let flipped = apply_loss(
                q,
                &LossEvent {
                    z_flip: true,
                    ..kept
                },
            )?;
            out.push((w / 2.0, base));
            out.push((w / 2.0, flipped));
        }
    }
    Ok(out)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Failure probability of the N-pair logical Bell measurement when each
/// pair loses a photon with probability `eta`.
pub fn bm_failure_prob(n: usize, eta: f64) -> f64 {
    ((1.0 + eta) / 2.0).powi(n as i32)
}

/// Same quantity as a binomial sum over the number of lossy pairs.
pub fn bm_failure_prob_mixture(n: usize, eta: f64) -> f64 {
    (0..=n)
        .map(|k| {
            binomial(n, k)
                * (1.0 - eta).powi((n - k) as i32)
                * eta.powi(k as i32)
                * 0.5f64.powi((n - k) as i32)
        })
        .sum()
}

/// Failure probability when both photons of every pair are exposed.
pub fn bm_failure_prob_two_sided(n: usize, eta: f64) -> f64 {
    let survive = (1.0 - eta) * (1.0 - eta);
    (1.0 - survive / 2.0).powi(n as i32)
}

pub fn qubit_loss_prob(n: usize, eta: f64) -> f64 {
    1.0 - (1.0 - eta).powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;
    use num_complex::Complex64;

    fn qubit(n: usize) -> LogicalQubit {
        LogicalQubit::new(n, Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)).unwrap()
    }

    #[test]
    fn extreme_rates() {
        let mut rng = StreamFactory::new(1).stream(0);
        for _ in 0..1000 {
            assert_eq!(sample_loss(5, 0.0, &mut rng).unwrap().k, 0);
            let all = sample_loss(5, 1.0, &mut rng).unwrap();
            assert_eq!(all.k, 5);
            assert!(all.mask.iter().all(|&m| m));
        }
        assert!(sample_loss(3, 1.5, &mut rng).is_err());
        assert!(sample_loss(3, -0.1, &mut rng).is_err());
    }

    #[test]
    fn single_loss_pmf() {
        let f = StreamFactory::new(7);
        let trials = 100_000;
        let hits = (0..trials)
            .filter(|&i| sample_loss(4, 0.1, &mut f.stream(i)).unwrap().k == 1)
            .count();
        let p = 4.0 * 0.9f64.powi(3) * 0.1;
        assert!((p - 0.2916).abs() < 1e-12);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - p).abs() < 3.0 * sigma);
    }

    #[test]
    fn apply_loss_examples() {
        let q = qubit(3);
        assert_eq!(apply_loss(&q, &LossEvent::none(3)).unwrap(), q);
        let ev = LossEvent {
            mask: vec![true, false, false],
            k: 1,
            z_flip: true,
        };
        let out = apply_loss(&q, &ev).unwrap();
        assert_eq!(out.photons_present, 2);
        assert_eq!(out.amp_plus, q.amp_plus);
        assert_eq!(out.amp_minus, -q.amp_minus);
        assert!(out.z_flag);
        assert!(matches!(
            apply_loss(&q, &LossEvent::none(2)),
            Err(Error::LengthMismatch {
                expected: 3,
                got: 2
            })
        ));
    }

    #[test]
    fn z_flip_marginal_is_half_given_loss() {
        let f = StreamFactory::new(11);
        let (mut lossy, mut flagged) = (0u64, 0u64);
        for i in 0..100_000 {
            let mut rng = f.stream(i);
            let ev = sample_loss(3, 0.3, &mut rng).unwrap();
            let out = apply_loss(&qubit(3), &ev).unwrap();
            if ev.k >= 1 {
                lossy += 1;
                flagged += out.z_flag as u64;
            }
        }
        let p = flagged as f64 / lossy as f64;
        let sigma = (0.25 / lossy as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * sigma, "{p}");
    }

    #[test]
    fn xor_of_fair_coins_is_fair() {
        // exact: P(odd number of heads among k fair coins) = 1/2 for k >= 1
        for k in 1..=8u32 {
            let odd: usize = (0u32..(1 << k)).filter(|m| m.count_ones() % 2 == 1).count();
            assert_eq!(odd * 2, 1 << k);
        }
    }

    #[test]
    fn closed_forms() {
        for n in 1..=8 {
            assert!((bm_failure_prob(n, 0.0) - 0.5f64.powi(n as i32)).abs() < 1e-15);
            assert_eq!(bm_failure_prob(n, 1.0), 1.0);
            assert_eq!(qubit_loss_prob(n, 0.0), 0.0);
        }
        assert!((bm_failure_prob(4, 0.1) - 0.091_506_25).abs() < 1e-15);
        assert!((qubit_loss_prob(1, 0.37) - 0.37).abs() < 1e-15);
        let p = qubit_loss_prob(4, 1.7e-3);
        assert!((p - 6.78e-3).abs() / 6.78e-3 < 1e-3, "{p}");
        assert!((bm_failure_prob_two_sided(3, 0.0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn binomial_sum_matches_closed_form() {
        for n in 0..=20 {
            for eta in [0.0, 1e-3, 0.05, 0.2, 0.5, 0.9, 1.0] {
                let a = bm_failure_prob(n, eta);
                let b = bm_failure_prob_mixture(n, eta);
                assert!((a - b).abs() <= 1e-12, "n={n} eta={eta}");
            }
        }
    }

    #[test]
    fn mixture_weights_and_z_rate() {
        let q = qubit(5);
        let eta = 0.17;
        let mix = loss_mixture(&q, eta).unwrap();
        let total: f64 = mix.iter().map(|(w, _)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let z: f64 = mix.iter().filter(|(_, s)| s.z_flag).map(|(w, _)| w).sum();
        assert!((z - qubit_loss_prob(5, eta) / 2.0).abs() < 1e-12);
        let intact: f64 = mix
            .iter()
            .filter(|(_, s)| s.photons_present == 5)
            .map(|(w, _)| w)
            .sum();
        assert!((intact - (1.0 - eta).powi(5)).abs() < 1e-12);
    }
}
