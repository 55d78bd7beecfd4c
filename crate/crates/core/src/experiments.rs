//! Monte Carlo campaigns behind the CLI subcommands and the self-checks.

use std::ops::Add;

use rand::Rng;
use serde::Serialize;

use crate::bell::{exact_outcome_table, BellKind, OutcomeTable};
use crate::campaign::{try_run_trials, BinomialEstimate, Count};
use crate::error::Result;
use crate::ghz::{
    measure_logical_bell, LogicalBellKind, LogicalQubit, LossPlacement, TeleportStatus, Teleporter,
};
use crate::loss::{bm_failure_prob, LossChannel};
use crate::rng::StreamFactory;

/// Fidelity within this distance of one counts as exact.
pub const FIDELITY_TOL: f64 = 1e-10;

pub fn bs_table() -> Vec<(BellKind, OutcomeTable)> {
    BellKind::ALL
        .iter()
        .map(|&k| (k, exact_outcome_table(k)))
        .collect()
}

/// Success frequency of the logical Bell measurement on logical Bell states
/// drawn uniformly at random, one per trial.
pub fn logical_bm_estimate(
    n: usize,
    eta: f64,
    placement: LossPlacement,
    samples: u64,
    streams: &StreamFactory,
) -> Result<BinomialEstimate> {
    LossChannel::new(eta)?;
    let count: Count = try_run_trials(streams, samples, |_, rng| {
        let kind = LogicalBellKind::ALL[rng.random_range(0..4)];
        let rec = measure_logical_bell(kind, n, eta, placement, rng)?;
        Ok(Count::one(rec.result.is_success()))
    })?;
    Ok(count.into())
}

pub fn logical_bm_analytic(n: usize, eta: f64) -> f64 {
    1.0 - bm_failure_prob(n, eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleportTally {
    pub trials: u64,
    pub successes: u64,
    pub exact_successes: u64,
    pub min_success_fidelity: f64,
}

impl Default for TeleportTally {
    fn default() -> Self {
        Self {
            trials: 0,
            successes: 0,
            exact_successes: 0,
            min_success_fidelity: f64::INFINITY,
        }
    }
}

impl Add for TeleportTally {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            successes: self.successes + o.successes,
            exact_successes: self.exact_successes + o.exact_successes,
            min_success_fidelity: self.min_success_fidelity.min(o.min_success_fidelity),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TeleportSummary {
    pub n: usize,
    pub eta: f64,
    pub samples: u64,
    pub successes: u64,
    pub estimate: f64,
    pub stderr: f64,
    pub analytic: f64,
    /// Successful trials whose output matched the input to within 1e-10.
    pub exact_successes: u64,
    pub min_success_fidelity: Option<f64>,
}

/// Teleports one uniformly random logical qubit per trial.
pub fn teleport_campaign(
    n: usize,
    eta: f64,
    samples: u64,
    streams: &StreamFactory,
    teleporter: &Teleporter,
) -> Result<TeleportSummary> {
    LossChannel::new(eta)?;
    let t: TeleportTally = try_run_trials(streams, samples, |_, rng| {
        let input = LogicalQubit::random(n, rng)?;
        let rec = teleporter.teleport(&input, eta, rng)?;
        let ok = rec.status == TeleportStatus::Success;
        Ok(TeleportTally {
            trials: 1,
            successes: ok as u64,
            exact_successes: (ok && (rec.fidelity - 1.0).abs() <= FIDELITY_TOL) as u64,
            min_success_fidelity: if ok { rec.fidelity } else { f64::INFINITY },
        })
    })?;
    let est = BinomialEstimate::new(t.trials, t.successes);
    Ok(TeleportSummary {
        n,
        eta,
        samples: t.trials,
        successes: t.successes,
        estimate: est.estimate,
        stderr: est.stderr,
        analytic: logical_bm_analytic(n, eta),
        exact_successes: t.exact_successes,
        min_success_fidelity: t
            .min_success_fidelity
            .is_finite()
            .then_some(t.min_success_fidelity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_campaigns() {
        let f = StreamFactory::new(42);
        let e = logical_bm_estimate(2, 0.0, LossPlacement::default(), 20_000, &f).unwrap();
        assert!(e.within_sigma(0.75, 3.0), "{e:?}");
        let s = teleport_campaign(3, 0.0, 20_000, &f, &Teleporter::default()).unwrap();
        assert_eq!(s.exact_successes, s.successes);
        assert!(BinomialEstimate::new(s.samples, s.successes).within_sigma(0.875, 3.0));
        assert!(teleport_campaign(3, 2.0, 10, &f, &Teleporter::default()).is_err());
    }
}
