//! Named correctness checks shared by `verify` and the acceptance suite.
//! Sample sizes are parameters so the same checks run at full or reduced
//! scale.

use std::collections::BTreeSet;

use crate::bell::{exact_outcome_table, uniform_success_probability, BellKind, BsOutcome};
use crate::campaign::BinomialEstimate;
use crate::error::Result;
use crate::experiments::{logical_bm_estimate, teleport_campaign, FIDELITY_TOL};
use crate::format::sig10;
use crate::ghz::{
    classify_logical, enumerate_logical_bell, success_probability, LogicalBellKind, LogicalOutcome,
    LogicalQubit, LossPlacement, TeleportStatus, Teleporter,
};
use crate::loss::{bm_failure_prob, bm_failure_prob_mixture};
use crate::report::curves_csv;
use crate::rng::StreamFactory;
use crate::schemes::{
    emit_curves, ps_ewert, ps_ghz_encoded, ps_grice, zaidi_nbar, CurveOptions, SchemeId,
    ZAIDI_SQUEEZING,
};
use crate::steane::{
    find_threshold, syndrome_of, weight, Decoded, SearchConfig, SteaneCode, TelecorrectionConfig,
    ThresholdResult, PARITY_CHECK,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn from_problems(name: &str, problems: Vec<String>, ok_detail: String) -> Self {
        let passed = problems.is_empty();
        let detail = if passed {
            ok_detail
        } else {
            problems.join("; ")
        };
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn sigma_ok(est: &BinomialEstimate, p: f64) -> bool {
    est.within_sigma(p, 3.0)
}

pub fn bs_exactness() -> Check {
    let tol = 1e-10;
    let mut problems = Vec::new();
    let expect = |kind: BellKind| match kind {
        k if k == BellKind::PHI_MINUS => Some(BsOutcome::SuccessPhiMinus),
        k if k == BellKind::PSI_MINUS => Some(BsOutcome::SuccessPsiMinus),
        _ => None,
    };
    for kind in BellKind::ALL {
        let t = exact_outcome_table(kind);
        match expect(kind) {
            Some(o) if (t.get(o) - 1.0).abs() > tol => {
                problems.push(format!("{kind}: P({o:?}) = {}", t.get(o)))
            }
            None if t.success() > tol => problems.push(format!("{kind}: success {}", t.success())),
            _ => {}
        }
        if (t.total() - 1.0).abs() > tol {
            problems.push(format!("{kind}: total {}", t.total()));
        }
    }
    let u = uniform_success_probability();
    if (u - 0.5).abs() > tol {
        problems.push(format!("uniform success {u}"));
    }
    Check::from_problems(
        "bs-exactness",
        problems,
        format!("uniform success {}", sig10(u)),
    )
}

/// Exact enumeration for N <= `exact_max`, Monte Carlo for N = 1..=`mc_max`.
pub fn logical_bm_success(
    samples: u64,
    seed: u64,
    exact_max: usize,
    mc_max: usize,
) -> Result<Check> {
    let mut problems = Vec::new();
    for n in 1..=exact_max {
        let mut avg = 0.0;
        for kind in LogicalBellKind::ALL {
            let mut s = 0.0;
            for (projs, p) in enumerate_logical_bell(kind, n) {
                let outs: Vec<BsOutcome> = projs.iter().map(|x| x.outcome()).collect();
                if let LogicalOutcome::Identified(k) = classify_logical(&outs)? {
                    if k != kind {
                        problems.push(format!("N={n}: {kind} identified as {k}"));
                    }
                    s += p;
                }
            }
            avg += s / 4.0;
        }
        if (avg - success_probability(n)).abs() >= 1e-12 {
            problems.push(format!("N={n}: exact {avg}"));
        }
    }
    let root = StreamFactory::new(seed).child(0x4c42);
    let mut worst: f64 = 0.0;
    for n in 1..=mc_max {
        let est = logical_bm_estimate(
            n,
            0.0,
            LossPlacement::default(),
            samples,
            &root.child(n as u64),
        )?;
        let p = success_probability(n);
        let sigma = (p * (1.0 - p) / samples as f64).sqrt();
        worst = worst.max((est.estimate - p).abs() / sigma);
        if !sigma_ok(&est, p) {
            problems.push(format!("N={n}: estimate {} vs {p}", est.estimate));
        }
    }
    if success_probability(2) != 0.75 {
        problems.push("P_s(2) != 3/4".into());
    }
    if format!("{:.4}", success_probability(8)) != "0.9961" {
        problems.push(format!("P_s(8) = {}", success_probability(8)));
    }
    Ok(Check::from_problems(
        "logical-bm-success",
        problems,
        format!("exact N<={exact_max}, MC N=1..{mc_max} at {samples} samples, worst deviation {worst:.2} sigma"),
    ))
}

pub fn teleportation(samples: u64, seed: u64, teleporter: &Teleporter) -> Result<Check> {
    let mut problems = Vec::new();
    let root = StreamFactory::new(seed).child(0x5445);
    let qubits = root.child(0);
    for n in 1..=6usize {
        for i in 0..100u64 {
            let mut rng = qubits.child(n as u64).stream(i);
            let input = LogicalQubit::random(n, &mut rng)?;
            let rec = teleporter.teleport(&input, 0.0, &mut rng)?;
            if rec.status == TeleportStatus::Success && (rec.fidelity - 1.0).abs() > FIDELITY_TOL {
                problems.push(format!("N={n} qubit {i}: fidelity {}", rec.fidelity));
            }
        }
    }
    problems.truncate(5);
    let freq = root.child(1);
    for n in 1..=6usize {
        let s = teleport_campaign(n, 0.0, samples, &freq.child(n as u64), teleporter)?;
        if s.exact_successes != s.successes {
            problems.push(format!(
                "N={n}: {} of {} successes inexact",
                s.successes - s.exact_successes,
                s.successes
            ));
        }
        let fail = BinomialEstimate::new(s.samples, s.samples - s.successes);
        if !sigma_ok(&fail, 0.5f64.powi(n as i32)) {
            problems.push(format!("N={n}: failure frequency {}", fail.estimate));
        }
    }
    Ok(Check::from_problems(
        "teleportation",
        problems,
        format!(
            "fidelity 1 on all successes; failure frequency within 3 sigma at {samples} samples"
        ),
    ))
}

pub const LOSS_GRID_ETA: [f64; 4] = [0.0, 0.05, 0.2, 0.5];

pub fn loss_law(samples: u64, seed: u64) -> Result<Check> {
    let mut problems = Vec::new();
    let root = StreamFactory::new(seed).child(0x4c4f);
    let mut worst: f64 = 0.0;
    for n in 1..=6usize {
        for (j, &eta) in LOSS_GRID_ETA.iter().enumerate() {
            let s = teleport_campaign(
                n,
                eta,
                samples,
                &root.child((n * 16 + j) as u64),
                &Teleporter::default(),
            )?;
            let fail = BinomialEstimate::new(s.samples, s.samples - s.successes);
            let p = bm_failure_prob(n, eta);
            let sigma = (p * (1.0 - p) / samples as f64).sqrt();
            worst = worst.max((fail.estimate - p).abs() / sigma);
            if !sigma_ok(&fail, p) {
                problems.push(format!("N={n} eta={eta}: {} vs {p}", fail.estimate));
            }
        }
    }
    for n in 1..=20 {
        for eta in [0.0, 1e-3, 0.05, 0.2, 0.5, 0.9, 1.0] {
            let d = (bm_failure_prob(n, eta) - bm_failure_prob_mixture(n, eta)).abs();
            if d > 1e-12 {
                problems.push(format!("binomial identity N={n} eta={eta}: {d:e}"));
            }
        }
    }
    Ok(Check::from_problems(
        "loss-law",
        problems,
        format!("24 grid points at {samples} samples, worst deviation {worst:.2} sigma"),
    ))
}

pub fn scheme_curves() -> Check {
    let mut problems = Vec::new();
    let points = emit_curves(20.0, 2.0, CurveOptions::default()).expect("valid grid");
    let csv = curves_csv(&points);
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let scheme = SchemeId::from_name(cols[0]);
        let nbar: f64 = cols[1].parse().unwrap_or(f64::NAN);
        let ps: f64 = cols[2].parse().unwrap_or(f64::NAN);
        let want = match scheme {
            Some(SchemeId::GhzEncoded) => ps_ghz_encoded(nbar),
            Some(SchemeId::Grice) => ps_grice(nbar),
            Some(SchemeId::EwertVanLoock) => ps_ewert(nbar),
            Some(SchemeId::ZaidiVanLoock) => {
                if (nbar, ps) != (6.00029, 0.643) {
                    problems.push(format!("zaidi point {line}"));
                }
                continue;
            }
            None => {
                problems.push(format!("unknown scheme in {line}"));
                continue;
            }
        };
        if cols[2] != sig10(want) || ((ps - want) / want).abs() > 5e-10 {
            problems.push(format!("{line}: expected {want}"));
        }
    }
    if !(ps_ghz_encoded(8.0) > ps_grice(8.0) && ps_grice(8.0) > ps_ewert(8.0)) {
        problems.push("ordering at nbar = 8".into());
    }
    if !(ps_ghz_encoded(4.0) == 0.75 && ps_grice(4.0) == 0.75) {
        problems.push("touching point at nbar = 4".into());
    }
    let z = zaidi_nbar(ZAIDI_SQUEEZING);
    if (z - 6.00029).abs() > 1e-3 {
        problems.push(format!("zaidi_nbar = {z}"));
    }
    Check::from_problems(
        "scheme-curves",
        problems,
        format!("{} rows, zaidi_nbar {}", points.len(), sig10(z)),
    )
}

/// Minimum-weight decoding by brute force over the stabilizer group spanned
/// by the parity-check rows; returns the winning logical class or `None`
/// on a tie.
pub fn oracle_decode(syndrome: u8, erased: u8) -> Option<u8> {
    let mut group = BTreeSet::new();
    for m in 0..8u8 {
        group.insert(
            (0..3)
                .filter(|r| m >> r & 1 == 1)
                .fold(0u8, |acc, r| acc ^ PARITY_CHECK[r]),
        );
    }
    let reps: Vec<u8> = (0..128u8).filter(|&e| syndrome_of(e) == syndrome).collect();
    let base = reps[0];
    let mut best = [u32::MAX; 2];
    for e in reps {
        let class = if group.contains(&(e ^ base)) { 0 } else { 1 };
        best[class] = best[class].min(weight(e & !erased & 0x7f));
    }
    match best[0].cmp(&best[1]) {
        std::cmp::Ordering::Equal => None,
        std::cmp::Ordering::Less => Some(0),
        std::cmp::Ordering::Greater => Some(1),
    }
}

pub fn decoder_exhaustive(code: &SteaneCode) -> Check {
    let mut problems = Vec::new();
    let mut cases = 0;
    for s in 0..8u8 {
        let reps: Vec<u8> = (0..128u8).filter(|&e| syndrome_of(e) == s).collect();
        let class_of = |c: u8| {
            let group_elem = c ^ reps[0];
            // same class as reps[0] iff the difference is an even-weight codeword
            (weight(group_elem) % 2) as u8
        };
        for erased in 0..128u8 {
            if weight(erased) > 3 {
                continue;
            }
            cases += 1;
            let bits = [s & 1, s >> 1 & 1, s >> 2 & 1];
            let got = match code.decode_with_erasures(&bits, erased) {
                Ok(Decoded::Correction(c)) => Some(class_of(c)),
                Ok(Decoded::Failure) => None,
                Err(e) => {
                    problems.push(format!("s={s} E={erased:07b}: {e}"));
                    continue;
                }
            };
            if got != oracle_decode(s, erased) {
                problems.push(format!("s={s} E={erased:07b}"));
            }
        }
    }
    for j in 0..7 {
        if code.residual_logical(1 << j, 0) != Some(false) {
            problems.push(format!("single error at {j}"));
        }
    }
    let mut doubles = 0;
    for a in 0..7 {
        for b in a + 1..7 {
            let erased = (1u8 << a) | (1 << b);
            doubles += 1;
            for e in [0u8, 1 << a, 1 << b, erased] {
                if code.residual_logical(e, erased) != Some(false) {
                    problems.push(format!("double erasure {a},{b} with error {e:07b}"));
                }
            }
        }
    }
    Check::from_problems(
        "steane-decoder",
        problems,
        format!("{cases} syndrome/erasure cases, 7 single errors, {doubles} double erasures"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdCheckConfig {
    pub samples: u64,
    pub levels: usize,
    pub replicas: usize,
    pub seed: u64,
    pub n_min: usize,
    pub n_max: usize,
}

pub fn threshold_scan(cfg: &ThresholdCheckConfig) -> Result<Vec<ThresholdResult>> {
    let code = SteaneCode::new();
    let search = SearchConfig {
        replicas: cfg.replicas,
        seed: cfg.seed,
        ..Default::default()
    };
    (cfg.n_min..=cfg.n_max)
        .map(|n| {
            find_threshold(
                &code,
                &TelecorrectionConfig::new(n, cfg.samples, cfg.levels),
                &search,
            )
        })
        .collect()
}

pub const REFERENCE_PEAK: f64 = 1.7e-3;

pub fn threshold_shape(results: &[ThresholdResult]) -> Check {
    let mut problems = Vec::new();
    for r in results {
        if !(r.eta_threshold.is_finite() && (1e-4..=1e-2).contains(&r.eta_threshold)) {
            problems.push(format!(
                "N={}: {:e} outside [1e-4, 1e-2]",
                r.n_photons, r.eta_threshold
            ));
        }
    }
    match results.iter().find(|r| r.n_photons == 4) {
        Some(four) => {
            for r in results.iter().filter(|r| r.n_photons != 4) {
                if r.ci_low > four.ci_high {
                    problems.push(format!(
                        "N={} interval [{:.3e}, {:.3e}] lies above N=4 [{:.3e}, {:.3e}]",
                        r.n_photons, r.ci_low, r.ci_high, four.ci_low, four.ci_high
                    ));
                }
            }
            let ratio = four.eta_threshold / REFERENCE_PEAK;
            if !(0.5..=2.0).contains(&ratio) {
                problems.push(format!(
                    "N=4 threshold {:.3e} is {ratio:.2}x the reference",
                    four.eta_threshold
                ));
            }
        }
        None => problems.push("N=4 missing".into()),
    }
    let summary: Vec<String> = results
        .iter()
        .map(|r| format!("N={}:{:.3e}", r.n_photons, r.eta_threshold))
        .collect();
    Check::from_problems("thresholds", problems, summary.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ghz::{CorrectionTable, PauliCorrection};

    #[test]
    fn exact_checks_pass() {
        assert!(bs_exactness().passed);
        assert!(scheme_curves().passed);
        assert!(decoder_exhaustive(&SteaneCode::new()).passed);
    }

    #[test]
    fn reduced_monte_carlo_checks_pass() {
        let c = logical_bm_success(5000, 1, 3, 4).unwrap();
        assert!(c.passed, "{}", c.line());
        let c = teleportation(5000, 1, &Teleporter::default()).unwrap();
        assert!(c.passed, "{}", c.line());
    }

    #[test]
    fn corrupted_corrections_are_caught() {
        let bad = CorrectionTable::default().with_entry(
            LogicalBellKind::PSI_PLUS,
            PauliCorrection { x: false, z: true },
        );
        let t = Teleporter {
            corrections: bad,
            ..Default::default()
        };
        let c = teleportation(1000, 1, &t).unwrap();
        assert!(!c.passed);
        assert!(c.line().starts_with("FAIL teleportation"));
    }

    #[test]
    fn oracle_ties_on_full_erasure() {
        assert_eq!(oracle_decode(0, 0), Some(0));
        assert_eq!(oracle_decode(0, 0x7f), None);
    }
}
