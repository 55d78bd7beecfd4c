//! GHZ-encoded logical qubits, the N-pair logical Bell measurement, and
//! teleportation through a GHZ channel.
//!
//! # Branch engine
//!
//! Two N-photon logical qubits `sum_s c_s |s>^N` and `sum_t d_t |t>^N` (with
//! `s, t` in `{+, -}`) form at most four branches `(s, t)`. Every photon
//! pair sits in the product state `|s>|t>`, so a pair measurement only
//! multiplies each branch coefficient by an overlap `<o|s t>`:
//!
//! | projection | `++` | `+-` | `-+` | `--` |
//! |------------|------|------|------|------|
//! | Φ−         | 1/√2 | 0    | 0    | −1/√2 |
//! | Ψ−         | 0    | 1/√2 | −1/√2 | 0   |
//! | HH         | 1/2  | 1/2  | 1/2  | 1/2  |
//! | VV         | 1/2  | −1/2 | −1/2 | 1/2  |
//!
//! These are the four projectors of the two-photon analyser (Φ−, Ψ− identified; the
//! bunched single-click events are |HH> or |VV> in the physical basis).
//! While unmeasured photons of a qubit remain, its branches stay orthogonal;
//! once none remain they add coherently. Pair outcomes are sampled
//! sequentially from exact conditional probabilities.
//!
//! HH and VV factors are uniform within a Bell family, so a failed pair
//! never disturbs the relative sign that a later success reveals. That is
//! why teleportation has unit fidelity whenever one pair succeeds.
//!
//! When every pair fails the output is an eigenstate of logical X
//! (`|0_L> ± |1_L>`): the input was effectively measured in the X basis.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::bell::{BellKind, BsOutcome, Family, Sign};
use crate::error::{Error, Result};
use crate::loss::{sample_loss, LossEvent};

pub const AMPLITUDE_TOL: f64 = 1e-10;
const BRANCH_PRUNE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct LogicalQubit {
    pub n_photons: usize,
    pub amp_plus: Complex64,
    pub amp_minus: Complex64,
    pub photons_present: usize,
    /// Set when a loss event flipped the phase (audit only).
    pub z_flag: bool,
}

impl LogicalQubit {
    pub fn new(n_photons: usize, amp_plus: Complex64, amp_minus: Complex64) -> Result<Self> {
        if n_photons == 0 {
            return Err(Error::InvalidParameter(
                "a logical qubit needs at least one photon".into(),
            ));
        }
        let norm = amp_plus.norm_sqr() + amp_minus.norm_sqr();
        if (norm - 1.0).abs() > AMPLITUDE_TOL {
            return Err(Error::NotNormalized { norm_sqr: norm });
        }
        Ok(Self {
            n_photons,
            amp_plus,
            amp_minus,
            photons_present: n_photons,
            z_flag: false,
        })
    }

    /// Uniformly random point on the Bloch sphere.
    pub fn random<R: Rng + ?Sized>(n_photons: usize, rng: &mut R) -> Result<Self> {
        let cos_theta: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let a = ((1.0 + cos_theta) / 2.0).sqrt();
        let b = ((1.0 - cos_theta) / 2.0).sqrt();
        Self::new(
            n_photons,
            Complex64::new(a, 0.0),
            Complex64::from_polar(b, phi),
        )
    }

    pub fn amp(&self, s: Sign) -> Complex64 {
        match s {
            Sign::Plus => self.amp_plus,
            Sign::Minus => self.amp_minus,
        }
    }

    pub fn fidelity(&self, other: &LogicalQubit) -> f64 {
        (self.amp_plus.conj() * other.amp_plus + self.amp_minus.conj() * other.amp_minus).norm_sqr()
    }
}

/// Logical X: swaps the `|+>^N` and `|->^N` amplitudes (a phase flip on
/// every photon in the H/V basis).
pub fn logical_pauli_x(q: &LogicalQubit) -> LogicalQubit {
    LogicalQubit {
        amp_plus: q.amp_minus,
        amp_minus: q.amp_plus,
        ..q.clone()
    }
}

/// Logical Z: negates the `|->^N` amplitude (a bit flip on one photon).
pub fn logical_pauli_z(q: &LogicalQubit) -> LogicalQubit {
    LogicalQubit {
        amp_minus: -q.amp_minus,
        ..q.clone()
    }
}

pub fn logical_phase(q: &LogicalQubit, theta: f64) -> LogicalQubit {
    LogicalQubit {
        amp_minus: q.amp_minus * Complex64::from_polar(1.0, theta),
        ..q.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct LogicalBellKind {
    #[serde(serialize_with = "ser_family")]
    pub family: Family,
    #[serde(serialize_with = "ser_sign")]
    pub sign: Sign,
}

fn ser_family<S: serde::Serializer>(f: &Family, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match f {
        Family::Phi => "phi",
        Family::Psi => "psi",
    })
}

fn ser_sign<S: serde::Serializer>(v: &Sign, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(match v {
        Sign::Plus => "+",
        Sign::Minus => "-",
    })
}

impl LogicalBellKind {
    pub const PHI_PLUS: Self = Self {
        family: Family::Phi,
        sign: Sign::Plus,
    };
    pub const PHI_MINUS: Self = Self {
        family: Family::Phi,
        sign: Sign::Minus,
    };
    pub const PSI_PLUS: Self = Self {
        family: Family::Psi,
        sign: Sign::Plus,
    };
    pub const PSI_MINUS: Self = Self {
        family: Family::Psi,
        sign: Sign::Minus,
    };
    pub const ALL: [Self; 4] = [
        Self::PHI_PLUS,
        Self::PHI_MINUS,
        Self::PSI_PLUS,
        Self::PSI_MINUS,
    ];

    pub fn label(self) -> &'static str {
        BellKind::new(self.family, self.sign).label()
    }
}

impl fmt::Display for LogicalBellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(N)", self.label())
    }
}

/// Per-pair expansion of a logical Bell state: every sequence of pair Bell
/// states with nonzero amplitude, in lexicographic order (`+` before `-`).
pub fn expand_logical_bell(kind: LogicalBellKind, n: usize) -> Result<Vec<(Vec<BellKind>, f64)>> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if n > 30 {
        return Err(Error::InvalidParameter(format!(
            "expansion of n = {n} is too large"
        )));
    }
    let want_odd = kind.sign == Sign::Minus;
    let amp = 0.5f64.powf((n as f64 - 1.0) / 2.0);
    let mut out = Vec::with_capacity(1 << (n - 1));
    for mask in 0u32..(1 << n) {
        if (mask.count_ones() % 2 == 1) != want_odd {
            continue;
        }
        let seq = (0..n)
            .map(|i| {
                let minus = mask >> (n - 1 - i) & 1 == 1;
                BellKind::new(kind.family, if minus { Sign::Minus } else { Sign::Plus })
            })
            .collect();
        out.push((seq, amp));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "kind", rename_all = "snake_case")]
pub enum LogicalOutcome {
    Identified(LogicalBellKind),
    Fail,
}

impl LogicalOutcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Self::Identified(_))
    }
}

/// Parity classification of N pair outcomes. Zero identified minus-sign
/// outcomes of a family is even only if at least one success exists, which
/// it must for that family to be named at all.
pub fn classify_logical(outcomes: &[BsOutcome]) -> Result<LogicalOutcome> {
    if outcomes.is_empty() {
        return Err(Error::InvalidParameter("no pair outcomes".into()));
    }
    let phi = outcomes
        .iter()
        .filter(|&&o| o == BsOutcome::SuccessPhiMinus)
        .count();
    let psi = outcomes
        .iter()
        .filter(|&&o| o == BsOutcome::SuccessPsiMinus)
        .count();
    let sign = |count: usize| {
        if count.is_multiple_of(2) {
            Sign::Plus
        } else {
            Sign::Minus
        }
    };
    match (phi, psi) {
        (0, 0) => Ok(LogicalOutcome::Fail),
        (p, 0) => Ok(LogicalOutcome::Identified(LogicalBellKind {
            family: Family::Phi,
            sign: sign(p),
        })),
        (0, q) => Ok(LogicalOutcome::Identified(LogicalBellKind {
            family: Family::Psi,
            sign: sign(q),
        })),
        (p, q) => Err(Error::ImpossibleOutcome(format!(
            "{p} Φ− and {q} Ψ− successes in one logical Bell measurement"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogicalBMRecord {
    pub outcomes: Vec<BsOutcome>,
    pub result: LogicalOutcome,
    pub phi_minus_count: usize,
    pub psi_minus_count: usize,
}

impl LogicalBMRecord {
    pub fn from_outcomes(outcomes: Vec<BsOutcome>) -> Result<Self> {
        let result = classify_logical(&outcomes)?;
        let phi_minus_count = outcomes
            .iter()
            .filter(|&&o| o == BsOutcome::SuccessPhiMinus)
            .count();
        let psi_minus_count = outcomes
            .iter()
            .filter(|&&o| o == BsOutcome::SuccessPsiMinus)
            .count();
        Ok(Self {
            outcomes,
            result,
            phi_minus_count,
            psi_minus_count,
        })
    }
}

/// What one pair measurement projected onto.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairProjection {
    PhiMinus,
    PsiMinus,
    HH,
    VV,
    /// Only the first qubit's photon arrived; it was found in H (`false`) or V (`true`).
    FirstOnly(bool),
    /// Only the second qubit's photon arrived.
    SecondOnly(bool),
    /// Both photons lost.
    Deficit,
}

impl PairProjection {
    pub fn outcome(self) -> BsOutcome {
        match self {
            Self::PhiMinus => BsOutcome::SuccessPhiMinus,
            Self::PsiMinus => BsOutcome::SuccessPsiMinus,
            Self::HH | Self::VV | Self::FirstOnly(_) | Self::SecondOnly(_) => BsOutcome::Ambiguous,
            Self::Deficit => BsOutcome::ClickDeficit,
        }
    }

    pub fn overlap(self, s: Sign, t: Sign) -> f64 {
        match self {
            Self::PhiMinus => BellKind::PHI_MINUS.overlap(s, t),
            Self::PsiMinus => BellKind::PSI_MINUS.overlap(s, t),
            Self::HH => 0.5,
            Self::VV => 0.5 * s.value() * t.value(),
            Self::FirstOnly(v) => FRAC_1_SQRT_2 * if v { s.value() } else { 1.0 },
            Self::SecondOnly(v) => FRAC_1_SQRT_2 * if v { t.value() } else { 1.0 },
            Self::Deficit => 1.0,
        }
    }

    fn consumes(self) -> (bool, bool) {
        match self {
            Self::FirstOnly(_) => (true, false),
            Self::SecondOnly(_) => (false, true),
            Self::Deficit => (false, false),
            _ => (true, true),
        }
    }

    fn candidates(first_present: bool, second_present: bool) -> &'static [PairProjection] {
        match (first_present, second_present) {
            (true, true) => &[Self::PhiMinus, Self::PsiMinus, Self::HH, Self::VV],
            (true, false) => &[Self::FirstOnly(false), Self::FirstOnly(true)],
            (false, true) => &[Self::SecondOnly(false), Self::SecondOnly(true)],
            (false, false) => &[Self::Deficit],
        }
    }
}

const SIGNS: [Sign; 2] = [Sign::Plus, Sign::Minus];

fn sign_index(s: Sign) -> usize {
    match s {
        Sign::Plus => 0,
        Sign::Minus => 1,
    }
}

/// Joint state of two GHZ-type qubits (optionally with a third block that
/// copies the second qubit's sign, the receiver's half of a teleportation
/// channel).
#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    /// `coeff[s][t]`, index 0 is `+`.
    coeff: [[Complex64; 2]; 2],
    first_remaining: usize,
    second_remaining: usize,
    has_output: bool,
    per_pair_projections: Vec<PairProjection>,
}

impl BranchState {
    pub fn logical_bell(kind: LogicalBellKind, n: usize) -> Self {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let mut coeff = [[Complex64::default(); 2]; 2];
        let minus = r * kind.sign.value();
        match kind.family {
            Family::Phi => {
                coeff[0][0] = r;
                coeff[1][1] = minus;
            }
            Family::Psi => {
                coeff[0][1] = r;
                coeff[1][0] = minus;
            }
        }
        Self {
            coeff,
            first_remaining: n,
            second_remaining: n,
            has_output: false,
            per_pair_projections: vec![],
        }
    }

    /// Input qubit joined with the channel `(|+>^N|+>^N + |->^N|->^N)/√2`.
    pub fn teleportation(input: &LogicalQubit) -> Self {
        let r = FRAC_1_SQRT_2;
        let mut coeff = [[Complex64::default(); 2]; 2];
        for s in SIGNS {
            coeff[sign_index(s)][0] = input.amp(s) * r;
            coeff[sign_index(s)][1] = input.amp(s) * r;
        }
        // Only the diagonal t = t' of channel halves exists; the output half
        // copies t, so coeff[s][t] is the whole story.
        Self {
            coeff,
            first_remaining: input.photons_present,
            second_remaining: input.n_photons,
            has_output: true,
            per_pair_projections: vec![],
        }
    }

    pub fn coefficient(&self, s: Sign, t: Sign) -> Complex64 {
        self.coeff[sign_index(s)][sign_index(t)]
    }

    pub fn per_pair_projections(&self) -> &[PairProjection] {
        &self.per_pair_projections
    }

    pub fn branch_count(&self) -> usize {
        self.coeff
            .iter()
            .flatten()
            .filter(|c| c.norm() > 0.0)
            .count()
    }

    /// Squared norm, adding branches coherently over any qubit that has no
    /// photon left to tell them apart.
    pub fn norm_sqr(&self) -> f64 {
        let s_known = self.first_remaining > 0;
        let t_known = self.second_remaining > 0 || self.has_output;
        let c = &self.coeff;
        match (s_known, t_known) {
            (true, true) => c.iter().flatten().map(|x| x.norm_sqr()).sum(),
            (true, false) => (0..2).map(|s| (c[s][0] + c[s][1]).norm_sqr()).sum(),
            (false, true) => (0..2).map(|t| (c[0][t] + c[1][t]).norm_sqr()).sum(),
            (false, false) => (c[0][0] + c[0][1] + c[1][0] + c[1][1]).norm_sqr(),
        }
    }

    pub fn project(&self, proj: PairProjection) -> Self {
        let mut next = self.clone();
        for s in SIGNS {
            for t in SIGNS {
                next.coeff[sign_index(s)][sign_index(t)] *= proj.overlap(s, t);
            }
        }
        let (a, b) = proj.consumes();
        if a {
            next.first_remaining = next.first_remaining.saturating_sub(1);
        }
        if b {
            next.second_remaining = next.second_remaining.saturating_sub(1);
        }
        next.per_pair_projections.push(proj);
        next.prune();
        next
    }

    fn prune(&mut self) {
        let max = self
            .coeff
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        for c in self.coeff.iter_mut().flatten() {
            if c.norm() < BRANCH_PRUNE * max.max(f64::MIN_POSITIVE) {
                *c = Complex64::default();
            }
        }
    }

    fn flip_sign(&mut self, first: bool) {
        for s in SIGNS {
            for t in SIGNS {
                let minus = if first {
                    s == Sign::Minus
                } else {
                    t == Sign::Minus
                };
                if minus {
                    self.coeff[sign_index(s)][sign_index(t)] *= -1.0;
                }
            }
        }
    }

    /// Removes `ev.k` lost photons from one qubit. While photons of that
    /// qubit survive, the loss is a Z flip with probability exactly 1/2 and
    /// the event's XOR coin is used; when none survive the environment's
    /// H/V record is drawn from the Born rule.
    fn apply_loss_event<R: Rng + ?Sized>(&mut self, first: bool, ev: &LossEvent, rng: &mut R) {
        if ev.k == 0 {
            return;
        }
        let remaining = if first {
            &mut self.first_remaining
        } else {
            &mut self.second_remaining
        };
        *remaining = remaining.saturating_sub(ev.k);
        let survivors = *remaining > 0 || (!first && self.has_output);
        if survivors {
            if ev.z_flip {
                self.flip_sign(first);
            }
            return;
        }
        // The last lost photon decides the sign: measure it in H/V.
        // Temporarily mark one photon as present so the branches are still
        // orthogonal before the projection.
        if first {
            self.first_remaining = 1;
        } else {
            self.second_remaining = 1;
        }
        let options = if first {
            [
                PairProjection::FirstOnly(false),
                PairProjection::FirstOnly(true),
            ]
        } else {
            [
                PairProjection::SecondOnly(false),
                PairProjection::SecondOnly(true),
            ]
        };
        let total = self.norm_sqr();
        let h = self.project(options[0]);
        let pick = if rng.random::<f64>() * total < h.norm_sqr() {
            h
        } else {
            self.project(options[1])
        };
        self.coeff = pick.coeff;
        if first {
            self.first_remaining = 0;
        } else {
            self.second_remaining = 0;
        }
        // the factor 1/√2 from the projection is the loss branch weight, not
        // a measured outcome; undo it so norms stay comparable
        for c in self.coeff.iter_mut().flatten() {
            *c *= std::f64::consts::SQRT_2;
        }
    }

    /// Samples one pair measurement from its exact conditional distribution.
    pub fn measure_pair<R: Rng + ?Sized>(
        &self,
        first_present: bool,
        second_present: bool,
        rng: &mut R,
    ) -> Self {
        let total = self.norm_sqr();
        let candidates = PairProjection::candidates(first_present, second_present);
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = None;
        for &proj in candidates {
            let next = self.project(proj);
            let w = next.norm_sqr();
            if w <= 0.0 {
                continue;
            }
            acc += w;
            if u < acc {
                return next;
            }
            last = Some(next);
        }
        last.unwrap_or_else(|| self.project(candidates[0]))
    }

    /// Output amplitudes of the receiver block, indexed by `t`.
    fn output_amplitudes(&self) -> [Complex64; 2] {
        let c = &self.coeff;
        if self.first_remaining > 0 {
            // still distinguishable: not a pure output state; callers measure all pairs first
            let a = (c[0][0].norm_sqr() + c[1][0].norm_sqr()).sqrt();
            let b = (c[0][1].norm_sqr() + c[1][1].norm_sqr()).sqrt();
            return [Complex64::new(a, 0.0), Complex64::new(b, 0.0)];
        }
        [c[0][0] + c[1][0], c[0][1] + c[1][1]]
    }
}

/// Which photons of a measured pair are exposed to loss before the
/// logical Bell measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossPlacement {
    /// Only the first (in-line) qubit loses photons; each pair is lossy with
    /// probability eta, giving failure probability ((1 + eta)/2)^N.
    #[default]
    FirstQubit,
    /// Both qubits lose photons independently.
    BothQubits,
}

pub fn success_probability(n: usize) -> f64 {
    1.0 - 0.5f64.powi(n as i32)
}

fn run_pairs<R: Rng + ?Sized>(
    mut state: BranchState,
    n: usize,
    first_loss: &LossEvent,
    second_loss: &LossEvent,
    rng: &mut R,
) -> Result<(BranchState, LogicalBMRecord)> {
    state.apply_loss_event(true, first_loss, rng);
    state.apply_loss_event(false, second_loss, rng);
    let mut outcomes = Vec::with_capacity(n);
    for i in 0..n {
        let first = !first_loss.mask.get(i).copied().unwrap_or(false);
        let second = !second_loss.mask.get(i).copied().unwrap_or(false);
        state = state.measure_pair(first, second, rng);
        outcomes.push(
            state
                .per_pair_projections
                .last()
                .expect("just measured")
                .outcome(),
        );
    }
    let record = LogicalBMRecord::from_outcomes(outcomes)?;
    Ok((state, record))
}

fn sample_losses<R: Rng + ?Sized>(
    n: usize,
    eta: f64,
    placement: LossPlacement,
    rng: &mut R,
) -> Result<(LossEvent, LossEvent)> {
    let first = sample_loss(n, eta, rng)?;
    let second = match placement {
        LossPlacement::FirstQubit => LossEvent::none(n),
        LossPlacement::BothQubits => sample_loss(n, eta, rng)?,
    };
    Ok((first, second))
}

/// One logical Bell measurement on the logical Bell state `input`.
pub fn measure_logical_bell<R: Rng + ?Sized>(
    input: LogicalBellKind,
    n: usize,
    eta: f64,
    placement: LossPlacement,
    rng: &mut R,
) -> Result<LogicalBMRecord> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let (first, second) = sample_losses(n, eta, placement, rng)?;
    let (_, record) = run_pairs(BranchState::logical_bell(input, n), n, &first, &second, rng)?;
    Ok(record)
}

/// Every lossless pair-outcome sequence for a logical Bell input, with its
/// exact probability.
pub fn enumerate_logical_bell(input: LogicalBellKind, n: usize) -> Vec<(Vec<PairProjection>, f64)> {
    fn walk(state: BranchState, left: usize, out: &mut Vec<(Vec<PairProjection>, f64)>) {
        if left == 0 {
            let p = state.norm_sqr();
            out.push((state.per_pair_projections, p));
            return;
        }
        for &proj in PairProjection::candidates(true, true) {
            let next = state.project(proj);
            if next.norm_sqr() > 0.0 {
                walk(next, left - 1, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(BranchState::logical_bell(input, n), n, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PauliCorrection {
    pub x: bool,
    pub z: bool,
}

impl PauliCorrection {
    /// Applies X (if set) and then Z (if set).
    pub fn apply(self, q: &LogicalQubit) -> LogicalQubit {
        let q = if self.x {
            logical_pauli_x(q)
        } else {
            q.clone()
        };
        if self.z {
            logical_pauli_z(&q)
        } else {
            q
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorrectionTable {
    entries: [PauliCorrection; 4],
}

impl Default for CorrectionTable {
    fn default() -> Self {
        let p = |x, z| PauliCorrection { x, z };
        Self {
            entries: [
                p(false, false),
                p(false, true),
                p(true, false),
                p(true, true),
            ],
        }
    }
}

impl CorrectionTable {
    pub fn with_entry(mut self, kind: LogicalBellKind, c: PauliCorrection) -> Self {
        self.entries[Self::index(kind)] = c;
        self
    }

    pub fn get(&self, kind: LogicalBellKind) -> PauliCorrection {
        self.entries[Self::index(kind)]
    }

    fn index(kind: LogicalBellKind) -> usize {
        LogicalBellKind::ALL
            .iter()
            .position(|&k| k == kind)
            .expect("known kind")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TeleportStatus {
    Success,
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportRecord {
    pub status: TeleportStatus,
    pub correction: Option<PauliCorrection>,
    pub output: LogicalQubit,
    pub fidelity: f64,
    pub measurement: LogicalBMRecord,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Teleporter {
    pub corrections: CorrectionTable,
    pub placement: LossPlacement,
}

impl Teleporter {
    pub fn teleport<R: Rng + ?Sized>(
        &self,
        input: &LogicalQubit,
        eta: f64,
        rng: &mut R,
    ) -> Result<TeleportRecord> {
        let n = input.n_photons;
        let (first, second) = sample_losses(input.photons_present, eta, self.placement, rng)?;
        let mut first_mask = first.mask.clone();
        first_mask.resize(n, true);
        let first = LossEvent {
            mask: first_mask,
            ..first
        };
        let state = BranchState::teleportation(input);
        let (state, measurement) = run_pairs(state, n, &first, &second, rng)?;

        let [a, b] = state.output_amplitudes();
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        let raw = LogicalQubit {
            n_photons: n,
            amp_plus: a / norm,
            amp_minus: b / norm,
            photons_present: n,
            z_flag: false,
        };
        let (status, correction, output) = match measurement.result {
            LogicalOutcome::Identified(kind) => {
                let c = self.corrections.get(kind);
                (TeleportStatus::Success, Some(c), c.apply(&raw))
            }
            LogicalOutcome::Fail => (TeleportStatus::Fail, None, raw),
        };
        let fidelity = input.fidelity(&output);
        Ok(TeleportRecord {
            status,
            correction,
            output,
            fidelity,
            measurement,
        })
    }
}

pub fn teleport<R: Rng + ?Sized>(
    input: &LogicalQubit,
    eta: f64,
    rng: &mut R,
) -> Result<TeleportRecord> {
    Teleporter::default().teleport(input, eta, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;
    use std::collections::HashMap;

    fn q(a: f64, b: Complex64) -> LogicalQubit {
        LogicalQubit::new(3, Complex64::new(a, 0.0), b).unwrap()
    }

    #[test]
    fn expansion_examples() {
        let three = expand_logical_bell(LogicalBellKind::PHI_PLUS, 3).unwrap();
        let labels: Vec<String> = three
            .iter()
            .map(|(s, _)| s.iter().map(|k| k.label()).collect::<Vec<_>>().join(" "))
            .collect();
        assert_eq!(
            labels,
            [
                "phi+ phi+ phi+",
                "phi+ phi- phi-",
                "phi- phi+ phi-",
                "phi- phi- phi+"
            ]
        );
        assert!(three.iter().all(|(_, a)| (a - 0.5).abs() < 1e-15));

        let one = expand_logical_bell(LogicalBellKind::PHI_PLUS, 1).unwrap();
        assert_eq!(one, vec![(vec![BellKind::PHI_PLUS], 1.0)]);

        let two = expand_logical_bell(LogicalBellKind::PSI_MINUS, 2).unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].0, vec![BellKind::PSI_PLUS, BellKind::PSI_MINUS]);
        assert_eq!(two[1].0, vec![BellKind::PSI_MINUS, BellKind::PSI_PLUS]);
        assert!(two.iter().all(|(_, a)| (a - FRAC_1_SQRT_2).abs() < 1e-15));
        assert!(expand_logical_bell(LogicalBellKind::PHI_PLUS, 0).is_err());
    }

    #[test]
    fn expansion_parity_and_norm() {
        for n in 1..=10 {
            for kind in LogicalBellKind::ALL {
                let terms = expand_logical_bell(kind, n).unwrap();
                assert_eq!(terms.len(), 1 << (n - 1));
                // floor(N/2)+1 (Plus) or floor((N-1)/2)+1 (Minus) distinct minus-counts
                let counts: std::collections::BTreeSet<usize> = terms
                    .iter()
                    .map(|(s, _)| s.iter().filter(|k| k.sign == Sign::Minus).count())
                    .collect();
                let want = if kind.sign == Sign::Plus {
                    n / 2 + 1
                } else {
                    (n - 1) / 2 + 1
                };
                assert_eq!(counts.len(), want);
                let norm: f64 = terms.iter().map(|(_, a)| a * a).sum();
                assert!((norm - 1.0).abs() < 1e-12);
                for (seq, _) in &terms {
                    assert!(seq.iter().all(|k| k.family == kind.family));
                    let minus = seq.iter().filter(|k| k.sign == Sign::Minus).count();
                    assert_eq!(minus % 2 == 1, kind.sign == Sign::Minus);
                }
            }
        }
    }

    #[test]
    fn classify_examples() {
        use BsOutcome::*;
        assert_eq!(
            classify_logical(&[SuccessPhiMinus, SuccessPhiMinus, Ambiguous]).unwrap(),
            LogicalOutcome::Identified(LogicalBellKind::PHI_PLUS)
        );
        assert_eq!(
            classify_logical(&[Ambiguous, SuccessPsiMinus]).unwrap(),
            LogicalOutcome::Identified(LogicalBellKind::PSI_MINUS)
        );
        assert_eq!(
            classify_logical(&[Ambiguous, Ambiguous, ClickDeficit]).unwrap(),
            LogicalOutcome::Fail
        );
        assert!(matches!(
            classify_logical(&[SuccessPhiMinus, SuccessPsiMinus]),
            Err(Error::ImpossibleOutcome(_))
        ));
        assert!(classify_logical(&[]).is_err());
    }

    #[test]
    fn classification_ignores_order() {
        use BsOutcome::*;
        let base = [
            SuccessPhiMinus,
            Ambiguous,
            SuccessPhiMinus,
            ClickDeficit,
            SuccessPhiMinus,
        ];
        let want = classify_logical(&base).unwrap();
        let mut v = base.to_vec();
        for rot in 0..base.len() {
            v.rotate_left(1);
            assert_eq!(classify_logical(&v).unwrap(), want, "rotation {rot}");
            v.reverse();
            assert_eq!(classify_logical(&v).unwrap(), want);
        }
    }

    #[test]
    fn exact_success_probability() {
        // a plus-sign state fails only as all-Φ+ (or all-Ψ+) pairs; a
        // minus-sign state never fails, so the uniform average is 1 - 2^-N
        for n in 1..=4 {
            let mut average = 0.0;
            for kind in LogicalBellKind::ALL {
                let mut success = 0.0;
                let mut total = 0.0;
                for (projs, p) in enumerate_logical_bell(kind, n) {
                    total += p;
                    let outs: Vec<BsOutcome> = projs.iter().map(|x| x.outcome()).collect();
                    match classify_logical(&outs).unwrap() {
                        LogicalOutcome::Identified(k) => {
                            assert_eq!(k, kind);
                            success += p;
                        }
                        LogicalOutcome::Fail => {}
                    }
                }
                assert!((total - 1.0).abs() < 1e-12);
                let fail = if kind.sign == Sign::Plus {
                    0.5f64.powi(n as i32 - 1)
                } else {
                    0.0
                };
                assert!((success - (1.0 - fail)).abs() < 1e-12, "n={n} {kind}");
                average += success / 4.0;
            }
            assert!((average - success_probability(n)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn success_probability_values() {
        assert_eq!(success_probability(1), 0.5);
        assert_eq!(success_probability(2), 0.75);
        assert_eq!(success_probability(8), 0.996_093_75);
        assert_eq!((success_probability(8) * 1000.0).round() / 1000.0, 0.996);
    }

    #[test]
    fn paulis() {
        let a = q(0.6, Complex64::new(0.0, 0.8));
        let x = logical_pauli_x(&a);
        assert_eq!((x.amp_plus, x.amp_minus), (a.amp_minus, a.amp_plus));
        assert_eq!(logical_pauli_z(&logical_pauli_z(&a)), a);
        let p = logical_phase(&a, std::f64::consts::PI);
        let z = logical_pauli_z(&a);
        assert!((p.amp_minus - z.amp_minus).norm() < 1e-12);
        assert!((p.amp_plus - z.amp_plus).norm() < 1e-12);
    }

    #[test]
    fn lossless_teleport_has_unit_fidelity() {
        let f = StreamFactory::new(5);
        for n in 1..=6 {
            for i in 0..100u64 {
                let mut rng = f.child(n as u64).stream(i);
                let input = LogicalQubit::random(n, &mut rng).unwrap();
                let rec = teleport(&input, 0.0, &mut rng).unwrap();
                if rec.status == TeleportStatus::Success {
                    assert!(
                        (rec.fidelity - 1.0).abs() < 1e-10,
                        "n={n} fid={}",
                        rec.fidelity
                    );
                }
                assert_eq!(rec.output.photons_present, n);
            }
        }
    }

    #[test]
    fn failed_teleport_leaves_logical_x_eigenstate() {
        let f = StreamFactory::new(9);
        let mut seen = 0;
        for i in 0..400 {
            let mut rng = f.stream(i);
            let input = LogicalQubit::random(2, &mut rng).unwrap();
            let rec = teleport(&input, 0.0, &mut rng).unwrap();
            if rec.status == TeleportStatus::Fail {
                seen += 1;
                let out = &rec.output;
                // both branch families survive, with equal weight
                assert!((out.amp_plus.norm_sqr() - 0.5).abs() < 1e-10);
                assert!((out.amp_minus.norm_sqr() - 0.5).abs() < 1e-10);
                let ratio = out.amp_minus / out.amp_plus;
                assert!((ratio.im).abs() < 1e-10 && (ratio.re.abs() - 1.0).abs() < 1e-10);
            }
        }
        assert!(seen > 50);
    }

    #[test]
    fn fully_lossy_teleport_always_fails() {
        let mut rng = StreamFactory::new(2).stream(0);
        for n in 1..=5 {
            let input = LogicalQubit::random(n, &mut rng).unwrap();
            let rec = teleport(&input, 1.0, &mut rng).unwrap();
            assert_eq!(rec.status, TeleportStatus::Fail);
            assert!(rec
                .measurement
                .outcomes
                .iter()
                .all(|&o| o == BsOutcome::Ambiguous));
            let both = Teleporter {
                placement: LossPlacement::BothQubits,
                ..Default::default()
            };
            let rec = both.teleport(&input, 1.0, &mut rng).unwrap();
            assert!(rec
                .measurement
                .outcomes
                .iter()
                .all(|&o| o == BsOutcome::ClickDeficit));
        }
    }

    #[test]
    fn corrupted_table_breaks_fidelity() {
        let bad = CorrectionTable::default().with_entry(
            LogicalBellKind::PHI_MINUS,
            PauliCorrection { x: false, z: false },
        );
        let t = Teleporter {
            corrections: bad,
            ..Default::default()
        };
        let input = q(0.6, Complex64::new(0.8, 0.0));
        let f = StreamFactory::new(4);
        let worst = (0..200)
            .map(|i| t.teleport(&input, 0.0, &mut f.stream(i)).unwrap())
            .filter(|r| r.status == TeleportStatus::Success)
            .map(|r| r.fidelity)
            .fold(1.0, f64::min);
        assert!(worst < 0.1, "{worst}");
    }

    #[test]
    fn sampled_records_are_family_pure() {
        let f = StreamFactory::new(13);
        for i in 0..1_000_000u64 {
            let kind = LogicalBellKind::ALL[(i % 4) as usize];
            let rec =
                measure_logical_bell(kind, 3, 0.0, LossPlacement::FirstQubit, &mut f.stream(i))
                    .unwrap();
            assert!(rec.phi_minus_count == 0 || rec.psi_minus_count == 0);
            if let LogicalOutcome::Identified(k) = rec.result {
                assert_eq!(k, kind);
            }
        }
    }

    #[test]
    fn exact_enumeration_is_family_pure() {
        for n in 1..=3 {
            for kind in LogicalBellKind::ALL {
                for (projs, _) in enumerate_logical_bell(kind, n) {
                    let fams: std::collections::HashSet<_> = projs
                        .iter()
                        .filter_map(|p| match p {
                            PairProjection::PhiMinus => Some(Family::Phi),
                            PairProjection::PsiMinus => Some(Family::Psi),
                            _ => None,
                        })
                        .collect();
                    assert!(fams.len() <= 1);
                    assert!(fams.iter().all(|&f| f == kind.family));
                }
            }
        }
    }

    #[test]
    fn two_sided_loss_matches_its_closed_form() {
        let f = StreamFactory::new(31);
        let (n, eta, trials) = (3, 0.2, 100_000u64);
        let fails = (0..trials)
            .filter(|&i| {
                let kind = LogicalBellKind::ALL[(i % 4) as usize];
                !measure_logical_bell(kind, n, eta, LossPlacement::BothQubits, &mut f.stream(i))
                    .unwrap()
                    .result
                    .is_success()
            })
            .count();
        let p = crate::loss::bm_failure_prob_two_sided(n, eta);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((fails as f64 / trials as f64 - p).abs() < 3.0 * sigma);
        // and it is not the one-sided law
        let one = crate::loss::bm_failure_prob(n, eta);
        assert!((p - one).abs() > 10.0 * sigma);
    }

    #[test]
    fn branch_norm_decreases() {
        let mut rng = StreamFactory::new(21).stream(0);
        let mut s = BranchState::logical_bell(LogicalBellKind::PSI_PLUS, 4);
        let mut last = s.norm_sqr();
        assert!((last - 1.0).abs() < 1e-12);
        for _ in 0..4 {
            s = s.measure_pair(true, true, &mut rng);
            assert!(s.norm_sqr() <= last + 1e-15);
            assert!(s.branch_count() <= 4);
            last = s.norm_sqr();
        }
        assert_eq!(s.per_pair_projections().len(), 4);
    }

    #[test]
    fn two_pair_outcome_frequencies() {
        // uniform inputs, N = 2: failure iff both pairs give one click
        let f = StreamFactory::new(77);
        let mut hist: HashMap<bool, u64> = HashMap::new();
        let trials = 40_000u64;
        for i in 0..trials {
            let kind = LogicalBellKind::ALL[(i % 4) as usize];
            let rec =
                measure_logical_bell(kind, 2, 0.0, LossPlacement::FirstQubit, &mut f.stream(i))
                    .unwrap();
            *hist.entry(rec.result.is_success()).or_default() += 1;
        }
        let p = hist[&true] as f64 / trials as f64;
        let sigma = (0.75 * 0.25 / trials as f64).sqrt();
        assert!((p - 0.75).abs() < 3.0 * sigma, "{p}");
    }
}
