//! The single-photon-qubit Bell measurement.
//!
//! Input photons carry qubits in the diagonal basis `|±> = (|H> ± |V>)/√2`.
//! Input states are written with the two slots of each port labelled `+`
//! and `-`; the first circuit stage (one diag→HV waveplate per port)
//! re-expresses them in physical H/V modes. Doing the algebra:
//!
//! ```text
//! Φ−(diag) = (|HV> + |VH>)/√2 = Ψ+(HV)
//! Ψ−(diag) = (|HV> − |VH>)/√2 = Ψ−(HV)
//! Φ+(diag) = (|HH> + |VV>)/√2,  Ψ+(diag) = (|HH> − |VV>)/√2
//! ```
//!
//! A 50/50 splitter between the two ports (acting on both polarizations)
//! followed by polarization-resolved on-off detection then sends Ψ+(HV) to
//! one port with both polarizations, Ψ−(HV) to opposite ports, and the
//! |HH>/|VV> components to a single bunched click. The polarizing beam
//! splitters are just the H/V labels of the four detector modes.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::optics::{
    apply_all, build_beamsplitter, build_waveplate_diag_to_hv, click_distribution, ClickPattern,
    ModeIndex, ModeTransform, Polarization, PureOpticalState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Family {
    Phi,
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BellKind {
    pub family: Family,
    pub sign: Sign,
}

impl BellKind {
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

    pub const fn new(family: Family, sign: Sign) -> Self {
        Self { family, sign }
    }

    pub fn label(self) -> &'static str {
        match (self.family, self.sign) {
            (Family::Phi, Sign::Plus) => "phi+",
            (Family::Phi, Sign::Minus) => "phi-",
            (Family::Psi, Sign::Plus) => "psi+",
            (Family::Psi, Sign::Minus) => "psi-",
        }
    }

    /// `<self | s t>` for diagonal-basis product `|s>|t>`.
    pub fn overlap(self, s: Sign, t: Sign) -> f64 {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match self.family {
            Family::Phi if s == t => {
                r * if s == Sign::Minus {
                    self.sign.value()
                } else {
                    1.0
                }
            }
            Family::Psi if s != t => {
                r * if s == Sign::Minus {
                    self.sign.value()
                } else {
                    1.0
                }
            }
            _ => 0.0,
        }
    }
}

impl fmt::Display for BellKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BsOutcome {
    SuccessPhiMinus,
    SuccessPsiMinus,
    /// One click: a plus-sign Bell state, or a pair that lost one photon.
    Ambiguous,
    /// No click: both photons of the pair were lost.
    ClickDeficit,
}

impl BsOutcome {
    pub const ALL: [Self; 4] = [
        Self::SuccessPhiMinus,
        Self::SuccessPsiMinus,
        Self::Ambiguous,
        Self::ClickDeficit,
    ];

    pub fn clicks(self) -> usize {
        match self {
            Self::SuccessPhiMinus | Self::SuccessPsiMinus => 2,
            Self::Ambiguous => 1,
            Self::ClickDeficit => 0,
        }
    }

    pub fn is_success(self) -> bool {
        matches!(self, Self::SuccessPhiMinus | Self::SuccessPsiMinus)
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl serde::Serialize for BsOutcome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            BsOutcome::SuccessPhiMinus => "phi-",
            BsOutcome::SuccessPsiMinus => "psi-",
            BsOutcome::Ambiguous => "ambiguous",
            BsOutcome::ClickDeficit => "click_deficit",
        })
    }
}

pub const DEVICE_MODES: usize = 4;
pub const DETECTORS: [usize; 4] = [0, 1, 2, 3];

#[derive(Debug, Clone)]
pub struct BsDevice {
    circuit: Vec<ModeTransform>,
}

pub fn build_bs_device() -> BsDevice {
    let h0 = ModeIndex::new(0, Polarization::H);
    let v0 = ModeIndex::new(0, Polarization::V);
    let h1 = ModeIndex::new(1, Polarization::H);
    let v1 = ModeIndex::new(1, Polarization::V);
    let quarter = std::f64::consts::FRAC_PI_4;
    let circuit = vec![
        build_waveplate_diag_to_hv(0, DEVICE_MODES).expect("port 0 exists"),
        build_waveplate_diag_to_hv(1, DEVICE_MODES).expect("port 1 exists"),
        build_beamsplitter(quarter, (h0, h1), DEVICE_MODES).expect("valid modes"),
        build_beamsplitter(quarter, (v0, v1), DEVICE_MODES).expect("valid modes"),
    ];
    BsDevice { circuit }
}

impl BsDevice {
    pub fn circuit(&self) -> &[ModeTransform] {
        &self.circuit
    }

    pub fn composed(&self) -> ModeTransform {
        self.circuit
            .iter()
            .try_fold(ModeTransform::identity(DEVICE_MODES), |acc, u| acc.then(u))
            .expect("device transforms share a dimension")
    }

    pub fn detector_modes(&self) -> &'static [usize] {
        &DETECTORS
    }

    /// Click statistics for a two-photon input written in diagonal labelling.
    pub fn clicks_for(&self, input: &PureOpticalState) -> Result<BTreeMap<ClickPattern, f64>> {
        let out = apply_all(input, &self.circuit)?;
        click_distribution(&out, &DETECTORS)
    }

    pub fn outcome_table_for(&self, input: &PureOpticalState) -> Result<OutcomeTable> {
        let mut probs = [0.0; 4];
        for (pattern, p) in self.clicks_for(input)? {
            probs[classify_clicks(&pattern)?.index()] += p;
        }
        Ok(OutcomeTable { probs })
    }
}

/// Diagonal-labelled slot for port `p`: `+` sits in the H slot, `-` in V.
fn slot(port: usize, s: Sign) -> usize {
    2 * port + if s == Sign::Plus { 0 } else { 1 }
}

/// Two-photon Bell state, photon 1 in port 0 and photon 2 in port 1.
pub fn bell_input_state(kind: BellKind) -> PureOpticalState {
    let (first, second) = match kind.family {
        Family::Phi => ((Sign::Plus, Sign::Plus), (Sign::Minus, Sign::Minus)),
        Family::Psi => ((Sign::Plus, Sign::Minus), (Sign::Minus, Sign::Plus)),
    };
    let a = [slot(0, first.0), slot(1, first.1)];
    let b = [slot(0, second.0), slot(1, second.1)];
    PureOpticalState::from_creation_products(
        DEVICE_MODES,
        &[
            (Complex64::new(1.0, 0.0), &a),
            (Complex64::new(kind.sign.value(), 0.0), &b),
        ],
    )
    .expect("valid Bell state")
}

/// Product input `|s>|t>` in diagonal labelling.
pub fn product_input_state(s: Sign, t: Sign) -> PureOpticalState {
    PureOpticalState::from_creation_products(
        DEVICE_MODES,
        &[(Complex64::new(1.0, 0.0), &[slot(0, s), slot(1, t)])],
    )
    .expect("valid product state")
}

pub fn classify_clicks(pattern: &ClickPattern) -> Result<BsOutcome> {
    if let Some(&bad) = pattern.clicked().iter().find(|&&m| m >= DEVICE_MODES) {
        return Err(Error::MalformedClicks(format!(
            "mode {bad} is not a detector"
        )));
    }
    match pattern.clicked() {
        [] => Ok(BsOutcome::ClickDeficit),
        [_] => Ok(BsOutcome::Ambiguous),
        [a, b] if a / 2 == b / 2 => Ok(BsOutcome::SuccessPhiMinus),
        [_, _] => Ok(BsOutcome::SuccessPsiMinus),
        more => Err(Error::MalformedClicks(format!(
            "{} clicks from two photons",
            more.len()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeTable {
    probs: [f64; 4],
}

impl OutcomeTable {
    pub fn get(&self, outcome: BsOutcome) -> f64 {
        self.probs[outcome.index()]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn success(&self) -> f64 {
        self.get(BsOutcome::SuccessPhiMinus) + self.get(BsOutcome::SuccessPsiMinus)
    }

    pub fn iter(&self) -> impl Iterator<Item = (BsOutcome, f64)> + '_ {
        BsOutcome::ALL.iter().map(|&o| (o, self.get(o)))
    }
}

fn device() -> &'static BsDevice {
    static DEVICE: OnceLock<BsDevice> = OnceLock::new();
    DEVICE.get_or_init(build_bs_device)
}

pub fn exact_outcome_table(input: BellKind) -> OutcomeTable {
    static TABLES: OnceLock<[OutcomeTable; 4]> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        BellKind::ALL.map(|k| {
            device()
                .outcome_table_for(&bell_input_state(k))
                .expect("device circuit is valid for Bell inputs")
        })
    });
    tables[BellKind::ALL
        .iter()
        .position(|&k| k == input)
        .expect("known kind")]
}

/// Analyser success probability averaged over the four Bell inputs.
pub fn uniform_success_probability() -> f64 {
    BellKind::ALL
        .iter()
        .map(|&k| exact_outcome_table(k).success())
        .sum::<f64>()
        / 4.0
}

pub fn sample_bs<R: Rng + ?Sized>(input: BellKind, rng: &mut R) -> BsOutcome {
    let table = exact_outcome_table(input);
    // rounding dust below 1e-12 is not a real outcome
    let weights = table.probs.map(|p| if p < 1e-12 { 0.0 } else { p });
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = BsOutcome::Ambiguous;
    for (o, w) in BsOutcome::ALL.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        acc += w;
        last = *o;
        if u < acc {
            return *o;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamFactory;

    fn pattern(modes: &[ModeIndex]) -> ClickPattern {
        ClickPattern::new(modes.iter().map(ModeIndex::flat).collect())
    }

    const H0: ModeIndex = ModeIndex::new(0, Polarization::H);
    const V0: ModeIndex = ModeIndex::new(0, Polarization::V);
    const H1: ModeIndex = ModeIndex::new(1, Polarization::H);
    const V1: ModeIndex = ModeIndex::new(1, Polarization::V);

    #[test]
    fn device_is_unitary() {
        assert!(build_bs_device().composed().unitarity_deviation() <= 1e-12);
    }

    #[test]
    fn phi_minus_clicks_stay_in_one_port() {
        let clicks = device()
            .clicks_for(&bell_input_state(BellKind::PHI_MINUS))
            .unwrap();
        let total: f64 = clicks.values().sum();
        assert!((total - 1.0).abs() < 1e-10);
        for (p, prob) in &clicks {
            if *prob > 1e-12 {
                assert!(
                    *p == pattern(&[H0, V0]) || *p == pattern(&[H1, V1]),
                    "{p:?}"
                );
            }
        }
    }

    #[test]
    fn psi_minus_clicks_split_ports() {
        let clicks = device()
            .clicks_for(&bell_input_state(BellKind::PSI_MINUS))
            .unwrap();
        for (p, prob) in &clicks {
            if *prob > 1e-12 {
                let c = p.clicked();
                assert_eq!(c.len(), 2);
                assert_ne!(c[0] / 2, c[1] / 2);
            }
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify_clicks(&pattern(&[H0, V0])).unwrap(),
            BsOutcome::SuccessPhiMinus
        );
        assert_eq!(
            classify_clicks(&pattern(&[H0, V1])).unwrap(),
            BsOutcome::SuccessPsiMinus
        );
        let single = classify_clicks(&pattern(&[V1])).unwrap();
        assert_eq!(single, BsOutcome::Ambiguous);
        assert_eq!(single.clicks(), 1);
        assert_eq!(
            classify_clicks(&ClickPattern::default()).unwrap(),
            BsOutcome::ClickDeficit
        );
        assert!(matches!(
            classify_clicks(&pattern(&[H0, V0, H1])),
            Err(Error::MalformedClicks(_))
        ));
        assert!(matches!(
            classify_clicks(&ClickPattern::new(vec![4])),
            Err(Error::MalformedClicks(_))
        ));
    }

    #[test]
    fn classification_is_port_swap_covariant() {
        let swap = |m: usize| m ^ 2;
        for a in 0..4 {
            for b in (a + 1)..4 {
                let p = ClickPattern::new(vec![a, b]);
                let q = ClickPattern::new(vec![swap(a), swap(b)]);
                assert_eq!(classify_clicks(&p).unwrap(), classify_clicks(&q).unwrap());
            }
        }
    }

    #[test]
    fn exact_tables() {
        let phi_m = exact_outcome_table(BellKind::PHI_MINUS);
        assert!((phi_m.get(BsOutcome::SuccessPhiMinus) - 1.0).abs() < 1e-10);
        let psi_m = exact_outcome_table(BellKind::PSI_MINUS);
        assert!((psi_m.get(BsOutcome::SuccessPsiMinus) - 1.0).abs() < 1e-10);
        for k in [BellKind::PHI_PLUS, BellKind::PSI_PLUS] {
            assert!((exact_outcome_table(k).get(BsOutcome::Ambiguous) - 1.0).abs() < 1e-10);
        }
        assert!((uniform_success_probability() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn table_invariants() {
        for k in BellKind::ALL {
            let t = exact_outcome_table(k);
            assert!((t.total() - 1.0).abs() < 1e-10);
            let wrong = match k.family {
                Family::Phi => BsOutcome::SuccessPsiMinus,
                Family::Psi => BsOutcome::SuccessPhiMinus,
            };
            assert!(t.get(wrong) < 1e-12);
            let want = if k.sign == Sign::Minus { 1.0 } else { 0.0 };
            assert!((t.success() - want).abs() < 1e-12);
            assert!(t.get(BsOutcome::ClickDeficit) < 1e-12);
        }
    }

    #[test]
    fn product_inputs_match_projective_overlaps() {
        // The device is a projective measurement onto {Φ−, Ψ−, |HH>, |VV>}.
        for s in [Sign::Plus, Sign::Minus] {
            for t in [Sign::Plus, Sign::Minus] {
                let table = device()
                    .outcome_table_for(&product_input_state(s, t))
                    .unwrap();
                let phi = BellKind::PHI_MINUS.overlap(s, t).powi(2);
                let psi = BellKind::PSI_MINUS.overlap(s, t).powi(2);
                assert!((table.get(BsOutcome::SuccessPhiMinus) - phi).abs() < 1e-12);
                assert!((table.get(BsOutcome::SuccessPsiMinus) - psi).abs() < 1e-12);
                // |<HH|st>|^2 + |<VV|st>|^2 = 1/4 + 1/4
                assert!((table.get(BsOutcome::Ambiguous) - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_on_degenerate_rows() {
        let f = StreamFactory::new(3);
        let mut rng = f.stream(0);
        for _ in 0..100_000 {
            assert_eq!(
                sample_bs(BellKind::PHI_MINUS, &mut rng),
                BsOutcome::SuccessPhiMinus
            );
        }
        for seed in 0..50 {
            let mut rng = StreamFactory::new(seed).stream(1);
            assert_eq!(
                sample_bs(BellKind::PSI_PLUS, &mut rng),
                BsOutcome::Ambiguous
            );
        }
    }
}
