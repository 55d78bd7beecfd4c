//! Few-photon linear optics in the Fock basis.
//!
//! Modes are flat-indexed as `2 * port + polarization` with `H = 0`, `V = 1`.
//! A [`ModeTransform`] acts on creation operators by
//! `a†_i -> sum_j u[j][i] a†_j`, so for one photon it is ordinary
//! matrix-vector multiplication of the amplitude vector.
//!
//! Beam splitters use the real rotation convention
//! `[[cos t, sin t], [-sin t, cos t]]` on the two chosen modes. Any other
//! phase convention gives the same click statistics.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_PHOTON_CAP: usize = 2;
pub const UNITARITY_TOL: f64 = 1e-12;
pub const NORM_TOL: f64 = 1e-10;
pub const PRUNE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeIndex {
    pub port: usize,
    pub polarization: Polarization,
}

impl ModeIndex {
    pub const fn new(port: usize, polarization: Polarization) -> Self {
        Self { port, polarization }
    }

    pub const fn flat(&self) -> usize {
        2 * self.port
            + match self.polarization {
                Polarization::H => 0,
                Polarization::V => 1,
            }
    }

    pub const fn from_flat(index: usize) -> Self {
        let polarization = if index.is_multiple_of(2) {
            Polarization::H
        } else {
            Polarization::V
        };
        Self {
            port: index / 2,
            polarization,
        }
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.port, self.polarization)
    }
}

/// Photon counts per mode. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OccupationVector(Vec<u8>);

impl OccupationVector {
    pub fn new(counts: Vec<u8>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    pub fn mode_count(&self) -> usize {
        self.0.len()
    }

    fn factorial_product(&self) -> f64 {
        self.0.iter().map(|&c| factorial(c as usize)).product()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureOpticalState {
    mode_count: usize,
    cap: usize,
    amplitudes: BTreeMap<OccupationVector, Complex64>,
}

impl PureOpticalState {
    pub fn vacuum(mode_count: usize) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(
            OccupationVector(vec![0; mode_count]),
            Complex64::new(1.0, 0.0),
        );
        Self {
            mode_count,
            cap: DEFAULT_PHOTON_CAP,
            amplitudes,
        }
    }

    /// Builds a state from explicit Fock amplitudes. Not normalized.
    pub fn from_terms<I>(mode_count: usize, cap: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u8>, Complex64)>,
    {
        let mut amplitudes: BTreeMap<OccupationVector, Complex64> = BTreeMap::new();
        for (counts, amp) in terms {
            if counts.len() != mode_count {
                return Err(Error::DimensionMismatch {
                    expected: mode_count,
                    got: counts.len(),
                });
            }
            let occ = OccupationVector(counts);
            if occ.total() > cap {
                return Err(Error::PhotonCapExceeded {
                    total: occ.total(),
                    cap,
                });
            }
            *amplitudes.entry(occ).or_default() += amp;
        }
        amplitudes.retain(|_, a| a.norm() >= PRUNE_TOL);
        Ok(Self {
            mode_count,
            cap,
            amplitudes,
        })
    }

    /// `sum_k coef_k * prod_{m in modes_k} a†_m |0>`, normalized.
    ///
    /// Each product lists one flat mode index per photon; repeated modes give
    /// the usual `sqrt(n!)` Fock factor.
    pub fn from_creation_products(
        mode_count: usize,
        products: &[(Complex64, &[usize])],
    ) -> Result<Self> {
        let cap = products
            .iter()
            .map(|(_, m)| m.len())
            .max()
            .unwrap_or(0)
            .max(DEFAULT_PHOTON_CAP);
        let mut terms = Vec::with_capacity(products.len());
        for (coef, modes) in products {
            let mut counts = vec![0u8; mode_count];
            for &m in modes.iter() {
                if m >= mode_count {
                    return Err(Error::InvalidMode(format!(
                        "mode {m} out of range {mode_count}"
                    )));
                }
                counts[m] += 1;
            }
            let occ = OccupationVector(counts);
            let amp = coef * occ.factorial_product().sqrt();
            terms.push((occ.0, amp));
        }
        Self::from_terms(mode_count, cap, terms)?.normalized()
    }

    pub fn with_cap(mut self, cap: usize) -> Result<Self> {
        if let Some(max) = self.amplitudes.keys().map(OccupationVector::total).max() {
            if max > cap {
                return Err(Error::PhotonCapExceeded { total: max, cap });
            }
        }
        self.cap = cap;
        Ok(self)
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if n <= 0.0 {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        let scale = 1.0 / n.sqrt();
        for a in self.amplitudes.values_mut() {
            *a *= scale;
        }
        Ok(self)
    }

    pub fn mode_count(&self) -> usize {
        self.mode_count
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, counts: &[u8]) -> Complex64 {
        self.amplitudes
            .get(&OccupationVector(counts.to_vec()))
            .copied()
            .unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OccupationVector, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn support_len(&self) -> usize {
        self.amplitudes.len()
    }

    /// `|<self|other>|^2`.
    pub fn overlap_sqr(&self, other: &Self) -> f64 {
        let inner: Complex64 = self
            .amplitudes
            .iter()
            .filter_map(|(k, a)| other.amplitudes.get(k).map(|b| a.conj() * b))
            .sum();
        inner.norm_sqr()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeTransform {
    dim: usize,
    matrix: Vec<Complex64>,
}

impl ModeTransform {
    /// Row-major square matrix; rejected unless unitary within 1e-12.
    pub fn new(dim: usize, matrix: Vec<Complex64>) -> Result<Self> {
        if matrix.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: matrix.len(),
            });
        }
        let t = Self { dim, matrix };
        let deviation = t.unitarity_deviation();
        if deviation > UNITARITY_TOL {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(t)
    }

    pub fn identity(dim: usize) -> Self {
        let mut matrix = vec![Complex64::default(); dim * dim];
        for i in 0..dim {
            matrix[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, matrix }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim + col]
    }

    /// Max-entry norm of `U†U - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::default();
                for k in 0..n {
                    acc += self.get(k, i).conj() * self.get(k, j);
                }
                if i == j {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }

    /// Matrix product `next * self`: apply `self` first.
    pub fn then(&self, next: &ModeTransform) -> Result<ModeTransform> {
        if next.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: next.dim,
            });
        }
        let n = self.dim;
        let mut matrix = vec![Complex64::default(); n * n];
        for i in 0..n {
            for j in 0..n {
                matrix[i * n + j] = (0..n).map(|k| next.get(i, k) * self.get(k, j)).sum();
            }
        }
        Ok(ModeTransform { dim: n, matrix })
    }
}

pub fn build_beamsplitter(
    theta: f64,
    modes: (ModeIndex, ModeIndex),
    mode_count: usize,
) -> Result<ModeTransform> {
    let (a, b) = (modes.0.flat(), modes.1.flat());
    if a == b {
        return Err(Error::InvalidMode(format!(
            "beam splitter needs distinct modes, got {} twice",
            modes.0
        )));
    }
    if a >= mode_count || b >= mode_count {
        return Err(Error::InvalidMode(format!(
            "modes {} and {} must lie below {mode_count}",
            modes.0, modes.1
        )));
    }
    let (s, c) = theta.sin_cos();
    let mut t = ModeTransform::identity(mode_count);
    t.matrix[a * mode_count + a] = Complex64::new(c, 0.0);
    t.matrix[a * mode_count + b] = Complex64::new(s, 0.0);
    t.matrix[b * mode_count + a] = Complex64::new(-s, 0.0);
    t.matrix[b * mode_count + b] = Complex64::new(c, 0.0);
    Ok(t)
}

/// Hadamard-type block on the H/V modes of `port`: `|+> -> |H>`, `|-> -> |V>`.
///
/// Read the other way round, it re-expresses a state whose two slots on this
/// port are labelled `+`/`-` in the physical H/V labelling.
pub fn build_waveplate_diag_to_hv(port: usize, mode_count: usize) -> Result<ModeTransform> {
    let h = ModeIndex::new(port, Polarization::H).flat();
    let v = ModeIndex::new(port, Polarization::V).flat();
    if v >= mode_count {
        return Err(Error::InvalidMode(format!(
            "port {port} needs modes below {mode_count}"
        )));
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut t = ModeTransform::identity(mode_count);
    t.matrix[h * mode_count + h] = Complex64::new(r, 0.0);
    t.matrix[h * mode_count + v] = Complex64::new(r, 0.0);
    t.matrix[v * mode_count + h] = Complex64::new(r, 0.0);
    t.matrix[v * mode_count + v] = Complex64::new(-r, 0.0);
    Ok(t)
}

pub fn apply_transform(state: &PureOpticalState, u: &ModeTransform) -> Result<PureOpticalState> {
    let m = state.mode_count;
    if u.dim != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: u.dim,
        });
    }
    let deviation = u.unitarity_deviation();
    if deviation > UNITARITY_TOL {
        return Err(Error::NonUnitary { deviation });
    }

    let mut out: BTreeMap<OccupationVector, Complex64> = BTreeMap::new();
    for (occ, &amp) in &state.amplitudes {
        let photons: Vec<usize> = occ
            .0
            .iter()
            .enumerate()
            .flat_map(|(mode, &c)| std::iter::repeat_n(mode, c as usize))
            .collect();
        let input_norm = occ.factorial_product().sqrt();
        // Each photon independently picks an output mode; the multinomial
        // coefficients come out of summing identical monomials.
        let n = photons.len();
        let mut choice = vec![0usize; n];
        loop {
            let mut coef = amp / input_norm;
            let mut counts = vec![0u8; m];
            for (p, &j) in choice.iter().enumerate() {
                coef *= u.get(j, photons[p]);
                counts[j] += 1;
            }
            if coef.norm() > 0.0 {
                let key = OccupationVector(counts);
                let fock = key.factorial_product().sqrt();
                *out.entry(key).or_default() += coef * fock;
            }
            // odometer over m^n choices
            let mut k = 0;
            while k < n {
                choice[k] += 1;
                if choice[k] < m {
                    break;
                }
                choice[k] = 0;
                k += 1;
            }
            if k == n {
                break;
            }
        }
    }
    out.retain(|_, a| a.norm() >= PRUNE_TOL);
    Ok(PureOpticalState {
        mode_count: m,
        cap: state.cap,
        amplitudes: out,
    })
}

pub fn apply_all(state: &PureOpticalState, circuit: &[ModeTransform]) -> Result<PureOpticalState> {
    circuit
        .iter()
        .try_fold(state.clone(), |s, u| apply_transform(&s, u))
}

/// Sorted set of detector modes that registered at least one photon.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct ClickPattern(Vec<usize>);

impl ClickPattern {
    pub fn new(mut clicked: Vec<usize>) -> Self {
        clicked.sort_unstable();
        clicked.dedup();
        Self(clicked)
    }

    pub fn clicked(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

pub fn click_distribution(
    state: &PureOpticalState,
    detector_modes: &[usize],
) -> Result<BTreeMap<ClickPattern, f64>> {
    let n = state.norm_sqr();
    if (n - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm_sqr: n });
    }
    let mut dist: BTreeMap<ClickPattern, f64> = BTreeMap::new();
    for (occ, amp) in &state.amplitudes {
        let mut clicked = Vec::new();
        for (mode, &c) in occ.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !detector_modes.contains(&mode) {
                return Err(Error::InvalidMode(format!(
                    "photons in undetected mode {}",
                    ModeIndex::from_flat(mode)
                )));
            }
            clicked.push(mode);
        }
        *dist.entry(ClickPattern::new(clicked)).or_default() += amp.norm_sqr();
    }
    Ok(dist)
}
