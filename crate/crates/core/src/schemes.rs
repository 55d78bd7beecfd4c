//! Success probability versus average photon usage for four linear-optics
//! Bell-measurement schemes.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum SchemeId {
    GhzEncoded,
    Grice,
    ZaidiVanLoock,
    EwertVanLoock,
}

impl SchemeId {
    pub const ALL: [Self; 4] = [
        Self::GhzEncoded,
        Self::Grice,
        Self::ZaidiVanLoock,
        Self::EwertVanLoock,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::GhzEncoded => "ghz_encoded",
            Self::Grice => "grice",
            Self::ZaidiVanLoock => "zaidi_van_loock",
            Self::EwertVanLoock => "ewert_van_loock",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub scheme: SchemeId,
    pub nbar: f64,
    pub ps: f64,
    /// Whether `nbar` is reachable by an actual device of this scheme.
    pub physical: bool,
}

/// GHZ-encoded measurement with `nbar = 2N` photons.
pub fn ps_ghz_encoded(nbar: f64) -> f64 {
    1.0 - (-nbar / 2.0).exp2()
}

/// Ancilla-assisted scheme with `nbar = 2^Na` photons.
pub fn ps_grice(nbar: f64) -> f64 {
    1.0 - 1.0 / nbar
}

pub const ZAIDI_SQUEEZING: f64 = 0.6585;
pub const ZAIDI_NBAR: f64 = 6.00029;
pub const ZAIDI_PS: f64 = 0.643;

/// Mean photon number of the squeezing-assisted scheme at squeezing `r`.
pub fn zaidi_nbar(r: f64) -> f64 {
    2.0 * (2.0 * r).cosh() + 4.0 * r.sinh().powi(2)
}

pub fn zaidi_point() -> CurvePoint {
    CurvePoint {
        scheme: SchemeId::ZaidiVanLoock,
        nbar: ZAIDI_NBAR,
        ps: ZAIDI_PS,
        physical: true,
    }
}

/// Ancilla-assisted scheme with `nbar = 4 Nm + 2` photons.
pub fn ps_ewert(nbar: f64) -> f64 {
    1.0 - (-nbar / 4.0 - 0.5).exp2()
}

/// Variant with the exponent `-nbar/4` instead of `-nbar/4 - 1/2`.
pub fn ps_ewert_short_exponent(nbar: f64) -> f64 {
    1.0 - (-nbar / 4.0).exp2()
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9
}

pub fn is_physical(scheme: SchemeId, nbar: f64) -> bool {
    match scheme {
        SchemeId::GhzEncoded => nbar >= 2.0 && is_integer(nbar / 2.0),
        SchemeId::Grice => {
            let na = nbar.log2();
            nbar >= 2.0 && is_integer(na)
        }
        SchemeId::ZaidiVanLoock => (nbar - ZAIDI_NBAR).abs() < 1e-9,
        SchemeId::EwertVanLoock => nbar >= 2.0 && is_integer((nbar - 2.0) / 4.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurveOptions {
    pub ewert_short_exponent: bool,
}

pub fn ps_for(scheme: SchemeId, nbar: f64, opts: CurveOptions) -> Option<f64> {
    match scheme {
        SchemeId::GhzEncoded => Some(ps_ghz_encoded(nbar)),
        SchemeId::Grice => Some(ps_grice(nbar)),
        SchemeId::ZaidiVanLoock => None,
        SchemeId::EwertVanLoock => Some(if opts.ewert_short_exponent {
            ps_ewert_short_exponent(nbar)
        } else {
            ps_ewert(nbar)
        }),
    }
}

/// Grid `2, 2 + step, 2 + 2 step, ...` up to `nbar_max` (inclusive, with a
/// small tolerance for accumulated rounding).
pub fn nbar_grid(nbar_max: f64, step: f64) -> Vec<f64> {
    let count = ((nbar_max - 2.0) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| 2.0 + i as f64 * step).collect()
}

pub fn curves_on_grid(grid: &[f64], opts: CurveOptions) -> Vec<CurvePoint> {
    let mut out = Vec::new();
    for scheme in SchemeId::ALL {
        if scheme == SchemeId::ZaidiVanLoock {
            out.push(zaidi_point());
            continue;
        }
        for &nbar in grid {
            let ps = ps_for(scheme, nbar, opts).expect("continuous scheme");
            out.push(CurvePoint {
                scheme,
                nbar,
                ps,
                physical: is_physical(scheme, nbar),
            });
        }
    }
    out
}

/// Scheme-major, nbar-ascending samples of all four curves.
pub fn emit_curves(nbar_max: f64, step: f64, opts: CurveOptions) -> crate::Result<Vec<CurvePoint>> {
    if !nbar_max.is_finite() || nbar_max <= 2.0 {
        return Err(crate::Error::InvalidParameter(format!(
            "max nbar {nbar_max} must exceed 2"
        )));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(crate::Error::InvalidParameter(format!(
            "step {step} must be positive"
        )));
    }
    Ok(curves_on_grid(&nbar_grid(nbar_max, step), opts))
}
