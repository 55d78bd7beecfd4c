//! Fixed decimal formatting for reports.

/// Ten significant digits, trailing zeros removed. Values below 1e-6 in
/// magnitude use scientific notation.
pub fn sig10(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&mag) {
        return format!("{x:.9e}");
    }
    let decimals = (9 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Three-decimal scientific notation, e.g. `1.410e-3`.
pub fn sci3(x: f64) -> String {
    format!("{x:.3e}")
}
