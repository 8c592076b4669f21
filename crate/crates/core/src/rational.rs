//! Nearest small rational for display.

/// Largest denominator tried by [`nearest_rational`].
pub const MAX_DENOMINATOR: i64 = 64;

/// `(p, q)` with `q ≤ MAX_DENOMINATOR` and `|x - p/q| ≤ tol`, smallest `q` first.
pub fn nearest_rational(x: f64, tol: f64) -> Option<(i64, i64)> {
    if !x.is_finite() || x.abs() > 1e12 {
        return None;
    }
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() <= tol).then_some((p as i64, q))
    })
}

/// `"1/3"`, `"-2"`, `"0"`; `None` when no small rational is within `tol`.
pub fn format_rational(x: f64, tol: f64) -> Option<String> {
    nearest_rational(x, tol).map(|(p, q)| if q == 1 { p.to_string() } else { format!("{p}/{q}") })
}

/// Decimal with the rational alongside when one matches within 1e-9.
pub fn format_coefficient(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    match format_rational(x, 1e-9) {
        Some(r) if r.contains('/') => format!("{x:.9} ({r})"),
        _ => format!("{x:.9}"),
    }
}
