//! Float serialization helpers.
//!
//! Series files carry 17 significant digits (round-trips every f64 exactly);
//! table files carry 6 significant digits for human readers.

/// Full-precision text form, `d.dddddddddddddddde±ee`.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Six significant digits in plain decimal notation.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.000000".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}
