//! Deterministic number formatting for emitted artifacts.
//!
//! All data files use 17 significant digits, enough to round-trip any f64,
//! so identical configurations produce byte-identical outputs.

/// 17 significant digits, scientific notation.
pub fn f64_full(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_f64() {
        for x in [0.1, -3.25e-17, 123456.789, std::f64::consts::PI] {
            let s = f64_full(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x, back);
        }
    }
}
