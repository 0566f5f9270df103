//! Shared numeric formatting for the CSV and report surfaces.

/// Format with the given number of significant digits and trailing zeros
/// trimmed: `format_significant(80.0, 6) == "80"`,
/// `format_significant(-0.2, 6) == "-0.2"`.
///
/// The value is rounded through exponential notation and re-rendered with
/// Rust's shortest round-trip `Display`, which never uses an exponent.
pub fn format_significant(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.*e}", digits - 1)
        .parse()
        .expect("exponential form parses back");
    format!("{rounded}")
}

#[cfg(test)]
mod tests {
    use super::format_significant;

    #[test]
    fn trims_trailing_zeros() {
        assert_eq!(format_significant(80.0, 6), "80");
        assert_eq!(format_significant(-0.2, 6), "-0.2");
        assert_eq!(format_significant(100.0, 6), "100");
        assert_eq!(format_significant(0.0, 6), "0");
        assert_eq!(format_significant(-0.0, 6), "0");
    }

    #[test]
    fn rounds_to_significant_digits() {
        assert_eq!(format_significant(1234567.0, 6), "1234570");
        assert_eq!(format_significant(0.000123456789, 6), "0.000123457");
        assert_eq!(format_significant(-0.0585016244, 6), "-0.0585016");
    }
}
