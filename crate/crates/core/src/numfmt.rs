//! Fixed-precision number formatting shared by every text output.
//!
//! Values are rounded to 9 significant digits and then printed with the
//! shortest representation that parses back to the rounded value, so a
//! value that has already been quantized survives a write/read cycle
//! bit-for-bit.

/// Round `v` to 9 significant decimal digits.
pub fn quantize_sig9(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    // `{:.8e}` is correctly rounded, so the parse is exact for its output.
    format!("{v:.8e}").parse().expect("scientific format always parses")
}

/// Format `v` with 9 significant digits in plain (non-exponent) notation.
pub fn format_sig9(v: f64) -> String {
    format!("{}", quantize_sig9(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_nine_digits() {
        assert_eq!(format_sig9(1.234_567_891_23), "1.23456789");
        assert_eq!(format_sig9(30.000_000_04), "30");
        assert_eq!(format_sig9(0.0), "0");
        assert_eq!(format_sig9(-2.5), "-2.5");
        assert_eq!(format_sig9(123_456_789_012.0), "123456789000");
    }

    #[test]
    fn quantized_values_round_trip() {
        for &v in &[0.1, 1.0 / 3.0, 60.123_456_789_1, -7.777e-5, 1e-12] {
            let q = quantize_sig9(v);
            let back: f64 = format_sig9(q).parse().unwrap();
            assert_eq!(back.to_bits(), q.to_bits(), "{v}");
            assert_eq!(quantize_sig9(q).to_bits(), q.to_bits());
        }
    }
}
