//! Number formatting shared by every CSV and summary writer.
//!
//! Values are printed with 12 significant digits and a `.` decimal point,
//! independent of locale. Magnitudes outside `[1e-5, 1e15)` fall back to
//! exponent notation.

/// Significant digits used for every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `x` with [`SIGNIFICANT_DIGITS`] significant digits, trimming
/// trailing zeros.
pub fn sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    // Scientific formatting performs the correct rounding; re-lay the digits.
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();

    let body = if !(-5..15).contains(&exp) {
        let (lead, rest) = digits.split_at(1);
        let rest = rest.trim_end_matches('0');
        if rest.is_empty() {
            format!("{lead}e{exp}")
        } else {
            format!("{lead}.{rest}e{exp}")
        }
    } else if exp >= 0 {
        let split = exp as usize + 1;
        let (int, frac) = if split >= digits.len() {
            (
                format!("{digits}{}", "0".repeat(split - digits.len())),
                String::new(),
            )
        } else {
            (digits[..split].to_string(), digits[split..].to_string())
        };
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int
        } else {
            format!("{int}.{frac}")
        }
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{}", digits.trim_end_matches('0'))
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig(1.0), "1");
        assert_eq!(sig(1001.0), "1001");
        assert_eq!(sig(0.5), "0.5");
        assert_eq!(sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(sig(123456.7890123456), "123456.789012");
        assert_eq!(sig(0.000123456789012345), "0.000123456789012");
        assert_eq!(sig(9.999999999999995), "10");
        assert_eq!(sig(1.5e20), "1.5e20");
        assert_eq!(sig(2.5e-9), "2.5e-9");
        assert_eq!(sig(0.0), "0");
    }

    #[test]
    fn parses_back_within_precision() {
        for &x in &[std::f64::consts::PI, 1e-3, 7.123e10, 0.049999, 1.0e14 + 0.5] {
            let back: f64 = sig(x).parse().unwrap();
            assert!(((back - x) / x).abs() < 1e-11, "{x} -> {}", sig(x));
        }
    }
}
