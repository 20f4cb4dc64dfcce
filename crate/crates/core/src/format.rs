//! Number formatting shared by every CSV writer.

/// Significant digits written to CSV files.
pub const SIG_DIGITS: usize = 6;

/// Formats `v` with [`SIG_DIGITS`] significant digits in the style of C's
/// `%g`: fixed notation for moderate magnitudes, scientific otherwise, with
/// trailing zeros removed.
pub fn fmt_sig(v: f64) -> String {
    fmt_sig_digits(v, SIG_DIGITS)
}

pub fn fmt_sig_digits(v: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Parses a value written by [`fmt_sig`].
pub fn parse_sig(s: &str) -> Option<f64> {
    s.trim().parse().ok()
}
