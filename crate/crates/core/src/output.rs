//! Stable text formatting for CSV output.

/// Significant digits in every emitted number.
pub const SIGNIFICANT_DIGITS: usize = 12;

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// C-style `%.12g`: fixed notation for decimal exponents in `[-4, 12)`,
/// scientific otherwise, trailing zeros removed.
pub fn fmt_g(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIGNIFICANT_DIGITS as i32).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

/// Joins formatted fields with commas and terminates the line with LF.
pub fn csv_line(fields: &[f64]) -> String {
    let mut line = fields.iter().map(|&v| fmt_g(v)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}
