//! Deterministic number formatting shared by reports and CSV output.

/// `printf("%.{digits}g")`: `digits` significant digits, trailing zeros trimmed,
/// scientific notation outside `1e-4 ≤ |x| < 10^digits`.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // round first so the exponent reflects the printed mantissa
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

/// `printf("%.{decimals}e")`: at least two exponent digits, explicit exponent sign.
pub fn fmt_exp(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return fmt_sig(x, 1);
    }
    let sci = format!("{:.*e}", decimals, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// `fmt_sig(x, 12)`.
pub fn fmt12(x: f64) -> String {
    fmt_sig(x, 12)
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(0.5), "0.5");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(-2.0 / 3.0), "-0.666666666667");
        assert_eq!(fmt12(123456.789), "123456.789");
        assert_eq!(fmt12(1e-7), "1e-07");
        assert_eq!(fmt12(1.5e-5), "1.5e-05");
        assert_eq!(fmt12(1e-4), "0.0001");
        assert_eq!(fmt12(1e12), "1e+12");
        assert_eq!(fmt12(999999999999.9), "1e+12");
        assert_eq!(fmt12(0.99999999999999), "1");
        assert_eq!(fmt_sig(std::f64::consts::PI, 3), "3.14");
        assert_eq!(fmt_exp(0.75, 6), "7.500000e-01");
        assert_eq!(fmt_exp(0.0, 6), "0.000000e+00");
        assert_eq!(fmt_exp(-1.5e-123, 2), "-1.50e-123");
        assert_eq!(fmt_exp(f64::NAN, 6), "nan");
    }
}
