/// Formats `v` with six significant digits, like C's `%g` but always
/// keeping a decimal point on plain numbers (`1.0`, `20.0`).
pub fn sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.0".into();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{exp}");
    }
    let plain = format!("{:.*}", (5 - exp) as usize, v);
    let plain = if plain.contains('.') {
        plain.trim_end_matches('0').to_string()
    } else {
        plain
    };
    if plain.ends_with('.') {
        format!("{plain}0")
    } else {
        plain
    }
}

/// JSON-safe number: infinities become strings.
pub fn json_num(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or_else(|| serde_json::Value::String(sig6(v)))
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(f64::INFINITY), "inf");
        assert_eq!(sig6(1.0), "1.0");
        assert_eq!(sig6(20.0), "20.0");
        assert_eq!(sig6(29.287123), "29.2871");
        assert_eq!(sig6(0.999999_7), "1.0");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(1e-14), "1e-14");
        assert_eq!(sig6(-0.000123), "-0.000123");
    }
}
