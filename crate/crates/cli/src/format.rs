//! Number rendering for CSV output.

/// Renders `x` like C's `%.17g`, but without exponent padding or a `+` sign:
/// `0.10000000000000001`, `1.5e-7`, `2.5e20`. Both zeros render as `0`.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent form always has an `e`");
    let exponent: i32 = exponent.parse().expect("exponent is an integer");
    if (-4..17).contains(&exponent) {
        let fixed = format!("{:.*}", (16 - exponent) as usize, x);
        trim_fraction(&fixed).to_string()
    } else {
        format!("{}e{exponent}", trim_fraction(mantissa))
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
