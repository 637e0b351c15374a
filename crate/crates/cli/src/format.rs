//! Number formatting shared by all outputs.

use circle_finsler::Vec3;

const DIGITS: usize = 12;

/// Shortest form of `x` rounded to twelve significant digits, in the style of `%g`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..DIGITS as i32).contains(&exp) {
        trim(&format!("{:.*}", (DIGITS as i32 - 1 - exp) as usize, x))
    } else {
        format!("{}e{exp}", trim(mantissa))
    }
}

/// `x` rounded to twelve significant digits, for structured output.
pub fn round(x: f64) -> f64 {
    num(x).parse().unwrap_or(x)
}

pub fn round3(v: &Vec3) -> [f64; 3] {
    [round(v.x), round(v.y), round(v.z)]
}

fn trim(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// A CSV row of numbers.
pub fn row(values: &[f64]) -> String {
    let mut out = values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        let cases = [
            (4.0, "4"),
            (-0.0, "0"),
            (std::f64::consts::PI, "3.14159265359"),
            (8.0 * std::f64::consts::PI, "25.1327412287"),
            (1e-5, "1e-5"),
            (1.5e-6, "1.5e-6"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e12"),
            (-0.000123, "-0.000123"),
            (0.99999999999949, "0.999999999999"),
            (0.9999999999999999, "1"),
        ];
        for (x, s) in cases {
            assert_eq!(num(x), s, "{x}");
        }
    }

    #[test]
    fn rounding_is_idempotent() {
        for x in [1.0 / 3.0, 2.0f64.sqrt(), -7.123456789012345e-9] {
            assert_eq!(round(round(x)), round(x));
            assert_eq!(num(round(x)), num(x));
        }
    }
}
