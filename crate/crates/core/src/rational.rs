//! Exact rational costs.
//!
//! All move costs, objectives and fitness values are carried as exact
//! fractions so that "equal cost" is an equality test and the number of
//! silent moves can be read back from an objective value.

use num_integer::Integer;
use num_traits::{One, Zero};
use thiserror::Error;

pub type Rational = num_rational::Ratio<i128>;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse {input:?} as an exact rational")]
pub struct ParseRationalError {
    pub input: String,
}

/// Parses `"3"`, `"-1.25"`, `"3/2"` or `"1e-6"` exactly (no float round trip).
pub fn parse_rational(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        input: input.to_string(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: i128 = num.trim().parse().map_err(|_| err())?;
        let d: i128 = den.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let numer: i128 = if all_digits.is_empty() {
        0
    } else {
        all_digits.parse().map_err(|_| err())?
    };
    let scale = exponent - frac_part.len() as i32;
    if scale.unsigned_abs() > 36 {
        return Err(err());
    }
    let pow = 10i128.pow(scale.unsigned_abs());
    let mut value = if scale >= 0 {
        Rational::from_integer(numer.checked_mul(pow).ok_or_else(err)?)
    } else {
        Rational::new(numer, pow)
    };
    if negative {
        value = -value;
    }
    Ok(value)
}

/// Formats a rational as a terminating decimal when its denominator only has
/// factors 2 and 5, and as `n/d` otherwise.
pub fn format_rational(value: &Rational) -> String {
    let den = *value.denom();
    let mut rest = den;
    let (mut twos, mut fives) = (0u32, 0u32);
    while rest % 2 == 0 {
        rest /= 2;
        twos += 1;
    }
    while rest % 5 == 0 {
        rest /= 5;
        fives += 1;
    }
    if rest != 1 {
        return format!("{}/{}", value.numer(), den);
    }
    let digits = twos.max(fives);
    if digits == 0 {
        return value.numer().to_string();
    }
    let scale = 10i128.pow(digits);
    let scaled = value.numer() * (scale / den);
    let sign = if scaled.is_negative() { "-" } else { "" };
    let abs = scaled.abs();
    let (int_part, frac_part) = abs.div_rem(&scale);
    let frac = format!("{:0width$}", frac_part, width = digits as usize);
    format!("{sign}{int_part}.{}", frac.trim_end_matches('0'))
}

/// Lossy conversion for reporting only.
pub fn to_f64(value: &Rational) -> f64 {
    *value.numer() as f64 / *value.denom() as f64
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_forms_exactly() {
        assert_eq!(parse_rational("1.5").unwrap(), Rational::new(3, 2));
        assert_eq!(parse_rational("1e-6").unwrap(), Rational::new(1, 1_000_000));
        assert_eq!(parse_rational("0.000001").unwrap(), Rational::new(1, 1_000_000));
        assert_eq!(parse_rational("3/4").unwrap(), Rational::new(3, 4));
        assert_eq!(parse_rational("-2").unwrap(), Rational::from_integer(-2));
        assert_eq!(parse_rational(".5").unwrap(), Rational::new(1, 2));
        assert_eq!(parse_rational("0.95").unwrap(), Rational::new(19, 20));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_terminating_and_repeating() {
        assert_eq!(format_rational(&Rational::from_integer(3)), "3");
        assert_eq!(format_rational(&Rational::new(1, 1_000_000)), "0.000001");
        assert_eq!(format_rational(&(Rational::from_integer(2) + Rational::new(1, 1_000_000))), "2.000001");
        assert_eq!(format_rational(&Rational::new(-3, 2)), "-1.5");
        assert_eq!(format_rational(&Rational::new(1, 3)), "1/3");
    }
}
