//! Small helpers around `BigRational` shared by every module.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> BigInt {
    BigInt::from(value)
}

pub fn rat_from_int(value: &BigInt) -> Rat {
    Rat::from_integer(value.clone())
}

/// Fractional part in `[0, 1)`.
pub fn frac(value: &Rat) -> Rat {
    value - value.floor()
}

/// Least common multiple of the denominators (1 for an empty slice).
pub fn denominator_lcm<'a, I>(values: I) -> BigInt
where
    I: IntoIterator<Item = &'a Rat>,
{
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Formats a rational as `p/q` with `q > 0`, always including the denominator.
pub fn format_rational(value: &Rat) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Parses `p/q` or a bare integer `p`. Returns `None` on anything else,
/// including a zero denominator.
pub fn parse_rational(text: &str) -> Option<Rat> {
    let text = text.trim();
    let (numer, denom) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    if !is_integer_literal(numer) || !is_integer_literal(denom) {
        return None;
    }
    let numer: BigInt = numer.parse().ok()?;
    let denom: BigInt = denom.parse().ok()?;
    if denom.is_zero() {
        return None;
    }
    Some(Rat::new(numer, denom))
}

fn is_integer_literal(text: &str) -> bool {
    let digits = text.strip_prefix(['-', '+']).unwrap_or(text);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Euclidean remainder of `a` modulo a positive `m`, in `[0, m)`.
pub fn mod_positive(a: &BigInt, m: &BigInt) -> BigInt {
    debug_assert!(m.is_positive());
    a.mod_floor(m)
}

pub fn gcd_all<'a, I>(values: I) -> BigInt
where
    I: IntoIterator<Item = &'a BigInt>,
{
    values.into_iter().fold(BigInt::zero(), |acc, v| acc.gcd(v))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_roundtrip() {
        assert_eq!(parse_rational("3/6"), Some(rat(1, 2)));
        assert_eq!(parse_rational("-2/4"), Some(rat(-1, 2)));
        assert_eq!(parse_rational("5"), Some(rat(5, 1)));
        assert_eq!(parse_rational("1/-2"), Some(rat(-1, 2)));
        assert_eq!(format_rational(&rat(1, -2)), "-1/2");
        assert_eq!(format_rational(&rat(0, 5)), "0/1");
    }

    #[test]
    fn parse_rejects_garbage() {
        for bad in ["abc", "1/0", "", "/", "1/", "1.5", "1/2/3", "--1"] {
            assert_eq!(parse_rational(bad), None, "{bad}");
        }
    }

    #[test]
    fn frac_is_in_unit_interval() {
        assert_eq!(frac(&rat(-1, 4)), rat(3, 4));
        assert_eq!(frac(&rat(7, 2)), rat(1, 2));
        assert_eq!(frac(&rat(-3, 1)), rat(0, 1));
    }
}
