//! Exact base-`r` fixed-point points on `[0, 2)` and the digit-level
//! quantities built on them: distance to the nearest integer, the scale
//! index `m(h)` and the shared-digit depths `k0`, `k0_hat`.
//!
//! A [`RadixPoint`] stores an integer mantissa `u` with value `u / r^D`.
//! Digit `0` is the integer part (0 or 1) and digits `1..=D` are the
//! fractional base-`r` digits. Nothing here touches floating point.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// Default number of fractional digits carried by sampled points.
pub const DEFAULT_DEPTH: u32 = 48;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RadixPoint {
    base: u32,
    depth: u32,
    mantissa: BigUint,
    scale: BigUint,
}

fn check_base_depth(base: u32, depth: u32) -> Result<()> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    if depth < 1 {
        return Err(Error::InvalidDepth(depth));
    }
    Ok(())
}

impl RadixPoint {
    /// Builds a point from its raw mantissa, `value = mantissa / base^depth`.
    pub fn from_mantissa(base: u32, depth: u32, mantissa: BigUint) -> Result<Self> {
        check_base_depth(base, depth)?;
        let scale = BigUint::from(base).pow(depth);
        if mantissa >= &scale << 1 {
            return Err(Error::OutOfRange(format!("{mantissa}/{base}^{depth}")));
        }
        Ok(Self {
            base,
            depth,
            mantissa,
            scale,
        })
    }

    /// Builds a point from its expansion: `digits[0]` is the integer digit
    /// (0 or 1), the rest are fractional digits. Missing trailing digits are
    /// zero.
    pub fn from_digits(base: u32, depth: u32, digits: &[u32]) -> Result<Self> {
        check_base_depth(base, depth)?;
        let (int_digit, frac) = match digits.split_first() {
            Some((first, rest)) => (*first, rest),
            None => (0, &[][..]),
        };
        if int_digit > 1 {
            return Err(Error::OutOfRange(format!("integer digit {int_digit}")));
        }
        if frac.len() > depth as usize {
            return Err(Error::DepthExceeded {
                given: frac.len(),
                depth,
            });
        }
        let mut mantissa = BigUint::from(int_digit);
        for &d in frac {
            if d >= base {
                return Err(Error::DigitOutOfRange { digit: d, base });
            }
            mantissa = mantissa * base + d;
        }
        mantissa *= BigUint::from(base).pow(depth - frac.len() as u32);
        Self::from_mantissa(base, depth, mantissa)
    }

    /// Parses `"0.0100"` style expansions. Digits above 9 are written as
    /// letters (`a` = 10) up to base 36.
    pub fn parse_digits(base: u32, depth: u32, text: &str) -> Result<Self> {
        let (int_part, frac_part) = text.split_once('.').unwrap_or((text, ""));
        let mut digits = Vec::with_capacity(frac_part.len() + 1);
        let int_digit = if int_part.is_empty() {
            0
        } else {
            int_part
                .parse::<u32>()
                .map_err(|_| Error::InvalidArgument(format!("bad integer part {int_part:?}")))?
        };
        digits.push(int_digit);
        for c in frac_part.chars() {
            let d = c
                .to_digit(36)
                .ok_or_else(|| Error::InvalidArgument(format!("bad digit {c:?}")))?;
            digits.push(d);
        }
        Self::from_digits(base, depth, &digits)
    }

    /// Exact conversion from a rational; fails unless the value is an
    /// `r`-adic rational with at most `depth` fractional digits.
    pub fn from_rational(base: u32, depth: u32, value: &BigRational) -> Result<Self> {
        check_base_depth(base, depth)?;
        let scale = BigInt::from(BigUint::from(base).pow(depth));
        let scaled = value * BigRational::from_integer(scale);
        if !scaled.is_integer() {
            return Err(Error::NotRepresentable {
                value: value.to_string(),
                base,
                depth,
            });
        }
        let mantissa = scaled
            .to_integer()
            .to_biguint()
            .ok_or_else(|| Error::OutOfRange(value.to_string()))?;
        Self::from_mantissa(base, depth, mantissa)
    }

    pub fn zero(base: u32, depth: u32) -> Result<Self> {
        Self::from_mantissa(base, depth, BigUint::zero())
    }

    /// The point `base^(-ell)`.
    pub fn inverse_power(base: u32, depth: u32, ell: u32) -> Result<Self> {
        check_base_depth(base, depth)?;
        if ell > depth {
            return Err(Error::NotRepresentable {
                value: format!("{base}^-{ell}"),
                base,
                depth,
            });
        }
        Self::from_mantissa(base, depth, BigUint::from(base).pow(depth - ell))
    }

    /// Draws `depth` i.i.d. uniform digits after a zero integer digit, i.e.
    /// Lebesgue measure on `[0, 1)` at resolution `base^(-depth)`.
    pub fn uniform<R: Rng + ?Sized>(base: u32, depth: u32, rng: &mut R) -> Result<Self> {
        check_base_depth(base, depth)?;
        // Pack as many digits as fit in a u32 per draw.
        let mut chunk_len = 1u32;
        while (base as u64).pow(chunk_len + 1) <= u32::MAX as u64 {
            chunk_len += 1;
        }
        let mut mantissa = BigUint::zero();
        let mut remaining = depth;
        while remaining > 0 {
            let len = chunk_len.min(remaining);
            let modulus = (base as u64).pow(len);
            let draw = rng.random_range(0..modulus);
            mantissa = mantissa * BigUint::from(modulus) + draw;
            remaining -= len;
        }
        Self::from_mantissa(base, depth, mantissa)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    /// `base^depth`, the denominator of the point.
    pub fn scale(&self) -> &BigUint {
        &self.scale
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.mantissa.clone()),
            BigInt::from(self.scale.clone()),
        )
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }

    /// Digit `k`: `k = 0` is the integer part, `1..=depth` fractional digits.
    pub fn digit(&self, k: u32) -> Result<u32> {
        if k > self.depth {
            return Err(Error::DepthExhausted {
                index: k,
                depth: self.depth,
            });
        }
        let shifted = &self.mantissa / BigUint::from(self.base).pow(self.depth - k);
        Ok((shifted % self.base).to_u32().unwrap_or(0))
    }

    /// All digits `0..=depth`, integer digit first.
    pub fn digits(&self) -> Vec<u32> {
        let mut out = vec![0u32; self.depth as usize + 1];
        let mut rest = self.mantissa.clone();
        let base = BigUint::from(self.base);
        for slot in out.iter_mut().rev() {
            let (q, r) = rest.div_rem(&base);
            *slot = r.to_u32().unwrap_or(0);
            rest = q;
        }
        out
    }

    pub fn is_compatible(&self, other: &Self) -> bool {
        self.base == other.base && self.depth == other.depth
    }

    fn ensure_compatible(&self, other: &Self) -> Result<()> {
        if self.is_compatible(other) {
            Ok(())
        } else {
            Err(Error::Mismatch(self.base, self.depth, other.base, other.depth))
        }
    }

    /// Exact sum; the result must stay below 2.
    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.ensure_compatible(other)?;
        Self::from_mantissa(self.base, self.depth, &self.mantissa + &other.mantissa)
    }

    /// `1 - x` for a point in `[0, 1]`.
    pub fn reflect(&self) -> Result<Self> {
        if self.mantissa > self.scale {
            return Err(Error::OutOfRange(format!("1 - {self}")));
        }
        Self::from_mantissa(self.base, self.depth, &self.scale - &self.mantissa)
    }

    /// Numerator `v` of `frac(base^(k-1) x) = v / base^depth`, for `k >= 1`.
    pub fn frac_numerator(&self, k: u32) -> BigUint {
        debug_assert!(k >= 1);
        let shift = k - 1;
        if shift >= self.depth {
            return BigUint::zero();
        }
        (&self.mantissa * BigUint::from(self.base).pow(shift)) % &self.scale
    }

    /// Numerator `w` of `d(base^(k-1) x) = w / base^depth`.
    pub fn tent_numerator(&self, k: u32) -> BigUint {
        let v = self.frac_numerator(k);
        let w = &self.scale - &v;
        v.min(w)
    }

    /// Iterates `w_k` for `k = 1, 2, ..., count` (see [`Self::tent_numerator`]).
    pub fn tent_numerators(&self, count: u32) -> TentNumerators<'_> {
        TentNumerators {
            scale: &self.scale,
            base: self.base,
            current: &self.mantissa % &self.scale,
            remaining: count,
        }
    }
}

pub struct TentNumerators<'a> {
    scale: &'a BigUint,
    base: u32,
    current: BigUint,
    remaining: u32,
}

impl Iterator for TentNumerators<'_> {
    type Item = BigUint;

    fn next(&mut self) -> Option<BigUint> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let w = (self.scale - &self.current).min(self.current.clone());
        self.current = (&self.current * self.base) % self.scale;
        Some(w)
    }
}

impl fmt::Debug for RadixPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadixPoint({self})")
    }
}

impl fmt::Display for RadixPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = self.digits();
        write!(f, "{}.", digits[0])?;
        for d in &digits[1..] {
            write!(f, "{}", std::char::from_digit(*d, 36).unwrap_or('?'))?;
        }
        write!(f, "_({})", self.base)
    }
}

/// Distance from `x` to its nearest integer.
pub fn dist_to_int(x: &RadixPoint) -> BigRational {
    let w = x.tent_numerator(1);
    BigRational::new(BigInt::from(w), BigInt::from(x.scale.clone()))
}

/// Distance from a rational to its nearest integer.
pub fn dist_to_int_rational(x: &BigRational) -> BigRational {
    let frac = x - x.floor();
    let other = BigRational::one() - &frac;
    frac.min(other)
}

/// The unique `m` with `base^-(m+1) < h <= base^-m`, for `0 < h <= 1/base`.
pub fn scale_index(base: u32, h: &BigRational) -> Result<u32> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    let r = BigInt::from(base);
    let (num, den) = (h.numer(), h.denom());
    if !num.is_positive_int() || num * &r > *den {
        return Err(Error::IncrementOutOfRange(h.to_string()));
    }
    let mut m = 1u32;
    let mut power = &r * &r;
    // h > r^-(m+1)  <=>  num * r^(m+1) > den
    while num * &power <= *den {
        m += 1;
        power *= &r;
    }
    Ok(m)
}

trait PositiveInt {
    fn is_positive_int(&self) -> bool;
}

impl PositiveInt for BigInt {
    fn is_positive_int(&self) -> bool {
        self.sign() == num_bigint::Sign::Plus
    }
}

/// Scale index and shared-digit depths for a pair `(x, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DigitDepthResult {
    pub m: u32,
    pub k0: i32,
    pub k0_hat: i32,
    pub k0_min: i32,
}

/// Largest `k` such that `a / denom` and `b / denom` agree in base-`r`
/// digits `0..=k`, or `-1` if the integer parts differ. Requires `a != b`.
fn shared_prefix_depth(base: u32, a: &BigUint, b: &BigUint, denom: &BigUint) -> i32 {
    let (qa, mut ra) = a.div_rem(denom);
    let (qb, mut rb) = b.div_rem(denom);
    if qa != qb {
        return -1;
    }
    let mut k = 0i32;
    loop {
        ra *= base;
        rb *= base;
        let (da, na) = ra.div_rem(denom);
        let (db, nb) = rb.div_rem(denom);
        if da != db {
            return k;
        }
        if na == nb {
            // identical tails: a == b, excluded by the caller
            return i32::MAX;
        }
        ra = na;
        rb = nb;
        k += 1;
    }
}

fn validate_pair(x: &RadixPoint, h: &RadixPoint) -> Result<u32> {
    x.ensure_compatible(h)?;
    if x.mantissa >= x.scale {
        return Err(Error::OutOfRange(format!("x = {x} must lie in [0, 1)")));
    }
    let m = scale_index(h.base, &h.to_rational())?;
    Ok(m)
}

/// `k0(x, h)`: number of leading digits (from the integer digit on) shared
/// by `x` and `x + h`, minus one; `-1` when the integer digits differ.
pub fn digit_match_depth(x: &RadixPoint, h: &RadixPoint) -> Result<i32> {
    validate_pair(x, h)?;
    let shifted = x.checked_add(h)?;
    Ok(shared_prefix_depth(
        x.base,
        &x.mantissa,
        &shifted.mantissa,
        &x.scale,
    ))
}

/// `k0(x + 1/2, h)`. The half shift is carried exactly as a rational with
/// denominator `2 base^depth`, so odd bases need no truncation.
pub fn hat_digit_match_depth(x: &RadixPoint, h: &RadixPoint) -> Result<i32> {
    validate_pair(x, h)?;
    x.checked_add(h)?;
    let a = (&x.mantissa << 1) + &x.scale;
    let b = &a + (&h.mantissa << 1);
    Ok(shared_prefix_depth(x.base, &a, &b, &(&x.scale << 1)))
}

pub fn digit_depths(x: &RadixPoint, h: &RadixPoint) -> Result<DigitDepthResult> {
    let m = validate_pair(x, h)?;
    let k0 = digit_match_depth(x, h)?;
    let k0_hat = hat_digit_match_depth(x, h)?;
    Ok(DigitDepthResult {
        m,
        k0,
        k0_hat,
        k0_min: k0.min(k0_hat),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn pt(base: u32, depth: u32, n: i64, d: i64) -> RadixPoint {
        RadixPoint::from_rational(base, depth, &q(n, d)).unwrap()
    }

    #[test]
    fn make_point_examples() {
        let p = RadixPoint::parse_digits(2, 4, "0.0100").unwrap();
        assert_eq!(p.to_rational(), q(1, 4));
        let p = RadixPoint::parse_digits(3, 3, "0.100").unwrap();
        assert_eq!(p.to_rational(), q(1, 3));
        assert_eq!(
            RadixPoint::parse_digits(2, 4, "0.0102"),
            Err(Error::DigitOutOfRange { digit: 2, base: 2 })
        );
        assert!(matches!(
            RadixPoint::parse_digits(2, 4, "0.01001"),
            Err(Error::DepthExceeded { .. })
        ));
        assert!(RadixPoint::from_digits(2, 4, &[2]).is_err());
        assert!(RadixPoint::from_digits(1, 4, &[0]).is_err());
    }

    #[test]
    fn from_rational_rejects_non_radic() {
        assert!(RadixPoint::from_rational(2, 10, &q(1, 3)).is_err());
        assert!(RadixPoint::from_rational(3, 2, &q(1, 27)).is_err());
        assert!(RadixPoint::from_rational(2, 4, &q(2, 1)).is_err());
        assert!(RadixPoint::from_rational(2, 4, &q(-1, 4)).is_err());
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist_to_int(&pt(2, 4, 0, 1)), q(0, 1));
        assert_eq!(dist_to_int(&pt(2, 4, 1, 2)), q(1, 2));
        assert_eq!(dist_to_int(&pt(2, 4, 3, 4)), q(1, 4));
        assert_eq!(dist_to_int(&pt(2, 4, 5, 4)), q(1, 4));
        assert_eq!(dist_to_int_rational(&q(-7, 3)), q(1, 3));
    }

    #[test]
    fn scale_index_examples() {
        assert_eq!(scale_index(2, &q(1, 8)), Ok(3));
        assert_eq!(scale_index(3, &q(1, 10)), Ok(2));
        assert_eq!(scale_index(10, &q(1, 10)), Ok(1));
        assert_eq!(scale_index(2, &q(3, 16)), Ok(2));
        assert!(scale_index(2, &q(0, 1)).is_err());
        assert!(scale_index(2, &q(3, 4)).is_err());
        assert!(scale_index(3, &q(-1, 9)).is_err());
    }

    #[test]
    fn k0_examples() {
        let x = pt(2, 4, 1, 4);
        let h = pt(2, 4, 1, 8);
        assert_eq!(digit_match_depth(&x, &h), Ok(2));

        let x = pt(2, 4, 7, 8);
        assert_eq!(digit_match_depth(&x, &h), Ok(-1));

        for r in [2u32, 3, 5, 10] {
            let x = RadixPoint::zero(r, 8).unwrap();
            let h = RadixPoint::inverse_power(r, 8, 5).unwrap();
            assert_eq!(digit_match_depth(&x, &h), Ok(4), "base {r}");
        }
    }

    #[test]
    fn k0_hat_examples() {
        let x = RadixPoint::zero(3, 6).unwrap();
        let h = pt(3, 6, 1, 27);
        assert_eq!(hat_digit_match_depth(&x, &h), Ok(2));

        // x = 25/27: x + 1/2 = 77/54 = 1.1021..., x + 1/2 + h = 79/54 = 1.1101...
        let x = pt(3, 6, 25, 27);
        let expected = {
            let a = q(77, 54);
            let b = q(79, 54);
            let mut k = -1;
            for j in 0..20 {
                let p = BigRational::from_integer(BigInt::from(3).pow(j));
                if (&a * &p).floor() == (&b * &p).floor() {
                    k = j as i32;
                } else {
                    break;
                }
            }
            k
        };
        assert_eq!(hat_digit_match_depth(&x, &h), Ok(expected));
        assert_eq!(expected, 1);

        let x = pt(2, 6, 1, 4);
        let h = pt(2, 6, 1, 8);
        let shifted = pt(2, 6, 3, 4);
        assert_eq!(
            hat_digit_match_depth(&x, &h),
            digit_match_depth(&shifted, &h)
        );
    }

    #[test]
    fn mismatch_is_error() {
        let x = RadixPoint::zero(2, 6).unwrap();
        let h = RadixPoint::inverse_power(2, 7, 3).unwrap();
        assert!(matches!(
            digit_match_depth(&x, &h),
            Err(Error::Mismatch(..))
        ));
    }

    #[test]
    fn uniform_is_in_unit_interval() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for r in [2u32, 3, 7, 10, 16] {
            let x = RadixPoint::uniform(r, 40, &mut rng).unwrap();
            assert!(x.mantissa() < x.scale());
            assert_eq!(x.digits()[0], 0);
        }
    }

    fn point_strategy() -> impl Strategy<Value = (u32, u32, Vec<u32>)> {
        (2u32..12, 4u32..24).prop_flat_map(|(r, d)| {
            (
                Just(r),
                Just(d),
                proptest::collection::vec(0..r, d as usize),
            )
        })
    }

    proptest! {
        #[test]
        fn digits_round_trip((r, d, frac) in point_strategy(), int_digit in 0u32..2) {
            let mut digits = vec![int_digit];
            digits.extend(&frac);
            let p = RadixPoint::from_digits(r, d, &digits).unwrap();
            prop_assert_eq!(p.digits(), digits.clone());
            for (k, &dk) in digits.iter().enumerate() {
                prop_assert_eq!(p.digit(k as u32).unwrap(), dk);
            }
        }

        #[test]
        fn dist_symmetries((r, d, frac) in point_strategy()) {
            let mut digits = vec![0];
            digits.extend(&frac);
            let x = RadixPoint::from_digits(r, d, &digits).unwrap();
            let dx = dist_to_int(&x);
            let one_minus = x.reflect().unwrap();
            prop_assert_eq!(dist_to_int(&one_minus), dx.clone());
            let one = RadixPoint::from_digits(r, d, &[1]).unwrap();
            let shifted = x.checked_add(&one).unwrap();
            prop_assert_eq!(dist_to_int(&shifted), dx.clone());
            prop_assert_eq!(dist_to_int_rational(&x.to_rational()), dx);
        }

        #[test]
        fn k0_bounded_and_monotone(
            (r, d, frac) in point_strategy(),
            ell in 1u32..4,
            c1 in 1u64..1000,
            c2 in 1u64..1000,
        ) {
            let mut digits = vec![0];
            digits.extend(&frac);
            let x = RadixPoint::from_digits(r, d, &digits).unwrap();
            let unit = BigUint::from(r).pow(d - ell);
            // two increments h1 <= h2 inside (0, 1/r]
            let cap = BigUint::from(r).pow(d - 1);
            let mut hs: Vec<BigUint> = [c1, c2]
                .iter()
                .map(|&c| ((&unit * c) % &cap) + 1u32)
                .collect();
            hs.sort();
            let h1 = RadixPoint::from_mantissa(r, d, hs[0].clone()).unwrap();
            let h2 = RadixPoint::from_mantissa(r, d, hs[1].clone()).unwrap();
            let r1 = digit_depths(&x, &h1).unwrap();
            let r2 = digit_depths(&x, &h2).unwrap();
            for res in [r1, r2] {
                prop_assert!(res.k0 >= -1 && res.k0 <= res.m as i32);
                prop_assert!(res.k0_hat >= -1 && res.k0_hat <= res.m as i32);
                prop_assert_eq!(res.k0_min, res.k0.min(res.k0_hat));
            }
            prop_assert!(r1.k0 >= r2.k0);
            prop_assert!(r1.k0_hat >= r2.k0_hat);
        }

        #[test]
        fn scale_index_brackets(num in 1u64..10_000, den_exp in 1u32..12, r in 2u32..11) {
            let den = BigInt::from(r).pow(den_exp) * 7;
            let h = BigRational::new(BigInt::from(num), den);
            let r_q = BigRational::from_u32(r).unwrap();
            if h > BigRational::one() / &r_q {
                prop_assert!(scale_index(r, &h).is_err());
            } else {
                let m = scale_index(r, &h).unwrap() as i32;
                prop_assert!(h <= r_q.pow(-m));
                prop_assert!(h > r_q.pow(-(m + 1)));
            }
        }
    }
}
