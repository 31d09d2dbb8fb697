//! Evaluation of the sawtooth terms `psi_k`, their right derivatives,
//! the derivative walk `s_n`, the Takagi-van der Waerden function `f_r`
//! and its weighted version, with certified truncation bounds.
//!
//! Two evaluation routes exist. The rational route accepts any
//! [`BigRational`] and truncates the series after `N` terms. The point
//! route works on [`RadixPoint`]s: for `x = u / r^D` every term with
//! `k > D` vanishes, so sums over `k <= D` are exact, and all terms share
//! the denominator `r^(2D-1)` which keeps the arithmetic in integers.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radix::{digit_depths, dist_to_int_rational, RadixPoint};
use crate::sequence::StepSequence;

/// Right-hand slope of a sawtooth term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// Closed interval with exact endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        debug_assert!(lo <= hi);
        Self { lo, hi }
    }

    pub fn point(v: BigRational) -> Self {
        Self {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn contains(&self, v: &BigRational) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> BigRational {
        (&self.lo + &self.hi) / BigInt::from(2)
    }
}

/// Truncation level of the series and the matching tail bound
/// `sum_{k > N} 1/(2 r^(k-1)) = r^(1-N) / (2(r-1))`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesTruncation {
    pub base: u32,
    pub terms: u32,
    pub tail_bound: BigRational,
}

impl SeriesTruncation {
    pub fn new(base: u32, terms: u32) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidBase(base));
        }
        if terms < 1 {
            return Err(Error::InvalidArgument("at least one term required".into()));
        }
        let r = BigInt::from(base);
        let tail_bound = BigRational::new(
            BigInt::one(),
            BigInt::from(2) * (&r - 1) * r.pow(terms - 1),
        );
        Ok(Self {
            base,
            terms,
            tail_bound,
        })
    }

    /// Smallest `N` with `tail_bound(N) <= 2^-40`.
    pub fn default_for_base(base: u32) -> Result<Self> {
        let target = BigRational::new(BigInt::one(), BigInt::from(2).pow(40));
        let mut n = 1;
        loop {
            let t = Self::new(base, n)?;
            if t.tail_bound <= target {
                return Ok(t);
            }
            n += 1;
        }
    }
}

/// Partial sum with its tail bound and the enclosure of the full series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeriesValue {
    pub value: BigRational,
    pub tail_bound: BigRational,
    pub enclosure: Interval,
}

fn pow_big(base: u32, exp: u32) -> BigUint {
    BigUint::from(base).pow(exp)
}

fn ratio(num: BigInt, den: BigUint) -> BigRational {
    BigRational::new(num, BigInt::from(den))
}

/// `psi_k(x) = d(r^(k-1) x) / r^(k-1)`.
pub fn psi(base: u32, k: u32, x: &BigRational) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    let scale = BigRational::from_integer(BigInt::from(pow_big(base, k - 1)));
    Ok(dist_to_int_rational(&(x * &scale)) / scale)
}

/// Right derivative of `psi_k` at `x`: `+1` on `[0, 1/2)` of the period,
/// `-1` on `[1/2, 1)`.
pub fn psi_plus(base: u32, k: u32, x: &BigRational) -> Result<Sign> {
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    let y = x * BigRational::from_integer(BigInt::from(pow_big(base, k - 1)));
    let frac = &y - y.floor();
    Ok(if frac * BigInt::from(2) < BigRational::one() {
        Sign::Plus
    } else {
        Sign::Minus
    })
}

/// `psi_k(x)` for a radix point; exact for every `k` (zero once `k > D`).
pub fn psi_point(x: &RadixPoint, k: u32) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    let w = x.tent_numerator(k);
    Ok(ratio(
        BigInt::from(w),
        pow_big(x.base(), x.depth() + k - 1),
    ))
}

/// Right derivative of `psi_k` at a radix point, decided by comparing
/// `2 frac(r^(k-1) x)` with 1 on mantissas. Indices past the carried depth
/// only see the zero padding, so they are refused.
pub fn psi_plus_point(x: &RadixPoint, k: u32) -> Result<Sign> {
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    if k > x.depth() {
        return Err(Error::DepthExhausted {
            index: k,
            depth: x.depth(),
        });
    }
    let v = x.frac_numerator(k);
    Ok(if (v << 1) < *x.scale() {
        Sign::Plus
    } else {
        Sign::Minus
    })
}

/// Signs `psi_k^+(x)` for `k = 1..=n`, read off the digit expansion.
fn signs_from_digits(x: &RadixPoint, n: u32) -> Vec<Sign> {
    let digits = x.digits();
    let depth = x.depth() as usize;
    let r = x.base();
    let mut signs = vec![Sign::Plus; n as usize];
    if r.is_multiple_of(2) {
        // 1/2 = 0.(r/2)000..., so frac >= 1/2 iff the leading digit >= r/2
        for k in 1..=n as usize {
            if digits[k] >= r / 2 {
                signs[k - 1] = Sign::Minus;
            }
        }
    } else {
        // 1/2 = 0.ccc... with c = (r-1)/2; the zero padding compares below
        let c = (r - 1) / 2;
        let mut below = true;
        for k in (1..=depth).rev() {
            let d = digits[k];
            below = d < c || (d == c && below);
            if k <= n as usize && !below {
                signs[k - 1] = Sign::Minus;
            }
        }
    }
    signs
}

/// The derivative walk `s_n(x) = sum_{k <= n} psi_k^+(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivativeWalkState {
    pub base: u32,
    pub point: RadixPoint,
    pub n: u32,
    pub signs: Vec<Sign>,
    pub partial_sum: i64,
}

impl DerivativeWalkState {
    /// `s_0, s_1, ..., s_n`.
    pub fn partial_sums(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.signs.len() + 1);
        let mut acc = 0;
        out.push(0);
        for s in &self.signs {
            acc += s.value();
            out.push(acc);
        }
        out
    }
}

pub fn derivative_walk(x: &RadixPoint, n: u32) -> Result<DerivativeWalkState> {
    if n > x.depth() {
        return Err(Error::DepthExhausted {
            index: n,
            depth: x.depth(),
        });
    }
    let signs = signs_from_digits(x, n);
    let partial_sum = signs.iter().map(|s| s.value()).sum();
    Ok(DerivativeWalkState {
        base: x.base(),
        point: x.clone(),
        n,
        signs,
        partial_sum,
    })
}

/// `sum_{k=1}^{N} psi_k(x)` with the series tail bound; `f_r(x)` lies in
/// `[value, value + tail_bound]`.
pub fn eval_f(base: u32, x: &BigRational, terms: u32) -> Result<SeriesValue> {
    let trunc = SeriesTruncation::new(base, terms)?;
    let mut value = BigRational::zero();
    for k in 1..=terms {
        value += psi(base, k, x)?;
    }
    let hi = &value + &trunc.tail_bound;
    Ok(SeriesValue {
        enclosure: Interval::new(value.clone(), hi),
        value,
        tail_bound: trunc.tail_bound,
    })
}

/// Numerator of `sum_{k=1}^{n} psi_k(x)` over the denominator
/// `r^(D + n - 1)`, via Horner on the tent numerators.
fn point_partial_numerator(x: &RadixPoint, n: u32) -> BigUint {
    let mut acc = BigUint::zero();
    for w in x.tent_numerators(n) {
        acc = acc * x.base() + w;
    }
    acc
}

/// Point-route evaluation. With `terms >= D` the value is exact and the
/// reported tail bound is zero.
pub fn eval_f_point(x: &RadixPoint, terms: u32) -> Result<SeriesValue> {
    let trunc = SeriesTruncation::new(x.base(), terms)?;
    let used = terms.min(x.depth());
    let num = point_partial_numerator(x, used);
    let value = ratio(BigInt::from(num), pow_big(x.base(), x.depth() + used - 1));
    let tail_bound = if terms >= x.depth() {
        BigRational::zero()
    } else {
        trunc.tail_bound
    };
    Ok(SeriesValue {
        enclosure: Interval::new(value.clone(), &value + &tail_bound),
        value,
        tail_bound,
    })
}

/// Default cap on the orbit length explored by [`eval_f_exact`].
pub const DEFAULT_ORBIT_LIMIT: usize = 1 << 20;

/// Exact `f_r(x)` for rational `x`. The orbit `frac(r^(k-1) x)` is
/// eventually periodic, so the series splits into a finite head and a
/// geometric repetition of one period.
pub fn eval_f_exact(base: u32, x: &BigRational, orbit_limit: usize) -> Result<BigRational> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    let q = x.denom().clone();
    let mut numer = x.numer().mod_floor(&q);
    let r = BigInt::from(base);
    let mut seen: HashMap<BigInt, usize> = HashMap::new();
    let mut orbit: Vec<BigInt> = Vec::new();
    let start = loop {
        if let Some(&i) = seen.get(&numer) {
            break i;
        }
        if orbit.len() >= orbit_limit {
            return Err(Error::PeriodTooLong(orbit_limit));
        }
        seen.insert(numer.clone(), orbit.len());
        orbit.push(numer.clone());
        numer = (&numer * &r).mod_floor(&q);
    };
    // term k (0-based index i) is min(n_i, q - n_i) / (q r^i)
    let term_sum = |range: std::ops::Range<usize>| -> BigRational {
        let mut acc = BigRational::zero();
        for i in range {
            let n = &orbit[i];
            let w = n.clone().min(&q - n);
            acc += BigRational::new(w, &q * r.pow(i as u32));
        }
        acc
    };
    let head = term_sum(0..start);
    let period = orbit.len() - start;
    let cycle = term_sum(start..orbit.len());
    let factor = BigRational::one()
        - BigRational::new(BigInt::one(), r.pow(period as u32));
    Ok(head + cycle / factor)
}

/// `sum_{k=1}^{N} a_k psi_k(x)`; the full series lies within
/// `(1/2) sum_{k > N} |a_k| r^-(k-1)` of the partial sum.
pub fn eval_f_weighted(
    base: u32,
    a: &StepSequence,
    x: &BigRational,
    terms: u32,
) -> Result<SeriesValue> {
    a.check_summable(base)?;
    if terms < 1 {
        return Err(Error::InvalidArgument("at least one term required".into()));
    }
    let mut value = BigRational::zero();
    for k in 1..=terms {
        let weight = a.term(k as u64);
        if weight == 0.0 {
            continue;
        }
        value += exact_f64(weight)? * psi(base, k, x)?;
    }
    let tail = a.weighted_tail_bound(base, terms as u64)? / 2.0;
    let tail_bound = exact_f64(tail)?;
    Ok(SeriesValue {
        enclosure: Interval::new(&value - &tail_bound, &value + &tail_bound),
        value,
        tail_bound,
    })
}

pub(crate) fn exact_f64(v: f64) -> Result<BigRational> {
    BigRational::from_float(v).ok_or_else(|| Error::InvalidArgument(format!("non-finite {v}")))
}

/// Enclosure of `f_r(r x) - r f_r(x) + r d(x)` from `N`-term partial sums.
/// With tail errors `e1, e2 in [0, t]` the true residual is
/// `computed + e1 - r e2`, hence the interval `[c - r t, c + t]`.
pub fn functional_eq_residual(base: u32, x: &BigRational, terms: u32) -> Result<Interval> {
    let r = BigRational::from_integer(BigInt::from(base));
    let scaled = eval_f(base, &(x * &r), terms)?;
    let plain = eval_f(base, x, terms)?;
    let computed = &scaled.value - &r * &plain.value + &r * dist_to_int_rational(x);
    let t = plain.tail_bound;
    Ok(Interval::new(&computed - &r * &t, computed + t))
}

/// Whether `x` and `x + h` fall in the same cell of the partition
/// `{j / (2 r^(k-1))}`, i.e. `psi_k` is linear on `[x, x + h]`.
pub fn is_linear_on(k: u32, x: &RadixPoint, h: &RadixPoint) -> Result<bool> {
    if k == 0 {
        return Err(Error::ZeroIndex);
    }
    let y = x.checked_add(h)?;
    let factor = pow_big(x.base(), k - 1) << 1;
    let cell = |u: &BigUint| (u * &factor) / x.scale();
    Ok(cell(x.mantissa()) == cell(y.mantissa()))
}

/// Exact `f_r(x + h) - f_r(x)` for radix points (periodic extension past 1).
pub fn increment(x: &RadixPoint, h: &RadixPoint) -> Result<BigRational> {
    let y = x.checked_add(h)?;
    let d = x.depth();
    let num = BigInt::from(point_partial_numerator(&y, d))
        - BigInt::from(point_partial_numerator(x, d));
    Ok(ratio(num, pow_big(x.base(), 2 * d - 1)))
}

/// `(f_r(x + h) - f_r(x)) / h` as `f64`, computed exactly before rounding.
pub fn increment_quotient_f64(x: &RadixPoint, h: &RadixPoint) -> Result<f64> {
    let inc = increment(x, h)?;
    let q = inc / h.to_rational();
    Ok(q.to_f64().unwrap_or(f64::NAN))
}

/// Split of `f_r(x + h) - f_r(x)` into the walk term `h s_m(x)`, the
/// linearity defect over `k0_eff < k <= m`, and the tail over `k > m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncrementDecomposition {
    pub base: u32,
    pub m: u32,
    pub k0: i32,
    pub k0_hat: i32,
    /// `k0` for even bases, `min(k0, k0_hat)` for odd ones.
    pub k0_eff: i32,
    pub main: BigRational,
    pub defect: BigRational,
    /// Enclosure of `sum_{k > m} (psi_k(x+h) - psi_k(x))`; a single point
    /// when the evaluation reached the carried depth.
    pub tail: Interval,
    pub defect_bound: BigRational,
    pub tail_bound: BigRational,
}

impl IncrementDecomposition {
    pub fn defect_within_bound(&self) -> bool {
        self.defect.abs() <= self.defect_bound
    }

    pub fn tail_within_bound(&self) -> bool {
        self.tail.lo.abs() <= self.tail_bound && self.tail.hi.abs() <= self.tail_bound
    }

    /// Enclosure of `main + defect + tail`.
    pub fn total(&self) -> Interval {
        let head = &self.main + &self.defect;
        Interval::new(&head + &self.tail.lo, &head + &self.tail.hi)
    }
}

/// Computes the three-term split. `terms` caps the tail evaluation; `None`
/// (or anything `>= D`) evaluates it exactly.
pub fn increment_decomposition(
    x: &RadixPoint,
    h: &RadixPoint,
    terms: Option<u32>,
) -> Result<IncrementDecomposition> {
    let depths = digit_depths(x, h)?;
    let base = x.base();
    let depth = x.depth();
    let m = depths.m;
    let k0_eff = if base.is_multiple_of(2) {
        depths.k0
    } else {
        depths.k0_min
    };
    let y = x.checked_add(h)?;
    let cap = terms.unwrap_or(depth).min(depth).max(m);
    let signs = signs_from_digits(x, m.min(depth));

    // every term over the common denominator r^(2D-1):
    // psi_k = w_k r^(D-k),  h = hu r^(D-1)
    let w_x: Vec<BigUint> = x.tent_numerators(cap).collect();
    let w_y: Vec<BigUint> = y.tent_numerators(cap).collect();
    let h_scaled = BigInt::from(h.mantissa() * pow_big(base, depth - 1));
    let mut main = BigInt::zero();
    let mut defect = BigInt::zero();
    let mut tail = BigInt::zero();
    for k in 1..=cap {
        let i = (k - 1) as usize;
        let diff = (BigInt::from(w_y[i].clone()) - BigInt::from(w_x[i].clone()))
            * BigInt::from(pow_big(base, depth - k));
        if k <= m {
            let slope = &h_scaled * signs[i].value();
            main += &slope;
            if k as i32 > k0_eff {
                defect += diff - slope;
            }
        } else {
            tail += diff;
        }
    }
    let denom = pow_big(base, 2 * depth - 1);
    let tail_value = ratio(tail, denom.clone());
    let tail = if cap >= depth {
        Interval::point(tail_value)
    } else {
        // each omitted |psi_k(x+h) - psi_k(x)| is at most 1/(2 r^(k-1))
        let t = SeriesTruncation::new(base, cap)?.tail_bound;
        Interval::new(&tail_value - &t, tail_value + t)
    };
    let h_q = h.to_rational();
    let r = BigInt::from(base);
    Ok(IncrementDecomposition {
        base,
        m,
        k0: depths.k0,
        k0_hat: depths.k0_hat,
        k0_eff,
        main: ratio(main, denom.clone()),
        defect: ratio(defect, denom),
        tail,
        defect_bound: &h_q * BigInt::from(2 * (m as i64 - k0_eff as i64)),
        tail_bound: &h_q * BigRational::new(&r * &r, &r - 1),
    })
}

/// Exact `sum_{k <= D} a_k (psi_k(x + h) - psi_k(x))`, i.e. the increment of
/// `f_{r,a}` between radix points, with weights taken as exact `f64` values.
pub fn weighted_increment(a: &StepSequence, x: &RadixPoint, h: &RadixPoint) -> Result<BigRational> {
    a.check_summable(x.base())?;
    let y = x.checked_add(h)?;
    let depth = x.depth();
    let mut acc = BigRational::zero();
    for (k, (wx, wy)) in (1..=depth).zip(x.tent_numerators(depth).zip(y.tent_numerators(depth))) {
        let weight = a.term(k as u64);
        if weight == 0.0 || wx == wy {
            continue;
        }
        let diff = ratio(
            BigInt::from(wy) - BigInt::from(wx),
            pow_big(x.base(), depth + k - 1),
        );
        acc += exact_f64(weight)? * diff;
    }
    Ok(acc)
}
