//! Distribution tools for the limit-law experiments: the standard normal
//! CDF, empirical distributions and the Kolmogorov-Smirnov distance.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// `erf(z)` for `0 <= z < 3` from the everywhere-positive series
/// `erf(z) = 2/sqrt(pi) e^(-z^2) sum_n 2^n z^(2n+1) / (2n+1)!!`.
fn erf_series(z: f64) -> f64 {
    let two_z2 = 2.0 * z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = 0.0;
    while term > 1e-17 * sum {
        n += 1.0;
        term *= two_z2 / (2.0 * n + 1.0);
        sum += term;
    }
    2.0 / PI.sqrt() * (-z * z).exp() * sum
}

/// `erfc(z)` for `z >= 3` from the continued fraction
/// `erfc(z) = e^(-z^2)/sqrt(pi) / (z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))`.
fn erfc_continued_fraction(z: f64) -> f64 {
    let mut f = z;
    for n in (1..=60).rev() {
        f = z + (n as f64 / 2.0) / f;
    }
    (-z * z).exp() / (PI.sqrt() * f)
}

/// Standard normal CDF, absolute error well below `1e-10`.
pub fn normal_cdf(y: f64) -> f64 {
    if y.is_nan() {
        return f64::NAN;
    }
    let z = y.abs() / SQRT_2;
    let upper_tail = if z < 3.0 {
        0.5 * (1.0 - erf_series(z))
    } else {
        0.5 * erfc_continued_fraction(z)
    };
    if y >= 0.0 {
        1.0 - upper_tail
    } else {
        upper_tail
    }
}

/// CDF of the Kolmogorov distribution,
/// `1 - 2 sum_{k>=1} (-1)^(k-1) e^(-2 k^2 t^2)`.
pub fn kolmogorov_cdf(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t < 0.3 {
        // the alternating series converges slowly here; use the dual form
        let s: f64 = (1..=50)
            .map(|k| {
                let y = (2 * k - 1) as f64 * PI / t;
                (-y * y / 8.0).exp()
            })
            .sum();
        return (2.0 * PI).sqrt() / t * s;
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * t * t).exp()
        })
        .sum();
    1.0 - 2.0 * s
}

/// Inverse of [`kolmogorov_cdf`] by bisection.
pub fn kolmogorov_quantile(level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 5.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A sorted sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    values: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("empty sample".into()));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("NaN in sample".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Right-continuous empirical CDF.
    pub fn cdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance (zero for a single value).
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    /// Lower empirical quantile, `q` in `[0, 1]`.
    pub fn quantile(&self, q: f64) -> f64 {
        let n = self.len();
        let idx = ((q.clamp(0.0, 1.0) * n as f64).ceil() as usize).clamp(1, n) - 1;
        self.values[idx]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }
}

/// `sup_x |F_N(x) - F(x)|`. Both one-sided limits are checked at each
/// jump; the left limit of `F` is read just below the jump, so step
/// functions are handled as well as continuous ones.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &EmpiricalDistribution, cdf: F) -> f64 {
    let values = sample.values();
    let n = values.len() as f64;
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let mut j = i;
        while j < values.len() && values[j] == v {
            j += 1;
        }
        let before = i as f64 / n;
        let after = j as f64 / n;
        sup = sup
            .max((after - cdf(v)).abs())
            .max((before - cdf(v.next_down())).abs());
        i = j;
    }
    sup
}
