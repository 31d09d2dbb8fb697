//! Weight sequences `{a_k : k >= 1}` with decidable tail behaviour.
//!
//! A [`StepSequence`] is an explicit prefix followed by a parametric tail
//! family. Every question asked about the sequence (square summability,
//! `limsup |a_k|`, tail bounds for `sum |a_k| r^-(k-1)`) is answered in
//! closed form from the family parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative inflation applied to floating-point tail bounds so that they
/// stay upper bounds after rounding.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `a_k = c`
    Constant { c: f64 },
    /// `a_k = c * k^(-gamma)`
    Power { c: f64, gamma: f64 },
    /// `a_k = c * q^k`
    Geometric { c: f64, q: f64 },
}

impl Family {
    fn term(&self, k: u64) -> f64 {
        match *self {
            Family::Constant { c } => c,
            Family::Power { c, gamma } => c * (k as f64).powf(-gamma),
            Family::Geometric { c, q } => c * q.powi(k as i32),
        }
    }

    fn is_zero(&self) -> bool {
        match *self {
            Family::Constant { c } | Family::Power { c, .. } | Family::Geometric { c, .. } => {
                c == 0.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSequence {
    /// `a_1, ..., a_len` override the family.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub prefix: Vec<f64>,
    pub tail: Family,
}

/// Upper bound for `sum_{k > from} t_k` with `t_k = k^s r^(1-k)`, `s > 0`.
fn growing_power_tail(s: f64, r: f64, from: u64) -> f64 {
    let mut k = from + 1;
    let mut sum = 0.0;
    loop {
        let t = (k as f64).powf(s) * r.powf(1.0 - k as f64);
        // ratio t_{j+1}/t_j is decreasing in j, so bound the rest geometrically
        let ratio = (1.0 + 1.0 / k as f64).powf(s) / r;
        if ratio <= (1.0 + 1.0 / r) / 2.0 {
            return sum + t / (1.0 - ratio);
        }
        sum += t;
        k += 1;
    }
}

impl StepSequence {
    pub fn constant(c: f64) -> Self {
        Self {
            prefix: Vec::new(),
            tail: Family::Constant { c },
        }
    }

    /// `a_k = k^(-gamma)`.
    pub fn power(gamma: f64) -> Self {
        Self::scaled_power(1.0, gamma)
    }

    pub fn scaled_power(c: f64, gamma: f64) -> Self {
        Self {
            prefix: Vec::new(),
            tail: Family::Power { c, gamma },
        }
    }

    /// `a_k = q^k`.
    pub fn geometric(q: f64) -> Self {
        Self::scaled_geometric(1.0, q)
    }

    pub fn scaled_geometric(c: f64, q: f64) -> Self {
        Self {
            prefix: Vec::new(),
            tail: Family::Geometric { c, q },
        }
    }

    /// Finitely supported sequence; terms past the list are zero.
    pub fn explicit(terms: Vec<f64>) -> Self {
        Self {
            prefix: terms,
            tail: Family::Constant { c: 0.0 },
        }
    }

    /// Replaces the first `prefix.len()` terms.
    pub fn with_prefix(mut self, prefix: Vec<f64>) -> Self {
        self.prefix = prefix;
        self
    }

    /// `a_k` for `k >= 1`.
    pub fn term(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        match self.prefix.get((k as usize).wrapping_sub(1)) {
            Some(&v) => v,
            None => self.tail.term(k),
        }
    }

    pub fn terms(&self, n: u64) -> Vec<f64> {
        (1..=n).map(|k| self.term(k)).collect()
    }

    /// `sum_{k <= n} a_k^2`.
    pub fn partial_sq_sum(&self, n: u64) -> f64 {
        (1..=n).map(|k| self.term(k).powi(2)).sum()
    }

    /// `sum_{m < k <= n} a_k^2`.
    pub fn window_sq_sum(&self, m: u64, n: u64) -> f64 {
        (m + 1..=n).map(|k| self.term(k).powi(2)).sum()
    }

    pub fn is_square_summable(&self) -> bool {
        if self.tail.is_zero() {
            return true;
        }
        match self.tail {
            Family::Constant { .. } => false,
            Family::Power { gamma, .. } => 2.0 * gamma > 1.0,
            Family::Geometric { q, .. } => q.abs() < 1.0,
        }
    }

    /// `limsup |a_k| > 0`.
    pub fn limsup_abs_positive(&self) -> bool {
        if self.tail.is_zero() {
            return false;
        }
        match self.tail {
            Family::Constant { .. } => true,
            Family::Power { gamma, .. } => gamma <= 0.0,
            Family::Geometric { q, .. } => q.abs() >= 1.0,
        }
    }

    /// `a_k -> 0`. For the supported families this is the negation of
    /// [`Self::limsup_abs_positive`].
    pub fn tends_to_zero(&self) -> bool {
        !self.limsup_abs_positive()
    }

    /// Checks `sum |a_k| / r^(k-1) < infinity`.
    pub fn check_summable(&self, base: u32) -> Result<()> {
        if base < 2 {
            return Err(Error::InvalidBase(base));
        }
        if self.prefix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSequence("non-finite prefix term".into()));
        }
        match self.tail {
            Family::Geometric { c, q } if c != 0.0 && q.abs() >= base as f64 => {
                Err(Error::NotSummable {
                    base,
                    reason: format!("|q| = {} >= r", q.abs()),
                })
            }
            Family::Constant { c } | Family::Power { c, .. } | Family::Geometric { c, .. }
                if !c.is_finite() =>
            {
                Err(Error::InvalidSequence("non-finite coefficient".into()))
            }
            _ => Ok(()),
        }
    }

    /// Certified upper bound for `sum_{k > n} |a_k| r^-(k-1)`.
    pub fn weighted_tail_bound(&self, base: u32, n: u64) -> Result<f64> {
        self.check_summable(base)?;
        let r = base as f64;
        let len = self.prefix.len() as u64;
        let explicit: f64 = (n + 1..=len)
            .map(|k| self.term(k).abs() * r.powf(1.0 - k as f64))
            .sum();
        let from = n.max(len);
        let family = match self.tail {
            Family::Constant { c } => c.abs() * r.powf(1.0 - from as f64) / (r - 1.0),
            Family::Power { c, gamma } if gamma >= 0.0 => {
                c.abs() * ((from + 1) as f64).powf(-gamma) * r.powf(1.0 - from as f64)
                    / (r - 1.0)
            }
            Family::Power { c, gamma } => c.abs() * growing_power_tail(-gamma, r, from),
            Family::Geometric { c, q } => {
                let ratio = q.abs() / r;
                c.abs() * r * ratio.powf((from + 1) as f64) / (1.0 - ratio)
            }
        };
        Ok((explicit + family) * (1.0 + BOUND_SLACK))
    }
}

impl fmt::Display for StepSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tail {
            Family::Constant { c } if c == 0.0 && !self.prefix.is_empty() => {
                return write!(f, "list:{}", join(&self.prefix));
            }
            Family::Constant { c } => write!(f, "constant:{c}")?,
            Family::Power { c: 1.0, gamma } => write!(f, "power:{gamma}")?,
            Family::Power { c, gamma } => write!(f, "power:{gamma}:{c}")?,
            Family::Geometric { c: 1.0, q } => write!(f, "geometric:{q}")?,
            Family::Geometric { c, q } => write!(f, "geometric:{q}:{c}")?,
        }
        if !self.prefix.is_empty() {
            write!(f, "@{}", join(&self.prefix))?;
        }
        Ok(())
    }
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_f64(text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidSequence(format!("bad number {text:?}")))
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(parse_f64).collect()
}

/// Accepted forms: `constant:C`, `power:GAMMA[:C]`, `geometric:Q[:C]`,
/// `list:A1,A2,...`, each family optionally followed by `@A1,A2,...` to
/// override a prefix.
impl FromStr for StepSequence {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (body, prefix) = match text.split_once('@') {
            Some((b, p)) => (b, parse_list(p)?),
            None => (text, Vec::new()),
        };
        let mut parts = body.split(':');
        let family = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
        let params: Vec<&str> = parts.collect();
        let arg = |i: usize| -> Result<f64> {
            params
                .get(i)
                .map(|s| parse_f64(s))
                .unwrap_or_else(|| Err(Error::InvalidSequence(format!("{family}: missing parameter"))))
        };
        let opt = |i: usize, default: f64| -> Result<f64> {
            params.get(i).map(|s| parse_f64(s)).unwrap_or(Ok(default))
        };
        let seq = match family.as_str() {
            "constant" => StepSequence::constant(opt(0, 1.0)?),
            "power" => StepSequence::scaled_power(opt(1, 1.0)?, arg(0)?),
            "geometric" => StepSequence::scaled_geometric(opt(1, 1.0)?, arg(0)?),
            "list" => StepSequence::explicit(parse_list(&params.join(":"))?),
            other => return Err(Error::InvalidSequence(format!("unknown family {other:?}"))),
        };
        Ok(if prefix.is_empty() {
            seq
        } else {
            seq.with_prefix(prefix)
        })
    }
}
