//! Differentiability class of `f_{r,a}(x) = sum a_k psi_k(x)` from the
//! weight sequence, with numerical probes for inspection.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radix::RadixPoint;
use crate::report::{ExperimentReport, Statistic};
use crate::sequence::StepSequence;
use crate::takagi::{derivative_walk, weighted_increment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiffLabel {
    AbsolutelyContinuous,
    AlmostEverywhereNondifferentiable,
    NowhereFiniteDerivative,
}

impl std::fmt::Display for DiffLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DiffLabel::AbsolutelyContinuous => "AbsolutelyContinuous",
            DiffLabel::AlmostEverywhereNondifferentiable => "AlmostEverywhereNondifferentiable",
            DiffLabel::NowhereFiniteDerivative => "NowhereFiniteDerivative",
        })
    }
}

/// Which sequence tests fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub square_summable: bool,
    pub tends_to_zero: bool,
    pub limsup_abs_positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DifferentiabilityClass {
    pub label: DiffLabel,
    pub evidence: Evidence,
}

/// `limsup |a_k| > 0` gives no finite derivative anywhere; otherwise
/// square summability gives absolute continuity; otherwise `f_{r,a}` is
/// nondifferentiable almost everywhere.
pub fn classify_sequence(a: &StepSequence) -> Result<DifferentiabilityClass> {
    if a.prefix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidSequence("non-finite prefix term".into()));
    }
    let params_finite = match a.tail {
        crate::sequence::Family::Constant { c } => c.is_finite(),
        crate::sequence::Family::Power { c, gamma } => c.is_finite() && gamma.is_finite(),
        crate::sequence::Family::Geometric { c, q } => c.is_finite() && q.is_finite(),
    };
    if !params_finite {
        return Err(Error::InvalidSequence(format!("non-finite parameters in {a}")));
    }
    let evidence = Evidence {
        square_summable: a.is_square_summable(),
        tends_to_zero: a.tends_to_zero(),
        limsup_abs_positive: a.limsup_abs_positive(),
    };
    let label = if evidence.limsup_abs_positive {
        DiffLabel::NowhereFiniteDerivative
    } else if evidence.square_summable {
        DiffLabel::AbsolutelyContinuous
    } else {
        DiffLabel::AlmostEverywhereNondifferentiable
    };
    Ok(DifferentiabilityClass { label, evidence })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesProbe {
    /// `sum_{k <= j} a_k psi_k^+(x)` for `j = 0..=n`.
    pub partial_sums: Vec<f64>,
    /// `max - min` of the partial sums over `j` in `[n/2, n]`.
    pub fluctuation: f64,
}

pub fn derivative_series_probe(a: &StepSequence, x: &RadixPoint, n: u32) -> Result<SeriesProbe> {
    let walk = derivative_walk(x, n)?;
    let mut partial_sums = Vec::with_capacity(n as usize + 1);
    let mut acc = 0.0;
    partial_sums.push(acc);
    for (k, s) in (1..).zip(&walk.signs) {
        acc += a.term(k) * s.value() as f64;
        partial_sums.push(acc);
    }
    let window = &partial_sums[n as usize / 2..];
    let max = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = window.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SeriesProbe {
        partial_sums,
        fluctuation: max - min,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientProbe {
    pub ell: u32,
    /// `(f_{r,a}(x + r^-ell) - f_{r,a}(x)) * r^ell`, exact.
    pub quotient: BigRational,
}

pub fn difference_quotient_probe(a: &StepSequence, x: &RadixPoint, ells: &[u32]) -> Result<Vec<QuotientProbe>> {
    let top = ells.iter().copied().max().unwrap_or(0);
    let need = 2 * top + 16;
    if x.depth() < need {
        return Err(Error::DepthExhausted {
            index: need,
            depth: x.depth(),
        });
    }
    ells.iter()
        .map(|&ell| {
            if ell < 1 {
                return Err(Error::InvalidArgument("ell must be at least 1".into()));
            }
            let h = RadixPoint::inverse_power(x.base(), x.depth(), ell)?;
            let inc = weighted_increment(a, x, &h)?;
            let quotient = inc * BigInt::from(x.base()).pow(ell);
            Ok(QuotientProbe { ell, quotient })
        })
        .collect()
}

/// Classification as a report; fails if `sum |a_k| r^-(k-1)` diverges.
pub fn classify_report(a: &StepSequence, base: u32) -> Result<ExperimentReport> {
    a.check_summable(base)?;
    let class = classify_sequence(a)?;
    let mut report = ExperimentReport::new("classify", None)
        .param("r", base)
        .param("a", a)
        .param("label", class.label);
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    report.push(Statistic::info("square_summable", flag(class.evidence.square_summable)));
    report.push(Statistic::info("tends_to_zero", flag(class.evidence.tends_to_zero)));
    report.push(Statistic::info("limsup_abs_positive", flag(class.evidence.limsup_abs_positive)));
    Ok(report)
}
