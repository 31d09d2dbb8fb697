//! Monte Carlo experiments for the limit laws: walk CLT and LIL, the
//! Takagi increment CLT, tail frequencies of the shared-digit depth and the
//! localization of weighted walks.
//!
//! Every sample or path `i` draws from its own stream `path_rng(seed, i)`;
//! results are collected in index order, so reports are byte-identical for
//! a fixed seed regardless of thread count.

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::erwvrp::{
    correlation, correlation_by_quadrature, exact_second_moment, memory_param_of_base,
    path_rng, walk_endpoint, MemoryParameter, StepSource,
};
use crate::error::{Error, Result};
use crate::radix::{digit_depths, RadixPoint};
use crate::report::{ExperimentReport, Statistic};
use crate::sequence::StepSequence;
use crate::stats::{kolmogorov_quantile, ks_distance, normal_cdf, EmpiricalDistribution};
use crate::takagi::increment;

/// Stream reserved for the i.i.d. Gaussian positive control.
const CONTROL_STREAM: u64 = u64::MAX;

/// Guard digits carried beyond `2 ell` for Takagi sampling.
pub const GUARD_DIGITS: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub walk_ks: f64,
    pub walk_negative_ks: f64,
    pub takagi_ks: f64,
    pub takagi_negative_ks: f64,
    pub lil_band: (f64, f64),
    pub sigmas: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            walk_ks: 0.02,
            walk_negative_ks: 0.2,
            takagi_ks: 0.05,
            takagi_negative_ks: 0.1,
            lil_band: (0.6, 1.3),
            sigmas: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Right => "right",
            Side::Left => "left",
        })
    }
}

fn gaussian_control(seed: u64, samples: usize) -> Result<f64> {
    let mut rng = path_rng(seed, CONTROL_STREAM);
    let xs: Vec<f64> = (0..samples).map(|_| StandardNormal.sample(&mut rng)).collect();
    Ok(ks_distance(&EmpiricalDistribution::new(xs)?, normal_cdf))
}

fn push_moments(report: &mut ExperimentReport, sample: &EmpiricalDistribution) {
    report.push(Statistic::info("mean", sample.mean()));
    report.push(Statistic::info("variance", sample.variance()));
}

fn require_samples(samples: usize) -> Result<()> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sample count must be at least 1".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkCltConfig {
    pub p: f64,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// Also check that the unrescaled statistic `T_n / sqrt(n)` is far
    /// from the standard normal.
    pub negative_control: bool,
}

/// KS distance of `T_n / sqrt(n p/(1-p))` over independent paths.
pub fn walk_clt_experiment(cfg: &WalkCltConfig, tol: &Tolerances) -> Result<ExperimentReport> {
    let p = MemoryParameter::new(cfg.p)?;
    if cfg.n < 1 {
        return Err(Error::InvalidArgument("walk length must be at least 1".into()));
    }
    require_samples(cfg.samples)?;
    let endpoints: Vec<i64> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| walk_endpoint(&p, cfg.n, &mut path_rng(cfg.seed, i)))
        .collect();
    let scale = (cfg.n as f64 * p.asymptotic_variance()).sqrt();
    let sample = EmpiricalDistribution::new(endpoints.iter().map(|&t| t as f64 / scale).collect())?;

    let mut report = ExperimentReport::new("walk_clt", Some(cfg.seed))
        .param("p", cfg.p)
        .param("n", cfg.n)
        .param("samples", cfg.samples)
        .param("negative_control", cfg.negative_control);
    report.push(Statistic::at_most("ks_distance", ks_distance(&sample, normal_cdf), tol.walk_ks));
    push_moments(&mut report, &sample);
    report.push(Statistic::info(
        "ks_critical_99",
        kolmogorov_quantile(0.99) / (cfg.samples as f64).sqrt(),
    ));
    report.push(Statistic::at_most(
        "gaussian_control_ks",
        gaussian_control(cfg.seed, cfg.samples)?,
        tol.walk_ks,
    ));
    if cfg.negative_control {
        let root_n = (cfg.n as f64).sqrt();
        let raw = EmpiricalDistribution::new(endpoints.iter().map(|&t| t as f64 / root_n).collect())?;
        report.push(Statistic::at_least(
            "negative_control_ks",
            ks_distance(&raw, normal_cdf),
            tol.walk_negative_ks,
        ));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TakagiCltConfig {
    pub base: u32,
    pub ell: u32,
    pub samples: usize,
    pub seed: u64,
    pub side: Side,
    /// Digits carried per sample; defaults to `2 ell + 16`.
    pub depth: Option<u32>,
}

/// Normalized increment `(f_r(x+h) - f_r(x)) / (h sqrt(ell))` at a sample
/// `x`, `h = r^-ell`; for the left side, `(f_r(x) - f_r(x-h)) / (h sqrt(ell))`
/// computed as `-(f_r(y+h) - f_r(y))` with `y = 1 - x`.
pub fn takagi_normalized_increment(x: &RadixPoint, h: &RadixPoint, ell: u32, side: Side) -> Result<f64> {
    let (point, sign) = match side {
        Side::Right => (x.clone(), 1.0),
        Side::Left => (x.reflect()?, -1.0),
    };
    let q = increment(&point, h)? / h.to_rational();
    let q = q.to_f64().ok_or_else(|| Error::InvalidArgument("increment not finite".into()))?;
    Ok(sign * q / (ell as f64).sqrt())
}

pub fn takagi_clt_experiment(cfg: &TakagiCltConfig, tol: &Tolerances) -> Result<ExperimentReport> {
    if cfg.ell < 4 {
        return Err(Error::InvalidArgument(format!("ell must be at least 4, got {}", cfg.ell)));
    }
    require_samples(cfg.samples)?;
    let depth = cfg.depth.unwrap_or(2 * cfg.ell + GUARD_DIGITS);
    if depth < 2 * cfg.ell {
        return Err(Error::DepthExhausted {
            index: 2 * cfg.ell,
            depth,
        });
    }
    let r = cfg.base;
    let h = RadixPoint::inverse_power(r, depth, cfg.ell)?;
    let raw: Vec<f64> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = RadixPoint::uniform(r, depth, &mut path_rng(cfg.seed, i))?;
            takagi_normalized_increment(&x, &h, cfg.ell, cfg.side)
        })
        .collect::<Result<_>>()?;
    let odd = r % 2 == 1;
    let factor = if odd {
        ((r - 1) as f64 / (r + 1) as f64).sqrt()
    } else {
        1.0
    };
    let sample = EmpiricalDistribution::new(raw.iter().map(|v| v * factor).collect())?;

    let mut report = ExperimentReport::new("takagi_clt", Some(cfg.seed))
        .param("r", r)
        .param("ell", cfg.ell)
        .param("depth", depth)
        .param("samples", cfg.samples)
        .param("side", cfg.side)
        .param("odd_factor", factor);
    report.push(Statistic::at_most("ks_distance", ks_distance(&sample, normal_cdf), tol.takagi_ks));
    push_moments(&mut report, &sample);
    report.push(Statistic::at_most(
        "gaussian_control_ks",
        gaussian_control(cfg.seed, cfg.samples)?,
        tol.takagi_ks,
    ));
    if odd {
        let unscaled = EmpiricalDistribution::new(raw)?;
        report.push(Statistic::at_least(
            "negative_control_ks",
            ks_distance(&unscaled, normal_cdf),
            tol.takagi_negative_ks,
        ));
    }
    Ok(report)
}

/// `max_{100 <= n <= n_max} T_n / sqrt(2 n ln ln n)` along one path.
pub fn lil_running_max(p: &MemoryParameter, n_max: usize, seed: u64, index: u64) -> f64 {
    let mut rng = path_rng(seed, index);
    let mut t = 0i64;
    let mut best = f64::NEG_INFINITY;
    for (n, x) in (1..=n_max).zip(StepSource::new(p, &mut rng)) {
        t += x as i64;
        if n >= 100 {
            let nf = n as f64;
            best = best.max(t as f64 / (2.0 * nf * nf.ln().ln()).sqrt());
        }
    }
    best
}

pub fn lil_tracker(p: f64, n_max: usize, paths: usize, seed: u64, tol: &Tolerances) -> Result<ExperimentReport> {
    let mp = MemoryParameter::new(p)?;
    if n_max < 1000 {
        return Err(Error::InvalidArgument(format!("n_max must be at least 1000, got {n_max}")));
    }
    require_samples(paths)?;
    let maxima: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|i| lil_running_max(&mp, n_max, seed, i))
        .collect();
    let dist = EmpiricalDistribution::new(maxima)?;
    let limit = mp.asymptotic_variance().sqrt();
    let mut report = ExperimentReport::new("walk_lil", Some(seed))
        .param("p", p)
        .param("n_max", n_max)
        .param("paths", paths);
    for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
        report.push(Statistic::info(format!("running_max_q{:02}", (q * 100.0) as u32), dist.quantile(q)));
    }
    report.push(Statistic::info("lil_limit", limit));
    report.push(Statistic::checked(
        "median_over_limit",
        dist.median() / limit,
        Some(tol.lil_band.0),
        Some(tol.lil_band.1),
    ));
    Ok(report)
}

/// Frequencies of `{m - k0 >= j}` (and `{m - min(k0, k0_hat) >= j}` for
/// odd bases) for `j = 1..=max_j`, against `r^-(j-1)` and `2 r^-(j-1)`.
pub fn k0_tail_experiment(
    base: u32,
    ell: u32,
    samples: usize,
    seed: u64,
    max_j: u32,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    require_samples(samples)?;
    if ell < 1 {
        return Err(Error::InvalidArgument("ell must be at least 1".into()));
    }
    let depth = 2 * ell + GUARD_DIGITS;
    let h = RadixPoint::inverse_power(base, depth, ell)?;
    let gaps: Vec<(i64, i64)> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = RadixPoint::uniform(base, depth, &mut path_rng(seed, i))?;
            let d = digit_depths(&x, &h)?;
            Ok((d.m as i64 - d.k0 as i64, d.m as i64 - d.k0_min as i64))
        })
        .collect::<Result<_>>()?;
    let odd = base % 2 == 1;
    let mut report = ExperimentReport::new("k0_tail", Some(seed))
        .param("r", base)
        .param("ell", ell)
        .param("depth", depth)
        .param("samples", samples)
        .param("max_j", max_j);
    let n = samples as f64;
    let mut check = |name: String, count: usize, bound: f64| {
        let b = bound.min(1.0);
        let sigma = (b * (1.0 - b) / n).sqrt();
        report.push(Statistic::at_most(name, count as f64 / n, bound + tol.sigmas * sigma));
    };
    for j in 1..=max_j as i64 {
        let bound = (base as f64).powi(1 - j as i32);
        let plain = gaps.iter().filter(|g| g.0 >= j).count();
        check(format!("freq_k0_j{j}"), plain, bound);
        if odd {
            let joint = gaps.iter().filter(|g| g.1 >= j).count();
            check(format!("freq_k0min_j{j}"), joint, 2.0 * bound);
        }
    }
    Ok(report)
}

/// Monte Carlo `E[(S_n - S_{n/2})^2]` for the weighted walk, compared with
/// the exact second moment and the sandwich `[1/K, K] * sum a_k^2`.
pub fn localization_experiment(
    p: f64,
    a: &StepSequence,
    ns: &[u64],
    paths: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    let mp = MemoryParameter::new(p)?;
    require_samples(paths)?;
    let mut report = ExperimentReport::new("localization", Some(seed))
        .param("p", p)
        .param("a", a)
        .param("ns", ns.iter().map(u64::to_string).collect::<Vec<_>>().join(";"))
        .param("paths", paths);
    report.push(Statistic::info("k", mp.k));
    for (block, &n) in ns.iter().enumerate() {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
        }
        let half = n / 2;
        let weights = a.terms(n);
        let offset = block as u64 * paths as u64;
        let squares: Vec<f64> = (0..paths as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = path_rng(seed, offset + i);
                let window: f64 = StepSource::new(&mp, &mut rng)
                    .zip(&weights)
                    .skip(half as usize)
                    .map(|(x, w)| w * x as f64)
                    .sum();
                window * window
            })
            .collect();
        let mean = squares.iter().sum::<f64>() / paths as f64;
        let var = squares.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (paths as f64 - 1.0).max(1.0);
        let sigma = (var / paths as f64).sqrt();
        let exact = exact_second_moment(&mp, a, half, n)?;
        let window = a.window_sq_sum(half, n);
        report.push(Statistic::info(format!("mc_moment_n{n}"), mean));
        report.push(Statistic::info(format!("exact_moment_n{n}"), exact));
        report.push(Statistic::at_most(
            format!("z_score_n{n}"),
            (mean - exact).abs() / sigma.max(f64::MIN_POSITIVE),
            tol.sigmas,
        ));
        report.push(Statistic::info(format!("window_sq_sum_n{n}"), window));
        report.push(Statistic::at_least(format!("mc_over_lower_n{n}"), mean / (window / mp.k), 1.0));
        report.push(Statistic::checked(
            format!("exact_in_sandwich_n{n}"),
            exact / window,
            Some(1.0 / mp.k),
            Some(mp.k),
        ));
    }
    Ok(report)
}

/// `E[X_k X_{k+j}]` in closed form against quadrature of the spectral density.
pub fn spectral_experiment(p: f64, j: u32, nodes: usize) -> Result<ExperimentReport> {
    let mp = MemoryParameter::new(p)?;
    if nodes < 2 {
        return Err(Error::InvalidArgument("need at least two quadrature nodes".into()));
    }
    let exact = correlation(&mp, j);
    let quad = correlation_by_quadrature(&mp, j, nodes);
    let mut report = ExperimentReport::new("spectral", None)
        .param("p", p)
        .param("j", j)
        .param("nodes", nodes);
    report.push(Statistic::info("correlation", exact));
    report.push(Statistic::info("quadrature", quad));
    report.push(Statistic::at_most("abs_error", (exact - quad).abs(), 1e-8));
    Ok(report)
}

/// Empirical repeat frequency of the derivative-sign walk `psi_k^+(x)` for
/// uniform `x`, against `p_r`.
pub fn derivative_walk_experiment(
    base: u32,
    n: u32,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<ExperimentReport> {
    require_samples(samples)?;
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two steps".into()));
    }
    let pr = memory_param_of_base(base)?;
    let freqs: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = RadixPoint::uniform(base, n + GUARD_DIGITS, &mut path_rng(seed, i))?;
            let walk = crate::takagi::derivative_walk(&x, n)?;
            let repeats = walk.signs.windows(2).filter(|w| w[0] == w[1]).count();
            Ok(repeats as f64 / (n - 1) as f64)
        })
        .collect::<Result<_>>()?;
    let dist = EmpiricalDistribution::new(freqs)?;
    let sigma = (dist.variance() / samples as f64).sqrt();
    let mut report = ExperimentReport::new("derivative_walk", Some(seed))
        .param("r", base)
        .param("n", n)
        .param("samples", samples);
    report.push(Statistic::info("p_r", pr.p));
    report.push(Statistic::info("repeat_frequency", dist.mean()));
    report.push(Statistic::at_most(
        "z_score",
        (dist.mean() - pr.p).abs() / sigma.max(f64::MIN_POSITIVE),
        tol.sigmas,
    ));
    Ok(report)
}

/// Fresh generator independent of all path streams, for ad hoc sampling.
pub fn auxiliary_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(CONTROL_STREAM - 1);
    rng
}
