//! The elephant random walk remembering the very recent past: a `±1`
//! Markov chain whose next step repeats the previous one with probability
//! `p`. Simulation, exact two-point laws, the spectral density of the step
//! sequence and second moments of weighted sums.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Num;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::StepSequence;

/// Memory parameter `p` in `(0, 1)` with its derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryParameter {
    pub p: f64,
    /// `2p - 1`, the one-step correlation.
    pub alpha: f64,
    /// `max(p/(1-p), (1-p)/p)`, the second-moment sandwich constant.
    pub k: f64,
}

impl MemoryParameter {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidMemory(p));
        }
        let odds = p / (1.0 - p);
        Ok(Self {
            p,
            alpha: 2.0 * p - 1.0,
            k: odds.max(1.0 / odds),
        })
    }

    /// `p / (1 - p)`, the limit of `Var(T_n) / n`.
    pub fn asymptotic_variance(&self) -> f64 {
        self.p / (1.0 - self.p)
    }

    /// Threshold on a uniform `u32` below which the previous step repeats.
    fn repeat_threshold(&self) -> u64 {
        (self.p * 4_294_967_296.0).round() as u64
    }
}

/// `p_r`: `1/2` for even `r`, `(r+1)/(2r)` for odd `r`.
pub fn memory_param_of_base_exact(base: u32) -> Result<BigRational> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    Ok(if base.is_multiple_of(2) {
        BigRational::new(1.into(), 2.into())
    } else {
        BigRational::new(BigInt::from(base + 1), BigInt::from(2 * base))
    })
}

pub fn memory_param_of_base(base: u32) -> Result<MemoryParameter> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    let p = if base.is_multiple_of(2) {
        0.5
    } else {
        (base + 1) as f64 / (2 * base) as f64
    };
    MemoryParameter::new(p)
}

/// RNG for path `index` of an experiment seeded with `seed`: ChaCha8 keyed
/// by the seed, one 64-bit stream per path. Paths are independent of the
/// order in which they are generated.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Step generator for one path.
pub struct StepSource<'a, R: RngCore> {
    rng: &'a mut R,
    threshold: u64,
    last: i8,
}

impl<'a, R: RngCore> StepSource<'a, R> {
    pub fn new(p: &MemoryParameter, rng: &'a mut R) -> Self {
        Self {
            rng,
            threshold: p.repeat_threshold(),
            last: 0,
        }
    }
}

impl<R: RngCore> Iterator for StepSource<'_, R> {
    type Item = i8;

    #[inline]
    fn next(&mut self) -> Option<i8> {
        let u = self.rng.next_u32() as u64;
        self.last = if self.last == 0 {
            // symmetric first step
            if u >> 31 == 0 {
                1
            } else {
                -1
            }
        } else if u < self.threshold {
            self.last
        } else {
            -self.last
        };
        Some(self.last)
    }
}

/// One realization `X_1..X_n` with prefix sums `T_0..T_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkPath {
    pub p: MemoryParameter,
    pub seed: u64,
    pub steps: Vec<i8>,
    pub sums: Vec<i64>,
}

impl WalkPath {
    pub fn endpoint(&self) -> i64 {
        *self.sums.last().unwrap_or(&0)
    }
}

pub fn simulate(p: &MemoryParameter, n: usize, seed: u64) -> Result<WalkPath> {
    simulate_path(p, n, seed, 0)
}

pub fn simulate_path(p: &MemoryParameter, n: usize, seed: u64, index: u64) -> Result<WalkPath> {
    if n < 1 {
        return Err(Error::InvalidArgument("walk length must be at least 1".into()));
    }
    let mut rng = path_rng(seed, index);
    let steps: Vec<i8> = StepSource::new(p, &mut rng).take(n).collect();
    let mut sums = Vec::with_capacity(n + 1);
    let mut acc = 0i64;
    sums.push(0);
    for &x in &steps {
        acc += x as i64;
        sums.push(acc);
    }
    Ok(WalkPath {
        p: *p,
        seed,
        steps,
        sums,
    })
}

/// `T_n` without storing the path.
pub fn walk_endpoint<R: RngCore>(p: &MemoryParameter, n: usize, rng: &mut R) -> i64 {
    StepSource::new(p, rng).take(n).map(|x| x as i64).sum()
}

/// `Q^m = (1/2)[[1,1],[1,1]] + ((2p-1)^m / 2)[[1,-1],[-1,1]]`.
pub fn transition_power(p: &MemoryParameter, m: u32) -> [[f64; 2]; 2] {
    let decay = p.alpha.powi(m as i32) / 2.0;
    let same = 0.5 + decay;
    let flip = 0.5 - decay;
    [[same, flip], [flip, same]]
}

/// `E[X_k X_{k+j}] = (2p-1)^j`, with `0^0 = 1`.
pub fn correlation(p: &MemoryParameter, j: u32) -> f64 {
    p.alpha.powi(j as i32)
}

/// Spectral density of the step sequence on `[-pi, pi]`.
pub fn spectral_density(p: &MemoryParameter, lambda: f64) -> f64 {
    let a = p.alpha;
    (1.0 - a * a) / (2.0 * PI * (1.0 - 2.0 * a * lambda.cos() + a * a))
}

/// `int_{-pi}^{pi} cos(j lambda) rho(lambda) d lambda` by the trapezoidal
/// rule, which converges geometrically for this periodic analytic integrand.
pub fn correlation_by_quadrature(p: &MemoryParameter, j: u32, nodes: usize) -> f64 {
    let step = 2.0 * PI / nodes as f64;
    let sum: f64 = (0..nodes)
        .map(|i| {
            let lambda = -PI + i as f64 * step;
            (j as f64 * lambda).cos() * spectral_density(p, lambda)
        })
        .sum();
    sum * step
}

/// `E[(sum_i w_i X_i)^2]` over consecutive steps, using
/// `sum_i w_i^2 + 2 sum_i w_i u_i` with `u_i = alpha (u_{i-1} + w_{i-1})`.
/// Linear time; works over any numeric field.
pub fn window_second_moment<T: Num + Clone>(alpha: &T, weights: &[T]) -> T {
    let two = T::one() + T::one();
    let mut squares = T::zero();
    let mut cross = T::zero();
    let mut carry = T::zero();
    for w in weights {
        squares = squares + w.clone() * w.clone();
        cross = cross + w.clone() * carry.clone();
        carry = alpha.clone() * (carry + w.clone());
    }
    squares + two * cross
}

/// `E[(S_n - S_m)^2]` for weights `a`, `n > m >= 0`.
pub fn exact_second_moment(p: &MemoryParameter, a: &StepSequence, m: u64, n: u64) -> Result<f64> {
    if n <= m {
        return Err(Error::InvalidArgument(format!("need n > m, got n={n}, m={m}")));
    }
    let weights: Vec<f64> = (m + 1..=n).map(|k| a.term(k)).collect();
    Ok(window_second_moment(&p.alpha, &weights))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Localization {
    Converges,
    Diverges,
}

/// The weighted walk converges almost surely iff `sum a_k^2 < infinity`,
/// whatever the memory parameter.
pub fn localization_class(a: &StepSequence) -> Localization {
    if a.is_square_summable() {
        Localization::Converges
    } else {
        Localization::Diverges
    }
}

/// Partial sums `S_0..S_n` of `sum a_k X_k` for path `index`.
pub fn weighted_simulate_path(
    p: &MemoryParameter,
    weights: &[f64],
    seed: u64,
    index: u64,
) -> Vec<f64> {
    let mut rng = path_rng(seed, index);
    let mut out = Vec::with_capacity(weights.len() + 1);
    let mut acc = 0.0;
    out.push(acc);
    for (x, w) in StepSource::new(p, &mut rng).zip(weights) {
        acc += w * x as f64;
        out.push(acc);
    }
    out
}

pub fn weighted_simulate(
    p: &MemoryParameter,
    a: &StepSequence,
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n < 1 {
        return Err(Error::InvalidArgument("walk length must be at least 1".into()));
    }
    Ok(weighted_simulate_path(p, &a.terms(n as u64), seed, 0))
}
