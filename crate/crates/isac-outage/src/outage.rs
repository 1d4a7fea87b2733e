//! The two headline quantities of the link analysis: the user's rate-outage
//! probability `P(SINR < gamma)` and the target's estimation-outage
//! probability `P(CRB > epsilon)`, each available analytically (Gaussian
//! approximation + generalized chi-square CDF) and by seeded Monte Carlo.

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::config::SystemConfig;
use crate::error::{IsacError, Result};
use crate::model::{crb_scale, crb_simplified, sample_channel, sinr};
use crate::moments::{moments_target, moments_user};
use crate::quadform::{domain_probability, QuadraticDomain};
use crate::quadrature::GaussLegendre;
use crate::rng::RandomStream;

/// Trials per work item when Monte Carlo runs are split across threads.
/// Results are independent of this value because every trial derives its own
/// substream; batching only amortizes scheduling.
const TRIAL_BATCH: u64 = 8192;

/// Tolerance on the theta-quadrature doubling check.
const THETA_CONVERGENCE_TOL: f64 = 1e-4;

/// How an estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Analytic,
    MonteCarlo,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Analytic => write!(f, "analytic"),
            Method::MonteCarlo => write!(f, "monte-carlo"),
        }
    }
}

/// A probability estimate with its standard error (zero for analytic values).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub method: Method,
}

impl Estimate {
    fn probability(value: f64, std_error: f64, method: Method) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(IsacError::invalid(
                "value",
                format!("probability out of range: {value}"),
            ));
        }
        Ok(Estimate {
            value,
            std_error,
            method,
        })
    }
}

/// A Monte Carlo mean with its standard error; not restricted to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    /// Bits per channel use.
    pub value: f64,
    pub std_error: f64,
}

/// One outage evaluation request.
#[derive(Debug, Clone)]
pub struct OutageQuery {
    pub config: SystemConfig,
    /// SINR threshold (linear) for the user outage.
    pub gamma: f64,
    /// CRB threshold for the target outage.
    pub epsilon: f64,
    /// Monte Carlo trial count.
    pub trials: u64,
    /// Master seed; trial `k` uses substream `(seed, k)`.
    pub seed: u64,
    /// Gauss-Legendre nodes per half-interval of the theta integral.
    pub theta_nodes: usize,
}

impl OutageQuery {
    pub fn new(config: SystemConfig) -> Self {
        OutageQuery {
            config,
            gamma: 8.0,
            epsilon: 8e-7,
            trials: 10_000,
            seed: 42,
            theta_nodes: 32,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(IsacError::invalid(
                "gamma",
                format!("must be >= 0, got {}", self.gamma),
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(IsacError::invalid(
                "epsilon",
                format!("must be >= 0, got {}", self.epsilon),
            ));
        }
        if self.trials < 1 {
            return Err(IsacError::invalid("trials", "must be >= 1"));
        }
        if self.theta_nodes < 8 {
            return Err(IsacError::invalid(
                "theta_nodes",
                format!("must be >= 8, got {}", self.theta_nodes),
            ));
        }
        Ok(())
    }
}

/// Sublevel-set form of the user outage event `SINR < gamma`:
/// `X^2 + Y^2 - K * gamma * sigma_u2 / p_t < 0`.
pub fn user_domain(config: &SystemConfig, gamma: f64) -> QuadraticDomain {
    let q2 = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0));
    let q1 = Vector3::new(0.0, 0.0, -gamma * config.sigma_u2 / config.p_t);
    QuadraticDomain::new(q2, q1, 0.0).expect("diagonal matrix is symmetric")
}

/// Sublevel-set form of the conditional target outage event `CRB > epsilon`
/// at a fixed azimuth:
/// `epsilon * (Xt^2 + Yt^2 + 2n Re(b2) Xt + 2n Im(b2) Yt + n^2 |b2|^2) - g(theta) K < 0`.
pub fn target_domain(config: &SystemConfig, epsilon: f64, theta: f64) -> QuadraticDomain {
    let n = config.n as f64;
    let b2 = config.b2();
    let g = crb_scale(config, theta);
    let q2 = Matrix3::from_diagonal(&Vector3::new(epsilon, epsilon, 0.0));
    let q1 = Vector3::new(2.0 * n * epsilon * b2.re, 2.0 * n * epsilon * b2.im, -g);
    let c = epsilon * n * n * b2.norm_sqr();
    QuadraticDomain::new(q2, q1, c).expect("diagonal matrix is symmetric")
}

/// Analytic user outage probability. The Gaussian law of `(X, Y, K)` does not
/// depend on the azimuth, so no averaging over it is required.
pub fn user_op_analytic(query: &OutageQuery) -> Result<Estimate> {
    query.validate()?;
    let gauss = moments_user(&query.config)?;
    let domain = user_domain(&query.config, query.gamma);
    let p = domain_probability(&domain, &gauss)?;
    Estimate::probability(p, 0.0, Method::Analytic)
}

/// Analytic target outage probability: the conditional sublevel probability
/// averaged over the uniform azimuth.
///
/// The integrand is a probability in [0, 1] that can turn into a near-step
/// in theta when the summed triple concentrates (small `b1`), so each
/// half-interval around pi/2 is integrated by adaptive bisection with
/// Gauss-Legendre panels of `theta_nodes` points. A full recomputation with
/// doubled panel size serves as the convergence check.
pub fn target_op_analytic(query: &OutageQuery) -> Result<Estimate> {
    query.validate()?;
    let gauss = moments_target(&query.config)?;
    let half = std::f64::consts::FRAC_PI_2;

    let average = |nodes: usize| -> Result<f64> {
        let rule = GaussLegendre::new(nodes);
        let panel = |a: f64, b: f64| -> Result<f64> {
            let mut acc = 0.0;
            for (theta, weight) in rule.mapped(a, b) {
                let domain = target_domain(&query.config, query.epsilon, theta);
                acc += weight * domain_probability(&domain, &gauss)?;
            }
            Ok(acc)
        };
        // Local error target: the sum over panels stays below ~1e-6 * pi.
        let tol_per_width = 1e-6;
        let mut total = 0.0;
        for (a, b) in [(0.0, half), (half, 2.0 * half)] {
            let mut stack = vec![(a, b, panel(a, b)?)];
            while let Some((a, b, whole)) = stack.pop() {
                let mid = 0.5 * (a + b);
                let left = panel(a, mid)?;
                let right = panel(mid, b)?;
                let err = (whole - left - right).abs();
                if err < tol_per_width * (b - a) || (b - a) < 1e-7 {
                    total += left + right;
                } else {
                    stack.push((a, mid, left));
                    stack.push((mid, b, right));
                }
            }
        }
        Ok(total / std::f64::consts::PI)
    };

    let coarse = average(query.theta_nodes)?;
    let fine = average(2 * query.theta_nodes)?;
    let delta = (fine - coarse).abs();
    if delta > THETA_CONVERGENCE_TOL {
        return Err(IsacError::QuadratureNotConverged { delta });
    }
    Estimate::probability(fine.clamp(0.0, 1.0), 0.0, Method::Analytic)
}

/// Exact per-realization SINR, with a degenerate beamformer scored as zero
/// signal.
pub(crate) fn sinr_value(config: &SystemConfig, chan: &crate::model::ChannelRealization) -> f64 {
    sinr(config, chan).unwrap_or(0.0)
}

/// Exact per-realization CRB, with a singular Fisher information scored as
/// infinite (it exceeds every finite threshold).
pub(crate) fn crb_value(config: &SystemConfig, chan: &crate::model::ChannelRealization) -> f64 {
    crb_simplified(config, chan).unwrap_or(f64::INFINITY)
}

/// Map trials `0..trials` through `f`, batched across threads, preserving
/// trial order in the output.
pub(crate) fn map_trials<T: Send>(trials: u64, f: impl Fn(u64) -> T + Sync) -> Vec<T> {
    let batches = trials.div_ceil(TRIAL_BATCH);
    let chunks: Vec<Vec<T>> = (0..batches)
        .into_par_iter()
        .map(|b| {
            let start = b * TRIAL_BATCH;
            let end = ((b + 1) * TRIAL_BATCH).min(trials);
            (start..end).map(&f).collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Exact SINR draws, one substream per trial.
pub fn sinr_samples(config: &SystemConfig, trials: u64, seed: u64) -> Vec<f64> {
    map_trials(trials, |k| {
        let mut rng = RandomStream::substream(seed, k);
        let chan = sample_channel(config, &mut rng);
        sinr_value(config, &chan)
    })
}

/// Exact CRB draws, one substream per trial; singular draws are infinite.
pub fn crb_samples(config: &SystemConfig, trials: u64, seed: u64) -> Vec<f64> {
    map_trials(trials, |k| {
        let mut rng = RandomStream::substream(seed, k);
        let chan = sample_channel(config, &mut rng);
        crb_value(config, &chan)
    })
}

fn binomial_estimate(hits: u64, trials: u64, method: Method) -> Result<Estimate> {
    let p = hits as f64 / trials as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    Estimate::probability(p, se, method)
}

/// Monte Carlo user outage probability over exact SINR draws (no Gaussian
/// approximation anywhere in this path).
pub fn user_op_montecarlo(query: &OutageQuery) -> Result<Estimate> {
    query.validate()?;
    let hits: u64 = map_trials(query.trials, |k| {
        let mut rng = RandomStream::substream(query.seed, k);
        let chan = sample_channel(&query.config, &mut rng);
        u64::from(sinr_value(&query.config, &chan) < query.gamma)
    })
    .into_iter()
    .sum();
    binomial_estimate(hits, query.trials, Method::MonteCarlo)
}

/// Monte Carlo target outage probability over exact CRB draws.
pub fn target_op_montecarlo(query: &OutageQuery) -> Result<Estimate> {
    query.validate()?;
    let hits: u64 = map_trials(query.trials, |k| {
        let mut rng = RandomStream::substream(query.seed, k);
        let chan = sample_channel(&query.config, &mut rng);
        u64::from(crb_value(&query.config, &chan) > query.epsilon)
    })
    .into_iter()
    .sum();
    binomial_estimate(hits, query.trials, Method::MonteCarlo)
}

/// Monte Carlo ergodic rate `E[log2(1 + SINR)]` with the standard error of
/// the mean. Partial sums are reduced in batch order so the result does not
/// depend on thread scheduling.
pub fn ergodic_rate_montecarlo(query: &OutageQuery) -> Result<RateEstimate> {
    query.validate()?;
    let rates = map_trials(query.trials, |k| {
        let mut rng = RandomStream::substream(query.seed, k);
        let chan = sample_channel(&query.config, &mut rng);
        (1.0 + sinr_value(&query.config, &chan)).log2()
    });
    let n = query.trials as f64;
    let mean = rates.iter().sum::<f64>() / n;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    Ok(RateEstimate {
        value: mean,
        std_error: (var / n).sqrt(),
    })
}
