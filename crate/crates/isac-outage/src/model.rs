//! Complex-vector model of the dual-functional link: channel sampling,
//! array steering, the shared beamformer, and the exact per-realization
//! SINR and angle-estimation CRB.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::config::SystemConfig;
use crate::error::{IsacError, Result};
use crate::rng::RandomStream;

/// Norm below which the beamforming direction counts as degenerate.
const BEAMFORMER_NORM_FLOOR: f64 = 1e-12;

/// Denominator floor below which the Fisher information counts as singular.
const FISHER_FLOOR: f64 = 1e-300;

/// One draw of the random link state: user channel and target azimuth.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// User channel, length `n`, entries CN(0, 1).
    pub h: Vec<Complex64>,
    /// Target azimuth in radians, in [0, pi].
    pub theta: f64,
}

/// Unit-norm transmit beamforming vector.
#[derive(Debug, Clone)]
pub struct Beamformer {
    w: Vec<Complex64>,
}

impl Beamformer {
    /// The weight vector (unit norm).
    pub fn weights(&self) -> &[Complex64] {
        &self.w
    }
}

/// Phase grid of a uniform linear array with `count` elements:
/// element `i` (1-based) carries phase `pi * sin(theta) * (count - (2i-1)) / 2`.
///
/// The grid is symmetric around zero and sums to zero for every `count`.
pub fn steering_phases(theta: f64, count: usize) -> Vec<f64> {
    let scale = PI * theta.sin() / 2.0;
    (1..=count)
        .map(|i| scale * (count as f64 - (2 * i - 1) as f64))
        .collect()
}

/// Array response `a(theta)` with elements `e^{-j f_i}`.
pub fn steering_vector(theta: f64, count: usize) -> Vec<Complex64> {
    steering_phases(theta, count)
        .into_iter()
        .map(|f| Complex64::from_polar(1.0, -f))
        .collect()
}

/// Element-wise derivative of [`steering_vector`] with respect to `theta`.
pub fn steering_derivative(theta: f64, count: usize) -> Vec<Complex64> {
    let rate = PI * theta.cos() / 2.0;
    steering_phases(theta, count)
        .into_iter()
        .enumerate()
        .map(|(idx, f)| {
            let coeff = rate * (count as f64 - (2 * (idx + 1) - 1) as f64);
            Complex64::new(0.0, -coeff) * Complex64::from_polar(1.0, -f)
        })
        .collect()
}

/// Closed form of the squared derivative norm:
/// `(count-1) * count * (count+1) * pi^2 * cos^2(theta) / 12`.
pub fn steering_derivative_norm_sq(theta: f64, count: usize) -> f64 {
    let c = count as f64;
    (c - 1.0) * c * (c + 1.0) * PI * PI * theta.cos().powi(2) / 12.0
}

/// Draw one channel realization: `h_i = m_i + j n_i` with
/// `m_i, n_i ~ N(0, 1/2)` i.i.d., then `theta ~ Uniform[0, pi]`.
pub fn sample_channel(config: &SystemConfig, rng: &mut RandomStream) -> ChannelRealization {
    let sigma = 0.5f64.sqrt();
    let h = (0..config.n)
        .map(|_| {
            let re = sigma * rng.standard_normal();
            let im = sigma * rng.standard_normal();
            Complex64::new(re, im)
        })
        .collect();
    let theta = rng.uniform(0.0, PI);
    ChannelRealization { h, theta }
}

/// Unnormalized beamforming direction `b1*h + b2*a(theta)`.
fn beam_direction(config: &SystemConfig, chan: &ChannelRealization) -> Vec<Complex64> {
    let b1 = config.b1();
    let b2 = config.b2();
    let a = steering_vector(chan.theta, config.n);
    chan.h
        .iter()
        .zip(a.iter())
        .map(|(&hi, &ai)| b1 * hi + b2 * ai)
        .collect()
}

/// The shared beamformer `w = (b1*h + b2*a) / ||b1*h + b2*a||`.
pub fn beamformer(config: &SystemConfig, chan: &ChannelRealization) -> Result<Beamformer> {
    let dir = beam_direction(config, chan);
    let norm = dir.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < BEAMFORMER_NORM_FLOOR {
        return Err(IsacError::DegenerateBeamformer { norm });
    }
    Ok(Beamformer {
        w: dir.into_iter().map(|z| z / norm).collect(),
    })
}

fn inner_product(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    // x^H y
    x.iter().zip(y.iter()).map(|(&a, &b)| a.conj() * b).sum()
}

/// Received SINR of the user: `(p_t / sigma_u2) * |h^H w|^2`.
pub fn sinr(config: &SystemConfig, chan: &ChannelRealization) -> Result<f64> {
    let w = beamformer(config, chan)?;
    let hw = inner_product(&chan.h, w.weights());
    Ok(config.p_t / config.sigma_u2 * hw.norm_sqr())
}

/// Scale factor of the simplified CRB:
/// `g(theta) = 6 sigma_r2 / (l p_t |alpha|^2 (m-1) m (m+1) pi^2 cos^2 theta)`.
pub fn crb_scale(config: &SystemConfig, theta: f64) -> f64 {
    let m = config.m as f64;
    let alpha2 = config.alpha_mag * config.alpha_mag;
    6.0 * config.sigma_r2
        / (config.l as f64 * config.p_t * alpha2 * (m - 1.0) * m * (m + 1.0) * PI * PI
            * theta.cos().powi(2))
}

/// CRB of the azimuth estimate in its general trace form.
///
/// Builds `A = b a^H`, its theta-derivative, and the rank-one sample
/// covariance `R_x = p_t w w^H` as full matrices, then evaluates
/// `sigma_r2 tr(A^H A R_x) / (2 |alpha|^2 l (tr(A^H A R_x) tr(Ad^H Ad R_x) - |tr(Ad^H A R_x)|^2))`.
pub fn crb_general(config: &SystemConfig, chan: &ChannelRealization) -> Result<f64> {
    let w = beamformer(config, chan)?;
    let n = config.n;
    let m = config.m;

    let a_tx = steering_vector(chan.theta, n);
    let a_tx_dot = steering_derivative(chan.theta, n);
    let b_rx = steering_vector(chan.theta, m);
    let b_rx_dot = steering_derivative(chan.theta, m);

    let col = |v: &[Complex64]| DMatrix::from_column_slice(v.len(), 1, v);
    let b_mat = col(&b_rx);
    let bdot_mat = col(&b_rx_dot);
    let a_mat = col(&a_tx);
    let adot_mat = col(&a_tx_dot);
    let w_mat = col(w.weights());

    // A = b a^H, Adot = bdot a^H + b adot^H, R_x = p_t w w^H
    let a_full = &b_mat * a_mat.adjoint();
    let adot_full = &bdot_mat * a_mat.adjoint() + &b_mat * adot_mat.adjoint();
    let rx = &w_mat * w_mat.adjoint() * Complex64::new(config.p_t, 0.0);

    let tr_aa = (a_full.adjoint() * &a_full * &rx).trace();
    let tr_dd = (adot_full.adjoint() * &adot_full * &rx).trace();
    let tr_da = (adot_full.adjoint() * &a_full * &rx).trace();

    let alpha2 = config.alpha_mag * config.alpha_mag;
    let denominator =
        2.0 * alpha2 * config.l as f64 * (tr_aa.re * tr_dd.re - tr_da.norm_sqr());
    if !(denominator > FISHER_FLOOR) {
        return Err(IsacError::SingularFisher { denominator });
    }
    Ok(config.sigma_r2 * tr_aa.re / denominator)
}

/// CRB of the azimuth estimate in its simplified form:
/// `sigma_r2 / (2 l p_t |alpha|^2 ||bdot||^2 |a^H w|^2)`.
pub fn crb_simplified(config: &SystemConfig, chan: &ChannelRealization) -> Result<f64> {
    let w = beamformer(config, chan)?;
    let a = steering_vector(chan.theta, config.n);
    let aw = inner_product(&a, w.weights());
    let bdot_sq = steering_derivative_norm_sq(chan.theta, config.m);
    let alpha2 = config.alpha_mag * config.alpha_mag;
    let denominator =
        2.0 * config.l as f64 * config.p_t * alpha2 * bdot_sq * aw.norm_sqr();
    if !(denominator > FISHER_FLOOR) {
        return Err(IsacError::SingularFisher { denominator });
    }
    Ok(config.sigma_r2 / denominator)
}
