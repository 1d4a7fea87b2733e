//! Per-element sample triples behind the SINR and CRB decompositions, their
//! exact first and second moments, and the resulting trivariate-Gaussian
//! approximations of the summed triples.
//!
//! For the user link the per-element triple is
//! `(x_i, y_i, k_i) = (Re(b1|h_i|^2 + b2 h_i* e^{-j f_i}), Im(...), |b1 h_i + b2 e^{-j f_i}|^2)`;
//! for the target it is `(xt_i, yt_i, k_i)` with `xt_i + j yt_i = b1 e^{j f_i} h_i`.
//! Both triples have closed-form moments that do not depend on the azimuth,
//! which is what lets the summed triple collapse to a single Gaussian.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{IsacError, Result};

/// Absolute symmetry tolerance for 3x3 covariance-like matrices.
const SYMMETRY_TOL: f64 = 1e-14;

/// Relative eigenvalue tolerance: eigenvalues below `-PSD_TOL * trace`
/// disqualify a covariance; eigenvalues below `+PSD_TOL * trace` are treated
/// as exact zeros when taking matrix square roots.
pub(crate) const PSD_TOL: f64 = 1e-12;

/// One realization of a per-element triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTriple {
    pub first: f64,
    pub second: f64,
    /// Always nonnegative: it is a squared magnitude.
    pub third: f64,
}

/// Mean vector and covariance matrix of a trivariate Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct TrivariateGaussian {
    mean: Vector3<f64>,
    cov: Matrix3<f64>,
}

impl TrivariateGaussian {
    /// Validates symmetry and positive semidefiniteness (up to roundoff).
    pub fn new(mean: Vector3<f64>, cov: Matrix3<f64>) -> Result<Self> {
        let scale = 1.0 + cov.abs().max();
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(IsacError::invalid(
                        "cov",
                        format!("matrix not symmetric at ({i},{j})"),
                    ));
                }
            }
        }
        let trace = cov.trace();
        let eigen = SymmetricEigen::new(cov);
        if let Some(min) = eigen
            .eigenvalues
            .iter()
            .cloned()
            .min_by(|a, b| a.partial_cmp(b).unwrap())
        {
            if min < -PSD_TOL * trace.max(1.0) {
                return Err(IsacError::NonPsdCovariance { eigenvalue: min });
            }
        }
        Ok(TrivariateGaussian { mean, cov })
    }

    pub fn mean(&self) -> &Vector3<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix3<f64> {
        &self.cov
    }

    /// Symmetric PSD square root of the covariance, with eigenvalues inside
    /// the roundoff band clamped to exactly zero.
    pub fn cov_sqrt(&self) -> Result<Matrix3<f64>> {
        let trace = self.cov.trace();
        let clamp = PSD_TOL * trace.abs();
        let eigen = SymmetricEigen::new(self.cov);
        let mut roots = Vector3::zeros();
        for (i, &lambda) in eigen.eigenvalues.iter().enumerate() {
            if lambda < -clamp.max(PSD_TOL) {
                return Err(IsacError::NonPsdCovariance { eigenvalue: lambda });
            }
            roots[i] = if lambda <= clamp { 0.0 } else { lambda.sqrt() };
        }
        let v = eigen.eigenvectors;
        Ok(v * Matrix3::from_diagonal(&roots) * v.transpose())
    }
}

/// Shared third component `k_i = |b1 h_i + b2 e^{-j f_i}|^2`, expanded in the
/// real Gaussian coordinates `(m, n)` of `h_i`.
fn k_component(h: Complex64, f: f64, config: &SystemConfig) -> f64 {
    let (m, n) = (h.re, h.im);
    let b1 = config.b1_mag;
    let b2 = config.b2_mag;
    let (sin_k, cos_k) = (config.b2_phase - config.b1_phase - f).sin_cos();
    b1 * b1 * (m * m + n * n)
        + 2.0 * m * b1 * b2 * cos_k
        + 2.0 * n * b1 * b2 * sin_k
        + b2 * b2
}

/// Per-element triple of the user-link decomposition, via the expanded
/// trigonometric forms in `(m, n)`.
pub fn sample_triple_user(h: Complex64, f: f64, config: &SystemConfig) -> SampleTriple {
    let (m, n) = (h.re, h.im);
    let b1 = config.b1_mag;
    let b2 = config.b2_mag;
    let mag2 = m * m + n * n;
    let (sin_p1, cos_p1) = config.b1_phase.sin_cos();
    let (sin_pf, cos_pf) = (config.b2_phase - f).sin_cos();
    SampleTriple {
        first: b1 * mag2 * cos_p1 + b2 * m * cos_pf + b2 * n * sin_pf,
        second: b1 * mag2 * sin_p1 + b2 * m * sin_pf - b2 * n * cos_pf,
        third: k_component(h, f, config),
    }
}

/// Per-element triple of the target-link decomposition.
pub fn sample_triple_target(h: Complex64, f: f64, config: &SystemConfig) -> SampleTriple {
    let (m, n) = (h.re, h.im);
    let b1 = config.b1_mag;
    let (sin_pf, cos_pf) = (config.b1_phase + f).sin_cos();
    SampleTriple {
        first: b1 * (m * cos_pf - n * sin_pf),
        second: b1 * (n * cos_pf + m * sin_pf),
        third: k_component(h, f, config),
    }
}

/// Gaussian law of the summed user triple `(X, Y, K)`: mean `n * mu_d` and
/// covariance `n * Sigma_d`, independent of the azimuth and of the phase of
/// `b2`.
pub fn moments_user(config: &SystemConfig) -> Result<TrivariateGaussian> {
    let b1 = config.b1_mag;
    let b2 = config.b2_mag;
    let (sin_p1, cos_p1) = config.b1_phase.sin_cos();
    let power = b1 * b1 + b2 * b2;

    let mean = Vector3::new(b1 * cos_p1, b1 * sin_p1, power);
    let var_x = b2 * b2 / 2.0 + b1 * b1 * cos_p1 * cos_p1;
    let var_y = b2 * b2 / 2.0 + b1 * b1 * sin_p1 * sin_p1;
    let cov_xy = b1 * b1 * cos_p1 * sin_p1;
    let cov_xk = b1 * power * cos_p1;
    let cov_yk = b1 * power * sin_p1;
    let var_k = b1.powi(4) + 2.0 * b1 * b1 * b2 * b2;
    let cov = Matrix3::new(
        var_x, cov_xy, cov_xk, //
        cov_xy, var_y, cov_yk, //
        cov_xk, cov_yk, var_k,
    );

    let n = config.n as f64;
    TrivariateGaussian::new(mean * n, cov * n)
}

/// Gaussian law of the summed target triple `(Xt, Yt, K)`: mean `n * mu_d`
/// and covariance `n * Sigma_d`, independent of the azimuth and of the phase
/// of `b1`.
pub fn moments_target(config: &SystemConfig) -> Result<TrivariateGaussian> {
    let b1 = config.b1_mag;
    let b2 = config.b2_mag;
    let (sin_p2, cos_p2) = config.b2_phase.sin_cos();
    let power = b1 * b1 + b2 * b2;

    let mean = Vector3::new(0.0, 0.0, power);
    let var_xy = b1 * b1 / 2.0;
    let cov_xk = b1 * b1 * b2 * cos_p2;
    let cov_yk = b1 * b1 * b2 * sin_p2;
    let var_k = b1.powi(4) + 2.0 * b1 * b1 * b2 * b2;
    let cov = Matrix3::new(
        var_xy, 0.0, cov_xk, //
        0.0, var_xy, cov_yk, //
        cov_xk, cov_yk, var_k,
    );

    let n = config.n as f64;
    TrivariateGaussian::new(mean * n, cov * n)
}

/// Summed triple `(X, Y, K)` or `(Xt, Yt, K)` of one realization.
pub fn summed_triple(
    chan: &crate::model::ChannelRealization,
    config: &SystemConfig,
    target: bool,
) -> (f64, f64, f64) {
    let phases = crate::model::steering_phases(chan.theta, config.n);
    let mut acc = (0.0, 0.0, 0.0);
    for (&h, &f) in chan.h.iter().zip(phases.iter()) {
        let t = if target {
            sample_triple_target(h, f, config)
        } else {
            sample_triple_user(h, f, config)
        };
        acc.0 += t.first;
        acc.1 += t.second;
        acc.2 += t.third;
    }
    acc
}

/// SINR through the `(X, Y, K)` decomposition; an algebraic route
/// independent of the beamformer normalization used by [`crate::model::sinr`].
pub fn sinr_via_triples(
    config: &SystemConfig,
    chan: &crate::model::ChannelRealization,
) -> Result<f64> {
    let (x, y, k) = summed_triple(chan, config, false);
    if k < 1e-24 {
        return Err(IsacError::DegenerateBeamformer { norm: k.max(0.0).sqrt() });
    }
    Ok(config.p_t / config.sigma_u2 * (x * x + y * y) / k)
}

/// CRB through the `(Xt, Yt, K)` decomposition; an algebraic route
/// independent of [`crate::model::crb_simplified`].
pub fn crb_via_triples(
    config: &SystemConfig,
    chan: &crate::model::ChannelRealization,
) -> Result<f64> {
    let (xt, yt, k) = summed_triple(chan, config, true);
    let n = config.n as f64;
    let b2 = config.b2();
    let denom = xt * xt
        + yt * yt
        + 2.0 * n * b2.re * xt
        + 2.0 * n * b2.im * yt
        + n * n * b2.norm_sqr();
    let g = crate::model::crb_scale(config, chan.theta);
    if !(denom > 0.0) || !g.is_finite() {
        return Err(IsacError::SingularFisher { denominator: denom });
    }
    Ok(g * k / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_channel, steering_phases};
    use crate::rng::RandomStream;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cfg() -> SystemConfig {
        SystemConfig::baseline()
    }

    /// Complex-arithmetic route for the user triple, independent of the
    /// trigonometric expansion used by the implementation.
    fn user_triple_direct(h: Complex64, f: f64, config: &SystemConfig) -> SampleTriple {
        let b1 = config.b1();
        let b2 = config.b2();
        let e = Complex64::from_polar(1.0, -f);
        let z = b1 * h.norm_sqr() + b2 * h.conj() * e;
        let k = (b1 * h + b2 * e).norm_sqr();
        SampleTriple {
            first: z.re,
            second: z.im,
            third: k,
        }
    }

    fn target_triple_direct(h: Complex64, f: f64, config: &SystemConfig) -> SampleTriple {
        let b1 = config.b1();
        let b2 = config.b2();
        let e = Complex64::from_polar(1.0, -f);
        let z = b1 * Complex64::from_polar(1.0, f) * h;
        let k = (b1 * h + b2 * e).norm_sqr();
        SampleTriple {
            first: z.re,
            second: z.im,
            third: k,
        }
    }

    #[test]
    fn zero_channel_leaves_only_constant_term() {
        let config = cfg();
        let t = sample_triple_user(Complex64::new(0.0, 0.0), 0.9, &config);
        assert_eq!(t.first, 0.0);
        assert_eq!(t.second, 0.0);
        assert_relative_eq!(t.third, 0.64, max_relative = 1e-15);
        let t = sample_triple_target(Complex64::new(0.0, 0.0), 0.9, &config);
        assert_eq!(t.first, 0.0);
        assert_eq!(t.second, 0.0);
        assert_relative_eq!(t.third, 0.64, max_relative = 1e-15);
    }

    #[test]
    fn unit_channel_without_target_weight() {
        let mut config = cfg();
        config.b2_mag = 0.0;
        let t = sample_triple_user(Complex64::new(1.0, 0.0), 0.3, &config);
        assert_relative_eq!(t.first, 0.2 * (PI / 3.0).cos(), max_relative = 1e-14);
        assert_relative_eq!(t.second, 0.2 * (PI / 3.0).sin(), max_relative = 1e-14);
        assert_relative_eq!(t.third, 0.04, max_relative = 1e-14);
    }

    #[test]
    fn target_triple_hand_value() {
        let mut config = cfg();
        config.b1_mag = 1.0;
        config.b1_phase = 0.0;
        config.b2_mag = 0.0;
        let t = sample_triple_target(Complex64::new(1.0, 1.0), 0.0, &config);
        assert_relative_eq!(t.first, 1.0, max_relative = 1e-14);
        assert_relative_eq!(t.second, 1.0, max_relative = 1e-14);
        assert_relative_eq!(t.third, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn user_mean_matches_stated_values() {
        let config = cfg();
        let g = moments_user(&config).unwrap();
        let n = config.n as f64;
        assert_relative_eq!(g.mean()[0] / n, 0.1, max_relative = 1e-14);
        assert_relative_eq!(g.mean()[1] / n, 0.1 * 3.0f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(g.mean()[2] / n, 0.68, max_relative = 1e-14);
    }

    #[test]
    fn user_moments_degenerate_without_user_weight() {
        let mut config = cfg();
        config.b1_mag = 0.0;
        config.n = 4;
        let g = moments_user(&config).unwrap();
        assert_eq!(g.mean()[0], 0.0);
        assert_eq!(g.mean()[1], 0.0);
        assert_relative_eq!(g.mean()[2], 4.0 * 0.64, max_relative = 1e-14);
        let expected = Matrix3::from_diagonal(&Vector3::new(
            4.0 * 0.32,
            4.0 * 0.32,
            0.0,
        ));
        assert!((g.cov() - expected).abs().max() < 1e-14);
    }

    #[test]
    fn target_moments_degenerate_without_user_weight() {
        let mut config = cfg();
        config.b1_mag = 0.0;
        let g = moments_target(&config).unwrap();
        assert!(g.cov().abs().max() < 1e-14);
        assert_relative_eq!(
            g.mean()[2],
            config.n as f64 * 0.64,
            max_relative = 1e-14
        );
    }

    #[test]
    fn target_yk_covariance_zero_at_zero_phase() {
        let config = cfg(); // b2_phase = 0
        let g = moments_target(&config).unwrap();
        assert_eq!(g.cov()[(1, 2)], 0.0);
    }

    /// Empirical moments of 2e5 user triples at a fixed azimuth must match
    /// the analytical values within loose Monte Carlo bands.
    #[test]
    fn user_moments_match_empirical() {
        let config = cfg();
        let f = steering_phases(0.7, config.n)[2];
        let trials = 200_000usize;
        let mut rng = RandomStream::from_seed(99);
        let mut sums = [0.0f64; 3];
        let mut prods = [[0.0f64; 3]; 3];
        let sigma = 0.5f64.sqrt();
        for _ in 0..trials {
            let h = Complex64::new(
                sigma * rng.standard_normal(),
                sigma * rng.standard_normal(),
            );
            let t = sample_triple_user(h, f, &config);
            let v = [t.first, t.second, t.third];
            for i in 0..3 {
                sums[i] += v[i];
                for j in 0..3 {
                    prods[i][j] += v[i] * v[j];
                }
            }
        }
        let g = moments_user(&config).unwrap();
        let n = config.n as f64;
        for i in 0..3 {
            let mean = sums[i] / trials as f64;
            assert!(
                (mean - g.mean()[i] / n).abs() < 0.01,
                "mean[{i}] = {mean}"
            );
            for j in 0..3 {
                let cov = prods[i][j] / trials as f64
                    - (sums[i] / trials as f64) * (sums[j] / trials as f64);
                assert!(
                    (cov - g.cov()[(i, j)] / n).abs() < 0.02,
                    "cov[{i}][{j}] = {cov} vs {}",
                    g.cov()[(i, j)] / n
                );
            }
        }
    }

    #[test]
    fn summed_triples_match_scaled_moments() {
        // Mean of (X, Y, K) over many channel draws vs n * mu_d.
        let config = cfg();
        let trials = 50_000usize;
        let mut sums = [0.0f64; 3];
        for k in 0..trials {
            let mut rng = RandomStream::substream(1234, k as u64);
            let chan = sample_channel(&config, &mut rng);
            let phases = steering_phases(chan.theta, config.n);
            let mut acc = [0.0f64; 3];
            for (h, f) in chan.h.iter().zip(phases.iter()) {
                let t = sample_triple_user(*h, *f, &config);
                acc[0] += t.first;
                acc[1] += t.second;
                acc[2] += t.third;
            }
            for i in 0..3 {
                sums[i] += acc[i];
            }
        }
        let g = moments_user(&config).unwrap();
        for i in 0..3 {
            let mean = sums[i] / trials as f64;
            // sd of the sum is sqrt(n * var) ~ 2.3; 5 sigma / sqrt(trials)
            let tol = 5.0 * (g.cov()[(i, i)]).sqrt() / (trials as f64).sqrt();
            assert!(
                (mean - g.mean()[i]).abs() < tol.max(1e-3),
                "component {i}: {mean} vs {}",
                g.mean()[i]
            );
        }
    }

    #[test]
    fn sinr_routes_agree() {
        let config = cfg();
        for k in 0..200 {
            let mut rng = RandomStream::substream(77, k);
            let chan = sample_channel(&config, &mut rng);
            let direct = crate::model::sinr(&config, &chan).unwrap();
            let decomposed = sinr_via_triples(&config, &chan).unwrap();
            assert_relative_eq!(direct, decomposed, max_relative = 1e-10);
        }
    }

    #[test]
    fn crb_routes_agree() {
        let config = cfg();
        let mut checked = 0;
        let mut k = 0u64;
        while checked < 200 {
            let mut rng = RandomStream::substream(78, k);
            k += 1;
            let chan = sample_channel(&config, &mut rng);
            if chan.theta.cos().abs() <= 0.05 {
                continue;
            }
            let simplified = crate::model::crb_simplified(&config, &chan).unwrap();
            let decomposed = crb_via_triples(&config, &chan).unwrap();
            assert_relative_eq!(simplified, decomposed, max_relative = 1e-10);
            checked += 1;
        }
    }

    #[test]
    fn cov_sqrt_squares_back() {
        let config = cfg();
        for g in [moments_user(&config).unwrap(), moments_target(&config).unwrap()] {
            let s = g.cov_sqrt().unwrap();
            let back = s * s;
            assert!((back - g.cov()).abs().max() < 1e-10 * (1.0 + g.cov().abs().max()));
        }
    }

    #[test]
    fn non_psd_rejected() {
        let cov = Matrix3::new(
            1.0, 0.0, 0.0, //
            0.0, -0.5, 0.0, //
            0.0, 0.0, 1.0,
        );
        match TrivariateGaussian::new(Vector3::zeros(), cov) {
            Err(IsacError::NonPsdCovariance { .. }) => {}
            other => panic!("expected NonPsdCovariance, got {other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn triple_expansions_match_complex_arithmetic(
            m in -3.0f64..3.0,
            n in -3.0f64..3.0,
            f in -10.0f64..10.0,
            b1_mag in 0.0f64..2.0,
            b1_phase in 0.0f64..(2.0 * PI),
            b2_mag in 0.0f64..2.0,
            b2_phase in 0.0f64..(2.0 * PI),
        ) {
            let config = SystemConfig {
                b1_mag, b1_phase, b2_mag, b2_phase,
                ..SystemConfig::baseline()
            };
            let h = Complex64::new(m, n);
            let got = sample_triple_user(h, f, &config);
            let want = user_triple_direct(h, f, &config);
            prop_assert!((got.first - want.first).abs() < 1e-12 * (1.0 + want.first.abs()));
            prop_assert!((got.second - want.second).abs() < 1e-12 * (1.0 + want.second.abs()));
            prop_assert!((got.third - want.third).abs() < 1e-12 * (1.0 + want.third.abs()));
            prop_assert!(got.third >= 0.0);

            let got = sample_triple_target(h, f, &config);
            let want = target_triple_direct(h, f, &config);
            prop_assert!((got.first - want.first).abs() < 1e-12 * (1.0 + want.first.abs()));
            prop_assert!((got.second - want.second).abs() < 1e-12 * (1.0 + want.second.abs()));
            prop_assert!((got.third - want.third).abs() < 1e-12 * (1.0 + want.third.abs()));
        }

        #[test]
        fn moments_do_not_depend_on_azimuth_or_counterpart_phase(
            b2_phase in 0.0f64..(2.0 * PI),
            b1_phase in 0.0f64..(2.0 * PI),
        ) {
            let mut config = cfg();
            config.b2_phase = b2_phase;
            let g1 = moments_user(&config).unwrap();
            config.b2_phase = 0.0;
            let g2 = moments_user(&config).unwrap();
            prop_assert!((g1.mean() - g2.mean()).abs().max() == 0.0);
            prop_assert!((g1.cov() - g2.cov()).abs().max() == 0.0);

            let mut config = cfg();
            config.b1_phase = b1_phase;
            let t1 = moments_target(&config).unwrap();
            config.b1_phase = 0.0;
            let t2 = moments_target(&config).unwrap();
            prop_assert!((t1.mean() - t2.mean()).abs().max() == 0.0);
            prop_assert!((t1.cov() - t2.cov()).abs().max() == 0.0);
        }
    }
}
