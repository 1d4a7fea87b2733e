//! System parameters of the dual-functional link and their validation.

use num_complex::Complex64;

use crate::error::{IsacError, Result};

/// All scalar parameters of the link model.
///
/// Field names double as the keys of the flat `key = value` config-file
/// format, so they are spelled exactly as they appear on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antenna count (must be even, >= 2).
    pub n: usize,
    /// Receive antenna count (>= 2, odd allowed).
    pub m: usize,
    /// Transmit power, linear scale.
    pub p_t: f64,
    /// Noise variance at the user.
    pub sigma_u2: f64,
    /// Noise variance at the radar receiver.
    pub sigma_r2: f64,
    /// Radar frame length (> n).
    pub l: usize,
    /// Magnitude of the complex reflection coefficient.
    pub alpha_mag: f64,
    /// Phase of the reflection coefficient, radians.
    pub alpha_phase: f64,
    /// Magnitude of the user beamforming weight.
    pub b1_mag: f64,
    /// Phase of the user beamforming weight, radians.
    pub b1_phase: f64,
    /// Magnitude of the target beamforming weight.
    pub b2_mag: f64,
    /// Phase of the target beamforming weight, radians.
    pub b2_phase: f64,
}

impl SystemConfig {
    /// Baseline parameter set used throughout the experiment studies:
    /// N=15, M=17, p_t=10, unit noise variances, L=30, unit reflection,
    /// |b1|=0.2 at 60 degrees, |b2|=0.8 at 0 degrees.
    pub fn baseline() -> Self {
        SystemConfig {
            n: 15,
            m: 17,
            p_t: 10.0,
            sigma_u2: 1.0,
            sigma_r2: 1.0,
            l: 30,
            alpha_mag: 1.0,
            alpha_phase: 0.0,
            b1_mag: 0.2,
            b1_phase: std::f64::consts::FRAC_PI_3,
            b2_mag: 0.8,
            b2_phase: 0.0,
        }
    }

    /// Check every field against its admissible range.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(IsacError::invalid("n", format!("must be >= 2, got {}", self.n)));
        }
        if self.m < 2 {
            return Err(IsacError::invalid("m", format!("must be >= 2, got {}", self.m)));
        }
        if self.l <= self.n {
            return Err(IsacError::invalid(
                "l",
                format!("frame length must exceed n={}, got {}", self.n, self.l),
            ));
        }
        check_positive("p_t", self.p_t)?;
        check_positive("sigma_u2", self.sigma_u2)?;
        check_positive("sigma_r2", self.sigma_r2)?;
        check_positive("alpha_mag", self.alpha_mag)?;
        check_nonneg("b1_mag", self.b1_mag)?;
        check_nonneg("b2_mag", self.b2_mag)?;
        for (field, value) in [
            ("alpha_phase", self.alpha_phase),
            ("b1_phase", self.b1_phase),
            ("b2_phase", self.b2_phase),
        ] {
            if !value.is_finite() {
                return Err(IsacError::invalid(field, "must be finite"));
            }
        }
        if self.b1_mag + self.b2_mag <= 0.0 {
            return Err(IsacError::invalid(
                "b1_mag",
                "beamforming weights b1 and b2 must not both be zero",
            ));
        }
        Ok(())
    }

    /// Complex reflection coefficient.
    pub fn alpha(&self) -> Complex64 {
        Complex64::from_polar(self.alpha_mag, self.alpha_phase)
    }

    /// Complex user weight `b1`.
    pub fn b1(&self) -> Complex64 {
        Complex64::from_polar(self.b1_mag, self.b1_phase)
    }

    /// Complex target weight `b2`.
    pub fn b2(&self) -> Complex64 {
        Complex64::from_polar(self.b2_mag, self.b2_phase)
    }
}

fn check_positive(field: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && value > 0.0) {
        return Err(IsacError::invalid(field, format!("must be > 0, got {value}")));
    }
    Ok(())
}

fn check_nonneg(field: &'static str, value: f64) -> Result<()> {
    if !(value.is_finite() && value >= 0.0) {
        return Err(IsacError::invalid(field, format!("must be >= 0, got {value}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_is_valid() {
        SystemConfig::baseline().validate().unwrap();
    }

    #[test]
    fn zero_noise_names_field() {
        let mut cfg = SystemConfig::baseline();
        cfg.sigma_u2 = 0.0;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("sigma_u2"), "got: {err}");
    }

    #[test]
    fn frame_length_must_exceed_antennas() {
        let mut cfg = SystemConfig::baseline();
        cfg.l = cfg.n;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn both_weights_zero_rejected() {
        let mut cfg = SystemConfig::baseline();
        cfg.b1_mag = 0.0;
        cfg.b2_mag = 0.0;
        assert!(cfg.validate().is_err());
    }
}
