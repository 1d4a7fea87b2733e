//! Outage analysis for a downlink MIMO link that serves one communication
//! user while estimating the azimuth of a radar target with the same
//! transmission.
//!
//! The crate computes two performance probabilities:
//!
//! - the user's rate outage `P(SINR < gamma)`, and
//! - the target's estimation outage `P(CRB(theta) > epsilon)`,
//!
//! each along two independent routes: exact per-realization Monte Carlo, and
//! an analytic path that approximates the summed channel statistics by a
//! trivariate Gaussian and evaluates the resulting quadratic-form probability
//! through a generalized chi-square CDF.
//!
//! # Layout
//!
//! - [`model`] — steering vectors, beamformer, per-realization SINR and CRB
//! - [`moments`] — per-element triples and their closed-form Gaussian moments
//! - [`quadform`] — quadratic sublevel sets of a Gaussian vector, reduction
//!   to a generalized chi-square variable, CDF by characteristic-function
//!   inversion, and a seeded sampling oracle
//! - [`outage`] — the analytic and Monte Carlo outage estimators
//! - [`experiment`] — sweeps, histogram and validation reports, CSV output
//! - [`rng`] — per-trial substream seeding for reproducible parallel runs
//!
//! # Example
//!
//! ```
//! use isac_outage::{OutageQuery, SystemConfig};
//!
//! let mut query = OutageQuery::new(SystemConfig::baseline());
//! query.gamma = 8.0;
//! query.trials = 20_000;
//! let analytic = isac_outage::outage::user_op_analytic(&query).unwrap();
//! let simulated = isac_outage::outage::user_op_montecarlo(&query).unwrap();
//! assert!((analytic.value - simulated.value).abs() < 0.02);
//! ```

pub mod config;
pub mod error;
pub mod experiment;
pub mod model;
pub mod moments;
pub mod outage;
pub mod quadform;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use config::SystemConfig;
pub use error::{IsacError, Result};
pub use experiment::{ExperimentSpec, Sweep};
pub use model::ChannelRealization;
pub use moments::TrivariateGaussian;
pub use outage::{Estimate, Method, OutageQuery, RateEstimate};
pub use quadform::{GChi2Params, QuadraticDomain};
pub use rng::RandomStream;
