//! Experiment harness: threshold sweeps, the beam-weight trade-off study,
//! joint-histogram extraction, and the self-validation report, all emitted
//! as CSV tables with a reproducible metadata header.

use rayon::prelude::*;
use std::fmt::Write as _;

use crate::config::SystemConfig;
use crate::error::{IsacError, Result};
use crate::model::{sample_channel, steering_derivative_norm_sq, steering_phases};
use crate::moments::{
    crb_via_triples, moments_target, moments_user, sample_triple_target, sample_triple_user,
    sinr_via_triples, summed_triple,
};
use crate::outage::{
    crb_samples, map_trials, sinr_samples, target_op_analytic, user_op_analytic, Method,
    OutageQuery,
};
use crate::quadform::gchi2_cdf;
use crate::quadform::GChi2Params;
use crate::rng::RandomStream;
use crate::stats::TripleMoments;

/// Which scalar a sweep walks over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sweep {
    GammaGrid,
    EpsilonGrid,
    B1Grid,
    B2Grid,
    None,
}

impl std::fmt::Display for Sweep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Sweep::GammaGrid => "gamma-grid",
            Sweep::EpsilonGrid => "epsilon-grid",
            Sweep::B1Grid => "b1-grid",
            Sweep::B2Grid => "b2-grid",
            Sweep::None => "none",
        };
        write!(f, "{name}")
    }
}

/// Fully resolved description of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub config: SystemConfig,
    pub sweep: Sweep,
    pub grid: Vec<f64>,
    /// SINR threshold used where gamma is held fixed.
    pub gamma: f64,
    /// CRB threshold used where epsilon is held fixed.
    pub epsilon: f64,
    pub trials: u64,
    pub seed: u64,
    pub theta_nodes: usize,
    /// Bins per axis of the joint histogram.
    pub bins: usize,
}

impl ExperimentSpec {
    pub fn new(config: SystemConfig) -> Self {
        ExperimentSpec {
            config,
            sweep: Sweep::None,
            grid: Vec::new(),
            gamma: 8.0,
            epsilon: 8e-7,
            trials: 10_000,
            seed: 42,
            theta_nodes: 32,
            bins: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.query().validate()?;
        if self.sweep != Sweep::None {
            if self.grid.is_empty() {
                return Err(IsacError::invalid("grid", "sweep grid must not be empty"));
            }
            let strictly_positive = matches!(self.sweep, Sweep::GammaGrid | Sweep::EpsilonGrid);
            for &v in &self.grid {
                if !v.is_finite() || v < 0.0 || (strictly_positive && v <= 0.0) {
                    return Err(IsacError::invalid(
                        "grid",
                        format!("grid value {v} out of range for {} sweep", self.sweep),
                    ));
                }
            }
        }
        if self.bins < 2 {
            return Err(IsacError::invalid("bins", "histogram needs at least 2 bins"));
        }
        Ok(())
    }

    pub fn query(&self) -> OutageQuery {
        OutageQuery {
            config: self.config.clone(),
            gamma: self.gamma,
            epsilon: self.epsilon,
            trials: self.trials,
            seed: self.seed,
            theta_nodes: self.theta_nodes,
        }
    }

    /// Metadata block recorded at the top of every CSV output.
    fn metadata(&self, command: &str) -> Vec<(String, String)> {
        let c = &self.config;
        let mut meta = vec![
            ("tool".to_string(), format!("isac-outage {}", env!("CARGO_PKG_VERSION"))),
            ("command".to_string(), command.to_string()),
            ("n".to_string(), c.n.to_string()),
            ("m".to_string(), c.m.to_string()),
            ("p_t".to_string(), c.p_t.to_string()),
            ("sigma_u2".to_string(), c.sigma_u2.to_string()),
            ("sigma_r2".to_string(), c.sigma_r2.to_string()),
            ("l".to_string(), c.l.to_string()),
            ("alpha_mag".to_string(), c.alpha_mag.to_string()),
            ("alpha_phase".to_string(), c.alpha_phase.to_string()),
            ("b1_mag".to_string(), c.b1_mag.to_string()),
            ("b1_phase".to_string(), c.b1_phase.to_string()),
            ("b2_mag".to_string(), c.b2_mag.to_string()),
            ("b2_phase".to_string(), c.b2_phase.to_string()),
            ("gamma".to_string(), self.gamma.to_string()),
            ("epsilon".to_string(), self.epsilon.to_string()),
            ("trials".to_string(), self.trials.to_string()),
            ("seed".to_string(), self.seed.to_string()),
            ("theta_nodes".to_string(), self.theta_nodes.to_string()),
        ];
        if self.sweep != Sweep::None {
            meta.push(("sweep".to_string(), self.sweep.to_string()));
            let grid = self
                .grid
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",");
            meta.push(("grid".to_string(), grid));
        }
        meta
    }
}

/// One row of a CSV report.
pub trait CsvRow {
    fn header() -> &'static str;
    fn write_row(&self, out: &mut String);
}

/// A CSV table: `#`-prefixed metadata lines, a header row, then data rows.
#[derive(Debug, Clone)]
pub struct Report<R> {
    pub metadata: Vec<(String, String)>,
    pub rows: Vec<R>,
}

impl<R: CsvRow> Report<R> {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k} = {v}");
        }
        let _ = writeln!(out, "{}", R::header());
        for row in &self.rows {
            row.write_row(&mut out);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UserOpRow {
    pub gamma: f64,
    pub p_u: f64,
    pub std_error: f64,
    pub method: Method,
}

impl CsvRow for UserOpRow {
    fn header() -> &'static str {
        "gamma,p_u,std_error,method"
    }

    fn write_row(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{}",
            self.gamma, self.p_u, self.std_error, self.method
        );
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TargetOpRow {
    pub epsilon: f64,
    pub epsilon_db: f64,
    pub p_c: f64,
    pub std_error: f64,
    pub method: Method,
}

impl CsvRow for TargetOpRow {
    fn header() -> &'static str {
        "epsilon,epsilon_db,p_c,std_error,method"
    }

    fn write_row(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            self.epsilon, self.epsilon_db, self.p_c, self.std_error, self.method
        );
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TradeoffRow {
    pub swept: Sweep,
    pub value: f64,
    pub p_u: f64,
    pub p_c: f64,
}

impl CsvRow for TradeoffRow {
    fn header() -> &'static str {
        "swept_param,value,p_u,p_c"
    }

    fn write_row(&self, out: &mut String) {
        let name = match self.swept {
            Sweep::B1Grid => "b1_mag",
            Sweep::B2Grid => "b2_mag",
            other => unreachable!("tradeoff over {other}"),
        };
        let _ = write!(out, "{},{},{},{}", name, self.value, self.p_u, self.p_c);
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HistRow {
    pub x_center: f64,
    pub y_center: f64,
    pub count: u64,
    pub clt_density: f64,
}

impl CsvRow for HistRow {
    fn header() -> &'static str {
        "x_center,y_center,count,clt_density"
    }

    fn write_row(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{}",
            self.x_center, self.y_center, self.count, self.clt_density
        );
    }
}

#[derive(Debug, Clone)]
pub struct CheckRow {
    pub name: &'static str,
    pub measured: f64,
    pub bound: f64,
    pub passed: bool,
}

impl CsvRow for CheckRow {
    fn header() -> &'static str {
        "check,measured,bound,status"
    }

    fn write_row(&self, out: &mut String) {
        let _ = write!(
            out,
            "{},{},{},{}",
            self.name,
            self.measured,
            self.bound,
            if self.passed { "pass" } else { "fail" }
        );
    }
}

fn sorted_grid(grid: &[f64]) -> Vec<f64> {
    let mut g = grid.to_vec();
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g
}

/// User outage versus the SINR threshold: one analytic and one Monte Carlo
/// row per grid value. All Monte Carlo rows share the same channel draws, so
/// the empirical curve is the (monotone) empirical CDF of one sample.
pub fn run_user_op_sweep(spec: &ExperimentSpec) -> Result<Report<UserOpRow>> {
    spec.validate()?;
    if spec.sweep != Sweep::GammaGrid {
        return Err(IsacError::invalid("sweep", "user-op sweep requires a gamma grid"));
    }
    let grid = sorted_grid(&spec.grid);

    let analytic: Vec<f64> = grid
        .par_iter()
        .map(|&gamma| {
            let mut query = spec.query();
            query.gamma = gamma;
            user_op_analytic(&query).map(|e| e.value)
        })
        .collect::<Result<_>>()?;

    let samples = sinr_samples(&spec.config, spec.trials, spec.seed);
    let mut rows = Vec::with_capacity(2 * grid.len());
    for (&gamma, &p_a) in grid.iter().zip(analytic.iter()) {
        rows.push(UserOpRow {
            gamma,
            p_u: p_a,
            std_error: 0.0,
            method: Method::Analytic,
        });
        let hits = samples.iter().filter(|&&s| s < gamma).count() as f64;
        let p = hits / spec.trials as f64;
        rows.push(UserOpRow {
            gamma,
            p_u: p,
            std_error: (p * (1.0 - p) / spec.trials as f64).sqrt(),
            method: Method::MonteCarlo,
        });
    }
    Ok(Report {
        metadata: spec.metadata("user-op"),
        rows,
    })
}

/// Target outage versus the CRB threshold, with a dB column
/// (`10 log10(epsilon)`).
pub fn run_target_op_sweep(spec: &ExperimentSpec) -> Result<Report<TargetOpRow>> {
    spec.validate()?;
    if spec.sweep != Sweep::EpsilonGrid {
        return Err(IsacError::invalid(
            "sweep",
            "target-op sweep requires an epsilon grid",
        ));
    }
    let grid = sorted_grid(&spec.grid);

    let analytic: Vec<f64> = grid
        .par_iter()
        .map(|&epsilon| {
            let mut query = spec.query();
            query.epsilon = epsilon;
            target_op_analytic(&query).map(|e| e.value)
        })
        .collect::<Result<_>>()?;

    let samples = crb_samples(&spec.config, spec.trials, spec.seed);
    let mut rows = Vec::with_capacity(2 * grid.len());
    for (&epsilon, &p_a) in grid.iter().zip(analytic.iter()) {
        let epsilon_db = 10.0 * epsilon.log10();
        rows.push(TargetOpRow {
            epsilon,
            epsilon_db,
            p_c: p_a,
            std_error: 0.0,
            method: Method::Analytic,
        });
        let hits = samples.iter().filter(|&&s| s > epsilon).count() as f64;
        let p = hits / spec.trials as f64;
        rows.push(TargetOpRow {
            epsilon,
            epsilon_db,
            p_c: p,
            std_error: (p * (1.0 - p) / spec.trials as f64).sqrt(),
            method: Method::MonteCarlo,
        });
    }
    Ok(Report {
        metadata: spec.metadata("target-op"),
        rows,
    })
}

/// Analytic trade-off between the two outage probabilities as one beam
/// magnitude walks a grid while the other stays at its base value.
pub fn run_tradeoff(spec: &ExperimentSpec) -> Result<Report<TradeoffRow>> {
    spec.validate()?;
    if !matches!(spec.sweep, Sweep::B1Grid | Sweep::B2Grid) {
        return Err(IsacError::invalid(
            "sweep",
            "tradeoff requires a b1 or b2 magnitude grid",
        ));
    }
    let grid = sorted_grid(&spec.grid);

    let rows: Vec<TradeoffRow> = grid
        .par_iter()
        .map(|&value| {
            let mut config = spec.config.clone();
            match spec.sweep {
                Sweep::B1Grid => config.b1_mag = value,
                Sweep::B2Grid => config.b2_mag = value,
                _ => unreachable!(),
            }
            let mut query = spec.query();
            query.config = config;
            let p_u = user_op_analytic(&query)?.value;
            let p_c = target_op_analytic(&query)?.value;
            Ok(TradeoffRow {
                swept: spec.sweep,
                value,
                p_u,
                p_c,
            })
        })
        .collect::<Result<_>>()?;

    Ok(Report {
        metadata: spec.metadata("tradeoff"),
        rows,
    })
}

/// Joint histogram of the summed pair `(X, Y)` over seeded draws, with the
/// fitted Gaussian density at each bin center for overlay plots. The bin
/// grid spans 4.5 standard deviations around the analytic means and is
/// recorded in the metadata.
pub fn run_histogram(spec: &ExperimentSpec) -> Result<Report<HistRow>> {
    spec.validate()?;
    if spec.trials < 10_000 {
        return Err(IsacError::invalid(
            "trials",
            "histogram requires at least 10000 trials",
        ));
    }
    let gauss = moments_user(&spec.config)?;
    let (mx, my) = (gauss.mean()[0], gauss.mean()[1]);
    let (vx, vy, vxy) = (
        gauss.cov()[(0, 0)],
        gauss.cov()[(1, 1)],
        gauss.cov()[(0, 1)],
    );
    let bins = spec.bins;
    let x_min = mx - 4.5 * vx.sqrt();
    let x_max = mx + 4.5 * vx.sqrt();
    let y_min = my - 4.5 * vy.sqrt();
    let y_max = my + 4.5 * vy.sqrt();
    let dx = (x_max - x_min) / bins as f64;
    let dy = (y_max - y_min) / bins as f64;

    // Per-trial substreams keep the counts independent of scheduling.
    let config = spec.config.clone();
    let pairs = map_trials(spec.trials, move |k| {
        let mut rng = RandomStream::substream(spec.seed, k);
        let chan = sample_channel(&config, &mut rng);
        let (x, y, _) = summed_triple(&chan, &config, false);
        (x, y)
    });
    let mut counts = vec![0u64; bins * bins];
    for (x, y) in pairs {
        let ix = ((x - x_min) / dx).floor();
        let iy = ((y - y_min) / dy).floor();
        if (0.0..bins as f64).contains(&ix) && (0.0..bins as f64).contains(&iy) {
            counts[ix as usize * bins + iy as usize] += 1;
        }
    }

    // Bivariate normal density of the (X, Y) block.
    let det = vx * vy - vxy * vxy;
    let density = |x: f64, y: f64| -> f64 {
        let (ex, ey) = (x - mx, y - my);
        let quad = (vy * ex * ex - 2.0 * vxy * ex * ey + vx * ey * ey) / det;
        (-0.5 * quad).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
    };

    let mut rows = Vec::with_capacity(bins * bins);
    for ix in 0..bins {
        let x_center = x_min + (ix as f64 + 0.5) * dx;
        for iy in 0..bins {
            let y_center = y_min + (iy as f64 + 0.5) * dy;
            rows.push(HistRow {
                x_center,
                y_center,
                count: counts[ix * bins + iy],
                clt_density: density(x_center, y_center),
            });
        }
    }

    let mut metadata = spec.metadata("hist");
    metadata.push(("bins".to_string(), bins.to_string()));
    metadata.push(("x_min".to_string(), x_min.to_string()));
    metadata.push(("x_max".to_string(), x_max.to_string()));
    metadata.push(("y_min".to_string(), y_min.to_string()));
    metadata.push(("y_max".to_string(), y_max.to_string()));
    Ok(Report { metadata, rows })
}

/// Largest deviation between empirical and analytic moments, in units of the
/// jackknife standard error of each entry.
#[derive(Debug, Clone, Copy)]
pub struct MomentCheck {
    pub mean_zmax: f64,
    pub cov_zmax: f64,
}

/// Compare empirical moments of single-element triples against the
/// per-element analytical moments, at a fixed azimuth.
pub fn moment_check(
    config: &SystemConfig,
    target: bool,
    trials: u64,
    seed: u64,
) -> Result<MomentCheck> {
    let blocks = 100;
    let gauss = if target {
        moments_target(config)?
    } else {
        moments_user(config)?
    };
    let f = steering_phases(0.7, config.n)[0];
    let sigma = 0.5f64.sqrt();
    let mut acc = TripleMoments::new(blocks);
    let mut rng = RandomStream::from_seed(seed);
    for k in 0..trials {
        let h = num_complex::Complex64::new(
            sigma * rng.standard_normal(),
            sigma * rng.standard_normal(),
        );
        let t = if target {
            sample_triple_target(h, f, config)
        } else {
            sample_triple_user(h, f, config)
        };
        acc.push((k % blocks as u64) as usize, [t.first, t.second, t.third]);
    }
    Ok(compare_moments(&acc, &gauss, config.n as f64))
}

/// Compare empirical moments of the summed triples against the scaled
/// Gaussian law itself.
pub fn summed_moment_check(
    config: &SystemConfig,
    target: bool,
    trials: u64,
    seed: u64,
) -> Result<MomentCheck> {
    let blocks = 100;
    let gauss = if target {
        moments_target(config)?
    } else {
        moments_user(config)?
    };
    let cfg = config.clone();
    let triples = map_trials(trials, move |k| {
        let mut rng = RandomStream::substream(seed, k);
        let chan = sample_channel(&cfg, &mut rng);
        summed_triple(&chan, &cfg, target)
    });
    let mut acc = TripleMoments::new(blocks);
    for (k, (x, y, z)) in triples.into_iter().enumerate() {
        acc.push(k % blocks, [x, y, z]);
    }
    Ok(compare_moments(&acc, &gauss, 1.0))
}

fn compare_moments(
    acc: &TripleMoments,
    gauss: &crate::moments::TrivariateGaussian,
    scale: f64,
) -> MomentCheck {
    let mean = acc.mean();
    let mean_se = acc.mean_se();
    let cov = acc.covariance();
    let cov_se = acc.cov_se();
    let mut mean_zmax = 0.0f64;
    let mut cov_zmax = 0.0f64;
    for i in 0..3 {
        let diff = (mean[i] - gauss.mean()[i] / scale).abs();
        mean_zmax = mean_zmax.max(diff / mean_se[i].max(1e-300));
        for j in i..3 {
            let diff = (cov[i][j] - gauss.cov()[(i, j)] / scale).abs();
            if diff > 0.0 {
                cov_zmax = cov_zmax.max(diff / cov_se[i][j].max(1e-300));
            }
        }
    }
    MomentCheck {
        mean_zmax,
        cov_zmax,
    }
}

/// Bundled self-checks: moment fidelity, the dual SINR/CRB routes, steering
/// identities, closed-form CDF cases, and analytic-versus-Monte-Carlo outage
/// agreement. Returns the report and whether every check passed.
pub fn run_validate(spec: &ExperimentSpec) -> Result<(Report<CheckRow>, bool)> {
    spec.validate()?;
    let config = &spec.config;
    let trials = spec.trials.max(10_000);
    let mut rows: Vec<CheckRow> = Vec::new();
    let mut add = |name: &'static str, measured: f64, bound: f64| {
        rows.push(CheckRow {
            name,
            measured,
            bound,
            passed: measured.is_finite() && measured <= bound,
        });
    };

    // Moment fidelity of both triple families, 5 jackknife sigmas.
    let user = moment_check(config, false, trials, spec.seed)?;
    add("lemma_user_mean_z", user.mean_zmax, 5.0);
    add("lemma_user_cov_z", user.cov_zmax, 5.0);
    let target = moment_check(config, true, trials, spec.seed ^ 0x9e37_79b9)?;
    add("lemma_target_mean_z", target.mean_zmax, 5.0);
    add("lemma_target_cov_z", target.cov_zmax, 5.0);

    // Dual computation routes for SINR and CRB on random realizations.
    let mut sinr_rel = 0.0f64;
    let mut crb_rel = 0.0f64;
    let mut crb_general_rel = 0.0f64;
    let mut checked = 0;
    let mut k = 0u64;
    while checked < 200 {
        let mut rng = RandomStream::substream(spec.seed.wrapping_add(1), k);
        k += 1;
        let chan = sample_channel(config, &mut rng);
        let direct = crate::model::sinr(config, &chan)?;
        let decomposed = sinr_via_triples(config, &chan)?;
        sinr_rel = sinr_rel.max((direct - decomposed).abs() / direct.max(1e-30));
        if chan.theta.cos().abs() <= 0.05 {
            continue;
        }
        let simplified = crate::model::crb_simplified(config, &chan)?;
        let decomposed = crb_via_triples(config, &chan)?;
        crb_rel = crb_rel.max((simplified - decomposed).abs() / simplified);
        let general = crate::model::crb_general(config, &chan)?;
        crb_general_rel = crb_general_rel.max((general - simplified).abs() / simplified);
        checked += 1;
    }
    add("sinr_route_rel", sinr_rel, 1e-10);
    add("crb_route_rel", crb_rel, 1e-10);
    add("crb_general_vs_simplified_rel", crb_general_rel, 1e-8);

    // Steering derivative norm identity against explicit summation.
    let mut steer_rel = 0.0f64;
    let mut rng = RandomStream::from_seed(spec.seed.wrapping_add(2));
    for count in 2..=32usize {
        for _ in 0..8 {
            let theta = rng.uniform(0.0, std::f64::consts::PI);
            let explicit: f64 = (1..=count)
                .map(|i| {
                    let half = (count as f64 - (2 * i - 1) as f64) / 2.0;
                    (std::f64::consts::PI * theta.cos() * half).powi(2)
                })
                .sum();
            let closed = steering_derivative_norm_sq(theta, count);
            steer_rel = steer_rel.max((explicit - closed).abs() / explicit.max(1e-300));
        }
    }
    add("steering_derivative_norm_rel", steer_rel, 1e-10);

    // Closed-form CDF cases.
    let chi2 = GChi2Params::new(vec![1.0, 1.0], vec![1, 1], vec![0.0, 0.0], 0.0, 0.0)?;
    let mut chi2_err = 0.0f64;
    for x in [0.25, 1.0, 2.0, 5.0, 9.0] {
        let exact = 1.0 - (-x / 2.0f64).exp();
        chi2_err = chi2_err.max((gchi2_cdf(&chi2, x)? - exact).abs());
    }
    add("gchi2_chi2_cdf_abs", chi2_err, 1e-6);
    let normal = GChi2Params::new(vec![], vec![], vec![], 1.0, 0.0)?;
    add("gchi2_normal_median_abs", (gchi2_cdf(&normal, 0.0)? - 0.5).abs(), 1e-9);

    // Analytic pipeline against the exact closed form reachable at b1 = 0.
    {
        let mut query = spec.query();
        query.config.b1_mag = 0.0;
        let analytic = user_op_analytic(&query)?.value;
        let exact = 1.0 - (-query.gamma * query.config.sigma_u2 / query.config.p_t).exp();
        add("user_op_degenerate_closed_form", (analytic - exact).abs(), 5e-6);
    }

    // Analytic versus Monte Carlo outage at the spec thresholds. The user
    // side carries the intrinsic Gaussian-approximation error of the summed
    // triple, which sits near 0.02-0.03 for n in the 9..15 range, so its
    // bound reflects the method rather than the estimator noise; any
    // implementation fault (sign, factor, domain orientation) shows up far
    // above it. The exact closed-form check above pins the pipeline itself.
    let query = spec.query();
    let p_a = user_op_analytic(&query)?.value;
    let samples = sinr_samples(config, trials, spec.seed.wrapping_add(3));
    let p_mc = samples.iter().filter(|&&s| s < spec.gamma).count() as f64 / trials as f64;
    let se = (p_mc * (1.0 - p_mc) / trials as f64).sqrt();
    add("user_op_gap", (p_a - p_mc).abs(), (4.0 * se).max(0.04));

    let p_a = target_op_analytic(&query)?.value;
    let samples = crb_samples(config, trials, spec.seed.wrapping_add(4));
    let p_mc = samples.iter().filter(|&&s| s > spec.epsilon).count() as f64 / trials as f64;
    let se = (p_mc * (1.0 - p_mc) / trials as f64).sqrt();
    add("target_op_gap", (p_a - p_mc).abs(), (4.0 * se).max(0.02));

    let all_passed = rows.iter().all(|r| r.passed);
    Ok((
        Report {
            metadata: spec.metadata("validate"),
            rows,
        },
        all_passed,
    ))
}

/// Apply `key = value` lines to a spec. `#` starts a comment; blank lines are
/// ignored; unknown keys are rejected.
pub fn apply_config_text(spec: &mut ExperimentSpec, text: &str) -> Result<()> {
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            IsacError::invalid(
                "config",
                format!("line {}: expected `key = value`, got `{line}`", lineno + 1),
            )
        })?;
        let key = key.trim();
        let value = value.trim();
        apply_key(spec, key, value).map_err(|e| match e {
            IsacError::InvalidConfig { field, message } => IsacError::InvalidConfig {
                field,
                message: format!("line {}: {message}", lineno + 1),
            },
            other => other,
        })?;
    }
    Ok(())
}

fn apply_key(spec: &mut ExperimentSpec, key: &str, value: &str) -> Result<()> {
    fn float(field: &'static str, value: &str) -> Result<f64> {
        value
            .parse::<f64>()
            .map_err(|_| IsacError::invalid(field, format!("not a number: `{value}`")))
    }
    fn integer(field: &'static str, value: &str) -> Result<u64> {
        value
            .parse::<u64>()
            .map_err(|_| IsacError::invalid(field, format!("not an integer: `{value}`")))
    }

    match key {
        "n" => spec.config.n = integer("n", value)? as usize,
        "m" => spec.config.m = integer("m", value)? as usize,
        "p_t" => spec.config.p_t = float("p_t", value)?,
        "sigma_u2" => spec.config.sigma_u2 = float("sigma_u2", value)?,
        "sigma_r2" => spec.config.sigma_r2 = float("sigma_r2", value)?,
        "l" => spec.config.l = integer("l", value)? as usize,
        "alpha_mag" => spec.config.alpha_mag = float("alpha_mag", value)?,
        "alpha_phase" => spec.config.alpha_phase = float("alpha_phase", value)?,
        "b1_mag" => spec.config.b1_mag = float("b1_mag", value)?,
        "b1_phase" => spec.config.b1_phase = float("b1_phase", value)?,
        "b2_mag" => spec.config.b2_mag = float("b2_mag", value)?,
        "b2_phase" => spec.config.b2_phase = float("b2_phase", value)?,
        "gamma" => spec.gamma = float("gamma", value)?,
        "epsilon" => spec.epsilon = float("epsilon", value)?,
        "trials" => spec.trials = integer("trials", value)?,
        "seed" => spec.seed = integer("seed", value)?,
        "theta_nodes" => spec.theta_nodes = integer("theta_nodes", value)? as usize,
        "bins" => spec.bins = integer("bins", value)? as usize,
        other => {
            return Err(IsacError::invalid(
                "config",
                format!("unknown key `{other}`"),
            ))
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_spec() -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(SystemConfig::baseline());
        spec.trials = 5_000;
        spec
    }

    #[test]
    fn user_sweep_shape_and_order() {
        let mut spec = quick_spec();
        spec.sweep = Sweep::GammaGrid;
        spec.grid = vec![8.0, 2.0, 4.0];
        let report = run_user_op_sweep(&spec).unwrap();
        assert_eq!(report.rows.len(), 6);
        let gammas: Vec<f64> = report.rows.iter().map(|r| r.gamma).collect();
        assert_eq!(gammas, vec![2.0, 2.0, 4.0, 4.0, 8.0, 8.0]);
        assert_eq!(report.rows[0].method, Method::Analytic);
        assert_eq!(report.rows[1].method, Method::MonteCarlo);
        // analytic column nondecreasing in gamma
        assert!(report.rows[0].p_u <= report.rows[2].p_u);
        assert!(report.rows[2].p_u <= report.rows[4].p_u);
        // Monte Carlo column is an empirical CDF of one sample: monotone too
        assert!(report.rows[1].p_u <= report.rows[3].p_u);
        assert!(report.rows[3].p_u <= report.rows[5].p_u);
    }

    #[test]
    fn tradeoff_single_point() {
        let mut spec = quick_spec();
        spec.config.n = 10;
        spec.sweep = Sweep::B1Grid;
        spec.grid = vec![0.3];
        spec.theta_nodes = 16;
        let report = run_tradeoff(&spec).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].p_u > 0.0 && report.rows[0].p_u < 1.0);
    }

    #[test]
    fn histogram_shape_and_mass() {
        let mut spec = quick_spec();
        spec.trials = 20_000;
        spec.bins = 20;
        let report = run_histogram(&spec).unwrap();
        assert_eq!(report.rows.len(), 400);
        let total: u64 = report.rows.iter().map(|r| r.count).sum();
        // nearly all mass inside the 4.5-sigma box
        assert!(total as f64 > 0.99 * spec.trials as f64);
        // density integrates to ~1 over the box
        let (dx, dy) = {
            let xs: Vec<f64> = report.rows.iter().map(|r| r.x_center).collect();
            let ys: Vec<f64> = report.rows.iter().map(|r| r.y_center).collect();
            ((xs[20] - xs[0]).abs(), (ys[1] - ys[0]).abs())
        };
        let mass: f64 = report.rows.iter().map(|r| r.clt_density * dx * dy).sum();
        assert!((mass - 1.0).abs() < 0.01, "density mass = {mass}");
    }

    #[test]
    fn histogram_requires_enough_trials() {
        let mut spec = quick_spec();
        spec.trials = 5_000;
        assert!(run_histogram(&spec).is_err());
    }

    #[test]
    fn csv_has_metadata_then_header() {
        let mut spec = quick_spec();
        spec.sweep = Sweep::GammaGrid;
        spec.grid = vec![1.0, 2.0];
        let csv = run_user_op_sweep(&spec).unwrap().to_csv();
        let mut lines = csv.lines();
        let first = lines.next().unwrap();
        assert!(first.starts_with("# tool = isac-outage"));
        let header = csv
            .lines()
            .find(|l| !l.starts_with('#'))
            .unwrap();
        assert_eq!(header, "gamma,p_u,std_error,method");
        assert!(csv.lines().any(|l| l.contains("monte-carlo")));
    }

    #[test]
    fn config_text_round_trip() {
        let mut spec = ExperimentSpec::new(SystemConfig::baseline());
        apply_config_text(
            &mut spec,
            "# comment line\n n = 9 \n p_t = 20.0 # trailing comment\n gamma=4\nseed = 7\n",
        )
        .unwrap();
        assert_eq!(spec.config.n, 9);
        assert_eq!(spec.config.p_t, 20.0);
        assert_eq!(spec.gamma, 4.0);
        assert_eq!(spec.seed, 7);
    }

    #[test]
    fn unknown_key_rejected() {
        let mut spec = ExperimentSpec::new(SystemConfig::baseline());
        let err = apply_config_text(&mut spec, "powre = 3\n").unwrap_err();
        assert!(err.to_string().contains("powre"));
    }

    #[test]
    fn bad_value_names_key() {
        let mut spec = ExperimentSpec::new(SystemConfig::baseline());
        let err = apply_config_text(&mut spec, "sigma_u2 = banana\n").unwrap_err();
        assert!(err.to_string().contains("sigma_u2"));
    }
}
