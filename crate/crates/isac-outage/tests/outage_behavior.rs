//! Behavioral checks of the outage estimators: agreement between the
//! analytic and Monte Carlo routes, the monotonicity and ordering claims,
//! parameter invariances, and the ergodic-rate oracle.

use isac_outage::outage::{
    ergodic_rate_montecarlo, target_op_analytic, target_op_montecarlo, user_op_analytic,
    user_op_montecarlo, OutageQuery,
};
use isac_outage::quadrature::GaussLegendre;
use isac_outage::SystemConfig;

fn query() -> OutageQuery {
    OutageQuery::new(SystemConfig::baseline())
}

/// The analytic route approximates the summed triple by a Gaussian; its
/// intrinsic error against exact simulation sits near 0.02-0.03 for n in the
/// 9..15 range, so agreement is asserted at the method's accuracy.
#[test]
fn user_routes_agree_within_method_accuracy() {
    let mut q = query();
    q.trials = 200_000;
    for gamma in [1.0, 4.0, 8.0, 16.0] {
        q.gamma = gamma;
        let analytic = user_op_analytic(&q).unwrap().value;
        let mc = user_op_montecarlo(&q).unwrap();
        assert!(
            (analytic - mc.value).abs() < (4.0 * mc.std_error).max(0.04),
            "gamma {gamma}: analytic {analytic} vs mc {}",
            mc.value
        );
    }
}

#[test]
fn target_routes_agree() {
    let mut q = query();
    q.trials = 200_000;
    for epsilon in [8e-8, 8e-7, 8e-6] {
        q.epsilon = epsilon;
        let analytic = target_op_analytic(&q).unwrap().value;
        let mc = target_op_montecarlo(&q).unwrap();
        assert!(
            (analytic - mc.value).abs() < (4.0 * mc.std_error).max(0.02),
            "epsilon {epsilon}: analytic {analytic} vs mc {}",
            mc.value
        );
    }
}

#[test]
fn user_outage_monotone_in_threshold() {
    let mut q = query();
    let mut previous = -1.0;
    for gamma in [0.5, 1.0, 2.0, 4.0, 8.0, 12.0, 16.0, 24.0] {
        q.gamma = gamma;
        let p = user_op_analytic(&q).unwrap().value;
        assert!(
            p >= previous - 2e-6,
            "P_u({gamma}) = {p} below previous {previous}"
        );
        previous = p;
    }
}

#[test]
fn target_outage_antitone_in_threshold() {
    let mut q = query();
    let mut previous = 2.0;
    for epsilon in [8e-9, 8e-8, 8e-7, 8e-6, 8e-5] {
        q.epsilon = epsilon;
        let p = target_op_analytic(&q).unwrap().value;
        assert!(
            p <= previous + 2e-6,
            "P_c({epsilon}) = {p} above previous {previous}"
        );
        previous = p;
    }
}

#[test]
fn more_power_helps_both_links() {
    let mut q = query();
    let pu_10 = user_op_analytic(&q).unwrap().value;
    let pc_10 = target_op_analytic(&q).unwrap().value;
    q.config.p_t = 20.0;
    let pu_20 = user_op_analytic(&q).unwrap().value;
    let pc_20 = target_op_analytic(&q).unwrap().value;
    assert!(pu_20 < pu_10, "user: {pu_20} !< {pu_10}");
    assert!(pc_20 < pc_10, "target: {pc_20} !< {pc_10}");
}

#[test]
fn more_antennas_help_both_links() {
    let mut q = query();
    q.config.n = 9;
    let pu_9 = user_op_analytic(&q).unwrap().value;
    let pc_9 = target_op_analytic(&q).unwrap().value;
    q.config.n = 15;
    let pu_15 = user_op_analytic(&q).unwrap().value;
    let pc_15 = target_op_analytic(&q).unwrap().value;
    assert!(pu_15 < pu_9, "user: {pu_15} !< {pu_9}");
    assert!(pc_15 < pc_9, "target: {pc_15} !< {pc_9}");
}

#[test]
fn beam_weight_tradeoff_direction() {
    let mut q = query();
    q.config.n = 9;
    let mut last_pu = 2.0;
    let mut last_pc = -1.0;
    for b1 in [0.1, 0.4, 0.7, 1.0] {
        q.config.b1_mag = b1;
        let pu = user_op_analytic(&q).unwrap().value;
        let pc = target_op_analytic(&q).unwrap().value;
        assert!(pu < last_pu, "P_u not decreasing at b1 = {b1}");
        assert!(pc > last_pc, "P_c not increasing at b1 = {b1}");
        last_pu = pu;
        last_pc = pc;
    }
}

/// The conditional law behind the user outage does not involve the azimuth:
/// the analytic value is literally azimuth-free, and empirical moments of
/// the per-element triple drawn at two distant azimuths agree within the
/// combined Monte Carlo error.
#[test]
fn user_triple_law_does_not_depend_on_azimuth() {
    use isac_outage::model::steering_phases;
    use isac_outage::moments::sample_triple_user;
    use isac_outage::stats::TripleMoments;
    use isac_outage::RandomStream;

    let config = SystemConfig::baseline();
    let trials = 200_000u64;
    let moments_at = |theta: f64, seed: u64| {
        let f = steering_phases(theta, config.n)[0];
        let mut acc = TripleMoments::new(100);
        let mut rng = RandomStream::from_seed(seed);
        let sigma = 0.5f64.sqrt();
        for k in 0..trials {
            let h = num_complex::Complex64::new(
                sigma * rng.standard_normal(),
                sigma * rng.standard_normal(),
            );
            let t = sample_triple_user(h, f, &config);
            acc.push((k % 100) as usize, [t.first, t.second, t.third]);
        }
        acc
    };
    let a = moments_at(0.3, 11);
    let b = moments_at(2.8, 12);
    for i in 0..3 {
        let se = (a.mean_se()[i].powi(2) + b.mean_se()[i].powi(2)).sqrt();
        assert!(
            (a.mean()[i] - b.mean()[i]).abs() < 5.0 * se,
            "mean[{i}] differs across azimuths"
        );
        for j in i..3 {
            let se = (a.cov_se()[i][j].powi(2) + b.cov_se()[i][j].powi(2)).sqrt();
            assert!(
                (a.covariance()[i][j] - b.covariance()[i][j]).abs() < 5.0 * se,
                "cov[{i}][{j}] differs across azimuths"
            );
        }
    }
}

#[test]
fn user_outage_invariant_to_target_phase() {
    let mut q = query();
    let base = user_op_analytic(&q).unwrap().value;
    for phase in [0.4, 1.9, 4.0] {
        q.config.b2_phase = phase;
        let p = user_op_analytic(&q).unwrap().value;
        assert!((p - base).abs() < 1e-9, "phi2 {phase}: {p} vs {base}");
    }
}

#[test]
fn target_outage_invariant_to_user_phase() {
    let mut q = query();
    let base = target_op_analytic(&q).unwrap().value;
    for phase in [0.7, 2.2, 5.1] {
        q.config.b1_phase = phase;
        let p = target_op_analytic(&q).unwrap().value;
        assert!((p - base).abs() < 1e-9, "phi1 {phase}: {p} vs {base}");
    }
}

/// With b2 = 0 the SINR is (p_t/sigma_u2) * ||h||^2 where ||h||^2 has a
/// Gamma(n, 1) law, so the ergodic rate has a one-dimensional integral form
/// that the Monte Carlo estimate must reproduce.
#[test]
fn ergodic_rate_matches_gamma_integral_oracle() {
    let mut q = query();
    q.config.b2_mag = 0.0;
    q.trials = 400_000;
    let mc = ergodic_rate_montecarlo(&q).unwrap();

    let n = q.config.n as f64;
    let snr = q.config.p_t / q.config.sigma_u2;
    let ln_gamma_n = statrs::function::gamma::ln_gamma(n);
    let rule = GaussLegendre::new(256);
    let upper = n + 20.0 * n.sqrt();
    let oracle = rule.integrate(0.0, upper, |v| {
        let log_density = (n - 1.0) * v.ln() - v - ln_gamma_n;
        (1.0 + snr * v).log2() * log_density.exp()
    });

    assert!(
        (mc.value - oracle).abs() < (5.0 * mc.std_error).max(1e-3),
        "mc {} vs oracle {oracle} (se {})",
        mc.value,
        mc.std_error
    );
}

#[test]
fn ergodic_rate_reproducible_and_positive() {
    let mut q = query();
    q.trials = 50_000;
    let a = ergodic_rate_montecarlo(&q).unwrap();
    let b = ergodic_rate_montecarlo(&q).unwrap();
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert!(a.value > 0.0);
}

/// Monte Carlo curves over a shared sample are exact empirical CDFs, hence
/// monotone in the threshold.
#[test]
fn monte_carlo_curves_are_monotone_on_shared_samples() {
    let config = SystemConfig::baseline();
    let samples = isac_outage::outage::sinr_samples(&config, 100_000, 5);
    let mut previous = -1.0;
    for gamma in [1.0, 2.0, 4.0, 8.0, 12.0, 16.0] {
        let p = samples.iter().filter(|&&s| s < gamma).count() as f64 / samples.len() as f64;
        assert!(p >= previous);
        previous = p;
    }

    let crbs = isac_outage::outage::crb_samples(&config, 100_000, 5);
    let mut previous = 2.0;
    for epsilon in [8e-9, 8e-8, 8e-7, 8e-6] {
        let p = crbs.iter().filter(|&&s| s > epsilon).count() as f64 / crbs.len() as f64;
        assert!(p <= previous);
        previous = p;
    }
}
