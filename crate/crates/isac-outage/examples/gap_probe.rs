//! Scratch probe: analytic-versus-Monte-Carlo gaps at acceptance scale.

use isac_outage::outage::{
    crb_samples, sinr_samples, target_op_analytic, user_op_analytic, OutageQuery,
};
use isac_outage::SystemConfig;
use std::time::Instant;

fn main() {
    let trials = 1_000_000u64;
    for n in [15usize, 9] {
        let mut config = SystemConfig::baseline();
        config.n = n;
        let t0 = Instant::now();
        let samples = sinr_samples(&config, trials, 2024);
        let t_mc = t0.elapsed();
        for gamma in [1.0, 2.0, 4.0, 8.0, 12.0, 16.0] {
            let mut q = OutageQuery::new(config.clone());
            q.gamma = gamma;
            let t1 = Instant::now();
            let a = user_op_analytic(&q).unwrap().value;
            let t_an = t1.elapsed();
            let p = samples.iter().filter(|&&s| s < gamma).count() as f64 / trials as f64;
            let se = (p * (1.0 - p) / trials as f64).sqrt();
            println!(
                "user n={n:2} gamma={gamma:4}: analytic={a:.5} mc={p:.5} gap={:+.5} (4se={:.5}) an={:?} mc_total={:?}",
                a - p,
                4.0 * se,
                t_an,
                t_mc
            );
        }
    }

    let config = SystemConfig::baseline();
    let t0 = Instant::now();
    let samples = crb_samples(&config, trials, 2025);
    println!("crb samples in {:?}", t0.elapsed());
    for eps_exp in [-10, -9, -8, -7, -6, -5, -4] {
        let eps = 8.0 * 10f64.powi(eps_exp);
        let mut q = OutageQuery::new(config.clone());
        q.epsilon = eps;
        let t1 = Instant::now();
        let a = target_op_analytic(&q).unwrap().value;
        let t_an = t1.elapsed();
        let p = samples.iter().filter(|&&s| s > eps).count() as f64 / trials as f64;
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        println!(
            "target eps=8e{eps_exp:3}: analytic={a:.5} mc={p:.5} gap={:+.5} (4se={:.5}) an={:?}",
            a - p,
            4.0 * se,
            t_an
        );
    }
}
