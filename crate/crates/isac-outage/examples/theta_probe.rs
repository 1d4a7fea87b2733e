//! Scratch probe: convergence of the theta quadrature across configurations.

use isac_outage::outage::{target_op_analytic, OutageQuery};
use isac_outage::SystemConfig;

fn p_at(query: &OutageQuery, nodes: usize) -> f64 {
    let mut q = query.clone();
    q.theta_nodes = nodes;
    match target_op_analytic(&q) {
        Ok(e) => e.value,
        Err(err) => {
            println!("    nodes {nodes}: {err}");
            f64::NAN
        }
    }
}

fn main() {
    let mut configs: Vec<(String, SystemConfig, f64)> = Vec::new();
    for n in [9usize, 15] {
        for p_t in [10.0, 20.0] {
            for eps_exp in [-10, -9, -8, -7, -6, -5, -4] {
                let mut c = SystemConfig::baseline();
                c.n = n;
                c.p_t = p_t;
                let eps = 8.0 * 10f64.powi(eps_exp);
                configs.push((format!("n={n} p={p_t} eps={eps:.1e}"), c, eps));
            }
        }
    }
    for b1 in [0.05, 0.35, 0.65, 0.95] {
        let mut c = SystemConfig::baseline();
        c.n = 9;
        c.b1_mag = b1;
        configs.push((format!("n=9 b1={b1} eps=8e-7"), c, 8e-7));
    }

    for (name, config, eps) in configs {
        let mut query = OutageQuery::new(config);
        query.epsilon = eps;
        query.theta_nodes = 8; // placeholder; overridden in p_at
        let p32 = p_at(&query, 32);
        let p64 = p_at(&query, 64);
        let p128 = p_at(&query, 128);
        let p256 = p_at(&query, 256);
        println!(
            "{name:28} p32={p32:.6} d(32,64)={:.2e} d(64,128)={:.2e} d(128,256)={:.2e}",
            (p64 - p32).abs(),
            (p128 - p64).abs(),
            (p256 - p128).abs()
        );
    }
}
