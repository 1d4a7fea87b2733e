//! Scratch probe: is the user-outage analytic value the exact probability of
//! the Gaussian surrogate, and how far is the exact triple from Gaussian?

use isac_outage::model::sample_channel;
use isac_outage::moments::{moments_user, summed_triple};
use isac_outage::outage::{user_op_analytic, OutageQuery};
use isac_outage::rng::RandomStream;
use isac_outage::SystemConfig;

fn main() {
    let config = SystemConfig::baseline();
    let gauss = moments_user(&config).unwrap();
    let s = gauss.cov_sqrt().unwrap();
    let mean = *gauss.mean();

    let gamma = 8.0;
    let thr = gamma * config.sigma_u2 / config.p_t;

    let mut q = OutageQuery::new(config.clone());
    q.gamma = gamma;
    let analytic = user_op_analytic(&q).unwrap().value;

    // Monte Carlo of the Gaussian surrogate itself.
    let trials = 10_000_000usize;
    let mut rng = RandomStream::from_seed(99);
    let mut hits = 0usize;
    for _ in 0..trials {
        let z = nalgebra::Vector3::new(
            rng.standard_normal(),
            rng.standard_normal(),
            rng.standard_normal(),
        );
        let u = s * z + mean;
        if u[0] * u[0] + u[1] * u[1] < thr * u[2] {
            hits += 1;
        }
    }
    let p_gauss = hits as f64 / trials as f64;
    let se = (p_gauss * (1.0 - p_gauss) / trials as f64).sqrt();
    println!("analytic        = {analytic:.6}");
    println!("gaussian MC     = {p_gauss:.6} (se {se:.6})  z = {:.2}", (analytic - p_gauss) / se);

    // Exact triple: empirical moments and exact event probability.
    let trials = 1_000_000usize;
    let mut hits = 0usize;
    let mut sums = [0.0f64; 3];
    let mut sq = [[0.0f64; 3]; 3];
    for k in 0..trials {
        let mut rng = RandomStream::substream(7, k as u64);
        let chan = sample_channel(&config, &mut rng);
        let (x, y, kk) = summed_triple(&chan, &config, false);
        if x * x + y * y < thr * kk {
            hits += 1;
        }
        let v = [x, y, kk];
        for i in 0..3 {
            sums[i] += v[i];
            for j in 0..3 {
                sq[i][j] += v[i] * v[j];
            }
        }
    }
    println!("exact triple MC = {:.6}", hits as f64 / trials as f64);
    println!("empirical mean  = {:?}", sums.map(|s| s / trials as f64));
    println!("analytic mean   = [{:.4}, {:.4}, {:.4}]", mean[0], mean[1], mean[2]);
    for i in 0..3 {
        for j in 0..3 {
            let c = sq[i][j] / trials as f64 - (sums[i] / trials as f64) * (sums[j] / trials as f64);
            print!("{:8.4}/{:8.4}  ", c, gauss.cov()[(i, j)]);
        }
        println!();
    }
}
