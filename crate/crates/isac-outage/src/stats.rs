//! Blocked moment accumulation with jackknife standard errors.
//!
//! Monte Carlo moment checks compare an empirical mean or covariance entry
//! against its analytical value in units of the estimator's own standard
//! error. The standard errors come from a delete-one-block jackknife over a
//! fixed number of blocks, computed from per-block sufficient statistics so
//! no sample needs to be retained.

/// Sufficient statistics of one block of 3-vector samples.
#[derive(Debug, Clone, Copy, Default)]
struct BlockStats {
    count: f64,
    sum: [f64; 3],
    cross: [[f64; 3]; 3],
}

/// Accumulator for mean/covariance estimates over blocked 3-vector samples.
#[derive(Debug, Clone)]
pub struct TripleMoments {
    blocks: Vec<BlockStats>,
}

impl TripleMoments {
    pub fn new(num_blocks: usize) -> Self {
        assert!(num_blocks >= 2, "jackknife needs at least two blocks");
        TripleMoments {
            blocks: vec![BlockStats::default(); num_blocks],
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Add one sample to the given block.
    pub fn push(&mut self, block: usize, v: [f64; 3]) {
        let b = &mut self.blocks[block];
        b.count += 1.0;
        for i in 0..3 {
            b.sum[i] += v[i];
            for j in 0..3 {
                b.cross[i][j] += v[i] * v[j];
            }
        }
    }

    /// Merge another accumulator with the same block layout.
    pub fn merge(&mut self, other: &TripleMoments) {
        assert_eq!(self.blocks.len(), other.blocks.len());
        for (a, b) in self.blocks.iter_mut().zip(other.blocks.iter()) {
            a.count += b.count;
            for i in 0..3 {
                a.sum[i] += b.sum[i];
                for j in 0..3 {
                    a.cross[i][j] += b.cross[i][j];
                }
            }
        }
    }

    fn totals(&self) -> BlockStats {
        let mut t = BlockStats::default();
        for b in &self.blocks {
            t.count += b.count;
            for i in 0..3 {
                t.sum[i] += b.sum[i];
                for j in 0..3 {
                    t.cross[i][j] += b.cross[i][j];
                }
            }
        }
        t
    }

    pub fn mean(&self) -> [f64; 3] {
        let t = self.totals();
        std::array::from_fn(|i| t.sum[i] / t.count)
    }

    /// Population covariance over all samples.
    pub fn covariance(&self) -> [[f64; 3]; 3] {
        let t = self.totals();
        cov_from_stats(&t)
    }

    /// Jackknife standard error of each mean entry.
    pub fn mean_se(&self) -> [f64; 3] {
        self.jackknife(|s| std::array::from_fn(|i| s.sum[i] / s.count))
    }

    /// Jackknife standard error of each covariance entry, reported as the
    /// 3x3 matrix of standard errors.
    pub fn cov_se(&self) -> [[f64; 3]; 3] {
        let flat = self.jackknife_flat(|s| {
            let c = cov_from_stats(s);
            let mut out = [0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    out[3 * i + j] = c[i][j];
                }
            }
            out
        });
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = flat[3 * i + j];
            }
        }
        out
    }

    fn jackknife(&self, estimator: impl Fn(&BlockStats) -> [f64; 3]) -> [f64; 3] {
        let flat = self.jackknife_flat(|s| {
            let e = estimator(s);
            let mut out = [0.0; 9];
            out[..3].copy_from_slice(&e);
            out
        });
        [flat[0], flat[1], flat[2]]
    }

    /// Delete-one-block jackknife over a 9-component estimator.
    fn jackknife_flat(&self, estimator: impl Fn(&BlockStats) -> [f64; 9]) -> [f64; 9] {
        let t = self.totals();
        let nb = self.blocks.len() as f64;
        let mut leave_outs: Vec<[f64; 9]> = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let mut rest = BlockStats {
                count: t.count - b.count,
                ..Default::default()
            };
            for i in 0..3 {
                rest.sum[i] = t.sum[i] - b.sum[i];
                for j in 0..3 {
                    rest.cross[i][j] = t.cross[i][j] - b.cross[i][j];
                }
            }
            leave_outs.push(estimator(&rest));
        }
        let mut se = [0.0; 9];
        for k in 0..9 {
            let avg = leave_outs.iter().map(|e| e[k]).sum::<f64>() / nb;
            let ss = leave_outs
                .iter()
                .map(|e| (e[k] - avg).powi(2))
                .sum::<f64>();
            se[k] = ((nb - 1.0) / nb * ss).sqrt();
        }
        se
    }
}

fn cov_from_stats(s: &BlockStats) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = s.cross[i][j] / s.count - (s.sum[i] / s.count) * (s.sum[j] / s.count);
        }
    }
    c
}
