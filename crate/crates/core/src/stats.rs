//! Monte Carlo driver with per-batch random streams and jackknife errors.
//!
//! Samples are drawn in batches of [`BATCH`]. Batch `b` draws from the ChaCha
//! stream `b` of the run seed, so results do not depend on how batches are
//! spread across worker threads. Batch means are merged in batch order.

use crate::scalar::C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const BATCH: usize = 64;
const CHUNK: usize = 256;

/// Environment variable read by the CLI to size the worker pool.
pub const WORKERS_ENV: &str = "CFKIT_WORKERS";

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn n_batches(samples: usize) -> usize {
    samples.div_ceil(BATCH).max(2)
}

#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    pub mean: C64,
    pub stderr_re: f64,
    pub stderr_im: f64,
    pub samples: usize,
}

impl Estimate {
    /// Standard error of the complex mean, combining both components.
    pub fn stderr(&self) -> f64 {
        self.stderr_re.hypot(self.stderr_im)
    }

    /// `|mean - target|` in units of [`Estimate::stderr`].
    pub fn z_score(&self, target: C64) -> f64 {
        let d = (self.mean - target).norm();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr()
        }
    }
}

#[derive(Clone, Debug)]
pub struct VecEstimate {
    pub mean: Vec<C64>,
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
    pub samples: usize,
}

impl VecEstimate {
    pub fn get(&self, i: usize) -> Estimate {
        Estimate {
            mean: self.mean[i],
            stderr_re: self.stderr_re[i],
            stderr_im: self.stderr_im[i],
            samples: self.samples,
        }
    }
}

/// Leave-one-out jackknife of an estimator `f` of the batch means.
///
/// Returns the full-sample estimate and the jackknife standard error of the
/// real and imaginary parts.
pub fn jackknife(batch_means: &[Vec<C64>], f: impl Fn(&[C64]) -> C64) -> (C64, f64, f64) {
    let b = batch_means.len();
    let dim = batch_means.first().map(|v| v.len()).unwrap_or(0);
    let mut total = vec![C64::new(0.0, 0.0); dim];
    for m in batch_means {
        for (t, x) in total.iter_mut().zip(m) {
            *t += x;
        }
    }
    let full: Vec<C64> = total.iter().map(|t| t / b as f64).collect();
    let est = f(&full);
    let mut loo = Vec::with_capacity(b);
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    for m in batch_means {
        for i in 0..dim {
            buf[i] = (total[i] - m[i]) / (b as f64 - 1.0);
        }
        loo.push(f(&buf));
    }
    let mean_loo: C64 = loo.iter().sum::<C64>() / b as f64;
    let factor = (b as f64 - 1.0) / b as f64;
    let var_re: f64 = loo
        .iter()
        .map(|x| (x.re - mean_loo.re).powi(2))
        .sum::<f64>()
        * factor;
    let var_im: f64 = loo
        .iter()
        .map(|x| (x.im - mean_loo.im).powi(2))
        .sum::<f64>()
        * factor;
    (est, var_re.sqrt(), var_im.sqrt())
}

/// Vector-valued Monte Carlo mean. `sample` adds one draw into the
/// accumulator. For a plain mean the jackknife error reduces to the standard
/// error of the batch means, which is accumulated in streaming form here.
pub fn mc_vector<F>(seed: u64, samples: usize, dim: usize, sample: F) -> VecEstimate
where
    F: Fn(&mut ChaCha8Rng, &mut [C64]) + Sync,
{
    let nb = n_batches(samples);
    let mut s1 = vec![C64::new(0.0, 0.0); dim];
    let mut s2_re = vec![0.0f64; dim];
    let mut s2_im = vec![0.0f64; dim];
    let mut start = 0;
    while start < nb {
        let end = (start + CHUNK).min(nb);
        let means: Vec<Vec<C64>> = (start..end)
            .into_par_iter()
            .map(|b| {
                let mut rng = stream_rng(seed, b as u64);
                let mut acc = vec![C64::new(0.0, 0.0); dim];
                for _ in 0..BATCH {
                    sample(&mut rng, &mut acc);
                }
                acc.iter_mut().for_each(|x| *x /= BATCH as f64);
                acc
            })
            .collect();
        for m in &means {
            for i in 0..dim {
                s1[i] += m[i];
                s2_re[i] += m[i].re * m[i].re;
                s2_im[i] += m[i].im * m[i].im;
            }
        }
        start = end;
    }
    let bf = nb as f64;
    let mean: Vec<C64> = s1.iter().map(|s| s / bf).collect();
    let se = |s2: f64, m: f64| ((s2 - bf * m * m).max(0.0) / (bf - 1.0) / bf).sqrt();
    let stderr_re = (0..dim).map(|i| se(s2_re[i], mean[i].re)).collect();
    let stderr_im = (0..dim).map(|i| se(s2_im[i], mean[i].im)).collect();
    VecEstimate {
        mean,
        stderr_re,
        stderr_im,
        samples: nb * BATCH,
    }
}

pub fn mc_scalar<F>(seed: u64, samples: usize, sample: F) -> Estimate
where
    F: Fn(&mut ChaCha8Rng) -> C64 + Sync,
{
    mc_vector(seed, samples, 1, |rng, acc| acc[0] += sample(rng)).get(0)
}

/// Batch means of a vector-valued draw, for estimators that need the
/// jackknife over nonlinear functions of means.
pub fn batch_means<F>(seed: u64, samples: usize, dim: usize, sample: F) -> Vec<Vec<C64>>
where
    F: Fn(&mut ChaCha8Rng, &mut [C64]) + Sync,
{
    (0..n_batches(samples))
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, b as u64);
            let mut acc = vec![C64::new(0.0, 0.0); dim];
            for _ in 0..BATCH {
                sample(&mut rng, &mut acc);
            }
            acc.iter_mut().for_each(|x| *x /= BATCH as f64);
            acc
        })
        .collect()
}
