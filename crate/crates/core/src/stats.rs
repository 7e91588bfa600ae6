//! Monte Carlo summaries and the ordered parallel map used by every batch.
//!
//! Per-path results are always collected in path order and reduced
//! sequentially, so estimates do not depend on the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

impl MeanEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                count,
            };
        }
        // corrected two-pass mean
        let rough = xs.iter().sum::<f64>() / count as f64;
        let mean = rough + xs.iter().map(|x| x - rough).sum::<f64>() / count as f64;
        let var = if count > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (count - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / count as f64).sqrt(),
            count,
        }
    }

    /// A value known without sampling error.
    pub fn exact(value: f64) -> Self {
        Self {
            mean: value,
            std_error: 0.0,
            count: 0,
        }
    }

    pub fn relative_error(&self) -> f64 {
        self.std_error / self.mean.abs()
    }
}

/// Standard error of the difference of two independent estimates.
pub fn combined_std_error(a: &MeanEstimate, b: &MeanEstimate) -> f64 {
    a.std_error.hypot(b.std_error)
}

/// Sample mean of `f(x)` over a slice.
pub fn mean_of<T>(xs: &[T], f: impl Fn(&T) -> f64) -> MeanEstimate {
    let vals: Vec<f64> = xs.iter().map(f).collect();
    MeanEstimate::from_samples(&vals)
}

/// Ordered parallel map over `0..count`, run on a pool of `workers` threads
/// (`0` = rayon default). Output order is the index order.
pub fn par_map<T, F>(count: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if workers == 1 {
        return (0..count).map(f).collect();
    }
    let run = || (0..count).into_par_iter().map(&f).collect::<Vec<T>>();
    if workers == 0 {
        run()
    } else {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    }
}

/// Ordered chunked reduction: chunks of `chunk` consecutive indices are folded
/// in parallel, then merged left to right.
pub fn par_chunked_fold<A, I, F, M>(
    count: usize,
    chunk: usize,
    workers: usize,
    init: I,
    fold: F,
    merge: M,
) -> A
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    F: Fn(&mut A, usize) + Sync + Send,
    M: Fn(&mut A, A),
{
    let chunk = chunk.max(1);
    let chunks = count.div_ceil(chunk);
    let parts = par_map(chunks, workers, |c| {
        let mut acc = init();
        for i in c * chunk..((c + 1) * chunk).min(count) {
            fold(&mut acc, i);
        }
        acc
    });
    let mut total = init();
    for p in parts {
        merge(&mut total, p);
    }
    total
}

/// One-sample Kolmogorov–Smirnov statistic of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let m = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let c = cdf(x);
        d = d.max((i + 1) as f64 / m - c).max(c - i as f64 / m);
    }
    d
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(count: usize) -> f64 {
    1.627_6 / (count as f64).sqrt()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_error_of_known_sample() {
        let e = MeanEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // sample variance 5/3
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn par_map_is_ordered_for_any_worker_count() {
        let a = par_map(1000, 1, |i| (i as f64).sqrt());
        let b = par_map(1000, 3, |i| (i as f64).sqrt());
        assert_eq!(a, b);
    }

    #[test]
    fn chunked_fold_matches_sequential_sum() {
        let s = par_chunked_fold(
            10_001,
            97,
            2,
            || 0u64,
            |a, i| *a += i as u64,
            |a, b| *a += b,
        );
        assert_eq!(s, 10_000 * 10_001 / 2);
    }

    #[test]
    fn ks_of_uniform_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d <= 0.5e-3 + 1e-12);
    }

    #[test]
    fn normal_cdf_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        let d = normal_cdf(1.959_963_984_540_054) - 0.975;
        assert!(d.abs() < 1e-11, "{d:e}");
    }
}
