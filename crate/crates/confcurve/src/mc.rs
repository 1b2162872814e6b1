//! Deterministic Monte Carlo engine.
//!
//! Every estimate is a pure function of (seed, replicates, grid): replicate i
//! of lane j draws from its own counter-keyed ChaCha stream, parallel maps
//! collect in index order, and reductions run sequentially over that order,
//! so worker count affects wall time only.

use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::Model;

/// Fraction of replicates allowed to produce NaN statistics.
pub const MAX_INVALID_FRACTION: f64 = 0.001;

/// Replicate budget for the exact-pivot curve demos.
pub const DEFAULT_PIVOT_REPLICATES: usize = 50_000;
/// Replicate budget for the normal-transformation demo.
pub const DEFAULT_TRANSFORM_REPLICATES: usize = 100_000;
/// Per-node replicate budget for the GPD pipeline.
pub const DEFAULT_GPD_NODE_REPLICATES: usize = 15_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    pub replicates: usize,
    /// Ordered parameter nodes for grid-calibrated estimates.
    #[serde(default)]
    pub grid: Vec<f64>,
    /// Worker threads; 0 = library default. Affects speed only.
    #[serde(default)]
    pub workers: usize,
}

impl McConfig {
    pub fn new(seed: u64, replicates: usize) -> Self {
        McConfig { seed, replicates, grid: Vec::new(), workers: 0 }
    }

    pub fn with_grid(mut self, grid: Vec<f64>) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }
}

/// RNG for replicate `rep` of lane `lane` under `seed`.
///
/// Streams are keyed (lane << 32) | rep, so lanes and replicates below 2^32
/// never collide and reproduce identically at any parallelism.
pub fn substream(seed: u64, lane: u64, rep: u64) -> ChaCha8Rng {
    debug_assert!(lane < (1 << 32) && rep < (1 << 32));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((lane << 32) | rep);
    rng
}

/// Run `f` inside a pool of `workers` threads (0 = use the global pool).
pub fn run_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("thread pool")
            .install(f)
    }
}

/// Deterministic parallel map over replicate indices.
pub fn par_map<T: Send>(workers: usize, count: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    run_pool(workers, || (0..count).into_par_iter().map(f).collect())
}

// ---------------------------------------------------------------------------
// Empirical CDF
// ---------------------------------------------------------------------------

/// Sorted-sample empirical CDF with linear interpolation between order
/// statistics, clamped to [0, 1]. +inf entries are legal order statistics
/// (a statistic may diverge on a null set); NaN counts as invalid input.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>) -> Result<Self> {
        let total = samples.len();
        if total == 0 {
            return Err(Error::Invalid("empirical CDF needs at least one sample".into()));
        }
        let nan_count = samples.iter().filter(|x| x.is_nan()).count();
        if nan_count as f64 > MAX_INVALID_FRACTION * total as f64 {
            return Err(Error::TooManyInvalid { count: nan_count, total });
        }
        samples.retain(|x| !x.is_nan());
        samples.sort_unstable_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn eval(&self, y: f64) -> f64 {
        let n = self.sorted.len();
        let r = n as f64;
        if y < self.sorted[0] {
            return 0.0;
        }
        // count of order statistics <= y
        let k = self.sorted.partition_point(|x| *x <= y);
        if k == n {
            return 1.0;
        }
        let left = self.sorted[k - 1];
        let right = self.sorted[k];
        if right.is_finite() && right > left {
            ((k as f64) + (y - left) / (right - left)).min(r) / r
        } else {
            k as f64 / r
        }
    }

    /// Kolmogorov–Smirnov distance from a reference CDF.
    pub fn ks_distance(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let n = self.sorted.len() as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in self.sorted.iter().enumerate() {
            if !x.is_finite() {
                continue;
            }
            let f = cdf(x);
            d = d.max(((i + 1) as f64 / n - f).abs()).max((f - i as f64 / n).abs());
        }
        d
    }
}

/// Empirical CDF of `statistic` over datasets sampled from `model` at theta.
pub fn empirical_cdf(
    model: &dyn Model,
    theta: f64,
    statistic: &(dyn Fn(&[f64]) -> f64 + Sync),
    cfg: &McConfig,
) -> Result<EmpiricalCdf> {
    let samples = par_map(cfg.workers, cfg.replicates, |rep| {
        let mut rng = substream(cfg.seed, 0, rep as u64);
        let data = model.sample(theta, &mut rng);
        statistic(&data)
    });
    EmpiricalCdf::from_samples(samples)
}

/// Per-node sorted samples of a node-aware statistic over the config grid.
///
/// Lane j is reserved for grid node j, so adding nodes never reshuffles
/// existing draws.
pub fn grid_samples(
    sample_at: &(dyn Fn(usize, &mut ChaCha8Rng) -> f64 + Sync),
    nodes: usize,
    cfg: &McConfig,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(nodes);
    for node in 0..nodes {
        let mut samples = par_map(cfg.workers, cfg.replicates, |rep| {
            let mut rng = substream(cfg.seed, node as u64, rep as u64);
            sample_at(node, &mut rng)
        });
        samples.sort_unstable_by(f64::total_cmp);
        out.push(samples);
    }
    out
}

/// Midpoint median of a sorted sample.
pub fn sorted_median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    assert!(n > 0);
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

// ---------------------------------------------------------------------------
// Tail-symmetry studies
// ---------------------------------------------------------------------------

/// Miss-rate accounting for one (n, alpha) cell. Counts are exact; the
/// stored rates satisfy left + right + coverage = 1 by construction.
#[derive(Debug, Clone, Serialize)]
pub struct TailCell {
    pub n: usize,
    pub alpha: f64,
    pub left_miss: f64,
    pub right_miss: f64,
    pub coverage: f64,
    /// Binomial standard error of a single tail at the nominal alpha/2.
    pub se: f64,
    pub left_count: usize,
    pub right_count: usize,
    pub replicates: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TailStudyResult {
    pub cells: Vec<TailCell>,
    pub irregular: usize,
}

/// Simulate datasets at theta_true and score tail misses of the level sets.
///
/// `h_builder` maps a dataset to the curve's distribution value H(theta_true);
/// the level-(1-alpha) interval misses left exactly when H < alpha/2 and
/// right when H > 1 - alpha/2. Builder failures count as irregular curves;
/// more than 1% of them aborts the study.
pub fn tail_symmetry_cells(
    model: &dyn Model,
    theta_true: f64,
    h_builder: &(dyn Fn(&[f64]) -> Result<f64> + Sync),
    alphas: &[f64],
    cfg: &McConfig,
) -> Result<TailStudyResult> {
    let hs = par_map(cfg.workers, cfg.replicates, |rep| {
        let mut rng = substream(cfg.seed, 1, rep as u64);
        let data = model.sample(theta_true, &mut rng);
        h_builder(&data).ok()
    });
    let irregular = hs.iter().filter(|h| h.is_none()).count();
    if irregular as f64 > 0.01 * cfg.replicates as f64 {
        return Err(Error::Invalid(format!(
            "{irregular} of {} replicate curves were irregular",
            cfg.replicates
        )));
    }
    let valid: Vec<f64> = hs.into_iter().flatten().collect();
    let r = valid.len();
    let mut cells = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let half = 0.5 * alpha;
        let left_count = valid.iter().filter(|&&h| h < half).count();
        let right_count = valid.iter().filter(|&&h| h > 1.0 - half).count();
        let left_miss = left_count as f64 / r as f64;
        let right_miss = right_count as f64 / r as f64;
        cells.push(TailCell {
            n: model.sample_size(),
            alpha,
            left_miss,
            right_miss,
            // association matches the accounting identity (l + r) + c == 1
            coverage: 1.0 - (left_miss + right_miss),
            se: (half * (1.0 - half) / r as f64).sqrt(),
            left_count,
            right_count,
            replicates: r,
        });
    }
    Ok(TailStudyResult { cells, irregular })
}
