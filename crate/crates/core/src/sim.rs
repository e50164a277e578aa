//! Monte Carlo reconstruction of the sampling distributions of δ̂ and β̂/β.
//!
//! Every replication draws from its own ChaCha substream keyed by
//! (cell seed, replication index), so results depend only on the
//! configuration and never on scheduling or worker count. Replications whose
//! sample cannot be solved are redrawn from a reserved stream range and
//! counted.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::SimError;
use crate::mle::{solve_mle, Sample, DEFAULT_TOL};
use crate::moment_match::fit_cell;
use crate::weibull::WeibullParams;

/// Minimum replications per cell.
pub const MIN_REPLICATIONS: usize = 100;
/// Stream ids at or above this value are reserved for redraws.
const REDRAW_STREAM_BASE: u64 = 1 << 63;
const MAX_REDRAWS: u64 = 255;

/// SplitMix64 finalizer; used to spread structured inputs over seed space.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for stream `stream` under key `key`.
pub fn substream(key: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream);
    rng
}

/// Seed for the cell (n, δ) under a master seed. Keyed by the cell's values,
/// not its position, so a cell reproduces regardless of the grid around it.
pub fn cell_seed(master_seed: u64, n: usize, delta: f64) -> u64 {
    mix64(master_seed ^ mix64(n as u64 ^ mix64(delta.to_bits())))
}

/// Seed of run `run` in a repeated study.
pub fn run_seed(seed: u64, run: usize) -> u64 {
    mix64(seed.wrapping_add(mix64(run as u64 ^ 0x5eed)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n_values: Vec<usize>,
    pub delta_values: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
}

impl GridSpec {
    /// n ∈ {10, 50, 100}, δ ∈ {0.5, 1, 5, 10}, M = 10⁴.
    pub fn desk(master_seed: u64) -> Self {
        Self {
            n_values: vec![10, 50, 100],
            delta_values: vec![0.5, 1.0, 5.0, 10.0],
            replications: 10_000,
            master_seed,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for &n in &self.n_values {
            check_n(n)?;
        }
        for &d in &self.delta_values {
            check_delta(d)?;
        }
        check_m(self.replications)
    }

    /// Cells in row-major (n outer, δ inner) order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.n_values
            .iter()
            .flat_map(move |&n| self.delta_values.iter().map(move |&d| (n, d)))
    }
}

fn check_n(n: usize) -> Result<(), SimError> {
    if n < 2 {
        return Err(SimError::SampleSizeTooSmall(n));
    }
    Ok(())
}

fn check_delta(d: f64) -> Result<(), SimError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(SimError::InvalidShape(d));
    }
    Ok(())
}

fn check_m(m: usize) -> Result<(), SimError> {
    if m < MIN_REPLICATIONS {
        return Err(SimError::TooFewReplications(m));
    }
    Ok(())
}

/// Per-cell Monte Carlo summary with the raw MLE draws retained.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub n: usize,
    pub delta: f64,
    pub delta_hat_samples: Vec<f64>,
    pub beta_ratio_samples: Vec<f64>,
    pub mean_delta_hat: f64,
    pub var_delta_hat: f64,
    pub mean_beta_ratio: f64,
    pub var_beta_ratio: f64,
    pub failure_count: usize,
}

impl CellSummary {
    pub fn from_samples(
        n: usize,
        delta: f64,
        delta_hat_samples: Vec<f64>,
        beta_ratio_samples: Vec<f64>,
        failure_count: usize,
    ) -> Self {
        let (mean_delta_hat, var_delta_hat) = mean_and_sample_var(&delta_hat_samples);
        let (mean_beta_ratio, var_beta_ratio) = mean_and_sample_var(&beta_ratio_samples);
        Self {
            n,
            delta,
            delta_hat_samples,
            beta_ratio_samples,
            mean_delta_hat,
            var_delta_hat,
            mean_beta_ratio,
            var_beta_ratio,
            failure_count,
        }
    }

    pub fn replications(&self) -> usize {
        self.delta_hat_samples.len()
    }
}

/// Mean and (M−1)-divisor variance.
pub fn mean_and_sample_var(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let ss = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>();
    (mean, ss / (m - 1.0))
}

/// Mean, SD and CV of one fitted parameter over repeated runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDispersion {
    pub mean: f64,
    pub sd: f64,
    pub cv: f64,
}

impl ParamDispersion {
    fn from_values(xs: &[f64]) -> Self {
        let (mean, var) = mean_and_sample_var(xs);
        let sd = var.sqrt();
        Self {
            mean,
            sd,
            cv: sd / mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunDispersion {
    pub n: usize,
    pub delta: f64,
    pub runs: usize,
    pub a: ParamDispersion,
    pub b: ParamDispersion,
    pub c: ParamDispersion,
    pub d: ParamDispersion,
}

/// Runs cells on a dedicated pool (or rayon's global pool when no worker
/// count is given).
pub struct SimEngine {
    pool: Option<ThreadPool>,
    tol: f64,
}

impl Default for SimEngine {
    fn default() -> Self {
        Self {
            pool: None,
            tol: DEFAULT_TOL,
        }
    }
}

impl SimEngine {
    pub fn with_workers(workers: usize) -> Result<Self, SimError> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?;
        Ok(Self {
            pool: Some(pool),
            tol: DEFAULT_TOL,
        })
    }

    /// Solver tolerance used for every replication.
    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> T {
        match &self.pool {
            Some(pool) => pool.install(f),
            None => f(),
        }
    }

    pub fn run_cell(
        &self,
        n: usize,
        delta: f64,
        m: usize,
        seed: u64,
    ) -> Result<CellSummary, SimError> {
        self.run_cell_scaled(n, delta, 1.0, m, seed)
    }

    /// Same as [`run_cell`](Self::run_cell) but draws from W(δ, β); β̂ is
    /// divided by β before being stored.
    pub fn run_cell_scaled(
        &self,
        n: usize,
        delta: f64,
        beta: f64,
        m: usize,
        seed: u64,
    ) -> Result<CellSummary, SimError> {
        check_n(n)?;
        check_delta(delta)?;
        check_m(m)?;
        if !(self.tol > 0.0) {
            return Err(SimError::InvalidTolerance(self.tol));
        }
        let law = WeibullParams::new(delta, beta).map_err(|_| SimError::InvalidShape(beta))?;
        let draws: Vec<Result<(f64, f64, usize), SimError>> = self.install(|| {
            (0..m)
                .into_par_iter()
                .map(|rep| replicate(&law, n, seed, rep, self.tol))
                .collect()
        });
        let mut delta_hats = Vec::with_capacity(m);
        let mut ratios = Vec::with_capacity(m);
        let mut failures = 0;
        for d in draws {
            let (dh, br, f) = d?;
            delta_hats.push(dh);
            ratios.push(br);
            failures += f;
        }
        Ok(CellSummary::from_samples(n, delta, delta_hats, ratios, failures))
    }

    /// Every cell of the grid, in [`GridSpec::cells`] order.
    pub fn run_grid(&self, grid: &GridSpec) -> Result<Vec<CellSummary>, SimError> {
        grid.validate()?;
        grid.cells()
            .map(|(n, d)| self.run_cell(n, d, grid.replications, cell_seed(grid.master_seed, n, d)))
            .collect()
    }

    /// `runs` independent cells, each moment-matched, summarised as mean/SD/CV.
    pub fn repeat_runs(
        &self,
        n: usize,
        delta: f64,
        m: usize,
        runs: usize,
        seed: u64,
    ) -> Result<RunDispersion, SimError> {
        let seeds: Vec<u64> = (0..runs).map(|r| run_seed(seed, r)).collect();
        self.repeat_runs_with_seeds(n, delta, m, &seeds)
    }

    pub fn repeat_runs_with_seeds(
        &self,
        n: usize,
        delta: f64,
        m: usize,
        seeds: &[u64],
    ) -> Result<RunDispersion, SimError> {
        if seeds.len() < 2 {
            return Err(SimError::TooFewRuns(seeds.len()));
        }
        let mut fits = [const { Vec::new() }; 4];
        for &s in seeds {
            let cell = self.run_cell(n, delta, m, s)?;
            let (shape_fit, scale_fit) = fit_cell(&cell)?;
            fits[0].push(shape_fit.shape);
            fits[1].push(shape_fit.scale);
            fits[2].push(scale_fit.shape);
            fits[3].push(scale_fit.scale);
        }
        Ok(RunDispersion {
            n,
            delta,
            runs: seeds.len(),
            a: ParamDispersion::from_values(&fits[0]),
            b: ParamDispersion::from_values(&fits[1]),
            c: ParamDispersion::from_values(&fits[2]),
            d: ParamDispersion::from_values(&fits[3]),
        })
    }
}

/// One replication: (δ̂, β̂/β, failed attempts before success).
fn replicate(
    law: &WeibullParams,
    n: usize,
    seed: u64,
    rep: usize,
    tol: f64,
) -> Result<(f64, f64, usize), SimError> {
    let rep = rep as u64;
    for attempt in 0..=MAX_REDRAWS {
        let stream = if attempt == 0 {
            rep
        } else {
            REDRAW_STREAM_BASE | (rep << 8) | attempt
        };
        let mut rng = substream(seed, stream);
        let xs = law.sample(n, &mut rng);
        let Ok(sample) = Sample::new(xs) else { continue };
        if let Ok(est) = solve_mle(&sample, tol) {
            return Ok((est.delta_hat, est.beta_hat / law.scale(), attempt as usize));
        }
    }
    Err(SimError::RedrawExhausted {
        replication: rep as usize,
    })
}

/// Free-function form of [`SimEngine::run_cell`] on the global pool.
pub fn run_cell(n: usize, delta: f64, m: usize, seed: u64) -> Result<CellSummary, SimError> {
    SimEngine::default().run_cell(n, delta, m, seed)
}

/// Free-function form of [`SimEngine::repeat_runs`] on the global pool.
pub fn repeat_runs(
    n: usize,
    delta: f64,
    m: usize,
    runs: usize,
    seed: u64,
) -> Result<RunDispersion, SimError> {
    SimEngine::default().repeat_runs(n, delta, m, runs, seed)
}

/// Index (1-based) of the order statistic used for probability `p` among
/// `m` values: exactly Mp when Mp is an integer, ⌈Mp⌉ otherwise.
pub fn order_statistic_rank(m: usize, p: f64) -> Result<usize, SimError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(SimError::InvalidProbability(p));
    }
    if m == 0 {
        return Err(SimError::Empty);
    }
    let mp = m as f64 * p;
    if mp < 1.0 - 1e-9 {
        return Err(SimError::QuantileBelowFirst(mp));
    }
    let nearest = mp.round();
    // absorb representation error such as 0.1 * 30 = 3.0000000000000004
    let k = if (mp - nearest).abs() <= 1e-9 * mp.max(1.0) {
        nearest
    } else {
        mp.ceil()
    };
    Ok((k as usize).clamp(1, m))
}

/// The (Mp)-th ordered value of `samples`.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64, SimError> {
    let k = order_statistic_rank(samples.len(), p)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[k - 1])
}

/// As [`empirical_quantile`] on data that is already sorted ascending.
pub fn empirical_quantile_sorted(sorted: &[f64], p: f64) -> Result<f64, SimError> {
    let k = order_statistic_rank(sorted.len(), p)?;
    Ok(sorted[k - 1])
}

/// Equal-width relative frequency histogram over [min, max].
/// Constant data lands in the middle bin of a unit-width window.
pub fn histogram(samples: &[f64], bin_count: usize) -> Result<Vec<(f64, f64)>, SimError> {
    if bin_count < 2 {
        return Err(SimError::TooFewBins(bin_count));
    }
    if samples.is_empty() {
        return Err(SimError::Empty);
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (start, width) = if hi > lo {
        (lo, (hi - lo) / bin_count as f64)
    } else {
        (lo - 0.5, 1.0 / bin_count as f64)
    };
    let mut counts = vec![0usize; bin_count];
    for &x in samples {
        let idx = (((x - start) / width) as usize).min(bin_count - 1);
        counts[idx] += 1;
    }
    let total = samples.len() as f64;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (start + (i as f64 + 0.5) * width, c as f64 / total))
        .collect())
}
