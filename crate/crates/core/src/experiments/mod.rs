//! Gap estimation over intensity grids, rate regression, and the property
//! suites. Replications are keyed by stream id and folded in stream order.

mod suites;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{mean_width, QuadratureScheme, SphericalQuadrature};
use crate::geom::{ConvexBody, Window};
use crate::kcell::kcell_from_sample;
use crate::parallel::replicate;
use crate::sampler::{HyperplaneSampler, RngStream};
use crate::stats::{mean_stderr, ols};

pub use suites::{
    concavity_suite, equivalence_suite, lowerbound_suite, tail_suite, ConcavityReport, Construction,
    EquivalenceReport, LowerBoundReport, LowerBoundRow, PairTest, TailReport,
};

/// Campaigns abort above this truncation frequency.
pub const MAX_TRUNCATION_FREQUENCY: f64 = 0.05;

/// Seeds, workers, and optional overrides shared by every experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct RunPolicy {
    pub master_seed: u64,
    pub workers: usize,
    pub window: Option<Window>,
    pub quadrature: Option<QuadratureScheme>,
}

impl RunPolicy {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, workers: 1, window: None, quadrature: None }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn window_for(&self, body: &ConvexBody) -> Result<Window> {
        match self.window {
            Some(w) => Ok(w),
            None => Window::for_body(body),
        }
    }

    pub fn quadrature_for(&self, dim: usize) -> SphericalQuadrature {
        match self.quadrature {
            Some(s) => SphericalQuadrature::new(dim, s),
            None => SphericalQuadrature::default_for(dim),
        }
    }

    pub fn stream(&self, id: u64) -> RngStream {
        RngStream::new(self.master_seed, id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub n: f64,
    pub reps: u64,
    pub mean_gap: f64,
    pub stderr: f64,
    pub truncation_count: u64,
    /// Seconds; excluded from serialized output so reruns compare equal.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_ci_95: (f64, f64),
    pub n_grid: Vec<f64>,
    pub residuals: Vec<f64>,
}

/// `E W(Z_K) - W(K)` at one intensity.
pub fn estimate_gap(k: &ConvexBody, n: f64, reps: u64, policy: &RunPolicy) -> Result<GapEstimate> {
    Ok(estimate_gap_grid(k, &[n], reps, policy)?.remove(0))
}

/// Gap estimates along an intensity grid. Each replication samples once at
/// the largest intensity and thins that sample down to every grid point, so
/// the estimates are positively correlated across n.
pub fn estimate_gap_grid(k: &ConvexBody, grid: &[f64], reps: u64, policy: &RunPolicy) -> Result<Vec<GapEstimate>> {
    if reps < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 replications, got {reps}")));
    }
    check_grid(grid)?;
    let start = Instant::now();
    let k = k.centered();
    let quad = policy.quadrature_for(k.dim());
    let wk = mean_width(&k, &quad)?;
    let sampler = HyperplaneSampler::new(&k, policy.window_for(&k)?)?;
    let n_max = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let per_rep = replicate(reps, policy.workers, |rep| {
        let sample = sampler.sample(n_max, &policy.stream(rep))?;
        grid.iter()
            .map(|&n| {
                let cell = kcell_from_sample(&sample.thinned(n)?)?;
                Ok((cell.mean_width(&quad)? - wk, cell.truncated))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    grid.iter()
        .enumerate()
        .map(|(i, &n)| {
            let gaps: Vec<f64> = per_rep.iter().map(|r| r[i].0).collect();
            let truncation_count = per_rep.iter().filter(|r| r[i].1).count() as u64;
            check_truncation(truncation_count, reps)?;
            let (mean_gap, stderr) = mean_stderr(&gaps);
            Ok(GapEstimate { n, reps, mean_gap, stderr, truncation_count, wall_time: elapsed })
        })
        .collect()
}

pub(crate) fn check_truncation(count: u64, reps: u64) -> Result<()> {
    let frequency = count as f64 / reps as f64;
    if frequency > MAX_TRUNCATION_FREQUENCY {
        return Err(Error::ExcessTruncation { frequency, limit: MAX_TRUNCATION_FREQUENCY });
    }
    Ok(())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::DegenerateGrid("empty intensity grid".into()));
    }
    if let Some(n) = grid.iter().find(|n| !(**n > 0.0) || !n.is_finite()) {
        return Err(Error::DegenerateGrid(format!("intensity {n} is not positive")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateGrid("intensities must be strictly increasing".into()));
    }
    Ok(())
}

/// Least-squares fit of `ln mean_gap` against `ln n`.
pub fn rate_fit(estimates: &[GapEstimate]) -> Result<RateFit> {
    if estimates.len() < 4 {
        return Err(Error::DegenerateGrid(format!("need at least 4 grid points, got {}", estimates.len())));
    }
    let mut ns: Vec<f64> = estimates.iter().map(|e| e.n).collect();
    ns.sort_by(f64::total_cmp);
    if ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateGrid("intensities are not distinct".into()));
    }
    if let Some(e) = estimates.iter().find(|e| !(e.mean_gap > 0.0)) {
        return Err(Error::DegenerateGrid(format!("nonpositive mean gap at n = {}", e.n)));
    }
    let x: Vec<f64> = estimates.iter().map(|e| e.n.ln()).collect();
    let y: Vec<f64> = estimates.iter().map(|e| e.mean_gap.ln()).collect();
    let fit = ols(&x, &y)?;
    Ok(RateFit {
        slope: fit.slope,
        intercept: fit.intercept,
        slope_ci_95: fit.slope_ci_95,
        n_grid: estimates.iter().map(|e| e.n).collect(),
        residuals: fit.residuals,
    })
}

/// Geometric grid `base^lo, ..., base^hi`.
pub fn geometric_grid(base: f64, lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|k| base.powi(k)).collect()
}
