use serde::{Deserialize, Serialize};

use super::{check_truncation, estimate_gap_grid, GapEstimate, RunPolicy};
use crate::error::{Error, Result};
use crate::functionals::{kt_width_gain_by_rejection, mean_width, WidthGainField};
use crate::geom::{hausdorff_distance_exact_2d, hausdorff_distance_polygons, ConvexBody, Window, GEOM_TOL};
use crate::kcell::{build_from_marks, build_polar_cell, kcell_from_sample, KCell};
use crate::parallel::replicate;
use crate::sampler::{sample_marks, HyperplaneSampler, RngStream};
use crate::stats::{ks_two_sample, mean_stderr, ols};

/// Violation tolerance of the per-sample concavity inequality.
pub const CONCAVITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    HyperplaneProcess,
    MarkCoupling,
    PolarPoints,
    /// Polar points with a deliberately wrong inner radius.
    MismatchedPolar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTest {
    pub a: Construction,
    pub b: Construction,
    pub statistic: f64,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionSummary {
    pub construction: Construction,
    pub mean_width: f64,
    pub stderr: f64,
    pub mean_circumradius: f64,
    pub truncation_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub dim: usize,
    pub n: f64,
    pub r: f64,
    pub reps: u64,
    pub constructions: Vec<ConstructionSummary>,
    pub ks_mean_width: Vec<PairTest>,
    pub ks_circumradius: Vec<PairTest>,
    /// Largest `|mean_a - mean_b| / sqrt(se_a^2 + se_b^2)` over the pairs.
    pub max_mean_z: f64,
    pub control: Option<PairTest>,
}

/// Builds `Z_{B^d}` three ways per replication: from the hyperplane process
/// in the ball window of radius `1/r`, from marks with `t_max = 2/r`, and as
/// the polar of the `κ_0` points in `B^d \ B_r`. Every construction draws
/// from its own stream. With `control_r`, a fourth polar construction uses
/// that inner radius instead and is tested against the hyperplane process.
pub fn equivalence_suite(
    dim: usize,
    n: f64,
    r: f64,
    reps: u64,
    control_r: Option<f64>,
    policy: &RunPolicy,
) -> Result<EquivalenceReport> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter(format!("inner radius must lie in (0,1), got {r}")));
    }
    let ball = ConvexBody::unit_ball(dim);
    let quad = policy.quadrature_for(dim);
    let window = Window::Ball { radius: 1.0 / r };
    let sampler = HyperplaneSampler::new(&ball, window)?;
    let lanes: u64 = 4;
    let measure = |cell: &KCell| -> Result<(f64, f64, bool)> {
        Ok((cell.mean_width(&quad)?, cell.circumradius(), cell.truncated))
    };
    let rows = replicate(reps, policy.workers, |rep| {
        let stream = |lane: u64| policy.stream(rep * lanes + lane);
        let a = kcell_from_sample(&sampler.sample(n, &stream(0))?)?;
        let marks = sample_marks(dim, n, 2.0 / r, &stream(1))?;
        let b = build_from_marks(&marks, &ball)?;
        let c = build_polar_cell(dim, n, r, &stream(2))?;
        let mut out = vec![measure(&a)?, measure(&b)?, measure(&c)?];
        if let Some(rc) = control_r {
            out.push(measure(&build_polar_cell(dim, n, rc, &stream(3))?)?);
        }
        Ok(out)
    })?;
    let mut kinds = vec![Construction::HyperplaneProcess, Construction::MarkCoupling, Construction::PolarPoints];
    if control_r.is_some() {
        kinds.push(Construction::MismatchedPolar);
    }
    let column = |i: usize, f: fn(&(f64, f64, bool)) -> f64| rows.iter().map(|r| f(&r[i])).collect::<Vec<f64>>();
    let widths: Vec<Vec<f64>> = (0..kinds.len()).map(|i| column(i, |m| m.0)).collect();
    let radii: Vec<Vec<f64>> = (0..kinds.len()).map(|i| column(i, |m| m.1)).collect();
    let mut constructions = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        let (mean, se) = mean_stderr(&widths[i]);
        let truncation_count = rows.iter().filter(|r| r[i].2).count() as u64;
        if *kind != Construction::MismatchedPolar {
            check_truncation(truncation_count, reps)?;
        }
        constructions.push(ConstructionSummary {
            construction: *kind,
            mean_width: mean,
            stderr: se,
            mean_circumradius: mean_stderr(&radii[i]).0,
            truncation_count,
        });
    }
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let test = |data: &[Vec<f64>], i: usize, j: usize| {
        let ks = ks_two_sample(&data[i], &data[j]);
        PairTest { a: kinds[i], b: kinds[j], statistic: ks.statistic, p_value: ks.p_value }
    };
    let max_mean_z = pairs
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (&constructions[i], &constructions[j]);
            (a.mean_width - b.mean_width).abs() / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
        })
        .fold(0.0, f64::max);
    Ok(EquivalenceReport {
        dim,
        n,
        r,
        reps,
        ks_mean_width: pairs.iter().map(|&(i, j)| test(&widths, i, j)).collect(),
        ks_circumradius: pairs.iter().map(|&(i, j)| test(&radii, i, j)).collect(),
        max_mean_z,
        control: control_r.map(|_| test(&widths, 0, 3)),
        constructions,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub alphas: Vec<f64>,
    pub reps: u64,
    pub n: f64,
    /// Violations of `W(P(η,M_α)) >= (1-α) W(P(η,K)) + α W(P(η,L))` per α.
    pub violations: Vec<u64>,
    /// Smallest `W(P(η,M_α)) - (1-α) W(P(η,K)) - α W(P(η,L))` per α.
    pub min_margin: Vec<f64>,
    /// Mean `W(P(η,M_α)) - W(M_α)` per α, with standard errors.
    pub mean_gap: Vec<f64>,
    pub stderr: Vec<f64>,
    pub truncation_count: Vec<u64>,
    /// Inner radius r with `r B^d ⊆ K, L`, when the contraction check ran.
    pub inner_radius: Option<f64>,
    pub hausdorff_kl: Option<f64>,
    pub contraction_violations: Option<u64>,
    /// Largest `δ(P(η,K), P(η,L)) / ((ρ/r) δ(K,L))` seen.
    pub contraction_max_ratio: Option<f64>,
}

/// Shares one mark set per replication between K, L and every
/// `M_α = (1-α)K + αL`, and checks the mean-width inequality sample by
/// sample. In the plane, with `inner_radius`, also checks the Hausdorff
/// contraction `δ(P(η,K), P(η,L)) <= (ρ/r) δ(K,L)` with ρ the larger
/// circumradius of the two cells.
pub fn concavity_suite(
    k: &ConvexBody,
    l: &ConvexBody,
    alphas: &[f64],
    n: f64,
    reps: u64,
    inner_radius: Option<f64>,
    policy: &RunPolicy,
) -> Result<ConcavityReport> {
    if k.dim() != l.dim() {
        return Err(Error::Dimension { expected: k.dim(), found: l.dim() });
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidParameter(format!("alpha {a} outside [0,1]")));
    }
    let dim = k.dim();
    let quad = policy.quadrature_for(dim);
    let bodies: Vec<ConvexBody> =
        alphas.iter().map(|a| ConvexBody::convex_combination(k, l, *a)).collect::<Result<_>>()?;
    let w_bodies: Vec<f64> = bodies.iter().map(|m| mean_width(m, &quad)).collect::<Result<_>>()?;
    let radius = policy
        .window_for(k)?
        .size()
        .max(policy.window_for(l)?.size());
    let contraction = match inner_radius {
        Some(r) if dim == 2 => Some((r, hausdorff_distance_exact_2d(k, l)?)),
        Some(_) => return Err(Error::InvalidParameter("the contraction check is planar".into())),
        None => None,
    };
    if let Some((r, _)) = contraction {
        for body in [k, l] {
            for u in quad.nodes() {
                if body.support(u)? < r - GEOM_TOL {
                    return Err(Error::InvalidParameter(format!("inner ball of radius {r} is not inside both bodies")));
                }
            }
        }
    }
    let rows = replicate(reps, policy.workers, |rep| {
        let marks = sample_marks(dim, n, 2.0 * radius, &policy.stream(rep))?;
        let pk = build_from_marks(&marks, k)?;
        let pl = build_from_marks(&marks, l)?;
        let (wk, wl) = (pk.mean_width(&quad)?, pl.mean_width(&quad)?);
        let per_alpha = alphas
            .iter()
            .zip(&bodies)
            .map(|(a, m)| {
                let pm = build_from_marks(&marks, m)?;
                let wm = pm.mean_width(&quad)?;
                Ok((wm - (1.0 - a) * wk - a * wl, wm, pm.truncated))
            })
            .collect::<Result<Vec<_>>>()?;
        let ratio = match contraction {
            Some((r, delta)) => {
                let (p, q) = (pk.vertices().expect("planar"), pl.vertices().expect("planar"));
                let rho = pk.circumradius().max(pl.circumradius());
                Some(hausdorff_distance_polygons(p, q) / (rho / r * delta))
            }
            None => None,
        };
        Ok((per_alpha, ratio))
    })?;
    let mut report = ConcavityReport {
        alphas: alphas.to_vec(),
        reps,
        n,
        violations: Vec::new(),
        min_margin: Vec::new(),
        mean_gap: Vec::new(),
        stderr: Vec::new(),
        truncation_count: Vec::new(),
        inner_radius: contraction.map(|c| c.0),
        hausdorff_kl: contraction.map(|c| c.1),
        contraction_violations: None,
        contraction_max_ratio: None,
    };
    for (i, wm_body) in w_bodies.iter().enumerate() {
        let margins: Vec<f64> = rows.iter().map(|r| r.0[i].0).collect();
        let gaps: Vec<f64> = rows.iter().map(|r| r.0[i].1 - wm_body).collect();
        let (mean, se) = mean_stderr(&gaps);
        report.violations.push(margins.iter().filter(|m| **m < -CONCAVITY_TOL).count() as u64);
        report.min_margin.push(margins.iter().copied().fold(f64::INFINITY, f64::min));
        report.mean_gap.push(mean);
        report.stderr.push(se);
        report.truncation_count.push(rows.iter().filter(|r| r.0[i].2).count() as u64);
    }
    if contraction.is_some() {
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
        // Relative slack for rounding in the exact distances.
        report.contraction_violations = Some(ratios.iter().filter(|q| **q > 1.0 + 1e-12).count() as u64);
        report.contraction_max_ratio = Some(ratios.iter().copied().fold(0.0, f64::max));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub ns: Vec<f64>,
    pub x_grid: Vec<f64>,
    /// Scale b in the event `R_o(Z) > b (R_o(K) + x)`.
    pub scale: f64,
    pub reps: u64,
    /// `survival[i][j]`: empirical survival at `ns[i]`, `x_grid[j]`.
    pub survival: Vec<Vec<f64>>,
    pub exceedances: Vec<Vec<u64>>,
    /// Fitted `-d ln S / dx` per n, over grid points with enough exceedances.
    pub decay_rate: Vec<f64>,
    pub fit_points: Vec<usize>,
    /// `decay_rate[last] / decay_rate[0]`.
    pub rate_ratio: f64,
    pub nonincreasing: bool,
    /// Every second difference of `ln S` is at least `-3` noise standard
    /// deviations.
    pub log_convex: bool,
    /// Most negative standardized second difference of `ln S`.
    pub min_convexity_z: f64,
    pub truncation_count: Vec<u64>,
}

/// Empirical survival of `R_o(Z_K)` for several intensities, from one
/// thinned sample per replication, with an exponential decay fit per n.
pub fn tail_suite(
    k: &ConvexBody,
    ns: &[f64],
    x_grid: &[f64],
    reps: u64,
    scale: f64,
    min_exceedances: u64,
    policy: &RunPolicy,
) -> Result<TailReport> {
    let k = k.centered();
    let ro_k = k.circumradius_origin()?;
    let window = policy.window_for(&k)?;
    let sampler = HyperplaneSampler::new(&k, window)?;
    let n_max = ns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(x) = x_grid.iter().find(|x| scale * (ro_k + **x) >= window.size()) {
        return Err(Error::InvalidParameter(format!("x = {x} reaches the window; measurements would be truncated")));
    }
    let rows = replicate(reps, policy.workers, |rep| {
        let sample = sampler.sample(n_max, &policy.stream(rep))?;
        ns.iter()
            .map(|&n| {
                let cell = kcell_from_sample(&sample.thinned(n)?)?;
                Ok((cell.circumradius(), cell.truncated))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut report = TailReport {
        ns: ns.to_vec(),
        x_grid: x_grid.to_vec(),
        scale,
        reps,
        survival: Vec::new(),
        exceedances: Vec::new(),
        decay_rate: Vec::new(),
        fit_points: Vec::new(),
        rate_ratio: f64::NAN,
        nonincreasing: true,
        log_convex: true,
        min_convexity_z: f64::INFINITY,
        truncation_count: Vec::new(),
    };
    for i in 0..ns.len() {
        let counts: Vec<u64> = x_grid
            .iter()
            .map(|x| rows.iter().filter(|r| r[i].0 > scale * (ro_k + x)).count() as u64)
            .collect();
        let surv: Vec<f64> = counts.iter().map(|c| *c as f64 / reps as f64).collect();
        report.nonincreasing &= surv.windows(2).all(|w| w[1] <= w[0]);
        // Points usable on the log scale: enough exceedances, and S < 1.
        let usable: Vec<usize> = (0..x_grid.len()).filter(|&j| counts[j] >= min_exceedances && counts[j] < reps).collect();
        let xs: Vec<f64> = usable.iter().map(|&j| x_grid[j]).collect();
        let ys: Vec<f64> = usable.iter().map(|&j| surv[j].ln()).collect();
        let rate = if xs.len() >= 3 { -ols(&xs, &ys)?.slope } else { f64::NAN };
        for w in usable.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            if b - a != c - b {
                continue;
            }
            let var = |j: usize| (1.0 - surv[j]) / counts[j] as f64;
            let second = surv[a].ln() - 2.0 * surv[b].ln() + surv[c].ln();
            let z = second / (var(a) + 4.0 * var(b) + var(c)).sqrt();
            report.min_convexity_z = report.min_convexity_z.min(z);
        }
        report.survival.push(surv);
        report.exceedances.push(counts);
        report.decay_rate.push(rate);
        report.fit_points.push(xs.len());
        report.truncation_count.push(rows.iter().filter(|r| r[i].1).count() as u64);
    }
    report.log_convex = report.min_convexity_z >= -3.0;
    if let (Some(first), Some(last)) = (report.decay_rate.first(), report.decay_rate.last()) {
        report.rate_ratio = last / first;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub n: f64,
    pub mean_gap: f64,
    pub stderr: f64,
    /// `e^{-1} [W(K[1/n]) - W(K)]` by the quadrature route.
    pub bound: f64,
    /// The same quantity by the rejection-sampling hull oracle.
    pub oracle_bound: Option<f64>,
    pub oracle_relative_error: Option<f64>,
    /// `mean_gap + 3 stderr >= 0.98 * inflate * bound`.
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundReport {
    pub inflate: f64,
    pub rows: Vec<LowerBoundRow>,
    pub estimates: Vec<GapEstimate>,
    /// Every oracle comparison is within 1%.
    pub certified: Option<bool>,
    pub all_hold: bool,
}

/// Relative agreement required between the two `K[t]` evaluations.
pub const CERTIFY_TOL: f64 = 0.01;

/// Compares Monte Carlo gaps with `e^{-1}[W(K[1/n]) - W(K)]` along the
/// grid. `inflate` scales the bound (values above 1 are negative controls);
/// `oracle_samples > 0` certifies `K[t]` against the hull oracle in the plane.
pub fn lowerbound_suite(
    k: &ConvexBody,
    grid: &[f64],
    reps: u64,
    inflate: f64,
    oracle_samples: usize,
    policy: &RunPolicy,
) -> Result<LowerBoundReport> {
    let k = k.centered();
    let estimates = estimate_gap_grid(&k, grid, reps, policy)?;
    let quad = policy.quadrature_for(k.dim());
    let field = WidthGainField::new(&k, &quad)?;
    let e_inv = (-1.0f64).exp();
    let mut rows = Vec::new();
    let mut certified = (k.dim() == 2 && oracle_samples > 0).then_some(true);
    for (i, est) in estimates.iter().enumerate() {
        let t = 1.0 / est.n;
        let bound = e_inv * field.kt_width_gain(t)?;
        let (oracle_bound, oracle_relative_error) = if certified.is_some() {
            let stream = RngStream::new(policy.master_seed ^ 0x6b74_6f72_6163_6c65, i as u64);
            let oracle = e_inv * kt_width_gain_by_rejection(&k, t, oracle_samples, &stream)?;
            let rel = (bound - oracle).abs() / oracle;
            if rel > CERTIFY_TOL {
                certified = Some(false);
            }
            (Some(oracle), Some(rel))
        } else {
            (None, None)
        };
        let holds = est.mean_gap + 3.0 * est.stderr >= (1.0 - 2.0 * CERTIFY_TOL) * inflate * bound;
        rows.push(LowerBoundRow {
            n: est.n,
            mean_gap: est.mean_gap,
            stderr: est.stderr,
            bound,
            oracle_bound,
            oracle_relative_error,
            holds,
        });
    }
    let all_hold = rows.iter().all(|r| r.holds);
    Ok(LowerBoundReport { inflate, rows, estimates, certified, all_hold })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concavity_equality_cases() {
        let b = ConvexBody::unit_ball(2);
        let r = concavity_suite(&b, &b, &[0.0, 0.5, 1.0], 8.0, 20, None, &RunPolicy::new(1)).unwrap();
        assert!(r.violations.iter().all(|v| *v == 0));
        for m in &r.min_margin {
            assert!(m.abs() < 1e-12, "{m}");
        }
        let sq = ConvexBody::cube(2, 0.5);
        let r = concavity_suite(&b, &sq, &[0.0, 1.0], 8.0, 20, None, &RunPolicy::new(2)).unwrap();
        for m in &r.min_margin {
            assert!(m.abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn concavity_small_run() {
        let b = ConvexBody::unit_ball(2);
        let sq = ConvexBody::cube(2, 0.5);
        let r = concavity_suite(&b, &sq, &[0.5], 16.0, 50, Some(0.5), &RunPolicy::new(3)).unwrap();
        assert_eq!(r.violations, vec![0]);
        assert_eq!(r.contraction_violations, Some(0));
        assert_eq!(r.hausdorff_kl, Some(0.5));
    }

    #[test]
    fn equivalence_small_run() {
        let r = equivalence_suite(2, 50.0, 0.25, 400, Some(0.9), &RunPolicy::new(4)).unwrap();
        assert_eq!(r.constructions.len(), 4);
        assert!(r.control.unwrap().p_value < 1e-3);
        assert!(r.ks_mean_width.iter().all(|t| t.p_value > 1e-4), "{:?}", r.ks_mean_width);
    }

    #[test]
    fn lowerbound_negative_control() {
        let b = ConvexBody::unit_ball(2);
        let ok = lowerbound_suite(&b, &[16.0], 200, 1.0, 0, &RunPolicy::new(5)).unwrap();
        assert!(ok.all_hold);
        let bad = lowerbound_suite(&b, &[16.0], 200, 10.0, 0, &RunPolicy::new(5)).unwrap();
        assert!(!bad.all_hold);
    }

    #[test]
    fn tail_survival_is_monotone() {
        let b = ConvexBody::unit_ball(2);
        let r = tail_suite(&b, &[16.0, 32.0], &[0.0, 0.1, 0.2, 0.3], 300, 1.0, 5, &RunPolicy::new(6)).unwrap();
        assert!(r.nonincreasing);
        assert!(r.survival.iter().all(|s| s[0] <= 1.0));
        assert!(tail_suite(&b, &[16.0], &[5.0], 10, 1.0, 5, &RunPolicy::new(6)).is_err());
    }
}
