//! Two-sample Kolmogorov–Smirnov test, Poisson goodness of fit, and
//! least-squares lines with t-based confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, Poisson, StudentsT};

use crate::error::{Error, Result};

/// Exact p-values are used while both samples are smaller than this.
pub const KS_EXACT_LIMIT: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Two-sided two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let (m, n) = (a.len(), b.len());
    assert!(m > 0 && n > 0, "KS test needs two nonempty samples");
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    // Largest |i n - j m| over the merged order, as an integer.
    let (mut i, mut j) = (0usize, 0usize);
    let mut gap: i128 = 0;
    while i < m || j < n {
        let v = if j == n || (i < m && x[i] <= y[j]) { x[i] } else { y[j] };
        while i < m && x[i] == v {
            i += 1;
        }
        while j < n && y[j] == v {
            j += 1;
        }
        gap = gap.max((i as i128 * n as i128 - j as i128 * m as i128).abs());
    }
    let statistic = gap as f64 / (m as f64 * n as f64);
    if m.max(n) < KS_EXACT_LIMIT {
        KsResult { statistic, p_value: ks_exact_p(m, n, gap), exact: true }
    } else {
        let en = (m as f64 * n as f64 / (m + n) as f64).sqrt();
        let lambda = (en + 0.12 + 0.11 / en) * statistic;
        KsResult { statistic, p_value: kolmogorov_q(lambda), exact: false }
    }
}

/// `P(D >= gap/(mn))` under the null, by counting monotone lattice paths
/// that keep `|i n - j m| < gap`. Path counts are carried normalized by the
/// binomial coefficient so nothing overflows.
fn ks_exact_p(m: usize, n: usize, gap: i128) -> f64 {
    if gap == 0 {
        return 1.0;
    }
    let inside = |i: usize, j: usize| (i as i128 * n as i128 - j as i128 * m as i128).abs() < gap;
    let mut row = vec![0.0f64; n + 1];
    row[0] = 1.0;
    for j in 1..=n {
        row[j] = if inside(0, j) { row[j - 1] } else { 0.0 };
    }
    for i in 1..=m {
        row[0] = if inside(i, 0) { row[0] } else { 0.0 };
        for j in 1..=n {
            row[j] = if inside(i, j) {
                let s = (i + j) as f64;
                row[j] * i as f64 / s + row[j - 1] * j as f64 / s
            } else {
                0.0
            };
        }
    }
    (1.0 - row[n]).clamp(0.0, 1.0)
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{k-1} e^{-2k²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Chi-square goodness-of-fit p-value of integer counts against
/// `Poisson(mean)`. Cells are merged from both tails until every expected
/// count reaches 5.
pub fn poisson_chi_square_p(counts: &[u64], mean: f64) -> f64 {
    let total = counts.len() as f64;
    let law = Poisson::new(mean).expect("positive mean");
    let max = *counts.iter().max().unwrap_or(&0) as usize;
    let upper = max.max((mean + 10.0 * mean.sqrt() + 10.0) as usize);
    let mut observed = vec![0.0f64; upper + 1];
    for c in counts {
        observed[*c as usize] += 1.0;
    }
    // Cells: [0..=k] merged left tail, single values, merged right tail.
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    let mut k = 0usize;
    while k <= upper {
        obs += observed[k];
        exp += total * law.pmf(k as u64);
        if exp >= 5.0 {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
        k += 1;
    }
    // Whatever mass remains, including beyond `upper`, joins the last cell.
    let tail = total - cells.iter().map(|c| c.1).sum::<f64>();
    if let Some(last) = cells.last_mut() {
        last.0 += obs;
        last.1 += tail;
    }
    if cells.len() < 2 {
        return 1.0;
    }
    let stat: f64 = cells.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = (cells.len() - 1) as f64;
    1.0 - ChiSquared::new(df).expect("df > 0").cdf(stat)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub slope_ci_95: (f64, f64),
    pub residuals: Vec<f64>,
}

/// Ordinary least squares `y = a + b x` with a 95% t-interval for b.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return Err(Error::DegenerateGrid(format!("need at least 3 paired points, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateGrid("abscissae are not distinct".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let ssr: f64 = residuals.iter().map(|r| r * r).sum();
    let slope_stderr = (ssr / (n - 2) as f64 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, (n - 2) as f64).expect("df > 0").inverse_cdf(0.975);
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr,
        slope_ci_95: (slope - t * slope_stderr, slope + t * slope_stderr),
        residuals,
    })
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_exact_small_cases() {
        // m = n = 2, fully separated: D = 1, P(D >= 1) = 2/C(4,2) = 1/3.
        let r = ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(r.statistic, 1.0);
        assert!((r.p_value - 1.0 / 3.0).abs() < 1e-12);
        // m = n = 3 separated: 2/20.
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert!((r.p_value - 0.1).abs() < 1e-12);
        // Identical samples.
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).p_value, 1.0);
    }

    #[test]
    fn ks_exact_matches_brute_force() {
        // Enumerate all C(8,4) splits of 8 ranks to get the null law of D.
        let a = [0.1, 0.5, 0.7, 0.9];
        let b = [0.2, 0.3, 0.4, 0.8];
        let obs = ks_two_sample(&a, &b);
        let mut extreme = 0;
        let mut total = 0;
        for mask in 0u32..256 {
            if mask.count_ones() != 4 {
                continue;
            }
            let xs: Vec<f64> = (0..8).filter(|k| mask >> k & 1 == 1).map(|k| k as f64).collect();
            let ys: Vec<f64> = (0..8).filter(|k| mask >> k & 1 == 0).map(|k| k as f64).collect();
            total += 1;
            if ks_two_sample(&xs, &ys).statistic >= obs.statistic - 1e-12 {
                extreme += 1;
            }
        }
        assert!((obs.p_value - extreme as f64 / total as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_asymptotic_against_reference() {
        // Q(1.0) = 0.26999967...
        assert!((kolmogorov_q(1.0) - 0.269_999_671_677_2).abs() < 1e-10);
        let a: Vec<f64> = (0..1500).map(|k| k as f64 / 1500.0).collect();
        let b: Vec<f64> = (0..1500).map(|k| (k as f64 + 0.5) / 1500.0).collect();
        let r = ks_two_sample(&a, &b);
        assert!(!r.exact && r.p_value > 0.99);
        let shifted: Vec<f64> = b.iter().map(|v| v + 0.2).collect();
        assert!(ks_two_sample(&a, &shifted).p_value < 1e-10);
    }

    #[test]
    fn chi_square_accepts_and_rejects() {
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let law = rand_distr::Poisson::new(20.0).unwrap();
        let counts: Vec<u64> = (0..5000).map(|_| law.sample(&mut rng) as u64).collect();
        assert!(poisson_chi_square_p(&counts, 20.0) > 0.01);
        assert!(poisson_chi_square_p(&counts, 21.0) < 1e-6);
    }

    #[test]
    fn ols_exact_line_and_interval() {
        let x: Vec<f64> = (4..=10).map(|k| (2f64.powi(k)).ln()).collect();
        let y: Vec<f64> = x.iter().map(|v| -2.0 / 3.0 * v + 0.3).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope + 2.0 / 3.0).abs() < 1e-12);
        assert!((f.intercept - 0.3).abs() < 1e-12);
        assert!(f.slope_stderr < 1e-12);
        // Textbook case: x = 1..5, y = (2,4,5,4,5): b = 0.6, se = 0.3464.
        let f = ols(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 4.0, 5.0, 4.0, 5.0]).unwrap();
        assert!((f.slope - 0.6).abs() < 1e-12);
        assert!((f.slope_stderr - 0.282_842_712_474_619).abs() < 1e-12);
        let t = 3.182_446_305_284_263;
        assert!((f.slope_ci_95.1 - (0.6 + t * f.slope_stderr)).abs() < 1e-9);
        assert!(matches!(ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::DegenerateGrid(_))));
    }
}
