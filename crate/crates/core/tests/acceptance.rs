//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned here.
//! Campaign configs are shared with the CLI under `campaigns/`.
//!
//! Failing criteria are reported, not hidden; set `KCELL_ACCEPTANCE_STRICT=1`
//! to turn any FAIL into a nonzero exit.

use std::path::PathBuf;
use std::time::Instant;

use kcell::campaign::{run_campaign, CampaignConfig, CampaignOutcome, Report};
use kcell::functionals::{mean_width, separating_measure, separating_measure_mc, QuadratureScheme, SphericalQuadrature};
use kcell::geom::{ConvexBody, Vector, Window};
use kcell::parallel::parallel_enabled;
use kcell::sampler::{pushforward_delta, sample_hyperplanes, RngStream};
use kcell::stats::mean_stderr;

struct Line {
    id: String,
    passed: bool,
    detail: String,
}

fn campaign(name: &str) -> CampaignConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../campaigns").join(format!("{name}.json"));
    CampaignConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn run(name: &str) -> (CampaignOutcome, f64) {
    let start = Instant::now();
    let out = run_campaign(&campaign(name), 1).unwrap_or_else(|e| panic!("{name}: {e}"));
    (out, start.elapsed().as_secs_f64())
}

fn criterion_1() -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2usize, 3] {
        let w = mean_width(&ConvexBody::unit_ball(d), &SphericalQuadrature::default_for(d)).unwrap();
        ok &= (w - 2.0).abs() <= 4.0 * f64::EPSILON;
        parts.push(format!("W(B^{d}) = {w}"));
    }
    let sq = ConvexBody::cube(2, 0.5);
    let w = mean_width(&sq, &SphericalQuadrature::new(2, QuadratureScheme::Exact2D)).unwrap();
    let err = (w - 4.0 / std::f64::consts::PI).abs();
    ok &= err < 1e-9;
    parts.push(format!("W(square) - 4/pi = {err:.1e} (< 1e-9)"));
    Line { id: "1".into(), passed: ok, detail: parts.join("; ") }
}

fn criterion_2() -> Line {
    let start = Instant::now();
    let b = ConvexBody::unit_ball(2);
    let b2 = ConvexBody::ball(Vector::zeros(2), 2.0).unwrap();
    let quad = SphericalQuadrature::default_for(2);
    let exact = separating_measure(&b, &b2, &quad).unwrap();
    let mut ok = exact == 2.0;
    let window = Window::Ball { radius: 3.0 };
    let (mc, se) = separating_measure_mc(&b, &b2, &window, 10_000, &RngStream::new(2021, 0)).unwrap();
    let z_mc = (mc - 2.0) / se;
    ok &= z_mc.abs() <= 3.0;
    // κ_0(B² \ B_{1/2}) from the radial density 2ρ^{-2}, by Simpson's rule.
    let (r, steps) = (0.5f64, 1000);
    let h = (1.0 - r) / steps as f64;
    let f = |rho: f64| 2.0 / (rho * rho);
    let radial = h / 3.0
        * (0..=steps)
            .map(|i| {
                let c = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                c * f(r + i as f64 * h)
            })
            .sum::<f64>();
    ok &= (radial - 2.0).abs() < 1e-9;
    // Δ-images of the hyperplanes meeting the window of radius 1/r, at n = 1.
    let reps = 10_000u64;
    let counts: Vec<f64> = (0..reps)
        .map(|i| {
            let s = sample_hyperplanes(&b, Window::Ball { radius: 1.0 / r }, 1.0, &RngStream::new(2022, i)).unwrap();
            s.hyperplanes()
                .iter()
                .filter(|hp| {
                    let p = pushforward_delta(hp).unwrap();
                    p.norm() >= r && p.norm() < 1.0
                })
                .count() as f64
        })
        .collect();
    let (mean, se_push) = mean_stderr(&counts);
    let z_push = (mean - 2.0) / se_push;
    ok &= z_push.abs() <= 3.0;
    let secs = start.elapsed().as_secs_f64();
    ok &= secs < 60.0;
    Line {
        id: "2".into(),
        passed: ok,
        detail: format!(
            "separating measure {exact}; MC {mc:.4} ± {se:.4} (z = {z_mc:.2}); radial κ0 = {radial:.12}; \
             Δ-mapped mean {mean:.4} ± {se_push:.4} (z = {z_push:.2}); {secs:.1} s (< 60 s)"
        ),
    }
}

fn criterion_3(out: &CampaignOutcome, secs: f64) -> Line {
    let Report::Equiv(r) = &out.report else { unreachable!() };
    let min_p = r.ks_mean_width.iter().map(|t| t.p_value).fold(1.0, f64::min);
    let ro_p: Vec<String> = r.ks_circumradius.iter().map(|t| format!("{:.3}", t.p_value)).collect();
    let control = r.control.as_ref().map(|c| c.p_value).unwrap_or(f64::NAN);
    let ok = min_p > 0.01 && r.max_mean_z <= 3.0 && control < 1e-3 && secs < 300.0;
    Line {
        id: "3".into(),
        passed: ok,
        detail: format!(
            "min KS p on W {min_p:.4} (> 0.01); max mean z {:.3} (<= 3); KS p on R_o [{}]; \
             mismatched control p {control:.2e} (< 1e-3); {secs:.1} s (< 300 s)",
            r.max_mean_z,
            ro_p.join(", ")
        ),
    }
}

fn criteria_4_5(out: &CampaignOutcome) -> (Line, Line) {
    let Report::Concavity(r) = &out.report else { unreachable!() };
    let total: u64 = r.violations.iter().sum();
    let margin = r.min_margin.iter().copied().fold(f64::INFINITY, f64::min);
    let four = Line {
        id: "4".into(),
        passed: total == 0 && r.reps >= 1000,
        detail: format!("{total} violations beyond 1e-9 over {} samples and α = {:?}; smallest margin {margin:.2e}", r.reps, r.alphas),
    };
    let v = r.contraction_violations.unwrap_or(u64::MAX);
    let five = Line {
        id: "5".into(),
        passed: v == 0 && r.reps >= 1000,
        detail: format!(
            "{v} violations over {} samples; r = {:?}, δ(K,L) = {:?}; largest δ(P_K,P_L) / ((ρ/r) δ(K,L)) = {:.4}",
            r.reps,
            r.inner_radius.unwrap_or(f64::NAN),
            r.hausdorff_kl.unwrap_or(f64::NAN),
            r.contraction_max_ratio.unwrap_or(f64::NAN)
        ),
    };
    (four, five)
}

fn slope(out: &CampaignOutcome) -> (f64, (f64, f64)) {
    let Report::Gap { fit: Some(f), .. } = &out.report else { unreachable!() };
    (f.slope, f.slope_ci_95)
}

fn criterion_6(ball: &CampaignOutcome, secs: f64, ball3: &CampaignOutcome) -> Line {
    let (s2, ci2) = slope(ball);
    let (s3, ci3) = slope(ball3);
    let ok2 = (s2 + 2.0 / 3.0).abs() <= 0.1 && secs < 1800.0;
    let ok3 = (s3 + 0.5).abs() <= 0.15;
    Line {
        id: "6".into(),
        passed: ok2 && ok3,
        detail: format!(
            "d=2 slope {s2:.4} (95% CI [{:.4}, {:.4}]) vs -2/3 ± 0.1 in {secs:.0} s (< 1800 s); \
             d=3 smoke slope {s3:.4} (CI [{:.4}, {:.4}]) vs -1/2 ± 0.15",
            ci2.0, ci2.1, ci3.0, ci3.1
        ),
    }
}

fn criterion_7(square: &CampaignOutcome) -> Line {
    let (s, ci) = slope(square);
    let Report::Gap { estimates, .. } = &square.report else { unreachable!() };
    let norm: Vec<f64> = estimates.iter().map(|e| e.mean_gap * e.n / e.n.ln()).collect();
    let spread = norm.iter().copied().fold(f64::NEG_INFINITY, f64::max) / norm.iter().copied().fold(f64::INFINITY, f64::min);
    Line {
        id: "7".into(),
        passed: (-1.15..=-0.8).contains(&s) && spread < 3.0,
        detail: format!(
            "slope {s:.4} (95% CI [{:.4}, {:.4}]) vs [-1.15, -0.8]; mean_gap·n/ln n spread {spread:.3} (< 3)",
            ci.0, ci.1
        ),
    }
}

fn criterion_8(outs: &[&CampaignOutcome]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for out in outs {
        let Report::Lowerbound(r) = &out.report else { unreachable!() };
        let worst = r.rows.iter().filter_map(|row| row.oracle_relative_error).fold(0.0, f64::max);
        let certified = r.certified == Some(true) && worst <= 0.01;
        let holds = r.rows.iter().all(|row| row.mean_gap + 3.0 * row.stderr >= 0.98 * row.bound);
        ok &= certified && holds;
        let rows: Vec<String> = r
            .rows
            .iter()
            .map(|row| format!("n={}: {:.5} vs {:.5}", row.n, row.mean_gap + 3.0 * row.stderr, 0.98 * row.bound))
            .collect();
        parts.push(format!("{}: [{}], oracle agreement {worst:.1e} (<= 1e-2)", out.config.campaign_id, rows.join(", ")));
    }
    Line { id: "8".into(), passed: ok, detail: parts.join("; ") }
}

fn criterion_9(tail: &CampaignOutcome) -> Line {
    let Report::Tail(r) = &tail.report else { unreachable!() };
    let ratio_ok = (1.33..=3.0).contains(&r.rate_ratio);
    Line {
        id: "9".into(),
        passed: r.nonincreasing && r.log_convex && ratio_ok,
        detail: format!(
            "decreasing: {}; log-convex: {} (smallest standardized second difference {:.2}, need >= -3); \
             decay rates {:?} (fit points {:?}), ratio {:.4} in [1.33, 3]: {ratio_ok}",
            r.nonincreasing, r.log_convex, r.min_convexity_z, r.decay_rate, r.fit_points, r.rate_ratio
        ),
    }
}

fn criterion_10(names: &[&str], baseline: &[String]) -> Line {
    let mut mismatched = Vec::new();
    for (name, csv) in names.iter().zip(baseline) {
        let config = campaign(name);
        for workers in [4usize, 8] {
            let again = run_campaign(&config, workers).unwrap_or_else(|e| panic!("{name}: {e}")).to_csv();
            if &again != csv {
                mismatched.push(format!("{name} with {workers} workers"));
            }
        }
    }
    Line {
        id: "10".into(),
        passed: mismatched.is_empty(),
        detail: format!(
            "{} campaigns re-run with 4 and 8 workers (rayon {}); mismatches: {}",
            names.len(),
            if parallel_enabled() { "on" } else { "off" },
            if mismatched.is_empty() { "none".to_string() } else { mismatched.join(", ") }
        ),
    }
}

fn main() {
    let mut lines = vec![criterion_1(), criterion_2()];
    let names = [
        "equiv",
        "concavity",
        "rate-ball-2d",
        "rate-ball-3d",
        "rate-square-2d",
        "lowerbound-ball",
        "lowerbound-square",
        "tail-ball",
    ];
    let runs: Vec<(CampaignOutcome, f64)> = names.iter().map(|n| run(n)).collect();
    let by = |name: &str| &runs[names.iter().position(|n| *n == name).expect("known campaign")];
    lines.push(criterion_3(&by("equiv").0, by("equiv").1));
    let (four, five) = criteria_4_5(&by("concavity").0);
    lines.push(four);
    lines.push(five);
    lines.push(criterion_6(&by("rate-ball-2d").0, by("rate-ball-2d").1, &by("rate-ball-3d").0));
    lines.push(criterion_7(&by("rate-square-2d").0));
    lines.push(criterion_8(&[&by("lowerbound-ball").0, &by("lowerbound-square").0]));
    lines.push(criterion_9(&by("tail-ball").0));
    let baseline: Vec<String> = runs.iter().map(|(o, _)| o.to_csv()).collect();
    lines.push(criterion_10(&names, &baseline));

    // Truncation audit over every campaign (limit 1e-3).
    let bad: Vec<&str> = runs
        .iter()
        .filter(|(o, _)| o.checks.iter().any(|c| c.name == "truncation" && !c.passed))
        .map(|(o, _)| o.config.campaign_id.as_str())
        .collect();
    let audit = Line {
        id: "truncation audit".into(),
        passed: bad.is_empty(),
        detail: if bad.is_empty() { "below 1e-3 in every campaign".into() } else { format!("exceeded in {}", bad.join(", ")) },
    };

    for l in lines.iter().chain(std::iter::once(&audit)) {
        let label = if l.id.chars().all(|c| c.is_ascii_digit()) { format!("criterion {}", l.id) } else { l.id.clone() };
        println!("{label}: {} | {}", if l.passed { "PASS" } else { "FAIL" }, l.detail);
    }
    let passed = lines.iter().filter(|l| l.passed).count();
    println!("acceptance: {passed}/{} criteria pass", lines.len());
    let strict = std::env::var("KCELL_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && (passed < lines.len() || !audit.passed) {
        std::process::exit(1);
    }
}
