//! Campaign configs, execution, and the CSV and JSON artifacts.
//!
//! CSV columns are fixed: `campaign_id, experiment, d, body, n, reps,
//! mean_gap, stderr, trunc_count, seed`. Intensities are written in
//! shortest round-trip form, `mean_gap` and `stderr` with 17 significant
//! digits. Some experiments use the estimate columns for a related quantity:
//!
//! | experiment                | one row per      | `mean_gap` holds                     |
//! |---------------------------|------------------|--------------------------------------|
//! | `gap`, `rate`, `lowerbound` | n              | `E W(Z_K) - W(K)`                    |
//! | `equiv/<construction>`    | construction     | `E W(Z) - W(B^d)`                    |
//! | `concavity/alpha=<a>`     | α                | `E W(P(η,M_α)) - W(M_α)`             |
//! | `tail/x=<x>`              | (n, x)           | `P(R_o(Z_K) > b (R_o(K) + x))`       |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::experiments::{
    concavity_suite, equivalence_suite, estimate_gap_grid, lowerbound_suite, rate_fit, tail_suite, ConcavityReport,
    EquivalenceReport, GapEstimate, LowerBoundReport, RateFit, RunPolicy, TailReport,
};
use crate::functionals::QuadratureScheme;
use crate::geom::{diagnose_body, BodySpec, ConvexBody, Window};
use crate::plot;

pub const CSV_HEADER: [&str; 10] =
    ["campaign_id", "experiment", "d", "body", "n", "reps", "mean_gap", "stderr", "trunc_count", "seed"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Gap,
    Rate,
    Equiv,
    Concavity,
    Tail,
    Lowerbound,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gap => "gap",
            Self::Rate => "rate",
            Self::Equiv => "equiv",
            Self::Concavity => "concavity",
            Self::Tail => "tail",
            Self::Lowerbound => "lowerbound",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Defaults to `<campaign_id>.csv`; relative paths resolve against the
    /// output directory.
    pub csv: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    #[serde(default = "yes")]
    pub svg: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self { csv: None, summary: None, plot: None, svg: true }
    }
}

/// Experiment-specific parameters. Unused ones are rejected by validation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// L in the concavity suite.
    pub second_body: Option<BodySpec>,
    pub alphas: Option<Vec<f64>>,
    /// Equivalence: r with window radius 1/r. Concavity: r with
    /// `r B^d ⊆ K, L`, enabling the contraction check.
    pub inner_radius: Option<f64>,
    /// Equivalence: inner radius of the mismatched polar control.
    pub control_inner_radius: Option<f64>,
    pub x_grid: Option<Vec<f64>>,
    /// Tail scale b.
    pub scale: Option<f64>,
    pub min_exceedances: Option<u64>,
    /// Lower bound multiplier; above 1 for negative controls.
    pub inflate: Option<f64>,
    pub oracle_samples: Option<usize>,
}

/// Thresholds used in `--check` mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub max_truncation_frequency: f64,
    pub slope_range: Option<[f64; 2]>,
    /// Upper limit of `max/min` of `mean_gap · n / ln n` over the grid.
    pub max_spread_n_over_log_n: Option<f64>,
    pub min_p_value: f64,
    pub max_mean_z: f64,
    pub control_max_p_value: f64,
    pub decay_ratio_range: Option<[f64; 2]>,
    pub require_log_convex: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            max_truncation_frequency: 1e-3,
            slope_range: None,
            max_spread_n_over_log_n: None,
            min_p_value: 0.01,
            max_mean_z: 3.0,
            control_max_p_value: 1e-3,
            decay_ratio_range: None,
            require_log_convex: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub campaign_id: String,
    pub experiment: Experiment,
    /// Required except for `equiv`, which always uses the unit ball.
    #[serde(default)]
    pub body: Option<BodySpec>,
    pub dimension: usize,
    pub n_grid: Vec<f64>,
    pub reps: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub window: Option<Window>,
    #[serde(default)]
    pub quadrature: Option<QuadratureScheme>,
    #[serde(default)]
    pub output: OutputPaths,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub checks: Checks,
}

/// One violated config field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Issue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CampaignError {
    #[error("invalid campaign config\n{}", list(.0))]
    Config(Vec<Issue>),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Csv(String),
}

fn list(issues: &[Issue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

/// Bodies are tagged enums, whose errors stop at the body itself; descend
/// into the body value to name the field.
fn refine_body_error(text: &str, path: String, message: String) -> Issue {
    let pointer = match path.as_str() {
        "body" => "/body",
        "params.second_body" => "/params/second_body",
        _ => return issue(path, message),
    };
    let value: Option<serde_json::Value> = serde_json::from_str(text).ok();
    match value.as_ref().and_then(|v| v.pointer(pointer)).and_then(diagnose_body) {
        Some((inner, msg)) => issue(format!("{path}.{inner}"), msg),
        None => issue(path, message),
    }
}

fn issue(path: impl Into<String>, message: impl Into<String>) -> Issue {
    Issue { path: path.into(), message: message.into() }
}

impl CampaignConfig {
    /// Parses and validates a config, reporting the field path of a type
    /// error, or every violated field.
    pub fn from_json(text: &str) -> Result<Self, CampaignError> {
        let mut de = serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let path = e.path().to_string();
            let path = if path == "." { "(root)".to_string() } else { path };
            CampaignError::Config(vec![refine_body_error(text, path, e.into_inner().to_string())])
        })?;
        let issues = config.validate();
        if issues.is_empty() {
            Ok(config)
        } else {
            Err(CampaignError::Config(issues))
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, CampaignError> {
        let text = fs::read_to_string(path).map_err(|source| CampaignError::Io { path: path.into(), source })?;
        Self::from_json(&text)
    }

    /// Every violated constraint, in field order.
    pub fn validate(&self) -> Vec<Issue> {
        let mut out = Vec::new();
        let d = self.dimension;
        if self.campaign_id.is_empty() || !self.campaign_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            out.push(issue("campaign_id", "must be nonempty and use only letters, digits, '-', '_' or '.'"));
        }
        match (&self.body, self.experiment) {
            (None, Experiment::Equiv) => {}
            (Some(b), Experiment::Equiv) => {
                let unit = matches!(b, BodySpec::Ball { center, radius } if *radius == 1.0 && center.iter().all(|c| *c == 0.0));
                if !unit {
                    out.push(issue("body", "the equivalence suite is defined for the unit ball only"));
                }
            }
            (None, _) => out.push(issue("body", "required for this experiment")),
            (Some(b), _) => check_body("body", b, d, &mut out),
        }
        if d < 2 {
            out.push(issue("dimension", "must be at least 2"));
        } else if d > 3 && !matches!(self.quadrature, Some(QuadratureScheme::Qmc(_))) {
            out.push(issue("dimension", "above 3 requires a qmc quadrature override"));
        }
        if self.n_grid.is_empty() {
            out.push(issue("n_grid", "must not be empty"));
        }
        for (i, n) in self.n_grid.iter().enumerate() {
            if !(n.is_finite() && *n > 0.0) {
                out.push(issue(format!("n_grid[{i}]"), format!("intensity {n} must be positive and finite")));
            }
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            out.push(issue("n_grid", "must be strictly increasing"));
        }
        match self.experiment {
            Experiment::Rate if self.n_grid.len() < 4 => out.push(issue("n_grid", "a rate fit needs at least 4 points")),
            Experiment::Equiv | Experiment::Concavity if self.n_grid.len() != 1 => {
                out.push(issue("n_grid", "this experiment takes exactly one intensity"))
            }
            _ => {}
        }
        if self.reps < 2 {
            out.push(issue("reps", "must be at least 2"));
        }
        if let Some(w) = self.window {
            if !(w.size().is_finite() && w.size() > 0.0) {
                out.push(issue("window", "size must be positive"));
            }
        }
        if let Some(q) = self.quadrature {
            let fits = match q {
                QuadratureScheme::Exact2D => d == 2,
                QuadratureScheme::UniformAngles2D(n) => d == 2 && n >= 8,
                QuadratureScheme::SphericalDesign3D(n) => d == 3 && n >= 64,
                QuadratureScheme::Qmc(n) => n >= 64,
            };
            if !fits {
                out.push(issue("quadrature", format!("scheme does not suit dimension {d} or has too few nodes")));
            }
        }
        self.validate_params(&mut out);
        let c = &self.checks;
        if !(0.0..=1.0).contains(&c.max_truncation_frequency) {
            out.push(issue("checks.max_truncation_frequency", "must lie in [0,1]"));
        }
        for (name, range) in [("checks.slope_range", c.slope_range), ("checks.decay_ratio_range", c.decay_ratio_range)] {
            if let Some([lo, hi]) = range {
                if !(lo <= hi) {
                    out.push(issue(name, "lower end exceeds upper end"));
                }
            }
        }
        out
    }

    fn validate_params(&self, out: &mut Vec<Issue>) {
        let p = &self.params;
        let d = self.dimension;
        let allowed: &[&str] = match self.experiment {
            Experiment::Gap | Experiment::Rate => &[],
            Experiment::Equiv => &["inner_radius", "control_inner_radius"],
            Experiment::Concavity => &["second_body", "alphas", "inner_radius"],
            Experiment::Tail => &["x_grid", "scale", "min_exceedances"],
            Experiment::Lowerbound => &["inflate", "oracle_samples"],
        };
        let present = [
            ("second_body", p.second_body.is_some()),
            ("alphas", p.alphas.is_some()),
            ("inner_radius", p.inner_radius.is_some()),
            ("control_inner_radius", p.control_inner_radius.is_some()),
            ("x_grid", p.x_grid.is_some()),
            ("scale", p.scale.is_some()),
            ("min_exceedances", p.min_exceedances.is_some()),
            ("inflate", p.inflate.is_some()),
            ("oracle_samples", p.oracle_samples.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                out.push(issue(format!("params.{name}"), format!("not used by the {} experiment", self.experiment.name())));
            }
        }
        let open_unit = |v: f64| v > 0.0 && v < 1.0;
        match self.experiment {
            Experiment::Equiv => {
                for (name, v) in [("inner_radius", p.inner_radius), ("control_inner_radius", p.control_inner_radius)] {
                    if let Some(r) = v {
                        if !open_unit(r) {
                            out.push(issue(format!("params.{name}"), "must lie in (0,1)"));
                        }
                    }
                }
            }
            Experiment::Concavity => {
                match &p.second_body {
                    None => out.push(issue("params.second_body", "required for the concavity suite")),
                    Some(b) => check_body("params.second_body", b, d, out),
                }
                match &p.alphas {
                    None => out.push(issue("params.alphas", "required for the concavity suite")),
                    Some(a) if a.is_empty() => out.push(issue("params.alphas", "must not be empty")),
                    Some(a) => {
                        for (i, v) in a.iter().enumerate() {
                            if !(0.0..=1.0).contains(v) {
                                out.push(issue(format!("params.alphas[{i}]"), "must lie in [0,1]"));
                            }
                        }
                    }
                }
                if let Some(r) = p.inner_radius {
                    if !(r > 0.0) {
                        out.push(issue("params.inner_radius", "must be positive"));
                    } else if d != 2 {
                        out.push(issue("params.inner_radius", "the contraction check is planar"));
                    }
                }
            }
            Experiment::Tail => {
                match &p.x_grid {
                    None => out.push(issue("params.x_grid", "required for the tail suite")),
                    Some(x) if x.len() < 3 => out.push(issue("params.x_grid", "needs at least 3 points")),
                    Some(x) => {
                        if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                            out.push(issue("params.x_grid", "values must be finite and nonnegative"));
                        }
                        if x.windows(2).any(|w| w[1] <= w[0]) {
                            out.push(issue("params.x_grid", "must be strictly increasing"));
                        }
                    }
                }
                if let Some(b) = p.scale {
                    if !(b > 0.0) {
                        out.push(issue("params.scale", "must be positive"));
                    }
                }
            }
            Experiment::Lowerbound => {
                if let Some(f) = p.inflate {
                    if !(f > 0.0) {
                        out.push(issue("params.inflate", "must be positive"));
                    }
                }
                if matches!(p.oracle_samples, Some(s) if s > 0) && d != 2 {
                    out.push(issue("params.oracle_samples", "the hull oracle is planar"));
                }
            }
            Experiment::Gap | Experiment::Rate => {}
        }
    }

    pub fn policy(&self, workers: usize) -> RunPolicy {
        RunPolicy { window: self.window, quadrature: self.quadrature, ..RunPolicy::new(self.master_seed) }
            .with_workers(workers)
    }

    fn body_label(&self) -> String {
        match &self.body {
            Some(b) => b.label(),
            None => "ball(r=1)".into(),
        }
    }

    fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.dimension > 3 {
            w.push(format!("dimension {} uses QMC quadrature; mean widths are not exact", self.dimension));
        }
        w
    }
}

fn check_body(path: &str, b: &BodySpec, d: usize, out: &mut Vec<Issue>) {
    if b.dim() != d {
        out.push(issue(path, format!("body has dimension {} but the campaign has {d}", b.dim())));
    } else if let Err(e) = b.to_body() {
        out.push(issue(path, e.to_string()));
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.into(), passed, detail }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Report {
    Gap { estimates: Vec<GapEstimate>, fit: Option<RateFit> },
    Equiv(EquivalenceReport),
    Concavity(ConcavityReport),
    Tail(TailReport),
    Lowerbound(LowerBoundReport),
}

/// One CSV row, already formatted.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub experiment: String,
    pub n: f64,
    pub mean_gap: f64,
    pub stderr: f64,
    pub trunc_count: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignOutcome {
    pub config: CampaignConfig,
    pub report: Report,
    pub rows: Vec<CsvRow>,
    pub checks: Vec<CheckResult>,
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct Summary<'a> {
    campaign_id: &'a str,
    experiment: Experiment,
    dimension: usize,
    body: String,
    master_seed: u64,
    reps: u64,
    n_grid: &'a [f64],
    warnings: &'a [String],
    report: &'a Report,
    checks: &'a [CheckResult],
    passed: bool,
}

impl CampaignOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let c = &self.config;
        let (d, body, reps, seed) =
            (c.dimension.to_string(), c.body_label(), c.reps.to_string(), c.master_seed.to_string());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                c.campaign_id.as_str(),
                &r.experiment,
                &d,
                &body,
                &format!("{}", r.n),
                &reps,
                &format!("{:.16e}", r.mean_gap),
                &format!("{:.16e}", r.stderr),
                &r.trunc_count.to_string(),
                &seed,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii")
    }

    pub fn summary_json(&self) -> String {
        let c = &self.config;
        let s = Summary {
            campaign_id: &c.campaign_id,
            experiment: c.experiment,
            dimension: c.dimension,
            body: c.body_label(),
            master_seed: c.master_seed,
            reps: c.reps,
            n_grid: &c.n_grid,
            warnings: &self.warnings,
            report: &self.report,
            checks: &self.checks,
            passed: self.passed(),
        };
        let mut text = serde_json::to_string_pretty(&s).expect("serializable summary");
        text.push('\n');
        text
    }

    /// The SVG plot, rendered from the CSV text.
    pub fn plot_svg(&self) -> Option<String> {
        if !self.config.output.svg {
            return None;
        }
        plot::render_from_csv(&self.to_csv()).ok().flatten()
    }

    /// Writes CSV, summary, and plot under `dir`; returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, CampaignError> {
        let c = &self.config;
        let id = &c.campaign_id;
        let resolve = |p: &Option<PathBuf>, ext: &str| dir.join(p.clone().unwrap_or_else(|| format!("{id}.{ext}").into()));
        let mut files = vec![(resolve(&c.output.csv, "csv"), self.to_csv()), (resolve(&c.output.summary, "json"), self.summary_json())];
        if let Some(svg) = self.plot_svg() {
            files.push((resolve(&c.output.plot, "svg"), svg));
        }
        let mut written = Vec::new();
        for (path, text) in files {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|source| CampaignError::Io { path: parent.into(), source })?;
            }
            fs::write(&path, text).map_err(|source| CampaignError::Io { path: path.clone(), source })?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn csv_path(&self, dir: &Path) -> PathBuf {
        let c = &self.config;
        dir.join(c.output.csv.clone().unwrap_or_else(|| format!("{}.csv", c.campaign_id).into()))
    }
}

/// Runs a validated campaign. `workers` affects speed only.
pub fn run_campaign(config: &CampaignConfig, workers: usize) -> Result<CampaignOutcome, CampaignError> {
    let issues = config.validate();
    if !issues.is_empty() {
        return Err(CampaignError::Config(issues));
    }
    let policy = config.policy(workers);
    let p = &config.params;
    let body = || -> Result<ConvexBody, Error> { config.body.as_ref().expect("validated").to_body() };
    let limit = config.checks.max_truncation_frequency;
    let reps = config.reps;
    let mut checks = Vec::new();
    let trunc_check = |counts: &[u64]| {
        let worst = counts.iter().copied().max().unwrap_or(0);
        check("truncation", worst as f64 / reps as f64 <= limit, format!("max count {worst} of {reps} (limit {limit})"))
    };
    let (report, rows) = match config.experiment {
        Experiment::Gap | Experiment::Rate | Experiment::Lowerbound => {
            let (estimates, lb) = if config.experiment == Experiment::Lowerbound {
                let r = lowerbound_suite(
                    &body()?,
                    &config.n_grid,
                    reps,
                    p.inflate.unwrap_or(1.0),
                    p.oracle_samples.unwrap_or(0),
                    &policy,
                )?;
                (r.estimates.clone(), Some(r))
            } else {
                (estimate_gap_grid(&body()?, &config.n_grid, reps, &policy)?, None)
            };
            checks.push(trunc_check(&estimates.iter().map(|e| e.truncation_count).collect::<Vec<_>>()));
            checks.push(monotone_check(&estimates));
            let rows = estimates
                .iter()
                .map(|e| CsvRow {
                    experiment: config.experiment.name().into(),
                    n: e.n,
                    mean_gap: e.mean_gap,
                    stderr: e.stderr,
                    trunc_count: e.truncation_count,
                })
                .collect();
            match lb {
                Some(r) => {
                    checks.push(check(
                        "lower_bound",
                        r.all_hold,
                        r.rows
                            .iter()
                            .map(|row| format!("n={}: {:.6} + 3·{:.2e} vs {:.6}", row.n, row.mean_gap, row.stderr, 0.98 * r.inflate * row.bound))
                            .collect::<Vec<_>>()
                            .join("; "),
                    ));
                    if let Some(ok) = r.certified {
                        let worst = r.rows.iter().filter_map(|row| row.oracle_relative_error).fold(0.0, f64::max);
                        checks.push(check("kt_certified", ok, format!("worst relative disagreement {worst:.2e}")));
                    }
                    (Report::Lowerbound(r), rows)
                }
                None => {
                    let fit = if estimates.len() >= 4 { Some(rate_fit(&estimates)?) } else { None };
                    if let (Some([lo, hi]), Some(f)) = (config.checks.slope_range, &fit) {
                        checks.push(check("slope", (lo..=hi).contains(&f.slope), format!("slope {:.4} vs [{lo}, {hi}]", f.slope)));
                    }
                    if let Some(limit) = config.checks.max_spread_n_over_log_n {
                        let v: Vec<f64> = estimates.iter().map(|e| e.mean_gap * e.n / e.n.ln()).collect();
                        let spread = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min);
                        checks.push(check("spread_n_over_log_n", spread < limit, format!("max/min {spread:.4} vs {limit}")));
                    }
                    (Report::Gap { estimates, fit }, rows)
                }
            }
        }
        Experiment::Equiv => {
            let r_default = 1.0 / Window::for_body(&ConvexBody::unit_ball(config.dimension))?.size();
            let r = equivalence_suite(
                config.dimension,
                config.n_grid[0],
                p.inner_radius.unwrap_or(r_default),
                reps,
                p.control_inner_radius,
                &policy,
            )?;
            let c = &config.checks;
            let min_p = r.ks_mean_width.iter().map(|t| t.p_value).fold(1.0, f64::min);
            checks.push(check("ks_mean_width", min_p > c.min_p_value, format!("min p {min_p:.4} vs {}", c.min_p_value)));
            checks.push(check("mean_agreement", r.max_mean_z <= c.max_mean_z, format!("max z {:.3} vs {}", r.max_mean_z, c.max_mean_z)));
            if let Some(ctrl) = &r.control {
                checks.push(check(
                    "negative_control",
                    ctrl.p_value < c.control_max_p_value,
                    format!("p {:.3e} vs {}", ctrl.p_value, c.control_max_p_value),
                ));
            }
            let counted: Vec<u64> = r.constructions.iter().take(3).map(|s| s.truncation_count).collect();
            checks.push(trunc_check(&counted));
            let rows = r
                .constructions
                .iter()
                .map(|s| CsvRow {
                    experiment: format!("equiv/{}", serde_json::to_value(s.construction).expect("enum").as_str().expect("unit variant")),
                    n: r.n,
                    mean_gap: s.mean_width - 2.0,
                    stderr: s.stderr,
                    trunc_count: s.truncation_count,
                })
                .collect();
            (Report::Equiv(r), rows)
        }
        Experiment::Concavity => {
            let l = p.second_body.as_ref().expect("validated").to_body()?;
            let alphas = p.alphas.clone().expect("validated");
            let r = concavity_suite(&body()?, &l, &alphas, config.n_grid[0], reps, p.inner_radius, &policy)?;
            let total: u64 = r.violations.iter().sum();
            let worst = r.min_margin.iter().copied().fold(f64::INFINITY, f64::min);
            checks.push(check("concavity", total == 0, format!("{total} violations, smallest margin {worst:.3e}")));
            if let (Some(v), Some(q)) = (r.contraction_violations, r.contraction_max_ratio) {
                checks.push(check("contraction", v == 0, format!("{v} violations, largest ratio {q:.4}")));
            }
            checks.push(trunc_check(&r.truncation_count));
            let rows = alphas
                .iter()
                .enumerate()
                .map(|(i, a)| CsvRow {
                    experiment: format!("concavity/alpha={a}"),
                    n: r.n,
                    mean_gap: r.mean_gap[i],
                    stderr: r.stderr[i],
                    trunc_count: r.truncation_count[i],
                })
                .collect();
            (Report::Concavity(r), rows)
        }
        Experiment::Tail => {
            let xs = p.x_grid.clone().expect("validated");
            let r = tail_suite(
                &body()?,
                &config.n_grid,
                &xs,
                reps,
                p.scale.unwrap_or(1.0),
                p.min_exceedances.unwrap_or(10),
                &policy,
            )?;
            let c = &config.checks;
            checks.push(check("nonincreasing", r.nonincreasing, "survival along x".into()));
            if let Some([lo, hi]) = c.decay_ratio_range {
                checks.push(check(
                    "decay_ratio",
                    (lo..=hi).contains(&r.rate_ratio),
                    format!("ratio {:.4} vs [{lo}, {hi}] (rates {:?})", r.rate_ratio, r.decay_rate),
                ));
            }
            if c.require_log_convex {
                checks.push(check("log_convex", r.log_convex, format!("smallest second-difference z {:.2}", r.min_convexity_z)));
            }
            checks.push(trunc_check(&r.truncation_count));
            let mut rows = Vec::new();
            for (i, n) in r.ns.iter().enumerate() {
                for (j, x) in xs.iter().enumerate() {
                    let s = r.survival[i][j];
                    rows.push(CsvRow {
                        experiment: format!("tail/x={x}"),
                        n: *n,
                        mean_gap: s,
                        stderr: (s * (1.0 - s) / reps as f64).sqrt(),
                        trunc_count: r.truncation_count[i],
                    });
                }
            }
            (Report::Tail(r), rows)
        }
    };
    Ok(CampaignOutcome { config: config.clone(), report, rows, checks, warnings: config.warnings() })
}

/// `mean_gap` decreasing along the grid up to two combined standard errors.
fn monotone_check(estimates: &[GapEstimate]) -> CheckResult {
    let bad: Vec<String> = estimates
        .windows(2)
        .filter(|w| w[1].mean_gap > w[0].mean_gap + 2.0 * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt())
        .map(|w| format!("n={} -> n={}", w[0].n, w[1].n))
        .collect();
    check("monotone_in_n", bad.is_empty(), if bad.is_empty() { "decreasing".into() } else { bad.join(", ") })
}

/// Compares two CSV texts line by line; returns the first differing row as
/// `(line number, expected, found)`.
pub fn first_difference(expected: &str, found: &str) -> Option<(usize, String, String)> {
    let mut a = expected.lines();
    let mut b = found.lines();
    let mut line = 1;
    loop {
        match (a.next(), b.next()) {
            (None, None) => {
                // Same lines; only the final newline can differ.
                return (expected != found).then(|| (line, "<end of file>".into(), "<trailing bytes differ>".into()));
            }
            (x, y) if x == y => line += 1,
            (x, y) => {
                return Some((line, x.unwrap_or("<missing>").into(), y.unwrap_or("<missing>").into()));
            }
        }
    }
}
