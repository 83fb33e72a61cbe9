//! Dependency-free SVG plots rendered from campaign CSV text: a log-log gap
//! plot with error bars and the fitted line, and a log-survival plot.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::campaign::CampaignError;
use crate::stats::ols;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Row {
    campaign: String,
    experiment: String,
    body: String,
    n: f64,
    value: f64,
    stderr: f64,
}

fn parse(csv_text: &str) -> Result<Vec<Row>, CampaignError> {
    let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
    let bad = |e: &dyn std::fmt::Display| CampaignError::Csv(format!("unreadable campaign CSV: {e}"));
    let mut rows = Vec::new();
    for record in reader.records() {
        let r = record.map_err(|e| bad(&e))?;
        let num = |i: usize| r.get(i).unwrap_or("").parse::<f64>().map_err(|e| bad(&e));
        rows.push(Row {
            campaign: r.get(0).unwrap_or("").into(),
            experiment: r.get(1).unwrap_or("").into(),
            body: r.get(3).unwrap_or("").into(),
            n: num(4)?,
            value: num(6)?,
            stderr: num(7)?,
        });
    }
    Ok(rows)
}

/// The plot for a campaign CSV, or `None` for experiments without one.
pub fn render_from_csv(csv_text: &str) -> Result<Option<String>, CampaignError> {
    let rows = parse(csv_text)?;
    let Some(first) = rows.first() else { return Ok(None) };
    let title = format!("{} · {}", first.campaign, first.body);
    if rows.iter().all(|r| matches!(r.experiment.as_str(), "gap" | "rate" | "lowerbound")) {
        return Ok(Some(gap_plot(&title, &rows)));
    }
    if rows.iter().all(|r| r.experiment.starts_with("tail/x=")) {
        return Ok(Some(survival_plot(&title, &rows)?));
    }
    Ok(None)
}

/// Maps data coordinates (already log-transformed where needed) to pixels.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |(lo, hi): (f64, f64)| {
            let span = if hi > lo { hi - lo } else { 1.0 };
            (lo - 0.05 * span, hi + 0.05 * span)
        };
        Self { x: pad(x), y: pad(y) }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Tick positions `m·10^k` for m in {1, 2, 5} inside `[lo, hi]` (log10 units).
fn log_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let mut ticks = Vec::new();
    for k in (lo.floor() as i32 - 1)..=(hi.ceil() as i32) {
        for m in [1.0f64, 2.0, 5.0] {
            let t = k as f64 + m.log10();
            if t >= lo && t <= hi {
                ticks.push(t);
            }
        }
    }
    if ticks.len() > 12 {
        ticks.retain(|t| (t - t.round()).abs() < 1e-9);
    }
    ticks
}

fn tick_label(log10: f64) -> String {
    let v = 10f64.powf(log10);
    if (1e-3..1e4).contains(&v) {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.0e}")
    }
}

fn axes(svg: &mut String, f: &Frame, xticks: &[(f64, String)], yticks: &[(f64, String)], xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(svg, r#"<rect x="{x0}" y="{y1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    for (t, label) in xticks {
        let x = f.px(*t);
        let _ = writeln!(svg, r#"<line x1="{x:.1}" y1="{y0}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#, y0 + 5.0);
        let _ = writeln!(svg, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{label}</text>"#, y0 + 18.0);
    }
    for (t, label) in yticks {
        let y = f.py(*t);
        let _ = writeln!(svg, r#"<line x1="{:.1}" y1="{y:.1}" x2="{x0}" y2="{y:.1}" stroke="black"/>"#, x0 - 5.0);
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{label}</text>"#, x0 - 8.0, y + 4.0);
    }
    let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xlabel}</text>"#, (x0 + x1) / 2.0, HEIGHT - 15.0);
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{0:.1}" text-anchor="middle" transform="rotate(-90 18 {0:.1})">{ylabel}</text>"#,
        (y0 + y1) / 2.0
    );
}

fn gap_plot(title: &str, rows: &[Row]) -> String {
    let pts: Vec<&Row> = rows.iter().filter(|r| r.value > 0.0).collect();
    let lx: Vec<f64> = pts.iter().map(|r| r.n.log10()).collect();
    let lo_y = pts.iter().map(|r| (r.value - r.stderr).max(r.value * 0.5).log10()).fold(f64::INFINITY, f64::min);
    let hi_y = pts.iter().map(|r| (r.value + r.stderr).log10()).fold(f64::NEG_INFINITY, f64::max);
    let range = |v: &[f64]| (v.iter().copied().fold(f64::INFINITY, f64::min), v.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let mut svg = String::new();
    header(&mut svg, title);
    if pts.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let f = Frame::new(range(&lx), (lo_y, hi_y));
    let xt: Vec<(f64, String)> = log_ticks(f.x.0, f.x.1).into_iter().map(|t| (t, tick_label(t))).collect();
    let yt: Vec<(f64, String)> = log_ticks(f.y.0, f.y.1).into_iter().map(|t| (t, tick_label(t))).collect();
    axes(&mut svg, &f, &xt, &yt, "n", "E W(Z_K) - W(K)");
    for r in &pts {
        let x = f.px(r.n.log10());
        let lo = (r.value - r.stderr).max(r.value * 0.5).log10();
        let hi = (r.value + r.stderr).log10();
        let _ = writeln!(svg, r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="{}"/>"#, f.py(lo), f.py(hi), COLORS[0]);
        let _ = writeln!(svg, r#"<circle cx="{x:.1}" cy="{:.1}" r="3.5" fill="{}"/>"#, f.py(r.value.log10()), COLORS[0]);
    }
    // The fit is done in natural logs; the slope is base-independent.
    let nx: Vec<f64> = pts.iter().map(|r| r.n.ln()).collect();
    let ny: Vec<f64> = pts.iter().map(|r| r.value.ln()).collect();
    if let Ok(fit) = ols(&nx, &ny) {
        let ends = [lx[0], lx[lx.len() - 1]];
        let y = |l: f64| (fit.intercept + fit.slope * l * std::f64::consts::LN_10) / std::f64::consts::LN_10;
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{}" stroke-dasharray="6 4"/>"#,
            f.px(ends[0]),
            f.py(y(ends[0])),
            f.px(ends[1]),
            f.py(y(ends[1])),
            COLORS[1]
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" fill="{}">fitted slope = {:.4} [{:.4}, {:.4}]</text>"#,
            WIDTH - RIGHT - 10.0,
            TOP + 20.0,
            COLORS[1],
            fit.slope,
            fit.slope_ci_95.0,
            fit.slope_ci_95.1
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn survival_plot(title: &str, rows: &[Row]) -> Result<String, CampaignError> {
    let mut series: BTreeMap<u64, (f64, Vec<(f64, f64)>)> = BTreeMap::new();
    for r in rows {
        let x: f64 = r.experiment["tail/x=".len()..]
            .parse()
            .map_err(|e| CampaignError::Csv(format!("bad tail label {}: {e}", r.experiment)))?;
        if r.value > 0.0 {
            series.entry(r.n.to_bits()).or_insert((r.n, Vec::new())).1.push((x, r.value.log10()));
        }
    }
    let all: Vec<(f64, f64)> = series.values().flat_map(|s| s.1.iter().copied()).collect();
    let mut svg = String::new();
    header(&mut svg, title);
    if all.is_empty() {
        svg.push_str("</svg>\n");
        return Ok(svg);
    }
    let xr = (all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min), all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max));
    let yr = (all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min), 0.0);
    let f = Frame::new(xr, yr);
    let step = nice_step(f.x.1 - f.x.0);
    let xt: Vec<(f64, String)> = ((f.x.0 / step).ceil() as i64..=(f.x.1 / step).floor() as i64)
        .map(|k| (k as f64 * step, format!("{:.2}", k as f64 * step)))
        .collect();
    let yt: Vec<(f64, String)> = log_ticks(f.y.0, f.y.1).into_iter().map(|t| (t, tick_label(t))).collect();
    axes(&mut svg, &f, &xt, &yt, "x", "P(R_o(Z_K) > b (R_o(K) + x))");
    // Sorted by n; BTreeMap on the bit pattern orders positive floats.
    for (i, (n, pts)) in series.values().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.1},{:.1}", f.px(*x), f.py(*y))).collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}"/>"#, path.join(" "));
        for (x, y) in pts {
            let _ = writeln!(svg, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#, f.px(*x), f.py(*y));
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" fill="{color}">n = {n}</text>"#,
            WIDTH - RIGHT - 10.0,
            TOP + 20.0 + 16.0 * i as f64
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].into_iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "campaign_id,experiment,d,body,n,reps,mean_gap,stderr,trunc_count,seed\n";

    #[test]
    fn gap_plot_annotates_exact_slope() {
        let mut csv = HEAD.to_string();
        for k in 4..=8 {
            let n = 2f64.powi(k);
            csv += &format!("c,rate,2,ball(r=1),{n},10,{:.16e},1e-3,0,1\n", n.powf(-2.0 / 3.0));
        }
        let svg = render_from_csv(&csv).unwrap().unwrap();
        assert!(svg.contains("fitted slope = -0.6667"));
        assert_eq!(svg, render_from_csv(&csv).unwrap().unwrap());
    }

    #[test]
    fn survival_plot_and_unplotted_kinds() {
        let mut csv = HEAD.to_string();
        for (n, s) in [(32, [0.9, 0.5, 0.1]), (64, [0.8, 0.2, 0.01])] {
            for (j, v) in s.iter().enumerate() {
                csv += &format!("c,tail/x={},2,ball(r=1),{n},10,{v},0,0,1\n", j as f64 * 0.1);
            }
        }
        let svg = render_from_csv(&csv).unwrap().unwrap();
        assert!(svg.contains("n = 32") && svg.contains("n = 64"));
        let eq = format!("{HEAD}c,equiv/polar_points,2,ball(r=1),50,10,0.2,0.01,0,1\n");
        assert_eq!(render_from_csv(&eq).unwrap(), None);
        assert!(render_from_csv(&format!("{HEAD}c,rate,2,b,x,1,1,1,0,1\n")).is_err());
    }

    #[test]
    fn ticks_cover_range() {
        assert_eq!(log_ticks(0.0, 1.0).len(), 4);
        assert_eq!(tick_label(2f64.log10()), "2");
        assert_eq!(tick_label(-2.0), "0.01");
    }
}
