//! Minimal SVG line charts. Cosmetic only: the CSV output is the contract.

use std::fmt::Write;

use rac_cert::harness::{SweepCell, SweepResult};

const W: f64 = 720.0;
const H: f64 = 440.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

fn finite_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) =
        vals.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1) = finite_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = finite_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {t} V{b} H{r}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(fx),
            H - MARGIN + 18.0,
            tick(fx)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            py(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
        escape(y_label),
        y = H / 2.0
    );

    for (i, ser) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y)))
            .collect();
        let dash = if ser.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="2"{dash}/>"#,
            pts.join(" ")
        );
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{a}" y1="{ly}" x2="{b}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/><text x="{c}" y="{ty}">{}</text>"#,
            escape(&ser.label),
            a = W - MARGIN - 190.0,
            b = W - MARGIN - 170.0,
            c = W - MARGIN - 165.0,
            ty = ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// One solid series per (strategy, evaluation) group for `metric`, plus a
/// dashed benchmark series per group when `with_benchmark` is set.
pub fn sweep_chart(result: &SweepResult, title: &str, metric: &str, with_benchmark: bool) -> String {
    let mut groups: Vec<(String, String)> = Vec::new();
    for c in &result.cells {
        let key = (c.strategy.clone(), c.evaluation.clone());
        if !groups.contains(&key) {
            groups.push(key);
        }
    }
    let mut series = Vec::new();
    for (strategy, evaluation) in &groups {
        let cells: Vec<&SweepCell> =
            result.cells.iter().filter(|c| &c.strategy == strategy && &c.evaluation == evaluation).collect();
        series.push(Series {
            label: format!("{strategy}/{evaluation}"),
            points: cells.iter().map(|c| (c.axis_value, metric_value(c, metric))).collect(),
            dashed: false,
        });
        if with_benchmark {
            series.push(Series {
                label: format!("benchmark/{evaluation}"),
                points: cells.iter().map(|c| (c.axis_value, c.mean_benchmark)).collect(),
                dashed: true,
            });
        }
    }
    line_chart(title, &result.axis, metric, &series)
}

fn metric_value(c: &SweepCell, metric: &str) -> f64 {
    match metric {
        "mean_s_cond" => c.mean_s_cond,
        "mean_s_low" => c.mean_s_low,
        "mean_trailing" => c.mean_trailing,
        "accept_rate" => c.accept_rate,
        "median_delta_rob" => c.median_delta_rob,
        _ => c.mean_s_uncond,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_wellformed() {
        let svg = line_chart(
            "t<1>",
            "x",
            "y",
            &[Series { label: "a".into(), points: vec![(0.0, 0.75), (1.0, 0.8), (2.0, f64::NAN)], dashed: true }],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("t&lt;1&gt;"));
        assert!(!svg.contains("NaN"));
    }
}
