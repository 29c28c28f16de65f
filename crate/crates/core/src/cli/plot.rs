//! Static SVG charts drawn from the JSON reports written by a run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{LabError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    /// Estimate ratio against `log2(1/h)`, one chart per `rho`.
    RatioVsH,
    /// Band sup norms on `log2` axes.
    BandDecay,
    /// `log2 |R(eps)|` against `log2 eps` with the fitted lines.
    SlopeFit,
    /// `max_gamma (w - rho lambda_u)` against `rho`, marking the crossing.
    Threshold,
}

impl PlotKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ratio-vs-h" => Some(PlotKind::RatioVsH),
            "band-decay" => Some(PlotKind::BandDecay),
            "slope-fit" => Some(PlotKind::SlopeFit),
            "threshold" => Some(PlotKind::Threshold),
            _ => None,
        }
    }

    /// Plot kind of a report, from its `experiment` field.
    pub fn for_report(report: &Value) -> Option<Self> {
        match report.get("experiment")?.as_str()? {
            "source-sweep" => Some(PlotKind::RatioVsH),
            "norms" => Some(PlotKind::BandDecay),
            "conformal" => Some(PlotKind::SlopeFit),
            "threshold" => Some(PlotKind::Threshold),
            _ => None,
        }
    }
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    /// Drawn as a polyline; markers otherwise.
    line: bool,
}

struct Chart {
    title: String,
    x_label: String,
    y_label: String,
    series: Vec<Series>,
    /// Vertical reference lines `(x, label)`.
    marks: Vec<(f64, String)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn malformed(what: &str) -> LabError {
    LabError::Validation(format!("malformed report: {what}"))
}

fn nothing() -> LabError {
    LabError::InvalidInput("nothing to plot".into())
}

fn num(v: &Value, key: &str) -> Result<f64> {
    v.get(key).and_then(Value::as_f64).ok_or_else(|| malformed(&format!("missing number `{key}`")))
}

fn arr<'a>(v: &'a Value, key: &str) -> Result<&'a Vec<Value>> {
    v.get(key).and_then(Value::as_array).ok_or_else(|| malformed(&format!("missing array `{key}`")))
}

fn log2_pos(v: f64) -> Option<f64> {
    (v > 0.0 && v.is_finite()).then(|| v.log2())
}

/// Reads `report`, draws the charts of `kind` next to it and returns their paths.
pub fn emit_plots(report: &Path, kind: PlotKind) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(report)?;
    let v: Value = serde_json::from_str(&text).map_err(|e| malformed(&e.to_string()))?;
    let charts = match kind {
        PlotKind::RatioVsH => ratio_charts(&v)?,
        PlotKind::BandDecay => vec![("band_decay.svg".to_string(), band_chart(&v)?)],
        PlotKind::SlopeFit => vec![("slope_fit.svg".to_string(), slope_chart(&v)?)],
        PlotKind::Threshold => vec![("threshold.svg".to_string(), threshold_chart(&v)?)],
    };
    let dir = report.parent().unwrap_or(Path::new("."));
    let mut paths = Vec::new();
    for (name, chart) in charts {
        let p = dir.join(name);
        std::fs::write(&p, render(&chart))?;
        paths.push(p);
    }
    Ok(paths)
}

fn ratio_charts(v: &Value) -> Result<Vec<(String, Chart)>> {
    let mut out = Vec::new();
    for sweep in arr(v, "sweeps")? {
        let rho = num(sweep, "rho")?;
        let mut med = Vec::new();
        let mut max = Vec::new();
        for s in arr(sweep, "per_h")? {
            let x = -num(s, "h")?.log2();
            if let Some(y) = log2_pos(num(s, "median")?) {
                med.push((x, y));
            }
            if let Some(y) = log2_pos(num(s, "max")?) {
                max.push((x, y));
            }
        }
        if med.is_empty() && max.is_empty() {
            continue;
        }
        let mut series = vec![
            Series { label: "median".into(), points: med.clone(), line: false },
            Series { label: "max".into(), points: max, line: false },
        ];
        if let Some(fit) = sweep.get("median_fit").filter(|f| !f.is_null()) {
            let (a, b) = (num(fit, "slope")?, num(fit, "intercept")?);
            let (x0, x1) = med.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.0), h.max(p.0)));
            if x0 < x1 {
                series.push(Series { label: format!("fit slope {a:.3}"), points: vec![(x0, a * x0 + b), (x1, a * x1 + b)], line: true });
            }
        }
        out.push((
            format!("ratio_vs_h_rho{rho}.svg"),
            Chart {
                title: format!("source estimate ratio, rho = {rho}"),
                x_label: "log2(1/h)".into(),
                y_label: "log2(ratio)".into(),
                series,
                marks: Vec::new(),
            },
        ));
    }
    if out.is_empty() {
        return Err(nothing());
    }
    Ok(out)
}

fn band_chart(v: &Value) -> Result<Chart> {
    let mut pts = Vec::new();
    for b in arr(v, "band_profile")? {
        if let Some(y) = log2_pos(num(b, "sup")?) {
            pts.push((num(b, "j")?, y));
        }
    }
    if pts.is_empty() {
        return Err(nothing());
    }
    Ok(Chart {
        title: "Littlewood-Paley band sup norms".into(),
        x_label: "j = log2(frequency scale)".into(),
        y_label: "log2 sup |Delta_j f|".into(),
        series: vec![Series { label: "max over samples".into(), points: pts, line: true }],
        marks: Vec::new(),
    })
}

fn slope_chart(v: &Value) -> Result<Chart> {
    let mut series = Vec::new();
    for w in arr(v, "words")? {
        let word = arr(w, "word")?.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("-");
        let mut pts = Vec::new();
        for r in arr(w, "rows")? {
            if let (Some(x), Some(y)) = (log2_pos(num(r, "eps")?), log2_pos(num(r, "remainder")?.abs())) {
                pts.push((x, y));
            }
        }
        if pts.is_empty() {
            continue;
        }
        if let Some(fit) = w.get("fit").filter(|f| !f.is_null()) {
            // The fit lives in natural logs; the slope is base-free.
            let (a, b) = (num(fit, "slope")?, num(fit, "intercept")? / std::f64::consts::LN_2);
            let (x0, x1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p.0), h.max(p.0)));
            series.push(Series { label: format!("word {word}: slope {a:.3}"), points: vec![(x0, a * x0 + b), (x1, a * x1 + b)], line: true });
        }
        series.push(Series { label: format!("word {word}"), points: pts, line: false });
    }
    if series.is_empty() {
        return Err(nothing());
    }
    Ok(Chart {
        title: "conformal remainder".into(),
        x_label: "log2(eps)".into(),
        y_label: "log2 |R(eps)|".into(),
        series,
        marks: Vec::new(),
    })
}

fn threshold_chart(v: &Value) -> Result<Chart> {
    let rows: Vec<(f64, f64)> = arr(v, "table")?.iter().map(|r| Ok((num(r, "weight_rate")?, num(r, "unstable_rate")?))).collect::<Result<_>>()?;
    if rows.is_empty() {
        return Err(nothing());
    }
    let omega = num(v, "omega_plus")?;
    let top = (2.0 * omega).max(1.0);
    let pts: Vec<(f64, f64)> = (0..=200)
        .map(|i| {
            let rho = top * i as f64 / 200.0;
            (rho, rows.iter().map(|&(w, u)| w - rho * u).fold(f64::NEG_INFINITY, f64::max))
        })
        .collect();
    Ok(Chart {
        title: "forward threshold".into(),
        x_label: "rho".into(),
        y_label: "max over orbits (w - rho lambda_u)".into(),
        series: vec![Series { label: "orbit maximum".into(), points: pts, line: true }],
        marks: vec![(omega, format!("omega_+ = {omega:.4}"))],
    })
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn render(c: &Chart) -> String {
    let all = c.series.iter().flat_map(|s| s.points.iter().copied());
    let (mut x0, mut x1, mut y0, mut y1) = all.fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |(a, b, c, d), (x, y)| {
        (a.min(x), b.max(x), c.min(y), d.max(y))
    });
    for (x, _) in &c.marks {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let d = if *hi > *lo { 0.05 * (*hi - *lo) } else { 0.5_f64.max(0.05 * lo.abs()) };
        *lo -= d;
        *hi += d;
    };
    pad(&mut x0, &mut x1);
    pad(&mut y0, &mut y1);
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, esc(&c.title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + ph + 16.0, fmt_tick(t));
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, H - 14.0, esc(&c.x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        TOP + ph / 2.0,
        esc(&c.y_label)
    );
    for (x, label) in &c.marks {
        let xp = sx(*x);
        let _ = writeln!(s, r##"<line x1="{xp:.2}" y1="{TOP}" x2="{xp:.2}" y2="{:.2}" stroke="#555" stroke-dasharray="4 3"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, xp + 4.0, TOP + 14.0, esc(label));
    }
    for (i, ser) in c.series.iter().enumerate() {
        let col = PALETTE[i % PALETTE.len()];
        if ser.line {
            let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{col}" stroke-width="1.5"/>"#, pts.join(" "));
        } else {
            for &(x, y) in &ser.points {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{col}"/>"#, sx(x), sy(y));
            }
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(s, r#"<rect x="{lx}" y="{:.2}" width="10" height="10" fill="{col}"/>"#, ly - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}">{}</text>"#, lx + 14.0, ly + 4.0, esc(&ser.label));
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(t: f64) -> String {
    let s = format!("{t:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}
