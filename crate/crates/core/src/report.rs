//! CSV and SVG output. Every writer is a pure function of its input, so
//! identical logs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use crate::data::RunLog;
use crate::error::{Error, Result};
use crate::sim::{median, AblationEntry, ScoreMap};

pub const ROUNDS_HEADER: &str = "trial,round,labeled,accuracy,ood_ratio,method,seed,config_digest";
pub const SUMMARY_HEADER: &str =
    "method,round,trials,labeled_median,accuracy_median,ood_ratio_median,config_digest";

/// `%.17g`: 17 significant digits, trailing zeros trimmed. Round-trips every
/// finite `f64`.
pub fn fmt_g17(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let out = if (-5..17).contains(&exp) {
        format!("{:.*}", (16 - exp) as usize, v)
    } else {
        format!("{mantissa}e{exp}")
    };
    trim_zeros(out)
}

fn trim_zeros(s: String) -> String {
    let (body, exp) = match s.split_once('e') {
        Some((b, e)) => (b.to_string(), format!("e{e}")),
        None => (s, String::new()),
    };
    let body = if body.contains('.') {
        body.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        body
    };
    body + &exp
}

fn common_digest<'a>(digests: impl Iterator<Item = &'a str>) -> Result<Option<&'a str>> {
    let mut seen: Option<&str> = None;
    for d in digests {
        match seen {
            None => seen = Some(d),
            Some(s) if s != d => {
                return Err(Error::InvalidArgument(format!(
                    "logs mix config digests {s} and {d}; write them to separate files"
                )))
            }
            _ => {}
        }
    }
    Ok(seen)
}

/// One row per (trial, round).
pub fn rounds_csv(logs: &[RunLog]) -> Result<String> {
    common_digest(logs.iter().map(|l| l.config_digest.as_str()))?;
    let mut out = String::from(ROUNDS_HEADER);
    out.push('\n');
    for log in logs {
        for r in &log.rounds {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                log.trial,
                r.round,
                r.labeled,
                fmt_g17(r.accuracy),
                fmt_g17(r.ood_ratio),
                log.method,
                log.seed,
                log.config_digest
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// Per-round medians across trials, for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianCurve {
    pub method: String,
    /// `(round, trials, labeled, accuracy, ood_ratio)`
    pub points: Vec<(usize, usize, f64, f64, f64)>,
}

/// Median curves, one per method in order of first appearance.
pub fn median_curves(logs: &[RunLog]) -> Vec<MedianCurve> {
    let mut methods: Vec<&str> = Vec::new();
    for l in logs {
        if !methods.contains(&l.method.as_str()) {
            methods.push(&l.method);
        }
    }
    methods
        .into_iter()
        .map(|m| {
            let runs: Vec<&RunLog> = logs.iter().filter(|l| l.method == m).collect();
            let rounds = runs.iter().map(|l| l.rounds.len()).max().unwrap_or(0);
            let points = (0..rounds)
                .map(|i| {
                    let recs: Vec<_> = runs.iter().filter_map(|l| l.rounds.get(i)).collect();
                    let col = |f: &dyn Fn(&crate::data::RoundRecord) -> f64| {
                        median(&recs.iter().map(|r| f(r)).collect::<Vec<_>>())
                    };
                    (
                        recs[0].round,
                        recs.len(),
                        col(&|r| r.labeled as f64),
                        col(&|r| r.accuracy),
                        col(&|r| r.ood_ratio),
                    )
                })
                .collect();
            MedianCurve {
                method: m.to_string(),
                points,
            }
        })
        .collect()
}

pub fn summary_csv(logs: &[RunLog]) -> Result<String> {
    let digest = common_digest(logs.iter().map(|l| l.config_digest.as_str()))?.unwrap_or("");
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for curve in median_curves(logs) {
        for (round, trials, labeled, acc, ood) in &curve.points {
            writeln!(
                out,
                "{},{round},{trials},{},{},{},{digest}",
                curve.method,
                fmt_g17(*labeled),
                fmt_g17(*acc),
                fmt_g17(*ood)
            )
            .unwrap();
        }
    }
    Ok(out)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Line chart of named series of (x, y) points.
pub fn line_chart_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let (w, h) = (640.0, 420.0);
    let (left, right, top, bottom) = (60.0, 150.0, 40.0, 50.0);
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x1 = x0 + 1.0;
    }
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let (pw, ph) = (w - left - right, h - top - bottom);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    )
    .unwrap();
    writeln!(
        s,
        r#"<path d="M{left:.2} {top:.2} V{:.2} H{:.2}" stroke="black" fill="none"/>"#,
        top + ph,
        left + pw
    )
    .unwrap();
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            sx(xv),
            top + ph + 16.0,
            tick(xv)
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#,
            left - 6.0,
            sy(yv) + 4.0,
            tick(yv)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 12.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="16" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    )
    .unwrap();
    if series.is_empty() {
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle" fill="gray">no data</text>"#,
            left + pw / 2.0,
            top + ph / 2.0
        )
        .unwrap();
    }
    for (i, (name, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        )
        .unwrap();
        let ly = top + 10.0 + 18.0 * i as f64;
        writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#,
            w - right + 10.0,
            w - right + 30.0
        )
        .unwrap();
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            w - right + 36.0,
            ly + 4.0,
            escape(name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    trim_zeros(s)
}

/// Write `rounds.csv`, `summary.csv`, `accuracy.svg` and `ood_ratio.svg`.
pub fn write_results(logs: &[RunLog], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("rounds.csv"), rounds_csv(logs)?)?;
    std::fs::write(out_dir.join("summary.csv"), summary_csv(logs)?)?;
    let curves = median_curves(logs);
    let acc: Vec<(String, Vec<(f64, f64)>)> = curves
        .iter()
        .map(|c| {
            (
                c.method.clone(),
                c.points.iter().map(|p| (p.2, p.3)).collect(),
            )
        })
        .collect();
    let ood: Vec<(String, Vec<(f64, f64)>)> = curves
        .iter()
        .map(|c| {
            (
                c.method.clone(),
                c.points.iter().map(|p| (p.2, p.4)).collect(),
            )
        })
        .collect();
    std::fs::write(
        out_dir.join("accuracy.svg"),
        line_chart_svg(
            "Test accuracy (median over trials)",
            "labeled examples",
            "accuracy",
            &acc,
        ),
    )?;
    std::fs::write(
        out_dir.join("ood_ratio.svg"),
        line_chart_svg(
            "Acquired OoD ratio (median over trials)",
            "labeled examples",
            "OoD ratio",
            &ood,
        ),
    )?;
    Ok(())
}

/// `ablation.csv` plus one results directory per evaluation-set size.
pub fn write_ablation(entries: &[AblationEntry], base_digest: &str, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::from("eval_size,trials,median_final_accuracy,config_digest\n");
    for e in entries {
        writeln!(
            csv,
            "{},{},{},{base_digest}",
            e.eval_size,
            e.logs.len(),
            fmt_g17(e.median_final_accuracy)
        )
        .unwrap();
        write_results(&e.logs, &out_dir.join(format!("eval_{}", e.eval_size)))?;
    }
    std::fs::write(out_dir.join("ablation.csv"), csv)?;
    Ok(())
}

/// Grid scores as CSV. Negative EPIG-BALD values under approximation are kept
/// raw and clamped only in the `_clamped` column.
pub fn score_map_csv(map: &ScoreMap, digest: &str) -> String {
    let mut out = String::from("x,y,bald,epig_bald,epig_bald_clamped,config_digest\n");
    for ((g, b), e) in map.grid.iter().zip(&map.bald).zip(&map.epig_bald) {
        writeln!(
            out,
            "{},{},{},{},{},{digest}",
            fmt_g17(g[0]),
            fmt_g17(g[1]),
            fmt_g17(*b),
            fmt_g17(*e),
            fmt_g17(e.max(0.0))
        )
        .unwrap();
    }
    out
}

fn heat(t: f64) -> String {
    // white to dark blue
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * (1.0 - 0.85 * t)).round() as u8;
    let g = (255.0 * (1.0 - 0.6 * t)).round() as u8;
    format!("#{r:02x}{g:02x}ff")
}

/// Two panels (BALD, EPIG-BALD): grid cells shaded by score, training points
/// as class-colored dots, evaluation points as black crosses, pool points as
/// small grey dots.
pub fn score_map_svg(map: &ScoreMap) -> String {
    let panel = 360.0;
    let (w, h) = (2.0 * panel + 60.0, panel + 70.0);
    let all = map.grid.iter();
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for g in all {
        x0 = x0.min(g[0]);
        x1 = x1.max(g[0]);
        y0 = y0.min(g[1]);
        y1 = y1.max(g[1]);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (dx, dy) = ((x1 - x0).max(1e-12), (y1 - y0).max(1e-12));
    let steps = (map.grid.len() as f64).sqrt().round().max(1.0);
    let cell = panel / steps;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    for (k, (title, scores)) in [("BALD", &map.bald), ("EPIG-BALD", &map.epig_bald)]
        .into_iter()
        .enumerate()
    {
        let ox = 20.0 + k as f64 * (panel + 20.0);
        let oy = 40.0;
        let sx = |x: f64| ox + (x - x0) / dx * (panel - cell) + cell / 2.0;
        let sy = |y: f64| oy + panel - cell / 2.0 - (y - y0) / dy * (panel - cell);
        let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi - lo > 1e-12 { hi - lo } else { 1.0 };
        writeln!(
            s,
            r#"<text x="{:.2}" y="26" font-family="sans-serif" font-size="14" text-anchor="middle">{title}</text>"#,
            ox + panel / 2.0
        )
        .unwrap();
        for (g, v) in map.grid.iter().zip(scores.iter()) {
            writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                sx(g[0]) - cell / 2.0,
                sy(g[1]) - cell / 2.0,
                cell,
                cell,
                heat((v - lo) / span)
            )
            .unwrap();
        }
        let inside = |p: &[f64]| p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1;
        for p in map.pool.iter().filter(|p| inside(p)) {
            writeln!(
                s,
                r##"<circle cx="{:.2}" cy="{:.2}" r="1.2" fill="#999999"/>"##,
                sx(p[0]),
                sy(p[1])
            )
            .unwrap();
        }
        for p in map.eval_x.iter().filter(|p| inside(p)) {
            let (cx, cy) = (sx(p[0]), sy(p[1]));
            writeln!(
                s,
                r#"<path d="M{:.2} {:.2} L{:.2} {:.2} M{:.2} {:.2} L{:.2} {:.2}" stroke="black" stroke-width="1"/>"#,
                cx - 2.5,
                cy - 2.5,
                cx + 2.5,
                cy + 2.5,
                cx - 2.5,
                cy + 2.5,
                cx + 2.5,
                cy - 2.5
            )
            .unwrap();
        }
        for (p, y) in map.train.iter().filter(|(p, _)| inside(p)) {
            let color = PALETTE[y.unwrap_or(7) % PALETTE.len()];
            writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{color}" stroke="black"/>"#,
                sx(p[0]),
                sy(p[1])
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="middle">range [{}, {}] nats</text>"#,
            ox + panel / 2.0,
            oy + panel + 18.0,
            tick(lo),
            tick(hi)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

pub fn write_score_map(map: &ScoreMap, digest: &str, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("score_map.csv"), score_map_csv(map, digest))?;
    std::fs::write(out_dir.join("score_map.svg"), score_map_svg(map))?;
    Ok(())
}
