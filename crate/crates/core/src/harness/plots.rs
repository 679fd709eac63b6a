//! Log-log coarse-size plots with fitted power laws, written as
//! self-contained SVG.

use std::path::{Path, PathBuf};

use super::report::ExperimentReport;
use crate::error::Result;

/// Least-squares power-law fit `y ~ c * x^e` on log-log coordinates.
/// Returns `(exponent, prefactor)`.
pub fn fit_power_law(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    assert_eq!(xs.len(), ys.len());
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y > 0.0)
        .map(|(&x, &y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return None;
    }
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return None;
    }
    let exponent = (n * sxy - sx * sy) / denom;
    let prefactor = ((sy - exponent * sx) / n).exp();
    Some((exponent, prefactor))
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
    fit: Option<(f64, f64)>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn svg_scatter(series: &[Series], x_label: &str, title: &str) -> String {
    let (w, h) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 50.0);
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .collect();
    let (mut x0, mut x1) = (f64::MAX, f64::MIN);
    let (mut y0, mut y1) = (f64::MAX, f64::MIN);
    for &(x, y) in &all {
        x0 = x0.min(x.ln());
        x1 = x1.max(x.ln());
        y0 = y0.min(y.ln());
        y1 = y1.max(y.ln());
    }
    let pad = |lo: &mut f64, hi: &mut f64| {
        let span = (*hi - *lo).max(0.2);
        *lo -= 0.08 * span;
        *hi += 0.08 * span;
    };
    pad(&mut x0, &mut x1);
    pad(&mut y0, &mut y1);
    let px = |x: f64| ml + (x.ln() - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| h - mb - (y.ln() - y0) / (y1 - y0) * (h - mt - mb);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{title}</text>\n",
        w / 2.0
    ));
    // axes
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb,
        w - mr,
        h - mb
    ));
    svg.push_str(&format!(
        "<line x1=\"{ml}\" y1=\"{mt}\" x2=\"{ml}\" y2=\"{}\" stroke=\"black\"/>\n",
        h - mb
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{x_label} (log)</text>\n",
        (ml + w - mr) / 2.0,
        h - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">coarse size (log)</text>\n",
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    ));

    // tick marks at the data x positions and at y decades
    let mut xticks: Vec<f64> = all.iter().map(|p| p.0).collect();
    xticks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xticks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    for &x in &xticks {
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n<text x=\"{0}\" y=\"{3}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">{4}</text>\n",
            px(x),
            h - mb,
            h - mb + 5.0,
            h - mb + 18.0,
            trim_float(x)
        ));
    }
    let mut ydec = (y0 / std::f64::consts::LN_10).floor() as i32;
    while (ydec as f64) * std::f64::consts::LN_10 <= y1 {
        let y = 10f64.powi(ydec);
        if y.ln() >= y0 {
            svg.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n<text x=\"{3}\" y=\"{4}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{5}</text>\n",
                ml - 5.0,
                py(y),
                ml,
                ml - 8.0,
                py(y) + 4.0,
                trim_float(y)
            ));
        }
        ydec += 1;
    }

    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{color}\"/>\n",
                px(x),
                py(y)
            ));
        }
        if let Some((e, c)) = s.fit {
            let xs: Vec<f64> = s.points.iter().map(|p| p.0).collect();
            let (xa, xb) = (
                xs.iter().cloned().fold(f64::MAX, f64::min),
                xs.iter().cloned().fold(f64::MIN, f64::max),
            );
            let (ya, yb) = (c * xa.powf(e), c * xb.powf(e));
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-dasharray=\"5,3\"/>\n",
                px(xa),
                py(ya),
                px(xb),
                py(yb)
            ));
        }
        let legend_y = mt + 16.0 * idx as f64 + 8.0;
        let fit_text = match s.fit {
            Some((e, _)) => format!("{} (exponent {:.2})", s.label, e),
            None => s.label.clone(),
        };
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{color}\"/>\n<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            ml + 12.0,
            legend_y - 4.0,
            ml + 22.0,
            legend_y,
            fit_text
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn trim_float(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round() as i64)
    } else {
        format!("{v:.1}")
    }
}

/// Build the per-(kind, rule) series for coarse size against the chosen
/// abscissa.
fn collect_series<F: Fn(&ExperimentReport) -> f64>(
    reports: &[ExperimentReport],
    x_of: F,
) -> Vec<Series> {
    let mut order: Vec<(String, String)> = Vec::new();
    for r in reports {
        if r.coarse_size == 0 || r.error.is_some() {
            continue;
        }
        let key = (r.coarse_kind.clone(), r.threshold_rule.clone());
        if !order.contains(&key) {
            order.push(key);
        }
    }
    order
        .into_iter()
        .map(|(kind, rule)| {
            let points: Vec<(f64, f64)> = reports
                .iter()
                .filter(|r| r.coarse_kind == kind && r.threshold_rule == rule && r.coarse_size > 0)
                .map(|r| (x_of(r), r.coarse_size as f64))
                .collect();
            let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
            Series {
                label: format!("{kind}({rule})"),
                fit: fit_power_law(&xs, &ys),
                points,
            }
        })
        .filter(|s| !s.points.is_empty())
        .collect()
}

/// Emit log-log coarse-size plots: size against the wave number and against
/// the subdomain count. Series without at least two distinct abscissa values
/// are skipped; if nothing remains for an axis, no file is written and a
/// warning is printed.
pub fn emit_plots(reports: &[ExperimentReport], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let axes: [(&str, &str, Box<dyn Fn(&ExperimentReport) -> f64>); 2] = [
        (
            "coarse_size_vs_k.svg",
            "wave number k",
            Box::new(|r: &ExperimentReport| r.k),
        ),
        (
            "coarse_size_vs_subdomains.svg",
            "subdomains N",
            Box::new(|r: &ExperimentReport| r.n_subdomains as f64),
        ),
    ];
    for (file, label, x_of) in axes {
        let series: Vec<Series> = collect_series(reports, x_of)
            .into_iter()
            .filter(|s| {
                let mut xs: Vec<f64> = s.points.iter().map(|p| p.0).collect();
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                xs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
                xs.len() >= 2
            })
            .collect();
        if series.is_empty() {
            eprintln!("warning: not enough data for {file}, skipping");
            continue;
        }
        let title = format!("coarse space size vs {label}");
        let svg = svg_scatter(&series, label, &title);
        let path = dir.join(file);
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}
