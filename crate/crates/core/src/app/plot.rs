//! Static SVG line charts rendered from the emitted CSV files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::table::write_atomic;

/// One chart: columns of a CSV file, optionally split by a label column.
#[derive(Debug, Clone, Copy)]
pub struct PlotSpec {
    pub csv: &'static str,
    pub svg: &'static str,
    pub title: &'static str,
    pub x: &'static str,
    pub ys: &'static [&'static str],
    pub group: Option<&'static str>,
}

pub const PLOTS: &[PlotSpec] = &[
    PlotSpec {
        csv: "bounds.csv",
        svg: "bounds.svg",
        title: "No-arbitrage bounds vs illiquid spread (bp)",
        x: "w_old_bp",
        ys: &["v_lub", "v_glb", "vanilla_lub", "vanilla_glb"],
        group: None,
    },
    PlotSpec {
        csv: "density_analytic.csv",
        svg: "density_analytic.svg",
        title: "Payoff density (continuous part)",
        x: "delta",
        ys: &["density"],
        group: Some("position"),
    },
    PlotSpec {
        csv: "density_mc.csv",
        svg: "density_mc.svg",
        title: "Monte Carlo payoff histogram",
        x: "delta",
        ys: &["density"],
        group: Some("position"),
    },
    PlotSpec {
        csv: "gooddeal_curves.csv",
        svg: "gooddeal_prices.svg",
        title: "Good-deal bid and ask vs expected return",
        x: "r_t",
        ys: &["bid", "ask"],
        group: Some("hedge"),
    },
    PlotSpec {
        csv: "gooddeal_curves.csv",
        svg: "gooddeal_capital.svg",
        title: "Capital at risk vs expected return",
        x: "r_t",
        ys: &["l_max_bid", "l_max_ask"],
        group: Some("hedge"),
    },
    PlotSpec {
        csv: "gooddeal_vs_spread.csv",
        svg: "gooddeal_vs_spread.svg",
        title: "No-arbitrage and good-deal bounds vs illiquid spread (bp)",
        x: "w_old_bp",
        ys: &["v_lub", "ask", "bid", "v_glb"],
        group: None,
    },
    PlotSpec {
        csv: "sweep.csv",
        svg: "sweep.svg",
        title: "Bid and ask vs one-year default probability",
        x: "pd1",
        ys: &["bid", "ask"],
        group: Some("recovery"),
    },
];

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

type Series = BTreeMap<String, Vec<(f64, f64)>>;

fn read_series(path: &Path, spec: &PlotSpec) -> Result<Series, csv::Error> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let col = |name: &str| header.iter().position(|h| h == name);
    let x = col(spec.x);
    let group = spec.group.and_then(col);
    let mut out = Series::new();
    let Some(x) = x else { return Ok(out) };
    for record in reader.records() {
        let record = record?;
        let Ok(xv) = record[x].parse::<f64>() else { continue };
        for y in spec.ys {
            let Some(yc) = col(y) else { continue };
            let Ok(yv) = record[yc].parse::<f64>() else { continue };
            if !(xv.is_finite() && yv.is_finite()) {
                continue;
            }
            let label = match group {
                Some(g) if spec.ys.len() > 1 => format!("{} {y}", &record[g]),
                Some(g) => record[g].to_string(),
                None => y.to_string(),
            };
            out.entry(label).or_default().push((xv, yv));
        }
    }
    Ok(out)
}

fn bounds(series: &Series) -> Option<(f64, f64, f64, f64)> {
    let pts = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return None;
    }
    let pad = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, b + 0.5) };
    let (x0, x1) = pad(x0, x1);
    let (y0, y1) = pad(y0, y1);
    Some((x0, x1, y0, y1))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(title: &str, x_label: &str, series: &Series) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="22" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let Some((x0, x1, y0, y1)) = bounds(series) else {
        svg.push_str("</svg>\n");
        return svg;
    };
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;
    let _ = writeln!(svg, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for k in 0..=5 {
        let f = k as f64 / 5.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="black"/>"#,
            TOP + ph,
            TOP + ph + 4.0
        );
        let _ = writeln!(svg, r#"<text x="{px:.2}" y="{}" text-anchor="middle">{xv:.4}</text>"#, TOP + ph + 16.0);
        let _ = writeln!(svg, r#"<line x1="{}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="black"/>"#, LEFT - 4.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{:.2}" text-anchor="end">{yv:.4}</text>"#, LEFT - 6.0, py + 4.0);
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", sx(*x), sy(*y));
        }
        let _ =
            writeln!(svg, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, d.trim_end());
        let ly = TOP + 12.0 + 16.0 * i as f64;
        let lx = WIDTH - RIGHT + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        );
        let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(name));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Renders every chart whose CSV exists in `dir`.
pub fn render_all(dir: &Path, produced: &[PathBuf]) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for spec in PLOTS {
        let csv_path = dir.join(spec.csv);
        if !produced.contains(&csv_path) {
            continue;
        }
        let series = read_series(&csv_path, spec).map_err(std::io::Error::other)?;
        let svg = render(spec.title, spec.x, &series);
        out.push(write_atomic(dir, spec.svg, svg.as_bytes())?);
    }
    Ok(out)
}
