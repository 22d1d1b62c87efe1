use std::fmt::Write;

use super::engine::Market;
use crate::error::Result;
use crate::query::{LinearQuery, PricedQuery};

/// `count` variances spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count).map(|k| 10f64.powf(a + (b - a) * k as f64 / (count - 1) as f64)).collect(),
    }
}

/// `(v, π(q, v))` for each variance.
pub fn price_curve(market: &Market, q: &LinearQuery, variances: &[f64]) -> Result<Vec<(f64, f64)>> {
    variances
        .iter()
        .map(|&v| Ok((v, market.price(&PricedQuery::new(q.clone(), v)?)?)))
        .collect()
}

pub fn curve_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("variance,price\n");
    for (v, p) in points {
        writeln!(out, "{v},{p:.6}").expect("writing to a string");
    }
    out
}

/// A standalone SVG line chart, log-scaled on both axes where possible.
pub fn curve_svg(points: &[(f64, f64)], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    let finite: Vec<(f64, f64)> =
        points.iter().copied().filter(|(v, p)| v.is_finite() && *v > 0.0 && p.is_finite() && *p > 0.0).collect();
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
    if finite.len() >= 2 {
        let lx: Vec<f64> = finite.iter().map(|(v, _)| v.log10()).collect();
        let ly: Vec<f64> = finite.iter().map(|(_, p)| p.log10()).collect();
        let (x0, x1) = bounds(&lx);
        let (y0, y1) = bounds(&ly);
        let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
        let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
        let path: Vec<String> = lx.iter().zip(&ly).map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        let _ = writeln!(
            svg,
            "<line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
             <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
             <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">variance (1e{x0:.1} to 1e{x1:.1})</text>\n\
             <text x=\"14\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 {})\">price (1e{y0:.1} to 1e{y1:.1})</text>",
            path.join(" "),
            W / 2.0,
            H - 12.0,
            H / 2.0,
            H / 2.0,
            b = H - PAD,
            r = W - PAD,
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
