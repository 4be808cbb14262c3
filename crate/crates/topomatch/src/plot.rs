//! Accuracy summaries drawn as a deterministic SVG box plot.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::IoError;
use crate::sim::McReport;

/// Quantile by linear interpolation of order statistics (the type-7
/// rule: rank `h = (n - 1) q`, then interpolate between the straddling
/// values). `sorted` must be ascending and non-empty, `q` in [0, 1].
pub fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    assert!((0.0..=1.0).contains(&q), "quantile level out of range");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    sorted[lo] + (h - lo as f64) * (sorted[lo + 1] - sorted[lo])
}

/// Five-number accuracy summary for one noise level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxStats {
    pub sigma: f64,
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
    /// Accuracies beyond either whisker, ascending.
    pub outliers: Vec<f64>,
}

/// Summarizes accuracy per noise level, in grid order.
pub fn box_stats(report: &McReport) -> Result<Vec<BoxStats>, IoError> {
    if report.rows.is_empty() {
        return Err(IoError::EmptyReport);
    }
    let mut out = Vec::new();
    for &sigma in &report.config.sigma_grid {
        let mut acc: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| r.sigma.to_bits() == sigma.to_bits())
            .map(|r| r.accuracy)
            .collect();
        if acc.is_empty() {
            continue;
        }
        acc.sort_by(|a, b| a.partial_cmp(b).expect("finite accuracy"));
        let q05 = quantile_type7(&acc, 0.05);
        let q95 = quantile_type7(&acc, 0.95);
        out.push(BoxStats {
            sigma,
            q05,
            q25: quantile_type7(&acc, 0.25),
            q50: quantile_type7(&acc, 0.50),
            q75: quantile_type7(&acc, 0.75),
            q95,
            outliers: acc.iter().copied().filter(|&a| a < q05 || a > q95).collect(),
        });
    }
    if out.is_empty() {
        return Err(IoError::EmptyReport);
    }
    Ok(out)
}

const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 18.0;
const BOTTOM: f64 = 46.0;
const PLOT_H: f64 = 320.0;
const SLOT: f64 = 72.0;
const BOX_HALF: f64 = 17.0;
const CAP_HALF: f64 = 10.0;

fn y_of(accuracy: f64) -> f64 {
    TOP + (1.0 - accuracy) * PLOT_H
}

/// Renders one box per noise level: whiskers at the 5% and 95%
/// quantiles, box at 25%/75%, a median bar, and every point beyond a
/// whisker as a dot. The accuracy axis is fixed to [0, 1] and all
/// coordinates print with two decimals, so the bytes are a pure
/// function of the report.
pub fn emit_boxplot(report: &McReport) -> Result<String, IoError> {
    macro_rules! put {
        ($($t:tt)*) => { writeln!($($t)*).expect("string write") };
    }
    let stats = box_stats(report)?;
    let width = LEFT + RIGHT + SLOT * stats.len() as f64;
    let height = TOP + PLOT_H + BOTTOM;
    let mut s = String::new();
    put!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="monospace" font-size="11">"#
    );
    put!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let y = y_of(tick);
        put!(
            s,
            r##"<line x1="{LEFT:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            width - RIGHT
        );
        put!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{tick:.2}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    put!(
        s,
        r##"<line x1="{LEFT:.2}" y1="{TOP:.2}" x2="{LEFT:.2}" y2="{:.2}" stroke="black"/>"##,
        TOP + PLOT_H
    );
    put!(
        s,
        r##"<line x1="{LEFT:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"##,
        TOP + PLOT_H,
        width - RIGHT,
        TOP + PLOT_H
    );
    put!(
        s,
        r#"<text transform="rotate(-90 14 {:.2})" x="14" y="{:.2}" text-anchor="middle">accuracy</text>"#,
        TOP + PLOT_H / 2.0,
        TOP + PLOT_H / 2.0
    );
    put!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">sigma</text>"#,
        LEFT + (width - LEFT - RIGHT) / 2.0,
        height - 10.0
    );
    for (i, st) in stats.iter().enumerate() {
        let cx = LEFT + (i as f64 + 0.5) * SLOT;
        for (lo, hi) in [(st.q05, st.q25), (st.q75, st.q95)] {
            put!(
                s,
                r##"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="#333333"/>"##,
                y_of(lo),
                y_of(hi)
            );
        }
        for cap in [st.q05, st.q95] {
            put!(
                s,
                r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333"/>"##,
                cx - CAP_HALF,
                y_of(cap),
                cx + CAP_HALF,
                y_of(cap)
            );
        }
        put!(
            s,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#dbe9f4" stroke="#333333"/>"##,
            cx - BOX_HALF,
            y_of(st.q75),
            2.0 * BOX_HALF,
            y_of(st.q25) - y_of(st.q75)
        );
        put!(
            s,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333" stroke-width="2"/>"##,
            cx - BOX_HALF,
            y_of(st.q50),
            cx + BOX_HALF,
            y_of(st.q50)
        );
        for &o in &st.outliers {
            put!(
                s,
                r##"<circle cx="{cx:.2}" cy="{:.2}" r="2.5" fill="none" stroke="#333333"/>"##,
                y_of(o)
            );
        }
        put!(
            s,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + PLOT_H + 18.0,
            st.sigma
        );
    }
    put!(s, "</svg>");
    Ok(s)
}
