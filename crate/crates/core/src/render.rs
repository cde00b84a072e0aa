//! CSV and SVG output for families of frontiers sharing one risk axis.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::frontier::{classify_budget, sample_frontier, ACoefficients, Branch, FrontierPoint};

pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCurve {
    pub budget: f64,
    pub points: Vec<FrontierPoint>,
}

/// Frontier curves in descending budget order, with an optional
/// constant-return guide line.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierFamily {
    universe_label: String,
    curves: Vec<FrontierCurve>,
    guide_return: Option<f64>,
}

impl FrontierFamily {
    pub fn new(
        universe_label: impl Into<String>,
        mut curves: Vec<FrontierCurve>,
        guide_return: Option<f64>,
    ) -> Result<Self> {
        if curves.is_empty() || curves.iter().all(|c| c.points.is_empty()) {
            return Err(Error::Dimension("frontier family has no points".into()));
        }
        curves.sort_by(|a, b| b.budget.total_cmp(&a.budget));
        Ok(Self {
            universe_label: universe_label.into(),
            curves,
            guide_return,
        })
    }

    /// Samples every budget up to the same `risk_max`.
    pub fn sample(
        universe_label: impl Into<String>,
        coeffs: &ACoefficients,
        budgets: &[f64],
        risk_max: f64,
        samples: usize,
        guide_return: Option<f64>,
    ) -> Result<Self> {
        let curves = budgets
            .iter()
            .map(|&budget| {
                Ok(FrontierCurve {
                    budget,
                    points: sample_frontier(coeffs, budget, risk_max, samples)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(universe_label, curves, guide_return)
    }

    pub fn universe_label(&self) -> &str {
        &self.universe_label
    }

    pub fn curves(&self) -> &[FrontierCurve] {
        &self.curves
    }

    pub fn guide_return(&self) -> Option<f64> {
        self.guide_return
    }

    fn points(&self) -> impl Iterator<Item = &FrontierPoint> {
        self.curves.iter().flat_map(|c| c.points.iter())
    }
}

/// Formats like C's `%.12g`: twelve significant digits, trailing zeros
/// trimmed, exponent form outside `[1e-5, 1e12)`. Negative zero prints as `0`.
pub fn format_number(x: f64) -> String {
    format_sig(x, SIGNIFICANT_DIGITS)
}

fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        return format!(
            "{mantissa}e{}{:02}",
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        );
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "budget,branch,risk,ret";

/// Rows ordered by budget (descending), branch (upper first), risk (ascending).
pub fn family_to_csv(family: &FrontierFamily) -> String {
    let mut rows: Vec<(f64, &FrontierPoint)> = family
        .curves
        .iter()
        .flat_map(|c| c.points.iter().map(move |p| (c.budget, p)))
        .collect();
    rows.sort_by(|(ba, pa), (bb, pb)| {
        bb.total_cmp(ba)
            .then(pa.branch.cmp(&pb.branch))
            .then(pa.risk.total_cmp(&pb.risk))
    });
    let mut out = String::with_capacity(32 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (budget, p) in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            format_number(budget),
            p.branch,
            format_number(p.risk),
            format_number(p.ret)
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub budget: f64,
    pub branch: Branch,
    pub risk: f64,
    pub ret: f64,
}

pub fn parse_family_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header '{CSV_HEADER}'"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let line_no = i + 1;
            let cells: Vec<&str> = line.trim_end().split(',').collect();
            if cells.len() != 4 {
                return Err(Error::Shape {
                    line: line_no,
                    expected: 4,
                    found: cells.len(),
                });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    line: line_no,
                    message: e.to_string(),
                })
            };
            Ok(CsvRow {
                budget: num(cells[0])?,
                branch: cells[1].parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("bad branch '{}'", cells[1]),
                })?,
                risk: num(cells[2])?,
                ret: num(cells[3])?,
            })
        })
        .collect()
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

// margins as fractions of the canvas; the right one holds the legend
const MARGIN_LEFT: f64 = 0.09;
const MARGIN_RIGHT: f64 = 0.22;
const MARGIN_TOP: f64 = 0.05;
const MARGIN_BOTTOM: f64 = 0.1;

/// Affine map from data (risk, return) to viewport pixels.
#[derive(Debug, Clone, Copy)]
pub struct Viewport {
    pub risk_max: f64,
    pub ret_min: f64,
    pub ret_max: f64,
    pub width: f64,
    pub height: f64,
}

impl Viewport {
    pub fn fit(family: &FrontierFamily, width: f64, height: f64) -> Result<Self> {
        let mut risk_hi = 0.0f64;
        let mut ret_lo = 0.0f64;
        let mut ret_hi = 0.0f64;
        for p in family.points() {
            risk_hi = risk_hi.max(p.risk);
            ret_lo = ret_lo.min(p.ret);
            ret_hi = ret_hi.max(p.ret);
        }
        let first = family.points().next().ok_or(Error::DegenerateRange)?;
        if family
            .points()
            .all(|p| p.risk == first.risk && p.ret == first.ret)
        {
            return Err(Error::DegenerateRange);
        }
        if let Some(g) = family.guide_return {
            ret_lo = ret_lo.min(g);
            ret_hi = ret_hi.max(g);
        }
        let vp = Self {
            risk_max: 1.05 * risk_hi,
            ret_min: 1.05 * ret_lo,
            ret_max: 1.05 * ret_hi,
            width,
            height,
        };
        if !(vp.risk_max > 0.0) || !(vp.ret_max > vp.ret_min) {
            return Err(Error::DegenerateRange);
        }
        Ok(vp)
    }

    fn plot_width(&self) -> f64 {
        self.width * (1.0 - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn plot_height(&self) -> f64 {
        self.height * (1.0 - MARGIN_TOP - MARGIN_BOTTOM)
    }

    pub fn x(&self, risk: f64) -> f64 {
        self.width * MARGIN_LEFT + risk / self.risk_max * self.plot_width()
    }

    pub fn y(&self, ret: f64) -> f64 {
        self.height * MARGIN_TOP
            + (self.ret_max - ret) / (self.ret_max - self.ret_min) * self.plot_height()
    }
}

fn short(x: f64) -> String {
    format_sig(x, 4)
}

/// Standalone SVG 1.1 plot of the family, one polyline per budget and branch.
pub fn family_to_svg(family: &FrontierFamily, width: u32, height: u32) -> Result<String> {
    if width < 100 || height < 100 {
        return Err(Error::Dimension(format!(
            "plot must be at least 100x100 pixels, got {width}x{height}"
        )));
    }
    let vp = Viewport::fit(family, f64::from(width), f64::from(height))?;
    let (w, h) = (vp.width, vp.height);
    let f = format_number;
    let mut s = String::new();

    let _ = writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#
    );
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        f(w),
        f(h),
        f(w),
        f(h)
    );
    let _ = writeln!(
        s,
        "<title>Efficient frontiers: {}</title>",
        escape(&family.universe_label)
    );
    let _ = writeln!(
        s,
        r##"<rect x="0" y="0" width="{}" height="{}" fill="#ffffff"/>"##,
        f(w),
        f(h)
    );

    // frame and zero-return axis
    let (x0, x1) = (vp.x(0.0), vp.x(vp.risk_max));
    let (y_top, y_bottom) = (vp.y(vp.ret_max), vp.y(vp.ret_min));
    let _ = writeln!(
        s,
        r##"<g id="axes" stroke="#000000" stroke-width="1" fill="none">"##
    );
    let _ = writeln!(
        s,
        r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
        f(x0),
        f(y_top),
        f(x1 - x0),
        f(y_bottom - y_top)
    );
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#999999"/>"##,
        f(x0),
        f(vp.y(0.0)),
        f(x1),
        f(vp.y(0.0))
    );
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r#"<g id="ticks" font-family="sans-serif" font-size="11">"#
    );
    for i in 0..=4 {
        let risk = vp.risk_max * f64::from(i) / 4.0;
        let x = vp.x(risk);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000000"/><text x="{}" y="{}" text-anchor="middle">{}</text>"##,
            f(x),
            f(y_bottom),
            f(x),
            f(y_bottom + 5.0),
            f(x),
            f(y_bottom + 18.0),
            short(risk)
        );
        let ret = vp.ret_min + (vp.ret_max - vp.ret_min) * f64::from(i) / 4.0;
        let y = vp.y(ret);
        let _ = writeln!(
            s,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000000"/><text x="{}" y="{}" text-anchor="end">{}</text>"##,
            f(x0 - 5.0),
            f(y),
            f(x0),
            f(y),
            f(x0 - 8.0),
            f(y + 4.0),
            short(ret)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text id="risk-label" x="{}" y="{}" font-family="serif" font-size="16" text-anchor="middle">Σ</text>"#,
        f((x0 + x1) / 2.0),
        f(h - 10.0)
    );
    let _ = writeln!(
        s,
        r#"<text id="return-label" x="{}" y="{}" font-family="serif" font-size="16" text-anchor="middle">R</text>"#,
        f(0.03 * w),
        f((y_top + y_bottom) / 2.0)
    );

    if let Some(g) = family.guide_return {
        let _ = writeln!(
            s,
            r##"<line id="guide" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#444444" stroke-width="1" stroke-dasharray="2,4"/>"##,
            f(x0),
            f(vp.y(g)),
            f(x1),
            f(vp.y(g))
        );
    }

    let _ = writeln!(s, r#"<g id="frontiers" fill="none" stroke-width="1.5">"#);
    for (idx, curve) in family.curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        for branch in Branch::BOTH {
            let mut pts: Vec<&FrontierPoint> =
                curve.points.iter().filter(|p| p.branch == branch).collect();
            if pts.is_empty() {
                continue;
            }
            pts.sort_by(|a, b| a.risk.total_cmp(&b.risk));
            let coords: Vec<String> = pts
                .iter()
                .map(|p| format!("{},{}", f(vp.x(p.risk)), f(vp.y(p.ret))))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline data-budget="{}" data-branch="{}" stroke="{}" points="{}"/>"#,
                f(curve.budget),
                branch,
                color,
                coords.join(" ")
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(
        s,
        r#"<g id="legend" font-family="sans-serif" font-size="12">"#
    );
    let lx = x1 + 0.02 * w;
    for (idx, curve) in family.curves.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        let ly = y_top + 10.0 + 18.0 * idx as f64;
        let class = classify_budget(curve.budget)
            .map(|c| c.as_str())
            .unwrap_or("?");
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/><text x="{}" y="{}">B = {} ({})</text>"#,
            f(lx),
            f(ly),
            f(lx + 20.0),
            f(ly),
            color,
            f(lx + 26.0),
            f(ly + 4.0),
            short(curve.budget),
            class
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
