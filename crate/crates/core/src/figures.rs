//! SVG figures rendered from CSV tables on disk.
//!
//! The renderer is deliberately small: linear or log axes, polyline and
//! marker series, a legend and optional vertical markers. Output depends
//! only on the CSV contents and the [`FigureSpec`], so regenerating a figure
//! from the same table is byte-identical.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::table::{read_csv, RawTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FigureId {
    SpectrumCurves,
    RestrictionBounds,
    KnappScaling,
    DecayScatter,
}

impl FigureId {
    pub const ALL: [FigureId; 4] =
        [FigureId::SpectrumCurves, FigureId::RestrictionBounds, FigureId::KnappScaling, FigureId::DecayScatter];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::SpectrumCurves => "spectrum_curves",
            FigureId::RestrictionBounds => "restriction_bounds",
            FigureId::KnappScaling => "knapp_scaling",
            FigureId::DecayScatter => "decay_scatter",
        }
    }

    pub fn parse(name: &str) -> Option<FigureId> {
        FigureId::ALL.into_iter().find(|f| f.name() == name)
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub id: FigureId,
    /// CSV the figure is drawn from.
    pub table: PathBuf,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub palette: Vec<String>,
}

impl FigureSpec {
    pub fn new(id: FigureId, table: impl Into<PathBuf>) -> Self {
        FigureSpec { id, table: table.into(), x_range: None, y_range: None, palette: PALETTE.iter().map(|c| c.to_string()).collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub series: Vec<Series>,
    /// Vertical dashed lines at `x` with a caption.
    pub markers: Vec<(f64, String)>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn tick_label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.0e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// About five round tick values covering `[lo, hi]`.
fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|i| i as f64 * step).collect()
}

impl Chart {
    fn transformed(&self, (x, y): (f64, f64)) -> Option<(f64, f64)> {
        let x = if self.log_x { (x > 0.0).then(|| x.log10())? } else { x };
        let y = if self.log_y { (y > 0.0).then(|| y.log10())? } else { y };
        (x.is_finite() && y.is_finite()).then_some((x, y))
    }

    fn bounds(&self) -> ((f64, f64), (f64, f64)) {
        let pts: Vec<(f64, f64)> = self.series.iter().flat_map(|s| s.points.iter().filter_map(|&p| self.transformed(p))).collect();
        let span = |vals: Vec<f64>| -> (f64, f64) {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if !lo.is_finite() {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 {
                (lo - 0.5, hi + 0.5)
            } else {
                let pad = 0.04 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        let fix = |r: Option<(f64, f64)>, log: bool, auto: (f64, f64)| match r {
            Some((a, b)) if log => (a.log10(), b.log10()),
            Some(r) => r,
            None => auto,
        };
        let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        xs.extend(self.markers.iter().filter_map(|(x, _)| self.transformed((*x, 1.0)).map(|p| p.0)));
        let x = fix(self.x_range, self.log_x, span(xs));
        let y = fix(self.y_range, self.log_y, span(pts.iter().map(|p| p.1).collect()));
        (x, y)
    }

    pub fn to_svg(&self) -> String {
        let ((x0, x1), (y0, y1)) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
        let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(&self.title));
        let _ = writeln!(out, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);

        let ticks = |lo: f64, hi: f64, log: bool| -> Vec<(f64, String)> {
            if log {
                let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
                let every = ((b - a) / 6 + 1).max(1);
                (a..=b).filter(|e| (e - a) % every == 0).map(|e| (e as f64, format!("1e{e}"))).collect()
            } else {
                linear_ticks(lo, hi).into_iter().map(|v| (v, tick_label(v))).collect()
            }
        };
        for (v, label) in ticks(x0, x1, self.log_x) {
            let x = px(v);
            let _ = writeln!(out, r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, TOP + ph, TOP + ph + 5.0);
            let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#, TOP + ph + 18.0);
        }
        for (v, label) in ticks(y0, y1, self.log_y) {
            let y = py(v);
            let _ = writeln!(out, r#"<line x1="{:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/>"#, LEFT - 5.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#, LEFT - 8.0, y + 4.0);
        }
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + pw / 2.0, HEIGHT - 12.0, escape(&self.x_label));
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            TOP + ph / 2.0,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );

        for (x, label) in &self.markers {
            let Some((tx, _)) = self.transformed((*x, 1.0)) else { continue };
            let x = px(tx);
            let _ = writeln!(
                out,
                r##"<line class="marker" x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#777777" stroke-dasharray="2,3"/>"##,
                TOP + ph
            );
            let _ = writeln!(out, r##"<text x="{:.2}" y="{:.2}" fill="#555555" font-size="10">{}</text>"##, x + 3.0, TOP + 12.0, escape(label));
        }

        for (i, s) in self.series.iter().enumerate() {
            let pts: Vec<(f64, f64)> = s.points.iter().filter_map(|&p| self.transformed(p)).map(|(x, y)| (px(x), py(y))).collect();
            if pts.len() >= 2 && s.style != Style::Markers {
                let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6,4""# } else { "" };
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                    d.join(" "),
                    s.color
                );
            } else {
                for (x, y) in &pts {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="{}"/>"#, s.color);
                }
            }
            let ly = TOP + 10.0 + 18.0 * i as f64;
            let lx = WIDTH - RIGHT + 12.0;
            if s.style == Style::Markers || pts.len() < 2 {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{ly:.2}" r="3" fill="{}"/>"#, lx + 10.0, s.color);
            } else {
                let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6,4""# } else { "" };
                let _ = writeln!(out, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"{dash}/>"#, lx + 20.0, s.color);
            }
            let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn color(palette: &[String], i: usize) -> String {
    palette.get(i % palette.len().max(1)).cloned().unwrap_or_else(|| PALETTE[i % PALETTE.len()].to_string())
}

fn group_by_k(raw: &RawTable, y_col: &str) -> Result<BTreeMap<i64, Vec<(f64, f64)>>> {
    let ks = raw.numbers("k")?;
    let theta = raw.numbers("theta")?;
    let ys = raw.numbers(y_col)?;
    let mut out: BTreeMap<i64, Vec<(f64, f64)>> = BTreeMap::new();
    for ((k, t), y) in ks.iter().zip(&theta).zip(&ys) {
        if y.is_finite() {
            out.entry(*k as i64).or_default().push((*t, *y));
        }
    }
    for pts in out.values_mut() {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    Ok(out)
}

fn spectrum_chart(raw: &RawTable, palette: &[String]) -> Result<Chart> {
    let theory = group_by_k(raw, "theory")?;
    let empirical = if raw.has_column("s_star") { group_by_k(raw, "s_star")? } else { BTreeMap::new() };
    let mut series = Vec::new();
    let mut markers = Vec::new();
    for (i, (k, pts)) in theory.iter().enumerate() {
        series.push(Series { label: format!("k={k} theory"), points: pts.clone(), style: Style::Line, color: color(palette, i) });
        if let Some(emp) = empirical.get(k) {
            series.push(Series { label: format!("k={k} estimate"), points: emp.clone(), style: Style::Markers, color: color(palette, i) });
        }
        if *k > 2 {
            let t = (*k as f64 - 2.0) / (*k as f64 - 0.5);
            markers.push((t, format!("k={k}")));
        }
    }
    Ok(Chart {
        title: "Fourier spectrum of the surface measure".into(),
        x_label: "theta".into(),
        y_label: "dim_F^theta".into(),
        log_x: false,
        log_y: false,
        x_range: None,
        y_range: None,
        series,
        markers,
    })
}

fn bounds_chart(raw: &RawTable, palette: &[String]) -> Result<Chart> {
    let ks = raw.numbers("k")?;
    let cols = [("stein_tomas", "Stein-Tomas"), ("sufficient", "sufficient"), ("necessary", "necessary"), ("hambrook_laba", "Hambrook-Laba")];
    let mut series = Vec::new();
    for (i, (col, label)) in cols.iter().enumerate() {
        let ys = raw.numbers(col)?;
        let style = if i == 0 { Style::Dashed } else { Style::Line };
        series.push(Series { label: label.to_string(), points: ks.iter().copied().zip(ys).collect(), style, color: color(palette, i) });
    }
    Ok(Chart {
        title: "Bounds for the range of q".into(),
        x_label: "k".into(),
        y_label: "q".into(),
        log_x: false,
        log_y: false,
        x_range: None,
        y_range: None,
        series,
        markers: Vec::new(),
    })
}

fn knapp_chart(raw: &RawTable, palette: &[String]) -> Result<Chart> {
    let delta = raw.numbers("delta")?;
    let mut series = Vec::new();
    for (i, col) in ["lhs_closed", "lhs_quadrature", "rhs"].iter().enumerate() {
        let ys = raw.numbers(col)?;
        let style = if i == 0 { Style::Dashed } else { Style::Line };
        series.push(Series { label: col.to_string(), points: delta.iter().copied().zip(ys).collect(), style, color: color(palette, i) });
    }
    Ok(Chart {
        title: "Knapp scaling".into(),
        x_label: "delta".into(),
        y_label: "norm".into(),
        log_x: true,
        log_y: true,
        x_range: None,
        y_range: None,
        series,
        markers: Vec::new(),
    })
}

fn decay_chart(raw: &RawTable, palette: &[String]) -> Result<Chart> {
    let xi = raw.numbers("xi_j")?;
    let y = raw.numbers("y")?;
    let modulus = raw.numbers("modulus")?;
    let regime = raw.texts("regime")?;
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for i in 0..xi.len() {
        groups.entry(regime[i].clone()).or_default().push((xi[i].abs().max(y[i].abs()), modulus[i]));
    }
    let series = groups
        .into_iter()
        .enumerate()
        .map(|(i, (label, points))| Series { label, points, style: Style::Markers, color: color(palette, i) })
        .collect();
    Ok(Chart {
        title: "Factor moduli by decay regime".into(),
        x_label: "max(|xi_j|, |y|)".into(),
        y_label: "|mu_j hat|".into(),
        log_x: true,
        log_y: true,
        x_range: None,
        y_range: None,
        series,
        markers: Vec::new(),
    })
}

pub fn build_chart(spec: &FigureSpec) -> Result<Chart> {
    if !spec.table.is_file() {
        return Err(Error::validation(format!(
            "figure {} needs table {}, which does not exist",
            spec.id.name(),
            spec.table.display()
        )));
    }
    let raw = read_csv(&spec.table)?;
    let mut chart = match spec.id {
        FigureId::SpectrumCurves => spectrum_chart(&raw, &spec.palette)?,
        FigureId::RestrictionBounds => bounds_chart(&raw, &spec.palette)?,
        FigureId::KnappScaling => knapp_chart(&raw, &spec.palette)?,
        FigureId::DecayScatter => decay_chart(&raw, &spec.palette)?,
    };
    chart.x_range = spec.x_range.or(chart.x_range);
    chart.y_range = spec.y_range.or(chart.y_range);
    Ok(chart)
}

pub fn render_svg(spec: &FigureSpec) -> Result<String> {
    Ok(build_chart(spec)?.to_svg())
}

pub fn emit_svg(spec: &FigureSpec, out: &Path) -> Result<()> {
    std::fs::write(out, render_svg(spec)?)?;
    Ok(())
}
