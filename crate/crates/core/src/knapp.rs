//! Knapp caps on the graph and the two sides of the extension inequality.
//!
//! Over a `δ`-box in parameter space the graph sits inside a box `R` of
//! sides `2δ × ⋯ × 2δ × H`, `H` the oscillation of the sheet. Testing the
//! extension estimate with `g = 1_R` gives `‖g‖_{L^p(μ)} = μ(R)^{1/p}` on
//! one side, and on the other side `|(gμ)^|` stays comparable to `μ(R)`
//! on the shrunken dual box `R*/100`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::windowed_transform_1d;
use crate::paths::AdditiveSheet;
use crate::quad::GaussLegendre;
use crate::spectrum::threshold::ols_slope;
use crate::table::{Column, Table};

/// Caps narrower than this many grid cells are not resolved.
pub const MIN_CAP_CELLS: f64 = 4.0;
pub const MIN_NODES: usize = 16;
/// `R*/100`: each dual side is shrunk by this factor around the origin.
pub const DUAL_SHRINK: f64 = 100.0;
/// Hölder exponent used for Brownian runs unless overridden.
pub const DEFAULT_ALPHA: f64 = 0.45;

#[derive(Debug, Clone, PartialEq)]
pub struct KnappCap {
    /// Centre after clamping into `[δ, 1 − δ]^k`.
    pub center: Vec<f64>,
    pub delta: f64,
    pub t_box: Vec<(f64, f64)>,
    /// Exact range of the interpolated sheet over the t-box.
    pub height: (f64, f64),
    /// `μ(R)`; the graph over the t-box is all of `R ∩ graph`, so this is `(2δ)^k`.
    pub mass: f64,
    pub alpha_eff: f64,
}

impl KnappCap {
    pub fn k(&self) -> usize {
        self.center.len()
    }

    pub fn oscillation(&self) -> f64 {
        self.height.1 - self.height.0
    }

    /// Vertical side of `R`; a flat cap is given unit height so its dual box
    /// stays bounded.
    pub fn height_side(&self) -> f64 {
        let osc = self.oscillation();
        if osc > 0.0 {
            osc
        } else {
            1.0
        }
    }

    /// Half-widths of `R*/100`: `(horizontal, vertical)`.
    pub fn dual_half_widths(&self) -> (f64, f64) {
        let horizontal = 1.0 / (2.0 * DUAL_SHRINK * 2.0 * self.delta);
        let vertical = 1.0 / (2.0 * DUAL_SHRINK * self.height_side());
        (horizontal, vertical)
    }

    /// Lebesgue volume of `R*/100`.
    pub fn dual_volume(&self) -> f64 {
        let (hh, hv) = self.dual_half_widths();
        (2.0 * hh).powi(self.k() as i32) * 2.0 * hv
    }
}

pub fn build_cap(sheet: &AdditiveSheet, s: &[f64], delta: f64) -> Result<KnappCap> {
    let k = sheet.k();
    if s.len() != k {
        return Err(Error::validation(format!("centre has {} coordinates, sheet has {k}", s.len())));
    }
    if s.iter().any(|c| !c.is_finite()) {
        return Err(Error::validation("centre must be finite"));
    }
    if !(delta > 0.0 && delta <= 0.25) {
        return Err(Error::validation(format!("delta = {delta} outside (0, 1/4]")));
    }
    let h = sheet.path(0).spacing();
    if delta < MIN_CAP_CELLS * h {
        return Err(Error::Resolution(format!(
            "delta = {delta} spans fewer than {MIN_CAP_CELLS} cells of width {h}"
        )));
    }
    let center: Vec<f64> = s.iter().map(|c| c.clamp(delta, 1.0 - delta)).collect();
    let t_box: Vec<(f64, f64)> = center.iter().map(|c| (c - delta, c + delta)).collect();
    let (mut lo, mut hi) = (0.0, 0.0);
    for (path, &(a, b)) in sheet.paths().iter().zip(&t_box) {
        let (m, mx) = path.range_on(a, b);
        lo += m;
        hi += mx;
    }
    let mut cap = KnappCap { center, delta, t_box, height: (lo, hi), mass: (2.0 * delta).powi(k as i32), alpha_eff: 0.0 };
    cap.alpha_eff = cap.height_side().ln() / delta.ln();
    Ok(cap)
}

/// Midpoint values of each factor for the cells whose midpoint is in `[a, b]`.
fn cells_in(path: &crate::paths::BrownianPath, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = path.spacing();
    let w = path.values();
    (0..path.segments())
        .map(|m| ((m as f64 + 0.5) * h, 0.5 * (w[m] + w[m + 1])))
        .filter(|&(t, _)| a <= t && t <= b)
        .collect()
}

/// `μ(R)` by counting grid cells whose midpoint graph point lies in `R`.
pub fn grid_mass(sheet: &AdditiveSheet, cap: &KnappCap) -> f64 {
    let per_axis: Vec<Vec<f64>> = sheet
        .paths()
        .iter()
        .zip(&cap.t_box)
        .map(|(p, &(a, b))| cells_in(p, a, b).into_iter().map(|(_, w)| w).collect())
        .collect();
    let mut count = 0u64;
    let mut idx = vec![0usize; per_axis.len()];
    if per_axis.iter().any(Vec::is_empty) {
        return 0.0;
    }
    loop {
        let w: f64 = idx.iter().zip(&per_axis).map(|(&i, v)| v[i]).sum();
        if cap.height.0 <= w && w <= cap.height.1 {
            count += 1;
        }
        let mut j = 0;
        while j < idx.len() {
            idx[j] += 1;
            if idx[j] < per_axis[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            break;
        }
    }
    count as f64 * sheet.path(0).spacing().powi(sheet.k() as i32)
}

/// Whether every grid graph point over the t-box lies in `R`.
pub fn graph_contained(sheet: &AdditiveSheet, cap: &KnappCap) -> bool {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (path, &(a, b)) in sheet.paths().iter().zip(&cap.t_box) {
        let h = path.spacing();
        let nodes: Vec<f64> = path
            .values()
            .iter()
            .enumerate()
            .filter(|(m, _)| {
                let t = *m as f64 * h;
                a <= t && t <= b
            })
            .map(|(_, w)| *w)
            .collect();
        if nodes.is_empty() {
            continue;
        }
        lo += nodes.iter().copied().fold(f64::INFINITY, f64::min);
        hi += nodes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    cap.height.0 <= lo && hi <= cap.height.1
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnappNorms {
    /// `μ(R)·|R*/100|^{1/q}`.
    pub lhs_closed: f64,
    /// `(∫_{R*/100} |(gμ)^|^q)^{1/q}` by tensor Gauss–Legendre.
    pub lhs_quadrature: f64,
    /// Same integral with `|·|` replaced by the positive part of the real
    /// part after removing the phase at the cap centre.
    pub lhs_real_part: f64,
    pub rhs: f64,
}

impl KnappNorms {
    pub fn lhs(&self) -> f64 {
        self.lhs_closed.max(self.lhs_quadrature)
    }
}

pub fn knapp_norms(sheet: &AdditiveSheet, cap: &KnappCap, p: f64, q: f64, nodes: usize) -> Result<KnappNorms> {
    if !(p >= 1.0 && q >= 1.0) || !p.is_finite() || !q.is_finite() {
        return Err(Error::validation(format!("need finite p, q >= 1, got p = {p}, q = {q}")));
    }
    if nodes < MIN_NODES {
        return Err(Error::validation(format!("{nodes} quadrature nodes per axis, need at least {MIN_NODES}")));
    }
    if cap.k() != sheet.k() {
        return Err(Error::validation("cap and sheet disagree on dimension"));
    }
    let k = sheet.k();
    let rhs = cap.mass.powf(1.0 / p);
    let lhs_closed = cap.mass * cap.dual_volume().powf(1.0 / q);

    let rule = GaussLegendre::new(nodes)?;
    let (hh, hv) = cap.dual_half_widths();
    let xi_nodes = rule.on(-hh, hh);
    let y_nodes = rule.on(-hv, hv);
    let centre_heights: Vec<f64> = sheet.paths().iter().zip(&cap.center).map(|(p, &c)| p.value_at(c)).collect();

    // Per y node: (Π_j ∫|I_j|^q, real-part integral over the ξ tensor grid).
    let per_y: Vec<(f64, f64)> = y_nodes
        .par_iter()
        .map(|&(y, _)| -> Result<(f64, f64)> {
            let mut factors = Vec::with_capacity(k);
            let mut modulus_product = 1.0;
            #[allow(clippy::needless_range_loop)] // j indexes four parallel arrays
            for j in 0..k {
                let (a, b) = cap.t_box[j];
                let row: Vec<Complex64> = xi_nodes
                    .iter()
                    .map(|&(xi, _)| {
                        let i = windowed_transform_1d(sheet.path(j), a, b, xi, y)?;
                        let (s, c) = (2.0 * PI * (xi * cap.center[j] + y * centre_heights[j])).sin_cos();
                        Ok(i * Complex64::new(c, s))
                    })
                    .collect::<Result<_>>()?;
                modulus_product *= row.iter().zip(&xi_nodes).map(|(z, (_, w))| w * z.norm().powf(q)).sum::<f64>();
                factors.push(row);
            }
            Ok((modulus_product, real_part_tensor(&factors, &xi_nodes, q)))
        })
        .collect::<Result<_>>()?;
    let total: f64 = per_y.iter().zip(&y_nodes).map(|((m, _), (_, w))| w * m).sum();
    let real: f64 = per_y.iter().zip(&y_nodes).map(|((_, r), (_, w))| w * r).sum();
    Ok(KnappNorms { lhs_closed, lhs_quadrature: total.powf(1.0 / q), lhs_real_part: real.powf(1.0 / q), rhs })
}

/// `Σ_{ξ grid} Π w · max(Re Π_j J_j, 0)^q` over the full tensor grid.
fn real_part_tensor(factors: &[Vec<Complex64>], xi_nodes: &[(f64, f64)], q: f64) -> f64 {
    fn go(factors: &[Vec<Complex64>], xi_nodes: &[(f64, f64)], q: f64, j: usize, acc: Complex64, weight: f64) -> f64 {
        if j == factors.len() {
            return weight * acc.re.max(0.0).powf(q);
        }
        factors[j].iter().zip(xi_nodes).map(|(z, (_, w))| go(factors, xi_nodes, q, j + 1, acc * z, weight * w)).sum()
    }
    go(factors, xi_nodes, q, 0, Complex64::new(1.0, 0.0), 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Slope {
    pub value: f64,
    pub std_error: f64,
}

fn log_log_slope(x: &[f64], y: &[f64]) -> Result<Slope> {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (value, std_error) = ols_slope(&lx, &ly)?;
    Ok(Slope { value, std_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnappResult {
    pub k: usize,
    pub p: f64,
    pub q: f64,
    /// Hölder exponent the prediction is quoted for.
    pub alpha: f64,
    pub deltas: Vec<f64>,
    pub caps: Vec<KnappCap>,
    pub norms: Vec<KnappNorms>,
    pub lhs_exponent: Slope,
    pub rhs_exponent: Slope,
    /// Slope of `ln H` against `ln δ`.
    pub alpha_eff: Slope,
    pub ratio_exponent: Slope,
}

impl KnappResult {
    /// `(k(q − 1) − α)/q` at the measured `α_eff`.
    pub fn predicted_lhs_exponent(&self) -> f64 {
        self.predicted_lhs_exponent_at(self.alpha_eff.value)
    }

    pub fn predicted_lhs_exponent_at(&self, alpha: f64) -> f64 {
        (self.k as f64 * (self.q - 1.0) - alpha) / self.q
    }

    pub fn predicted_rhs_exponent(&self) -> f64 {
        self.k as f64 / self.p
    }

    /// `lhs/rhs` grows as `δ → 0` beyond two standard errors: the extension
    /// estimate fails at this `(p, q)`.
    pub fn violated(&self) -> bool {
        self.ratio_exponent.value + 2.0 * self.ratio_exponent.std_error < 0.0
    }

    pub fn to_table(&self) -> Result<Table> {
        let mut t = Table::new(vec![
            Column::real("delta"),
            Column::real("lhs_closed"),
            Column::real("lhs_quadrature"),
            Column::real("rhs"),
            Column::real("ratio"),
            Column::real("lhs_real_part"),
            Column::real("height"),
            Column::real("alpha_eff"),
        ]);
        for (cap, n) in self.caps.iter().zip(&self.norms) {
            t.push(vec![
                cap.delta.into(),
                n.lhs_closed.into(),
                n.lhs_quadrature.into(),
                n.rhs.into(),
                (n.lhs() / n.rhs).into(),
                n.lhs_real_part.into(),
                cap.height_side().into(),
                cap.alpha_eff.into(),
            ])?;
        }
        Ok(t)
    }
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.len() < 4 {
        return Err(Error::validation(format!("need at least 4 deltas, got {}", deltas.len())));
    }
    if deltas.iter().any(|d| !(*d > 0.0) || d.log2().fract() != 0.0) {
        return Err(Error::validation("deltas must be powers of two"));
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::validation("deltas must decrease"));
    }
    Ok(())
}

/// Powers of two `2^{-lo}, …, 2^{-hi}`.
pub fn dyadic_deltas(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|m| 2f64.powi(-m)).collect()
}

pub fn knapp_scaling_fit(
    sheet: &AdditiveSheet,
    s: &[f64],
    deltas: &[f64],
    p: f64,
    q: f64,
    alpha: f64,
    nodes: usize,
) -> Result<KnappResult> {
    check_deltas(deltas)?;
    let caps = deltas.iter().map(|&d| build_cap(sheet, s, d)).collect::<Result<Vec<_>>>()?;
    let norms = caps.par_iter().map(|c| knapp_norms(sheet, c, p, q, nodes)).collect::<Result<Vec<_>>>()?;
    let lhs: Vec<f64> = norms.iter().map(KnappNorms::lhs).collect();
    let rhs: Vec<f64> = norms.iter().map(|n| n.rhs).collect();
    let ratio: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a / b).collect();
    let heights: Vec<f64> = caps.iter().map(KnappCap::height_side).collect();
    Ok(KnappResult {
        k: sheet.k(),
        p,
        q,
        alpha,
        deltas: deltas.to_vec(),
        lhs_exponent: log_log_slope(deltas, &lhs)?,
        rhs_exponent: log_log_slope(deltas, &rhs)?,
        alpha_eff: log_log_slope(deltas, &heights)?,
        ratio_exponent: log_log_slope(deltas, &ratio)?,
        caps,
        norms,
    })
}

/// Mean over sheets of the slope of `ln H` against `ln δ` at one centre.
pub fn mean_alpha_eff(sheets: &[AdditiveSheet], s: &[f64], deltas: &[f64]) -> Result<f64> {
    if sheets.is_empty() {
        return Err(Error::validation("need at least one sheet"));
    }
    let mut total = 0.0;
    for sheet in sheets {
        let heights = deltas.iter().map(|&d| build_cap(sheet, s, d).map(|c| c.height_side())).collect::<Result<Vec<_>>>()?;
        total += log_log_slope(deltas, &heights)?.value;
    }
    Ok(total / sheets.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{make_sheet, BrownianPath};

    fn flat(k: usize, level: u32) -> AdditiveSheet {
        let z = BrownianPath::zero(level).unwrap();
        AdditiveSheet::from_paths(vec![z; k]).unwrap()
    }

    #[test]
    fn flat_cap_degenerates() {
        let cap = build_cap(&flat(1, 10), &[0.5], 1.0 / 16.0).unwrap();
        assert_eq!(cap.height, (0.0, 0.0));
        assert_eq!(cap.height_side(), 1.0);
        assert_eq!(cap.alpha_eff, 0.0);
    }

    #[test]
    fn cap_validation() {
        let sheet = make_sheet(&[1], 8).unwrap();
        assert!(matches!(build_cap(&sheet, &[0.5], 1.0 / 128.0), Err(Error::Resolution(_))));
        assert!(build_cap(&sheet, &[0.5], 0.3).is_err());
        assert!(build_cap(&sheet, &[0.5, 0.5], 0.1).is_err());
        let clamped = build_cap(&sheet, &[0.01], 1.0 / 8.0).unwrap();
        assert_eq!(clamped.center, vec![0.125]);
        assert_eq!(clamped.t_box, vec![(0.0, 0.25)]);
    }

    #[test]
    fn mass_matches_grid_count_and_graph_is_contained() {
        let sheet = make_sheet(&[17], 12).unwrap();
        let cap = build_cap(&sheet, &[0.5], 1.0 / 16.0).unwrap();
        assert_eq!(grid_mass(&sheet, &cap), cap.mass);
        assert_eq!(cap.mass, 0.125);
        assert!(graph_contained(&sheet, &cap));
        let sheet2 = make_sheet(&[3, 4], 8).unwrap();
        let cap2 = build_cap(&sheet2, &[0.3, 0.6], 1.0 / 16.0).unwrap();
        assert!(graph_contained(&sheet2, &cap2));
        assert!(grid_mass(&sheet2, &cap2) >= cap2.mass * (1.0 - 1e-12));
    }

    #[test]
    fn full_box_rhs_is_one() {
        let sheet = make_sheet(&[2], 8).unwrap();
        let cap = build_cap(&sheet, &[0.5], 0.25).unwrap();
        let whole = KnappCap { t_box: vec![(0.0, 1.0)], mass: 1.0, ..cap };
        let n = knapp_norms(&sheet, &whole, 2.0, 4.0, 16).unwrap();
        assert_eq!(n.rhs, 1.0);
    }

    #[test]
    fn transform_at_origin_is_cap_mass() {
        let sheet = make_sheet(&[9], 12).unwrap();
        let cap = build_cap(&sheet, &[0.5], 1.0 / 32.0).unwrap();
        let (a, b) = cap.t_box[0];
        let z = windowed_transform_1d(sheet.path(0), a, b, 0.0, 0.0).unwrap();
        assert!((z.norm() - cap.mass).abs() < 1e-15);
    }

    #[test]
    fn quadrature_close_to_closed_bound() {
        let sheet = make_sheet(&[23], 12).unwrap();
        let cap = build_cap(&sheet, &[0.5], 1.0 / 64.0).unwrap();
        let n = knapp_norms(&sheet, &cap, 2.0, 4.0, 16).unwrap();
        assert!(n.lhs_quadrature >= 0.5 * n.lhs_closed, "{n:?}");
        assert!(n.lhs_quadrature >= n.lhs_real_part * (1.0 - 1e-12));
        assert!(knapp_norms(&sheet, &cap, 2.0, 4.0, 8).is_err());
        assert!(knapp_norms(&sheet, &cap, 0.5, 4.0, 16).is_err());
    }

    #[test]
    fn real_part_bound_two_dimensional() {
        let sheet = make_sheet(&[5, 6], 10).unwrap();
        let cap = build_cap(&sheet, &[0.4, 0.7], 1.0 / 32.0).unwrap();
        let n = knapp_norms(&sheet, &cap, 2.0, 3.0, 16).unwrap();
        assert!(n.lhs_quadrature >= n.lhs_real_part * (1.0 - 1e-12));
        assert!(n.lhs_real_part > 0.0);
    }

    #[test]
    fn rhs_monotone_in_p() {
        // μ is a probability measure, so ‖1_R‖_{L^p(μ)} = μ(R)^{1/p} grows with p.
        let sheet = make_sheet(&[5], 10).unwrap();
        let cap = build_cap(&sheet, &[0.5], 1.0 / 16.0).unwrap();
        let mut last = 0.0;
        for p in [1.0, 1.5, 2.0, 4.0, 10.0] {
            let n = knapp_norms(&sheet, &cap, p, 2.0, 16).unwrap();
            assert!(n.rhs >= last && n.rhs <= 1.0);
            last = n.rhs;
        }
    }

    #[test]
    fn flat_sheet_scaling() {
        let deltas = dyadic_deltas(4, 8);
        let res = knapp_scaling_fit(&flat(1, 12), &[0.5], &deltas, 2.0, 4.0, 0.0, 16).unwrap();
        assert!(res.alpha_eff.value.abs() < 1e-12);
        assert!((res.lhs_exponent.value - 0.75).abs() < 0.05, "{:?}", res.lhs_exponent);
        assert!((res.rhs_exponent.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn delta_list_validation() {
        let sheet = make_sheet(&[5], 12).unwrap();
        assert!(knapp_scaling_fit(&sheet, &[0.5], &dyadic_deltas(4, 6), 2.0, 4.0, 0.45, 16).is_err());
        let mut inc = dyadic_deltas(4, 8);
        inc.reverse();
        assert!(knapp_scaling_fit(&sheet, &[0.5], &inc, 2.0, 4.0, 0.45, 16).is_err());
        assert!(matches!(
            knapp_scaling_fit(&sheet, &[0.5], &dyadic_deltas(6, 11), 2.0, 4.0, 0.45, 16),
            Err(Error::Resolution(_))
        ));
    }
}
