//! Finiteness thresholds from energy growth rates.

use crate::error::{Error, Result};
use crate::spectrum::energy::EnergyEstimate;

/// Growth rates above this count as divergent.
pub const BETA_CUTOFF: f64 = 0.05;
pub const MIN_RADII: usize = 5;
pub const MAX_S_STEP: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRate {
    pub s: f64,
    pub beta: f64,
    pub beta_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdFit {
    pub theta: f64,
    pub s_star: f64,
    pub s_err: f64,
    pub rates: Vec<GrowthRate>,
    /// Number of grid points with `β > BETA_CUTOFF`.
    pub divergent: usize,
}

/// Ordinary least squares `z = a + b x`; returns `(b, se(b))`.
pub fn ols_slope(x: &[f64], z: &[f64]) -> Result<(f64, f64)> {
    let n = x.len();
    if n < 2 || n != z.len() {
        return Err(Error::Numeric(format!("slope needs at least two paired points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let mz = z.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Numeric("slope design has no spread".into()));
    }
    let sxz: f64 = x.iter().zip(z).map(|(a, b)| (a - mx) * (b - mz)).sum();
    let b = sxz / sxx;
    let se = if n > 2 {
        let rss: f64 = x.iter().zip(z).map(|(a, c)| (c - mz - b * (a - mx)).powi(2)).sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((b, se))
}

/// Slope of `log I` against `log R` over the top half of the valid radii.
pub fn growth_rate(est: &EnergyEstimate) -> Result<GrowthRate> {
    let usable: Vec<(f64, f64)> = est
        .radii
        .iter()
        .zip(&est.values)
        .zip(&est.valid)
        .filter(|((_, v), ok)| **ok && **v > 0.0)
        .map(|((r, v), _)| (r.ln(), v.ln()))
        .collect();
    if usable.len() < MIN_RADII {
        return Err(Error::validation(format!(
            "s = {}: {} usable radii, need {MIN_RADII}",
            est.s,
            usable.len()
        )));
    }
    let top = &usable[usable.len() / 2..];
    let (x, z): (Vec<f64>, Vec<f64>) = top.iter().copied().unzip();
    let (beta, beta_se) = ols_slope(&x, &z)?;
    Ok(GrowthRate { s: est.s, beta, beta_se })
}

/// Fits `β(s) = (s − s*)/θ` over the divergent part of the grid.
///
/// The slope is held at `1/θ`, so every divergent grid point gives its own
/// estimate `s − θβ(s)` of the threshold; `s*` is their mean.
pub fn threshold_fit(estimates: &[EnergyEstimate], theta: f64) -> Result<ThresholdFit> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::validation(format!("theta = {theta} outside (0, 1]")));
    }
    if estimates.len() < 2 {
        return Err(Error::validation("s-grid needs at least two points"));
    }
    if estimates.iter().any(|e| e.theta != theta) {
        return Err(Error::validation("estimates belong to a different theta"));
    }
    if estimates.windows(2).any(|w| !(w[1].s > w[0].s) || w[1].s - w[0].s > MAX_S_STEP + 1e-12) {
        return Err(Error::validation(format!("s-grid must increase in steps of at most {MAX_S_STEP}")));
    }
    let rates = estimates.iter().map(growth_rate).collect::<Result<Vec<_>>>()?;
    let roots: Vec<f64> = rates.iter().filter(|r| r.beta > BETA_CUTOFF).map(|r| r.s - theta * r.beta).collect();
    if roots.is_empty() {
        return Err(Error::Coverage(format!(
            "no divergent growth on s in [{}, {}]; widen the grid upwards",
            estimates[0].s,
            estimates[estimates.len() - 1].s
        )));
    }
    if roots.len() == rates.len() {
        return Err(Error::Coverage(format!(
            "every grid point diverges on s in [{}, {}]; widen the grid downwards",
            estimates[0].s,
            estimates[estimates.len() - 1].s
        )));
    }
    let n = roots.len() as f64;
    let s_star = roots.iter().sum::<f64>() / n;
    let s_err = if roots.len() > 1 {
        (roots.iter().map(|r| (r - s_star).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
    } else {
        theta * rates.iter().find(|r| r.beta > BETA_CUTOFF).map_or(0.0, |r| r.beta_se)
    };
    Ok(ThresholdFit { theta, s_star, s_err, divergent: roots.len(), rates })
}

/// Evenly spaced grid `centre ± half_width` in steps of `step`.
pub fn s_grid(centre: f64, half_width: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * half_width / step).round() as i64;
    (0..=n).map(|i| centre - half_width + i as f64 * step).collect()
}
