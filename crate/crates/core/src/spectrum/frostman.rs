//! Empirical Frostman exponent from ball masses on the grid model.
//!
//! Cell `i` of the level-`n` grid carries mass `h^k` at its graph point
//! `(t_i, W(t_i))`, `t_i` the cell midpoint. `μ(B(x, r))` is the mass of the
//! cells whose graph point lies in the closed ball.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::paths::AdditiveSheet;
use crate::spectrum::threshold::ols_slope;

/// Radii finer than this many cells are not resolved.
pub const MIN_CELLS_PER_RADIUS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FrostmanProbe {
    pub exponent: f64,
    pub exponent_se: f64,
    /// Radii entering the fit, ascending.
    pub radii: Vec<f64>,
    /// Largest ball mass over the centres, per fitted radius.
    pub max_mass: Vec<f64>,
    pub mean_mass: Vec<f64>,
    pub excluded: Vec<f64>,
}

/// Midpoint values of each factor, one entry per cell.
fn midpoint_values(sheet: &AdditiveSheet) -> Vec<Vec<f64>> {
    sheet
        .paths()
        .iter()
        .map(|p| p.values().windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
        .collect()
}

/// Mass of `B((t_c, W(t_c)), r)` for the cell with multi-index `centre`.
fn ball_mass(mids: &[Vec<f64>], h: f64, centre: &[usize], r: f64) -> f64 {
    let k = mids.len();
    let cells = mids[0].len();
    let reach = (r / h).floor() as usize;
    let w_c: f64 = (0..k).map(|j| mids[j][centre[j]]).sum();
    let lo: Vec<usize> = centre.iter().map(|&c| c.saturating_sub(reach)).collect();
    let hi: Vec<usize> = centre.iter().map(|&c| (c + reach).min(cells - 1)).collect();

    // Depth-first over the box of candidate cells, carrying the partial
    // squared distance and partial height.
    #[allow(clippy::too_many_arguments)]
    fn walk(mids: &[Vec<f64>], h: f64, centre: &[usize], lo: &[usize], hi: &[usize], j: usize, d2: f64, w: f64, target: f64, r2: f64) -> u64 {
        if j == mids.len() {
            let dw = w - target;
            return u64::from(d2 + dw * dw <= r2);
        }
        let mut count = 0;
        for i in lo[j]..=hi[j] {
            let dt = (i as f64 - centre[j] as f64) * h;
            let d = d2 + dt * dt;
            if d <= r2 {
                count += walk(mids, h, centre, lo, hi, j + 1, d, w + mids[j][i], target, r2);
            }
        }
        count
    }
    let count = walk(mids, h, centre, &lo, &hi, 0, 0.0, 0.0, w_c, r * r);
    count as f64 * h.powi(k as i32)
}

/// Ball masses at `centres` random graph points for each radius; the
/// exponent is the slope of `ln max μ(B)` against `ln r`.
pub fn frostman_probe(sheet: &AdditiveSheet, radii: &[f64], centres: usize, seed: u64) -> Result<FrostmanProbe> {
    if centres == 0 {
        return Err(Error::validation("need at least one centre"));
    }
    if radii.iter().any(|r| !(*r > 0.0) || r.log2().fract() != 0.0) {
        return Err(Error::validation("radii must be positive powers of two"));
    }
    let h = 1.0 / sheet.path(0).segments() as f64;
    let (mut kept, mut excluded): (Vec<f64>, Vec<f64>) = radii.iter().partition(|&&r| r >= MIN_CELLS_PER_RADIUS * h);
    kept.sort_by(f64::total_cmp);
    excluded.sort_by(f64::total_cmp);
    if kept.len() < 2 {
        return Err(Error::Resolution(format!(
            "only {} radii at or above {} cells of width {h}",
            kept.len(),
            MIN_CELLS_PER_RADIUS
        )));
    }

    let mids = midpoint_values(sheet);
    let cells = mids[0].len();
    let mut rng = crate::rng::stream(seed, 0x6672_6f73);
    let picks: Vec<Vec<usize>> =
        (0..centres).map(|_| (0..sheet.k()).map(|_| rng.random_range(0..cells)).collect()).collect();

    let masses: Vec<Vec<f64>> = kept
        .iter()
        .map(|&r| picks.par_iter().map(|c| ball_mass(&mids, h, c, r)).collect())
        .collect();
    let max_mass: Vec<f64> = masses.iter().map(|m| m.iter().copied().fold(0.0, f64::max)).collect();
    let mean_mass: Vec<f64> = masses.iter().map(|m| m.iter().sum::<f64>() / m.len() as f64).collect();
    let x: Vec<f64> = kept.iter().map(|r| r.ln()).collect();
    let z: Vec<f64> = max_mass.iter().map(|m| m.ln()).collect();
    let (exponent, exponent_se) = ols_slope(&x, &z)?;
    Ok(FrostmanProbe { exponent, exponent_se, radii: kept, max_mass, mean_mass, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::{make_sheet, BrownianPath};

    #[test]
    fn whole_surface_ball_has_unit_mass() {
        let sheet = make_sheet(&[1, 2], 6).unwrap();
        let mids = midpoint_values(&sheet);
        let h = 1.0 / 64.0;
        assert!((ball_mass(&mids, h, &[10, 40], 64.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_line_has_exponent_one() {
        let flat = AdditiveSheet::from_paths(vec![BrownianPath::zero(12).unwrap()]).unwrap();
        let probe = frostman_probe(&flat, &[1.0 / 256.0, 1.0 / 64.0, 1.0 / 16.0], 50, 3).unwrap();
        assert!((probe.exponent - 1.0).abs() < 0.02, "{probe:?}");
    }

    #[test]
    fn flat_plane_has_exponent_two() {
        let z = BrownianPath::zero(8).unwrap();
        let flat = AdditiveSheet::from_paths(vec![z.clone(), z]).unwrap();
        let probe = frostman_probe(&flat, &[1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0], 20, 3).unwrap();
        assert!((probe.exponent - 2.0).abs() < 0.1, "{probe:?}");
    }

    #[test]
    fn unresolved_radii_are_reported() {
        let sheet = make_sheet(&[4], 8).unwrap();
        let probe = frostman_probe(&sheet, &[1.0 / 256.0, 1.0 / 128.0, 1.0 / 32.0, 1.0 / 16.0], 10, 1).unwrap();
        assert_eq!(probe.excluded, vec![1.0 / 256.0, 1.0 / 128.0]);
        assert!(matches!(frostman_probe(&sheet, &[1.0 / 256.0], 10, 1), Err(Error::Resolution(_))));
    }
}
