//! Dyadic Brownian paths and additive sheets.
//!
//! Paths are built by the Lévy midpoint construction: the endpoint `w(1)` is a
//! standard normal, and each refinement level fills midpoints from the
//! Brownian bridge between its two coarser neighbours. The Gaussian used at
//! the midpoint with dyadic index `j` on level `l` is keyed on
//! `(seed, l, j)`, so a path generated at level `n + 1` agrees exactly with
//! the level-`n` path on the coarse grid.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::normal_at;
use crate::table::{Cell, Column, Table};

/// Largest level whose grid fits in addressable memory.
pub const MAX_LEVEL: u32 = {
    let bits = usize::BITS;
    // 2^level + 1 f64 values must stay below isize::MAX bytes.
    if bits >= 64 { 58 } else { bits - 5 }
};

pub const DEFAULT_LEVEL: u32 = 12;

/// One-parameter Brownian motion sampled on the dyadic grid `m 2^-level`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    level: u32,
    seed: u64,
    values: Vec<f64>,
}

impl BrownianPath {
    /// Lévy construction keyed on `seed`.
    pub fn generate(seed: u64, level: u32) -> Result<Self> {
        let n = grid_len(level)?;
        let mut values = Vec::new();
        values
            .try_reserve_exact(n + 1)
            .map_err(|_| Error::Capacity { level, max: MAX_LEVEL })?;
        values.resize(n + 1, 0.0);
        values[n] = normal_at(seed, 0, 0);
        for l in 1..=level {
            let stride = n >> l;
            // bridge variance at the midpoint of a coarse cell of width 2^-(l-1)
            let sd = (0.5f64).powi(l as i32 + 1).sqrt();
            for j in (1..(1usize << l)).step_by(2) {
                let idx = j * stride;
                let mid = 0.5 * (values[idx - stride] + values[idx + stride]);
                values[idx] = mid + sd * normal_at(seed, l, j as u64);
            }
        }
        Ok(BrownianPath { level, seed, values })
    }

    /// Wraps explicit grid values (used for synthetic and flat paths).
    pub fn from_values(values: Vec<f64>, seed: u64) -> Result<Self> {
        let segments = values.len().checked_sub(1).filter(|s| s.is_power_of_two()).ok_or_else(|| {
            Error::validation(format!("path needs 2^n + 1 values, got {}", values.len()))
        })?;
        if values[0] != 0.0 {
            return Err(Error::validation("path must start at w_0 = 0"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("path values must be finite"));
        }
        Ok(BrownianPath { level: segments.trailing_zeros(), seed, values })
    }

    pub fn zero(level: u32) -> Result<Self> {
        let n = grid_len(level)?;
        Self::from_values(vec![0.0; n + 1], 0)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn segments(&self) -> usize {
        self.values.len() - 1
    }

    /// Grid spacing `2^-level`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.segments() as f64
    }

    /// Piecewise-linear interpolant; `t` is clamped to `[0, 1]`.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.segments();
        let pos = t.clamp(0.0, 1.0) * n as f64;
        let m = (pos.floor() as usize).min(n - 1);
        let frac = pos - m as f64;
        self.values[m] + frac * (self.values[m + 1] - self.values[m])
    }

    /// Exact minimum and maximum of the interpolant over `[a, b]`.
    pub fn range_on(&self, a: f64, b: f64) -> (f64, f64) {
        let n = self.segments() as f64;
        let (a, b) = (a.clamp(0.0, 1.0), b.clamp(0.0, 1.0));
        let mut lo = self.value_at(a).min(self.value_at(b));
        let mut hi = self.value_at(a).max(self.value_at(b));
        let first = (a * n).ceil() as usize;
        let last = ((b * n).floor() as usize).min(self.segments());
        for &v in self.values.get(first..=last).unwrap_or(&[]) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// `(t, w)` table of the grid values.
    pub fn to_table(&self) -> Table {
        let mut table = Table::new(vec![Column::real("t"), Column::real("w")]);
        let h = self.spacing();
        for (m, &w) in self.values.iter().enumerate() {
            table.push(vec![Cell::Real(m as f64 * h), Cell::Real(w)]).expect("schema");
        }
        table
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.to_table().write_csv(path)
    }
}

fn grid_len(level: u32) -> Result<usize> {
    if level > MAX_LEVEL {
        return Err(Error::Capacity { level, max: MAX_LEVEL });
    }
    Ok(1usize << level)
}

pub fn gen_path(seed: u64, level: u32) -> Result<BrownianPath> {
    BrownianPath::generate(seed, level)
}

/// `W(t) = Σ_i W^i(t_i)` for independent paths on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveSheet {
    paths: Vec<BrownianPath>,
}

impl AdditiveSheet {
    pub fn from_paths(paths: Vec<BrownianPath>) -> Result<Self> {
        let first = paths.first().ok_or_else(|| Error::validation("sheet needs k >= 1 paths"))?;
        if paths.iter().any(|p| p.level != first.level) {
            return Err(Error::validation("all sheet paths must share one level"));
        }
        Ok(AdditiveSheet { paths })
    }

    pub fn k(&self) -> usize {
        self.paths.len()
    }

    pub fn level(&self) -> u32 {
        self.paths[0].level
    }

    pub fn paths(&self) -> &[BrownianPath] {
        &self.paths
    }

    pub fn path(&self, j: usize) -> &BrownianPath {
        &self.paths[j]
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.paths.iter().map(|p| p.seed).collect()
    }

    pub fn value_at(&self, t: &[f64]) -> Result<f64> {
        if t.len() != self.k() {
            return Err(Error::validation(format!("point has {} coordinates, sheet has k = {}", t.len(), self.k())));
        }
        Ok(self.paths.iter().zip(t).map(|(p, &ti)| p.value_at(ti)).sum())
    }
}

/// Sheet of `seeds.len()` independent paths; seeds must be pairwise distinct.
pub fn make_sheet(seeds: &[u64], level: u32) -> Result<AdditiveSheet> {
    let mut seen = HashSet::new();
    for s in seeds {
        if !seen.insert(s) {
            return Err(Error::validation(format!("duplicate seed {s}: sheet coordinates must be independent")));
        }
    }
    let paths = seeds.iter().map(|&s| BrownianPath::generate(s, level)).collect::<Result<Vec<_>>>()?;
    AdditiveSheet::from_paths(paths)
}

/// Seeds for coordinate `j` of replicate `r` drawn from a base seed.
pub fn sheet_seeds(base: u64, replicate: u64, k: usize) -> Vec<u64> {
    (0..k as u64).map(|j| crate::rng::counter_key(base, 0xffff, (replicate << 16) | j)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderProbe {
    pub alpha: f64,
    /// max |w(s) - w(t)| / |s - t|^alpha over the scanned pairs
    pub constant: f64,
    /// finest lag examined
    pub max_gap: f64,
}

/// Empirical Hölder constant over all grid pairs at lags `2^-n .. 2^-1`.
pub fn holder_probe(path: &BrownianPath, alpha: f64) -> HolderProbe {
    let n = path.segments();
    let h = path.spacing();
    let w = path.values();
    let mut constant = 0.0f64;
    let mut lag = 1usize;
    while lag <= n / 2 {
        let scale = (lag as f64 * h).powf(alpha);
        let worst = w.iter().zip(&w[lag..]).map(|(a, b)| (b - a).abs()).fold(0.0f64, f64::max);
        constant = constant.max(worst / scale);
        lag *= 2;
    }
    HolderProbe { alpha, constant, max_gap: h }
}
