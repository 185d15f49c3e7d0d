//! Decay regimes of the one-dimensional factors and the envelope bound.
//!
//! For one factor `μ̂_j(ξ_j, y)` the almost-sure envelope is
//!
//! | regime              | condition                      | envelope                     |
//! |---------------------|--------------------------------|------------------------------|
//! | `HORIZONTAL_HIGH_Y` | `1 ≤ |y| ≤ |y|² ≤ |ξ_j|`       | `|y| / |ξ_j|`                |
//! | `HORIZONTAL_LOW_Y`  | `|y| ≤ 1 ≤ |ξ_j|`              | `1 / |ξ_j|`                  |
//! | `VERTICAL`          | `max(|ξ_j|, 1) ≤ |y|²`         | `(1 + √max(ln|y|, 0)) / |y|` |
//! | `CORE`              | `max(|ξ_j|, |y|) ≤ 1`          | `1`                          |
//!
//! Boundary points go to the first matching row.

use std::fmt;

use crate::error::{Error, Result};
use crate::fourier::transform_1d;
use crate::paths::{make_sheet, AdditiveSheet};
use crate::spectrum::FrequencySample;
use crate::table::{Cell, Column, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Regime {
    HorizontalHighY,
    HorizontalLowY,
    Vertical,
    Core,
}

impl Regime {
    pub const ALL: [Regime; 4] = [Regime::HorizontalHighY, Regime::HorizontalLowY, Regime::Vertical, Regime::Core];

    pub fn tag(self) -> &'static str {
        match self {
            Regime::HorizontalHighY => "HORIZONTAL_HIGH_Y",
            Regime::HorizontalLowY => "HORIZONTAL_LOW_Y",
            Regime::Vertical => "VERTICAL",
            Regime::Core => "CORE",
        }
    }

    pub fn parse(tag: &str) -> Option<Regime> {
        Regime::ALL.into_iter().find(|r| r.tag().eq_ignore_ascii_case(tag))
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

pub fn classify_regime(xi_j: f64, y: f64) -> Regime {
    let (x, y) = (xi_j.abs(), y.abs());
    let y2 = y * y;
    if 1.0 <= y && y2 <= x {
        Regime::HorizontalHighY
    } else if y <= 1.0 && 1.0 <= x {
        Regime::HorizontalLowY
    } else if x.max(1.0) <= y2 {
        Regime::Vertical
    } else {
        // only max(|ξ|, |y|) <= 1 is left
        Regime::Core
    }
}

pub fn envelope(xi_j: f64, y: f64) -> f64 {
    let (x, ay) = (xi_j.abs(), y.abs());
    match classify_regime(xi_j, y) {
        Regime::HorizontalHighY => ay / x,
        Regime::HorizontalLowY => 1.0 / x,
        Regime::Vertical => (1.0 + ay.ln().max(0.0).sqrt()) / ay,
        Regime::Core => 1.0,
    }
}

/// Modulus of the `j`-th one-dimensional factor.
pub trait FactorSource: Sync {
    fn k(&self) -> usize;
    fn factor_modulus(&self, j: usize, xi: f64, y: f64) -> f64;
}

impl FactorSource for AdditiveSheet {
    fn k(&self) -> usize {
        AdditiveSheet::k(self)
    }

    fn factor_modulus(&self, j: usize, xi: f64, y: f64) -> f64 {
        transform_1d(self.path(j), xi, y).modulus
    }
}

/// Factor with the same modulus at every frequency.
#[derive(Debug, Clone, Copy)]
pub struct ConstantFactors {
    pub k: usize,
    pub modulus: f64,
}

impl FactorSource for ConstantFactors {
    fn k(&self) -> usize {
        self.k
    }

    fn factor_modulus(&self, _: usize, _: f64, _: f64) -> f64 {
        self.modulus
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioRow {
    pub factor: usize,
    pub xi_j: f64,
    pub y: f64,
    pub regime: Regime,
    pub modulus: f64,
    pub envelope: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorViolation {
    pub factor: usize,
    /// 99th-percentile ratio: the empirical constant
    pub constant: f64,
    pub max_ratio: f64,
    pub regime_counts: [usize; 4],
    pub core_max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    pub factors: Vec<FactorViolation>,
    pub rows: Vec<RatioRow>,
}

impl ViolationReport {
    /// Largest per-factor constant.
    pub fn constant(&self) -> f64 {
        self.factors.iter().map(|f| f.constant).fold(0.0, f64::max)
    }

    pub fn max_ratio(&self) -> f64 {
        self.factors.iter().map(|f| f.max_ratio).fold(0.0, f64::max)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(vec![
            Column::integer("factor"),
            Column::real("xi_j"),
            Column::real("y"),
            Column::text("regime"),
            Column::real("modulus"),
            Column::real("envelope"),
            Column::real("ratio"),
        ]);
        for r in &self.rows {
            t.push(vec![
                Cell::Integer(r.factor as i64 + 1),
                r.xi_j.into(),
                r.y.into(),
                r.regime.tag().into(),
                r.modulus.into(),
                r.envelope.into(),
                r.ratio.into(),
            ])
            .expect("schema");
        }
        t
    }
}

pub const MIN_REPORT_SAMPLES: usize = 1000;

/// Nearest-rank percentile of unsorted data.
pub fn percentile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

/// Ratios `|μ̂_j| / envelope` over a sample set, per coordinate factor.
pub fn envelope_violation_report(source: &impl FactorSource, samples: &[FrequencySample]) -> Result<ViolationReport> {
    use rayon::prelude::*;

    if samples.len() < MIN_REPORT_SAMPLES {
        return Err(Error::validation(format!(
            "envelope report needs at least {MIN_REPORT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let k = source.k();
    let mut factors = Vec::with_capacity(k);
    let mut rows = Vec::with_capacity(k * samples.len());
    for j in 0..k {
        let pairs: Vec<(f64, f64)> = samples.iter().map(|s| (s.frequency.xi[j], s.frequency.y)).collect();
        let mut counts = [0usize; 4];
        for &(x, y) in &pairs {
            counts[classify_regime(x, y).index()] += 1;
        }
        let empty: Vec<&str> = Regime::ALL.iter().filter(|r| counts[r.index()] == 0).map(|r| r.tag()).collect();
        if !empty.is_empty() {
            return Err(Error::validation(format!("factor {} has no samples in regimes {}", j + 1, empty.join(", "))));
        }
        let factor_rows: Vec<RatioRow> = pairs
            .par_iter()
            .map(|&(x, y)| {
                let modulus = source.factor_modulus(j, x, y);
                let env = envelope(x, y);
                RatioRow { factor: j, xi_j: x, y, regime: classify_regime(x, y), modulus, envelope: env, ratio: modulus / env }
            })
            .collect();
        let ratios: Vec<f64> = factor_rows.iter().map(|r| r.ratio).collect();
        let core_max_ratio = factor_rows
            .iter()
            .filter(|r| r.regime == Regime::Core)
            .map(|r| r.ratio)
            .fold(0.0, f64::max);
        factors.push(FactorViolation {
            factor: j,
            constant: percentile(&ratios, 99.0),
            max_ratio: ratios.iter().copied().fold(0.0, f64::max),
            regime_counts: counts,
            core_max_ratio,
        });
        rows.extend(factor_rows);
    }
    Ok(ViolationReport { factors, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelDrift {
    pub levels: Vec<u32>,
    pub constants: Vec<f64>,
    pub max_ratios: Vec<f64>,
}

impl LevelDrift {
    /// Largest over smallest empirical constant across levels.
    pub fn drift(&self) -> f64 {
        let hi = self.constants.iter().copied().fold(f64::MIN, f64::max);
        let lo = self.constants.iter().copied().fold(f64::MAX, f64::min);
        hi / lo
    }

    /// The bound fails only if the constant keeps growing under refinement.
    pub fn is_stable(&self, factor: f64) -> bool {
        self.drift() <= factor
    }
}

/// Repeats the report for one seed set at several refinement levels.
pub fn envelope_level_sweep(seeds: &[u64], levels: &[u32], samples: &[FrequencySample]) -> Result<LevelDrift> {
    let mut out = LevelDrift { levels: levels.to_vec(), constants: Vec::new(), max_ratios: Vec::new() };
    for &level in levels {
        let sheet = make_sheet(seeds, level)?;
        let report = envelope_violation_report(&sheet, samples)?;
        out.constants.push(report.constant());
        out.max_ratios.push(report.max_ratio());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub regime: Regime,
    /// Slope of `ln|μ̂_j|` against the log of the driving frequency.
    pub exponent: f64,
    pub samples: usize,
    pub residual_rms: f64,
    pub sufficient: bool,
}

pub const MIN_FIT_SAMPLES: usize = 30;

/// Within-band least squares: slope of `z` on `x` after removing the mean
/// of each band. Returns `(slope, residual rms)`.
pub fn stratified_slope(points: &[(i64, f64, f64)]) -> Result<(f64, f64)> {
    use std::collections::BTreeMap;
    let mut bands: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
    for &(b, x, z) in points {
        let e = bands.entry(b).or_insert((0.0, 0.0, 0));
        e.0 += x;
        e.1 += z;
        e.2 += 1;
    }
    let centered: Vec<(f64, f64)> = points
        .iter()
        .map(|&(b, x, z)| {
            let (sx, sz, n) = bands[&b];
            (x - sx / n as f64, z - sz / n as f64)
        })
        .collect();
    let sxx: f64 = centered.iter().map(|(x, _)| x * x).sum();
    let sxz: f64 = centered.iter().map(|(x, z)| x * z).sum();
    if !(sxx > 1e-12 * points.len() as f64) {
        return Err(Error::Numeric("degenerate design: no spread in frequency within bands".into()));
    }
    let slope = sxz / sxx;
    let sse: f64 = centered.iter().map(|(x, z)| (z - slope * x).powi(2)).sum();
    Ok((slope, (sse / points.len() as f64).sqrt()))
}

/// Decay exponent of the factors inside one regime.
///
/// Horizontal regimes regress on `ln|ξ_j|` within dyadic bands of `|y|`;
/// the vertical regime regresses on `ln|y|` within dyadic bands of `|ξ_j|`.
pub fn decay_fit(source: &impl FactorSource, regime: Regime, samples: &[FrequencySample]) -> Result<DecayFit> {
    use rayon::prelude::*;

    let k = source.k();
    let pairs: Vec<(usize, f64, f64)> = samples
        .iter()
        .flat_map(|s| (0..k).map(move |j| (j, s.frequency.xi[j], s.frequency.y)))
        .filter(|&(_, x, y)| classify_regime(x, y) == regime && x != 0.0 && y != 0.0)
        .collect();
    if pairs.len() < MIN_FIT_SAMPLES || regime == Regime::Core {
        return Ok(DecayFit { regime, exponent: f64::NAN, samples: pairs.len(), residual_rms: f64::NAN, sufficient: false });
    }
    let points: Vec<(i64, f64, f64)> = pairs
        .par_iter()
        .map(|&(j, x, y)| {
            let m = source.factor_modulus(j, x, y).max(f64::MIN_POSITIVE);
            let (driver, control) = match regime {
                Regime::Vertical => (y.abs(), x.abs()),
                _ => (x.abs(), y.abs()),
            };
            (control.log2().floor() as i64, driver.ln(), m.ln())
        })
        .collect();
    let (exponent, residual_rms) = stratified_slope(&points)?;
    Ok(DecayFit { regime, exponent, samples: points.len(), residual_rms, sufficient: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fourier::Frequency;

    fn sample(xi: f64, y: f64) -> FrequencySample {
        FrequencySample { frequency: Frequency::new(vec![xi], y), density: 1.0, case: None }
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(9.0, 2.0), Regime::HorizontalHighY);
        assert_eq!(classify_regime(9.0, 0.5), Regime::HorizontalLowY);
        assert_eq!(classify_regime(0.5, 0.5), Regime::Core);
        assert_eq!(classify_regime(3.0, 2.0), Regime::Vertical);
        assert_eq!(classify_regime(-9.0, -2.0), Regime::HorizontalHighY);
    }

    #[test]
    fn ties_go_to_earlier_branch() {
        // |y|² = |ξ|: first and third branches both hold
        assert_eq!(classify_regime(4.0, 2.0), Regime::HorizontalHighY);
        // |y| = 1 = |ξ|: second and fourth
        assert_eq!(classify_regime(1.0, 1.0), Regime::HorizontalHighY);
        assert_eq!(classify_regime(1.0, 0.5), Regime::HorizontalLowY);
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(envelope(9.0, 2.0), 2.0 / 9.0);
        assert_eq!(envelope(9.0, 0.5), 1.0 / 9.0);
        assert_eq!(envelope(0.2, 0.3), 1.0);
        let e = envelope(2.0, 10.0);
        assert!((e - (1.0 + 10f64.ln().sqrt()) / 10.0).abs() < 1e-15);
    }

    #[test]
    fn partition_and_positivity() {
        use rand::Rng;
        let mut rng = crate::rng::stream(5, 5);
        for _ in 0..100_000 {
            let x = rng.random_range(-1.0f64..1.0) * 10f64.powf(rng.random_range(-3.0..4.0));
            let y = rng.random_range(-1.0f64..1.0) * 10f64.powf(rng.random_range(-3.0..3.0));
            let (ax, ay) = (x.abs(), y.abs());
            let matches = [
                1.0 <= ay && ay * ay <= ax,
                ay <= 1.0 && 1.0 <= ax,
                ax.max(1.0) <= ay * ay,
                ax.max(ay) <= 1.0,
            ];
            let first = matches.iter().position(|&m| m).expect("every point is covered");
            assert_eq!(classify_regime(x, y), Regime::ALL[first]);
            let e = envelope(x, y);
            assert!(e > 0.0);
            if classify_regime(x, y) == Regime::Core {
                assert!(e <= 1.0);
            }
        }
    }

    #[test]
    fn report_rejects_thin_or_uncovered_sets() {
        let src = ConstantFactors { k: 1, modulus: 0.5 };
        let few: Vec<_> = (0..10).map(|i| sample(i as f64, 0.5)).collect();
        assert!(matches!(envelope_violation_report(&src, &few), Err(Error::Validation(_))));
        let no_vertical: Vec<_> = (0..2000).map(|i| sample(2.0 + i as f64, if i % 2 == 0 { 0.5 } else { 1.2 })).collect();
        let err = envelope_violation_report(&src, &no_vertical).unwrap_err().to_string();
        assert!(err.contains("VERTICAL") && err.contains("CORE"), "{err}");
    }

    #[test]
    fn zero_frequency_ratio_is_one() {
        let sheet = crate::paths::make_sheet(&[3], 8).unwrap();
        let m = sheet.factor_modulus(0, 0.0, 0.0);
        assert!((m / envelope(0.0, 0.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 99.0), 99.0);
        assert_eq!(percentile(&v, 100.0), 100.0);
        assert_eq!(percentile(&[3.0], 99.0), 3.0);
    }

    #[test]
    fn constant_input_has_zero_slope() {
        let src = ConstantFactors { k: 1, modulus: 0.25 };
        let samples: Vec<_> = (0..200).map(|i| sample(2.0 + i as f64 * 3.7, 0.1 + (i % 7) as f64 * 0.1)).collect();
        let fit = decay_fit(&src, Regime::HorizontalLowY, &samples).unwrap();
        assert!(fit.sufficient);
        assert!(fit.exponent.abs() < 1e-12);
    }

    #[test]
    fn too_few_samples_marked_insufficient() {
        let src = ConstantFactors { k: 1, modulus: 0.25 };
        let samples: Vec<_> = (0..10).map(|i| sample(2.0 + i as f64, 0.5)).collect();
        let fit = decay_fit(&src, Regime::HorizontalLowY, &samples).unwrap();
        assert!(!fit.sufficient && fit.exponent.is_nan());
    }

    #[test]
    fn degenerate_design_is_an_error() {
        let src = ConstantFactors { k: 1, modulus: 0.25 };
        let samples: Vec<_> = (0..50).map(|_| sample(5.0, 0.5)).collect();
        assert!(matches!(decay_fit(&src, Regime::HorizontalLowY, &samples), Err(Error::Numeric(_))));
    }

    #[test]
    fn stratified_slope_recovers_power_law() {
        let pts: Vec<(i64, f64, f64)> =
            (0..100).map(|i| (i % 3, (1.0 + i as f64).ln(), 2.0 * (i % 3) as f64 - 1.5 * (1.0 + i as f64).ln())).collect();
        let (slope, rms) = stratified_slope(&pts).unwrap();
        assert!((slope + 1.5).abs() < 1e-12 && rms < 1e-12);
    }
}
