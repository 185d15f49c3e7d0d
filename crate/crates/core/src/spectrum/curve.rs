//! The empirical Fourier-spectrum curve `θ ↦ s*(θ)`.

use crate::error::{Error, Result};
use crate::paths::AdditiveSheet;
use crate::spectrum::energy::{dyadic_radii, truncated_energy, EnergyEstimate, EvaluatedSamples, ModulusSource};
use crate::spectrum::sampling::{LogUniformSampler, DEFAULT_R_LO};
use crate::spectrum::threshold::{growth_rate, ols_slope, s_grid, threshold_fit, ThresholdFit};
use crate::table::{Cell, Column, Table};

/// `min{k + θ/2, 2 + kθ}`.
pub fn theory_spectrum(k: usize, theta: f64) -> f64 {
    let k = k as f64;
    (k + theta / 2.0).min(2.0 + k * theta)
}

/// Where the two branches of the theoretical curve cross, for `k > 2`.
pub fn phase_transition(k: usize) -> Option<f64> {
    (k > 2).then(|| (k as f64 - 2.0) / (k as f64 - 0.5))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumConfig {
    pub samples: usize,
    /// Radii run over `2^radius_lo ..= 2^radius_hi`.
    pub radius_lo: i32,
    pub radius_hi: i32,
    pub s_step: f64,
    pub s_half_width: f64,
    pub r_lo: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { samples: 100_000, radius_lo: 4, radius_hi: 14, s_step: 0.05, s_half_width: 0.75, r_lo: DEFAULT_R_LO }
    }
}

impl SpectrumConfig {
    pub fn radii(&self) -> Vec<f64> {
        dyadic_radii(self.radius_lo, self.radius_hi)
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::validation("sample count must be positive"));
        }
        if self.radius_lo < 1 || self.radius_hi <= self.radius_lo {
            return Err(Error::validation(format!(
                "radius exponents must satisfy 1 <= lo < hi, got {}..{}",
                self.radius_lo, self.radius_hi
            )));
        }
        if !(self.s_step > 0.0 && self.s_half_width > 0.0) {
            return Err(Error::validation("s-grid step and half-width must be positive"));
        }
        if !(self.r_lo > 0.0 && self.r_lo < 1.0) {
            return Err(Error::validation(format!("sampler floor {} outside (0, 1)", self.r_lo)));
        }
        Ok(())
    }
}

/// Per-seed material retained next to the pooled curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedCurve {
    pub sample_seed: u64,
    /// `NaN` where the seed's own fit failed on grid coverage.
    pub s_star: Vec<f64>,
    pub theta0_estimate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumCurve {
    pub k: usize,
    pub theta_grid: Vec<f64>,
    /// Isotonic (non-decreasing in θ) projection of `s_star_raw`.
    pub s_star: Vec<f64>,
    pub s_star_raw: Vec<f64>,
    pub s_err: Vec<f64>,
    pub theory: Vec<f64>,
    pub theta0_estimate: f64,
    pub fits: Vec<ThresholdFit>,
    /// Seed-averaged energies, indexed `[θ][s]`.
    pub energies: Vec<Vec<EnergyEstimate>>,
    pub seeds: Vec<SeedCurve>,
}

impl SpectrumCurve {
    /// One row per θ, plus a θ = 0 row carrying the sup-decay estimate.
    pub fn to_table(&self) -> Result<Table> {
        let mut t = Table::new(vec![
            Column::integer("k"),
            Column::real("theta"),
            Column::real("s_star"),
            Column::real("s_star_raw"),
            Column::real("s_err"),
            Column::real("theory"),
            Column::text("estimator"),
        ]);
        t.push(vec![
            Cell::Integer(self.k as i64),
            0.0.into(),
            self.theta0_estimate.into(),
            self.theta0_estimate.into(),
            f64::NAN.into(),
            theory_spectrum(self.k, 0.0).into(),
            "sup_decay".into(),
        ])?;
        for i in 0..self.theta_grid.len() {
            t.push(vec![
                Cell::Integer(self.k as i64),
                self.theta_grid[i].into(),
                self.s_star[i].into(),
                self.s_star_raw[i].into(),
                self.s_err[i].into(),
                self.theory[i].into(),
                "energy".into(),
            ])?;
        }
        Ok(t)
    }

    /// Per-replicate thresholds.
    pub fn seeds_table(&self) -> Result<Table> {
        let mut t = Table::new(vec![Column::integer("sample_seed"), Column::real("theta"), Column::real("s_star")]);
        for seed in &self.seeds {
            t.push(vec![Cell::Integer(seed.sample_seed as i64), 0.0.into(), seed.theta0_estimate.into()])?;
            for (theta, s) in self.theta_grid.iter().zip(&seed.s_star) {
                t.push(vec![Cell::Integer(seed.sample_seed as i64), (*theta).into(), (*s).into()])?;
            }
        }
        Ok(t)
    }

    /// Pooled `I(R)` for every `(θ, s, R)`.
    pub fn energy_table(&self) -> Result<Table> {
        let mut t = Table::new(vec![
            Column::real("theta"),
            Column::real("s"),
            Column::real("radius"),
            Column::real("energy"),
            Column::real("std_error"),
            Column::integer("valid"),
            Column::real("beta"),
        ]);
        for ests in &self.energies {
            for e in ests {
                let beta = growth_rate(e).map_or(f64::NAN, |g| g.beta);
                for i in 0..e.radii.len() {
                    t.push(vec![
                        e.theta.into(),
                        e.s.into(),
                        e.radii[i].into(),
                        e.values[i].into(),
                        e.std_errors[i].into(),
                        Cell::Integer(e.valid[i] as i64),
                        beta.into(),
                    ])?;
                }
            }
        }
        Ok(t)
    }

    /// Case shares of `I(R_max)` for every `(θ, s)`.
    pub fn case_table(&self) -> Result<Table> {
        let mut cols = vec![Column::real("theta"), Column::real("s")];
        for c in 1..=6 {
            cols.push(Column::real(&format!("case_{c}")));
        }
        cols.push(Column::real("intermediate"));
        let mut t = Table::new(cols);
        for ests in &self.energies {
            for e in ests {
                let mut row: Vec<Cell> = vec![e.theta.into(), e.s.into()];
                row.extend(e.case_breakdown.iter().map(|&v| Cell::from(v)));
                t.push(row)?;
            }
        }
        Ok(t)
    }
}

/// Theoretical curves for `k = 1..=k_max` on `θ = 0, step, …, 1`.
pub fn theory_table(k_max: usize, steps: usize) -> Result<Table> {
    let mut t = Table::new(vec![Column::integer("k"), Column::real("theta"), Column::real("theory")]);
    for k in 1..=k_max {
        for i in 0..=steps {
            let theta = i as f64 / steps as f64;
            t.push(vec![Cell::Integer(k as i64), theta.into(), theory_spectrum(k, theta).into()])?;
        }
    }
    Ok(t)
}

/// Weighted pool-adjacent-violators: the non-decreasing sequence closest
/// to `values` in weighted least squares.
pub fn isotonic_increasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (v2, w2, n2) = blocks[blocks.len() - 1];
            let (v1, w1, n1) = blocks[blocks.len() - 2];
            if v1 <= v2 {
                break;
            }
            blocks.pop();
            let w = w1 + w2;
            *blocks.last_mut().unwrap() = ((v1 * w1 + v2 * w2) / w, w, n1 + n2);
        }
    }
    blocks.into_iter().flat_map(|(v, _, n)| std::iter::repeat_n(v, n)).collect()
}

/// Decay rate of the largest sampled modulus over dyadic annuli
/// `2^m < |ξ| ≤ 2^{m+1}`; returns `−2 ×` the log-log slope.
pub fn sup_decay_estimate(evaluated: &[&EvaluatedSamples], m_lo: i32, m_hi: i32) -> Result<f64> {
    let count = (m_hi - m_lo).max(0) as usize;
    let mut maxima = vec![0.0f64; count];
    for ev in evaluated {
        for (&r, &modulus) in ev.norms().iter().zip(&ev.moduli) {
            if r <= 2f64.powi(m_lo) || r > 2f64.powi(m_hi) || !modulus.is_finite() {
                continue;
            }
            let m = ((r.log2().ceil() as i32 - 1).clamp(m_lo, m_hi - 1) - m_lo) as usize;
            maxima[m] = maxima[m].max(modulus);
        }
    }
    let (x, z): (Vec<f64>, Vec<f64>) = maxima
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(m, v)| ((m as i32 + m_lo) as f64 * std::f64::consts::LN_2, v.ln()))
        .unzip();
    if x.len() < 3 {
        return Err(Error::Coverage(format!("only {} annuli contain samples", x.len())));
    }
    Ok(-2.0 * ols_slope(&x, &z)?.0)
}

fn pool(per_seed: &[EnergyEstimate]) -> EnergyEstimate {
    let n = per_seed.len() as f64;
    let first = &per_seed[0];
    let len = first.radii.len();
    let mut out = first.clone();
    for i in 0..len {
        out.values[i] = per_seed.iter().map(|e| e.values[i]).sum::<f64>() / n;
        out.std_errors[i] = per_seed.iter().map(|e| e.std_errors[i].powi(2)).sum::<f64>().sqrt() / n;
        out.valid[i] = per_seed.iter().all(|e| e.valid[i]);
    }
    let total: f64 = per_seed.iter().map(EnergyEstimate::largest).sum();
    for (b, share) in out.case_breakdown.iter_mut().enumerate() {
        *share = if total > 0.0 {
            per_seed.iter().map(|e| e.case_breakdown[b] * e.largest()).sum::<f64>() / total
        } else {
            0.0
        };
    }
    out
}

/// Pairs a transform source with the seed of its frequency sample set.
pub struct SeededSource<'a, S: ModulusSource> {
    pub source: &'a S,
    pub sample_seed: u64,
}

/// Spectrum curve for one or more replicates of the same model; energies
/// are averaged over replicates before fitting.
pub fn spectrum_curve<S: ModulusSource>(
    replicates: &[SeededSource<'_, S>],
    theta_grid: &[f64],
    config: &SpectrumConfig,
) -> Result<SpectrumCurve> {
    config.validate()?;
    if replicates.is_empty() {
        return Err(Error::validation("need at least one replicate"));
    }
    if theta_grid.is_empty() || theta_grid.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(Error::validation("theta grid must be non-empty and inside (0, 1]"));
    }
    if theta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("theta grid must increase"));
    }
    let k = replicates[0].source.k();
    if replicates.iter().any(|r| r.source.k() != k) {
        return Err(Error::validation("replicates disagree on dimension"));
    }
    let radii = config.radii();
    let r_hi = radii[radii.len() - 1];
    let sampler = LogUniformSampler::new(k, r_hi).with_r_lo(config.r_lo);
    let evaluated: Vec<EvaluatedSamples> = replicates
        .iter()
        .map(|r| EvaluatedSamples::evaluate(r.source, sampler.draw(config.samples, r.sample_seed)))
        .collect();

    let mut fits = Vec::with_capacity(theta_grid.len());
    let mut energies = Vec::with_capacity(theta_grid.len());
    let mut seed_stars = vec![Vec::with_capacity(theta_grid.len()); replicates.len()];
    for &theta in theta_grid {
        let grid = s_grid(theory_spectrum(k, theta), config.s_half_width, config.s_step);
        let per_seed: Vec<Vec<EnergyEstimate>> = evaluated
            .iter()
            .map(|ev| grid.iter().map(|&s| truncated_energy(ev, s, theta, &radii)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        for (stars, ests) in seed_stars.iter_mut().zip(&per_seed) {
            stars.push(match threshold_fit(ests, theta) {
                Ok(fit) => fit.s_star,
                Err(Error::Coverage(_)) => f64::NAN,
                Err(e) => return Err(e),
            });
        }
        let pooled: Vec<EnergyEstimate> = (0..grid.len())
            .map(|i| pool(&per_seed.iter().map(|v| v[i].clone()).collect::<Vec<_>>()))
            .collect();
        fits.push(threshold_fit(&pooled, theta)?);
        energies.push(pooled);
    }

    let s_star_raw: Vec<f64> = fits.iter().map(|f| f.s_star).collect();
    let s_err: Vec<f64> = fits.iter().map(|f| f.s_err).collect();
    let s_star = isotonic_increasing(&s_star_raw, &vec![1.0; s_star_raw.len()]);
    let refs: Vec<&EvaluatedSamples> = evaluated.iter().collect();
    let theta0_estimate = sup_decay_estimate(&refs, config.radius_lo, config.radius_hi)?;
    let seeds = replicates
        .iter()
        .zip(seed_stars)
        .zip(&evaluated)
        .map(|((r, s_star), ev)| SeedCurve {
            sample_seed: r.sample_seed,
            s_star,
            theta0_estimate: sup_decay_estimate(&[ev], config.radius_lo, config.radius_hi).unwrap_or(f64::NAN),
        })
        .collect();
    Ok(SpectrumCurve {
        k,
        theta_grid: theta_grid.to_vec(),
        s_star,
        s_star_raw,
        s_err,
        theory: theta_grid.iter().map(|&t| theory_spectrum(k, t)).collect(),
        theta0_estimate,
        fits,
        energies,
        seeds,
    })
}

/// Replicates for `count` independent sheets built from consecutive seeds.
pub fn sheet_replicates(sheets: &[AdditiveSheet], base_seed: u64) -> Vec<SeededSource<'_, AdditiveSheet>> {
    sheets
        .iter()
        .enumerate()
        .map(|(i, s)| SeededSource { source: s, sample_seed: crate::rng::mix64(base_seed ^ (i as u64 + 1)) })
        .collect()
}
