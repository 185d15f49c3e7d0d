//! Truncated `(s, θ)`-energies by importance sampling.
//!
//! `I(R) = ∫_{1 < |ξ| ≤ R} |μ̂(ξ)|^{2/θ} |ξ|^{s/θ - d} dξ` is estimated as
//! `N^{-1} Σ_i f(ξ_i) / p(ξ_i)` over all `N` proposal draws, with the
//! indicator folded into `f`. All radii share one sample set, so the
//! estimates are nested.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::{transform_sheet, Frequency};
use crate::paths::AdditiveSheet;
use crate::spectrum::cases::{bucket, CASE_BUCKETS};
use crate::spectrum::sampling::FrequencySample;
use crate::sum::Neumaier;

/// Anything with a Fourier modulus on `R^{k+1}`.
pub trait ModulusSource: Sync {
    fn k(&self) -> usize;
    fn modulus(&self, f: &Frequency) -> f64;
}

impl ModulusSource for AdditiveSheet {
    fn k(&self) -> usize {
        AdditiveSheet::k(self)
    }

    fn modulus(&self, f: &Frequency) -> f64 {
        transform_sheet(self, f).map(|v| v.modulus).unwrap_or(f64::NAN)
    }
}

/// `|μ̂| ≡ 1`: the energy reduces to an annulus integral of a power of `|ξ|`.
#[derive(Debug, Clone, Copy)]
pub struct UnitTransform {
    pub k: usize,
}

impl ModulusSource for UnitTransform {
    fn k(&self) -> usize {
        self.k
    }

    fn modulus(&self, _: &Frequency) -> f64 {
        1.0
    }
}

/// Radial `|μ̂(ξ)| = min(1, |ξ|^{-a/2})`, whose spectrum threshold is `a` at every θ.
#[derive(Debug, Clone, Copy)]
pub struct RadialPowerTransform {
    pub k: usize,
    pub a: f64,
}

impl ModulusSource for RadialPowerTransform {
    fn k(&self) -> usize {
        self.k
    }

    fn modulus(&self, f: &Frequency) -> f64 {
        f.norm().powf(-self.a / 2.0).min(1.0)
    }
}

/// Samples with their transform moduli, computed once and reused for every `(s, θ)`.
#[derive(Debug, Clone)]
pub struct EvaluatedSamples {
    pub k: usize,
    pub samples: Vec<FrequencySample>,
    pub moduli: Vec<f64>,
    norms: Vec<f64>,
}

impl EvaluatedSamples {
    pub fn evaluate(source: &impl ModulusSource, samples: Vec<FrequencySample>) -> Self {
        let moduli: Vec<f64> = samples.par_iter().map(|s| source.modulus(&s.frequency)).collect();
        let norms = samples.iter().map(|s| s.frequency.norm()).collect();
        EvaluatedSamples { k: source.k(), samples, moduli, norms }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyEstimate {
    pub s: f64,
    pub theta: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// False where no sample fell in `1 < |ξ| ≤ R`.
    pub valid: Vec<bool>,
    /// Shares of `I(R_max)` by case bucket (cases 1–6, then intermediate).
    pub case_breakdown: [f64; CASE_BUCKETS],
}

impl EnergyEstimate {
    pub fn largest(&self) -> f64 {
        *self.values.last().expect("at least one radius")
    }
}

pub(crate) fn check_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::validation("need at least one truncation radius"));
    }
    for r in radii {
        if !(*r > 1.0) || r.log2().fract() != 0.0 {
            return Err(Error::validation(format!("radius {r} is not a dyadic value above 1")));
        }
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("radii must increase"));
    }
    Ok(())
}

/// Dyadic radii `2^lo, …, 2^hi`.
pub fn dyadic_radii(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|m| 2f64.powi(m)).collect()
}

pub fn truncated_energy(evaluated: &EvaluatedSamples, s: f64, theta: f64, radii: &[f64]) -> Result<EnergyEstimate> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::validation(format!("theta = {theta} outside (0, 1]")));
    }
    check_radii(radii)?;
    let d = (evaluated.k + 1) as f64;
    let n = evaluated.len();
    let r_max = radii[radii.len() - 1];
    let power = 2.0 / theta;
    let radial = s / theta - d;

    let mut shell = vec![Neumaier::default(); radii.len()];
    let mut shell_sq = vec![Neumaier::default(); radii.len()];
    let mut shell_count = vec![0usize; radii.len()];
    let mut cases = [Neumaier::default(); CASE_BUCKETS];

    for ((smp, &m), &r) in evaluated.samples.iter().zip(&evaluated.moduli).zip(&evaluated.norms) {
        if r <= 1.0 || r > r_max || smp.density <= 0.0 {
            continue;
        }
        let idx = radii.partition_point(|&rr| rr < r);
        let x = m.powf(power) * r.powf(radial) / smp.density;
        shell[idx].add(x);
        shell_sq[idx].add(x * x);
        shell_count[idx] += 1;
        cases[bucket(smp.case)].add(x);
    }

    let nf = n.max(1) as f64;
    let (mut cum, mut cum_sq, mut cum_count) = (0.0f64, 0.0f64, 0usize);
    let mut values = Vec::with_capacity(radii.len());
    let mut std_errors = Vec::with_capacity(radii.len());
    let mut valid = Vec::with_capacity(radii.len());
    for i in 0..radii.len() {
        cum += shell[i].total();
        cum_sq += shell_sq[i].total();
        cum_count += shell_count[i];
        let mean = cum / nf;
        let var = (cum_sq / nf - mean * mean).max(0.0);
        values.push(mean);
        std_errors.push((var / (nf - 1.0).max(1.0)).sqrt());
        valid.push(cum_count > 0);
    }

    let case_totals: Vec<f64> = cases.iter().map(Neumaier::total).collect();
    let total: f64 = case_totals.iter().sum();
    let mut case_breakdown = [0.0; CASE_BUCKETS];
    if total > 0.0 {
        for (share, t) in case_breakdown.iter_mut().zip(&case_totals) {
            *share = t / total;
        }
    }
    Ok(EnergyEstimate { s, theta, radii: radii.to_vec(), values, std_errors, valid, case_breakdown })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::sampling::LogUniformSampler;

    #[test]
    fn radii_validation() {
        assert!(check_radii(&[2.0, 4.0]).is_ok());
        assert!(check_radii(&[]).is_err());
        assert!(check_radii(&[3.0]).is_err());
        assert!(check_radii(&[4.0, 2.0]).is_err());
        assert!(check_radii(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn theta_validation() {
        let ev = EvaluatedSamples::evaluate(&UnitTransform { k: 1 }, LogUniformSampler::new(1, 16.0).draw(10, 1));
        assert!(truncated_energy(&ev, 1.0, 0.0, &[2.0]).is_err());
        assert!(truncated_energy(&ev, 1.0, 1.5, &[2.0]).is_err());
    }

    #[test]
    fn monotone_in_radius_and_s() {
        let ev = EvaluatedSamples::evaluate(
            &RadialPowerTransform { k: 2, a: 1.0 },
            LogUniformSampler::new(2, 1024.0).draw(5000, 3),
        );
        let radii = dyadic_radii(1, 10);
        let lo = truncated_energy(&ev, 1.0, 0.7, &radii).unwrap();
        let hi = truncated_energy(&ev, 1.3, 0.7, &radii).unwrap();
        for w in lo.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for (a, b) in lo.values.iter().zip(&hi.values) {
            assert!(a <= b);
        }
        let share: f64 = lo.case_breakdown.iter().sum();
        assert!((share - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_radius_is_flagged_not_fatal() {
        let ev = EvaluatedSamples::evaluate(&UnitTransform { k: 1 }, vec![]);
        let e = truncated_energy(&ev, 1.0, 1.0, &[2.0, 4.0]).unwrap();
        assert_eq!(e.valid, vec![false, false]);
    }
}
