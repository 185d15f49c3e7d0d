use rand::Rng;

use crate::fourier::Frequency;
use crate::spectrum::cases::{classify_case, Case};

pub const DEFAULT_R_LO: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySample {
    pub frequency: Frequency,
    /// Proposal density at `frequency` (Lebesgue density on `R^{k+1}`).
    pub density: f64,
    pub case: Option<Case>,
}

/// Product proposal: each of the `k + 1` coordinates has log-uniform
/// magnitude on `[r_lo, r_hi]` and an independent fair sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogUniformSampler {
    pub k: usize,
    pub r_lo: f64,
    pub r_hi: f64,
}

impl LogUniformSampler {
    pub fn new(k: usize, r_hi: f64) -> Self {
        LogUniformSampler { k, r_lo: DEFAULT_R_LO, r_hi }
    }

    pub fn with_r_lo(mut self, r_lo: f64) -> Self {
        self.r_lo = r_lo;
        self
    }

    fn log_span(&self) -> f64 {
        (self.r_hi / self.r_lo).ln()
    }

    /// Exact proposal density; zero outside the sampling box.
    pub fn density(&self, f: &Frequency) -> f64 {
        let span = self.log_span();
        f.xi.iter()
            .chain(std::iter::once(&f.y))
            .map(|&c| {
                let a = c.abs();
                if a < self.r_lo || a > self.r_hi {
                    0.0
                } else {
                    1.0 / (2.0 * a * span)
                }
            })
            .product()
    }

    /// Lebesgue volume of the sampling box.
    pub fn volume(&self) -> f64 {
        (2.0 * (self.r_hi - self.r_lo)).powi(self.k as i32 + 1)
    }

    pub fn draw(&self, count: usize, seed: u64) -> Vec<FrequencySample> {
        let mut rng = crate::rng::stream(seed, 0x7361_6d70);
        let span = self.log_span();
        let coord = |rng: &mut rand_chacha::ChaCha8Rng| {
            let u: f64 = rng.random();
            let mag = self.r_lo * (u * span).exp();
            let mag = mag.clamp(self.r_lo, self.r_hi);
            if rng.random::<bool>() { mag } else { -mag }
        };
        (0..count)
            .map(|_| {
                let xi: Vec<f64> = (0..self.k).map(|_| coord(&mut rng)).collect();
                let y = coord(&mut rng);
                let frequency = Frequency::new(xi, y);
                let density = self.density(&frequency);
                let case = classify_case(&frequency);
                FrequencySample { frequency, density, case }
            })
            .collect()
    }
}

/// `count` samples for a `k`-sheet with magnitudes up to `r`.
pub fn sample_frequencies(k: usize, r: f64, count: usize, seed: u64) -> Vec<FrequencySample> {
    assert!(r > 1.0, "sampling radius must exceed 1");
    LogUniformSampler::new(k, r).draw(count, seed)
}
