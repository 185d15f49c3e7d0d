//! Fourier-spectrum estimation: frequency sampling, truncated energies,
//! threshold fits and the Frostman probe.

pub mod cases;
pub mod curve;
pub mod energy;
pub mod frostman;
pub mod sampling;
pub mod threshold;

pub use cases::{classify_case, Case};
pub use curve::{spectrum_curve, theory_spectrum, SpectrumConfig, SpectrumCurve};
pub use energy::{truncated_energy, EnergyEstimate, EvaluatedSamples, ModulusSource};
pub use frostman::{frostman_probe, FrostmanProbe};
pub use sampling::{sample_frequencies, FrequencySample, LogUniformSampler};
pub use threshold::{threshold_fit, ThresholdFit};
