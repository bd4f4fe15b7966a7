//! Synthetic fields with known answers: Gaussian random fields, Rankine
//! vortices in a uniform steering flow, spectral smoothing and radial power
//! spectra. Grids are treated as doubly periodic wherever Fourier transforms
//! are involved.

pub mod fft;
mod random;
mod spectrum;
mod vortex;

pub use random::{degrade, degrade_values, gaussian_random_field, gaussian_random_values};
pub use spectrum::{high_band_energy, radial_power_spectrum, radial_power_spectrum_values, SpectrumBin};
pub use vortex::{advect_sequence, plateau_statics, synthetic_vortex, AdvectedSequence, VortexSpec};
