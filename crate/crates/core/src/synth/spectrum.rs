use alloc::vec::Vec;
#[cfg(test)]
use alloc::vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::{fft2, signed_freq};
use crate::error::{Error, Result};
use crate::grid::Field;

/// Power in one isotropic wavenumber bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumBin {
    pub wavenumber: usize,
    /// Number of Fourier modes that fell into the bin.
    pub modes: usize,
    /// Summed power; the totals over all bins add up to the field variance.
    pub total: f64,
    pub mean: f64,
}

/// Radial spectrum of a row-major `rows x cols` array.
///
/// Mode `(ky, kx)` goes to bin `round(min(rows, cols) * sqrt((kx/cols)² + (ky/rows)²))`.
/// The mean is removed first, so bin 0 holds no power.
pub fn radial_power_spectrum_values(values: &[f64], rows: usize, cols: usize) -> Result<Vec<SpectrumBin>> {
    if values.len() != rows * cols || values.is_empty() {
        return Err(Error::Shape(alloc::format!("{} values for a {rows}x{cols} array", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("spectrum needs finite values".into()));
    }
    let n = (rows * cols) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v - mean, 0.0)).collect();
    fft2(&mut data, rows, cols, false);

    let scale = rows.min(cols) as f64;
    let bin_of = |r: usize, c: usize| {
        let fy = signed_freq(r, rows) / rows as f64;
        let fx = signed_freq(c, cols) / cols as f64;
        libm::round(scale * libm::sqrt(fx * fx + fy * fy)) as usize
    };
    let nbins = bin_of(rows / 2, cols / 2) + 1;
    let mut bins: Vec<SpectrumBin> = (0..nbins).map(|k| SpectrumBin { wavenumber: k, modes: 0, total: 0.0, mean: 0.0 }).collect();
    for r in 0..rows {
        for c in 0..cols {
            let b = &mut bins[bin_of(r, c)];
            b.modes += 1;
            b.total += data[r * cols + c].norm_sqr() / (n * n);
        }
    }
    for b in &mut bins {
        if b.modes > 0 {
            b.mean = b.total / b.modes as f64;
        }
    }
    Ok(bins)
}

pub fn radial_power_spectrum(field: &Field) -> Result<Vec<SpectrumBin>> {
    let g = field.grid();
    radial_power_spectrum_values(field.values(), g.nlat, g.nlon)
}

/// Summed power of the highest `fraction` of nonzero wavenumber bins
/// (`1/3` gives the top third).
pub fn high_band_energy(spectrum: &[SpectrumBin], fraction: f64) -> f64 {
    let nonzero = spectrum.len().saturating_sub(1);
    let take = libm::ceil(nonzero as f64 * fraction) as usize;
    spectrum[spectrum.len() - take.min(nonzero)..].iter().map(|b| b.total).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn constant_has_no_power() {
        let s = radial_power_spectrum_values(&vec![3.0; 64], 8, 8).unwrap();
        assert!(s.iter().all(|b| b.total == 0.0));
    }

    #[test]
    fn single_mode_lands_in_one_bin() {
        let (rows, cols) = (16, 16);
        let v: Vec<f64> = (0..rows * cols).map(|i| libm::cos(2.0 * PI * 3.0 * (i % cols) as f64 / cols as f64)).collect();
        let s = radial_power_spectrum_values(&v, rows, cols).unwrap();
        let var = 0.5;
        assert!((s[3].total - var).abs() < 1e-12);
        assert!(s.iter().filter(|b| b.wavenumber != 3).all(|b| b.total < 1e-20));
    }

    #[test]
    fn top_third() {
        let bins: Vec<SpectrumBin> = (0..7).map(|k| SpectrumBin { wavenumber: k, modes: 1, total: k as f64, mean: k as f64 }).collect();
        assert_eq!(high_band_energy(&bins, 1.0 / 3.0), 5.0 + 6.0);
    }
}
