use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::fft::{fft2, signed_freq};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, VarName, VariableId};

/// Multiplies the spectrum of a periodic `rows x cols` array by `transfer(fy, fx)`,
/// with frequencies in cycles per gridpoint.
fn filter(values: &[f64], rows: usize, cols: usize, transfer: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, rows, cols, false);
    for r in 0..rows {
        let fy = signed_freq(r, rows) / rows as f64;
        for c in 0..cols {
            let fx = signed_freq(c, cols) / cols as f64;
            data[r * cols + c] *= transfer(fy, fx);
        }
    }
    fft2(&mut data, rows, cols, true);
    data.into_iter().map(|z| z.re).collect()
}

/// Zero-mean, unit-variance periodic random field whose covariance is
/// `exp(-d² / 2L²)` with `L = (len_rows, len_cols)` in gridpoints.
pub fn gaussian_random_values(rows: usize, cols: usize, len_rows: f64, len_cols: f64, rng: &mut impl rand::Rng) -> Result<Vec<f64>> {
    if !(len_rows > 0.0 && len_cols > 0.0) {
        return Err(Error::InvalidArgument("correlation length must be positive".into()));
    }
    if rows * cols < 2 {
        return Err(Error::Shape("random field needs at least two points".into()));
    }
    let white: Vec<f64> = (0..rows * cols).map(|_| StandardNormal.sample(rng)).collect();
    // A Gaussian kernel of width L/√2 convolved with itself has width L.
    let transfer = |fy: f64, fx: f64| {
        if fy == 0.0 && fx == 0.0 {
            0.0
        } else {
            libm::exp(-PI * PI * (len_rows * len_rows * fy * fy + len_cols * len_cols * fx * fx))
        }
    };
    let mut power = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let t = transfer(signed_freq(r, rows) / rows as f64, signed_freq(c, cols) / cols as f64);
            power += t * t;
        }
    }
    let norm = libm::sqrt(power / (rows * cols) as f64);
    if norm == 0.0 {
        return Err(Error::InvalidArgument("correlation length too long for the grid".into()));
    }
    Ok(filter(&white, rows, cols, transfer).into_iter().map(|v| v / norm).collect())
}

/// [`gaussian_random_values`] on a grid, with the correlation length given in
/// km and converted to gridpoints at the grid's central latitude.
pub fn gaussian_random_field(grid: &GridSpec, correlation_length_km: f64, seed: u64) -> Result<Field> {
    grid.validate()?;
    if !(correlation_length_km > 0.0) {
        return Err(Error::InvalidArgument("correlation length must be positive".into()));
    }
    let deg_km = grid.earth_radius_km * PI / 180.0;
    let mid_lat = grid.lat(grid.nlat / 2);
    let dy = grid.lat_step * deg_km;
    let dx = (grid.lon_step * deg_km * libm::cos(mid_lat.to_radians())).max(1e-6 * dy);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = gaussian_random_values(grid.nlat, grid.nlon, correlation_length_km / dy, correlation_length_km / dx, &mut rng)?;
    Field::new(*grid, VariableId::surface(VarName::T2M), "1", values)
}

/// Gaussian low-pass with a standard deviation of `strength` gridpoints.
/// The mean is kept and `strength == 0` returns the input unchanged.
pub fn degrade_values(values: &[f64], rows: usize, cols: usize, strength: f64) -> Result<Vec<f64>> {
    if !(strength >= 0.0) || !strength.is_finite() {
        return Err(Error::InvalidArgument(alloc::format!("degrade strength must be >= 0, got {strength}")));
    }
    if values.len() != rows * cols {
        return Err(Error::Shape(alloc::format!("{} values for a {rows}x{cols} array", values.len())));
    }
    if strength == 0.0 {
        return Ok(values.to_vec());
    }
    let s2 = strength * strength;
    Ok(filter(values, rows, cols, |fy, fx| libm::exp(-2.0 * PI * PI * s2 * (fx * fx + fy * fy))))
}

pub fn degrade(field: &Field, strength: f64) -> Result<Field> {
    let g = field.grid();
    let values = degrade_values(field.values(), g.nlat, g.nlon, strength)?;
    Field::new(*g, field.variable(), field.units(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{high_band_energy, radial_power_spectrum_values};

    #[test]
    fn field_statistics() {
        let g = GridSpec::new(128, 128, 40.0, 0.25, 100.0, 0.25).unwrap();
        let a = gaussian_random_field(&g, 30.0, 3).unwrap();
        assert_eq!(a, gaussian_random_field(&g, 30.0, 3).unwrap());
        let n = a.values().len() as f64;
        let mean = a.values().iter().sum::<f64>() / n;
        let var = a.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-12);
        assert!((0.9..=1.1).contains(&var), "{var}");
    }

    #[test]
    fn degrade_identity_and_constant() {
        let v: Vec<f64> = (0..48).map(|i| (i * i % 7) as f64).collect();
        assert_eq!(degrade_values(&v, 6, 8, 0.0).unwrap(), v);
        let c = degrade_values(&[2.5; 48], 6, 8, 3.0).unwrap();
        assert!(c.iter().all(|x| (x - 2.5).abs() < 1e-12));
        assert!(degrade_values(&v, 6, 8, -1.0).is_err());
    }

    #[test]
    fn smoothing_removes_high_band() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = gaussian_random_values(32, 32, 1.0, 1.0, &mut rng).unwrap();
        let mut last = f64::INFINITY;
        for s in [0.0, 0.5, 1.0, 2.0] {
            let e = high_band_energy(&radial_power_spectrum_values(&degrade_values(&v, 32, 32, s).unwrap(), 32, 32).unwrap(), 1.0 / 3.0);
            assert!(e < last);
            last = e;
        }
    }
}
