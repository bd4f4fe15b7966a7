//! Small in-place DFT used for spectral synthesis, filtering and spectra.
//!
//! Power-of-two lengths use an iterative radix-2 transform; other lengths fall
//! back to a direct O(n²) sum, which is fine at the grid sizes used here.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

fn twiddle(k: usize, n: usize, sign: f64) -> Complex64 {
    let a = sign * 2.0 * PI * k as f64 / n as f64;
    Complex64::new(libm::cos(a), libm::sin(a))
}

/// Unnormalised transform; `inverse` flips the exponent sign only.
pub fn fft_in_place(data: &mut [Complex64], inverse: bool) {
    let n = data.len();
    if n <= 1 {
        return;
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    if n.is_power_of_two() {
        radix2(data, sign);
    } else {
        let out: Vec<Complex64> = (0..n)
            .map(|k| data.iter().enumerate().map(|(j, x)| x * twiddle((j * k) % n, n, sign)).sum())
            .collect();
        data.copy_from_slice(&out);
    }
}

fn radix2(data: &mut [Complex64], sign: f64) {
    let n = data.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let w_len = twiddle(1, len, sign);
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let a = data[start + k];
                let b = data[start + k + len / 2] * w;
                data[start + k] = a + b;
                data[start + k + len / 2] = a - b;
                w *= w_len;
            }
        }
        len <<= 1;
    }
}

/// 2-D transform of a row-major `rows x cols` array.
pub fn fft2(data: &mut [Complex64], rows: usize, cols: usize, inverse: bool) {
    debug_assert_eq!(data.len(), rows * cols);
    for r in 0..rows {
        fft_in_place(&mut data[r * cols..(r + 1) * cols], inverse);
    }
    let mut column = alloc::vec![Complex64::new(0.0, 0.0); rows];
    for c in 0..cols {
        for r in 0..rows {
            column[r] = data[r * cols + c];
        }
        fft_in_place(&mut column, inverse);
        for r in 0..rows {
            data[r * cols + c] = column[r];
        }
    }
    if inverse {
        let scale = 1.0 / (rows * cols) as f64;
        for x in data.iter_mut() {
            *x *= scale;
        }
    }
}

/// Signed frequency index of DFT bin `k` out of `n`.
pub fn signed_freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}
