//! Discrete Fourier transform: iterative radix-2 for power-of-two lengths,
//! direct summation otherwise.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

/// In-place forward transform `X_k = sum_m x_m e^{-2 pi i k m / M}` (unnormalized).
pub fn forward(data: &mut [Complex64]) {
    transform(data, -1.0);
}

/// In-place inverse transform without the `1/M` factor.
pub fn inverse_unnormalized(data: &mut [Complex64]) {
    transform(data, 1.0);
}

fn transform(data: &mut [Complex64], sign: f64) {
    let n = data.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(data, sign);
    } else {
        direct(data, sign);
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
        let half = len / 2;
        let step = sign * 2.0 * PI / len as f64;
        // twiddles computed directly rather than by recurrence to keep round-off flat
        let twiddles: Vec<Complex64> = (0..half).map(|k| Complex64::cis(step * k as f64)).collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let u = data[start + k];
                let v = data[start + k + half] * twiddles[k];
                data[start + k] = u + v;
                data[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
}

fn direct(data: &mut [Complex64], sign: f64) {
    let n = data.len();
    let input = data.to_vec();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, x) in input.iter().enumerate() {
            // reduce k*m mod n before scaling to keep the phase exact
            let phase = sign * 2.0 * PI * ((k * m) % n) as f64 / n as f64;
            acc += x * Complex64::cis(phase);
        }
        *o = acc;
    }
    data.copy_from_slice(&out);
}
