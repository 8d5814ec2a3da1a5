//! Sampled functions on an interval, their trigonometric spectra, and the two
//! frequency truncations: a hard per-axis index cutoff and the smooth dyadic
//! (Littlewood-Paley) cutoff.
//!
//! A grid function on `[a, b]` with `M` samples is treated as one period of a
//! periodic function. Its spectrum is indexed by `k = -M/2+1 ..= M/2` with
//! angular frequency `zeta_k = k * 2 pi / (b - a)`, normalized so that
//!
//! ```text
//! f(x) = Re sum_k c_k exp(i zeta_k (x - a))
//! ```
//!
//! reproduces the samples exactly at the grid nodes. The Nyquist coefficient
//! is split evenly between `+M/2` and `-M/2` so that synthesis of a real
//! spectrum has no imaginary part anywhere, not just on the grid.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

/// Real samples of a function at `a + m (b - a) / M`, `m = 0..M`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction1D {
    a: f64,
    b: f64,
    samples: Vec<f64>,
}

impl GridFunction1D {
    pub fn new(a: f64, b: f64, samples: Vec<f64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Invalid("domain must satisfy a < b".into()));
        }
        let m = samples.len();
        if m < 2 || !m.is_multiple_of(2) {
            return Err(Error::Invalid(alloc::format!(
                "grid size must be even and at least 2, got {m}"
            )));
        }
        if let Some(pos) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self { a, b, samples })
    }

    /// Samples `f` on the uniform periodic grid.
    pub fn from_fn(a: f64, b: f64, m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = (b - a) / m as f64;
        Self::new(a, b, (0..m).map(|i| f(a + i as f64 * h)).collect())
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn node(&self, m: usize) -> f64 {
        self.a + m as f64 * (self.b - self.a) / self.samples.len() as f64
    }
}

/// Trigonometric coefficients of a periodic function on `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum1D {
    a: f64,
    b: f64,
    /// `coeffs[k + M/2 - 1]` holds `c_k`.
    coeffs: Vec<Complex64>,
    real: bool,
}

impl Spectrum1D {
    /// Wraps raw coefficients (index `k + M/2 - 1`). The real-function flag is
    /// set when the coefficients are conjugate symmetric to `1e-14` relative.
    pub fn from_coefficients(a: f64, b: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Invalid("domain must satisfy a < b".into()));
        }
        let m = coeffs.len();
        if m < 2 || !m.is_multiple_of(2) {
            return Err(Error::Invalid(alloc::format!(
                "spectrum length must be even and at least 2, got {m}"
            )));
        }
        let mut s = Self {
            a,
            b,
            coeffs,
            real: false,
        };
        s.real = s.is_conjugate_symmetric(1e-14);
        Ok(s)
    }

    fn is_conjugate_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let half = self.half();
        let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
        if self.coefficient(0).im.abs() > tol || self.coefficient(half).im.abs() > tol {
            return false;
        }
        (1..half).all(|k| (self.coefficient(-k) - self.coefficient(k).conj()).norm() <= tol)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    /// Grid size `M`.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `M / 2`, the largest index.
    pub fn half(&self) -> i64 {
        (self.coeffs.len() / 2) as i64
    }

    /// Whether the spectrum represents a real-valued function.
    pub fn is_real(&self) -> bool {
        self.real
    }

    /// `omega_0 = 2 pi / (b - a)`.
    pub fn base_frequency(&self) -> f64 {
        2.0 * PI / (self.b - self.a)
    }

    pub fn frequency(&self, k: i64) -> f64 {
        k as f64 * self.base_frequency()
    }

    pub fn coefficient(&self, k: i64) -> Complex64 {
        let idx = k + self.half() - 1;
        assert!(
            idx >= 0 && (idx as usize) < self.coeffs.len(),
            "index {k} out of range"
        );
        self.coeffs[idx as usize]
    }

    /// `(k, c_k)` for `k = -M/2+1 ..= M/2`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let off = self.half() - 1;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, c)| (i as i64 - off, *c))
    }

    /// `(zeta, weight)` terms of the real synthesis, with the Nyquist
    /// coefficient split between `+zeta` and `-zeta`.
    pub(crate) fn symmetric_terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let half = self.half();
        self.iter()
            .flat_map(move |(k, c)| {
                if k == half {
                    [Some((k, c * 0.5)), Some((-k, c * 0.5))]
                } else {
                    [Some((k, c)), None]
                }
            })
            .flatten()
    }

    /// `sum_k |c_k|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `sum_k c_k exp(i zeta_k (x - a))` with the Nyquist term split; for a
    /// real spectrum the imaginary part vanishes up to round-off.
    pub fn synthesize_complex_at(&self, x: f64) -> Complex64 {
        let t = x - self.a;
        let w = self.base_frequency();
        self.symmetric_terms()
            .map(|(k, c)| c * Complex64::cis(k as f64 * w * t))
            .sum()
    }

    /// Real value of the trigonometric interpolant at `x`.
    pub fn synthesize_at(&self, x: f64) -> Result<f64> {
        if !self.real {
            return Err(Error::NotRealSpectrum);
        }
        Ok(self.synthesize_complex_at(x).re)
    }

    /// Derivative of the interpolant at `x` (coefficients times `i zeta_k`).
    pub fn derivative_at(&self, x: f64) -> Result<f64> {
        if !self.real {
            return Err(Error::NotRealSpectrum);
        }
        let t = x - self.a;
        let w = self.base_frequency();
        let s: Complex64 = self
            .symmetric_terms()
            .map(|(k, c)| {
                let z = k as f64 * w;
                c * Complex64::new(0.0, z) * Complex64::cis(z * t)
            })
            .sum();
        Ok(s.re)
    }

    /// Multiplies every coefficient by `mask(k)`.
    fn masked(&self, mask: impl Fn(i64) -> f64) -> Self {
        let mut out = self.clone();
        let off = self.half() - 1;
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c *= mask(i as i64 - off);
        }
        out
    }
}

/// Forward transform of the samples, normalized by `1/M`.
pub fn analyze(f: &GridFunction1D) -> Result<Spectrum1D> {
    if let Some(pos) = f.samples.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(pos));
    }
    let m = f.samples.len();
    let mut buf: Vec<Complex64> = f.samples.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft::forward(&mut buf);
    let scale = 1.0 / m as f64;
    let half = (m / 2) as i64;
    let coeffs = (-half + 1..=half)
        .map(|k| buf[k.rem_euclid(m as i64) as usize] * scale)
        .collect();
    // Real samples give conjugate-symmetric coefficients by construction.
    Ok(Spectrum1D {
        a: f.a,
        b: f.b,
        coeffs,
        real: true,
    })
}

/// Evaluates the spectrum at every grid node through the inverse transform.
pub fn synthesize_grid(spec: &Spectrum1D) -> Result<GridFunction1D> {
    if !spec.real {
        return Err(Error::NotRealSpectrum);
    }
    let m = spec.len();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (k, c) in spec.iter() {
        buf[k.rem_euclid(m as i64) as usize] = c;
    }
    fft::inverse_unnormalized(&mut buf);
    GridFunction1D::new(spec.a, spec.b, buf.iter().map(|c| c.re).collect())
}

/// Zeroes every coefficient with `|k| > cutoff`.
pub fn hard_truncate(spec: &Spectrum1D, cutoff: usize) -> Result<Spectrum1D> {
    let half = spec.half() as usize;
    if cutoff > half {
        return Err(Error::OutOfRange {
            what: "cutoff K",
            value: cutoff,
            max: half,
        });
    }
    let k_max = cutoff as i64;
    Ok(spec.masked(|k| if k.abs() <= k_max { 1.0 } else { 0.0 }))
}

/// Smooth transition `psi(t) = e^{-1/t} / (e^{-1/t} + e^{-1/(1-t)})`, 0 for
/// `t <= 0` and 1 for `t >= 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let p = libm::exp(-1.0 / t);
    let q = libm::exp(-1.0 / (1.0 - t));
    p / (p + q)
}

/// Radial bump: 1 on `|r| <= 1`, 0 on `|r| >= 2`, decreasing in between.
fn plateau(r: f64) -> f64 {
    1.0 - smooth_step(r.abs() - 1.0)
}

/// Smooth dyadic resolution of unity.
///
/// `phi_0(z) = chi(z)` and `phi_j(z) = chi(z / 2^j) - chi(z / 2^{j-1})` for
/// `j >= 1`, where `chi` is the plateau bump. Hence `phi_j` is supported in
/// `2^{j-1} <= |z| <= 2^{j+1}` and `sum_{j <= N} phi_j(z) = chi(z / 2^N)`,
/// which is 1 on `|z| <= 2^N` and 0 on `|z| >= 2^{N+1}`. The partition sums to
/// one on `|z| <= 2^levels`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadicPartition {
    levels: u32,
}

impl DyadicPartition {
    pub fn new(levels: u32) -> Self {
        Self { levels }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// `phi_j(zeta)`.
    pub fn weight(&self, j: u32, zeta: f64) -> f64 {
        dyadic_weight(j, zeta)
    }

    /// `sum_{j=0}^{n} phi_j(zeta)`, evaluated in telescoped form.
    pub fn cumulative(&self, n: u32, zeta: f64) -> f64 {
        plateau(zeta / libm::exp2(n as f64))
    }
}

impl Default for DyadicPartition {
    fn default() -> Self {
        Self::new(30)
    }
}

/// `phi_j(zeta)` of the dyadic partition.
pub fn dyadic_weight(j: u32, zeta: f64) -> f64 {
    if j == 0 {
        return plateau(zeta);
    }
    let scale = libm::exp2(j as f64);
    (plateau(zeta / scale) - plateau(2.0 * zeta / scale)).max(0.0)
}

/// Multiplies `c_k` by `sum_{j=0}^{N} phi_j(|zeta_k|)`.
pub fn lp_truncate(spec: &Spectrum1D, level: u32, partition: &DyadicPartition) -> Spectrum1D {
    let w = spec.base_frequency();
    spec.masked(|k| partition.cumulative(level, (k as f64 * w).abs()))
}

/// Real samples on a `d`-dimensional box grid, stored with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunctionNd {
    domains: Vec<(f64, f64)>,
    sizes: Vec<usize>,
    samples: Vec<f64>,
}

impl GridFunctionNd {
    pub fn from_fn(
        domains: Vec<(f64, f64)>,
        sizes: Vec<usize>,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        if domains.is_empty() || domains.len() != sizes.len() {
            return Err(Error::Invalid("one domain and grid size per axis".into()));
        }
        for ((a, b), m) in domains.iter().zip(&sizes) {
            if !(a < b) || *m < 2 || m % 2 != 0 {
                return Err(Error::Invalid(
                    "each axis needs a < b and an even grid size".into(),
                ));
            }
        }
        let total: usize = sizes.iter().product();
        let d = sizes.len();
        let mut samples = Vec::with_capacity(total);
        let mut point = vec![0.0; d];
        for flat in 0..total {
            let mut rem = flat;
            for ax in (0..d).rev() {
                let i = rem % sizes[ax];
                rem /= sizes[ax];
                let (a, b) = domains[ax];
                point[ax] = a + i as f64 * (b - a) / sizes[ax] as f64;
            }
            let v = f(&point);
            if !v.is_finite() {
                return Err(Error::NonFinite(flat));
            }
            samples.push(v);
        }
        Ok(Self {
            domains,
            sizes,
            samples,
        })
    }

    pub fn dim(&self) -> usize {
        self.sizes.len()
    }
}

/// Multidimensional coefficients; entry for multi-index `k` (each component
/// in `-M_j/2+1 ..= M_j/2`) at position `sum_j (k_j + M_j/2 - 1) * stride_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumNd {
    domains: Vec<(f64, f64)>,
    sizes: Vec<usize>,
    coeffs: Vec<Complex64>,
}

impl SpectrumNd {
    pub fn dim(&self) -> usize {
        self.sizes.len()
    }

    pub fn domains(&self) -> &[(f64, f64)] {
        &self.domains
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Coefficient at multi-index `k`, with the Nyquist split applied per axis
    /// (the same convention as [`Spectrum1D`]).
    pub fn coefficient(&self, k: &[i64]) -> Complex64 {
        let mut idx = 0usize;
        let mut factor = 1.0;
        for (ax, &kj) in k.iter().enumerate() {
            let m = self.sizes[ax] as i64;
            let half = m / 2;
            let kk = if kj == -half {
                factor *= 0.5;
                half
            } else {
                if kj == half {
                    factor *= 0.5;
                }
                kj
            };
            idx = idx * self.sizes[ax] + (kk + half - 1) as usize;
        }
        self.coeffs[idx] * factor
    }
}

/// Separable forward transform along every axis, normalized by `1 / prod M_j`.
pub fn analyze_nd(f: &GridFunctionNd) -> SpectrumNd {
    let d = f.dim();
    let sizes = &f.sizes;
    let total: usize = sizes.iter().product();
    let mut buf: Vec<Complex64> = f.samples.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    for ax in 0..d {
        let m = sizes[ax];
        let stride: usize = sizes[ax + 1..].iter().product();
        let outer = total / (m * stride);
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * m * stride + s;
                for (i, l) in line.iter_mut().enumerate() {
                    *l = buf[base + i * stride];
                }
                fft::forward(&mut line);
                for (i, l) in line.iter().enumerate() {
                    buf[base + i * stride] = *l;
                }
            }
        }
    }
    let scale = 1.0 / total as f64;
    // reorder each axis from FFT order to k = -M/2+1 ..= M/2
    let mut coeffs = vec![Complex64::new(0.0, 0.0); total];
    for (flat, c) in coeffs.iter_mut().enumerate() {
        let mut rem = flat;
        let mut src = 0usize;
        let mut mult = 1usize;
        for ax in (0..d).rev() {
            let m = sizes[ax];
            let pos = rem % m;
            rem /= m;
            let k = pos as i64 - (m / 2) as i64 + 1;
            src += k.rem_euclid(m as i64) as usize * mult;
            mult *= m;
        }
        *c = buf[src] * scale;
    }
    SpectrumNd {
        domains: f.domains.clone(),
        sizes: f.sizes.clone(),
        coeffs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_is_dc_only() {
        let g = GridFunction1D::from_fn(0.0, 1.0, 64, |_| 1.0).unwrap();
        let s = analyze(&g).unwrap();
        for (k, c) in s.iter() {
            if k == 0 {
                assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-13);
            } else {
                assert!(c.norm() < 1e-13);
            }
        }
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridFunction1D::new(0.0, 1.0, vec![1.0; 3]).is_err());
        assert!(GridFunction1D::new(1.0, 0.0, vec![1.0; 4]).is_err());
        assert_eq!(
            GridFunction1D::new(0.0, 1.0, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        );
    }

    #[test]
    fn cosine_zero_crossing() {
        let g = GridFunction1D::from_fn(0.0, 1.0, 64, |x| libm::cos(2.0 * PI * x)).unwrap();
        let s = analyze(&g).unwrap();
        assert!(s.synthesize_at(0.25).unwrap().abs() < 1e-10);
    }

    #[test]
    fn full_cutoff_is_identity() {
        let g = GridFunction1D::from_fn(0.0, 2.0, 32, |x| x * x).unwrap();
        let s = analyze(&g).unwrap();
        assert_eq!(hard_truncate(&s, 16).unwrap(), s);
        assert!(matches!(
            hard_truncate(&s, 17),
            Err(Error::OutOfRange {
                value: 17,
                max: 16,
                ..
            })
        ));
    }

    #[test]
    fn truncating_cosine_below_its_mode_leaves_nothing() {
        let g = GridFunction1D::from_fn(0.0, 1.0, 64, |x| libm::cos(2.0 * PI * x)).unwrap();
        let s = hard_truncate(&analyze(&g).unwrap(), 0).unwrap();
        assert!(s.energy() < 1e-26);
    }

    #[test]
    fn complex_spectrum_refuses_synthesis() {
        let mut c = vec![Complex64::new(0.0, 0.0); 4];
        c[2] = Complex64::new(0.0, 1.0);
        let s = Spectrum1D::from_coefficients(0.0, 1.0, c).unwrap();
        assert!(!s.is_real());
        assert_eq!(s.synthesize_at(0.1), Err(Error::NotRealSpectrum));
    }

    #[test]
    fn partition_edge_values() {
        assert_eq!(dyadic_weight(0, 0.0), 1.0);
        assert_eq!(dyadic_weight(3, 32.0), 0.0);
        assert_eq!(dyadic_weight(0, 2.5), 0.0);
        // phi_j vanishes below 2^{j-1}
        assert_eq!(dyadic_weight(4, 7.9), 0.0);
    }

    #[test]
    fn smooth_step_is_monotone_and_symmetric() {
        let mut prev = 0.0;
        for i in 0..=100 {
            let t = i as f64 / 100.0;
            let v = smooth_step(t);
            assert!(v >= prev);
            assert!((v + smooth_step(1.0 - t) - 1.0).abs() < 1e-15);
            prev = v;
        }
    }

    #[test]
    fn nd_transform_of_product_is_outer_product() {
        let f = GridFunctionNd::from_fn(vec![(0.0, 1.0), (0.0, 2.0)], vec![8, 4], |p| {
            libm::cos(2.0 * PI * p[0]) * (1.0 + libm::sin(PI * p[1]))
        })
        .unwrap();
        let s = analyze_nd(&f);
        let a =
            analyze(&GridFunction1D::from_fn(0.0, 1.0, 8, |x| libm::cos(2.0 * PI * x)).unwrap())
                .unwrap();
        let b =
            analyze(&GridFunction1D::from_fn(0.0, 2.0, 4, |x| 1.0 + libm::sin(PI * x)).unwrap())
                .unwrap();
        for k0 in -3..=3 {
            for k1 in -1..=1 {
                let want = a.coefficient(k0) * b.coefficient(k1);
                assert!((s.coefficient(&[k0, k1]) - want).norm() < 1e-14);
            }
        }
    }
}
