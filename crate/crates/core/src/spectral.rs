//! FFT-based differentiation, interpolation and integration of periodic
//! samples.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Signed wavenumber of FFT bin `k` (Nyquist bin reported as `+n/2`).
pub fn wavenumber(k: usize, n: usize) -> f64 {
    if 2 * k <= n {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Cached plans for one sample count and period.
#[derive(Clone)]
pub struct Spectral {
    n: usize,
    period: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("n", &self.n)
            .field("period", &self.period)
            .finish()
    }
}

impl Spectral {
    pub fn new(n: usize, period: f64) -> Self {
        let mut planner = FftPlanner::new();
        Spectral {
            n,
            period,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn forward(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process(&mut buf);
        buf
    }

    /// Real samples of the `order`-th derivative from forward coefficients.
    pub fn derivative_from_coeffs(&self, coeffs: &[Complex64], order: usize) -> Vec<f64> {
        let n = self.n;
        let scale = TAU / self.period;
        let mut buf: Vec<Complex64> = coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if order == 0 {
                    return c;
                }
                let nyquist = n % 2 == 0 && 2 * k == n;
                if nyquist && order % 2 == 1 {
                    return Complex64::new(0.0, 0.0);
                }
                let ik = Complex64::new(0.0, wavenumber(k, n) * scale);
                c * ik.powu(order as u32)
            })
            .collect();
        self.inv.process(&mut buf);
        let inv_n = 1.0 / n as f64;
        buf.iter().map(|c| c.re * inv_n).collect()
    }

    pub fn derivative(&self, samples: &[f64], order: usize) -> Vec<f64> {
        self.derivative_from_coeffs(&self.forward(samples), order)
    }

    /// Zeroes modes with `|k| > n/3`.
    pub fn filter_two_thirds(&self, samples: &mut [f64]) {
        let n = self.n;
        let mut c = self.forward(samples);
        for (k, ck) in c.iter_mut().enumerate() {
            if 3.0 * wavenumber(k, n).abs() > n as f64 {
                *ck = Complex64::new(0.0, 0.0);
            }
        }
        self.inv.process(&mut c);
        for (s, ck) in samples.iter_mut().zip(&c) {
            *s = ck.re / n as f64;
        }
    }

    /// `∮ f dz` of the band-limited interpolant (the sample mean times the period).
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        samples.iter().sum::<f64>() * self.period / self.n as f64
    }
}

/// Value at `z` of the trigonometric interpolant of `coeffs` (forward FFT
/// of `n` samples on `[0, period)`).
pub fn interpolate(coeffs: &[Complex64], period: f64, z: f64) -> f64 {
    let n = coeffs.len();
    let w = TAU / period * z;
    let mut s = coeffs[0].re;
    for k in 1..n.div_ceil(2) {
        let e = Complex64::from_polar(1.0, k as f64 * w);
        s += 2.0 * (coeffs[k] * e).re;
    }
    if n % 2 == 0 {
        s += coeffs[n / 2].re * (n as f64 / 2.0 * w).cos();
    }
    s / n as f64
}

/// Antiderivative `∫₀^z f` of the interpolant of `coeffs`.
pub fn antiderivative(coeffs: &[Complex64], period: f64, z: f64) -> f64 {
    let n = coeffs.len();
    let scale = TAU / period;
    let w = scale * z;
    let mut s = coeffs[0].re * z;
    for k in 1..n.div_ceil(2) {
        let kk = k as f64 * scale;
        // ∫₀^z 2 Re(c e^{ikζ}) dζ = 2 Re(c (e^{ikz} − 1)/(ik))
        let e = Complex64::from_polar(1.0, k as f64 * w) - 1.0;
        s += 2.0 * (coeffs[k] * e / Complex64::new(0.0, kk)).re;
    }
    if n % 2 == 0 {
        let kk = n as f64 / 2.0 * scale;
        s += coeffs[n / 2].re * (kk * z).sin() / kk;
    }
    s / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize, period: f64, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..n).map(|k| f(period * k as f64 / n as f64)).collect()
    }

    #[test]
    fn derivative_exact_on_harmonics() {
        let n = 32;
        let sp = Spectral::new(n, TAU);
        let f = samples(n, TAU, |z| 2.0 + (3.0 * z).sin() - 0.5 * (7.0 * z).cos());
        let d1 = sp.derivative(&f, 1);
        let d2 = sp.derivative(&f, 2);
        for k in 0..n {
            let z = TAU * k as f64 / n as f64;
            assert!((d1[k] - (3.0 * (3.0 * z).cos() + 3.5 * (7.0 * z).sin())).abs() < 1e-12);
            assert!((d2[k] - (-9.0 * (3.0 * z).sin() + 24.5 * (7.0 * z).cos())).abs() < 1e-11);
        }
    }

    #[test]
    fn derivative_respects_period() {
        let n = 16;
        let p = 5.0;
        let sp = Spectral::new(n, p);
        let f = samples(n, p, |z| (TAU * z / p).sin());
        let d = sp.derivative(&f, 1);
        for k in 0..n {
            let z = p * k as f64 / n as f64;
            assert!((d[k] - TAU / p * (TAU * z / p).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_and_antiderivative() {
        for n in [15, 16] {
            let sp = Spectral::new(n, TAU);
            let c = sp.forward(&samples(n, TAU, |z| 1.0 + (2.0 * z).cos() + (5.0 * z).sin()));
            for z in [0.1, 1.3, 4.0] {
                let v = interpolate(&c, TAU, z);
                assert!((v - (1.0 + (2.0 * z).cos() + (5.0 * z).sin())).abs() < 1e-12);
                let a = antiderivative(&c, TAU, z);
                let exact = z + (2.0 * z).sin() / 2.0 + (1.0 - (5.0 * z).cos()) / 5.0;
                assert!((a - exact).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_thirds_filter_removes_high_modes() {
        let n = 30;
        let sp = Spectral::new(n, TAU);
        let mut f = samples(n, TAU, |z| z.sin() + (12.0 * z).cos());
        sp.filter_two_thirds(&mut f);
        for k in 0..n {
            let z = TAU * k as f64 / n as f64;
            assert!((f[k] - z.sin()).abs() < 1e-12);
        }
    }
}
