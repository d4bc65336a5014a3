use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Periodic `n × n` grid of spacing `2L/n` with its Fourier multipliers.
///
/// The Beurling transform is the multiplier `ξ̄/ξ` and the Cauchy transform
/// (inverse of `∂/∂z̄`) is `-2i/ξ`, with `ξ = k_x + i k_y`. Both vanish on the
/// zero mode and on the Nyquist row and column.
pub(crate) struct PeriodicTransforms {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    beurling: Vec<Complex64>,
    cauchy: Vec<Complex64>,
}

impl PeriodicTransforms {
    pub fn new(n: usize, half_width: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let wave = |m: usize| -> Option<f64> {
            let freq = if 2 * m < n {
                m as f64
            } else if 2 * m == n {
                return None;
            } else {
                m as f64 - n as f64
            };
            Some(PI * freq / half_width)
        };
        let mut beurling = vec![Complex64::new(0.0, 0.0); n * n];
        let mut cauchy = beurling.clone();
        for j in 0..n {
            for i in 0..n {
                let (Some(kx), Some(ky)) = (wave(i), wave(j)) else {
                    continue;
                };
                if i == 0 && j == 0 {
                    continue;
                }
                let xi = Complex64::new(kx, ky);
                beurling[j * n + i] = xi.conj() / xi;
                cauchy[j * n + i] = Complex64::new(0.0, -2.0) / xi;
            }
        }
        Self {
            n,
            forward,
            inverse,
            beurling,
            cauchy,
        }
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        fft.process(data);
        transpose(data, n);
        fft.process(data);
        transpose(data, n);
    }

    fn apply(&self, input: &[Complex64], multiplier: &[Complex64]) -> Vec<Complex64> {
        let mut buf = input.to_vec();
        self.transform(&mut buf, &self.forward);
        for (b, m) in buf.iter_mut().zip(multiplier) {
            *b *= m;
        }
        self.transform(&mut buf, &self.inverse);
        let scale = 1.0 / (self.n * self.n) as f64;
        for b in &mut buf {
            *b *= scale;
        }
        buf
    }

    pub fn beurling(&self, input: &[Complex64]) -> Vec<Complex64> {
        self.apply(input, &self.beurling)
    }

    pub fn cauchy(&self, input: &[Complex64]) -> Vec<Complex64> {
        self.apply(input, &self.cauchy)
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            data.swap(j * n + i, i * n + j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, l: f64, f: impl Fn(f64, f64) -> Complex64) -> Vec<Complex64> {
        let h = 2.0 * l / n as f64;
        (0..n * n)
            .map(|k| f(-l + (k % n) as f64 * h, -l + (k / n) as f64 * h))
            .collect()
    }

    #[test]
    fn cauchy_inverts_dzbar_on_a_fourier_mode() {
        // f = e^{i(ax+by)} has ∂f/∂z̄ = (i/2)(a+ib) f.
        let (n, l) = (32, PI);
        let t = PeriodicTransforms::new(n, l);
        let (a, b) = (2.0, -3.0);
        let f = grid(n, l, |x, y| Complex64::new(0.0, a * x + b * y).exp());
        let dzbar: Vec<_> = f
            .iter()
            .map(|v| v * Complex64::new(0.0, 0.5) * Complex64::new(a, b))
            .collect();
        let back = t.cauchy(&dzbar);
        let err = back.iter().zip(&f).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn beurling_is_an_isometry_on_mean_free_data() {
        let (n, l) = (32, 2.0);
        let t = PeriodicTransforms::new(n, l);
        let f = grid(n, l, |x, y| {
            Complex64::new((-(x * x + y * y) * 2.0).exp(), 0.3 * (x * PI / 2.0).sin())
        });
        let mean = f.iter().sum::<Complex64>() / (n * n) as f64;
        let f: Vec<_> = f.iter().map(|v| v - mean).collect();
        let s = t.beurling(&f);
        let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        // Only the (tiny) Nyquist content is removed.
        assert!((norm(&s) - norm(&f)).abs() < 1e-6 * norm(&f));
    }

    #[test]
    fn beurling_maps_dzbar_to_dz() {
        // f = exp(-r²): f_z̄ = -z f, f_z = -z̄ f.
        let (n, l) = (64, 6.0);
        let t = PeriodicTransforms::new(n, l);
        let dzbar = grid(n, l, |x, y| {
            let z = Complex64::new(x, y);
            -z * (-(x * x + y * y)).exp()
        });
        let dz = grid(n, l, |x, y| {
            let z = Complex64::new(x, y);
            -z.conj() * (-(x * x + y * y)).exp()
        });
        let s = t.beurling(&dzbar);
        let err = s.iter().zip(&dz).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }
}
