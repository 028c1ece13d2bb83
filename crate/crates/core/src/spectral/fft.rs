use num_complex::Complex64;

use crate::error::{Error, Result};

/// Real DFT plan for a fixed length `T`, keeping the `⌊T/2⌋+1`
/// non-negative frequencies.
///
/// Sequences here are a handful of steps long, so the transform is a direct
/// O(T·M) sum over cached twiddles. Forward is unnormalized; the inverse
/// carries the 1/T.
#[derive(Debug, Clone)]
pub struct RealDft {
    len: usize,
    modes: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl RealDft {
    pub fn new(len: usize) -> Self {
        assert!(len >= 1, "DFT length must be positive");
        let modes = len / 2 + 1;
        let mut cos = Vec::with_capacity(modes * len);
        let mut sin = Vec::with_capacity(modes * len);
        for m in 0..modes {
            for t in 0..len {
                // Reduce m·t mod T first so the angle stays in [0, 2π).
                let k = (m * t) % len;
                let theta = 2.0 * std::f64::consts::PI * k as f64 / len as f64;
                cos.push(theta.cos());
                sin.push(theta.sin());
            }
        }
        Self {
            len,
            modes,
            cos,
            sin,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// X_m = Σ_t x_t e^{−2πi·m·t/T}.
    pub fn forward_into(&self, x: &[f64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.len);
        debug_assert_eq!(out.len(), self.modes);
        for (m, slot) in out.iter_mut().enumerate() {
            let (c, s) = self.twiddles(m);
            let mut re = 0.0;
            let mut im = 0.0;
            for t in 0..self.len {
                re += x[t] * c[t];
                im -= x[t] * s[t];
            }
            *slot = Complex64::new(re, im);
        }
    }

    /// Inverse of [`forward_into`](Self::forward_into) under Hermitian
    /// symmetry. The imaginary parts of the DC and (even-length) Nyquist
    /// bins are ignored.
    pub fn inverse_into(&self, spectrum: &[Complex64], out: &mut [f64]) {
        debug_assert_eq!(spectrum.len(), self.modes);
        debug_assert_eq!(out.len(), self.len);
        out.fill(0.0);
        for (m, z) in spectrum.iter().enumerate() {
            let weight = self.mode_weight(m) / self.len as f64;
            let (c, s) = self.twiddles(m);
            for t in 0..self.len {
                out[t] += weight * (z.re * c[t] - z.im * s[t]);
            }
        }
    }

    /// Gradient of a real loss with respect to the spectrum fed to
    /// [`inverse_into`](Self::inverse_into), packed as ∂/∂re + i·∂/∂im.
    pub fn inverse_adjoint_into(&self, upstream: &[f64], out: &mut [Complex64]) {
        debug_assert_eq!(upstream.len(), self.len);
        debug_assert_eq!(out.len(), self.modes);
        for (m, slot) in out.iter_mut().enumerate() {
            let weight = self.mode_weight(m) / self.len as f64;
            let (c, s) = self.twiddles(m);
            let mut re = 0.0;
            let mut im = 0.0;
            for t in 0..self.len {
                re += upstream[t] * c[t];
                im -= upstream[t] * s[t];
            }
            *slot = Complex64::new(weight * re, weight * im);
        }
    }

    /// Gradient with respect to the real input of
    /// [`forward_into`](Self::forward_into), given the packed spectrum gradient.
    pub fn forward_adjoint_into(&self, grad_spectrum: &[Complex64], out: &mut [f64]) {
        debug_assert_eq!(grad_spectrum.len(), self.modes);
        debug_assert_eq!(out.len(), self.len);
        out.fill(0.0);
        for (m, g) in grad_spectrum.iter().enumerate() {
            let (c, s) = self.twiddles(m);
            for t in 0..self.len {
                out[t] += g.re * c[t] - g.im * s[t];
            }
        }
    }

    #[inline]
    fn twiddles(&self, m: usize) -> (&[f64], &[f64]) {
        let span = m * self.len..(m + 1) * self.len;
        (&self.cos[span.clone()], &self.sin[span])
    }

    #[inline]
    fn mode_weight(&self, m: usize) -> f64 {
        if m == 0 || (self.len.is_multiple_of(2) && m == self.len / 2) {
            1.0
        } else {
            2.0
        }
    }
}

/// Forward real FFT of `x`, returning `⌊T/2⌋+1` bins.
pub fn rfft(x: &[f64]) -> Vec<Complex64> {
    let plan = RealDft::new(x.len());
    let mut out = vec![Complex64::default(); plan.modes()];
    plan.forward_into(x, &mut out);
    out
}

/// Inverse real FFT back to `len` samples.
pub fn irfft(spectrum: &[Complex64], len: usize) -> Result<Vec<f64>> {
    let expected = len / 2 + 1;
    if len == 0 || spectrum.len() != expected {
        return Err(Error::ModeCountMismatch {
            expected,
            got: spectrum.len(),
        });
    }
    let plan = RealDft::new(len);
    let mut out = vec![0.0; len];
    plan.inverse_into(spectrum, &mut out);
    Ok(out)
}
