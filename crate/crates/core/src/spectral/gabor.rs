use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::fft::RealDft;
use super::rotate::{rotate_block, rotate_block_inverse};
use super::SequenceBlock;
use crate::error::{Error, Result};

/// Normalized frequency of mode `m` out of `modes`, spanning [0, 1] from DC
/// to Nyquist.
#[inline]
pub fn normalized_frequency(m: usize, modes: usize) -> f64 {
    if modes > 1 {
        m as f64 / (modes - 1) as f64
    } else {
        0.0
    }
}

/// Gaussian band-pass mask G_m = exp(−(f_m − μ)² / 2σ²) over `modes` bins.
pub fn gabor_filter(mu: f64, sigma: f64, modes: usize) -> Vec<f64> {
    (0..modes)
        .map(|m| {
            let d = normalized_frequency(m, modes) - mu;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect()
}

/// Switches for the parts of a spectral block that can be ablated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpectralOptions {
    /// Apply the dyadic channel rotation before the transform.
    pub rotate: bool,
    /// Gate each channel pair with its Gabor mask; otherwise the mask is all ones.
    pub gabor: bool,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            rotate: true,
            gabor: true,
        }
    }
}

/// Borrowed parameters of one Gabor spectral layer.
///
/// `mu` and `log_sigma` are `d_in × d_out`; `w` holds `d_in × d_out × modes`
/// complex weights interleaved as `[re, im]`. Index order is
/// `(i * d_out + j) * modes + m`.
#[derive(Debug, Clone, Copy)]
pub struct LayerView<'a> {
    pub d_in: usize,
    pub d_out: usize,
    pub modes: usize,
    pub mu: &'a [f64],
    pub log_sigma: &'a [f64],
    pub w: &'a [f64],
}

impl LayerView<'_> {
    fn check(&self) -> Result<()> {
        let pairs = self.d_in * self.d_out;
        if self.mu.len() != pairs
            || self.log_sigma.len() != pairs
            || self.w.len() != 2 * pairs * self.modes
        {
            return Err(Error::ShapeMismatch(format!(
                "spectral layer {}x{}x{} has mu {}, log_sigma {}, w {}",
                self.d_in,
                self.d_out,
                self.modes,
                self.mu.len(),
                self.log_sigma.len(),
                self.w.len()
            )));
        }
        Ok(())
    }
}

/// Owned Gabor spectral convolution layer.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborSpectralLayer {
    pub d_in: usize,
    pub d_out: usize,
    pub modes: usize,
    pub mu: Vec<f64>,
    pub log_sigma: Vec<f64>,
    pub w: Vec<f64>,
}

impl GaborSpectralLayer {
    /// μ ~ U[0, 1], σ = 0.5, W complex Gaussian with E|W|² = 1/(d_in·M).
    pub fn random<R: Rng + ?Sized>(d_in: usize, d_out: usize, steps: usize, rng: &mut R) -> Self {
        let modes = steps / 2 + 1;
        let pairs = d_in * d_out;
        let mu = (0..pairs).map(|_| rng.gen::<f64>()).collect();
        let log_sigma = vec![0.5f64.ln(); pairs];
        let std = (1.0 / (d_in * modes) as f64).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
        let normal = Normal::new(0.0, std).expect("finite std");
        let w = (0..2 * pairs * modes).map(|_| normal.sample(rng)).collect();
        Self {
            d_in,
            d_out,
            modes,
            mu,
            log_sigma,
            w,
        }
    }

    pub fn view(&self) -> LayerView<'_> {
        LayerView {
            d_in: self.d_in,
            d_out: self.d_out,
            modes: self.modes,
            mu: &self.mu,
            log_sigma: &self.log_sigma,
            w: &self.w,
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.mu.len() + self.log_sigma.len() + self.w.len()
    }
}

/// Gradients of a scalar objective through one spectral layer.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGradients {
    pub grad_x: SequenceBlock,
    pub grad_mu: Vec<f64>,
    pub grad_log_sigma: Vec<f64>,
    /// Interleaved `[∂/∂re, ∂/∂im]` per complex weight.
    pub grad_w: Vec<f64>,
}

/// Effective per-mode kernel K_ijm = G_ijm · W_ijm, precomputed once per
/// parameter state and shared across every sample of a batch.
#[derive(Debug, Clone)]
pub struct SpectralKernel {
    d_in: usize,
    d_out: usize,
    modes: usize,
    gabor: bool,
    mask: Vec<f64>,
    kernel: Vec<Complex64>,
}

impl SpectralKernel {
    pub fn new(layer: &LayerView<'_>, gabor: bool) -> Result<Self> {
        layer.check()?;
        let n = layer.d_in * layer.d_out * layer.modes;
        let mut mask = vec![1.0; n];
        let mut kernel = Vec::with_capacity(n);
        for pair in 0..layer.d_in * layer.d_out {
            let sigma = layer.log_sigma[pair].exp();
            for m in 0..layer.modes {
                let idx = pair * layer.modes + m;
                if gabor {
                    let d = normalized_frequency(m, layer.modes) - layer.mu[pair];
                    mask[idx] = (-d * d / (2.0 * sigma * sigma)).exp();
                }
                let w = Complex64::new(layer.w[2 * idx], layer.w[2 * idx + 1]);
                kernel.push(w * mask[idx]);
            }
        }
        Ok(Self {
            d_in: layer.d_in,
            d_out: layer.d_out,
            modes: layer.modes,
            gabor,
            mask,
            kernel,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Length of the accumulator expected by [`backward`](Self::backward).
    pub fn kernel_len(&self) -> usize {
        self.kernel.len()
    }

    /// Y_jm = Σ_i F_im · K_ijm; `spectra_in` is `d_in × modes`, channel-major.
    fn mix(&self, spectra_in: &[Complex64], out: &mut [Complex64]) {
        out.fill(Complex64::default());
        for i in 0..self.d_in {
            let f = &spectra_in[i * self.modes..(i + 1) * self.modes];
            for j in 0..self.d_out {
                let k = &self.kernel[(i * self.d_out + j) * self.modes..][..self.modes];
                let y = &mut out[j * self.modes..(j + 1) * self.modes];
                for m in 0..self.modes {
                    y[m] += f[m] * k[m];
                }
            }
        }
    }

    /// Time-domain forward on an already rotated (or deliberately unrotated)
    /// block. Returns the output and the input spectra needed for backprop.
    pub fn forward(&self, x: &SequenceBlock, dft: &RealDft) -> (SequenceBlock, Vec<Complex64>) {
        debug_assert_eq!(x.channels(), self.d_in);
        debug_assert_eq!(dft.modes(), self.modes);
        let steps = x.steps();
        let mut spectra_in = vec![Complex64::default(); self.d_in * self.modes];
        let mut column = vec![0.0; steps];
        for i in 0..self.d_in {
            for (t, slot) in column.iter_mut().enumerate() {
                *slot = x.get(t, i);
            }
            dft.forward_into(
                &column,
                &mut spectra_in[i * self.modes..(i + 1) * self.modes],
            );
        }
        let mut spectra_out = vec![Complex64::default(); self.d_out * self.modes];
        self.mix(&spectra_in, &mut spectra_out);
        let mut out = SequenceBlock::zeros(steps, self.d_out);
        for j in 0..self.d_out {
            dft.inverse_into(
                &spectra_out[j * self.modes..(j + 1) * self.modes],
                &mut column,
            );
            for (t, v) in column.iter().enumerate() {
                out.set(t, j, *v);
            }
        }
        (out, spectra_in)
    }

    /// Backpropagates `upstream` (∂objective/∂output). Accumulates the packed
    /// kernel gradient into `grad_kernel` and returns ∂objective/∂input.
    pub fn backward(
        &self,
        spectra_in: &[Complex64],
        upstream: &SequenceBlock,
        dft: &RealDft,
        grad_kernel: &mut [Complex64],
    ) -> SequenceBlock {
        let steps = upstream.steps();
        let modes = self.modes;
        let mut grad_y = vec![Complex64::default(); self.d_out * modes];
        let mut column = vec![0.0; steps];
        for j in 0..self.d_out {
            for (t, slot) in column.iter_mut().enumerate() {
                *slot = upstream.get(t, j);
            }
            dft.inverse_adjoint_into(&column, &mut grad_y[j * modes..(j + 1) * modes]);
        }
        let mut grad_f = vec![Complex64::default(); self.d_in * modes];
        for i in 0..self.d_in {
            let f = &spectra_in[i * modes..(i + 1) * modes];
            let gf = &mut grad_f[i * modes..(i + 1) * modes];
            for j in 0..self.d_out {
                let base = (i * self.d_out + j) * modes;
                let gy = &grad_y[j * modes..(j + 1) * modes];
                for m in 0..modes {
                    grad_kernel[base + m] += gy[m] * f[m].conj();
                    gf[m] += gy[m] * self.kernel[base + m].conj();
                }
            }
        }
        let mut grad_x = SequenceBlock::zeros(steps, self.d_in);
        for i in 0..self.d_in {
            dft.forward_adjoint_into(&grad_f[i * modes..(i + 1) * modes], &mut column);
            for (t, v) in column.iter().enumerate() {
                grad_x.set(t, i, *v);
            }
        }
        grad_x
    }

    /// Converts an accumulated kernel gradient into gradients for μ, log σ
    /// and the interleaved complex weights.
    pub fn parameter_gradients(
        &self,
        layer: &LayerView<'_>,
        grad_kernel: &[Complex64],
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let pairs = self.d_in * self.d_out;
        let mut grad_mu = vec![0.0; pairs];
        let mut grad_log_sigma = vec![0.0; pairs];
        let mut grad_w = vec![0.0; 2 * pairs * self.modes];
        for pair in 0..pairs {
            let sigma2 = (2.0 * layer.log_sigma[pair]).exp();
            for m in 0..self.modes {
                let idx = pair * self.modes + m;
                let gk = grad_kernel[idx];
                let g = self.mask[idx];
                grad_w[2 * idx] = gk.re * g;
                grad_w[2 * idx + 1] = gk.im * g;
                if self.gabor {
                    let w = Complex64::new(layer.w[2 * idx], layer.w[2 * idx + 1]);
                    let grad_mask = (gk * w.conj()).re;
                    let d = normalized_frequency(m, self.modes) - layer.mu[pair];
                    grad_mu[pair] += grad_mask * g * d / sigma2;
                    grad_log_sigma[pair] += grad_mask * g * d * d / sigma2;
                }
            }
        }
        (grad_mu, grad_log_sigma, grad_w)
    }
}

fn check_input(x: &SequenceBlock, layer: &LayerView<'_>) -> Result<()> {
    if x.steps() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "spectral input needs at least 2 steps, got {}",
            x.steps()
        )));
    }
    if x.channels() != layer.d_in {
        return Err(Error::ShapeMismatch(format!(
            "input has {} channels, layer expects {}",
            x.channels(),
            layer.d_in
        )));
    }
    let modes = x.steps() / 2 + 1;
    if modes != layer.modes {
        return Err(Error::ModeCountMismatch {
            expected: modes,
            got: layer.modes,
        });
    }
    Ok(())
}

/// Rotate, transform, gate, mix and invert: the full Gabor spectral block.
pub fn spectral_forward(x: &SequenceBlock, layer: &GaborSpectralLayer) -> Result<SequenceBlock> {
    spectral_forward_with(x, &layer.view(), SpectralOptions::default())
}

pub fn spectral_forward_with(
    x: &SequenceBlock,
    layer: &LayerView<'_>,
    opts: SpectralOptions,
) -> Result<SequenceBlock> {
    check_input(x, layer)?;
    let kernel = SpectralKernel::new(layer, opts.gabor)?;
    let dft = RealDft::new(x.steps());
    let rotated = if opts.rotate {
        rotate_block(x)
    } else {
        x.clone()
    };
    Ok(kernel.forward(&rotated, &dft).0)
}

/// Exact gradients of ⟨upstream, spectral_forward(x)⟩.
pub fn spectral_gradients(
    x: &SequenceBlock,
    layer: &GaborSpectralLayer,
    upstream: &SequenceBlock,
) -> Result<SpectralGradients> {
    spectral_gradients_with(x, &layer.view(), upstream, SpectralOptions::default())
}

pub fn spectral_gradients_with(
    x: &SequenceBlock,
    layer: &LayerView<'_>,
    upstream: &SequenceBlock,
    opts: SpectralOptions,
) -> Result<SpectralGradients> {
    check_input(x, layer)?;
    if upstream.steps() != x.steps() || upstream.channels() != layer.d_out {
        return Err(Error::ShapeMismatch(format!(
            "upstream is {}x{}, expected {}x{}",
            upstream.steps(),
            upstream.channels(),
            x.steps(),
            layer.d_out
        )));
    }
    let kernel = SpectralKernel::new(layer, opts.gabor)?;
    let dft = RealDft::new(x.steps());
    let rotated = if opts.rotate {
        rotate_block(x)
    } else {
        x.clone()
    };
    let (_, spectra_in) = kernel.forward(&rotated, &dft);
    let mut grad_kernel = vec![Complex64::default(); kernel.kernel_len()];
    let grad_rotated = kernel.backward(&spectra_in, upstream, &dft, &mut grad_kernel);
    let grad_x = if opts.rotate {
        rotate_block_inverse(&grad_rotated)
    } else {
        grad_rotated
    };
    let (grad_mu, grad_log_sigma, grad_w) = kernel.parameter_gradients(layer, &grad_kernel);
    Ok(SpectralGradients {
        grad_x,
        grad_mu,
        grad_log_sigma,
        grad_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn filter_peaks_at_centre() {
        let g = gabor_filter(0.5, 0.2, 3);
        assert_eq!(g[1], 1.0);
        let g = gabor_filter(0.0, 0.01, 4);
        assert_eq!(g[0], 1.0);
    }

    #[test]
    fn wide_filter_is_flat() {
        let g = gabor_filter(0.3, 1e6, 9);
        assert!(g.iter().all(|v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn three_mode_example() {
        let g = gabor_filter(0.5, 0.1, 3);
        let edge = (-12.5f64).exp();
        assert!((g[0] - edge).abs() < 1e-18);
        assert_eq!(g[1], 1.0);
        assert!((g[2] - edge).abs() < 1e-18);
    }

    #[test]
    fn single_mode_frequency_is_zero() {
        assert_eq!(gabor_filter(0.0, 0.3, 1), vec![1.0]);
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut layer = GaborSpectralLayer::random(7, 4, 5, &mut rng);
        layer.w.fill(0.0);
        let x = SequenceBlock::from_vec(5, 7, (0..35).map(|v| v as f64).collect()).unwrap();
        let y = spectral_forward(&x, &layer).unwrap();
        assert!(y.as_slice().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_filter_reproduces_rotated_input() {
        let layer = GaborSpectralLayer {
            d_in: 1,
            d_out: 1,
            modes: 3,
            mu: vec![0.5],
            log_sigma: vec![1e6f64.ln()],
            w: vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
        };
        let x = SequenceBlock::from_vec(5, 1, vec![0.3, -1.2, 2.0, 0.7, 0.1]).unwrap();
        let y = spectral_forward(&x, &layer).unwrap();
        let expected = rotate_block(&x);
        for (a, b) in y.as_slice().iter().zip(expected.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }

        let upstream = SequenceBlock::from_vec(5, 1, vec![1.0, 0.5, -2.0, 0.0, 3.0]).unwrap();
        let grads = spectral_gradients(&x, &layer, &upstream).unwrap();
        let routed = rotate_block_inverse(&upstream);
        for (a, b) in grads.grad_x.as_slice().iter().zip(routed.as_slice()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let layer = GaborSpectralLayer::random(3, 2, 6, &mut rng);
        let x = SequenceBlock::from_vec(6, 3, (0..18).map(|v| (v as f64).sin()).collect()).unwrap();
        let g = spectral_gradients(&x, &layer, &SequenceBlock::zeros(6, 2)).unwrap();
        assert!(g.grad_x.as_slice().iter().all(|v| *v == 0.0));
        assert!(g
            .grad_mu
            .iter()
            .chain(&g.grad_log_sigma)
            .chain(&g.grad_w)
            .all(|v| *v == 0.0));
    }

    #[test]
    fn shape_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let layer = GaborSpectralLayer::random(3, 2, 5, &mut rng);
        let wrong_channels = SequenceBlock::zeros(5, 4);
        assert!(matches!(
            spectral_forward(&wrong_channels, &layer),
            Err(Error::ShapeMismatch(_))
        ));
        let wrong_steps = SequenceBlock::zeros(8, 3);
        assert!(matches!(
            spectral_forward(&wrong_steps, &layer),
            Err(Error::ModeCountMismatch { .. })
        ));
        let x = SequenceBlock::zeros(5, 3);
        assert!(matches!(
            spectral_gradients(&x, &layer, &SequenceBlock::zeros(5, 3)),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
