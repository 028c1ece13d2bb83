use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::{check_layout, TENSORS_PER_BLOCK};
use super::{ContextVector, FeatureWindow, ModelConfig, ParameterSet, ResidualNet, CONTEXT_LEN};
use crate::error::{Error, Result};
use crate::spectral::{
    rotate_block, rotate_block_inverse, LayerView, RealDft, SequenceBlock, SpectralKernel,
};

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_K: f64 = 0.044_715;

#[inline]
fn gelu(z: f64) -> f64 {
    0.5 * z * (1.0 + (GELU_C * (z + GELU_K * z * z * z)).tanh())
}

#[inline]
fn gelu_grad(z: f64) -> f64 {
    let th = (GELU_C * (z + GELU_K * z * z * z)).tanh();
    0.5 * (1.0 + th) + 0.5 * z * (1.0 - th * th) * GELU_C * (1.0 + 3.0 * GELU_K * z * z)
}

/// What one block remembers from the forward pass for backprop.
#[derive(Debug, Clone)]
pub struct BlockTrace {
    input: SequenceBlock,
    spectra: Vec<Complex64>,
    pre_activation: SequenceBlock,
    /// Per-element dropout multipliers (0 or 1/(1-p)); `None` in eval mode.
    dropout: Option<Vec<f64>>,
}

/// Forward-pass record of one sample through every block.
#[derive(Debug, Clone)]
pub struct SampleTrace {
    blocks: Vec<BlockTrace>,
    pooled: Vec<f64>,
}

/// The spectral encoder/decoder with a linear head, ready for repeated
/// evaluation. Each block computes
/// `GELU(Spectral(Rotate(X)) + X·W_skip + b)` followed by dropout during
/// training. The encoder keeps the full `window × hidden` sequence; the
/// decoder appends the context vector to every step, and its output is
/// averaged over time before the head.
#[derive(Debug, Clone)]
pub struct Network {
    cfg: ModelConfig,
    params: ParameterSet,
    dims: Vec<(usize, usize)>,
    kernels: Vec<SpectralKernel>,
    dft: RealDft,
}

impl Network {
    pub fn new(cfg: ModelConfig, params: ParameterSet) -> Result<Self> {
        cfg.validate()?;
        check_layout(&cfg, &params)?;
        let dims = cfg.block_dims();
        let modes = cfg.modes();
        let mut kernels = Vec::with_capacity(dims.len());
        for (b, &(d_in, d_out)) in dims.iter().enumerate() {
            let t = &params.tensors()[b * TENSORS_PER_BLOCK..];
            let view = LayerView {
                d_in,
                d_out,
                modes,
                mu: &t[0].data,
                log_sigma: &t[1].data,
                w: &t[2].data,
            };
            kernels.push(SpectralKernel::new(&view, !cfg.ablate_gabor)?);
        }
        let dft = RealDft::new(cfg.window);
        Ok(Self {
            cfg,
            params,
            dims,
            kernels,
            dft,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParameterSet {
        &self.params
    }

    pub fn into_params(self) -> ParameterSet {
        self.params
    }

    fn block_tensor(&self, block: usize, k: usize) -> &[f64] {
        &self.params.tensors()[block * TENSORS_PER_BLOCK + k].data
    }

    fn head(&self) -> (&[f64], &[f64]) {
        let t = self.params.tensors();
        let n = t.len();
        (&t[n - 2].data, &t[n - 1].data)
    }

    fn check_window(&self, window: &FeatureWindow) -> Result<()> {
        if window.steps() != self.cfg.window || window.channels() != self.cfg.features {
            return Err(Error::ShapeMismatch(format!(
                "feature window is {}x{}, model expects {}x{}",
                window.steps(),
                window.channels(),
                self.cfg.window,
                self.cfg.features
            )));
        }
        Ok(())
    }

    fn block_forward(
        &self,
        block: usize,
        x: SequenceBlock,
        rng: Option<&mut ChaCha8Rng>,
    ) -> (SequenceBlock, BlockTrace) {
        let (d_in, d_out) = self.dims[block];
        let steps = x.steps();
        let kernel = &self.kernels[block];
        let (mut z, spectra) = if self.cfg.ablate_rotate {
            kernel.forward(&x, &self.dft)
        } else {
            kernel.forward(&rotate_block(&x), &self.dft)
        };
        let w = self.block_tensor(block, 3);
        let bias = self.block_tensor(block, 4);
        for t in 0..steps {
            let xr = x.row(t);
            let zr = z.row_mut(t);
            for (j, b) in bias.iter().enumerate() {
                zr[j] += b;
            }
            for (i, xi) in xr.iter().enumerate().take(d_in) {
                let wr = &w[i * d_out..(i + 1) * d_out];
                for (zj, wij) in zr.iter_mut().zip(wr) {
                    *zj += xi * wij;
                }
            }
        }
        let mut y = SequenceBlock::from_vec(
            steps,
            d_out,
            z.as_slice().iter().map(|v| gelu(*v)).collect(),
        )
        .expect("same shape");
        let p = self.cfg.dropout;
        let dropout = match rng {
            Some(rng) if p > 0.0 => {
                let keep = 1.0 / (1.0 - p);
                let mask: Vec<f64> = (0..steps * d_out)
                    .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
                    .collect();
                for (v, m) in y.as_mut_slice().iter_mut().zip(&mask) {
                    *v *= m;
                }
                Some(mask)
            }
            _ => None,
        };
        let trace = BlockTrace {
            input: x,
            spectra,
            pre_activation: z,
            dropout,
        };
        (y, trace)
    }

    /// Returns ∂objective/∂input of the block and accumulates parameter
    /// gradients.
    fn block_backward(
        &self,
        block: usize,
        trace: &BlockTrace,
        mut grad: SequenceBlock,
        acc: &mut GradAccumulator,
    ) -> SequenceBlock {
        let (d_in, d_out) = self.dims[block];
        if let Some(mask) = &trace.dropout {
            for (g, m) in grad.as_mut_slice().iter_mut().zip(mask) {
                *g *= m;
            }
        }
        for (g, z) in grad
            .as_mut_slice()
            .iter_mut()
            .zip(trace.pre_activation.as_slice())
        {
            *g *= gelu_grad(*z);
        }
        let steps = grad.steps();
        let w = self.block_tensor(block, 3);
        let gw = &mut acc.skip_w[block];
        let gb = &mut acc.skip_b[block];
        let mut grad_x = SequenceBlock::zeros(steps, d_in);
        for t in 0..steps {
            let g = grad.row(t);
            let x = trace.input.row(t);
            for (gbj, gj) in gb.iter_mut().zip(g) {
                *gbj += gj;
            }
            let gx = grad_x.row_mut(t);
            for i in 0..d_in {
                let wr = &w[i * d_out..(i + 1) * d_out];
                let gwr = &mut gw[i * d_out..(i + 1) * d_out];
                let mut s = 0.0;
                for j in 0..d_out {
                    gwr[j] += x[i] * g[j];
                    s += wr[j] * g[j];
                }
                gx[i] = s;
            }
        }
        let spectral =
            self.kernels[block].backward(&trace.spectra, &grad, &self.dft, &mut acc.kernels[block]);
        let spectral = if self.cfg.ablate_rotate {
            spectral
        } else {
            rotate_block_inverse(&spectral)
        };
        for (a, b) in grad_x.as_mut_slice().iter_mut().zip(spectral.as_slice()) {
            *a += b;
        }
        grad_x
    }

    fn run_blocks(
        &self,
        range: std::ops::Range<usize>,
        mut x: SequenceBlock,
        mut rng: Option<&mut ChaCha8Rng>,
        traces: &mut Vec<BlockTrace>,
    ) -> SequenceBlock {
        for b in range {
            let (y, trace) = self.block_forward(b, x, rng.as_deref_mut());
            traces.push(trace);
            x = y;
        }
        x
    }

    /// Encoder pass; `rng` enables dropout.
    pub fn encode(
        &self,
        window: &FeatureWindow,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<SequenceBlock> {
        self.check_window(window)?;
        let mut traces = Vec::new();
        Ok(self.run_blocks(0..self.cfg.encoder_blocks, window.clone(), rng, &mut traces))
    }

    fn decoder_input(&self, encoded: &SequenceBlock, context: &ContextVector) -> SequenceBlock {
        let h = self.cfg.hidden;
        let mut x = SequenceBlock::zeros(encoded.steps(), h + CONTEXT_LEN);
        for t in 0..encoded.steps() {
            let row = x.row_mut(t);
            row[..h].copy_from_slice(encoded.row(t));
            row[h..].copy_from_slice(&context.0);
        }
        x
    }

    fn pool_and_head(&self, decoded: &SequenceBlock) -> (Vec<f64>, [f64; 2]) {
        let h = self.cfg.hidden;
        let steps = decoded.steps() as f64;
        let mut pooled = vec![0.0; h];
        for t in 0..decoded.steps() {
            for (p, v) in pooled.iter_mut().zip(decoded.row(t)) {
                *p += v;
            }
        }
        for p in &mut pooled {
            *p /= steps;
        }
        let (hw, hb) = self.head();
        let mut out = [hb[0], hb[1]];
        for (j, p) in pooled.iter().enumerate() {
            out[0] += p * hw[2 * j];
            out[1] += p * hw[2 * j + 1];
        }
        (pooled, out)
    }

    /// Decoder pass plus pooling and head; `rng` enables dropout.
    pub fn decode(
        &self,
        encoded: &SequenceBlock,
        context: &ContextVector,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<[f64; 2]> {
        if encoded.steps() != self.cfg.window || encoded.channels() != self.cfg.hidden {
            return Err(Error::ShapeMismatch(format!(
                "encoded sequence is {}x{}, decoder expects {}x{}",
                encoded.steps(),
                encoded.channels(),
                self.cfg.window,
                self.cfg.hidden
            )));
        }
        let n = self.dims.len();
        let mut traces = Vec::new();
        let x = self.decoder_input(encoded, context);
        let decoded = self.run_blocks(self.cfg.encoder_blocks..n, x, rng, &mut traces);
        Ok(self.pool_and_head(&decoded).1)
    }

    /// Full forward pass keeping everything backprop needs.
    pub fn forward_trace(
        &self,
        window: &FeatureWindow,
        context: &ContextVector,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<([f64; 2], SampleTrace)> {
        self.check_window(window)?;
        let n = self.dims.len();
        let mut blocks = Vec::with_capacity(n);
        let enc = self.run_blocks(
            0..self.cfg.encoder_blocks,
            window.clone(),
            rng.as_deref_mut(),
            &mut blocks,
        );
        let x = self.decoder_input(&enc, context);
        let dec = self.run_blocks(self.cfg.encoder_blocks..n, x, rng, &mut blocks);
        let (pooled, out) = self.pool_and_head(&dec);
        Ok((out, SampleTrace { blocks, pooled }))
    }

    /// Accumulates the gradient of `grad_out · output` into `acc`.
    pub fn backward(&self, trace: &SampleTrace, grad_out: [f64; 2], acc: &mut GradAccumulator) {
        let h = self.cfg.hidden;
        let (hw, _) = self.head();
        acc.head_b[0] += grad_out[0];
        acc.head_b[1] += grad_out[1];
        let steps = self.cfg.window;
        let mut grad_pooled = vec![0.0; h];
        for (j, p) in trace.pooled.iter().enumerate() {
            acc.head_w[2 * j] += p * grad_out[0];
            acc.head_w[2 * j + 1] += p * grad_out[1];
            grad_pooled[j] = (hw[2 * j] * grad_out[0] + hw[2 * j + 1] * grad_out[1]) / steps as f64;
        }
        let mut grad = SequenceBlock::zeros(steps, h);
        for t in 0..steps {
            grad.row_mut(t).copy_from_slice(&grad_pooled);
        }
        let n = self.dims.len();
        for b in (self.cfg.encoder_blocks..n).rev() {
            grad = self.block_backward(b, &trace.blocks[b], grad, acc);
        }
        let mut grad_enc = SequenceBlock::zeros(steps, h);
        for t in 0..steps {
            grad_enc.row_mut(t).copy_from_slice(&grad.row(t)[..h]);
        }
        grad = grad_enc;
        for b in (0..self.cfg.encoder_blocks).rev() {
            grad = self.block_backward(b, &trace.blocks[b], grad, acc);
        }
    }

    /// Empty gradient accumulator sized for this network.
    pub fn accumulator(&self) -> GradAccumulator {
        GradAccumulator {
            kernels: self
                .kernels
                .iter()
                .map(|k| vec![Complex64::default(); k.kernel_len()])
                .collect(),
            skip_w: self.dims.iter().map(|(i, o)| vec![0.0; i * o]).collect(),
            skip_b: self.dims.iter().map(|(_, o)| vec![0.0; *o]).collect(),
            head_w: vec![0.0; self.cfg.hidden * 2],
            head_b: vec![0.0; 2],
        }
    }

    /// Converts an accumulator into a gradient set laid out like the
    /// parameters.
    pub fn gradients(&self, acc: &GradAccumulator) -> ParameterSet {
        let mut grads = self.params.zeros_like();
        let modes = self.cfg.modes();
        let n = self.dims.len();
        for (b, &(d_in, d_out)) in self.dims.iter().enumerate() {
            let view = LayerView {
                d_in,
                d_out,
                modes,
                mu: self.block_tensor(b, 0),
                log_sigma: self.block_tensor(b, 1),
                w: self.block_tensor(b, 2),
            };
            let (gmu, gls, gw) = self.kernels[b].parameter_gradients(&view, &acc.kernels[b]);
            let t = &mut grads.tensors_mut()[b * TENSORS_PER_BLOCK..];
            t[0].data = gmu;
            t[1].data = gls;
            t[2].data = gw;
            t[3].data.copy_from_slice(&acc.skip_w[b]);
            t[4].data.copy_from_slice(&acc.skip_b[b]);
        }
        let t = grads.tensors_mut();
        t[n * TENSORS_PER_BLOCK].data.copy_from_slice(&acc.head_w);
        t[n * TENSORS_PER_BLOCK + 1]
            .data
            .copy_from_slice(&acc.head_b);
        grads
    }
}

impl ResidualNet for Network {
    fn residual(&self, window: &FeatureWindow, context: &ContextVector) -> Result<[f64; 2]> {
        let encoded = self.encode(window, None)?;
        self.decode(&encoded, context, None)
    }
}

/// Running sums of raw gradients for one network state. Kernel gradients are
/// kept in packed complex form and converted once by
/// [`Network::gradients`].
#[derive(Debug, Clone)]
pub struct GradAccumulator {
    kernels: Vec<Vec<Complex64>>,
    skip_w: Vec<Vec<f64>>,
    skip_b: Vec<Vec<f64>>,
    head_w: Vec<f64>,
    head_b: Vec<f64>,
}

impl GradAccumulator {
    /// `self += other`, element by element.
    pub fn merge(&mut self, other: &Self) {
        for (a, b) in self.kernels.iter_mut().zip(&other.kernels) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        let pairs = self
            .skip_w
            .iter_mut()
            .chain(self.skip_b.iter_mut())
            .chain([&mut self.head_w, &mut self.head_b])
            .zip(
                other
                    .skip_w
                    .iter()
                    .chain(other.skip_b.iter())
                    .chain([&other.head_w, &other.head_b]),
            );
        for (a, b) in pairs {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

/// Inference-mode encoder pass.
pub fn encode(net: &Network, window: &FeatureWindow) -> Result<SequenceBlock> {
    net.encode(window, None)
}

/// Inference-mode decoder pass returning the scaled residual.
pub fn decode(net: &Network, encoded: &SequenceBlock, context: &ContextVector) -> Result<[f64; 2]> {
    net.decode(encoded, context, None)
}
