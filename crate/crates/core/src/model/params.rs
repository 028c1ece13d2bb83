use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelConfig;
use crate::error::{Error, Result};
use crate::spectral::GaborSpectralLayer;

/// Named dense tensor of 64-bit floats, row-major.
///
/// Complex tensors carry a trailing dimension of 2 (`[re, im]`), so the
/// scalar count treats every complex entry as two parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let name = name.into();
        let numel: usize = shape.iter().product();
        if numel != data.len() {
            return Err(Error::ShapeMismatch(format!(
                "tensor `{name}` has shape {shape:?} but {} values",
                data.len()
            )));
        }
        Ok(Self { name, shape, data })
    }

    pub fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let numel = shape.iter().product();
        Self {
            name: name.into(),
            shape,
            data: vec![0.0; numel],
        }
    }

    /// Complex tensor of the given logical shape, stored as `shape × 2`.
    pub fn complex_zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        let mut full = shape.to_vec();
        full.push(2);
        Self::zeros(name, full)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Ordered collection of named tensors. Also used as the gradient container,
/// with identical names and shapes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParameterSet {
    tensors: Vec<Tensor>,
}

impl ParameterSet {
    pub fn new(tensors: Vec<Tensor>) -> Self {
        Self { tensors }
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    /// Same names and shapes, all values zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|t| Tensor::zeros(t.name.clone(), t.shape.clone()))
                .collect(),
        }
    }

    pub fn same_layout(&self, other: &Self) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape)
    }

    pub fn is_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Sets every scalar to zero in place.
    pub fn zero_all(&mut self) {
        for t in &mut self.tensors {
            t.data.fill(0.0);
        }
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.tensors.iter().flat_map(|t| t.data.iter().copied())
    }

    /// Elementwise `self += other`. Layouts must match.
    pub fn add_assign(&mut self, other: &Self) {
        debug_assert!(self.same_layout(other));
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += y;
            }
        }
    }
}

/// Total scalar count; complex entries count twice.
pub fn count_parameters(params: &ParameterSet) -> usize {
    params.tensors.iter().map(Tensor::len).sum()
}

pub(crate) const TENSORS_PER_BLOCK: usize = 5;

pub(crate) fn block_prefix(cfg: &ModelConfig, block: usize) -> String {
    if block < cfg.encoder_blocks {
        format!("enc{block}")
    } else {
        format!("dec{}", block - cfg.encoder_blocks)
    }
}

/// Deterministic initialisation from `cfg.seed`.
///
/// Spectral blocks: μ ~ U[0, 1], log σ = ln 0.5, complex W with
/// E|W|² = 1/(d_in·M). Pointwise skip weights ~ U(±1/√d_in), zero bias.
/// The output head starts at zero so the untrained network adds no
/// correction to the physics forecast.
pub fn init_parameters(cfg: &ModelConfig) -> Result<ParameterSet> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let modes = cfg.modes();
    let mut tensors = Vec::new();
    for (block, (d_in, d_out)) in cfg.block_dims().into_iter().enumerate() {
        let prefix = block_prefix(cfg, block);
        let layer = GaborSpectralLayer::random(d_in, d_out, cfg.window, &mut rng);
        tensors.push(Tensor::new(
            format!("{prefix}.mu"),
            vec![d_in, d_out],
            layer.mu,
        )?);
        tensors.push(Tensor::new(
            format!("{prefix}.log_sigma"),
            vec![d_in, d_out],
            layer.log_sigma,
        )?);
        tensors.push(Tensor::new(
            format!("{prefix}.w"),
            vec![d_in, d_out, modes, 2],
            layer.w,
        )?);
        let bound = 1.0 / (d_in as f64).sqrt();
        let skip = (0..d_in * d_out)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        tensors.push(Tensor::new(
            format!("{prefix}.skip.weight"),
            vec![d_in, d_out],
            skip,
        )?);
        tensors.push(Tensor::zeros(format!("{prefix}.skip.bias"), vec![d_out]));
    }
    tensors.push(Tensor::zeros("head.weight", vec![cfg.hidden, 2]));
    tensors.push(Tensor::zeros("head.bias", vec![2]));
    Ok(ParameterSet::new(tensors))
}

/// Checks that `params` has exactly the layout `cfg` implies.
pub(crate) fn check_layout(cfg: &ModelConfig, params: &ParameterSet) -> Result<()> {
    let dims = cfg.block_dims();
    let expected = dims.len() * TENSORS_PER_BLOCK + 2;
    if params.tensors.len() != expected {
        return Err(Error::ShapeMismatch(format!(
            "parameter set has {} tensors, config implies {expected}",
            params.tensors.len()
        )));
    }
    let modes = cfg.modes();
    for (block, (d_in, d_out)) in dims.into_iter().enumerate() {
        let prefix = block_prefix(cfg, block);
        let want: [(String, Vec<usize>); TENSORS_PER_BLOCK] = [
            (format!("{prefix}.mu"), vec![d_in, d_out]),
            (format!("{prefix}.log_sigma"), vec![d_in, d_out]),
            (format!("{prefix}.w"), vec![d_in, d_out, modes, 2]),
            (format!("{prefix}.skip.weight"), vec![d_in, d_out]),
            (format!("{prefix}.skip.bias"), vec![d_out]),
        ];
        for (k, (name, shape)) in want.into_iter().enumerate() {
            let t = &params.tensors[block * TENSORS_PER_BLOCK + k];
            if t.name != name || t.shape != shape {
                return Err(Error::ShapeMismatch(format!(
                    "expected tensor `{name}` {shape:?}, found `{}` {:?}",
                    t.name, t.shape
                )));
            }
        }
    }
    let n = params.tensors.len();
    let head_w = &params.tensors[n - 2];
    let head_b = &params.tensors[n - 1];
    if head_w.shape != [cfg.hidden, 2] || head_b.shape != [2] {
        return Err(Error::ShapeMismatch(format!(
            "head shapes {:?}/{:?} do not match hidden width {}",
            head_w.shape, head_b.shape, cfg.hidden
        )));
    }
    Ok(())
}
