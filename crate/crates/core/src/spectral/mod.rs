//! Frequency-domain building blocks: a small real DFT, the dyadic channel
//! rotation, Gabor band-pass masks and the Gabor spectral convolution layer.

mod fft;
mod gabor;
mod rotate;

pub use fft::{irfft, rfft, RealDft};
pub use gabor::{
    gabor_filter, normalized_frequency, spectral_forward, spectral_forward_with,
    spectral_gradients, spectral_gradients_with, GaborSpectralLayer, LayerView, SpectralGradients,
    SpectralKernel, SpectralOptions,
};
pub use rotate::{rotate_block, rotate_block_inverse, rotation_shifts};

use crate::error::{Error, Result};

/// Time × channel block of real values, stored row-major (one row per step).
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBlock {
    steps: usize,
    channels: usize,
    data: Vec<f64>,
}

impl SequenceBlock {
    pub fn zeros(steps: usize, channels: usize) -> Self {
        Self {
            steps,
            channels,
            data: vec![0.0; steps * channels],
        }
    }

    pub fn from_vec(steps: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != steps * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot fill a {steps}x{channels} block",
                data.len()
            )));
        }
        Ok(Self {
            steps,
            channels,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let channels = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != channels) {
            return Err(Error::ShapeMismatch("ragged rows".into()));
        }
        Self::from_vec(rows.len(), channels, rows.concat())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn get(&self, t: usize, c: usize) -> f64 {
        self.data[t * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, t: usize, c: usize, v: f64) {
        self.data[t * self.channels + c] = v;
    }

    #[inline]
    pub fn add_at(&mut self, t: usize, c: usize, v: f64) {
        self.data[t * self.channels + c] += v;
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn row_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.data[t * self.channels..(t + 1) * self.channels]
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        (0..self.steps).map(|t| self.get(t, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            steps: self.steps,
            channels: self.channels,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}
