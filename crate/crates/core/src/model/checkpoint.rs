//! Binary checkpoint: everything needed to forecast without the training
//! data. All integers and floats are little-endian.
//!
//! ```text
//! magic "IDNT" | u32 version
//! model config: u64 window, features, hidden, encoder_blocks, decoder_blocks
//!               f64 dropout | u8 ablate_physics, ablate_rotate, ablate_gabor | u64 seed
//! physics config: f64 g, c_w, gamma, omega, dt, small_l_threshold
//! scaler: 7 × f64 min | 7 × f64 max
//! u32 tensor count, then per tensor:
//!   u32 name length | name bytes | u32 ndim | ndim × u64 dims | f64 data
//! u32 CRC32 of every preceding byte
//! ```

use std::path::Path;

use super::params::check_layout;
use super::{ModelConfig, ParameterSet, Tensor};
use crate::error::{Error, Result};
use crate::physics::PhysicsConfig;
use crate::scaler::{MinMaxScaler, N_FEATURES};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"IDNT";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained model together with the configuration and scaling it was
/// trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub physics: PhysicsConfig,
    pub scaler: MinMaxScaler,
    pub params: ParameterSet,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let m = &self.model;
        for v in [
            m.window,
            m.features,
            m.hidden,
            m.encoder_blocks,
            m.decoder_blocks,
        ] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&m.dropout.to_le_bytes());
        out.extend([m.ablate_physics, m.ablate_rotate, m.ablate_gabor].map(u8::from));
        out.extend_from_slice(&m.seed.to_le_bytes());
        let p = &self.physics;
        for v in [p.g, p.c_w, p.gamma, p.omega, p.dt, p.small_l_threshold] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.scaler.min().iter().chain(self.scaler.max()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let tensors = self.params.tensors();
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        for t in tensors {
            out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for d in &t.shape {
                out.extend_from_slice(&(*d as u64).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 || bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::CorruptCheckpoint("missing checkpoint header".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::VersionMismatch(format!(
                "checkpoint format version {version}, this build reads {CHECKPOINT_VERSION}"
            )));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        if crc32fast::hash(body) != stored {
            return Err(Error::CorruptCheckpoint("checksum mismatch".into()));
        }
        let mut r = Reader { buf: body, pos: 8 };
        let window = r.usize()?;
        let features = r.usize()?;
        let hidden = r.usize()?;
        let encoder_blocks = r.usize()?;
        let decoder_blocks = r.usize()?;
        let dropout = r.f64()?;
        let ablate_physics = r.flag()?;
        let ablate_rotate = r.flag()?;
        let ablate_gabor = r.flag()?;
        let seed = r.u64()?;
        let model = ModelConfig {
            window,
            features,
            hidden,
            encoder_blocks,
            decoder_blocks,
            dropout,
            ablate_physics,
            ablate_rotate,
            ablate_gabor,
            seed,
        };
        let physics = PhysicsConfig {
            g: r.f64()?,
            c_w: r.f64()?,
            gamma: r.f64()?,
            omega: r.f64()?,
            dt: r.f64()?,
            small_l_threshold: r.f64()?,
        };
        let mut min = [0.0; N_FEATURES];
        let mut max = [0.0; N_FEATURES];
        for v in min.iter_mut().chain(max.iter_mut()) {
            *v = r.f64()?;
        }
        let scaler = MinMaxScaler::from_bounds(min, max)
            .map_err(|e| Error::CorruptCheckpoint(format!("scaler: {e}")))?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::CorruptCheckpoint("tensor name is not UTF-8".into()))?
                .to_owned();
            let ndim = r.u32()? as usize;
            let mut shape = Vec::with_capacity(ndim.min(8));
            for _ in 0..ndim {
                shape.push(r.usize()?);
            }
            let numel = shape
                .iter()
                .try_fold(1usize, |a, d| a.checked_mul(*d))
                .ok_or_else(|| Error::CorruptCheckpoint(format!("tensor `{name}` too large")))?;
            let raw =
                r.take(numel.checked_mul(8).ok_or_else(|| {
                    Error::CorruptCheckpoint(format!("tensor `{name}` too large"))
                })?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push(Tensor { name, shape, data });
        }
        if r.pos != body.len() {
            return Err(Error::CorruptCheckpoint(format!(
                "{} trailing bytes",
                body.len() - r.pos
            )));
        }
        let params = ParameterSet::new(tensors);
        model
            .validate()
            .and_then(|_| check_layout(&model, &params))
            .map_err(|e| Error::CorruptCheckpoint(e.to_string()))?;
        Ok(Self {
            model,
            physics,
            scaler,
            params,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::CorruptCheckpoint("unexpected end of data".into())),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?)
            .map_err(|_| Error::CorruptCheckpoint("dimension overflows usize".into()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn flag(&mut self) -> Result<bool> {
        match self.take(1)?[0] {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::CorruptCheckpoint(format!("invalid flag byte {b}"))),
        }
    }
}

pub fn save_parameters(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, checkpoint.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_parameters(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Loads a checkpoint and insists its architecture matches `expected`.
/// Dropout and seed are training-time settings and are not compared.
pub fn load_parameters_for(path: impl AsRef<Path>, expected: &ModelConfig) -> Result<Checkpoint> {
    let ckpt = load_parameters(path)?;
    let arch = |c: &ModelConfig| {
        (
            c.window,
            c.features,
            c.hidden,
            c.encoder_blocks,
            c.decoder_blocks,
            c.ablate_physics,
            c.ablate_rotate,
            c.ablate_gabor,
        )
    };
    if arch(&ckpt.model) != arch(expected) {
        return Err(Error::VersionMismatch(format!(
            "checkpoint architecture {:?} differs from configured {:?}",
            arch(&ckpt.model),
            arch(expected)
        )));
    }
    Ok(ckpt)
}
