//! Flat binary checkpoint format for network parameters.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic   4 bytes  "MLP1"
//! S       u32      number of layer sizes
//! sizes   S x u64
//! hidden  u8       activation tag (0 relu, 1 sigmoid, 2 tanh, 3 identity)
//! H       u32      number of output heads
//! heads   H x (u64 segment length, u8 activation tag)
//! params  per layer: weight matrix row-major f64, then bias vector f64
//! ```

use super::{Activation, HeadSpec, Mlp};
use ndarray::{Array1, Array2};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

const MAGIC: &[u8; 4] = b"MLP1";

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.bytes.len() - self.pos < n {
            return Err(CheckpointError::Corrupt("truncated".to_string()));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn read_u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn read_u32(&mut self) -> Result<usize, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn read_u64(&mut self) -> Result<usize, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()) as usize)
    }

    fn read_f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::Relu => 0,
        Activation::Sigmoid => 1,
        Activation::Tanh => 2,
        Activation::Identity => 3,
    }
}

fn tag_activation(tag: u8) -> Result<Activation, CheckpointError> {
    Ok(match tag {
        0 => Activation::Relu,
        1 => Activation::Sigmoid,
        2 => Activation::Tanh,
        3 => Activation::Identity,
        other => {
            return Err(CheckpointError::Corrupt(format!(
                "unknown activation tag {other}"
            )))
        }
    })
}

impl Mlp {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.sizes().len() as u32).to_le_bytes());
        for &s in self.sizes() {
            buf.extend_from_slice(&(s as u64).to_le_bytes());
        }
        buf.push(activation_tag(self.hidden_activation()));
        buf.extend_from_slice(&(self.heads().len() as u32).to_le_bytes());
        for head in self.heads() {
            buf.extend_from_slice(&(head.len as u64).to_le_bytes());
            buf.push(activation_tag(head.activation));
        }
        let (weights, biases) = self.params();
        for l in 0..weights.len() {
            for &x in weights[l].iter() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            for &x in biases[l].iter() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut reader = ByteReader { bytes, pos: 0 };
        if reader.take(4)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let s_count = reader.read_u32()?;
        if s_count < 2 {
            return Err(CheckpointError::Corrupt("fewer than two layers".into()));
        }
        let mut sizes = Vec::with_capacity(s_count);
        for _ in 0..s_count {
            sizes.push(reader.read_u64()?);
        }
        let hidden = tag_activation(reader.read_u8()?)?;
        let h_count = reader.read_u32()?;
        let mut heads = Vec::with_capacity(h_count);
        for _ in 0..h_count {
            let len = reader.read_u64()?;
            let activation = tag_activation(reader.read_u8()?)?;
            heads.push(HeadSpec { len, activation });
        }
        let head_total: usize = heads.iter().map(|h| h.len).sum();
        if head_total != *sizes.last().unwrap() {
            return Err(CheckpointError::Corrupt(
                "head segments do not cover the output layer".into(),
            ));
        }

        let mut weights = Vec::with_capacity(sizes.len() - 1);
        let mut biases = Vec::with_capacity(sizes.len() - 1);
        for l in 0..sizes.len() - 1 {
            let (rows, cols) = (sizes[l + 1], sizes[l]);
            let mut w = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                w.push(reader.read_f64()?);
            }
            let mut b = Vec::with_capacity(rows);
            for _ in 0..rows {
                b.push(reader.read_f64()?);
            }
            weights.push(
                Array2::from_shape_vec((rows, cols), w)
                    .map_err(|e| CheckpointError::Corrupt(e.to_string()))?,
            );
            biases.push(Array1::from_vec(b));
        }
        if reader.pos != bytes.len() {
            return Err(CheckpointError::Corrupt("trailing bytes".into()));
        }
        Ok(Mlp::from_parts(sizes, weights, biases, hidden, heads))
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
