//! Binary mixture checkpoints.
//!
//! Layout (all integers little-endian):
//! `"MOVAE"`, version `u16`, metric `u8` (0 = pcc, 1 = rmse), then the
//! architecture as five `u32`s (input, hidden, latent, epochs, batch size),
//! the member count as `u32`, and per member a length-prefixed UTF-8 label
//! followed by the five layers in declaration order, each as raw `f32`
//! weights then bias.

use crate::metrics::MetricKind;
use crate::mixture::Mixture;
use crate::numerics::{Activation, DenseLayer};
use crate::vae::{VaeConfig, VaeModel};
use crate::{Error, Result};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"MOVAE";
pub const CHECKPOINT_VERSION: u16 = 1;

fn metric_tag(metric: MetricKind) -> u8 {
    match metric {
        MetricKind::Pcc => 0,
        MetricKind::Rmse => 1,
    }
}

/// Serialize a trained mixture; weights round-trip bit-exactly.
pub fn save_checkpoint(mixture: &Mixture, path: &Path) -> Result<()> {
    let config = mixture.config();
    let mut bytes = Vec::new();
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.push(metric_tag(mixture.metric()));
    for dim in [
        config.input_dim,
        config.hidden_dim,
        config.latent_dim,
        config.epochs,
        config.batch_size,
    ] {
        bytes.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    bytes.extend_from_slice(&(mixture.len() as u32).to_le_bytes());
    for (label, model) in mixture.members() {
        bytes.extend_from_slice(&(label.len() as u32).to_le_bytes());
        bytes.extend_from_slice(label.as_bytes());
        for layer in model.layers() {
            for &w in layer.weights() {
                bytes.extend_from_slice(&w.to_le_bytes());
            }
            for &b in layer.bias() {
                bytes.extend_from_slice(&b.to_le_bytes());
            }
        }
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() < self.pos + n {
            return Err(Error::Io(format!("checkpoint truncated while reading {what}")));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32_vec(&mut self, n: usize, what: &str) -> Result<Vec<f32>> {
        let raw = self.take(n * 4, what)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Load a checkpoint written by [`save_checkpoint`]. The returned mixture is
/// ready for inference.
pub fn load_checkpoint(path: &Path) -> Result<Mixture> {
    let bytes = std::fs::read(path)?;
    let mut r = Reader { bytes: &bytes, pos: 0 };

    let magic = r.take(5, "magic")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!(
            "bad checkpoint magic {magic:?}, expected {CHECKPOINT_MAGIC:?}"
        )));
    }
    let version = r.u16("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let metric = match r.take(1, "metric")?[0] {
        0 => MetricKind::Pcc,
        1 => MetricKind::Rmse,
        other => return Err(Error::Format(format!("unknown metric tag {other}"))),
    };
    let config = VaeConfig {
        input_dim: r.u32("input_dim")? as usize,
        hidden_dim: r.u32("hidden_dim")? as usize,
        latent_dim: r.u32("latent_dim")? as usize,
        epochs: r.u32("epochs")? as usize,
        batch_size: r.u32("batch_size")? as usize,
    };
    config.validate()?;
    let member_count = r.u32("member count")? as usize;

    let layer_shapes = [
        (config.input_dim, config.hidden_dim, Activation::Relu),
        (config.hidden_dim, config.latent_dim, Activation::Linear),
        (config.hidden_dim, config.latent_dim, Activation::Linear),
        (config.latent_dim, config.hidden_dim, Activation::Relu),
        (config.hidden_dim, config.input_dim, Activation::Sigmoid),
    ];

    let mut members = Vec::with_capacity(member_count);
    for m in 0..member_count {
        let label_len = r.u32("label length")? as usize;
        let label = String::from_utf8(r.take(label_len, "label")?.to_vec())
            .map_err(|_| Error::Format(format!("member {m} label is not UTF-8")))?;
        let mut layers = Vec::with_capacity(5);
        for (fan_in, fan_out, activation) in layer_shapes {
            let weights = r.f32_vec(fan_in * fan_out, "weights")?;
            let bias = r.f32_vec(fan_out, "bias")?;
            layers.push(DenseLayer::from_parts(fan_in, fan_out, activation, weights, bias)?);
        }
        let layers: [DenseLayer; 5] = layers.try_into().unwrap();
        members.push((label, VaeModel::from_layers(config, layers)?));
    }
    if r.pos != bytes.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    Mixture::from_trained_members(members, metric)
}
