//! Model files in the `RNMM` container (see [`crate::format`]). The kind
//! byte holds the variant tag; the payload is
//!
//! ```text
//! cluster     n: u32, p, r, λ⁺, λ⁻: f64
//! shape       labels: u64, branches: u64, depth: u64
//! channels    count: u64, then per channel (name: u32 len + UTF-8, dim: u64)
//! stacks      count: u64, then per stack (channel: u64, branch: u64,
//!             depth × (weights, activation_max: f64,
//!                      reconstruction_error: f64, iterations: u64,
//!                      converged: u8))
//! random      present: u8, then matrix if present
//! output      matrix
//! provenance  u32 len + UTF-8
//! ```

use std::path::Path;

use super::{EncoderLayer, EncoderStack, ModelArtifact, Variant};
use crate::error::{Error, Result};
use crate::format::{Reader, Writer};
use crate::nucleus::ClusterParams;

pub fn encode_model(model: &ModelArtifact) -> Vec<u8> {
    let mut w = Writer::new(model.variant.tag());
    let c = &model.cluster;
    w.u32(c.n());
    for v in [c.p(), c.r(), c.lambda_plus(), c.lambda_minus()] {
        w.f64(v);
    }
    w.u64(model.label_count as u64);
    w.u64(model.branches as u64);
    w.u64(model.depth() as u64);
    w.u64(model.channel_dims.len() as u64);
    for (name, dim) in model.channel_names.iter().zip(&model.channel_dims) {
        w.str(name);
        w.u64(*dim as u64);
    }
    w.u64(model.stacks.len() as u64);
    for s in &model.stacks {
        w.u64(s.channel as u64);
        w.u64(s.branch as u64);
        for l in &s.layers {
            w.matrix(&l.weights);
            w.f64(l.activation_max);
            w.f64(l.reconstruction_error);
            w.u64(l.fista_iterations as u64);
            w.u8(l.fista_converged as u8);
        }
    }
    match &model.random_layer {
        Some(m) => {
            w.u8(1);
            w.matrix(m);
        }
        None => w.u8(0),
    }
    w.matrix(&model.output);
    w.str(&model.provenance);
    w.finish()
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelArtifact> {
    let (mut r, tag) = Reader::open(bytes)?;
    let variant = Variant::from_tag(tag)
        .ok_or_else(|| Error::Format(format!("unknown variant tag {tag:#04x}")))?;
    let n = r.u32()?;
    let (p, rate, lp, lm) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
    let cluster = ClusterParams::new(n, p, rate, lp, lm)
        .map_err(|e| Error::Format(format!("stored cluster parameters: {e}")))?;
    let label_count = r.usize()?;
    let branches = r.usize()?;
    let depth = r.usize()?;

    let channels = r.usize()?;
    let mut channel_names = Vec::new();
    let mut channel_dims = Vec::new();
    for _ in 0..channels {
        channel_names.push(r.str()?);
        channel_dims.push(r.usize()?);
    }

    let stack_count = r.usize()?;
    let mut stacks = Vec::new();
    for _ in 0..stack_count {
        let channel = r.usize()?;
        let branch = r.usize()?;
        let mut layers = Vec::with_capacity(depth.min(64));
        for _ in 0..depth {
            let weights = r.matrix()?;
            let activation_max = r.f64()?;
            let reconstruction_error = r.f64()?;
            let fista_iterations = r.usize()?;
            let fista_converged = match r.u8()? {
                0 => false,
                1 => true,
                b => return Err(Error::Format(format!("bad flag byte {b}"))),
            };
            layers.push(EncoderLayer {
                weights,
                cluster,
                activation_max,
                reconstruction_error,
                fista_iterations,
                fista_converged,
            });
        }
        stacks.push(EncoderStack {
            channel,
            branch,
            layers,
        });
    }
    let random_layer = match r.u8()? {
        0 => None,
        1 => Some(r.matrix()?),
        b => return Err(Error::Format(format!("bad flag byte {b}"))),
    };
    let output = r.matrix()?;
    let provenance = r.str()?;
    r.finish()?;

    let model = ModelArtifact {
        variant,
        cluster,
        channel_names,
        channel_dims,
        branches,
        stacks,
        random_layer,
        output,
        label_count,
        provenance,
    };
    model.validate()?;
    Ok(model)
}

pub fn save_model(model: &ModelArtifact, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
