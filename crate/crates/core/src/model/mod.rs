//! Multi-layer architectures of dense nuclei.
//!
//! Every hidden layer is a bank of nuclei whose activation is
//! [`zeta`](crate::nucleus::zeta). Encoder layers are fitted one at a time
//! by a non-negative sparse reconstruction; a final random layer (absent in
//! [`Variant::McRnnMla2`]) feeds a least-squares readout.

mod io;
mod train;

pub use io::{decode_model, encode_model, load_model, save_model};
pub use train::{
    encode, fit_encoder_layer, fit_mcrnn_mla, fit_mcrnn_mla1, fit_mcrnn_mla2, fit_rnn_mla,
    fit_variant, forward_dataset, forward_scores, predict,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nucleus::ClusterParams;
use crate::numerics::{FistaConfig, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "rnn_mla")]
    RnnMla,
    #[serde(rename = "mcrnn_mla")]
    McRnnMla,
    #[serde(rename = "mcrnn_mla1")]
    McRnnMla1,
    #[serde(rename = "mcrnn_mla2")]
    McRnnMla2,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::McRnnMla,
        Variant::McRnnMla1,
        Variant::McRnnMla2,
        Variant::RnnMla,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Variant::RnnMla => "rnn_mla",
            Variant::McRnnMla => "mcrnn_mla",
            Variant::McRnnMla1 => "mcrnn_mla1",
            Variant::McRnnMla2 => "mcrnn_mla2",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Variant::RnnMla => 0,
            Variant::McRnnMla => 1,
            Variant::McRnnMla1 => 2,
            Variant::McRnnMla2 => 3,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Variant::RnnMla,
            1 => Variant::McRnnMla,
            2 => Variant::McRnnMla1,
            3 => Variant::McRnnMla2,
            _ => return None,
        })
    }

    pub fn has_random_layer(self) -> bool {
        self != Variant::McRnnMla2
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::RnnMla => "Improved RNN-MLA",
            Variant::McRnnMla => "MCRNN-MLA",
            Variant::McRnnMla1 => "MCRNN-MLA1",
            Variant::McRnnMla2 => "MCRNN-MLA2",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        Variant::ALL
            .into_iter()
            .find(|v| v.key() == norm)
            .ok_or_else(|| {
                Error::param(
                    "variant",
                    format!("unknown variant `{s}` (expected rnn_mla, mcrnn_mla, mcrnn_mla1, mcrnn_mla2)"),
                )
            })
    }
}

/// Architecture and solver settings shared by all trainers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Hidden layer count `L ≥ 2`: `L − 1` encoder layers plus the random layer.
    pub layers: usize,
    /// One width per hidden layer.
    pub widths: Vec<usize>,
    /// Independent encoder stacks per channel (MCRNN-MLA1/2 only).
    pub branches: usize,
    pub cluster: ClusterParams,
    pub fista: FistaConfig,
    pub master_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            layers: 2,
            widths: vec![50, 30],
            branches: 3,
            cluster: ClusterParams::default(),
            fista: FistaConfig::default(),
            master_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers < 2 {
            return Err(Error::param("layers", format!("{} hidden layers, need at least 2", self.layers)));
        }
        if self.widths.len() != self.layers {
            return Err(Error::param(
                "widths",
                format!("{} widths for {} layers", self.widths.len(), self.layers),
            ));
        }
        if self.widths.contains(&0) {
            return Err(Error::param("widths", "every width must be at least 1"));
        }
        if self.branches == 0 {
            return Err(Error::param("branches", "need at least one branch"));
        }
        self.fista.validate()
    }

    /// Widths of the `L − 1` encoder layers.
    pub fn encoder_widths(&self) -> &[usize] {
        &self.widths[..self.layers - 1]
    }
}

/// One fitted encoder layer, stored in encoding orientation (`D_in × H`).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer {
    pub weights: Matrix,
    pub cluster: ClusterParams,
    /// Largest activation of the unscaled weights; the stored weights are
    /// the unscaled ones divided by this and by 10.
    pub activation_max: f64,
    /// `‖X − A·W‖_F` of the reconstruction problem.
    pub reconstruction_error: f64,
    pub fista_iterations: usize,
    pub fista_converged: bool,
}

impl EncoderLayer {
    pub fn input_width(&self) -> usize {
        self.weights.nrows()
    }
    pub fn output_width(&self) -> usize {
        self.weights.ncols()
    }
}

/// The encoder layers of one (channel, branch) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderStack {
    pub channel: usize,
    pub branch: usize,
    pub layers: Vec<EncoderLayer>,
}

impl EncoderStack {
    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.output_width())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub variant: Variant,
    pub cluster: ClusterParams,
    pub channel_names: Vec<String>,
    /// Input width per channel. RNN-MLA models see the channels concatenated.
    pub channel_dims: Vec<usize>,
    pub branches: usize,
    /// Stacks in channel-major, branch-minor order.
    pub stacks: Vec<EncoderStack>,
    pub random_layer: Option<Matrix>,
    pub output: Matrix,
    pub label_count: usize,
    /// Free-form record of the run that produced the model (the CLI stores
    /// its resolved config as JSON); empty when fitted through the library.
    pub provenance: String,
}

impl ModelArtifact {
    pub fn depth(&self) -> usize {
        self.stacks.first().map_or(0, |s| s.layers.len())
    }

    /// Width of the concatenated encodings fed to the random layer or readout.
    pub fn feature_width(&self) -> usize {
        self.stacks.iter().map(EncoderStack::output_width).sum()
    }

    /// Check the structural invariants of a fitted or loaded artifact.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(msg));
        if self.channel_names.len() != self.channel_dims.len() || self.channel_dims.is_empty() {
            return bad("channel names and dims disagree".into());
        }
        let expected_stacks = match self.variant {
            Variant::RnnMla => 1,
            _ => self.channel_dims.len() * self.branches,
        };
        if self.stacks.len() != expected_stacks {
            return bad(format!("{} stacks, expected {expected_stacks}", self.stacks.len()));
        }
        let depth = self.depth();
        if depth == 0 {
            return bad("empty encoder stack".into());
        }
        for s in &self.stacks {
            if s.layers.len() != depth {
                return bad("encoder stack depths differ".into());
            }
            let input = match self.variant {
                Variant::RnnMla => self.channel_dims.iter().sum(),
                _ => *self
                    .channel_dims
                    .get(s.channel)
                    .ok_or_else(|| Error::Format(format!("stack channel {} out of range", s.channel)))?,
            };
            let mut width = input;
            for l in &s.layers {
                if l.input_width() != width {
                    return bad(format!(
                        "stack ({}, {}) layer expects {} inputs, gets {width}",
                        s.channel,
                        s.branch,
                        l.input_width()
                    ));
                }
                if l.weights.iter().any(|v| *v < 0.0 || !v.is_finite()) {
                    return bad("negative encoder weight".into());
                }
                width = l.output_width();
            }
        }
        let mut width = self.feature_width();
        match (&self.random_layer, self.variant.has_random_layer()) {
            (Some(w), true) => {
                if w.nrows() != width {
                    return bad(format!("random layer has {} rows, features {width}", w.nrows()));
                }
                if w.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return bad("random layer entry outside [0, 1]".into());
                }
                width = w.ncols();
            }
            (None, false) => {}
            (Some(_), false) => return bad("unexpected random layer".into()),
            (None, true) => return bad("missing random layer".into()),
        }
        if self.output.dim() != (width, self.label_count) {
            return bad(format!(
                "output is {:?}, expected ({width}, {})",
                self.output.dim(),
                self.label_count
            ));
        }
        Ok(())
    }
}
