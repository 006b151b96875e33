//! Fixed random-weight fully connected networks with step activations.
//!
//! Networks are 784 wide throughout (configurable for tests), carry
//! `hidden_layers + 1` affine layers, apply the step function after every
//! hidden layer, and never update a weight. Construction is seeded and
//! deterministic: the same seed always yields bit-identical layers within a
//! build of this crate.

use std::fs;
use std::path::Path;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::MNIST_DIM;
use crate::error::{Error, Result};

/// Identity of the weight generator, recorded in every result file.
pub const GENERATOR_ID: &str = "chacha8-uniform-f32";

const SNAPSHOT_VERSION: u32 = 1;

/// Rows per parallel work unit in [`Network::forward_batch`]. Fixed (rather
/// than derived from the thread count) so each row sees the same blocked
/// arithmetic order on every run, keeping batch outputs bit-reproducible.
const ROW_CHUNK: usize = 1024;

/// Binary step activation: 1 for positive input, 0 otherwise.
///
/// The boundary maps to 0 (`step(0.0) == 0.0`); with continuous random
/// weights an exact zero pre-activation has negligible probability, so the
/// convention only matters for cross-run determinism.
#[inline]
pub fn step(x: f32) -> f32 {
    debug_assert!(x.is_finite(), "step() expects finite input, got {x}");
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Network shape and initialization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of hidden layers (0-15 in the experiments; any value works).
    pub hidden_layers: usize,
    /// Layer width; input, hidden, and output layers all share it.
    pub width: usize,
    /// Seed for the weight generator.
    pub seed: u64,
    /// Draw a bias vector per layer from the same uniform range as weights.
    pub bias_enabled: bool,
    /// Apply the step function to the final layer's output as well.
    pub output_activation: bool,
    /// Half-width of the uniform init range, default sqrt(1/width).
    pub init_bound: f32,
}

impl NetworkConfig {
    /// Paper-faithful defaults: width 784, bias on, no output activation,
    /// weights uniform in [-sqrt(1/784), +sqrt(1/784)] = [-1/28, +1/28].
    pub fn new(hidden_layers: usize, seed: u64) -> Self {
        Self {
            hidden_layers,
            width: MNIST_DIM,
            seed,
            bias_enabled: true,
            output_activation: false,
            init_bound: (1.0 / MNIST_DIM as f32).sqrt(),
        }
    }

    /// Changes the width, recomputing the default init bound for it.
    pub fn with_width(mut self, width: usize) -> Self {
        assert!(width > 0, "width must be positive");
        self.width = width;
        self.init_bound = (1.0 / width as f32).sqrt();
        self
    }

    pub fn with_bias(mut self, enabled: bool) -> Self {
        self.bias_enabled = enabled;
        self
    }

    pub fn with_output_activation(mut self, enabled: bool) -> Self {
        self.output_activation = enabled;
        self
    }
}

/// One affine layer: `width x width` weights plus optional bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Row-major weights; row r holds the incoming weights of output unit r.
    pub weights: Array2<f32>,
    pub bias: Option<Array1<f32>>,
}

/// Immutable network: config plus `hidden_layers + 1` layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotDoc {
    version: u32,
    config: NetworkConfig,
    layers: Vec<Layer>,
}

impl Network {
    /// Builds a network from seeded uniform samples.
    ///
    /// Sampling order is fixed: layers in order, each weight matrix row-major,
    /// then that layer's bias. Two calls with the same config produce
    /// bit-identical networks.
    pub fn new(config: NetworkConfig) -> Self {
        assert!(config.width > 0, "width must be positive");
        assert!(
            config.init_bound > 0.0 && config.init_bound.is_finite(),
            "init_bound must be a positive finite real"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let dist = rand::distr::Uniform::new_inclusive(-config.init_bound, config.init_bound)
            .expect("validated init bound");
        let width = config.width;
        let layer_count = config.hidden_layers + 1;
        let mut layers = Vec::with_capacity(layer_count);
        for _ in 0..layer_count {
            let data: Vec<f32> = (0..width * width).map(|_| rng.sample(dist)).collect();
            let weights = Array2::from_shape_vec((width, width), data)
                .expect("sampled exactly width*width values");
            let bias = config
                .bias_enabled
                .then(|| (0..width).map(|_| rng.sample(dist)).collect());
            layers.push(Layer { weights, bias });
        }
        Self { config, layers }
    }

    /// Builds a network from explicit layers (test overrides, snapshots).
    /// Layer shapes and bias presence must match the config.
    pub fn from_layers(config: NetworkConfig, layers: Vec<Layer>) -> Result<Self> {
        if layers.len() != config.hidden_layers + 1 {
            return Err(Error::CountMismatch {
                left: config.hidden_layers + 1,
                right: layers.len(),
            });
        }
        for layer in &layers {
            if layer.weights.nrows() != config.width || layer.weights.ncols() != config.width {
                return Err(Error::DimensionMismatch {
                    expected: config.width,
                    found: layer.weights.ncols(),
                });
            }
            match (&layer.bias, config.bias_enabled) {
                (Some(b), true) => {
                    if b.len() != config.width {
                        return Err(Error::DimensionMismatch {
                            expected: config.width,
                            found: b.len(),
                        });
                    }
                }
                (None, false) => {}
                _ => {
                    return Err(Error::CountMismatch {
                        left: usize::from(config.bias_enabled),
                        right: usize::from(layer.bias.is_some()),
                    })
                }
            }
        }
        Ok(Self { config, layers })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Runs one input vector through the network.
    pub fn forward(&self, input: ArrayView1<f32>) -> Result<Array1<f32>> {
        let out = self.forward_batch(input.insert_axis(Axis(0)))?;
        Ok(out.index_axis_move(Axis(0), 0))
    }

    /// Runs a batch, one sample per row. Row r of the output equals
    /// `forward` of row r of the input.
    pub fn forward_batch(&self, inputs: ArrayView2<f32>) -> Result<Array2<f32>> {
        let width = self.config.width;
        if inputs.ncols() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: inputs.ncols(),
            });
        }
        let n = inputs.nrows();
        let mut cur = inputs.to_owned();
        let mut next = Array2::zeros((n, width));
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let apply_step = i < last || self.config.output_activation;
            affine_forward(cur.view(), layer, apply_step, next.view_mut());
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Per-layer activations for one input: each hidden vector after its
    /// step, then the final output. Debugging aid, not a hot path.
    pub fn forward_trace(&self, input: ArrayView1<f32>) -> Result<Vec<Array1<f32>>> {
        let width = self.config.width;
        if input.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: input.len(),
            });
        }
        let mut stages = Vec::with_capacity(self.layers.len());
        let mut cur = input.to_owned().insert_axis(Axis(0));
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let apply_step = i < last || self.config.output_activation;
            let mut next = Array2::zeros((1, width));
            affine_forward(cur.view(), layer, apply_step, next.view_mut());
            stages.push(next.row(0).to_owned());
            cur = next;
        }
        Ok(stages)
    }

    /// Writes a versioned JSON dump of config and layer matrices.
    pub fn save_snapshot(&self, path: impl AsRef<Path>) -> Result<()> {
        let doc = SnapshotDoc {
            version: SNAPSHOT_VERSION,
            config: self.config.clone(),
            layers: self.layers.clone(),
        };
        fs::write(path, serde_json::to_vec(&doc)?)?;
        Ok(())
    }

    /// Reads a snapshot written by [`Network::save_snapshot`].
    pub fn load_snapshot(path: impl AsRef<Path>) -> Result<Self> {
        let doc: SnapshotDoc = serde_json::from_slice(&fs::read(path)?)?;
        if doc.version != SNAPSHOT_VERSION {
            return Err(Error::UnsupportedVersion {
                what: "network snapshot",
                found: doc.version,
                supported: SNAPSHOT_VERSION,
            });
        }
        Self::from_layers(doc.config, doc.layers)
    }
}

/// out = inputs * weights^T (+ bias), with the step applied elementwise when
/// requested. Parallel over fixed-size row chunks; each chunk is one gemm
/// call plus a fused bias/activation pass.
fn affine_forward(
    inputs: ArrayView2<f32>,
    layer: &Layer,
    apply_step: bool,
    mut out: ArrayViewMut2<f32>,
) {
    let weights_t = layer.weights.t();
    out.axis_chunks_iter_mut(Axis(0), ROW_CHUNK)
        .into_par_iter()
        .zip(inputs.axis_chunks_iter(Axis(0), ROW_CHUNK).into_par_iter())
        .for_each(|(mut out_chunk, in_chunk)| {
            general_mat_mul(1.0, &in_chunk, &weights_t, 0.0, &mut out_chunk);
            match (&layer.bias, apply_step) {
                (Some(bias), true) => {
                    let bias = bias.as_slice().expect("bias is contiguous");
                    for mut row in out_chunk.rows_mut() {
                        let row = row.as_slice_mut().expect("row-major chunk");
                        for (v, &b) in row.iter_mut().zip(bias) {
                            *v = step(*v + b);
                        }
                    }
                }
                (Some(bias), false) => {
                    let bias = bias.as_slice().expect("bias is contiguous");
                    for mut row in out_chunk.rows_mut() {
                        let row = row.as_slice_mut().expect("row-major chunk");
                        for (v, &b) in row.iter_mut().zip(bias) {
                            *v += b;
                        }
                    }
                }
                (None, true) => {
                    for v in out_chunk.iter_mut() {
                        *v = step(*v);
                    }
                }
                (None, false) => {}
            }
        });
}
