//! Feedforward adapter networks with hand-written backpropagation.
//!
//! The adapter is two MLPs over the flattened observation: a policy network
//! emitting one adjustment logit per action and a value network emitting a
//! scalar. With `shared_trunk` the hidden layers are shared and only the two
//! output layers differ.
//!
//! Weights are stored input-major (`w[i * out + o]`) so the forward pass can
//! skip zero inputs; observations are mostly zeros.

mod adam;
mod checkpoint;
mod init;

use std::fmt;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, MAGIC_PREFIX, VERSION,
};

use crate::env::ACTION_COUNT;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("input has length {got}, expected {expected}")]
    InputDim { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("invalid network config: {0}")]
    Config(String),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Option<Activation> {
        match s {
            "tanh" => Some(Activation::Tanh),
            "relu" => Some(Activation::Relu),
            _ => None,
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetConfig {
    pub input_dim: usize,
    pub hidden_sizes: Vec<usize>,
    pub activation: Activation,
    pub action_count: usize,
    pub shared_trunk: bool,
}

impl NetConfig {
    pub fn new(input_dim: usize) -> Self {
        NetConfig {
            input_dim,
            hidden_sizes: vec![512, 512, 512],
            activation: Activation::Tanh,
            action_count: ACTION_COUNT,
            shared_trunk: false,
        }
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.input_dim == 0 {
            return Err(NetError::Config("input_dim must be positive".into()));
        }
        if self.hidden_sizes.is_empty() {
            return Err(NetError::Config(
                "at least one hidden layer is required".into(),
            ));
        }
        if self.hidden_sizes.contains(&0) {
            return Err(NetError::Config("hidden sizes must be positive".into()));
        }
        if self.action_count == 0 {
            return Err(NetError::Config("action_count must be positive".into()));
        }
        Ok(())
    }

    /// Layer shapes `(inputs, outputs)` in declaration order.
    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut dims = vec![self.input_dim];
        dims.extend(&self.hidden_sizes);
        let trunk: Vec<(usize, usize)> = dims.windows(2).map(|w| (w[0], w[1])).collect();
        let last = *dims.last().expect("non-empty");
        let mut shapes = trunk.clone();
        shapes.push((last, self.action_count));
        if !self.shared_trunk {
            shapes.extend(trunk);
        }
        shapes.push((last, 1));
        shapes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Layer {
    inputs: usize,
    outputs: usize,
}

/// Trainable parameters plus Adam moments.
///
/// Tensors alternate weight, bias per layer, in declaration order:
/// policy trunk, policy head, value trunk (absent when shared), value head.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParameters {
    config: NetConfig,
    layers: Vec<Layer>,
    pub(crate) tensors: Vec<Vec<f64>>,
    pub(crate) moment1: Vec<Vec<f64>>,
    pub(crate) moment2: Vec<Vec<f64>>,
    pub(crate) step: u64,
}

/// Gradient buffers shaped like [`PolicyParameters`] tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn scale(&mut self, k: f64) {
        for t in &mut self.tensors {
            t.iter_mut().for_each(|g| *g *= k);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.tensors
            .iter()
            .flatten()
            .fold(0.0f64, |m, g| m.max(g.abs()))
    }

    pub fn flat(&self) -> Vec<f64> {
        self.tensors.iter().flatten().copied().collect()
    }
}

/// Reusable activations for one forward/backward pass.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    /// Outputs of every layer in declaration order (post-activation for hidden).
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_next: Vec<f64>,
    trunk_delta: Vec<f64>,
}

impl Workspace {
    pub fn logits(&self, params: &PolicyParameters) -> &[f64] {
        &self.acts[params.policy_head()]
    }

    pub fn value(&self, params: &PolicyParameters) -> f64 {
        self.acts[params.value_head()][0]
    }
}

impl PolicyParameters {
    /// Parameters with every entry zero.
    pub fn zeros(config: NetConfig) -> Result<Self, NetError> {
        config.validate()?;
        let layers: Vec<Layer> = config
            .layer_shapes()
            .into_iter()
            .map(|(inputs, outputs)| Layer { inputs, outputs })
            .collect();
        let tensors: Vec<Vec<f64>> = layers
            .iter()
            .flat_map(|l| [vec![0.0; l.inputs * l.outputs], vec![0.0; l.outputs]])
            .collect();
        Ok(PolicyParameters {
            moment1: tensors.clone(),
            moment2: tensors.clone(),
            tensors,
            layers,
            config,
            step: 0,
        })
    }

    /// Orthogonal initialization: gain √2 on hidden layers, 0.01 on the
    /// policy output, 1.0 on the value output; zero biases.
    pub fn init(config: NetConfig, seed: u64) -> Result<Self, NetError> {
        let mut p = PolicyParameters::zeros(config)?;
        let mut rng = init::seeded(seed);
        let policy_head = p.policy_head();
        let value_head = p.value_head();
        for li in 0..p.layers.len() {
            let gain = if li == policy_head {
                0.01
            } else if li == value_head {
                1.0
            } else {
                std::f64::consts::SQRT_2
            };
            let Layer { inputs, outputs } = p.layers[li];
            p.tensors[2 * li] = init::orthogonal(inputs, outputs, gain, &mut rng);
        }
        Ok(p)
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn adam_steps(&self) -> u64 {
        self.step
    }

    pub fn tensors(&self) -> &[Vec<f64>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.tensors
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(Vec::len).sum()
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            tensors: self.tensors.iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }

    fn trunk_len(&self) -> usize {
        self.config.hidden_sizes.len()
    }

    fn policy_head(&self) -> usize {
        self.trunk_len()
    }

    fn value_head(&self) -> usize {
        self.layers.len() - 1
    }

    /// Layer ids feeding the value head.
    fn value_trunk(&self) -> std::ops::Range<usize> {
        if self.config.shared_trunk {
            0..self.trunk_len()
        } else {
            self.trunk_len() + 1..self.layers.len() - 1
        }
    }

    /// Tensor index range owned by the policy network.
    pub fn policy_tensor_range(&self) -> std::ops::Range<usize> {
        0..2 * (self.trunk_len() + 1)
    }

    /// Tensor index range owned only by the value network.
    pub fn value_tensor_range(&self) -> std::ops::Range<usize> {
        2 * (self.trunk_len() + 1)..self.tensors.len()
    }

    pub fn new_workspace(&self) -> Workspace {
        Workspace {
            acts: self.layers.iter().map(|l| vec![0.0; l.outputs]).collect(),
            delta: Vec::new(),
            delta_next: Vec::new(),
            trunk_delta: Vec::new(),
        }
    }

    /// Adjustment logits and state value for one observation.
    pub fn forward(&self, obs: &[f64]) -> Result<(Vec<f64>, f64), NetError> {
        let mut ws = self.new_workspace();
        self.forward_ws(obs, &mut ws)?;
        Ok((ws.logits(self).to_vec(), ws.value(self)))
    }

    /// Forward pass filling `ws`; read results with [`Workspace::logits`].
    pub fn forward_ws(&self, obs: &[f64], ws: &mut Workspace) -> Result<(), NetError> {
        if obs.len() != self.config.input_dim {
            return Err(NetError::InputDim {
                expected: self.config.input_dim,
                got: obs.len(),
            });
        }
        if ws.acts.len() != self.layers.len() {
            *ws = self.new_workspace();
        }
        let act = self.config.activation;
        let trunk = self.trunk_len();
        // Policy trunk + head.
        for li in 0..=trunk {
            let (before, rest) = ws.acts.split_at_mut(li);
            let input: &[f64] = if li == 0 { obs } else { &before[li - 1] };
            self.dense(li, input, &mut rest[0], li < trunk, act);
        }
        // Value trunk + head.
        let vt = self.value_trunk();
        let mut prev: Option<usize> = if self.config.shared_trunk {
            Some(trunk - 1)
        } else {
            None
        };
        for li in vt.clone().chain(std::iter::once(self.value_head())) {
            if self.config.shared_trunk && li < trunk {
                continue;
            }
            let hidden = li != self.value_head();
            let (before, rest) = ws.acts.split_at_mut(li);
            let input: &[f64] = match prev {
                None => obs,
                Some(p) => &before[p],
            };
            self.dense(li, input, &mut rest[0], hidden, act);
            prev = Some(li);
        }
        Ok(())
    }

    #[inline]
    fn dense(&self, li: usize, input: &[f64], out: &mut [f64], hidden: bool, act: Activation) {
        let Layer { outputs, .. } = self.layers[li];
        let w = &self.tensors[2 * li];
        let b = &self.tensors[2 * li + 1];
        out.copy_from_slice(b);
        for (i, &x) in input.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            let row = &w[i * outputs..(i + 1) * outputs];
            for (o, &wv) in out.iter_mut().zip(row) {
                *o += x * wv;
            }
        }
        if hidden {
            out.iter_mut().for_each(|v| *v = act.apply(*v));
        }
    }

    /// Accumulates into `grads` the gradient of a scalar loss whose partial
    /// derivatives with respect to this sample's logits and value are
    /// `d_logits` and `d_value`. `ws` must hold this sample's forward pass.
    pub fn backward_ws(
        &self,
        obs: &[f64],
        ws: &mut Workspace,
        d_logits: &[f64],
        d_value: f64,
        grads: &mut Gradients,
    ) {
        let trunk = self.trunk_len();
        let act = self.config.activation;
        let mut delta = std::mem::take(&mut ws.delta);
        let mut delta_next = std::mem::take(&mut ws.delta_next);
        let mut trunk_delta = std::mem::take(&mut ws.trunk_delta);

        // Policy head.
        let policy_in = if trunk == 0 { None } else { Some(trunk - 1) };
        delta.clear();
        delta.extend_from_slice(d_logits);
        self.layer_backward(
            self.policy_head(),
            obs,
            ws,
            policy_in,
            &delta,
            grads,
            &mut delta_next,
        );

        if self.config.shared_trunk {
            // Value head joins at the shared trunk output.
            trunk_delta.clear();
            trunk_delta.extend_from_slice(&delta_next);
            let vh = self.value_head();
            self.layer_backward(vh, obs, ws, policy_in, &[d_value], grads, &mut delta_next);
            for (t, d) in trunk_delta.iter_mut().zip(&delta_next) {
                *t += d;
            }
            std::mem::swap(&mut trunk_delta, &mut delta_next);
            self.trunk_backward(0..trunk, obs, ws, &mut delta, &mut delta_next, grads, act);
        } else {
            self.trunk_backward(0..trunk, obs, ws, &mut delta, &mut delta_next, grads, act);
            let vt = self.value_trunk();
            let vh = self.value_head();
            let v_in = if vt.is_empty() {
                None
            } else {
                Some(vt.end - 1)
            };
            self.layer_backward(vh, obs, ws, v_in, &[d_value], grads, &mut delta_next);
            self.trunk_backward(vt, obs, ws, &mut delta, &mut delta_next, grads, act);
        }
        ws.delta = delta;
        ws.delta_next = delta_next;
        ws.trunk_delta = trunk_delta;
    }

    /// Backpropagates `delta_next` (gradient w.r.t. the output of the last
    /// layer in `range`) down through `range`.
    #[allow(clippy::too_many_arguments)]
    fn trunk_backward(
        &self,
        range: std::ops::Range<usize>,
        obs: &[f64],
        ws: &Workspace,
        delta: &mut Vec<f64>,
        delta_next: &mut Vec<f64>,
        grads: &mut Gradients,
        act: Activation,
    ) {
        let start = range.start;
        for li in range.rev() {
            delta.clear();
            delta.extend(
                delta_next
                    .iter()
                    .zip(&ws.acts[li])
                    .map(|(d, &y)| d * act.derivative_from_output(y)),
            );
            let input = if li == start { None } else { Some(li - 1) };
            self.layer_backward(li, obs, ws, input, delta, grads, delta_next);
        }
    }

    /// Given `delta` = dL/d(pre-activation) of layer `li`, accumulates weight
    /// and bias gradients and writes dL/d(input) to `d_input`.
    #[allow(clippy::too_many_arguments)]
    fn layer_backward(
        &self,
        li: usize,
        obs: &[f64],
        ws: &Workspace,
        input_layer: Option<usize>,
        delta: &[f64],
        grads: &mut Gradients,
        d_input: &mut Vec<f64>,
    ) {
        let Layer { inputs, outputs } = self.layers[li];
        let input: &[f64] = match input_layer {
            None => obs,
            Some(p) => &ws.acts[p],
        };
        let w = &self.tensors[2 * li];
        let (gw_part, gb_part) = grads.tensors.split_at_mut(2 * li + 1);
        let gw = &mut gw_part[2 * li];
        let gb = &mut gb_part[0];
        for (g, d) in gb.iter_mut().zip(delta) {
            *g += d;
        }
        let need_input_grad = input_layer.is_some();
        d_input.clear();
        if need_input_grad {
            d_input.resize(inputs, 0.0);
        }
        for (i, &x) in input.iter().enumerate() {
            let row = i * outputs..(i + 1) * outputs;
            if x != 0.0 {
                for (g, d) in gw[row.clone()].iter_mut().zip(delta) {
                    *g += x * d;
                }
            }
            if need_input_grad {
                d_input[i] = w[row].iter().zip(delta).map(|(a, b)| a * b).sum();
            }
        }
    }

    /// Errors if any parameter is NaN or infinite, naming the tensor.
    pub fn check_finite(&self) -> Result<(), NetError> {
        check_tensors(&self.tensors, "parameter")
    }
}

pub(crate) fn check_tensors(tensors: &[Vec<f64>], what: &str) -> Result<(), NetError> {
    for (ti, t) in tensors.iter().enumerate() {
        if t.iter().any(|v| !v.is_finite()) {
            let kind = if ti % 2 == 0 { "weight" } else { "bias" };
            return Err(NetError::NonFinite(format!(
                "{what} layer {} {kind}",
                ti / 2
            )));
        }
    }
    Ok(())
}
