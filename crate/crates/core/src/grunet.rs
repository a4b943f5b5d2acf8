//! Three stacked GRU layers, four dropout sites, and a dense softmax head.
//!
//! Per layer and timestep:
//!
//! ```text
//! r  = sigmoid(W_r x + U_r h_prev + b_r)
//! z  = sigmoid(W_z x + U_z h_prev + b_z)
//! c  = tanh(W_h x + U_h (r * h_prev) + b_h)
//! h  = (1 - z) * h_prev + z * c
//! ```
//!
//! Dropout (inverted scaling, train mode only) sits on the network input
//! and on the output of each GRU layer, so the last site feeds the head.
//! Each site draws one mask per sequence and reuses it at every timestep.
//! Logits are read from the top layer's hidden state at the final timestep.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::keypoints::{KeypointVector, VECTOR_LEN};
use crate::linalg::{sigmoid, tanh, Matrix};

pub const NUM_LAYERS: usize = 3;
pub const NUM_DROPOUT: usize = NUM_LAYERS + 1;
pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_DROPOUT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetworkDims {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
}

impl NetworkDims {
    pub fn new(hidden_dim: usize, num_classes: usize) -> Self {
        NetworkDims {
            input_dim: VECTOR_LEN,
            hidden_dim,
            num_classes,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_dim == 0 || self.num_classes == 0 {
            return Err(Error::InvalidConfig(
                "network dimensions must all be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Weights of one GRU layer. `w_*` are `hidden x input`, `u_*` are
/// `hidden x hidden`.
#[derive(Debug, Clone, PartialEq)]
pub struct GruLayerParams {
    pub w_r: Matrix,
    pub u_r: Matrix,
    pub b_r: Vec<f64>,
    pub w_z: Matrix,
    pub u_z: Matrix,
    pub b_z: Vec<f64>,
    pub w_h: Matrix,
    pub u_h: Matrix,
    pub b_h: Vec<f64>,
}

/// Intermediate values of one cell step, kept for the backward pass.
#[derive(Debug, Clone)]
struct StepValues {
    r: Vec<f64>,
    z: Vec<f64>,
    c: Vec<f64>,
    rh: Vec<f64>,
    h: Vec<f64>,
}

impl GruLayerParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        GruLayerParams {
            w_r: Matrix::zeros(hidden_dim, input_dim),
            u_r: Matrix::zeros(hidden_dim, hidden_dim),
            b_r: vec![0.0; hidden_dim],
            w_z: Matrix::zeros(hidden_dim, input_dim),
            u_z: Matrix::zeros(hidden_dim, hidden_dim),
            b_z: vec![0.0; hidden_dim],
            w_h: Matrix::zeros(hidden_dim, input_dim),
            u_h: Matrix::zeros(hidden_dim, hidden_dim),
            b_h: vec![0.0; hidden_dim],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w_r.cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_r.rows()
    }

    /// One timestep of the cell.
    pub fn cell_forward(&self, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
        check_len("cell input", self.input_dim(), x.len())?;
        check_len("cell hidden state", self.hidden_dim(), h_prev.len())?;
        Ok(self.step(x, h_prev).h)
    }

    fn step(&self, x: &[f64], h_prev: &[f64]) -> StepValues {
        let n = self.hidden_dim();
        let mut r = self.b_r.clone();
        self.w_r.matvec_add(x, &mut r);
        self.u_r.matvec_add(h_prev, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut z = self.b_z.clone();
        self.w_z.matvec_add(x, &mut z);
        self.u_z.matvec_add(h_prev, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));

        let rh: Vec<f64> = r.iter().zip(h_prev).map(|(a, b)| a * b).collect();
        let mut c = self.b_h.clone();
        self.w_h.matvec_add(x, &mut c);
        self.u_h.matvec_add(&rh, &mut c);
        c.iter_mut().for_each(|v| *v = tanh(*v));

        let mut h = vec![0.0; n];
        for i in 0..n {
            h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * c[i];
        }
        StepValues { r, z, c, rh, h }
    }

    /// Tensors in serialization order: `w_r, u_r, b_r, w_z, u_z, b_z, w_h, u_h, b_h`.
    pub fn tensors(&self) -> [&[f64]; 9] {
        [
            self.w_r.as_slice(),
            self.u_r.as_slice(),
            &self.b_r,
            self.w_z.as_slice(),
            self.u_z.as_slice(),
            &self.b_z,
            self.w_h.as_slice(),
            self.u_h.as_slice(),
            &self.b_h,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 9] {
        [
            self.w_r.as_mut_slice(),
            self.u_r.as_mut_slice(),
            &mut self.b_r,
            self.w_z.as_mut_slice(),
            self.u_z.as_mut_slice(),
            &mut self.b_z,
            self.w_h.as_mut_slice(),
            self.u_h.as_mut_slice(),
            &mut self.b_h,
        ]
    }
}

pub fn gru_cell_forward(params: &GruLayerParams, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
    params.cell_forward(x, h_prev)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GruNetwork {
    pub layers: Vec<GruLayerParams>,
    /// `num_classes x hidden_dim`
    pub head_w: Matrix,
    pub head_b: Vec<f64>,
    /// Input, after layer 0, after layer 1, after layer 2 (before the head).
    pub dropout_rates: [f64; NUM_DROPOUT],
}

/// Parameter gradients, laid out like [`GruNetwork`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<GruLayerParams>,
    pub head_w: Matrix,
    pub head_b: Vec<f64>,
}

impl Gradients {
    pub fn zeros(dims: NetworkDims) -> Self {
        Gradients {
            layers: layer_shapes(dims)
                .map(|(i, h)| GruLayerParams::zeros(i, h))
                .collect(),
            head_w: Matrix::zeros(dims.num_classes, dims.hidden_dim),
            head_b: vec![0.0; dims.num_classes],
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.layers.iter().flat_map(|l| l.tensors()).collect();
        out.push(self.head_w.as_slice());
        out.push(&self.head_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .layers
            .iter_mut()
            .flat_map(|l| l.tensors_mut())
            .collect();
        out.push(self.head_w.as_mut_slice());
        out.push(&mut self.head_b);
        out
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= factor);
        }
    }
}

fn layer_shapes(dims: NetworkDims) -> impl Iterator<Item = (usize, usize)> {
    (0..NUM_LAYERS).map(move |l| {
        let input = if l == 0 { dims.input_dim } else { dims.hidden_dim };
        (input, dims.hidden_dim)
    })
}

#[derive(Debug, Clone)]
struct LayerTrace {
    /// Layer inputs after dropout, one per timestep.
    inputs: Vec<Vec<f64>>,
    /// `h_prev` for each timestep (starts at zero).
    h_prev: Vec<Vec<f64>>,
    steps: Vec<StepValues>,
}

/// Activations retained by [`GruNetwork::forward`] for [`GruNetwork::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    dims: NetworkDims,
    /// Per dropout site multipliers, shared by all timesteps; `None` in eval mode.
    masks: [Option<Vec<f64>>; NUM_DROPOUT],
    layers: Vec<LayerTrace>,
    head_input: Vec<f64>,
}

impl ForwardCache {
    pub fn steps(&self) -> usize {
        self.layers.first().map_or(0, |l| l.steps.len())
    }

    /// Top-layer hidden state at the final timestep, before head dropout.
    pub fn final_hidden(&self) -> &[f64] {
        &self.layers[NUM_LAYERS - 1].steps.last().expect("non-empty").h
    }

    /// Every hidden state of every layer, in layer then time order.
    pub fn hidden_states(&self) -> impl Iterator<Item = &[f64]> {
        self.layers
            .iter()
            .flat_map(|l| l.steps.iter().map(|s| s.h.as_slice()))
    }
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub logits: Vec<f64>,
    pub cache: ForwardCache,
}

impl GruNetwork {
    pub fn zeros(dims: NetworkDims, dropout_rates: [f64; NUM_DROPOUT]) -> Result<Self> {
        dims.validate()?;
        validate_rates(&dropout_rates)?;
        let g = Gradients::zeros(dims);
        Ok(GruNetwork {
            layers: g.layers,
            head_w: g.head_w,
            head_b: g.head_b,
            dropout_rates,
        })
    }

    /// Glorot-uniform weights (`s = sqrt(6 / (fan_in + fan_out))` per
    /// matrix) and zero biases, drawn in tensor order from a seeded stream.
    pub fn init(dims: NetworkDims, dropout_rates: [f64; NUM_DROPOUT], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(dims, dropout_rates)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |m: &mut Matrix| {
            let s = glorot_limit(m.cols(), m.rows());
            for v in m.as_mut_slice() {
                *v = rng.random_range(-s..s);
            }
        };
        for layer in &mut net.layers {
            fill(&mut layer.w_r);
            fill(&mut layer.u_r);
            fill(&mut layer.w_z);
            fill(&mut layer.u_z);
            fill(&mut layer.w_h);
            fill(&mut layer.u_h);
        }
        fill(&mut net.head_w);
        Ok(net)
    }

    pub fn dims(&self) -> NetworkDims {
        NetworkDims {
            input_dim: self.layers[0].input_dim(),
            hidden_dim: self.head_w.cols(),
            num_classes: self.head_w.rows(),
        }
    }

    /// Checks tensor shapes against each other and that every entry is finite.
    pub fn validate(&self) -> Result<()> {
        if self.layers.len() != NUM_LAYERS {
            return Err(Error::DimensionMismatch {
                what: "layer count",
                expected: NUM_LAYERS,
                got: self.layers.len(),
            });
        }
        validate_rates(&self.dropout_rates)?;
        let dims = self.dims();
        dims.validate()?;
        let reference = Gradients::zeros(dims);
        for (a, b) in self.tensors().into_iter().zip(reference.tensors()) {
            check_len("parameter tensor", b.len(), a.len())?;
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("non-finite parameter".into()));
            }
        }
        for (layer, (input, hidden)) in self.layers.iter().zip(layer_shapes(dims)) {
            check_len("layer input", input, layer.input_dim())?;
            check_len("layer hidden", hidden, layer.hidden_dim())?;
            check_len("recurrent weights", hidden, layer.u_r.cols())?;
            check_len("recurrent weights", hidden, layer.u_z.cols())?;
            check_len("recurrent weights", hidden, layer.u_h.cols())?;
        }
        Ok(())
    }

    /// All tensors in serialization order: each layer's nine tensors
    /// (see [`GruLayerParams::tensors`]) for layers 0..3, then `head_w`, `head_b`.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = self.layers.iter().flat_map(|l| l.tensors()).collect();
        out.push(self.head_w.as_slice());
        out.push(&self.head_b);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self
            .layers
            .iter_mut()
            .flat_map(|l| l.tensors_mut())
            .collect();
        out.push(self.head_w.as_mut_slice());
        out.push(&mut self.head_b);
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn forward<V: AsRef<[f64]>>(&self, seq: &[V], mode: Mode, rng_seed: u64) -> Result<ForwardPass> {
        let dims = self.dims();
        if seq.is_empty() {
            return Err(Error::DimensionMismatch {
                what: "sequence length",
                expected: 1,
                got: 0,
            });
        }
        for v in seq {
            check_len("input vector", dims.input_dim, v.as_ref().len())?;
        }
        let steps = seq.len();
        let masks = match mode {
            Mode::Eval => Default::default(),
            Mode::Train => self.sample_masks(dims, rng_seed),
        };

        let mut layers: Vec<LayerTrace> = Vec::with_capacity(NUM_LAYERS);
        for (l, params) in self.layers.iter().enumerate() {
            let inputs: Vec<Vec<f64>> = (0..steps)
                .map(|t| {
                    let raw = match l {
                        0 => seq[t].as_ref(),
                        _ => layers[l - 1].steps[t].h.as_slice(),
                    };
                    apply_mask(raw, masks[l].as_ref())
                })
                .collect();
            let mut h_prev = Vec::with_capacity(steps);
            let mut step_values = Vec::with_capacity(steps);
            let mut h = vec![0.0; dims.hidden_dim];
            for x in &inputs {
                let sv = params.step(x, &h);
                h_prev.push(core::mem::replace(&mut h, sv.h.clone()));
                step_values.push(sv);
            }
            layers.push(LayerTrace {
                inputs,
                h_prev,
                steps: step_values,
            });
        }

        let top = &layers[NUM_LAYERS - 1].steps[steps - 1].h;
        let head_input = apply_mask(top, masks[NUM_LAYERS].as_ref());
        let mut logits = self.head_b.clone();
        self.head_w.matvec_add(&head_input, &mut logits);

        Ok(ForwardPass {
            logits,
            cache: ForwardCache {
                dims,
                masks,
                layers,
                head_input,
            },
        })
    }

    /// Eval-mode logits.
    pub fn logits<V: AsRef<[f64]>>(&self, seq: &[V]) -> Result<Vec<f64>> {
        Ok(self.forward(seq, Mode::Eval, 0)?.logits)
    }

    fn sample_masks(&self, dims: NetworkDims, seed: u64) -> [Option<Vec<f64>>; NUM_DROPOUT] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        core::array::from_fn(|site| {
            let rate = self.dropout_rates[site];
            let width = if site == 0 { dims.input_dim } else { dims.hidden_dim };
            let keep = 1.0 / (1.0 - rate);
            let mask = (0..width)
                .map(|_| {
                    if rate == 0.0 || rng.random::<f64>() >= rate {
                        keep
                    } else {
                        0.0
                    }
                })
                .collect();
            Some(mask)
        })
    }

    /// Backpropagation through time for the forward pass that produced `cache`.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &[f64]) -> Result<Gradients> {
        let dims = self.dims();
        if cache.dims != dims || cache.layers.len() != NUM_LAYERS || cache.steps() == 0 {
            return Err(Error::StaleCache);
        }
        check_len("logit gradient", dims.num_classes, dlogits.len())?;
        let steps = cache.steps();
        let n = dims.hidden_dim;
        let mut grads = Gradients::zeros(dims);

        grads.head_w.outer_add(dlogits, &cache.head_input);
        grads.head_b.copy_from_slice(dlogits);

        // Gradient arriving at each layer output from above, per timestep.
        let mut d_out = vec![vec![0.0; n]; steps];
        let mut d_top = vec![0.0; n];
        self.head_w.matvec_t_add(dlogits, &mut d_top);
        d_out[steps - 1] = apply_mask(&d_top, cache.masks[NUM_LAYERS].as_ref());

        for l in (0..NUM_LAYERS).rev() {
            let params = &self.layers[l];
            let trace = &cache.layers[l];
            let g = &mut grads.layers[l];
            let in_dim = params.input_dim();
            let mut d_in = vec![vec![0.0; in_dim]; steps];
            let mut dh_next = vec![0.0; n];

            for t in (0..steps).rev() {
                let x = &trace.inputs[t];
                let hp = &trace.h_prev[t];
                let StepValues { r, z, c, rh, .. } = &trace.steps[t];

                let mut dh_prev = vec![0.0; n];
                let mut dac = vec![0.0; n];
                let mut daz = vec![0.0; n];
                for i in 0..n {
                    let dh = d_out[t][i] + dh_next[i];
                    dh_prev[i] = dh * (1.0 - z[i]);
                    dac[i] = dh * z[i] * (1.0 - c[i] * c[i]);
                    daz[i] = dh * (c[i] - hp[i]) * z[i] * (1.0 - z[i]);
                }

                let mut drh = vec![0.0; n];
                params.u_h.matvec_t_add(&dac, &mut drh);
                let mut dar = vec![0.0; n];
                for i in 0..n {
                    dh_prev[i] += drh[i] * r[i];
                    dar[i] = drh[i] * hp[i] * r[i] * (1.0 - r[i]);
                }

                g.w_h.outer_add(&dac, x);
                g.u_h.outer_add(&dac, rh);
                g.w_z.outer_add(&daz, x);
                g.u_z.outer_add(&daz, hp);
                g.w_r.outer_add(&dar, x);
                g.u_r.outer_add(&dar, hp);
                for i in 0..n {
                    g.b_h[i] += dac[i];
                    g.b_z[i] += daz[i];
                    g.b_r[i] += dar[i];
                }

                params.u_z.matvec_t_add(&daz, &mut dh_prev);
                params.u_r.matvec_t_add(&dar, &mut dh_prev);

                if l > 0 {
                    let dx = &mut d_in[t];
                    params.w_h.matvec_t_add(&dac, dx);
                    params.w_z.matvec_t_add(&daz, dx);
                    params.w_r.matvec_t_add(&dar, dx);
                }
                dh_next = dh_prev;
            }

            if l > 0 {
                d_out = d_in
                    .iter()
                    .map(|d| apply_mask(d, cache.masks[l].as_ref()))
                    .collect();
            }
        }
        Ok(grads)
    }
}

pub fn init_params(dims: NetworkDims, dropout_rates: [f64; NUM_DROPOUT], seed: u64) -> Result<GruNetwork> {
    GruNetwork::init(dims, dropout_rates, seed)
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    libm::sqrt(6.0 / (fan_in + fan_out) as f64)
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| libm::exp(v - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy of `softmax(logits)` against class `label` and its
/// gradient `softmax(logits) - onehot(label)`.
pub fn softmax_cross_entropy(logits: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= logits.len() {
        return Err(Error::DimensionMismatch {
            what: "label index",
            expected: logits.len(),
            got: label,
        });
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|&v| libm::exp(v - max)).sum();
    let log_sum = libm::log(sum) + max;
    let loss = log_sum - logits[label];
    let mut grad: Vec<f64> = logits.iter().map(|&v| libm::exp(v - log_sum)).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl AsRef<[f64]> for KeypointVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn apply_mask(values: &[f64], mask: Option<&Vec<f64>>) -> Vec<f64> {
    match mask {
        Some(m) => values.iter().zip(m).map(|(v, k)| v * k).collect(),
        None => values.to_vec(),
    }
}

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got })
    }
}

fn validate_rates(rates: &[f64; NUM_DROPOUT]) -> Result<()> {
    if rates.iter().all(|r| (0.0..1.0).contains(r)) {
        Ok(())
    } else {
        Err(Error::InvalidConfig("dropout rates must lie in [0, 1)".into()))
    }
}
