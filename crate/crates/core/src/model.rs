//! The full forecaster: stacked 3D graph convolution blocks, an output block
//! that collapses time, and a node-shared linear head.
//!
//! ```text
//! input  B × M × n × 1
//! block  conv(GLU) → conv(GLU) → layer norm        (× n_blocks)
//! output conv(sigmoid, K_t = remaining steps)      → B × 1 × n × C
//! head   shared linear map C → 1                   → B × n
//! ```

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::array::DenseArray;
use crate::error::{shape_check, Error, Result};
use crate::exec::Executor;
use crate::graph::{Basis, ScaledLaplacian};
use crate::math;
use crate::nn::conv::{ConvCache, ConvLayer};
use crate::nn::fc::{fc_row, shared_fc_backward};
use crate::nn::norm::{layer_norm_backward_sample, layer_norm_sample, NormCache};
use crate::nn::{adam_update, sample_loss, Activation, AdamConfig, Param, ParamClass};
use crate::rng;
use crate::series::{NormStats, WindowSet};

/// Bumped whenever parameter names, shapes or order change.
pub const PARAM_LAYOUT_VERSION: u32 = 1;

/// Layer used to collapse the remaining time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputBlock {
    /// Graph convolution with the model's `K`.
    #[default]
    Gconv,
    /// Temporal-only convolution (`K = 1`).
    Temporal,
}

impl fmt::Display for OutputBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputBlock::Gconv => "gconv",
            OutputBlock::Temporal => "temporal",
        })
    }
}

impl core::str::FromStr for OutputBlock {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gconv" => Ok(OutputBlock::Gconv),
            "temporal" => Ok(OutputBlock::Temporal),
            other => Err(Error::Config(format!("unknown output block `{other}`"))),
        }
    }
}

/// Network architecture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TGCNConfig {
    pub n_blocks: usize,
    pub layers_per_block: usize,
    pub channels: usize,
    /// Number of graph polynomial terms `K`.
    pub cheb_k: usize,
    /// Temporal kernel size `K_t`.
    pub kt: usize,
    /// Input window `M`.
    pub input_len: usize,
    /// Forecast horizon `H` in steps.
    pub horizon: usize,
    pub output_block: OutputBlock,
    pub basis: Basis,
}

impl Default for TGCNConfig {
    fn default() -> Self {
        Self {
            n_blocks: 4,
            layers_per_block: 2,
            channels: 64,
            cheb_k: 3,
            kt: 2,
            input_len: 12,
            horizon: 3,
            output_block: OutputBlock::Gconv,
            basis: Basis::Chebyshev,
        }
    }
}

impl TGCNConfig {
    /// Time steps left for the output block, `M − blocks·layers·(K_t − 1)`.
    pub fn remaining_steps(&self) -> isize {
        self.input_len as isize
            - (self.n_blocks * self.layers_per_block * self.kt.saturating_sub(1)) as isize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("n_blocks", self.n_blocks),
            ("layers_per_block", self.layers_per_block),
            ("channels", self.channels),
            ("cheb_k", self.cheb_k),
            ("kt", self.kt),
            ("input_len", self.input_len),
            ("horizon", self.horizon),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        let rem = self.remaining_steps();
        if rem < 1 {
            return Err(Error::Config(format!(
                "input length {} is consumed by {} blocks × {} layers × (K_t − 1 = {}); \
                 {} more input steps are needed",
                self.input_len,
                self.n_blocks,
                self.layers_per_block,
                self.kt - 1,
                1 - rem
            )));
        }
        Ok(())
    }

    /// Time length of the input and after every block, then after the output block.
    pub fn time_lengths(&self) -> Vec<usize> {
        let per_block = self.layers_per_block * (self.kt - 1);
        let mut lens: Vec<usize> = (0..=self.n_blocks)
            .map(|b| self.input_len - b * per_block)
            .collect();
        lens.push(1);
        lens
    }
}

/// Optimization schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub decay_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 50,
            lr: 1e-2,
            lr_decay: 0.7,
            decay_every: 3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.lr)));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config(format!(
                "lr_decay {} must lie in (0, 1]",
                self.lr_decay
            )));
        }
        if self.batch_size == 0 || self.decay_every == 0 {
            return Err(Error::Config("batch_size and decay_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Learning rate of 1-based `epoch`: `lr · decay^⌊(epoch−1)/decay_every⌋`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let drops = (epoch.max(1) - 1) / self.decay_every;
        self.lr * libm::pow(self.lr_decay, drops as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Stage {
    Conv {
        layer: ConvLayer,
        theta: usize,
        bias: usize,
    },
    Norm {
        gamma: usize,
        beta: usize,
    },
    Fc {
        weight: usize,
        bias: usize,
    },
}

/// Parameters, architecture and graph of a forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    config: TGCNConfig,
    laplacian: ScaledLaplacian,
    n: usize,
    params: Vec<Param>,
    stages: Vec<Stage>,
}

enum StageCache {
    Conv(ConvCache),
    Norm(NormCache),
    Fc(Vec<f64>),
}

/// Everything the backward pass needs from one sample's forward pass.
pub struct SampleTape {
    caches: Vec<StageCache>,
}

/// Recorded forward pass over a batch.
pub struct Tape {
    samples: Vec<SampleTape>,
}

impl Tape {
    pub fn empty() -> Self {
        Self {
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Conv weights rearranged for matrix products, one entry per stage.
pub struct Packed(Vec<Vec<f64>>);

/// Per-parameter gradient buffers in registration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<Vec<f64>>);

impl Grads {
    pub fn zeros_like(params: &[Param]) -> Self {
        Grads(params.iter().map(|p| vec![0.0; p.value.len()]).collect())
    }

    pub fn add(&mut self, other: &Grads) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

fn glorot(rng: &mut impl Rng, shape: &[usize], fan_in: usize, fan_out: usize) -> DenseArray {
    let limit = math::sqrt(6.0 / (fan_in + fan_out) as f64);
    let len: usize = shape.iter().product();
    let data = (0..len).map(|_| rng.random_range(-limit..limit)).collect();
    DenseArray::from_vec(shape, data).expect("shape matches length")
}

impl ModelState {
    /// Builds a freshly initialized network for `n` roads.
    pub fn build(config: TGCNConfig, laplacian: ScaledLaplacian, n: usize, seed: u64) -> Result<Self> {
        config.validate()?;
        shape_check("laplacian", "node", n, laplacian.n())?;
        let mut rng = rng::stream(seed, rng::INIT_STREAM);
        let mut params = Vec::new();
        let mut stages = Vec::new();
        let push = |params: &mut Vec<Param>, name: String, class, value| {
            params.push(Param::new(name, class, value));
            params.len() - 1
        };

        let mut c_in = 1;
        for b in 0..config.n_blocks {
            for l in 0..config.layers_per_block {
                let layer = ConvLayer {
                    c_in,
                    c_out: config.channels,
                    kt: config.kt,
                    order: config.cheb_k,
                    activation: Activation::Glu,
                    basis: config.basis,
                };
                let shape = layer.theta_shape();
                let rf = config.kt * config.cheb_k;
                let theta = push(
                    &mut params,
                    format!("block{b}.conv{l}.theta"),
                    ParamClass::Theta,
                    glorot(&mut rng, &shape, c_in * rf, layer.width() * rf),
                );
                let bias = push(
                    &mut params,
                    format!("block{b}.conv{l}.bias"),
                    ParamClass::Bias,
                    DenseArray::zeros(&[layer.width()]),
                );
                stages.push(Stage::Conv { layer, theta, bias });
                c_in = config.channels;
            }
            let gamma = push(
                &mut params,
                format!("block{b}.norm.gamma"),
                ParamClass::Gamma,
                DenseArray::filled(&[n, config.channels], 1.0),
            );
            let beta = push(
                &mut params,
                format!("block{b}.norm.beta"),
                ParamClass::Beta,
                DenseArray::zeros(&[n, config.channels]),
            );
            stages.push(Stage::Norm { gamma, beta });
        }

        let order = match config.output_block {
            OutputBlock::Gconv => config.cheb_k,
            OutputBlock::Temporal => 1,
        };
        let kt_out = config.remaining_steps() as usize;
        let layer = ConvLayer {
            c_in,
            c_out: config.channels,
            kt: kt_out,
            order,
            activation: Activation::Sigmoid,
            basis: config.basis,
        };
        let rf = kt_out * order;
        let theta = push(
            &mut params,
            "output.conv.theta".into(),
            ParamClass::Theta,
            glorot(&mut rng, &layer.theta_shape(), c_in * rf, layer.width() * rf),
        );
        let bias = push(
            &mut params,
            "output.conv.bias".into(),
            ParamClass::Bias,
            DenseArray::zeros(&[layer.width()]),
        );
        stages.push(Stage::Conv { layer, theta, bias });
        let weight = push(
            &mut params,
            "output.fc.weight".into(),
            ParamClass::FcWeight,
            glorot(&mut rng, &[config.channels], config.channels, 1),
        );
        let bias = push(
            &mut params,
            "output.fc.bias".into(),
            ParamClass::FcBias,
            DenseArray::zeros(&[1]),
        );
        stages.push(Stage::Fc { weight, bias });

        Ok(Self {
            config,
            laplacian,
            n,
            params,
            stages,
        })
    }

    pub fn config(&self) -> &TGCNConfig {
        &self.config
    }

    pub fn laplacian(&self) -> &ScaledLaplacian {
        &self.laplacian
    }

    pub fn n_roads(&self) -> usize {
        self.n
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Overwrites every parameter value from a flat buffer in registration order.
    pub fn load_flat(&mut self, flat: &[f64]) -> Result<()> {
        shape_check("parameter payload", "values", self.param_count(), flat.len())?;
        let mut off = 0;
        for p in &mut self.params {
            let len = p.value.len();
            p.value.data_mut().copy_from_slice(&flat[off..off + len]);
            off += len;
        }
        Ok(())
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.value.data().iter().copied()).collect()
    }

    pub fn pack(&self) -> Packed {
        Packed(
            self.stages
                .iter()
                .map(|s| match s {
                    Stage::Conv { layer, theta, .. } => layer.pack(self.params[*theta].value.data()),
                    _ => Vec::new(),
                })
                .collect(),
        )
    }

    fn check_input(&self, x: &DenseArray) -> Result<usize> {
        let ok_rank = x.ndim() == 3 || (x.ndim() == 4 && x.dim(3) == 1);
        if !ok_rank {
            return Err(Error::Data(format!(
                "model input must be B × M × n (× 1), got shape {:?}",
                x.shape()
            )));
        }
        shape_check("model input", "time", self.config.input_len, x.dim(1))?;
        shape_check("model input", "node", self.n, x.dim(2))?;
        Ok(x.dim(0))
    }

    /// Forward pass of one sample (`M × n` values); returns the `n` predictions.
    pub fn forward_sample(&self, packed: &Packed, x: &[f64], record: bool) -> Result<(Vec<f64>, SampleTape)> {
        let n = self.n;
        let lt = Some(self.laplacian.matrix());
        let mut h = x.to_vec();
        let mut t = self.config.input_len;
        let mut caches = Vec::new();
        for (s, stage) in self.stages.iter().enumerate() {
            match stage {
                Stage::Conv { layer, bias, .. } => {
                    let (y, cache) = layer.forward_sample(
                        lt,
                        &packed.0[s],
                        self.params[*bias].value.data(),
                        &h,
                        t,
                        n,
                    )?;
                    t = layer.out_len(t).expect("validated");
                    h = y;
                    if record {
                        caches.push(StageCache::Conv(cache));
                    }
                }
                Stage::Norm { gamma, beta } => {
                    let (y, cache) = layer_norm_sample(
                        &h,
                        self.params[*gamma].value.data(),
                        self.params[*beta].value.data(),
                    );
                    h = y;
                    if record {
                        caches.push(StageCache::Norm(cache));
                    }
                }
                Stage::Fc { weight, bias } => {
                    let w = self.params[*weight].value.data();
                    let b = self.params[*bias].value.data()[0];
                    let out: Vec<f64> = h.chunks(w.len()).map(|row| fc_row(row, w, b)).collect();
                    if record {
                        caches.push(StageCache::Fc(core::mem::replace(&mut h, out)));
                    } else {
                        h = out;
                    }
                }
            }
        }
        debug_assert!(h.iter().all(|v| v.is_finite()), "non-finite prediction");
        Ok((h, SampleTape { caches }))
    }

    /// Backward pass of one sample from the prediction gradient `dpred` (`n`).
    pub fn backward_sample(&self, packed: &Packed, tape: &SampleTape, dpred: &[f64]) -> Result<Grads> {
        if tape.caches.len() != self.stages.len() {
            return Err(Error::EmptyTape);
        }
        let mut grads = Grads::zeros_like(&self.params);
        let lt = Some(self.laplacian.matrix());
        let mut d = dpred.to_vec();
        for (s, (stage, cache)) in self.stages.iter().zip(&tape.caches).enumerate().rev() {
            match (stage, cache) {
                (Stage::Fc { weight, bias }, StageCache::Fc(input)) => {
                    let mut db = 0.0;
                    let w = self.params[*weight].value.data();
                    d = shared_fc_backward(input, w, &d, &mut grads.0[*weight], &mut db);
                    grads.0[*bias][0] += db;
                }
                (Stage::Norm { gamma, beta }, StageCache::Norm(c)) => {
                    let (lo, hi) = (*gamma.min(beta), *gamma.max(beta));
                    let (head, tail) = grads.0.split_at_mut(hi);
                    let (dg, db) = if *gamma == lo {
                        (&mut head[lo], &mut tail[0])
                    } else {
                        (&mut tail[0], &mut head[lo])
                    };
                    d = layer_norm_backward_sample(c, self.params[*gamma].value.data(), &d, dg, db);
                }
                (Stage::Conv { layer, theta, bias }, StageCache::Conv(c)) => {
                    let need_dx = s > 0;
                    let (dtheta, dbias) = {
                        let (head, tail) = grads.0.split_at_mut(*bias);
                        (&mut head[*theta], &mut tail[0])
                    };
                    match layer.backward_sample(lt, &packed.0[s], c, &d, self.n, dtheta, dbias, need_dx) {
                        Some(dx) => d = dx,
                        None => d.clear(),
                    }
                }
                _ => return Err(Error::EmptyTape),
            }
        }
        Ok(grads)
    }

    /// Batched prediction, `B × M × n (× 1) → B × n`.
    pub fn forward(&self, x: &DenseArray) -> Result<DenseArray> {
        let b = self.check_input(x)?;
        let packed = self.pack();
        let mut out = DenseArray::zeros(&[b, self.n]);
        for s in 0..b {
            let (y, _) = self.forward_sample(&packed, x.outer(s), false)?;
            out.outer_mut(s).copy_from_slice(&y);
        }
        Ok(out)
    }

    /// Batched prediction spread over an executor; per-sample results are
    /// independent so the output does not depend on the executor.
    pub fn forward_with<E: Executor>(&self, x: &DenseArray, exec: &E) -> Result<DenseArray> {
        let b = self.check_input(x)?;
        let packed = self.pack();
        let mut out = DenseArray::zeros(&[b, self.n]);
        let mut err = None;
        exec.map_reduce(
            b,
            |s| self.forward_sample(&packed, x.outer(s), false).map(|r| r.0),
            |s, r| match r {
                Ok(y) => out.outer_mut(s).copy_from_slice(&y),
                Err(e) => {
                    err.get_or_insert(e);
                }
            },
        );
        match err {
            Some(e) => Err(e),
            None => Ok(out),
        }
    }

    /// Forward pass that records a [`Tape`] for [`ModelState::backward`].
    pub fn forward_record(&self, x: &DenseArray) -> Result<(DenseArray, Tape)> {
        let b = self.check_input(x)?;
        let packed = self.pack();
        let mut out = DenseArray::zeros(&[b, self.n]);
        let mut samples = Vec::with_capacity(b);
        for s in 0..b {
            let (y, tape) = self.forward_sample(&packed, x.outer(s), true)?;
            out.outer_mut(s).copy_from_slice(&y);
            samples.push(tape);
        }
        Ok((out, Tape { samples }))
    }

    /// Reverse-mode pass from `dpred` (`B × n`); overwrites every parameter's
    /// `grad` with the gradient, summed over samples in index order.
    pub fn backward(&mut self, tape: &Tape, dpred: &DenseArray) -> Result<()> {
        if tape.is_empty() {
            return Err(Error::EmptyTape);
        }
        shape_check("prediction gradient", "batch", tape.len(), dpred.dim(0))?;
        let packed = self.pack();
        let mut total = Grads::zeros_like(&self.params);
        for (s, sample) in tape.samples.iter().enumerate() {
            total.add(&self.backward_sample(&packed, sample, dpred.outer(s))?);
        }
        self.set_grads(&total, 1.0);
        Ok(())
    }

    fn set_grads(&mut self, grads: &Grads, scale: f64) {
        for (p, g) in self.params.iter_mut().zip(&grads.0) {
            for (dst, src) in p.grad.data_mut().iter_mut().zip(g) {
                *dst = src * scale;
            }
        }
    }

    /// Mean combined loss over `indices` of `data`, leaving its gradient in
    /// every parameter's `grad`.
    pub fn batch_gradient<E: Executor>(
        &mut self,
        data: &WindowSet,
        indices: &[usize],
        exec: &E,
    ) -> Result<f64> {
        let packed = self.pack();
        let mut total = Grads::zeros_like(&self.params);
        let mut loss = 0.0;
        let mut err = None;
        let this = &*self;
        exec.map_reduce(
            indices.len(),
            |k| {
                let b = indices[k];
                let (pred, tape) = this.forward_sample(&packed, data.inputs.outer(b), true)?;
                let (l, dpred) = sample_loss(&pred, data.targets_direct.outer(b));
                let g = this.backward_sample(&packed, &tape, &dpred)?;
                Ok::<_, Error>((l, g))
            },
            |_, r| match r {
                Ok((l, g)) => {
                    loss += l;
                    total.add(&g);
                }
                Err(e) => {
                    err.get_or_insert(e);
                }
            },
        );
        if let Some(e) = err {
            return Err(e);
        }
        let scale = 1.0 / indices.len() as f64;
        self.set_grads(&total, scale);
        Ok(loss * scale)
    }
}

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    /// Validation MAE in original speed units.
    pub val_mae: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept (lowest validation MAE).
    pub best_epoch: usize,
}

impl History {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.epochs.iter().find(|r| r.epoch == self.best_epoch)
    }
}

/// Mean combined loss and denormalized MAE of direct predictions on `data`.
pub fn validation_scores<E: Executor>(
    state: &ModelState,
    data: &WindowSet,
    stats: &NormStats,
    exec: &E,
) -> Result<(f64, f64)> {
    let pred = state.forward_with(&data.inputs, exec)?;
    let n = data.n_roads();
    let mut loss = 0.0;
    let mut abs = 0.0;
    for b in 0..data.len() {
        let p = pred.outer(b);
        let t = data.targets_direct.outer(b);
        loss += sample_loss(p, t).0;
        for r in 0..n {
            abs += (stats.denormalize(r, p[r]) - stats.denormalize(r, t[r])).abs();
        }
    }
    let b = data.len() as f64;
    Ok((loss / b, abs / (b * n as f64)))
}

/// Trains with Adam on shuffled mini-batches and keeps the parameters of the
/// epoch with the lowest validation MAE.
pub fn fit<E: Executor>(
    state: &mut ModelState,
    train: &WindowSet,
    val: &WindowSet,
    stats: &NormStats,
    tc: &TrainConfig,
    exec: &E,
) -> Result<History> {
    tc.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Data("training and validation windows must be non-empty".into()));
    }
    for (what, w) in [("training", train), ("validation", val)] {
        if w.horizon != state.config.horizon || w.input_len != state.config.input_len {
            return Err(Error::Config(format!(
                "{what} windows use M={}, H={} but the model expects M={}, H={}",
                w.input_len, w.horizon, state.config.input_len, state.config.horizon
            )));
        }
        shape_check("windows", "node", state.n, w.n_roads())?;
    }

    let mut shuffle = rng::stream(tc.seed, rng::SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = History::default();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut step = 0u64;
    for epoch in 1..=tc.epochs {
        let lr = tc.lr_at(epoch);
        order.shuffle(&mut shuffle);
        let mut loss_sum = 0.0;
        for batch in order.chunks(tc.batch_size) {
            let loss = state.batch_gradient(train, batch, exec)?;
            loss_sum += loss * batch.len() as f64;
            step += 1;
            adam_update(&mut state.params, step, lr, AdamConfig::default());
        }
        let train_loss = loss_sum / train.len() as f64;
        let (val_loss, val_mae) = validation_scores(state, val, stats, exec)?;
        log::info!(
            "epoch {epoch:>3}  lr {lr:.3e}  train {train_loss:.5}  val {val_loss:.5}  val MAE {val_mae:.4}"
        );
        history.epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss,
            val_loss,
            val_mae,
        });
        if best.as_ref().is_none_or(|(m, _)| val_mae < *m) {
            best = Some((val_mae, state.flat_values()));
            history.best_epoch = epoch;
        }
    }
    if let Some((_, flat)) = best {
        state.load_flat(&flat)?;
    }
    for p in &mut state.params {
        p.zero_grad();
    }
    Ok(history)
}

/// Direct `H`-step prediction; fails unless the model was trained for `horizon`.
pub fn predict_direct(state: &ModelState, x: &DenseArray, horizon: usize) -> Result<DenseArray> {
    if state.config.horizon != horizon {
        return Err(Error::Horizon {
            model: state.config.horizon,
            requested: horizon,
        });
    }
    state.forward(x)
}

/// Rolls a one-step model forward `horizon` times, feeding each prediction
/// back as the newest input step. Returns `B × H × n`.
pub fn predict_recursive(state: &ModelState, x: &DenseArray, horizon: usize) -> Result<DenseArray> {
    predict_recursive_traced(state, x, horizon, |_, _| {})
}

/// [`predict_recursive`] that shows each step's input window to `trace`
/// before predicting from it.
pub fn predict_recursive_traced(
    state: &ModelState,
    x: &DenseArray,
    horizon: usize,
    mut trace: impl FnMut(usize, &DenseArray),
) -> Result<DenseArray> {
    if horizon < 1 {
        return Err(Error::Config("recursive horizon must be at least 1".into()));
    }
    if state.config.horizon != 1 {
        return Err(Error::Horizon {
            model: state.config.horizon,
            requested: 1,
        });
    }
    let b = state.check_input(x)?;
    let (m, n) = (state.config.input_len, state.n);
    let mut window = DenseArray::from_vec(&[b, m, n], x.data().to_vec())?;
    let mut out = DenseArray::zeros(&[b, horizon, n]);
    for h in 0..horizon {
        trace(h, &window);
        let pred = state.forward(&window)?;
        for s in 0..b {
            let w = window.outer_mut(s);
            w.copy_within(n.., 0);
            w[(m - 1) * n..].copy_from_slice(pred.outer(s));
            out.outer_mut(s)[h * n..(h + 1) * n].copy_from_slice(pred.outer(s));
        }
    }
    Ok(out)
}
