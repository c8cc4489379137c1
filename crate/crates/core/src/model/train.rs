use std::borrow::Borrow;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AdamConfig, ModelError, OptimizerState, PricingModel};
use crate::datagen::AuctionRecord;
use crate::losses::LossSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub loss: LossSpec,
    pub minibatch_size: usize,
    pub iterations: u64,
    pub seed: u64,
    pub adam: AdamConfig,
    /// Loss-curve sampling period, in iterations.
    pub curve_every: u64,
}

impl TrainConfig {
    pub fn new(loss: LossSpec, iterations: u64) -> Self {
        Self { loss, minibatch_size: 512, iterations, seed: 0, adam: AdamConfig::default(), curve_every: 100 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_learning_rate(mut self, learning_rate: f64) -> Self {
        self.adam.learning_rate = learning_rate;
        self
    }

    pub fn with_minibatch_size(mut self, size: usize) -> Self {
        self.minibatch_size = size;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.loss.is_trainable() {
            return Err(crate::losses::LossError::NotTrainable.into());
        }
        if self.minibatch_size == 0 || self.iterations == 0 || self.curve_every == 0 {
            return Err(ModelError::InvalidConfig(
                "minibatch size, iterations and curve period must be positive".into(),
            ));
        }
        self.adam.validate()
    }
}

/// Mean minibatch loss averaged over the iterations ending at `iteration`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub iteration: u64,
    pub mean_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: PricingModel,
    pub curve: Vec<CurvePoint>,
    pub optimizer: OptimizerState,
}

/// One Adam step on the mean batch loss. Returns the mean loss before the
/// update. Only features present in the batch and the bias are touched.
pub fn minibatch_step<R: Borrow<AuctionRecord>>(
    model: &mut PricingModel,
    state: &mut OptimizerState,
    batch: &[R],
    loss: &LossSpec,
) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    let mut bias_grad = 0.0;
    let mut grads: BTreeMap<u32, f64> = BTreeMap::new();
    for record in batch {
        let record = record.borrow();
        let price = model.predict(&record.features)?;
        let lv = loss.evaluate(price, record)?;
        total += lv.value;
        bias_grad += lv.subgradient;
        for &(i, z) in record.features.entries() {
            *grads.entry(i).or_insert(0.0) += lv.subgradient * z;
        }
    }
    let bias_grad = bias_grad * scale;
    if !bias_grad.is_finite() || grads.values().any(|g| !g.is_finite()) {
        return Err(ModelError::NonFiniteGradient { step: state.step_count + 1 });
    }
    let bias_slot = state.bias_slot();
    let slots = grads
        .into_iter()
        .map(|(i, g)| (i as usize, g * scale))
        .chain(std::iter::once((bias_slot, bias_grad)));
    state.apply(slots, model);
    Ok(total * scale)
}

/// Data-driven starting bias: the mean of `max{b2, c}` over `batch`.
pub fn initial_bias<R: Borrow<AuctionRecord>>(batch: &[R]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    batch.iter().map(|r| r.borrow().effective_cost()).sum::<f64>() / batch.len() as f64
}

/// Runs `config.iterations` minibatch steps over seeded per-epoch shuffles.
pub fn train(records: &[AuctionRecord], config: &TrainConfig) -> Result<TrainOutput, ModelError> {
    config.validate()?;
    let first = records.first().ok_or(ModelError::EmptyDataset)?;
    let dimension = first.features.dimension();
    if let Some(bad) = records.iter().find(|r| r.features.dimension() != dimension) {
        return Err(ModelError::DimensionMismatch { model: dimension, features: bad.features.dimension() });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let batch_size = config.minibatch_size.min(records.len());
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut rng);
    let mut cursor = 0;

    let mut model = PricingModel::zeros(dimension);
    let mut state = OptimizerState::new(dimension, config.adam);
    let mut curve = Vec::new();
    let mut window_sum = 0.0;
    let mut window_len = 0u64;
    let mut batch: Vec<&AuctionRecord> = Vec::with_capacity(batch_size);

    for iteration in 1..=config.iterations {
        if cursor + batch_size > order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        batch.clear();
        batch.extend(order[cursor..cursor + batch_size].iter().map(|&i| &records[i]));
        cursor += batch_size;
        if iteration == 1 {
            model.bias = initial_bias(&batch);
        }

        window_sum += minibatch_step(&mut model, &mut state, &batch, &config.loss)?;
        window_len += 1;
        if iteration % config.curve_every == 0 || iteration == config.iterations {
            curve.push(CurvePoint { iteration, mean_loss: window_sum / window_len as f64 });
            window_sum = 0.0;
            window_len = 0;
        }
    }
    Ok(TrainOutput { model, curve, optimizer: state })
}
