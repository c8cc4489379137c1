use clearprice::datagen::{generate, AuctionRecord, BidDistribution, ContextSpec, GenConfig};
use clearprice::losses::{LossKind, LossSpec};
use clearprice::model::{
    minibatch_step, read_checkpoint, train, write_checkpoint, AdamConfig, FeatureVector, ModelError, OptimizerState,
    PricingModel, TrainConfig,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DIM: usize = 4;

fn random_batch(rng: &mut ChaCha8Rng, size: usize) -> Vec<AuctionRecord> {
    (0..size)
        .map(|_| {
            let mut entries = Vec::new();
            for i in 0..DIM as u32 {
                if rng.random_bool(0.6) {
                    entries.push((i, rng.random_range(-1.0..1.0)));
                }
            }
            let mut bids: Vec<f64> = (0..rng.random_range(1..=5)).map(|_| rng.random_range(0.0..4.0)).collect();
            bids.sort_by(|a, b| b.total_cmp(a));
            let cost = rng.random_range(0.0..1.0);
            AuctionRecord::new(FeatureVector::new(entries, DIM).unwrap(), bids, cost).unwrap()
        })
        .collect()
}

fn mean_loss(model: &PricingModel, batch: &[AuctionRecord], loss: &LossSpec) -> f64 {
    batch.iter().map(|r| loss.value(model.predict(&r.features).unwrap(), r)).sum::<f64>() / batch.len() as f64
}

fn near_kink(model: &PricingModel, batch: &[AuctionRecord], loss: &LossSpec) -> bool {
    batch.iter().any(|r| {
        let p = model.predict(&r.features).unwrap();
        loss.breakpoints(r).iter().any(|b| (p - b).abs() < 1e-3)
    })
}

/// With lr = 1 and a huge epsilon, the first Adam update is `-g / (|g| + eps)`,
/// which can be inverted to recover the gradient exactly.
fn recovered_gradient(model: &PricingModel, batch: &[AuctionRecord], loss: &LossSpec) -> Vec<f64> {
    let eps = 1e6;
    let adam = AdamConfig { learning_rate: 1.0, epsilon: eps, ..AdamConfig::default() };
    let mut state = OptimizerState::new(DIM, adam);
    let mut stepped = model.clone();
    minibatch_step(&mut stepped, &mut state, batch, loss).unwrap();
    let delta = |before: f64, after: f64| {
        let d = before - after;
        d * eps / (1.0 - d.abs())
    };
    let mut grads: Vec<f64> = model.weights.iter().zip(&stepped.weights).map(|(&a, &b)| delta(a, b)).collect();
    grads.push(delta(model.bias, stepped.bias));
    grads
}

#[test]
fn chain_rule_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let losses = [
        LossSpec::clearing(0.7).unwrap(),
        LossSpec::new(LossKind::SquaredTopBid, 0.3, None).unwrap(),
        LossSpec::new(LossKind::SquaredSecondBid, 0.0, None).unwrap(),
        LossSpec::surrogate(0.75, 0.5).unwrap(),
    ];
    let mut checked = 0;
    while checked < 200 {
        let batch = random_batch(&mut rng, 16);
        let loss = losses[checked % losses.len()];
        let model = PricingModel {
            weights: (0..DIM).map(|_| rng.random_range(-1.0..1.0)).collect(),
            bias: rng.random_range(0.0..3.0),
        };
        if near_kink(&model, &batch, &loss) {
            continue;
        }
        let grads = recovered_gradient(&model, &batch, &loss);
        let h = 1e-6;
        for (slot, &g) in grads.iter().enumerate() {
            let shifted = |delta: f64| {
                let mut m = model.clone();
                if slot == DIM {
                    m.bias += delta;
                } else {
                    m.weights[slot] += delta;
                }
                mean_loss(&m, &batch, &loss)
            };
            let numeric = (shifted(h) - shifted(-h)) / (2.0 * h);
            assert!((g - numeric).abs() <= 1e-5, "{loss} slot {slot}: analytic {g} numeric {numeric}");
        }
        checked += 1;
    }
}

#[test]
fn batch_loss_is_reported_before_the_update() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let batch = random_batch(&mut rng, 32);
    let loss = LossSpec::clearing(1.0).unwrap();
    let mut model = PricingModel::constant(DIM, 1.0);
    let expected = mean_loss(&model, &batch, &loss);
    let mut state = OptimizerState::new(DIM, AdamConfig::default());
    let reported = minibatch_step(&mut model, &mut state, &batch, &loss).unwrap();
    assert!((reported - expected).abs() <= 1e-12);
    assert_eq!(state.step_count, 1);
}

fn two_context_data(records: usize, seed: u64) -> Vec<AuctionRecord> {
    let contexts = vec![
        ContextSpec::iid("a", 0, BidDistribution::Uniform { lo: 0.0, hi: 1.0 }, 3),
        ContextSpec::iid("b", 1, BidDistribution::Uniform { lo: 0.0, hi: 3.0 }, 3),
    ];
    generate(&GenConfig::new(records, contexts, seed)).unwrap().collect()
}

#[test]
fn training_is_deterministic() {
    let data = two_context_data(5_000, 1);
    let config = TrainConfig::new(LossSpec::surrogate(0.75, 0.2).unwrap(), 500).with_seed(9).with_minibatch_size(64);
    let a = train(&data, &config).unwrap();
    let b = train(&data, &config).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.curve, b.curve);
    let c = train(&data, &config.clone().with_seed(10)).unwrap();
    assert_ne!(a.model, c.model);
}

#[test]
fn squared_top_bid_learns_context_means() {
    let data = two_context_data(50_000, 2);
    let config = TrainConfig::new(LossSpec::new(LossKind::SquaredTopBid, 0.0, None).unwrap(), 8_000)
        .with_seed(2)
        .with_learning_rate(0.01);
    let model = train(&data, &config).unwrap().model;
    // Mean of the max of three U(0, s) draws is 3s/4.
    for (feature, mean) in [(0usize, 0.75), (1, 2.25)] {
        let p = model.weights[feature] + model.bias;
        assert!((p - mean).abs() < 0.03, "feature {feature}: {p} vs {mean}");
    }
}

#[test]
fn smoothed_curve_decreases_for_convex_losses() {
    let data = two_context_data(20_000, 3);
    for loss in [LossSpec::clearing(1.0).unwrap(), LossSpec::new(LossKind::SquaredSecondBid, 0.0, None).unwrap()] {
        let config = TrainConfig { curve_every: 250, ..TrainConfig::new(loss, 3_000).with_seed(3) };
        let curve = train(&data, &config).unwrap().curve;
        assert_eq!(curve.len(), 12);
        let first = curve[0].mean_loss;
        let last = curve.last().unwrap().mean_loss;
        assert!(last < first, "{loss}: {first} -> {last}");
    }
}

#[test]
fn mixed_dimensions_are_rejected() {
    let a = AuctionRecord::new(FeatureVector::one_hot(0, 2).unwrap(), vec![1.0], 0.0).unwrap();
    let b = AuctionRecord::new(FeatureVector::one_hot(0, 3).unwrap(), vec![1.0], 0.0).unwrap();
    let err = train(&[a, b], &TrainConfig::new(LossSpec::clearing(1.0).unwrap(), 1)).unwrap_err();
    assert!(matches!(err, ModelError::DimensionMismatch { model: 2, features: 3 }));
}

proptest! {
    #[test]
    fn checkpoints_round_trip(weights in prop::collection::vec(prop_oneof![Just(0.0), -1e6f64..1e6], 0..40), bias in -1e3f64..1e3) {
        let model = PricingModel { weights, bias };
        let mut buf = Vec::new();
        write_checkpoint(&model, &mut buf).unwrap();
        prop_assert_eq!(read_checkpoint(buf.as_slice()).unwrap(), model);
    }
}
