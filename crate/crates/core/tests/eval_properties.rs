use clearprice::datagen::{generate, AuctionRecord, BidDistribution, ContextSpec, GenConfig};
use clearprice::eval::{
    aggregate, evaluate, evaluate_prices, simulate_auction, EvalOptions, MetricsAccumulator, UnsoldRevenue,
};
use clearprice::losses::revenue_loss;
use clearprice::model::PricingModel;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mixed_data(records: usize, seed: u64) -> Vec<AuctionRecord> {
    let contexts = vec![
        ContextSpec::iid("a", 0, BidDistribution::Uniform { lo: 0.0, hi: 1.0 }, 5),
        ContextSpec::iid("b", 1, BidDistribution::LogNormal { mu: 0.0, sigma: 1.0 }, 3)
            .with_cost(BidDistribution::Uniform { lo: 0.0, hi: 0.5 }),
    ];
    generate(&GenConfig::new(records, contexts, seed)).unwrap().collect()
}

fn random_prices(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-0.5..3.0)).collect()
}

#[test]
fn revenue_is_the_negated_revenue_loss() {
    let records = mixed_data(20_000, 1);
    let prices = random_prices(&mut ChaCha8Rng::seed_from_u64(1), records.len());
    let report = evaluate_prices(&records, &prices, EvalOptions::default()).unwrap();
    let direct = records.iter().zip(&prices).map(|(r, &p)| -revenue_loss(p, r)).sum::<f64>() / records.len() as f64;
    assert!((report.revenue - direct).abs() <= 1e-12 * direct.abs().max(1.0));
}

#[test]
fn sold_records_balance_their_books() {
    let records = mixed_data(5_000, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for r in &records {
        let out = simulate_auction(r, rng.random_range(-0.5..3.0)).unwrap();
        if out.sold {
            assert!((out.welfare - (out.payment + out.buyer_surplus)).abs() <= 1e-12);
            assert!(out.buyer_surplus >= 0.0);
        } else {
            assert_eq!((out.welfare, out.buyer_surplus, out.payment), (0.0, 0.0, r.cost));
        }
    }
}

#[test]
fn strict_mode_accounts_for_welfare() {
    let records = mixed_data(10_000, 3);
    let prices = random_prices(&mut ChaCha8Rng::seed_from_u64(3), records.len());
    let strict = evaluate_prices(&records, &prices, EvalOptions { unsold_revenue: UnsoldRevenue::Zero }).unwrap();
    assert!((strict.social_welfare - (strict.revenue + strict.buyer_welfare)).abs() <= 1e-9);
    let lenient = evaluate_prices(&records, &prices, EvalOptions::default()).unwrap();
    assert!(lenient.revenue >= strict.revenue);
    assert_eq!(lenient.match_rate, strict.match_rate);
}

#[test]
fn reserves_below_the_second_price_are_inert() {
    let records = mixed_data(10_000, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let prices: Vec<f64> = records.iter().map(|r| r.effective_cost() * rng.random_range(0.0..1.0)).collect();
    let report = evaluate_prices(&records, &prices, EvalOptions::default()).unwrap();
    assert_eq!(report.relative_revenue, 1.0);
    assert_eq!(report.relative_match_rate, 1.0);
    assert_eq!(report.relative_social_welfare, 1.0);
    assert_eq!(report.relative_buyer_welfare, 1.0);
}

#[test]
fn accumulation_is_partition_independent() {
    let records = mixed_data(30_000, 5);
    let prices = random_prices(&mut ChaCha8Rng::seed_from_u64(5), records.len());
    let options = EvalOptions::default();
    let whole = aggregate(&records, &prices, options).unwrap().summary();
    for chunk in [1usize, 7, 1000, 12_345] {
        let mut merged = MetricsAccumulator::default();
        let parts: Vec<MetricsAccumulator> = records
            .chunks(chunk)
            .zip(prices.chunks(chunk))
            .map(|(r, p)| aggregate(r, p, options).unwrap())
            .collect();
        // Merge in reverse to also exercise commutativity.
        for part in parts.iter().rev() {
            merged.merge(part);
        }
        let s = merged.summary();
        assert_eq!(merged.count(), records.len());
        assert!((s.revenue - whole.revenue).abs() <= 1e-9);
        assert!((s.match_rate - whole.match_rate).abs() <= 1e-9);
        assert!((s.social_welfare - whole.social_welfare).abs() <= 1e-9);
        assert!((s.buyer_welfare - whole.buyer_welfare).abs() <= 1e-9);
        assert_eq!(s.per_context_match_rate, whole.per_context_match_rate);
    }
}

#[test]
fn constant_price_on_uniform_bids() {
    let ctx = ContextSpec::iid("u", 0, BidDistribution::Uniform { lo: 0.0, hi: 1.0 }, 5);
    let records: Vec<AuctionRecord> = generate(&GenConfig::new(200_000, vec![ctx], 6)).unwrap().collect();
    let model = PricingModel::constant(1, 0.8);
    let report = evaluate(&model, &records, EvalOptions::default()).unwrap();
    let sigma = (0.67232f64 * 0.32768 / records.len() as f64).sqrt();
    assert!((report.match_rate - 0.67232).abs() < 4.0 * sigma, "{}", report.match_rate);
    assert!(report.relative_social_welfare <= 1.0);

    let zero = evaluate(&PricingModel::zeros(1), &records, EvalOptions::default()).unwrap();
    assert_eq!((zero.relative_match_rate, zero.relative_revenue), (1.0, 1.0));

    let huge = evaluate(&PricingModel::constant(1, 1e9), &records, EvalOptions::default()).unwrap();
    assert_eq!((huge.match_rate, huge.revenue, huge.social_welfare), (0.0, 0.0, 0.0));
}

#[test]
fn mismatched_lengths_are_rejected() {
    let records = mixed_data(10, 7);
    assert!(evaluate_prices(&records, &[0.0; 3], EvalOptions::default()).is_err());
    assert!(evaluate_prices(&[], &[], EvalOptions::default()).is_err());
}

proptest! {
    #[test]
    fn relative_welfare_never_exceeds_one(seed in 0u64..1000, scale in 0.0f64..4.0) {
        let records = mixed_data(500, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let prices: Vec<f64> = (0..records.len()).map(|_| rng.random_range(0.0..scale.max(1e-9))).collect();
        let report = evaluate_prices(&records, &prices, EvalOptions::default()).unwrap();
        prop_assert!(report.relative_social_welfare <= 1.0 + 1e-12);
        prop_assert!(report.relative_match_rate <= 1.0 + 1e-12);
        prop_assert!((0.0..=1.0).contains(&report.match_rate));
        prop_assert!(report.social_welfare >= report.buyer_welfare && report.buyer_welfare >= 0.0);
    }
}
