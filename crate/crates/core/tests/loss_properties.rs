use clearprice::datagen::AuctionRecord;
use clearprice::losses::{auction_clearing_loss, clearing_loss, revenue_loss, LossKind, LossSpec};
use clearprice::model::FeatureVector;
use proptest::prelude::*;

fn record() -> impl Strategy<Value = AuctionRecord> {
    (prop::collection::vec(0.0f64..10.0, 1..=5), prop_oneof![Just(0.0), 0.0f64..8.0]).prop_map(|(mut bids, cost)| {
        bids.sort_by(|a, b| b.total_cmp(a));
        AuctionRecord::new(FeatureVector::empty(1), bids, cost).unwrap()
    })
}

fn convex_loss() -> impl Strategy<Value = LossSpec> {
    let lambda = prop_oneof![Just(0.0), 0.0f64..3.0];
    (0..3usize, lambda).prop_map(|(k, lambda)| {
        let kind = [LossKind::Clearing, LossKind::SquaredTopBid, LossKind::SquaredSecondBid][k];
        LossSpec::new(kind, lambda, None).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn convex_losses_are_midpoint_convex(loss in convex_loss(), r in record(), a in 0.0f64..12.0, b in 0.0f64..12.0) {
        let mid = loss.value(0.5 * (a + b), &r);
        let chord = 0.5 * (loss.value(a, &r) + loss.value(b, &r));
        prop_assert!(mid <= chord + 1e-9 * (1.0 + chord.abs()));
    }

    #[test]
    fn subgradient_is_bracketed_by_one_sided_slopes(loss in convex_loss(), r in record(), p in 0.0f64..12.0) {
        let h = 1e-7;
        let g = loss.evaluate(p, &r).unwrap().subgradient;
        let right = (loss.value(p + h, &r) - loss.value(p, &r)) / h;
        let left = (loss.value(p, &r) - loss.value(p - h, &r)) / h;
        let slack = 1e-4 * (1.0 + g.abs());
        prop_assert!(left - slack <= g && g <= right + slack, "left {left} g {g} right {right}");
    }

    #[test]
    fn subgradients_are_monotone(loss in convex_loss(), r in record(), a in 0.0f64..12.0, b in 0.0f64..12.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(loss.evaluate(lo, &r).unwrap().subgradient <= loss.evaluate(hi, &r).unwrap().subgradient);
    }

    #[test]
    fn clearing_subgradient_is_bounded(r in record(), lambda in 0.0f64..3.0, p in -1.0f64..12.0) {
        let g = auction_clearing_loss(p, &r, lambda).subgradient;
        prop_assert!(g.abs() <= r.bids.len() as f64 + lambda);
        prop_assert!(g >= -(r.bids.len() as f64) && g <= lambda);
    }

    #[test]
    fn auction_loss_is_a_market_loss(r in record(), lambda in 0.0f64..3.0, p in 0.0f64..12.0) {
        let direct = auction_clearing_loss(p, &r, lambda);
        let via_market = clearing_loss(p, &r.as_market(lambda));
        prop_assert!((direct.value - via_market.value).abs() <= 1e-9);
        prop_assert!((direct.subgradient - via_market.subgradient).abs() <= 1e-12);
    }

    #[test]
    fn surrogate_bounds_revenue_below_top_bid(r in record(), gamma in 0.05f64..2.0, p in 0.0f64..12.0) {
        let surrogate = LossSpec::surrogate(gamma, 0.0).unwrap().value(p, &r);
        let revenue = revenue_loss(p, &r);
        if p <= r.top_bid() && p >= r.cost {
            prop_assert!((surrogate - revenue).abs() <= 1e-12);
        }
    }

    #[test]
    fn regularizer_adds_lambda_above_cost(loss in convex_loss(), r in record(), p in 0.0f64..12.0) {
        if loss.kind() == LossKind::Clearing {
            return Ok(());
        }
        let plain = LossSpec::new(loss.kind(), 0.0, None).unwrap().value(p, &r);
        let extra = loss.value(p, &r) - plain;
        prop_assert!((extra - loss.lambda() * (p - r.cost).max(0.0)).abs() <= 1e-9);
    }
}

#[test]
fn surrogate_is_not_convex() {
    assert!(!LossKind::SurrogateRevenue.is_convex());
    let r = AuctionRecord::new(FeatureVector::empty(1), vec![1.0, 0.2], 0.0).unwrap();
    let loss = LossSpec::surrogate(0.5, 0.0).unwrap();
    // Concave kinks at c̄ = 0.2 and at (1 + gamma) b1 = 1.5.
    let mid = loss.value(0.3, &r);
    assert!(mid > 0.5 * (loss.value(0.0, &r) + loss.value(0.6, &r)));
    let mid = loss.value(1.5, &r);
    assert!(mid > 0.5 * (loss.value(1.4, &r) + loss.value(1.6, &r)));
}
