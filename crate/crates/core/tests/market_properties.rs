use clearprice::losses::clearing_loss;
use clearprice::market::{check_duality, clearing_interval, min_clearing_loss, solve_allocation, MarketInstance};
use proptest::prelude::*;

fn order() -> impl Strategy<Value = (f64, f64)> {
    // Coarse price grid so ties and shared breakpoints show up often.
    ((0u32..=20).prop_map(|p| p as f64 * 0.5), (0u32..=6).prop_map(|q| q as f64 * 0.5))
}

fn market() -> impl Strategy<Value = MarketInstance> {
    (prop::collection::vec(order(), 0..8), prop::collection::vec(order(), 0..8))
        .prop_map(|(b, s)| MarketInstance::from_pairs(&b, &s).unwrap())
}

fn non_empty_market() -> impl Strategy<Value = MarketInstance> {
    market().prop_filter("needs at least one order", |m| !m.is_empty())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn strong_duality(inst in market()) {
        let (alloc, gains) = solve_allocation(&inst);
        prop_assert!(alloc.is_feasible(&inst, 1e-12));
        prop_assert!((alloc.gains_from_trade(&inst) - gains).abs() <= 1e-9);
        prop_assert!((gains - min_clearing_loss(&inst)).abs() <= 1e-9);
        prop_assert!(check_duality(&inst, 1e-9));
    }

    #[test]
    fn complementary_slackness(inst in non_empty_market()) {
        let (alloc, _) = solve_allocation(&inst);
        let iv = clearing_interval(&inst).unwrap();
        let p = if iv.is_bounded_above() { 0.5 * (iv.lo + iv.hi) } else { iv.lo };
        for (b, &x) in inst.buyers.iter().zip(&alloc.bought) {
            // Buyers strictly above the price are filled; strictly below get nothing.
            if b.bid > p {
                prop_assert!((x - b.quantity).abs() <= 1e-9, "buyer {b:?} at p={p} got {x}");
            }
            if b.bid < p {
                prop_assert!(x.abs() <= 1e-9);
            }
        }
        for (s, &y) in inst.sellers.iter().zip(&alloc.sold) {
            if s.ask < p {
                prop_assert!((y - s.quantity).abs() <= 1e-9, "seller {s:?} at p={p} sold {y}");
            }
            if s.ask > p {
                prop_assert!(y.abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn interval_minimizes_loss(inst in non_empty_market()) {
        let iv = clearing_interval(&inst).unwrap();
        let best = min_clearing_loss(&inst);
        prop_assert!((clearing_loss(iv.lo, &inst).value - best).abs() <= 1e-9);
        if iv.is_bounded_above() {
            prop_assert!((clearing_loss(iv.hi, &inst).value - best).abs() <= 1e-9);
            prop_assert!(clearing_loss(iv.hi + 0.25, &inst).value > best - 1e-9);
        }
        if iv.lo > 0.0 {
            prop_assert!(clearing_loss(iv.lo - 0.25, &inst).value > best - 1e-9);
        }
    }

    #[test]
    fn endpoints_are_breakpoints(inst in non_empty_market()) {
        let iv = clearing_interval(&inst).unwrap();
        let bps = inst.breakpoints();
        prop_assert!(iv.lo == 0.0 || bps.contains(&iv.lo));
        prop_assert!(!iv.is_bounded_above() || bps.contains(&iv.hi));
        prop_assert!(iv.lo <= iv.hi);
    }

    #[test]
    fn more_demand_never_lowers_the_interval(inst in non_empty_market(), (bid, q) in order()) {
        let before = clearing_interval(&inst).unwrap();
        let after = clearing_interval(&inst.clone().with_buyer(bid, q.max(0.5))).unwrap();
        prop_assert!(after.lo >= before.lo);
        prop_assert!(after.hi >= before.hi);
    }

    #[test]
    fn more_supply_never_raises_the_interval(inst in non_empty_market(), (ask, q) in order()) {
        let before = clearing_interval(&inst).unwrap();
        let after = clearing_interval(&inst.clone().with_seller(ask, q.max(0.5))).unwrap();
        prop_assert!(after.lo <= before.lo);
        prop_assert!(after.hi <= before.hi);
    }
}

#[test]
fn degenerate_orders() {
    let zero_qty = MarketInstance::from_pairs(&[(5.0, 0.0)], &[(1.0, 0.0)]).unwrap();
    let (alloc, gains) = solve_allocation(&zero_qty);
    assert_eq!(gains, 0.0);
    assert_eq!(alloc.volume(), 0.0);
    assert!(check_duality(&zero_qty, 0.0));

    let all_equal = MarketInstance::from_pairs(&[(3.0, 2.0)], &[(3.0, 2.0)]).unwrap();
    let iv = clearing_interval(&all_equal).unwrap();
    assert!(iv.is_unique() && iv.lo == 3.0);
    assert_eq!(solve_allocation(&all_equal).1, 0.0);
}
