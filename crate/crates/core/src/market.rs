//! Two-sided markets: greedy gains-from-trade allocation, clearing-price
//! intervals, and the duality check between the two.
//!
//! The clearing loss of an instance is convex and piecewise linear in the
//! price, with kinks only at bids and asks, so everything here works by
//! scanning sorted breakpoints instead of calling an LP solver.

use std::cmp::Ordering;

use thiserror::Error;

use crate::losses::clearing_loss;

#[derive(Debug, Error, PartialEq)]
pub enum MarketError {
    #[error("market has no buyers and no sellers")]
    EmptyMarket,
    #[error("invalid order: {0}")]
    InvalidOrder(String),
}

/// A buyer willing to pay up to `bid` per unit for up to `quantity` units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuyerOrder {
    pub bid: f64,
    pub quantity: f64,
}

/// A seller willing to supply up to `quantity` units at `ask` per unit or more.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SellerOrder {
    pub ask: f64,
    pub quantity: f64,
}

fn check_order(kind: &str, price: f64, quantity: f64) -> Result<(), MarketError> {
    if !(price.is_finite() && price >= 0.0) {
        return Err(MarketError::InvalidOrder(format!("{kind} price {price} must be finite and >= 0")));
    }
    if !(quantity.is_finite() && quantity >= 0.0) {
        return Err(MarketError::InvalidOrder(format!(
            "{kind} quantity {quantity} must be finite and >= 0"
        )));
    }
    Ok(())
}

impl BuyerOrder {
    pub fn new(bid: f64, quantity: f64) -> Result<Self, MarketError> {
        check_order("buyer", bid, quantity)?;
        Ok(Self { bid, quantity })
    }
}

impl SellerOrder {
    pub fn new(ask: f64, quantity: f64) -> Result<Self, MarketError> {
        check_order("seller", ask, quantity)?;
        Ok(Self { ask, quantity })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarketInstance {
    pub buyers: Vec<BuyerOrder>,
    pub sellers: Vec<SellerOrder>,
}

impl MarketInstance {
    pub fn new(buyers: Vec<BuyerOrder>, sellers: Vec<SellerOrder>) -> Self {
        Self { buyers, sellers }
    }

    /// Builds an instance from `(bid, quantity)` and `(ask, quantity)` pairs.
    pub fn from_pairs(buyers: &[(f64, f64)], sellers: &[(f64, f64)]) -> Result<Self, MarketError> {
        let buyers = buyers
            .iter()
            .map(|&(b, q)| BuyerOrder::new(b, q))
            .collect::<Result<_, _>>()?;
        let sellers = sellers
            .iter()
            .map(|&(c, q)| SellerOrder::new(c, q))
            .collect::<Result<_, _>>()?;
        Ok(Self { buyers, sellers })
    }

    pub fn with_buyer(mut self, bid: f64, quantity: f64) -> Self {
        self.buyers.push(BuyerOrder { bid, quantity });
        self
    }

    pub fn with_seller(mut self, ask: f64, quantity: f64) -> Self {
        self.sellers.push(SellerOrder { ask, quantity });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.buyers.is_empty() && self.sellers.is_empty()
    }

    pub fn total_demand(&self) -> f64 {
        self.buyers.iter().map(|b| b.quantity).sum()
    }

    pub fn total_supply(&self) -> f64 {
        self.sellers.iter().map(|s| s.quantity).sum()
    }

    /// All bids and asks, sorted ascending with duplicates removed.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut points: Vec<f64> = self
            .buyers
            .iter()
            .map(|b| b.bid)
            .chain(self.sellers.iter().map(|s| s.ask))
            .collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }

    /// Derivative of the clearing loss just to the right of `p`.
    fn right_slope(&self, p: f64) -> f64 {
        let demand: f64 = self.buyers.iter().filter(|b| b.bid > p).map(|b| b.quantity).sum();
        let supply: f64 = self.sellers.iter().filter(|s| s.ask <= p).map(|s| s.quantity).sum();
        supply - demand
    }

    /// Derivative of the clearing loss just to the left of `p`.
    fn left_slope(&self, p: f64) -> f64 {
        let demand: f64 = self.buyers.iter().filter(|b| b.bid >= p).map(|b| b.quantity).sum();
        let supply: f64 = self.sellers.iter().filter(|s| s.ask < p).map(|s| s.quantity).sum();
        supply - demand
    }
}

/// Per-order traded quantities, indexed like the instance's orders.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    pub bought: Vec<f64>,
    pub sold: Vec<f64>,
}

impl Allocation {
    pub fn volume(&self) -> f64 {
        self.bought.iter().sum()
    }

    /// Checks box constraints and market balance against `instance`.
    pub fn is_feasible(&self, instance: &MarketInstance, tolerance: f64) -> bool {
        if self.bought.len() != instance.buyers.len() || self.sold.len() != instance.sellers.len() {
            return false;
        }
        let boxed = |x: f64, cap: f64| x >= -tolerance && x <= cap + tolerance;
        let buyers_ok = self.bought.iter().zip(&instance.buyers).all(|(&x, b)| boxed(x, b.quantity));
        let sellers_ok = self.sold.iter().zip(&instance.sellers).all(|(&y, s)| boxed(y, s.quantity));
        let sold: f64 = self.sold.iter().sum();
        buyers_ok && sellers_ok && (self.volume() - sold).abs() <= tolerance
    }

    pub fn gains_from_trade(&self, instance: &MarketInstance) -> f64 {
        let value: f64 = self.bought.iter().zip(&instance.buyers).map(|(x, b)| x * b.bid).sum();
        let cost: f64 = self.sold.iter().zip(&instance.sellers).map(|(y, s)| y * s.ask).sum();
        value - cost
    }
}

/// Set of prices minimizing the clearing loss. `hi` is `f64::INFINITY` when
/// the set is unbounded above; `lo` is clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClearingInterval {
    pub lo: f64,
    pub hi: f64,
}

impl ClearingInterval {
    pub fn contains(&self, p: f64) -> bool {
        self.lo <= p && p <= self.hi
    }

    pub fn is_bounded_above(&self) -> bool {
        self.hi.is_finite()
    }

    pub fn is_unique(&self) -> bool {
        self.lo == self.hi
    }
}

/// Greedy optimal allocation: highest bids are matched with lowest asks while
/// the bid is at least the ask.
pub fn solve_allocation(instance: &MarketInstance) -> (Allocation, f64) {
    let mut buyer_order: Vec<usize> = (0..instance.buyers.len()).collect();
    buyer_order.sort_by(|&a, &b| instance.buyers[b].bid.total_cmp(&instance.buyers[a].bid));
    let mut seller_order: Vec<usize> = (0..instance.sellers.len()).collect();
    seller_order.sort_by(|&a, &b| instance.sellers[a].ask.total_cmp(&instance.sellers[b].ask));

    let mut allocation = Allocation {
        bought: vec![0.0; instance.buyers.len()],
        sold: vec![0.0; instance.sellers.len()],
    };
    let mut gains = 0.0;

    let (mut bi, mut si) = (0, 0);
    let mut demand_left = buyer_order.first().map_or(0.0, |&i| instance.buyers[i].quantity);
    let mut supply_left = seller_order.first().map_or(0.0, |&j| instance.sellers[j].quantity);
    while bi < buyer_order.len() && si < seller_order.len() {
        let buyer = instance.buyers[buyer_order[bi]];
        let seller = instance.sellers[seller_order[si]];
        if buyer.bid < seller.ask {
            break;
        }
        let traded = demand_left.min(supply_left);
        allocation.bought[buyer_order[bi]] += traded;
        allocation.sold[seller_order[si]] += traded;
        gains += traded * (buyer.bid - seller.ask);
        demand_left -= traded;
        supply_left -= traded;
        // Advance whichever side ran out; exact zero is reached because
        // `traded` is one of the two remainders.
        if demand_left <= 0.0 {
            bi += 1;
            if let Some(&i) = buyer_order.get(bi) {
                demand_left = instance.buyers[i].quantity;
            }
        }
        if supply_left <= 0.0 {
            si += 1;
            if let Some(&j) = seller_order.get(si) {
                supply_left = instance.sellers[j].quantity;
            }
        }
    }
    (allocation, gains)
}

/// The full interval of clearing prices of `instance`.
///
/// The clearing loss is convex, so its minimizers form the interval between
/// the first breakpoint whose right slope is nonnegative and the last one
/// whose left slope is nonpositive.
pub fn clearing_interval(instance: &MarketInstance) -> Result<ClearingInterval, MarketError> {
    if instance.is_empty() {
        return Err(MarketError::EmptyMarket);
    }
    let points = instance.breakpoints();

    let lo = if instance.total_demand() <= 0.0 {
        0.0
    } else {
        points
            .iter()
            .copied()
            .find(|&p| instance.right_slope(p) >= 0.0)
            .unwrap_or(0.0)
    };
    let hi = if instance.total_supply() <= 0.0 {
        f64::INFINITY
    } else {
        points
            .iter()
            .rev()
            .copied()
            .find(|&p| instance.left_slope(p) <= 0.0)
            .unwrap_or(f64::INFINITY)
    };
    Ok(ClearingInterval { lo: lo.max(0.0), hi })
}

/// Minimum of the clearing loss over all breakpoints (zero for an empty market).
pub fn min_clearing_loss(instance: &MarketInstance) -> f64 {
    instance
        .breakpoints()
        .into_iter()
        .map(|p| clearing_loss(p, instance).value)
        .min_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal))
        .unwrap_or(0.0)
}

/// True iff the dual minimum equals the greedy gains from trade.
pub fn check_duality(instance: &MarketInstance, tolerance: f64) -> bool {
    let (_, gains) = solve_allocation(instance);
    (min_clearing_loss(instance) - gains).abs() <= tolerance
}
