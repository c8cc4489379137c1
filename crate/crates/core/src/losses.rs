//! Loss functions of the predicted price, each paired with a subgradient.
//!
//! Kinks use strict-inequality indicators (`b > p`, `p > c`), which picks an
//! element of the subdifferential and makes the slope contribution of a bid
//! vanish exactly at that bid.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::datagen::AuctionRecord;
use crate::market::MarketInstance;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("lambda must be finite and >= 0, got {0}")]
    InvalidLambda(f64),
    #[error("gamma must be finite and > 0, got {0}")]
    InvalidGamma(f64),
    #[error("surrogate revenue loss requires gamma")]
    MissingGamma,
    #[error("gamma is only meaningful for the surrogate revenue loss")]
    UnexpectedGamma,
    #[error("revenue loss is evaluation-only and has no training gradient")]
    NotTrainable,
    #[error("unknown loss kind '{0}'")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    Clearing,
    SquaredTopBid,
    SquaredSecondBid,
    SurrogateRevenue,
    Revenue,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Clearing => "clearing",
            LossKind::SquaredTopBid => "sq-b1",
            LossKind::SquaredSecondBid => "sq-b2",
            LossKind::SurrogateRevenue => "surrogate",
            LossKind::Revenue => "revenue",
        }
    }

    /// Convex in the price (before any regularizer).
    pub fn is_convex(self) -> bool {
        matches!(self, LossKind::Clearing | LossKind::SquaredTopBid | LossKind::SquaredSecondBid)
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = LossError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clearing" => Ok(LossKind::Clearing),
            "sq-b1" => Ok(LossKind::SquaredTopBid),
            "sq-b2" => Ok(LossKind::SquaredSecondBid),
            "surrogate" => Ok(LossKind::SurrogateRevenue),
            "revenue" => Ok(LossKind::Revenue),
            other => Err(LossError::UnknownKind(other.to_string())),
        }
    }
}

/// Which loss to use and its parameters. For `Clearing`, `lambda` is the
/// seller quantity; for every other kind it weights an added `[p - c]+` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    kind: LossKind,
    lambda: f64,
    gamma: Option<f64>,
}

impl LossSpec {
    pub fn new(kind: LossKind, lambda: f64, gamma: Option<f64>) -> Result<Self, LossError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(LossError::InvalidLambda(lambda));
        }
        match (kind, gamma) {
            (LossKind::SurrogateRevenue, None) => return Err(LossError::MissingGamma),
            (LossKind::SurrogateRevenue, Some(g)) if !(g.is_finite() && g > 0.0) => {
                return Err(LossError::InvalidGamma(g))
            }
            (LossKind::SurrogateRevenue, Some(_)) => {}
            (_, Some(_)) => return Err(LossError::UnexpectedGamma),
            (_, None) => {}
        }
        Ok(Self { kind, lambda, gamma })
    }

    pub fn clearing(lambda: f64) -> Result<Self, LossError> {
        Self::new(LossKind::Clearing, lambda, None)
    }

    pub fn surrogate(gamma: f64, lambda: f64) -> Result<Self, LossError> {
        Self::new(LossKind::SurrogateRevenue, lambda, Some(gamma))
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    pub fn is_trainable(&self) -> bool {
        self.kind != LossKind::Revenue
    }

    /// Training loss at `price` on one record, regularizer included.
    pub fn evaluate(&self, price: f64, record: &AuctionRecord) -> Result<LossValue, LossError> {
        let base = match self.kind {
            LossKind::Clearing => return Ok(auction_clearing_loss(price, record, self.lambda)),
            LossKind::SquaredTopBid => squared_loss(price, record.top_bid()),
            LossKind::SquaredSecondBid => squared_loss(price, second_bid_target(record)),
            LossKind::SurrogateRevenue => {
                surrogate_revenue_loss(price, record, self.gamma.expect("validated in new"))
            }
            LossKind::Revenue => return Err(LossError::NotTrainable),
        };
        Ok(regularized(base, price, record.cost, self.lambda))
    }

    /// Loss value at `price`; unlike [`evaluate`](Self::evaluate) this also
    /// accepts the revenue loss.
    pub fn value(&self, price: f64, record: &AuctionRecord) -> f64 {
        match self.kind {
            LossKind::Revenue => revenue_loss(price, record),
            _ => self.evaluate(price, record).expect("trainable kind").value,
        }
    }

    /// Prices where this loss is not differentiable on `record`.
    pub fn breakpoints(&self, record: &AuctionRecord) -> Vec<f64> {
        let mut points = vec![record.cost];
        match self.kind {
            LossKind::Clearing => points.extend_from_slice(&record.bids),
            LossKind::SquaredTopBid | LossKind::SquaredSecondBid => {}
            LossKind::SurrogateRevenue => {
                let top = record.top_bid();
                points.extend([record.effective_cost(), top, (1.0 + self.gamma.unwrap_or(0.0)) * top]);
            }
            LossKind::Revenue => points.extend([record.effective_cost(), record.top_bid()]),
        }
        points
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(lambda={}", self.kind, self.lambda)?;
        if let Some(g) = self.gamma {
            write!(f, ", gamma={g}")?;
        }
        f.write_str(")")
    }
}

/// Regression target for `SquaredSecondBid`: the second bid, or the cost when
/// the record has a single bid.
pub fn second_bid_target(record: &AuctionRecord) -> f64 {
    if record.bids.len() >= 2 {
        record.bids[1]
    } else {
        record.cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub subgradient: f64,
}

impl LossValue {
    pub const ZERO: LossValue = LossValue { value: 0.0, subgradient: 0.0 };
}

#[inline]
fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[inline]
fn step(x: bool) -> f64 {
    if x {
        1.0
    } else {
        0.0
    }
}

/// Dual objective of the gains-from-trade LP for a whole market.
pub fn clearing_loss(price: f64, instance: &MarketInstance) -> LossValue {
    let mut out = LossValue::ZERO;
    for b in &instance.buyers {
        out.value += b.quantity * relu(b.bid - price);
        out.subgradient -= b.quantity * step(b.bid > price);
    }
    for s in &instance.sellers {
        out.value += s.quantity * relu(price - s.ask);
        out.subgradient += s.quantity * step(price > s.ask);
    }
    out
}

/// Clearing loss of one auction: unit-demand buyers at each bid and a single
/// seller offering `lambda` units at the record's cost.
pub fn auction_clearing_loss(price: f64, record: &AuctionRecord, lambda: f64) -> LossValue {
    let mut out = LossValue::ZERO;
    for &b in &record.bids {
        out.value += relu(b - price);
        out.subgradient -= step(b > price);
    }
    out.value += lambda * relu(price - record.cost);
    out.subgradient += lambda * step(price > record.cost);
    out
}

pub fn squared_loss(price: f64, target: f64) -> LossValue {
    let diff = price - target;
    LossValue { value: diff * diff, subgradient: 2.0 * diff }
}

/// Continuous surrogate of the negated revenue: follows `-max{p, c̄}` up to the
/// top bid, then rises linearly with slope `1/gamma` until `(1 + gamma) b1`,
/// beyond which it equals `-c`.
pub fn surrogate_revenue_loss(price: f64, record: &AuctionRecord, gamma: f64) -> LossValue {
    let top = record.top_bid();
    let reserve_floor = record.effective_cost();
    if price <= top {
        if price > reserve_floor {
            LossValue { value: -price, subgradient: -1.0 }
        } else {
            LossValue { value: -reserve_floor, subgradient: 0.0 }
        }
    } else if price > (1.0 + gamma) * top {
        LossValue { value: -record.cost, subgradient: 0.0 }
    } else {
        LossValue { value: -((1.0 + gamma) * top - price) / gamma, subgradient: 1.0 / gamma }
    }
}

/// Negated second-price revenue with reserve `price`. Unsold items are valued
/// at the seller's cost.
pub fn revenue_loss(price: f64, record: &AuctionRecord) -> f64 {
    let top = record.top_bid();
    if price.max(record.cost) <= top {
        -price.max(record.effective_cost())
    } else {
        -record.cost
    }
}

/// Adds the match-rate regularizer `lambda [p - c]+`.
pub fn regularized(base: LossValue, price: f64, cost: f64, lambda: f64) -> LossValue {
    if lambda == 0.0 || price <= cost {
        return base;
    }
    LossValue {
        value: base.value + lambda * (price - cost),
        subgradient: base.subgradient + lambda,
    }
}
