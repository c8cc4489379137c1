use super::DataError;
use crate::market::{BuyerOrder, MarketInstance, SellerOrder};
use crate::model::FeatureVector;

/// Only the highest bids of an auction are kept.
pub const MAX_BIDS: usize = 5;

/// One contextual auction: features, bids sorted descending, and seller cost.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionRecord {
    pub features: FeatureVector,
    pub bids: Vec<f64>,
    pub cost: f64,
}

impl AuctionRecord {
    pub fn new(features: FeatureVector, bids: Vec<f64>, cost: f64) -> Result<Self, DataError> {
        let record = Self { features, bids, cost };
        record.validate()?;
        Ok(record)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let invalid = |msg: String| Err(DataError::InvalidRecord(msg));
        if self.bids.is_empty() {
            return invalid("record has no bids".into());
        }
        if self.bids.len() > MAX_BIDS {
            return invalid(format!("{} bids exceed the limit of {MAX_BIDS}", self.bids.len()));
        }
        if let Some(b) = self.bids.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return invalid(format!("bid {b} must be finite and >= 0"));
        }
        if self.bids.windows(2).any(|w| w[0] < w[1]) {
            return invalid(format!("bids {:?} are not sorted in descending order", self.bids));
        }
        if !(self.cost.is_finite() && self.cost >= 0.0) {
            return invalid(format!("cost {} must be finite and >= 0", self.cost));
        }
        Ok(())
    }

    /// Highest bid `b1` (zero when there are no bids).
    pub fn top_bid(&self) -> f64 {
        self.bids.first().copied().unwrap_or(0.0)
    }

    /// Second-highest bid `b2`, taken as zero for single-bid records.
    pub fn second_bid(&self) -> f64 {
        self.bids.get(1).copied().unwrap_or(0.0)
    }

    /// `c̄ = max{b2, c}`: the second-price payment without a reserve.
    pub fn effective_cost(&self) -> f64 {
        self.second_bid().max(self.cost)
    }

    /// Unit-demand buyers at each bid, one seller offering `lambda` units at cost.
    pub fn as_market(&self, lambda: f64) -> MarketInstance {
        MarketInstance::new(
            self.bids.iter().map(|&bid| BuyerOrder { bid, quantity: 1.0 }).collect(),
            vec![SellerOrder { ask: self.cost, quantity: lambda }],
        )
    }
}
