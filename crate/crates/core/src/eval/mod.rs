//! Second-price auction replay with learned reserves and the metric suite
//! built on it: revenue, match rate, welfare, and prediction skew.

mod report;
mod sum;
mod sweep;

use std::collections::BTreeMap;

use thiserror::Error;

pub use report::{
    render_report, render_table, write_calibration_csv, write_metrics_csv, write_report_csv, METRICS_HEADER,
    REPORT_HEADER,
};
pub use sum::CompensatedSum;
pub use sweep::{calibration_curve, sweep, CalibrationRow, SweepResult, SweepRow};

use crate::datagen::AuctionRecord;
use crate::losses::LossKind;
use crate::model::{ModelError, PricingModel};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("record has no bids")]
    EmptyBids,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("{count} prices for {records} records")]
    LengthMismatch { count: usize, records: usize },
    #[error("calibration needs clearing-loss rows, found {0}")]
    WrongLossKind(LossKind),
    #[error("empty sweep grid")]
    EmptyGrid,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionOutcome {
    pub sold: bool,
    pub payment: f64,
    pub welfare: f64,
    pub buyer_surplus: f64,
}

/// Runs a second-price auction with reserve `price` on top of the cost.
///
/// When unsold, `payment` is the cost: the seller keeps an item worth `c`.
pub fn simulate_auction(record: &AuctionRecord, price: f64) -> Result<AuctionOutcome, EvalError> {
    let top = *record.bids.first().ok_or(EvalError::EmptyBids)?;
    let reserve = price.max(record.cost);
    if top >= reserve {
        let payment = price.max(record.effective_cost());
        Ok(AuctionOutcome { sold: true, payment, welfare: top, buyer_surplus: top - payment })
    } else {
        Ok(AuctionOutcome { sold: false, payment: record.cost, welfare: 0.0, buyer_surplus: 0.0 })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum UnsoldRevenue {
    /// Unsold auctions count the seller's cost, matching the revenue loss.
    #[default]
    SellerCost,
    /// Strict exchange revenue: unsold auctions earn nothing.
    Zero,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvalOptions {
    pub unsold_revenue: UnsoldRevenue,
}

/// Commutative, associative aggregate of auction outcomes.
#[derive(Debug, Clone, Default)]
pub struct MetricsAccumulator {
    revenue: CompensatedSum,
    sold: CompensatedSum,
    social_welfare: CompensatedSum,
    buyer_welfare: CompensatedSum,
    count: usize,
    per_context: BTreeMap<u32, (usize, usize)>,
}

impl MetricsAccumulator {
    pub fn add(&mut self, record: &AuctionRecord, outcome: &AuctionOutcome, options: EvalOptions) {
        let revenue = match (outcome.sold, options.unsold_revenue) {
            (false, UnsoldRevenue::Zero) => 0.0,
            _ => outcome.payment,
        };
        self.revenue.add(revenue);
        self.sold.add(if outcome.sold { 1.0 } else { 0.0 });
        self.social_welfare.add(outcome.welfare);
        self.buyer_welfare.add(outcome.buyer_surplus);
        self.count += 1;
        if let Some(ctx) = record.features.leading_index() {
            let entry = self.per_context.entry(ctx).or_default();
            entry.0 += outcome.sold as usize;
            entry.1 += 1;
        }
    }

    pub fn merge(&mut self, other: &MetricsAccumulator) {
        self.revenue.merge(&other.revenue);
        self.sold.merge(&other.sold);
        self.social_welfare.merge(&other.social_welfare);
        self.buyer_welfare.merge(&other.buyer_welfare);
        self.count += other.count;
        for (&ctx, &(sold, total)) in &other.per_context {
            let entry = self.per_context.entry(ctx).or_default();
            entry.0 += sold;
            entry.1 += total;
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn summary(&self) -> Summary {
        let n = self.count.max(1) as f64;
        Summary {
            revenue: self.revenue.value() / n,
            match_rate: self.sold.value() / n,
            social_welfare: self.social_welfare.value() / n,
            buyer_welfare: self.buyer_welfare.value() / n,
            per_context_match_rate: self
                .per_context
                .iter()
                .map(|(&ctx, &(sold, total))| (ctx, sold as f64 / total as f64))
                .collect(),
        }
    }
}

/// Absolute per-record means.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub revenue: f64,
    pub match_rate: f64,
    pub social_welfare: f64,
    pub buyer_welfare: f64,
    pub per_context_match_rate: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub revenue: f64,
    pub match_rate: f64,
    pub social_welfare: f64,
    pub buyer_welfare: f64,
    pub relative_revenue: f64,
    pub relative_match_rate: f64,
    pub relative_social_welfare: f64,
    pub relative_buyer_welfare: f64,
    /// Share of records with `p < b1` among those whose `b1` is below the median.
    pub underprediction_below_median: f64,
    /// Same, among records whose `b1` is above the median.
    pub underprediction_above_median: f64,
    pub record_count: usize,
    /// Match rate keyed by each record's leading feature index.
    pub per_context_match_rate: BTreeMap<u32, f64>,
}

fn ratio(value: f64, baseline: f64) -> f64 {
    if baseline == 0.0 {
        if value == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        value / baseline
    }
}

pub fn aggregate(records: &[AuctionRecord], prices: &[f64], options: EvalOptions) -> Result<MetricsAccumulator, EvalError> {
    if prices.len() != records.len() {
        return Err(EvalError::LengthMismatch { count: prices.len(), records: records.len() });
    }
    let mut acc = MetricsAccumulator::default();
    for (record, &p) in records.iter().zip(prices) {
        acc.add(record, &simulate_auction(record, p)?, options);
    }
    Ok(acc)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len().is_multiple_of(2) {
        0.5 * (xs[mid - 1] + xs[mid])
    } else {
        xs[mid]
    }
}

/// Underprediction rates (`p < b1`) below and above the median top bid.
/// Records exactly at the median are in neither group; empty groups give 0.
pub fn underprediction_split(records: &[AuctionRecord], prices: &[f64]) -> (f64, f64) {
    if records.is_empty() {
        return (0.0, 0.0);
    }
    let med = median(records.iter().map(|r| r.top_bid()).collect());
    let (mut below, mut above) = ((0usize, 0usize), (0usize, 0usize));
    for (r, &p) in records.iter().zip(prices) {
        let top = r.top_bid();
        let group = if top < med {
            &mut below
        } else if top > med {
            &mut above
        } else {
            continue;
        };
        group.0 += (p < top) as usize;
        group.1 += 1;
    }
    let rate = |(hits, total): (usize, usize)| if total == 0 { 0.0 } else { hits as f64 / total as f64 };
    (rate(below), rate(above))
}

/// Metrics at the given per-record prices, relative to the cost-only
/// baseline (reserve 0) on the same records.
pub fn evaluate_prices(records: &[AuctionRecord], prices: &[f64], options: EvalOptions) -> Result<MetricsReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let run = aggregate(records, prices, options)?.summary();
    let baseline = aggregate(records, &vec![0.0; records.len()], options)?.summary();
    let (below, above) = underprediction_split(records, prices);
    Ok(MetricsReport {
        revenue: run.revenue,
        match_rate: run.match_rate,
        social_welfare: run.social_welfare,
        buyer_welfare: run.buyer_welfare,
        relative_revenue: ratio(run.revenue, baseline.revenue),
        relative_match_rate: ratio(run.match_rate, baseline.match_rate),
        relative_social_welfare: ratio(run.social_welfare, baseline.social_welfare),
        relative_buyer_welfare: ratio(run.buyer_welfare, baseline.buyer_welfare),
        underprediction_below_median: below,
        underprediction_above_median: above,
        record_count: records.len(),
        per_context_match_rate: run.per_context_match_rate,
    })
}

pub fn predict_all(model: &PricingModel, records: &[AuctionRecord]) -> Result<Vec<f64>, EvalError> {
    records.iter().map(|r| model.predict(&r.features).map_err(EvalError::from)).collect()
}

pub fn evaluate(model: &PricingModel, records: &[AuctionRecord], options: EvalOptions) -> Result<MetricsReport, EvalError> {
    evaluate_prices(records, &predict_all(model, records)?, options)
}
