//! Synthetic contextual auction data with known bid and cost distributions,
//! plus the line-delimited dataset format.

mod config;
mod dist;
mod io;
mod record;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use config::{parse_gen_config, read_gen_config};
pub use dist::BidDistribution;
pub use io::{dataset_dimension, read_dataset, read_dataset_file, write_dataset, write_dataset_file};
pub use record::{AuctionRecord, MAX_BIDS};

use crate::model::FeatureVector;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("context '{context}': invalid distribution parameters: {message}")]
    InvalidDistributionParams { context: String, message: String },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: schema error: {message}")]
    Schema { line: usize, message: String },
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the bids of one auction are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum BidderSpec {
    /// `n` i.i.d. bids from one distribution.
    Iid { dist: BidDistribution, n: usize },
    /// One bid per slot, each from its own distribution.
    PerSlot(Vec<BidDistribution>),
}

impl BidderSpec {
    pub fn bidders(&self) -> usize {
        match self {
            BidderSpec::Iid { n, .. } => *n,
            BidderSpec::PerSlot(slots) => slots.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextSpec {
    pub id: String,
    /// One-hot feature index carried by this context's records.
    pub feature: u32,
    /// Relative sampling frequency.
    pub weight: f64,
    pub bidders: BidderSpec,
    pub cost: BidDistribution,
}

impl ContextSpec {
    pub fn iid(id: impl Into<String>, feature: u32, dist: BidDistribution, n: usize) -> Self {
        Self {
            id: id.into(),
            feature,
            weight: 1.0,
            bidders: BidderSpec::Iid { dist, n },
            cost: BidDistribution::PointMass { value: 0.0 },
        }
    }

    pub fn with_cost(mut self, cost: BidDistribution) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    fn validate(&self) -> Result<(), DataError> {
        let fail = |message: String| DataError::InvalidDistributionParams { context: self.id.clone(), message };
        match &self.bidders {
            BidderSpec::Iid { dist, n } => {
                if *n == 0 {
                    return Err(fail("bidders per auction must be >= 1".into()));
                }
                dist.validate().map_err(fail)?;
            }
            BidderSpec::PerSlot(slots) => {
                if slots.is_empty() {
                    return Err(fail("at least one bidder slot is required".into()));
                }
                for d in slots {
                    d.validate().map_err(fail)?;
                }
            }
        }
        self.cost.validate().map_err(|m| fail(format!("cost: {m}")))?;
        if !(self.weight.is_finite() && self.weight > 0.0) {
            return Err(fail(format!("weight must be > 0, got {}", self.weight)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    /// Number of auctions drawn; filtered records are not replaced.
    pub num_records: usize,
    pub contexts: Vec<ContextSpec>,
    pub seed: u64,
    pub filter_top_bid_above_cost: bool,
    /// Feature dimension; defaults to the largest context feature index + 1.
    pub dimension: Option<usize>,
}

impl GenConfig {
    pub fn new(num_records: usize, contexts: Vec<ContextSpec>, seed: u64) -> Self {
        Self { num_records, contexts, seed, filter_top_bid_above_cost: true, dimension: None }
    }

    pub fn with_filter(mut self, filter: bool) -> Self {
        self.filter_top_bid_above_cost = filter;
        self
    }

    pub fn feature_dimension(&self) -> usize {
        let needed = self.contexts.iter().map(|c| c.feature as usize + 1).max().unwrap_or(1);
        self.dimension.unwrap_or(needed)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.contexts.is_empty() {
            return Err(DataError::InvalidConfig("at least one context is required".into()));
        }
        let dim = self.feature_dimension();
        for (k, ctx) in self.contexts.iter().enumerate() {
            ctx.validate()?;
            if ctx.feature as usize >= dim {
                return Err(DataError::InvalidConfig(format!(
                    "context '{}' feature {} out of range for dimension {dim}",
                    ctx.id, ctx.feature
                )));
            }
            if let Some(other) = self.contexts[..k].iter().find(|o| o.feature == ctx.feature || o.id == ctx.id) {
                return Err(DataError::InvalidConfig(format!(
                    "contexts '{}' and '{}' share an id or feature index",
                    other.id, ctx.id
                )));
            }
        }
        Ok(())
    }
}

/// Seeded record stream. Records whose top bid is below the cost are skipped
/// when filtering is on; [`dropped`](Self::dropped) counts them.
pub struct Generator {
    config: GenConfig,
    features: Vec<FeatureVector>,
    cumulative_weights: Vec<f64>,
    rng: ChaCha8Rng,
    drawn: usize,
    dropped: usize,
}

impl Generator {
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn dimension(&self) -> usize {
        self.config.feature_dimension()
    }

    fn pick_context(&mut self) -> usize {
        if self.cumulative_weights.len() == 1 {
            return 0;
        }
        let total = *self.cumulative_weights.last().expect("nonempty");
        let u = self.rng.random::<f64>() * total;
        self.cumulative_weights.partition_point(|&w| w <= u).min(self.cumulative_weights.len() - 1)
    }

    fn draw(&mut self) -> AuctionRecord {
        let k = self.pick_context();
        let ctx = &self.config.contexts[k];
        let mut bids: Vec<f64> = match &ctx.bidders {
            BidderSpec::Iid { dist, n } => (0..*n).map(|_| dist.sample(&mut self.rng)).collect(),
            BidderSpec::PerSlot(slots) => slots.iter().map(|d| d.sample(&mut self.rng)).collect(),
        };
        let cost = ctx.cost.sample(&mut self.rng);
        bids.sort_by(|a, b| b.total_cmp(a));
        bids.truncate(MAX_BIDS);
        AuctionRecord { features: self.features[k].clone(), bids, cost }
    }
}

impl Iterator for Generator {
    type Item = AuctionRecord;

    fn next(&mut self) -> Option<AuctionRecord> {
        while self.drawn < self.config.num_records {
            self.drawn += 1;
            let record = self.draw();
            if self.config.filter_top_bid_above_cost && record.top_bid() < record.cost {
                self.dropped += 1;
                continue;
            }
            return Some(record);
        }
        None
    }
}

pub fn generate(config: &GenConfig) -> Result<Generator, DataError> {
    config.validate()?;
    let dim = config.feature_dimension();
    let features = config
        .contexts
        .iter()
        .map(|c| FeatureVector::one_hot(c.feature, dim).expect("validated feature index"))
        .collect();
    let cumulative_weights = config
        .contexts
        .iter()
        .scan(0.0, |acc, c| {
            *acc += c.weight;
            Some(*acc)
        })
        .collect();
    Ok(Generator {
        config: config.clone(),
        features,
        cumulative_weights,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        drawn: 0,
        dropped: 0,
    })
}
