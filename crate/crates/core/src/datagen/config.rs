//! TOML generator manifests.
//!
//! ```toml
//! seed = 7
//! records = 10000
//! filter = true
//!
//! [[context]]
//! id = "desktop"
//! feature = 0
//! bidders = 5
//! bids = "uniform:0,1"
//! cost = "const:0"
//!
//! [[context]]
//! id = "mixed"
//! feature = 1
//! slots = ["uniform:0,1", "uniform:0,2"]
//! ```

use std::path::Path;

use serde::Deserialize;

use super::{BidDistribution, BidderSpec, ContextSpec, DataError, GenConfig};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    records: usize,
    #[serde(default = "default_filter")]
    filter: bool,
    dimension: Option<usize>,
    #[serde(rename = "context", default)]
    contexts: Vec<RawContext>,
}

fn default_filter() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContext {
    id: String,
    feature: u32,
    weight: Option<f64>,
    bidders: Option<usize>,
    bids: Option<String>,
    slots: Option<Vec<String>>,
    cost: Option<String>,
}

fn parse_dist(context: &str, text: &str) -> Result<BidDistribution, DataError> {
    text.parse()
        .map_err(|message| DataError::InvalidDistributionParams { context: context.to_string(), message })
}

pub fn parse_gen_config(text: &str) -> Result<GenConfig, DataError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| DataError::InvalidConfig(e.to_string()))?;
    let contexts = raw
        .contexts
        .into_iter()
        .map(|c| {
            let bidders = match (c.bids, c.slots) {
                (Some(bids), None) => BidderSpec::Iid { dist: parse_dist(&c.id, &bids)?, n: c.bidders.unwrap_or(1) },
                (None, Some(slots)) => {
                    BidderSpec::PerSlot(slots.iter().map(|s| parse_dist(&c.id, s)).collect::<Result<_, _>>()?)
                }
                _ => {
                    return Err(DataError::InvalidConfig(format!(
                        "context '{}' needs exactly one of 'bids' or 'slots'",
                        c.id
                    )))
                }
            };
            let cost = match c.cost {
                Some(text) => parse_dist(&c.id, &text)?,
                None => BidDistribution::PointMass { value: 0.0 },
            };
            Ok(ContextSpec { id: c.id, feature: c.feature, weight: c.weight.unwrap_or(1.0), bidders, cost })
        })
        .collect::<Result<Vec<_>, DataError>>()?;
    let config = GenConfig {
        num_records: raw.records,
        contexts,
        seed: raw.seed,
        filter_top_bid_above_cost: raw.filter,
        dimension: raw.dimension,
    };
    config.validate()?;
    Ok(config)
}

pub fn read_gen_config(path: impl AsRef<Path>) -> Result<GenConfig, DataError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| DataError::File { path: path.display().to_string(), source })?;
    parse_gen_config(&text)
}
