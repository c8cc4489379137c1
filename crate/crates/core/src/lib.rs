//! Learning contextual market-clearing prices and using them as reserve
//! prices in second-price auctions.
//!
//! - [`market`]: two-sided markets, greedy gains from trade, clearing intervals.
//! - [`losses`]: clearing, squared, surrogate and revenue losses with subgradients.
//! - [`model`]: sparse linear pricing policies trained with minibatch Adam.
//! - [`datagen`]: synthetic auction datasets and their on-disk format.
//! - [`oracle`]: reference prices and match-rate/welfare bounds for known distributions.
//! - [`eval`]: auction replay, metric reports, sweeps and calibration curves.

pub mod cli;
pub mod datagen;
pub mod eval;
pub mod losses;
pub mod market;
pub mod model;
pub mod oracle;
