//! One JSON object per line:
//! `{"dim":3,"features":{"0":1.0},"bids":[0.9,0.4],"cost":0.0}`.
//! `dim` is optional on input; when absent the dataset's largest feature
//! index + 1 is used.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AuctionRecord, DataError};
use crate::model::FeatureVector;

#[derive(Serialize, Deserialize)]
struct RecordLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    features: BTreeMap<u32, f64>,
    bids: Vec<f64>,
    cost: f64,
}

pub fn write_dataset<'a, W: Write>(
    records: impl IntoIterator<Item = &'a AuctionRecord>,
    out: W,
) -> Result<usize, DataError> {
    let mut out = BufWriter::new(out);
    let mut count = 0;
    for record in records {
        let line = RecordLine {
            dim: Some(record.features.dimension()),
            features: record.features.entries().iter().copied().collect(),
            bids: record.bids.clone(),
            cost: record.cost,
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        count += 1;
    }
    out.flush()?;
    Ok(count)
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<AuctionRecord>, DataError> {
    let mut parsed: Vec<(usize, RecordLine)> = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| DataError::Parse { line: line_no, message: e.to_string() })?;
        let record: RecordLine = serde_json::from_value(value)
            .map_err(|e| DataError::Schema { line: line_no, message: e.to_string() })?;
        parsed.push((line_no, record));
    }

    let inferred = parsed
        .iter()
        .flat_map(|(_, r)| r.features.keys().next_back().map(|&i| i as usize + 1).into_iter().chain(r.dim))
        .max()
        .unwrap_or(1);

    parsed
        .into_iter()
        .map(|(line, r)| {
            let schema = |message: String| DataError::Schema { line, message };
            let dim = r.dim.unwrap_or(inferred);
            let features =
                FeatureVector::new(r.features.into_iter().collect(), dim).map_err(|e| schema(e.to_string()))?;
            AuctionRecord::new(features, r.bids, r.cost).map_err(|e| schema(e.to_string()))
        })
        .collect()
}

pub fn write_dataset_file<'a>(
    records: impl IntoIterator<Item = &'a AuctionRecord>,
    path: impl AsRef<Path>,
) -> Result<usize, DataError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| DataError::File { path: path.display().to_string(), source })?;
    write_dataset(records, file)
}

pub fn read_dataset_file(path: impl AsRef<Path>) -> Result<Vec<AuctionRecord>, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::File { path: path.display().to_string(), source })?;
    read_dataset(BufReader::new(file))
}

/// Common feature dimension of `records`, or `None` if they disagree or are empty.
pub fn dataset_dimension(records: &[AuctionRecord]) -> Option<usize> {
    let dim = records.first()?.features.dimension();
    records.iter().all(|r| r.features.dimension() == dim).then_some(dim)
}
