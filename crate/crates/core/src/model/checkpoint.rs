//! Text checkpoint: a header line `<dimension> <bias>`, then one
//! `<index> <weight>` line per nonzero weight in increasing index order.

use std::io::{BufRead, Write};

use super::{ModelError, PricingModel};

pub fn write_checkpoint<W: Write>(model: &PricingModel, mut out: W) -> Result<(), ModelError> {
    writeln!(out, "{} {}", model.dimension(), model.bias)?;
    for (i, w) in model.weights.iter().enumerate().filter(|(_, w)| **w != 0.0) {
        writeln!(out, "{i} {w}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(input: R) -> Result<PricingModel, ModelError> {
    let bad = |line: usize, message: String| ModelError::Checkpoint { line, message };
    let mut lines = input.lines().enumerate().map(|(k, l)| (k + 1, l));

    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header".into()))?;
    let header = header?;
    let mut fields = header.split_whitespace();
    let (Some(dim), Some(bias), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(bad(1, format!("expected '<dimension> <bias>', got '{header}'")));
    };
    let dimension: usize = dim.parse().map_err(|_| bad(1, format!("bad dimension '{dim}'")))?;
    let bias: f64 = bias.parse().map_err(|_| bad(1, format!("bad bias '{bias}'")))?;

    let mut model = PricingModel { weights: vec![0.0; dimension], bias };
    for (n, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(i), Some(w), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad(n, format!("expected '<index> <weight>', got '{line}'")));
        };
        let index: usize = i.parse().map_err(|_| bad(n, format!("bad index '{i}'")))?;
        let weight: f64 = w.parse().map_err(|_| bad(n, format!("bad weight '{w}'")))?;
        if index >= dimension {
            return Err(bad(n, format!("index {index} out of range for dimension {dimension}")));
        }
        model.weights[index] = weight;
    }
    if !model.is_finite() {
        return Err(bad(0, "non-finite parameter".into()));
    }
    Ok(model)
}
