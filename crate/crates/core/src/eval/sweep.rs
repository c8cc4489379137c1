use super::{evaluate, EvalError, EvalOptions, MetricsReport};
use crate::datagen::AuctionRecord;
use crate::losses::{LossKind, LossSpec};
use crate::model::{train, TrainConfig};
use crate::oracle::match_rate_lower_bound;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub loss: LossSpec,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Trains one model per loss on `train_set` and evaluates it on `test_set`.
/// Every run shares `base`'s optimizer settings, iteration count and seed.
pub fn sweep(
    train_set: &[AuctionRecord],
    test_set: &[AuctionRecord],
    grid: &[LossSpec],
    base: &TrainConfig,
    options: EvalOptions,
) -> Result<SweepResult, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let rows = grid
        .iter()
        .map(|&loss| {
            let config = TrainConfig { loss, ..base.clone() };
            let fitted = train(train_set, &config)?;
            Ok(SweepRow { loss, report: evaluate(&fitted.model, test_set, options)? })
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(SweepResult { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub lambda: f64,
    /// `1 - e^{-λ}`.
    pub target_match_rate: f64,
    pub realized_match_rate: f64,
    pub per_context: Vec<(u32, f64)>,
}

/// Target-versus-realized match rate for each clearing-loss row.
pub fn calibration_curve(result: &SweepResult) -> Result<Vec<CalibrationRow>, EvalError> {
    result
        .rows
        .iter()
        .map(|row| {
            if row.loss.kind() != LossKind::Clearing {
                return Err(EvalError::WrongLossKind(row.loss.kind()));
            }
            Ok(CalibrationRow {
                lambda: row.loss.lambda(),
                target_match_rate: match_rate_lower_bound(row.loss.lambda()),
                realized_match_rate: row.report.match_rate,
                per_context: row.report.per_context_match_rate.iter().map(|(&k, &v)| (k, v)).collect(),
            })
        })
        .collect()
}
