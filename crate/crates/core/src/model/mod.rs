//! Sparse linear pricing policies `p(z) = w·z + bias` and their training.

mod checkpoint;
mod optim;
mod train;

use thiserror::Error;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use optim::{AdamConfig, OptimizerState};
pub use train::{initial_bias, minibatch_step, train, CurvePoint, TrainConfig, TrainOutput};

use crate::losses::LossError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: model has {model}, features have {features}")]
    DimensionMismatch { model: usize, features: usize },
    #[error("invalid feature vector: {0}")]
    InvalidFeatures(String),
    #[error("non-finite gradient at step {step}")]
    NonFiniteGradient { step: u64 },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("checkpoint line {line}: {message}")]
    Checkpoint { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Sparse feature vector with strictly increasing indices below `dimension`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
    dimension: usize,
}

impl FeatureVector {
    pub fn new(mut entries: Vec<(u32, f64)>, dimension: usize) -> Result<Self, ModelError> {
        if dimension == 0 {
            return Err(ModelError::InvalidFeatures("dimension must be positive".into()));
        }
        entries.sort_by_key(|&(i, _)| i);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(ModelError::InvalidFeatures(format!("duplicate index {}", pair[0].0)));
            }
        }
        for &(i, v) in &entries {
            if i as usize >= dimension {
                return Err(ModelError::InvalidFeatures(format!("index {i} out of range for dimension {dimension}")));
            }
            if !v.is_finite() {
                return Err(ModelError::InvalidFeatures(format!("value at index {i} is not finite")));
            }
        }
        Ok(Self { entries, dimension })
    }

    pub fn empty(dimension: usize) -> Self {
        Self { entries: Vec::new(), dimension }
    }

    pub fn one_hot(index: u32, dimension: usize) -> Result<Self, ModelError> {
        Self::new(vec![(index, 1.0)], dimension)
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// First active index; identifies the context for one-hot features.
    pub fn leading_index(&self) -> Option<u32> {
        self.entries.iter().find(|(_, v)| *v != 0.0).map(|&(i, _)| i)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i as usize]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricingModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl PricingModel {
    pub fn zeros(dimension: usize) -> Self {
        Self { weights: vec![0.0; dimension], bias: 0.0 }
    }

    pub fn constant(dimension: usize, price: f64) -> Self {
        Self { weights: vec![0.0; dimension], bias: price }
    }

    pub fn dimension(&self) -> usize {
        self.weights.len()
    }

    pub fn is_finite(&self) -> bool {
        self.bias.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    pub fn predict(&self, z: &FeatureVector) -> Result<f64, ModelError> {
        if z.dimension() != self.dimension() {
            return Err(ModelError::DimensionMismatch { model: self.dimension(), features: z.dimension() });
        }
        Ok(z.dot(&self.weights) + self.bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_examples() {
        let z = FeatureVector::new(vec![(1, 7.0)], 3).unwrap();
        assert_eq!(PricingModel::constant(3, 2.5).predict(&z).unwrap(), 2.5);

        let mut unit = PricingModel::zeros(4);
        unit.weights[2] = 1.0;
        assert_eq!(unit.predict(&FeatureVector::new(vec![(2, 3.0)], 4).unwrap()).unwrap(), 3.0);

        let m = PricingModel { weights: vec![1.0, -2.0], bias: 1.0 };
        assert_eq!(m.predict(&FeatureVector::new(vec![(0, 2.0), (1, 1.0)], 2).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let err = PricingModel::zeros(2).predict(&FeatureVector::empty(3)).unwrap_err();
        assert!(matches!(err, ModelError::DimensionMismatch { model: 2, features: 3 }));
    }

    #[test]
    fn feature_vector_validation() {
        assert!(FeatureVector::new(vec![(1, 1.0), (1, 2.0)], 4).is_err());
        assert!(FeatureVector::new(vec![(4, 1.0)], 4).is_err());
        assert!(FeatureVector::new(vec![(0, f64::NAN)], 4).is_err());
        assert!(FeatureVector::new(vec![], 0).is_err());
        let z = FeatureVector::new(vec![(3, 1.0), (0, 2.0)], 4).unwrap();
        assert_eq!(z.entries(), &[(0, 2.0), (3, 1.0)]);
        assert_eq!(z.leading_index(), Some(0));
    }
}
