use super::{ModelError, PricingModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let ok = self.learning_rate.is_finite()
            && self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon.is_finite()
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(ModelError::InvalidConfig(format!("invalid optimizer settings {self:?}")))
        }
    }
}

/// Adam moments over `dimension + 1` parameters (the last slot is the bias).
///
/// Updates are lazy: a parameter's moments are only brought up to date when
/// it receives a gradient, by applying the decay of the skipped steps first.
/// Parameters that receive no gradient in a step are left unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step_count: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    last_touched: Vec<u64>,
}

impl OptimizerState {
    pub fn new(dimension: usize, config: AdamConfig) -> Self {
        let slots = dimension + 1;
        Self {
            config,
            step_count: 0,
            first_moment: vec![0.0; slots],
            second_moment: vec![0.0; slots],
            last_touched: vec![0; slots],
        }
    }

    pub fn bias_slot(&self) -> usize {
        self.first_moment.len() - 1
    }

    /// Moments of `slot` as dense Adam would hold them after `step_count` steps.
    pub fn moments(&self, slot: usize) -> (f64, f64) {
        let idle = (self.step_count - self.last_touched[slot]) as i32;
        (
            self.first_moment[slot] * self.config.beta1.powi(idle),
            self.second_moment[slot] * self.config.beta2.powi(idle),
        )
    }

    /// One update over the `(slot, gradient)` pairs. Slots must be distinct.
    pub(crate) fn apply(&mut self, grads: impl IntoIterator<Item = (usize, f64)>, model: &mut PricingModel) {
        let bias_slot = self.bias_slot();
        self.step_count += 1;
        let t = self.step_count;
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        let m_correction = 1.0 - beta1.powi(t as i32);
        let v_correction = 1.0 - beta2.powi(t as i32);
        for (slot, g) in grads {
            let idle = (t - 1 - self.last_touched[slot]) as i32;
            let m = &mut self.first_moment[slot];
            let v = &mut self.second_moment[slot];
            if idle > 0 {
                *m *= beta1.powi(idle);
                *v *= beta2.powi(idle);
            }
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            self.last_touched[slot] = t;
            let m_hat = *m / m_correction;
            let v_hat = *v / v_correction;
            let delta = learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            if slot == bias_slot {
                model.bias -= delta;
            } else {
                model.weights[slot] -= delta;
            }
        }
    }
}
