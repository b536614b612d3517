//! Mean-field updates under an exponential annealing schedule.

mod probe;
mod run;

pub use probe::{expected_loss_monotonicity_probe, Increase, MonotonicityReport};
pub use run::{
    best_of, initialize_q, run, softmax_update, update_fact, Checkpoint, MinerError, MinerOutcome,
    MinerRun, TraceRecord,
};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnealSchedule {
    pub beta0: f64,
    pub alpha: f64,
    pub iterations: usize,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            beta0: 0.05,
            alpha: 1.1,
            iterations: 200,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<(), MinerError> {
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(MinerError::Schedule(format!("beta0 must be positive, got {}", self.beta0)));
        }
        if !(self.alpha > 1.0 && self.alpha.is_finite()) {
            return Err(MinerError::Schedule(format!("alpha must exceed 1, got {}", self.alpha)));
        }
        Ok(())
    }

    /// Inverse temperature used during sweep `i` (0-based).
    pub fn beta_at(&self, i: usize) -> f64 {
        let mut b = self.beta0;
        for _ in 0..i {
            b *= self.alpha;
        }
        b
    }
}
