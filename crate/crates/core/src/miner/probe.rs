use super::TraceRecord;
use serde::Serialize;

const TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Increase {
    pub iteration: usize,
    pub amount: f64,
    /// In the second half of the run, where increases are unexpected.
    pub late: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub losses: Vec<f64>,
    pub increases: Vec<Increase>,
    /// Max minus min expected loss over the last ten sweeps.
    pub final_window_variation: Option<f64>,
}

impl MonotonicityReport {
    pub fn late_increases(&self) -> impl Iterator<Item = &Increase> {
        self.increases.iter().filter(|i| i.late)
    }
}

pub fn expected_loss_monotonicity_probe(trace: &[TraceRecord]) -> MonotonicityReport {
    let losses: Vec<f64> = trace.iter().map(|r| r.expected_loss).collect();
    let half = trace.len() / 2;
    let increases = losses
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] - w[0] > TOLERANCE)
        .map(|(i, w)| Increase {
            iteration: trace[i + 1].iteration,
            amount: w[1] - w[0],
            late: i + 1 >= half,
        })
        .collect();
    let final_window_variation = if losses.is_empty() {
        None
    } else {
        let tail = &losses[losses.len().saturating_sub(10)..];
        let hi = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().copied().fold(f64::INFINITY, f64::min);
        Some(hi - lo)
    };
    MonotonicityReport {
        losses,
        increases,
        final_window_variation,
    }
}
