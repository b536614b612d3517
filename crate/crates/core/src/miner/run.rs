use super::AnnealSchedule;
use crate::expectation::{CompiledLoss, ExpectationError, FactorDistribution, LossCache};
use crate::logic::{FactId, FactSet, Interpretation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MinerError {
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
    #[error("invalid schedule: {0}")]
    Schedule(String),
    #[error("random fact {0} has an empty range")]
    EmptyRange(String),
    #[error("non-finite expected loss at iteration {iteration} while updating fact #{fact}")]
    NonFinite {
        iteration: usize,
        fact: u32,
        trace: Vec<TraceRecord>,
    },
    #[error("checkpoint does not match the problem: {0}")]
    Checkpoint(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub beta: f64,
    pub expected_loss: f64,
    pub true_loss: f64,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform tables with each mass perturbed into `[0.5/n, 1.5/n]`, then
/// renormalized.
pub fn initialize_q(facts: &FactSet, seed: u64) -> Result<FactorDistribution, MinerError> {
    let mut rng = rng_for(seed, 0);
    let mut pmfs = Vec::with_capacity(facts.len());
    for id in facts.ids() {
        let n = facts.range(id).len();
        if n == 0 {
            return Err(MinerError::EmptyRange(facts.fact(id).to_string()));
        }
        let mut p: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0.5..=1.5) / n as f64)
            .collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        pmfs.push(p);
    }
    Ok(FactorDistribution::from_pmfs(pmfs))
}

/// `q(b) ∝ exp(−β·e_b)`, computed with the exponent shifted by the minimum.
pub fn softmax_update(expected: &[f64], beta: f64) -> Vec<f64> {
    let min = expected.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = expected.iter().map(|e| (-beta * (e - min)).exp()).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Recomputes the table of `fact` from its pinned expected losses and writes
/// it back into the cache. Returns the new table.
pub fn update_fact(cache: &mut LossCache, fact: FactId, beta: f64) -> Result<Vec<f64>, MinerError> {
    let n = cache.q().pmf(fact).len();
    let mut deltas = Vec::with_capacity(n);
    for b in 0..n as u32 {
        deltas.push(cache.pinned_delta(fact, b)?);
    }
    if deltas.iter().any(|d| !d.is_finite()) {
        return Err(MinerError::NonFinite {
            iteration: 0,
            fact: fact.0,
            trace: Vec::new(),
        });
    }
    // Differences from the common base leave the softmax unchanged.
    let pmf = softmax_update(&deltas, beta);
    cache.set_pmf(fact, &pmf);
    Ok(pmf)
}

/// Serialized state between sweeps; enough to resume bit-identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub seed: u64,
    pub schedule: AnnealSchedule,
    /// Sweeps completed.
    pub iteration: usize,
    /// Inverse temperature for the next sweep.
    pub beta: f64,
    pub q: FactorDistribution,
    pub trace: Vec<TraceRecord>,
}

#[derive(Clone, Debug)]
pub struct MinerOutcome {
    pub seed: u64,
    pub interpretation: Interpretation,
    pub q: FactorDistribution,
    pub trace: Vec<TraceRecord>,
    /// Loss of the returned interpretation.
    pub loss: f64,
}

/// One annealing run in progress.
pub struct MinerRun {
    schedule: AnnealSchedule,
    seed: u64,
    cache: LossCache,
    beta: f64,
    iteration: usize,
    trace: Vec<TraceRecord>,
}

impl MinerRun {
    pub fn new(
        compiled: Arc<CompiledLoss>,
        facts: &FactSet,
        schedule: AnnealSchedule,
        seed: u64,
    ) -> Result<Self, MinerError> {
        let q = initialize_q(facts, seed)?;
        Self::with_q(compiled, schedule, seed, q)
    }

    /// Starts from a given distribution instead of the seeded initialization.
    pub fn with_q(
        compiled: Arc<CompiledLoss>,
        schedule: AnnealSchedule,
        seed: u64,
        q: FactorDistribution,
    ) -> Result<Self, MinerError> {
        schedule.validate()?;
        Ok(MinerRun {
            schedule,
            seed,
            cache: LossCache::new(compiled, q)?,
            beta: schedule.beta0,
            iteration: 0,
            trace: Vec::new(),
        })
    }

    pub fn resume(compiled: Arc<CompiledLoss>, cp: Checkpoint) -> Result<Self, MinerError> {
        cp.schedule.validate()?;
        if cp.trace.len() != cp.iteration {
            return Err(MinerError::Checkpoint(format!(
                "{} trace records for {} iterations",
                cp.trace.len(),
                cp.iteration
            )));
        }
        let cache = LossCache::new(compiled, cp.q)
            .map_err(|e| MinerError::Checkpoint(e.to_string()))?;
        Ok(MinerRun {
            schedule: cp.schedule,
            seed: cp.seed,
            cache,
            beta: cp.beta,
            iteration: cp.iteration,
            trace: cp.trace,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            seed: self.seed,
            schedule: self.schedule,
            iteration: self.iteration,
            beta: self.beta,
            q: self.cache.q().clone(),
            trace: self.trace.clone(),
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn is_done(&self) -> bool {
        self.iteration >= self.schedule.iterations
    }

    pub fn q(&self) -> &FactorDistribution {
        self.cache.q()
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    /// Loss of the current most probable interpretation.
    pub fn argmax_loss(&self) -> f64 {
        let point = FactorDistribution::point_mass_of(&self.cache.q().argmax(), self.cache.q());
        self.cache.compiled().expectation(&point, None)
    }

    /// One sweep over all facts in a fresh random order, then `β ← αβ`.
    pub fn step(&mut self) -> Result<(), MinerError> {
        let n = self.cache.q().len();
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.shuffle(&mut rng_for(self.seed, self.iteration as u64 + 1));
        for f in order {
            update_fact(&mut self.cache, FactId(f), self.beta).map_err(|e| match e {
                MinerError::NonFinite { fact, .. } => MinerError::NonFinite {
                    iteration: self.iteration,
                    fact,
                    trace: self.trace.clone(),
                },
                other => other,
            })?;
        }
        let expected_loss = self.cache.refresh_total();
        if !expected_loss.is_finite() {
            return Err(MinerError::NonFinite {
                iteration: self.iteration,
                fact: u32::MAX,
                trace: self.trace.clone(),
            });
        }
        self.trace.push(TraceRecord {
            iteration: self.iteration,
            beta: self.beta,
            expected_loss,
            true_loss: self.argmax_loss(),
        });
        self.iteration += 1;
        self.beta *= self.schedule.alpha;
        Ok(())
    }

    /// Runs the remaining sweeps, handing a checkpoint to `on_checkpoint`
    /// every `every` sweeps (never when `every` is 0).
    pub fn run_to_end(
        mut self,
        every: usize,
        mut on_checkpoint: impl FnMut(&Checkpoint),
    ) -> Result<MinerOutcome, MinerError> {
        while !self.is_done() {
            self.step()?;
            if every > 0 && self.iteration.is_multiple_of(every) && !self.is_done() {
                on_checkpoint(&self.checkpoint());
            }
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> MinerOutcome {
        let interpretation = self.cache.q().argmax();
        let loss = self.argmax_loss();
        MinerOutcome {
            seed: self.seed,
            interpretation,
            q: self.cache.into_q(),
            trace: self.trace,
            loss,
        }
    }
}

/// A complete run from the seeded initialization.
pub fn run(
    compiled: Arc<CompiledLoss>,
    facts: &FactSet,
    schedule: AnnealSchedule,
    seed: u64,
) -> Result<MinerOutcome, MinerError> {
    MinerRun::new(compiled, facts, schedule, seed)?.run_to_end(0, |_| {})
}

/// Runs every seed in parallel and keeps the lowest final loss; ties go to
/// the earliest seed.
pub fn best_of(
    compiled: Arc<CompiledLoss>,
    facts: &FactSet,
    schedule: AnnealSchedule,
    seeds: &[u64],
) -> Result<MinerOutcome, MinerError> {
    let outcomes: Vec<Result<MinerOutcome, MinerError>> = seeds
        .par_iter()
        .map(|s| run(Arc::clone(&compiled), facts, schedule, *s))
        .collect();
    let mut best: Option<MinerOutcome> = None;
    for o in outcomes {
        let o = o?;
        if best.as_ref().is_none_or(|b| o.loss < b.loss) {
            best = Some(o);
        }
    }
    best.ok_or_else(|| MinerError::Schedule("no seeds given".into()))
}
