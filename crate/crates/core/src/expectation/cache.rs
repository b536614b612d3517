use super::circuit::Pin;
use super::distribution::FactorDistribution;
use super::error::{ExpectationError, ExpectationResult};
use super::loss::CompiledLoss;
use crate::logic::FactId;
use std::sync::Arc;

/// Expected loss under a factorized distribution, with cached gate and
/// monomial values so that pinning or updating one fact only recomputes what
/// depends on it.
///
/// Gate values are always recomputed from their children, never adjusted by
/// differences, so the cached values equal a from-scratch evaluation bit for
/// bit. Only the running total accumulates rounding, which
/// [`LossCache::refresh_total`] clears.
#[derive(Clone, Debug)]
pub struct LossCache {
    compiled: Arc<CompiledLoss>,
    q: FactorDistribution,
    node_vals: Vec<f64>,
    mono_vals: Vec<f64>,
    scratch: Vec<f64>,
    stamp: Vec<u32>,
    epoch: u32,
    total: f64,
}

impl LossCache {
    pub fn new(compiled: Arc<CompiledLoss>, q: FactorDistribution) -> ExpectationResult<Self> {
        if q.len() != compiled.fact_count() {
            return Err(ExpectationError::Shape(format!(
                "{} tables for {} facts",
                q.len(),
                compiled.fact_count()
            )));
        }
        let node_vals = compiled.circuit.eval_all(&q, None);
        let n = node_vals.len();
        let mut cache = LossCache {
            mono_vals: vec![0.0; compiled.monomials.len()],
            compiled,
            q,
            node_vals,
            scratch: vec![0.0; n],
            stamp: vec![0; n],
            epoch: 0,
            total: 0.0,
        };
        for i in 0..cache.mono_vals.len() {
            cache.mono_vals[i] = cache.mono_value(i, false, None);
        }
        cache.refresh_total();
        Ok(cache)
    }

    pub fn compiled(&self) -> &Arc<CompiledLoss> {
        &self.compiled
    }

    pub fn q(&self) -> &FactorDistribution {
        &self.q
    }

    pub fn into_q(self) -> FactorDistribution {
        self.q
    }

    /// Current expected loss.
    pub fn expected_loss(&self) -> f64 {
        self.total
    }

    /// Recomputes the total from the cached monomial values.
    pub fn refresh_total(&mut self) -> f64 {
        self.total = self.compiled.constant
            + self
                .compiled
                .monomials
                .iter()
                .zip(&self.mono_vals)
                .map(|(m, v)| m.coef * v)
                .sum::<f64>();
        self.total
    }

    fn mono_value(&self, i: usize, use_scratch: bool, pin: Option<Pin>) -> f64 {
        let m = &self.compiled.monomials[i];
        let epoch = self.epoch;
        m.factors
            .iter()
            .map(|f| {
                self.compiled.factor_value(
                    *f,
                    |n| {
                        if use_scratch && self.stamp[n as usize] == epoch {
                            self.scratch[n as usize]
                        } else {
                            self.node_vals[n as usize]
                        }
                    },
                    &self.q,
                    pin,
                )
            })
            .product()
    }

    fn check_pin(&self, fact: FactId, value: u32) -> ExpectationResult<()> {
        if fact.index() >= self.q.len() || value as usize >= self.q.pmf(fact).len() {
            return Err(ExpectationError::InvalidPin {
                fact: format!("#{}", fact.0),
                value,
            });
        }
        Ok(())
    }

    /// Change in expected loss if `fact` were fixed to its `value`-th range
    /// element. Leaves the cache unchanged.
    pub fn pinned_delta(&mut self, fact: FactId, value: u32) -> ExpectationResult<f64> {
        self.check_pin(fact, value)?;
        let pin = Some(Pin { fact, value });
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        let compiled = Arc::clone(&self.compiled);
        for &n in compiled.fact_nodes.row(fact.index()) {
            let epoch = self.epoch;
            let v = compiled.circuit.eval_gate(
                n,
                |c| {
                    if self.stamp[c as usize] == epoch {
                        self.scratch[c as usize]
                    } else {
                        self.node_vals[c as usize]
                    }
                },
                &self.q,
                pin,
            );
            self.scratch[n as usize] = v;
            self.stamp[n as usize] = epoch;
        }
        let mut delta = 0.0;
        for &m in compiled.fact_monos.row(fact.index()) {
            let new = self.mono_value(m as usize, true, pin);
            delta += compiled.monomials[m as usize].coef * (new - self.mono_vals[m as usize]);
        }
        Ok(delta)
    }

    /// Expected loss with `fact` pinned to its `value`-th range element.
    pub fn pinned_loss(&mut self, fact: FactId, value: u32) -> ExpectationResult<f64> {
        Ok(self.total + self.pinned_delta(fact, value)?)
    }

    /// Replaces the table of `fact` and updates every dependent cached value.
    pub fn set_pmf(&mut self, fact: FactId, pmf: &[f64]) {
        self.q.set_pmf(fact, pmf);
        let compiled = Arc::clone(&self.compiled);
        for &n in compiled.fact_nodes.row(fact.index()) {
            let v = compiled
                .circuit
                .eval_gate(n, |c| self.node_vals[c as usize], &self.q, None);
            self.node_vals[n as usize] = v;
        }
        for &m in compiled.fact_monos.row(fact.index()) {
            let new = self.mono_value(m as usize, false, None);
            self.total += compiled.monomials[m as usize].coef * (new - self.mono_vals[m as usize]);
            self.mono_vals[m as usize] = new;
        }
    }

    /// Expected loss by full recomputation, ignoring all cached values.
    pub fn recompute(&self) -> f64 {
        self.compiled.expectation(&self.q, None)
    }
}
