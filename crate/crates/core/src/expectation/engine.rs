use super::circuit::{Circuit, Compiled, Compiler, Pin};
use super::distribution::FactorDistribution;
use super::error::{ExpectationError, ExpectationResult};
use super::loss::{CompiledLoss, LossExpression};
use crate::logic::{Binding, FactId, FactSet, Formula, Structure, Value};

/// Expectation of a single random fact.
#[derive(Clone, Debug, PartialEq)]
pub enum FactExpectation {
    /// Mean of a numeric range.
    Mean(f64),
    /// Full pmf for non-numeric ranges.
    Pmf(Vec<(Value, f64)>),
}

fn check(q: &FactorDistribution, facts: &FactSet, pin: Option<Pin>) -> ExpectationResult<()> {
    if q.len() != facts.len() {
        return Err(ExpectationError::Shape(format!(
            "{} tables for {} facts",
            q.len(),
            facts.len()
        )));
    }
    if let Some(p) = pin {
        if p.fact.index() >= facts.len() || p.value as usize >= facts.range(p.fact).len() {
            return Err(ExpectationError::InvalidPin {
                fact: format!("#{}", p.fact.0),
                value: p.value,
            });
        }
    }
    Ok(())
}

pub fn expect_fact(
    q: &FactorDistribution,
    facts: &FactSet,
    g: FactId,
    pin: Option<Pin>,
) -> ExpectationResult<FactExpectation> {
    check(q, facts, pin)?;
    if g.index() >= facts.len() {
        return Err(ExpectationError::UnknownFact(format!("#{}", g.0)));
    }
    let range = facts.range(g);
    let pmf: Vec<f64> = match pin {
        Some(p) if p.fact == g => (0..range.len())
            .map(|i| (i == p.value as usize) as u8 as f64)
            .collect(),
        _ => q.pmf(g).to_vec(),
    };
    match range.iter().map(Value::as_f64).collect::<Option<Vec<_>>>() {
        Some(nums) => Ok(FactExpectation::Mean(
            nums.iter().zip(&pmf).map(|(v, p)| v * p).sum(),
        )),
        None => Ok(FactExpectation::Pmf(range.iter().cloned().zip(pmf).collect())),
    }
}

/// Exact expectation of a formula instance under `q`, optionally with one
/// fact pinned.
pub fn expect_formula(
    q: &FactorDistribution,
    structure: &Structure,
    facts: &FactSet,
    formula: &Formula,
    binding: &Binding,
    pin: Option<Pin>,
) -> ExpectationResult<f64> {
    check(q, facts, pin)?;
    let mut circuit = Circuit::default();
    let root = Compiler::new(structure, facts, &mut circuit).compile(formula, binding)?;
    Ok(match root {
        Compiled::Const(b) => b as u8 as f64,
        Compiled::Node(n) => circuit.eval_all(q, pin)[n as usize],
    })
}

/// Exact expectation of a loss by linearity.
pub fn expect_loss(
    q: &FactorDistribution,
    structure: &Structure,
    facts: &FactSet,
    loss: &LossExpression,
    pin: Option<Pin>,
) -> ExpectationResult<f64> {
    check(q, facts, pin)?;
    Ok(CompiledLoss::compile(structure, facts, loss)?.expectation(q, pin))
}
