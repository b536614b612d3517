//! Exhaustive reference computations over every interpretation of a small
//! fact set: loss tables, the exact Gibbs posterior and exact minimization.
//!
//! States are numbered by a mixed-radix counter over the facts in their
//! canonical order, the last fact varying fastest.

use crate::expectation::{FactorDistribution, LossExpression, Pin};
use crate::logic::{ground_support, FactId, FactSet, Interpretation, LogicError, Structure};
use rayon::prelude::*;
use std::collections::BTreeSet;
use thiserror::Error;

/// Largest state space the oracle enumerates.
pub const STATE_LIMIT: u128 = 1 << 20;
/// Largest total size of the per-term loss tables.
const TABLE_LIMIT: u128 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{states} interpretations exceed the oracle limit of {limit}")]
    Capacity { states: u128, limit: u128 },
    #[error(transparent)]
    Logic(#[from] LogicError),
}

pub type OracleResult<T> = Result<T, OracleError>;

fn radices(facts: &FactSet) -> Vec<usize> {
    facts.ids().map(|id| facts.range(id).len()).collect()
}

/// Interpretation with number `index`.
pub fn decode(facts: &FactSet, mut index: usize) -> Interpretation {
    let r = radices(facts);
    let mut values = vec![0u32; r.len()];
    for i in (0..r.len()).rev() {
        values[i] = (index % r[i]) as u32;
        index /= r[i];
    }
    Interpretation::new(values)
}

/// Number of `interp`.
pub fn encode(facts: &FactSet, interp: &Interpretation) -> usize {
    radices(facts)
        .iter()
        .zip(interp.values())
        .fold(0, |acc, (r, v)| acc * r + *v as usize)
}

fn check_capacity(facts: &FactSet) -> OracleResult<usize> {
    let states = facts.state_count();
    if states > STATE_LIMIT {
        return Err(OracleError::Capacity {
            states,
            limit: STATE_LIMIT,
        });
    }
    Ok(states as usize)
}

fn support(
    e: &LossExpression,
    structure: &Structure,
    facts: &FactSet,
    out: &mut BTreeSet<FactId>,
) -> OracleResult<()> {
    match e {
        LossExpression::Const(_) => {}
        LossExpression::Fact(f) => {
            out.insert(
                facts
                    .id(f)
                    .ok_or_else(|| LogicError::Incomplete(f.to_string()))?,
            );
        }
        LossExpression::Formula { formula, binding } => {
            out.extend(ground_support(formula, structure, facts, binding)?)
        }
        LossExpression::Sum(xs) | LossExpression::Product(xs) => {
            for x in xs {
                support(x, structure, facts, out)?;
            }
        }
        LossExpression::Sub(a, b) => {
            support(a, structure, facts, out)?;
            support(b, structure, facts, out)?;
        }
        LossExpression::Abs(a) | LossExpression::Pow(a, _) => support(a, structure, facts, out)?,
    }
    Ok(())
}

/// One additive term tabulated over the facts it depends on.
struct Term {
    facts: Vec<FactId>,
    strides: Vec<usize>,
    table: Vec<f64>,
}

/// Splits the loss into additive terms and tabulates each over its support
/// with the direct evaluator.
fn tabulate(
    structure: &Structure,
    facts: &FactSet,
    loss: &LossExpression,
) -> OracleResult<(f64, Vec<Term>)> {
    let mut constant = 0.0;
    let mut terms = Vec::new();
    let mut tabulated: u128 = 0;
    for (sign, e) in loss.additive_terms() {
        let mut sup = BTreeSet::new();
        support(e, structure, facts, &mut sup)?;
        let ids: Vec<FactId> = sup.into_iter().collect();
        let sizes: Vec<usize> = ids.iter().map(|id| facts.range(*id).len()).collect();
        let n: u128 = sizes.iter().map(|s| *s as u128).product();
        tabulated += n;
        if tabulated > TABLE_LIMIT {
            return Err(OracleError::Capacity {
                states: tabulated,
                limit: TABLE_LIMIT,
            });
        }
        let mut strides = vec![1usize; ids.len()];
        for i in (0..ids.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * sizes[i + 1];
        }
        let mut interp = Interpretation::zeros(facts);
        let mut table = Vec::with_capacity(n as usize);
        for k in 0..n as usize {
            for (i, id) in ids.iter().enumerate() {
                interp.set(*id, ((k / strides[i]) % sizes[i]) as u32);
            }
            table.push(sign * e.evaluate(structure, facts, &interp)?);
        }
        if ids.is_empty() {
            constant += table[0];
        } else {
            terms.push(Term {
                facts: ids,
                strides,
                table,
            });
        }
    }
    Ok((constant, terms))
}

/// Loss of every interpretation, indexed by state number.
pub fn enumerate_losses(
    structure: &Structure,
    facts: &FactSet,
    loss: &LossExpression,
) -> OracleResult<Vec<f64>> {
    let states = check_capacity(facts)?;
    let (constant, terms) = tabulate(structure, facts, loss)?;
    let r = radices(facts);
    // occurrences[f] = (term, stride of f in that term)
    let mut occurrences: Vec<Vec<(usize, usize)>> = vec![Vec::new(); r.len()];
    for (t, term) in terms.iter().enumerate() {
        for (id, stride) in term.facts.iter().zip(&term.strides) {
            occurrences[id.index()].push((t, *stride));
        }
    }
    // Chunks over the leading digits, each walked by an odometer.
    let mut tail = 1usize;
    let mut split = r.len();
    while split > 0 && tail * r[split - 1] <= 4096 {
        split -= 1;
        tail *= r[split];
    }
    let mut out = vec![0.0; states];
    out.par_chunks_mut(tail).enumerate().for_each(|(c, chunk)| {
        let start = decode_with(&r, c * tail);
        let mut digits: Vec<usize> = start.values().iter().map(|v| *v as usize).collect();
        let mut idx: Vec<usize> = terms
            .iter()
            .map(|t| {
                t.facts
                    .iter()
                    .zip(&t.strides)
                    .map(|(id, s)| digits[id.index()] * s)
                    .sum()
            })
            .collect();
        for (k, slot) in chunk.iter_mut().enumerate() {
            if k > 0 {
                let mut i = r.len() - 1;
                loop {
                    let old = digits[i];
                    let new = if old + 1 == r[i] { 0 } else { old + 1 };
                    digits[i] = new;
                    for (t, s) in &occurrences[i] {
                        idx[*t] = idx[*t] + new * s - old * s;
                    }
                    if new != 0 || i == 0 {
                        break;
                    }
                    i -= 1;
                }
            }
            *slot = constant
                + terms
                    .iter()
                    .zip(&idx)
                    .map(|(t, i)| t.table[*i])
                    .sum::<f64>();
        }
    });
    Ok(out)
}

fn decode_with(r: &[usize], mut index: usize) -> Interpretation {
    let mut values = vec![0u32; r.len()];
    for i in (0..r.len()).rev() {
        values[i] = (index % r[i]) as u32;
        index /= r[i];
    }
    Interpretation::new(values)
}

/// Minimum loss and the first interpretation attaining it.
pub fn exact_min_loss(
    structure: &Structure,
    facts: &FactSet,
    loss: &LossExpression,
) -> OracleResult<(f64, Interpretation)> {
    let losses = enumerate_losses(structure, facts, loss)?;
    let (i, l) = losses
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, l)| if *l < best.1 { (i, *l) } else { best });
    Ok((l, decode(facts, i)))
}

/// `P(𝔍) = exp(−βL(𝔍)) / Z` over all interpretations.
#[derive(Clone, Debug)]
pub struct ExactPosterior {
    pub beta: f64,
    pub losses: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub log_z: f64,
}

pub fn exact_posterior(
    structure: &Structure,
    facts: &FactSet,
    loss: &LossExpression,
    beta: f64,
) -> OracleResult<ExactPosterior> {
    Ok(posterior_from_losses(enumerate_losses(structure, facts, loss)?, beta))
}

pub fn posterior_from_losses(losses: Vec<f64>, beta: f64) -> ExactPosterior {
    let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = losses.iter().map(|l| (-beta * (l - min)).exp()).collect();
    let z: f64 = w.iter().sum();
    ExactPosterior {
        beta,
        log_z: z.ln() - beta * min,
        probabilities: w.into_iter().map(|x| x / z).collect(),
        losses,
    }
}

impl ExactPosterior {
    pub fn probability(&self, facts: &FactSet, interp: &Interpretation) -> f64 {
        self.probabilities[encode(facts, interp)]
    }

    pub fn entropy(&self) -> f64 {
        -self
            .probabilities
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    pub fn expected_loss(&self) -> f64 {
        self.probabilities.iter().zip(&self.losses).map(|(p, l)| p * l).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    /// Pairs of states whose probabilities disagree with their losses.
    pub ordering_violations: usize,
    pub entropy: f64,
}

impl EntropyReport {
    pub fn holds(&self) -> bool {
        self.ordering_violations == 0
    }
}

/// Checks that lower loss means strictly higher probability when `β > 0`,
/// and equal probability for equal loss (all probabilities when `β = 0`).
pub fn entropy_check(post: &ExactPosterior) -> EntropyReport {
    let mut order: Vec<usize> = (0..post.losses.len()).collect();
    order.sort_by(|a, b| post.losses[*a].total_cmp(&post.losses[*b]));
    let mut violations = 0;
    let tol = 1e-12;
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (pa, pb) = (post.probabilities[a], post.probabilities[b]);
        let same = post.losses[a] == post.losses[b] || post.beta == 0.0;
        let ok = if same {
            (pa - pb).abs() <= tol * pa.max(pb).max(1e-300)
        } else {
            pa > pb
        };
        violations += !ok as usize;
    }
    EntropyReport {
        ordering_violations: violations,
        entropy: post.entropy(),
    }
}

/// Probability of every state under a factorized distribution, built as an
/// outer product in state order.
fn state_probabilities(q: &FactorDistribution, facts: &FactSet) -> Vec<f64> {
    let mut probs = vec![1.0];
    for id in facts.ids() {
        let pmf = q.pmf(id);
        probs = probs
            .iter()
            .flat_map(|p| pmf.iter().map(move |v| p * v))
            .collect();
    }
    probs
}

/// `KL(q ‖ P)`; infinite when `q` puts mass where `P` has none.
pub fn kl_divergence(q: &FactorDistribution, facts: &FactSet, post: &ExactPosterior) -> f64 {
    state_probabilities(q, facts)
        .par_iter()
        .zip(&post.probabilities)
        .map(|(&qs, &ps)| {
            if qs == 0.0 {
                0.0
            } else if ps == 0.0 {
                f64::INFINITY
            } else {
                qs * (qs.ln() - ps.ln())
            }
        })
        .sum()
}

/// `E_q[L]` by summing over every interpretation, with one fact optionally
/// pinned to a value.
pub fn exhaustive_expectation(
    structure: &Structure,
    facts: &FactSet,
    q: &FactorDistribution,
    loss: &LossExpression,
    pin: Option<Pin>,
) -> OracleResult<f64> {
    let losses = enumerate_losses(structure, facts, loss)?;
    Ok(expectation_from_losses(facts, q, &losses, pin))
}

/// Same as [`exhaustive_expectation`] over a table from [`enumerate_losses`].
pub fn expectation_from_losses(
    facts: &FactSet,
    q: &FactorDistribution,
    losses: &[f64],
    pin: Option<Pin>,
) -> f64 {
    let mut q = q.clone();
    if let Some(p) = pin {
        let mut pmf = vec![0.0; facts.range(p.fact).len()];
        pmf[p.value as usize] = 1.0;
        q.set_pmf(p.fact, &pmf);
    }
    state_probabilities(&q, facts)
        .par_iter()
        .zip(losses)
        .map(|(&p, &l)| if p == 0.0 { 0.0 } else { p * l })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{Binding, Formula, StructureBuilder, Term, Value};

    fn single_fact() -> (Structure, FactSet, LossExpression) {
        let mut b = StructureBuilder::new();
        b.sort("S", vec![Value::sym("a")]).unwrap();
        b.flexible_relation("F", &["S"]).unwrap();
        let s = b.build().unwrap();
        let f = Formula::rel("F", vec![Term::val("a")]);
        let facts = crate::logic::enumerate_random_facts(&f, &s).unwrap();
        let loss = LossExpression::formula(f, Binding::new());
        (s, facts, loss)
    }

    #[test]
    fn two_state_posterior() {
        let (s, facts, loss) = single_fact();
        let post = exact_posterior(&s, &facts, &loss, 2f64.ln()).unwrap();
        assert!((post.probabilities[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((post.probabilities[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!(entropy_check(&post).holds());
    }

    #[test]
    fn zero_beta_is_uniform() {
        let (s, facts, loss) = single_fact();
        let post = exact_posterior(&s, &facts, &loss, 0.0).unwrap();
        assert_eq!(post.probabilities, vec![0.5, 0.5]);
        assert!(entropy_check(&post).holds());
    }

    #[test]
    fn encode_inverts_decode() {
        let (_, facts, _) = single_fact();
        for i in 0..2 {
            assert_eq!(encode(&facts, &decode(&facts, i)), i);
        }
    }
}
