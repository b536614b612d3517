//! Objective functions: fit terms over labelled requests and per-language
//! complexity measures.

use crate::expectation::LossExpression;
use crate::languages::abac::AbacTemplate;
use crate::languages::bm_rbac::BmRbacTemplate;
use crate::languages::rbac::RbacTemplate;
use crate::logic::{Binding, Formula, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("weight `{0}` must be finite and non-negative")]
    Weight(&'static str),
}

/// Weights of the objective terms. `lambda` scales the complexity term of
/// matrix objectives and `lambda0` that of log objectives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Weights {
    pub lambda: f64,
    pub lambda0: f64,
    /// Allowed requests the policy denies.
    pub lambda11: f64,
    /// Denied requests the policy allows.
    pub lambda12: f64,
    /// Undecided requests the policy allows.
    pub lambda2: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            lambda: 0.0,
            lambda0: 0.0,
            lambda11: 1.0,
            lambda12: 1.0,
            lambda2: 0.0,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<(), ObjectiveError> {
        for (name, w) in [
            ("lambda", self.lambda),
            ("lambda0", self.lambda0),
            ("lambda11", self.lambda11),
            ("lambda12", self.lambda12),
            ("lambda2", self.lambda2),
        ] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(ObjectiveError::Weight(name));
            }
        }
        Ok(())
    }

    /// Overrides named weights, as produced by a grid search cell.
    pub fn with(&self, overrides: &BTreeMap<String, f64>) -> Weights {
        let mut w = self.clone();
        for (k, v) in overrides {
            match k.as_str() {
                "lambda" => w.lambda = *v,
                "lambda0" => w.lambda0 = *v,
                "lambda11" => w.lambda11 = *v,
                "lambda12" => w.lambda12 = *v,
                "lambda2" => w.lambda2 = *v,
                _ => {}
            }
        }
        w
    }
}

fn instance(formula: &Formula, b: Binding) -> LossExpression {
    LossExpression::formula(formula.clone(), b)
}

/// `Σ |Auth(r) − φ(r)|` over the given requests.
pub fn symmetric_difference_loss(
    formula: &Formula,
    requests: impl IntoIterator<Item = (Binding, bool)>,
) -> LossExpression {
    LossExpression::Sum(
        requests
            .into_iter()
            .map(|(b, granted)| {
                LossExpression::abs(LossExpression::sub(
                    LossExpression::Const(granted as u8 as f64),
                    instance(formula, b),
                ))
            })
            .collect(),
    )
}

/// `λ₁,₁ Σ_A (1 − φ) + λ₁,₂ Σ_D φ + λ₂ Σ_U φ` over allowed, denied and
/// undecided requests; the complexity term is added separately.
pub fn log_loss(
    formula: &Formula,
    allowed: impl IntoIterator<Item = Binding>,
    denied: impl IntoIterator<Item = Binding>,
    undecided: impl IntoIterator<Item = Binding>,
    w: &Weights,
) -> LossExpression {
    let mut terms = Vec::new();
    if w.lambda11 > 0.0 {
        terms.extend(allowed.into_iter().map(|b| {
            LossExpression::scale(
                w.lambda11,
                LossExpression::sub(LossExpression::Const(1.0), instance(formula, b)),
            )
        }));
    }
    for (lw, set) in [
        (w.lambda12, denied.into_iter().collect::<Vec<_>>()),
        (w.lambda2, undecided.into_iter().collect()),
    ] {
        if lw > 0.0 {
            terms.extend(set.into_iter().map(|b| LossExpression::scale(lw, instance(formula, b))));
        }
    }
    LossExpression::Sum(terms)
}

/// `base + weight · complexity`, omitting the complexity when the weight is 0.
pub fn regularized(base: LossExpression, weight: f64, complexity: LossExpression) -> LossExpression {
    if weight == 0.0 {
        base
    } else {
        LossExpression::Sum(vec![base, LossExpression::scale(weight, complexity)])
    }
}

/// Number of user-role and role-permission assignments.
pub fn rbac_complexity(t: &RbacTemplate) -> LossExpression {
    let mut terms = Vec::new();
    for r in &t.roles {
        let rv = Value::sym(r);
        terms.extend(
            t.users
                .iter()
                .map(|u| LossExpression::fact("UA", vec![Value::sym(u), rv.clone()])),
        );
        terms.extend(
            t.perms
                .iter()
                .map(|p| LossExpression::fact("PA", vec![rv.clone(), Value::sym(p)])),
        );
    }
    LossExpression::Sum(terms)
}

/// Number of attribute values required over all rules.
pub fn abac_complexity(t: &AbacTemplate) -> LossExpression {
    let mut terms = Vec::new();
    for s in &t.rules {
        for a in &t.attributes {
            for sym in ["RUA", "RPA"] {
                terms.push(LossExpression::fact(sym, vec![Value::sym(s), Value::sym(a)]));
            }
        }
    }
    LossExpression::Sum(terms)
}

/// `Δ(u, u') = Σ_i UA(u,r_i) − 2·UA(u,r_i)²·UA(u',r_i)`.
pub fn role_disagreement(t: &RbacTemplate, u: &str, v: &str) -> LossExpression {
    let ua = |x: &str, r: &str| LossExpression::fact("UA", vec![Value::sym(x), Value::sym(r)]);
    LossExpression::Sum(
        t.roles
            .iter()
            .map(|r| {
                LossExpression::sub(
                    ua(u, r),
                    LossExpression::Product(vec![
                        LossExpression::Const(2.0),
                        LossExpression::pow(ua(u, r), 2),
                        ua(v, r),
                    ]),
                )
            })
            .collect(),
    )
}

/// `(1/|U|) Σ_{u,u'} Σ_a AA(u,a)·AA(u',a)·Δ(u,u')`, summed over ordered pairs
/// that share their attribute combination (including `u = u'`). This can be
/// negative, since `Δ(u,u) = −Σ_i UA(u,r_i)` on 0/1 values.
pub fn bm_rbac_complexity(t: &BmRbacTemplate) -> LossExpression {
    let users = &t.rbac.users;
    let mut groups: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for u in users {
        groups.entry(t.combination[u].as_str()).or_default().push(u);
    }
    let mut terms = Vec::new();
    for members in groups.values() {
        for u in members {
            for v in members {
                terms.push(role_disagreement(&t.rbac, u, v));
            }
        }
    }
    LossExpression::scale(1.0 / users.len() as f64, LossExpression::Sum(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expectation::{expect_loss, FactorDistribution};
    use crate::languages::rbac::build_rbac;
    use crate::logic::Interpretation;

    fn names(p: &str, n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("{p}{i}")).collect()
    }

    #[test]
    fn rbac_complexity_under_uniform_q_is_half_the_facts() {
        let t = build_rbac(&names("u", 3), &names("p", 3), 2).unwrap();
        let q = FactorDistribution::uniform(&t.template.facts);
        let c = rbac_complexity(&t);
        let e = expect_loss(&q, &t.template.structure, &t.template.facts, &c, None).unwrap();
        assert!((e - 6.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_difference_counts_disagreements() {
        let t = build_rbac(&names("u", 2), &names("p", 2), 1).unwrap();
        let facts = &t.template.facts;
        let mut all = Interpretation::zeros(facts);
        for id in facts.ids() {
            all.set(id, 1);
        }
        let reqs: Vec<(Binding, bool)> = ["u1", "u2"]
            .iter()
            .flat_map(|u| ["p1", "p2"].map(|p| (t.request(u, p), false)))
            .collect();
        let loss = symmetric_difference_loss(&t.template.formula, reqs);
        let s = &t.template.structure;
        assert_eq!(loss.evaluate(s, facts, &all).unwrap(), 4.0);
        assert_eq!(loss.evaluate(s, facts, &Interpretation::zeros(facts)).unwrap(), 0.0);
    }

    #[test]
    fn weights_reject_negative() {
        let w = Weights {
            lambda: -1.0,
            ..Weights::default()
        };
        assert_eq!(w.validate(), Err(ObjectiveError::Weight("lambda")));
    }
}
