//! From a configuration and a dataset to a mined policy and its metrics.

use crate::evaluation::{self, Confusion, CrossvalReport, EvalError, GridOutcome, Metrics};
use crate::expectation::{CompiledLoss, ExpectationError, LossExpression};
use crate::io::{Context, Dataset, DatasetKind, Language, Request, RunConfig};
use crate::languages::abac::{build_abac, AbacPolicy, AbacTemplate};
use crate::languages::bm_rbac::{build_bm_rbac, BmRbacTemplate};
use crate::languages::rbac::{build_rbac, RbacPolicy, RbacTemplate};
use crate::languages::starbac::fixture::entity_name;
use crate::languages::starbac::{build_starbac, campus, Entity, Instant, StarbacPolicy, StarbacTemplate};
use crate::languages::xacml::{build_xacml, XacmlPolicy, XacmlTemplate};
use crate::languages::{Template, TemplateError};
use crate::logic::{Binding, Interpretation};
use crate::miner::{Checkpoint, MinerError, MinerOutcome, MinerRun};
use crate::objectives::{self, log_loss, regularized, symmetric_difference_loss};
use crate::seed::derive_seed;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, Mutex};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Expectation(#[from] ExpectationError),
    #[error(transparent)]
    Miner(#[from] MinerError),
    #[error(transparent)]
    Evaluation(#[from] EvalError),
    #[error(transparent)]
    Config(#[from] crate::io::ConfigError),
    #[error("{0}")]
    Incompatible(String),
}

pub type PipelineResult<T> = Result<T, PipelineError>;

#[derive(Clone, Debug)]
pub enum LanguageTemplate {
    Rbac(RbacTemplate),
    Abac(AbacTemplate),
    BmRbac(BmRbacTemplate),
    Xacml(XacmlTemplate),
    Starbac(StarbacTemplate),
}

impl LanguageTemplate {
    pub fn template(&self) -> &Template {
        match self {
            LanguageTemplate::Rbac(t) => &t.template,
            LanguageTemplate::Abac(t) => &t.template,
            LanguageTemplate::BmRbac(t) => &t.rbac.template,
            LanguageTemplate::Xacml(t) => &t.template,
            LanguageTemplate::Starbac(t) => &t.template,
        }
    }
}

/// A mined policy in the language it was mined in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "language", content = "policy", rename_all = "lowercase")]
pub enum MinedPolicy {
    Rbac(RbacPolicy),
    Abac(AbacPolicy),
    Xacml(XacmlPolicy),
    Starbac(StarbacPolicy),
}

fn attrs<'a>(table: &'a crate::languages::abac::Attributes, key: &str) -> &'a BTreeSet<String> {
    static EMPTY: BTreeSet<String> = BTreeSet::new();
    table.get(key).unwrap_or(&EMPTY)
}

/// Attribute values carried by the request `(u, p)`.
pub fn request_attributes(data: &Dataset, user: &str, perm: &str) -> BTreeSet<String> {
    attrs(&data.user_attributes, user)
        .union(attrs(&data.perm_attributes, perm))
        .cloned()
        .collect()
}

fn xacml_request_name(user: &str, perm: &str) -> String {
    format!("{user}|{perm}")
}

impl MinedPolicy {
    /// Whether the policy grants `(user, perm)` in `context`. STARBAC
    /// policies grant nothing without a context.
    pub fn grants(&self, data: &Dataset, user: &str, perm: &str, context: Option<&Context>) -> bool {
        match self {
            MinedPolicy::Rbac(p) => p.grants(user, perm),
            MinedPolicy::Abac(p) => p.grants(
                attrs(&data.user_attributes, user),
                attrs(&data.perm_attributes, perm),
            ),
            MinedPolicy::Xacml(p) => p.grants(&request_attributes(data, user, perm)),
            MinedPolicy::Starbac(p) => {
                context.is_some_and(|c| p.grants(c.instant, c.user_pos, c.perm_pos))
            }
        }
    }

    pub fn complexity(&self) -> usize {
        match self {
            MinedPolicy::Rbac(p) => p.complexity(),
            MinedPolicy::Abac(p) => p.complexity(),
            MinedPolicy::Xacml(p) => p.complexity(),
            MinedPolicy::Starbac(p) => p.complexity(),
        }
    }
}

/// A template instantiated for a dataset together with the loss to minimize.
#[derive(Clone, Debug)]
pub struct Problem {
    pub language: Language,
    pub template: LanguageTemplate,
    pub loss: LossExpression,
}

impl Problem {
    pub fn base(&self) -> &Template {
        self.template.template()
    }

    pub fn compile(&self) -> PipelineResult<Arc<CompiledLoss>> {
        let t = self.base();
        Ok(Arc::new(CompiledLoss::compile(&t.structure, &t.facts, &self.loss)?))
    }

    pub fn extract(&self, interp: &Interpretation) -> MinedPolicy {
        match &self.template {
            LanguageTemplate::Rbac(t) => MinedPolicy::Rbac(t.extract(interp)),
            LanguageTemplate::BmRbac(t) => MinedPolicy::Rbac(t.rbac.extract(interp)),
            LanguageTemplate::Abac(t) => MinedPolicy::Abac(t.extract(interp)),
            LanguageTemplate::Xacml(t) => MinedPolicy::Xacml(t.extract(interp)),
            LanguageTemplate::Starbac(t) => MinedPolicy::Starbac(t.extract(interp)),
        }
    }

    /// Binding of the template's free variables for `r`.
    pub fn binding(&self, r: &Request) -> Binding {
        match &self.template {
            LanguageTemplate::Rbac(t) => t.request(&r.user, &r.permission),
            LanguageTemplate::BmRbac(t) => t.rbac.request(&r.user, &r.permission),
            LanguageTemplate::Abac(t) => t.request(&r.user, &r.permission),
            LanguageTemplate::Xacml(t) => t.request(&xacml_request_name(&r.user, &r.permission)),
            LanguageTemplate::Starbac(t) => {
                let c = r.context.as_ref().expect("STARBAC request with context");
                t.request(
                    c.instant,
                    &entity_name("u", c.user_pos),
                    &entity_name("o", c.perm_pos),
                )
            }
        }
    }

    /// Loss of `interp` evaluated directly on the formula.
    pub fn loss_of(&self, interp: &Interpretation) -> PipelineResult<f64> {
        let t = self.base();
        Ok(self
            .loss
            .evaluate(&t.structure, &t.facts, interp)
            .map_err(TemplateError::from)?)
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> PipelineResult<()> {
    if cond {
        Ok(())
    } else {
        Err(PipelineError::Incompatible(msg()))
    }
}

/// Builds the template and loss for `config` over the requests of `data`
/// selected by `train` (indices into [`Dataset::requests`]).
pub fn build_problem(config: &RunConfig, data: &Dataset, train: &[usize]) -> PipelineResult<Problem> {
    let lang = config.language;
    let all = data.requests();
    let train: Vec<&Request> = train.iter().map(|i| &all[*i]).collect();
    let matrix_only = matches!(
        lang,
        Language::Rbac | Language::RbacReg | Language::Abac | Language::BmRbac
    );
    if matrix_only {
        require(data.kind == DatasetKind::Matrix, || {
            format!("{} needs a permission matrix", lang.name())
        })?;
    }
    if matches!(lang, Language::AbacLog | Language::Starbac) {
        require(data.kind == DatasetKind::Log, || {
            format!("{} needs a request log", lang.name())
        })?;
    }
    let has_context = data.log.iter().any(|e| e.context.is_some());
    if lang == Language::Starbac {
        require(has_context, || "starbac needs logged times and positions".into())?;
    } else {
        require(!has_context, || {
            format!("{} does not use logged times and positions", lang.name())
        })?;
    }
    let w = &config.weights;
    let template = match lang {
        Language::Rbac | Language::RbacReg => {
            LanguageTemplate::Rbac(build_rbac(&data.users, &data.perms, config.size)?)
        }
        Language::BmRbac => {
            let aa: Vec<(String, String)> = data
                .users
                .iter()
                .map(|u| {
                    let combo: Vec<&str> =
                        attrs(&data.user_attributes, u).iter().map(String::as_str).collect();
                    (u.clone(), combo.join(","))
                })
                .collect();
            LanguageTemplate::BmRbac(build_bm_rbac(&data.users, &data.perms, &aa, config.size)?)
        }
        Language::Abac | Language::AbacLog => LanguageTemplate::Abac(build_abac(
            &data.users,
            &data.perms,
            &data.user_attributes,
            &data.perm_attributes,
            &data.attribute_values(),
            config.size,
        )?),
        Language::Xacml => {
            let mut reqs: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
            let undecided = data.undecided();
            let pairs = train
                .iter()
                .map(|r| (r.user.as_str(), r.permission.as_str()))
                .chain(undecided.iter().map(|(u, p)| (u.as_str(), p.as_str())));
            for (u, p) in pairs {
                reqs.insert(xacml_request_name(u, p), request_attributes(data, u, p));
            }
            let reqs: Vec<(String, BTreeSet<String>)> = reqs.into_iter().collect();
            LanguageTemplate::Xacml(build_xacml(
                &data.attribute_values(),
                &reqs,
                config.depth,
                config.breadth,
            )?)
        }
        Language::Starbac => {
            let mut users = BTreeMap::new();
            let mut objects = BTreeMap::new();
            let mut instants = BTreeSet::<Instant>::new();
            for r in &train {
                let c = r.context.as_ref().expect("checked above");
                let un = entity_name("u", c.user_pos);
                users.entry(un.clone()).or_insert_with(|| Entity::new(&un, c.user_pos.0, c.user_pos.1));
                let on = entity_name("o", c.perm_pos);
                objects.entry(on.clone()).or_insert_with(|| Entity::new(&on, c.perm_pos.0, c.perm_pos.1));
                instants.insert(c.instant);
            }
            let users: Vec<Entity> = users.into_values().collect();
            let objects: Vec<Entity> = objects.into_values().collect();
            let instants: Vec<Instant> = instants.into_iter().collect();
            LanguageTemplate::Starbac(build_starbac(
                &users,
                &objects,
                &instants,
                &campus(),
                &config.starbac,
            )?)
        }
    };
    let mut problem = Problem {
        language: lang,
        template,
        loss: LossExpression::Const(0.0),
    };
    let formula = problem.base().formula.clone();
    let bind = |r: &Request| problem.binding(r);
    let matrix_fit = || {
        symmetric_difference_loss(&formula, train.iter().map(|r| (bind(r), r.allowed)))
    };
    let undecided_bindings = || -> Vec<Binding> {
        data.undecided()
            .into_iter()
            .map(|(u, p)| {
                bind(&Request {
                    user: u,
                    permission: p,
                    allowed: false,
                    context: None,
                })
            })
            .collect()
    };
    let log_fit = || {
        log_loss(
            &formula,
            train.iter().filter(|r| r.allowed).map(|r| bind(r)),
            train.iter().filter(|r| !r.allowed).map(|r| bind(r)),
            undecided_bindings(),
            w,
        )
    };
    let loss = match &problem.template {
        LanguageTemplate::Rbac(t) => {
            if lang == Language::RbacReg {
                regularized(matrix_fit(), w.lambda, objectives::rbac_complexity(t))
            } else {
                matrix_fit()
            }
        }
        LanguageTemplate::BmRbac(t) => {
            regularized(matrix_fit(), w.lambda, objectives::bm_rbac_complexity(t))
        }
        LanguageTemplate::Abac(t) => {
            if lang == Language::AbacLog {
                regularized(log_fit(), w.lambda0, objectives::abac_complexity(t))
            } else {
                regularized(matrix_fit(), w.lambda, objectives::abac_complexity(t))
            }
        }
        LanguageTemplate::Xacml(t) => {
            if data.kind == DatasetKind::Matrix {
                regularized(matrix_fit(), w.lambda, t.complexity())
            } else {
                regularized(log_fit(), w.lambda0, t.complexity())
            }
        }
        LanguageTemplate::Starbac(t) => regularized(log_fit(), w.lambda0, t.complexity()),
    };
    problem.loss = loss;
    Ok(problem)
}

/// Result of mining one problem.
#[derive(Clone, Debug)]
pub struct Mined {
    pub problem: Problem,
    pub policy: MinedPolicy,
    pub outcome: MinerOutcome,
}

/// Seed of restart `i` under the master seed.
pub fn restart_seed(master: u64, i: usize) -> u64 {
    derive_seed(master, i as u64)
}

/// Options for [`mine_problem`].
#[derive(Default)]
pub struct MineOptions<'a> {
    /// A checkpoint of one of the restarts to continue from.
    pub resume: Option<Checkpoint>,
    /// Called with `(restart, checkpoint)` every `checkpoint_every` sweeps.
    pub on_checkpoint: Option<&'a (dyn Fn(usize, &Checkpoint) + Sync)>,
}

/// Runs `config.restarts` annealing runs in parallel and keeps the one with
/// the lowest final loss (earliest restart on ties).
pub fn mine_problem(
    config: &RunConfig,
    problem: Problem,
    seed: u64,
    opts: MineOptions<'_>,
) -> PipelineResult<Mined> {
    use rayon::prelude::*;
    config.schedule.validate()?;
    let compiled = problem.compile()?;
    let facts = Arc::clone(&problem.base().facts);
    let seeds: Vec<u64> = (0..config.restarts).map(|i| restart_seed(seed, i)).collect();
    if let Some(cp) = &opts.resume {
        require(seeds.contains(&cp.seed), || {
            format!("checkpoint seed {} is not a restart of master seed {seed}", cp.seed)
        })?;
    }
    let resume = Mutex::new(opts.resume);
    let outcomes = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| -> PipelineResult<MinerOutcome> {
            let cp = {
                let mut slot = resume.lock().expect("resume lock");
                if slot.as_ref().is_some_and(|c| c.seed == *s) {
                    slot.take()
                } else {
                    None
                }
            };
            let run = match cp {
                Some(cp) => MinerRun::resume(Arc::clone(&compiled), cp)?,
                None => MinerRun::new(Arc::clone(&compiled), &facts, config.schedule, *s)?,
            };
            let every = if opts.on_checkpoint.is_some() {
                config.checkpoint_every
            } else {
                0
            };
            Ok(run.run_to_end(every, |c| {
                if let Some(f) = opts.on_checkpoint {
                    f(i, c)
                }
            })?)
        })
        .collect::<Vec<_>>();
    let mut best: Option<MinerOutcome> = None;
    for o in outcomes {
        let o = o?;
        if best.as_ref().is_none_or(|b| o.loss < b.loss) {
            best = Some(o);
        }
    }
    let outcome = best.expect("at least one restart");
    Ok(Mined {
        policy: problem.extract(&outcome.interpretation),
        problem,
        outcome,
    })
}

/// Builds and mines on the requests selected by `train`.
pub fn mine(config: &RunConfig, data: &Dataset, train: &[usize], seed: u64) -> PipelineResult<Mined> {
    let problem = build_problem(config, data, train)?;
    mine_problem(config, problem, seed, MineOptions::default())
}

/// Metrics of `policy` on the requests selected by `test`. The over-grant
/// rate is measured on the dataset's undecided pairs, if any.
pub fn evaluate_policy(policy: &MinedPolicy, data: &Dataset, test: &[usize]) -> Metrics {
    let all = data.requests();
    let c = Confusion::from_pairs(test.iter().map(|i| {
        let r = &all[*i];
        (
            policy.grants(data, &r.user, &r.permission, r.context.as_ref()),
            r.allowed,
        )
    }));
    let mut m = Metrics::new(&c, policy.complexity() as f64);
    let undecided = data.undecided();
    if !undecided.is_empty() {
        let granted = undecided
            .iter()
            .filter(|(u, p)| policy.grants(data, u, p, None))
            .count();
        m.over_grant = Some(granted as f64 / undecided.len() as f64);
    }
    m
}

/// K-fold cross-validation of `config` on `data`: each fold mines on the
/// other folds' requests and is scored on its own.
pub fn crossval(config: &RunConfig, data: &Dataset, folds: usize, seed: u64) -> PipelineResult<CrossvalReport> {
    let n = data.requests().len();
    Ok(evaluation::crossval(n, folds, seed, |_, train, test, s| {
        mine(config, data, train, s).map(|m| evaluate_policy(&m.policy, data, test))
    })?)
}

/// Grid search over `config.grid`, scoring each cell by cross-validation.
pub fn grid_search(config: &RunConfig, data: &Dataset, seed: u64) -> PipelineResult<GridOutcome> {
    config.validate()?;
    Ok(evaluation::grid_search(
        &config.grid,
        config.grid_budget,
        config.fpr_cap,
        seed,
        |params| -> PipelineResult<Metrics> {
            let c = config.with(params)?;
            Ok(crossval(&c, data, config.folds, seed)?.mean)
        },
    )?)
}
