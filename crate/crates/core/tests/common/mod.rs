#![allow(dead_code)]

use polmine_core::expectation::{FactorDistribution, LossExpression};
use polmine_core::languages::abac::{build_abac, Attributes};
use polmine_core::languages::bm_rbac::build_bm_rbac;
use polmine_core::languages::rbac::build_rbac;
use polmine_core::languages::starbac::{build_starbac, campus, Entity, Instant, StarbacConfig};
use polmine_core::languages::xacml::build_xacml;
use polmine_core::languages::Template;
use polmine_core::logic::{Binding, FactId, FactSet, Interpretation};
use polmine_core::objectives::{
    abac_complexity, bm_rbac_complexity, log_loss, rbac_complexity, regularized,
    symmetric_difference_loss, Weights,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub const KINDS: [&str; 5] = ["rbac", "abac", "bm-rbac", "xacml", "starbac"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// A template with a handful of request bindings and a loss over them.
pub struct Instance {
    pub kind: &'static str,
    pub template: Template,
    pub requests: Vec<Binding>,
    pub loss: LossExpression,
}

fn labels(rng: &mut ChaCha8Rng, requests: &[Binding]) -> Vec<(Binding, bool)> {
    requests.iter().map(|b| (b.clone(), rng.gen_bool(0.5))).collect()
}

fn weights(rng: &mut ChaCha8Rng) -> Weights {
    Weights {
        lambda: rng.gen_range(0.0..1.0),
        lambda0: rng.gen_range(0.0..1.0),
        lambda11: rng.gen_range(0.5..2.0),
        lambda12: rng.gen_range(0.5..2.0),
        lambda2: rng.gen_range(0.0..0.5),
    }
}

fn rbac_instance(rng: &mut ChaCha8Rng) -> Instance {
    let (u, p) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
    let n = rng.gen_range(1..=2);
    let t = build_rbac(&names("u", u), &names("p", p), n).unwrap();
    let requests: Vec<Binding> = t
        .users
        .iter()
        .flat_map(|a| t.perms.iter().map(|b| t.request(a, b)))
        .collect();
    let fit = symmetric_difference_loss(&t.template.formula, labels(rng, &requests));
    let loss = regularized(fit, rng.gen_range(0.0..1.0), rbac_complexity(&t));
    Instance { kind: "rbac", template: t.template, requests, loss }
}

fn random_attributes(rng: &mut ChaCha8Rng, owners: &[String], attrs: &[String]) -> Attributes {
    owners
        .iter()
        .map(|o| {
            let set: BTreeSet<String> = attrs.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect();
            (o.clone(), set)
        })
        .collect()
}

fn abac_instance(rng: &mut ChaCha8Rng) -> Instance {
    let attrs = names("a", rng.gen_range(2..=3));
    let n = if attrs.len() == 2 { rng.gen_range(1..=3) } else { rng.gen_range(1..=2) };
    let (users, perms) = (names("u", 2), names("p", 2));
    let ua = random_attributes(rng, &users, &attrs);
    let pa = random_attributes(rng, &perms, &attrs);
    let t = build_abac(&users, &perms, &ua, &pa, &attrs, n).unwrap();
    let requests: Vec<Binding> = users
        .iter()
        .flat_map(|a| perms.iter().map(|b| t.request(a, b)))
        .collect();
    let (mut allowed, mut denied, mut undecided) = (Vec::new(), Vec::new(), Vec::new());
    for b in &requests {
        match rng.gen_range(0..3) {
            0 => allowed.push(b.clone()),
            1 => denied.push(b.clone()),
            _ => undecided.push(b.clone()),
        }
    }
    let w = weights(rng);
    let fit = log_loss(&t.template.formula, allowed, denied, undecided, &w);
    let loss = regularized(fit, w.lambda0, abac_complexity(&t));
    Instance { kind: "abac", template: t.template, requests, loss }
}

fn bm_rbac_instance(rng: &mut ChaCha8Rng) -> Instance {
    let (users, perms) = (names("u", 3), names("p", 2));
    let aa: Vec<(String, String)> = users
        .iter()
        .map(|u| (u.clone(), ["x", "y"].choose(rng).unwrap().to_string()))
        .collect();
    let t = build_bm_rbac(&users, &perms, &aa, 2).unwrap();
    let requests: Vec<Binding> = users
        .iter()
        .flat_map(|a| perms.iter().map(|b| t.rbac.request(a, b)))
        .collect();
    let fit = symmetric_difference_loss(&t.rbac.template.formula, labels(rng, &requests));
    let loss = regularized(fit, rng.gen_range(0.1..1.0), bm_rbac_complexity(&t));
    Instance { kind: "bm-rbac", template: t.rbac.template, requests, loss }
}

/// Every subset of `attrs`, named by its members.
pub fn all_requests(attrs: &[String]) -> Vec<(String, BTreeSet<String>)> {
    (0..1usize << attrs.len())
        .map(|mask| {
            let set: BTreeSet<String> = attrs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, a)| a.clone())
                .collect();
            (format!("q{mask}"), set)
        })
        .collect()
}

fn xacml_instance(rng: &mut ChaCha8Rng) -> Instance {
    let attrs = names("a", rng.gen_range(1..=2));
    let breadth = if attrs.len() == 1 { rng.gen_range(1..=2) } else { 1 };
    let reqs = all_requests(&attrs);
    let t = build_xacml(&attrs, &reqs, 1, breadth).unwrap();
    let requests: Vec<Binding> = reqs.iter().map(|(n, _)| t.request(n)).collect();
    let fit = symmetric_difference_loss(&t.template.formula, labels(rng, &requests));
    let loss = regularized(fit, rng.gen_range(0.0..1.0), t.complexity());
    Instance { kind: "xacml", template: t.template, requests, loss }
}

pub fn random_entities(rng: &mut ChaCha8Rng, prefix: &str, n: usize) -> Vec<Entity> {
    (0..n)
        .map(|i| {
            let (x, y) = (rng.gen_range(1..=9) as f64, rng.gen_range(1..=9) as f64);
            Entity::new(&format!("{prefix}{i}"), x, y)
        })
        .collect()
}

pub fn random_instant(rng: &mut ChaCha8Rng) -> Instant {
    Instant::new(rng.gen_range(1..=12), rng.gen_range(1..=31), rng.gen_range(1..=24))
}

fn starbac_instance(rng: &mut ChaCha8Rng) -> Instance {
    let two = rng.gen_bool(0.5);
    let config = StarbacConfig {
        roles: if two { 2 } else { 1 },
        user_spatial: 1,
        perm_spatial: 1,
        user_temporal: 0,
        perm_temporal: 0,
        max_distance: if two { 0 } else { 1 },
        ..StarbacConfig::default()
    };
    let users = random_entities(rng, "u", 2);
    let perms = random_entities(rng, "o", 2);
    let instants: Vec<Instant> = {
        let mut set = BTreeSet::new();
        while set.len() < 2 {
            set.insert(random_instant(rng));
        }
        set.into_iter().collect()
    };
    let t = build_starbac(&users, &perms, &instants, &campus(), &config).unwrap();
    let mut requests = Vec::new();
    for i in &instants {
        for u in &users {
            for p in &perms {
                requests.push(t.request(*i, &u.name, &p.name));
            }
        }
    }
    let (mut allowed, mut denied) = (Vec::new(), Vec::new());
    for b in &requests {
        if rng.gen_bool(0.5) {
            allowed.push(b.clone());
        } else {
            denied.push(b.clone());
        }
    }
    let w = weights(rng);
    let fit = log_loss(&t.template.formula, allowed, denied, Vec::new(), &w);
    let loss = regularized(fit, w.lambda0, t.complexity());
    Instance { kind: "starbac", template: t.template, requests, loss }
}

pub fn random_instance(kind: &str, rng: &mut ChaCha8Rng) -> Instance {
    match kind {
        "rbac" => rbac_instance(rng),
        "abac" => abac_instance(rng),
        "bm-rbac" => bm_rbac_instance(rng),
        "xacml" => xacml_instance(rng),
        "starbac" => starbac_instance(rng),
        other => panic!("unknown kind {other}"),
    }
}

/// Random tables; a quarter of them put zero mass on some value and some
/// are point masses.
pub fn random_q(facts: &FactSet, rng: &mut ChaCha8Rng) -> FactorDistribution {
    let pmfs = facts
        .ids()
        .map(|id| {
            let n = facts.range(id).len();
            let mut p: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0f64).powi(2)).collect();
            match rng.gen_range(0..8) {
                0 => {
                    p.iter_mut().for_each(|x| *x = 0.0);
                    p[rng.gen_range(0..n)] = 1.0;
                }
                1 | 2 if n > 1 => p[rng.gen_range(0..n)] = 0.0,
                _ => {}
            }
            let s: f64 = p.iter().sum();
            if s == 0.0 {
                p[0] = 1.0;
                return p;
            }
            p.into_iter().map(|x| x / s).collect()
        })
        .collect();
    FactorDistribution::from_pmfs(pmfs)
}

pub fn sample(q: &FactorDistribution, facts: &FactSet, rng: &mut ChaCha8Rng) -> Interpretation {
    Interpretation::new(
        facts
            .ids()
            .map(|id| {
                let u: f64 = rng.gen();
                let pmf = q.pmf(id);
                let mut acc = 0.0;
                for (i, p) in pmf.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return i as u32;
                    }
                }
                pmf.iter().rposition(|p| *p > 0.0).unwrap_or(0) as u32
            })
            .collect(),
    )
}

pub fn uniform_interpretation(facts: &FactSet, rng: &mut ChaCha8Rng) -> Interpretation {
    Interpretation::new(
        facts
            .ids()
            .map(|id: FactId| rng.gen_range(0..facts.range(id).len()) as u32)
            .collect(),
    )
}
