//! Fixtures shared by the benchmarks.

use polmine_core::io::{Context, Dataset, Language, Request, RunConfig};
use polmine_core::languages::starbac::fixture::generate;
use polmine_core::pipeline::{build_problem, Problem};
use std::collections::{BTreeMap, BTreeSet};

/// A deterministic user-permission matrix with a block structure.
pub fn block_matrix(users: usize, perms: usize) -> Dataset {
    let mut m = BTreeSet::new();
    for u in 0..users {
        for p in 0..perms {
            if (u % 3 == p % 3) || (u % 5 == 0 && p < perms / 4) {
                m.insert((format!("u{u}"), format!("p{p}")));
            }
        }
    }
    Dataset::from_matrix(m, BTreeMap::new(), BTreeMap::new())
}

pub fn starbac_log(count: usize) -> Dataset {
    let log = generate(7, count)
        .into_iter()
        .map(|r| Request {
            user: r.user_name(),
            permission: r.object_name(),
            allowed: r.allowed,
            context: Some(Context { instant: r.instant, user_pos: r.user, perm_pos: r.object }),
        })
        .collect();
    Dataset::from_log(log, BTreeMap::new(), BTreeMap::new()).expect("synthetic log is consistent")
}

pub fn problem(config: &RunConfig, data: &Dataset) -> Problem {
    let all: Vec<usize> = (0..data.requests().len()).collect();
    build_problem(config, data, &all).expect("benchmark problem builds")
}

pub fn rbac(size: usize) -> RunConfig {
    let mut c = RunConfig::new(Language::Rbac);
    c.size = size;
    c
}
