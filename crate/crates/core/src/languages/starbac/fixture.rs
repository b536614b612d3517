//! The synthetic five-role campus policy and a labelled request generator.

use super::geometry::campus;
use super::periodic::{Instant, PeriodicExpression, DAYS, HOURS, MONTHS};
use super::{PartyConstraints, SpatialConstraint, StarbacPolicy, StarbacRole};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Positions are sampled on the integer grid `GRID × GRID`, which covers the
/// campus' bounding box.
pub const GRID: std::ops::RangeInclusive<i32> = 1..=9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthRequest {
    pub instant: Instant,
    pub user: (f64, f64),
    pub object: (f64, f64),
    pub allowed: bool,
}

impl SynthRequest {
    pub fn user_name(&self) -> String {
        entity_name("u", self.user)
    }

    pub fn object_name(&self) -> String {
        entity_name("o", self.object)
    }
}

pub fn entity_name(prefix: &str, (x, y): (f64, f64)) -> String {
    format!("{prefix}{x}_{y}")
}

fn dist(name: &str, (x, y): (f64, f64)) -> f64 {
    campus()
        .into_iter()
        .find(|b| b.name == name)
        .map(|b| b.distance(x, y))
        .expect("campus building")
}

const EPS: f64 = 1e-9;

/// Direct evaluation of the campus policy.
pub fn ground_truth(t: Instant, user: (f64, f64), object: (f64, f64)) -> bool {
    let near = |b: &str, p, d: f64| dist(b, p) <= d + EPS;
    let (day, hour) = (t.day, t.hour);
    let role1 = near("ComputerRoom", user, 1.0)
        && (near("ComputerRoom", object, 0.0) || near("Laboratory", object, 0.0))
        && day % 2 == 1
        && (9..=17).contains(&hour);
    let role2 = !near("Library", user, 0.0)
        && near("Library", object, 1.0)
        && ((day < 10 && (15..=20).contains(&hour)) || (day > 15 && (9..=12).contains(&hour)));
    let role3 = near("Main", user, 3.0) && near("Main", object, 3.0);
    let role4 = near("Library", user, 0.0)
        && !near("Library", object, 0.0)
        && day < 15
        && hour <= 12;
    let area = |p| {
        near("Main", p, 0.0)
            || near("Library", p, 1.0)
            || near("Laboratory", p, 0.0)
            || near("ComputerRoom", p, 2.0)
            || near("Station", p, 0.0)
    };
    let role5 = area(user) && area(object) && day < 15 && hour <= 12;
    role1 || role2 || role3 || role4 || role5
}

fn every_month() -> std::ops::RangeInclusive<u32> {
    1..=MONTHS
}

/// The campus policy in template form. Needs five spatial slots per party
/// and two temporal slots on the user side.
pub fn reference_policy() -> StarbacPolicy {
    let pe = |days: Vec<u32>, hours: std::ops::RangeInclusive<u32>| {
        PeriodicExpression::new(every_month(), days, hours, 1)
    };
    let area = vec![
        SpatialConstraint::within(0, "Main"),
        SpatialConstraint::within(1, "Library"),
        SpatialConstraint::within(0, "Laboratory"),
        SpatialConstraint::within(2, "ComputerRoom"),
        SpatialConstraint::within(0, "Station"),
    ];
    let early = || Some(vec![pe((1..15).collect(), 1..=12)]);
    StarbacPolicy {
        buildings: campus(),
        roles: vec![
            StarbacRole {
                user: PartyConstraints {
                    spatial: Some(vec![SpatialConstraint::within(1, "ComputerRoom")]),
                    temporal: Some(vec![pe((1..=DAYS).step_by(2).collect(), 9..=17)]),
                },
                permission: PartyConstraints {
                    spatial: Some(vec![
                        SpatialConstraint::within(0, "ComputerRoom"),
                        SpatialConstraint::within(0, "Laboratory"),
                    ]),
                    temporal: None,
                },
            },
            StarbacRole {
                user: PartyConstraints {
                    spatial: Some(vec![SpatialConstraint::outside(0, "Library")]),
                    temporal: Some(vec![
                        pe((1..10).collect(), 15..=20),
                        pe((16..=DAYS).collect(), 9..=12),
                    ]),
                },
                permission: PartyConstraints {
                    spatial: Some(vec![SpatialConstraint::within(1, "Library")]),
                    temporal: None,
                },
            },
            StarbacRole {
                user: PartyConstraints {
                    spatial: Some(vec![SpatialConstraint::within(3, "Main")]),
                    temporal: None,
                },
                permission: PartyConstraints {
                    spatial: Some(vec![SpatialConstraint::within(3, "Main")]),
                    temporal: None,
                },
            },
            StarbacRole {
                user: PartyConstraints {
                    spatial: Some(vec![SpatialConstraint::within(0, "Library")]),
                    temporal: early(),
                },
                permission: PartyConstraints {
                    spatial: Some(vec![SpatialConstraint::outside(0, "Library")]),
                    temporal: None,
                },
            },
            StarbacRole {
                user: PartyConstraints {
                    spatial: Some(area.clone()),
                    temporal: early(),
                },
                permission: PartyConstraints {
                    spatial: Some(area),
                    temporal: None,
                },
            },
        ],
    }
}

/// `count` requests with uniform instants and uniform grid positions,
/// labelled by [`ground_truth`].
pub fn generate(seed: u64, count: usize) -> Vec<SynthRequest> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pos = |rng: &mut ChaCha8Rng| (rng.gen_range(GRID) as f64, rng.gen_range(GRID) as f64);
    (0..count)
        .map(|_| {
            let instant = Instant::new(
                rng.gen_range(1..=MONTHS),
                rng.gen_range(1..=DAYS),
                rng.gen_range(1..=HOURS),
            );
            let user = pos(&mut rng);
            let object = pos(&mut rng);
            SynthRequest {
                instant,
                user,
                object,
                allowed: ground_truth(instant, user, object),
            }
        })
        .collect()
}
