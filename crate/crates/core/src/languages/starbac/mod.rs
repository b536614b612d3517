//! RBAC with spatial and temporal constraints. A role is granted to a user
//! and a permission when each party satisfies the role's constraints for
//! that party at the request's instant.

pub mod fixture;
pub mod geometry;
pub mod periodic;

use super::{check_unique, syms, Template, TemplateError};
use crate::expectation::LossExpression;
use crate::logic::{Binding, Formula, Interpretation, RandomFact, StructureBuilder, Term, Value};
pub use geometry::{campus, position_name, Building};
pub use periodic::{Instant, PeriodicExpression};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StarbacConfig {
    pub roles: usize,
    pub user_spatial: usize,
    pub perm_spatial: usize,
    pub user_temporal: usize,
    pub perm_temporal: usize,
    pub max_distance: u32,
    /// Hour window of every temporal slot.
    pub window: u32,
    pub spatial_weight: f64,
    /// Weights of months, days and hours in the temporal complexity.
    pub temporal_weights: [f64; 3],
}

impl Default for StarbacConfig {
    fn default() -> Self {
        StarbacConfig {
            roles: 5,
            user_spatial: 2,
            perm_spatial: 2,
            user_temporal: 2,
            perm_temporal: 0,
            max_distance: 10,
            window: 1,
            spatial_weight: 1.0,
            temporal_weights: [1.0, 1.0, 1.0],
        }
    }
}

/// A user or object with a position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

impl Entity {
    pub fn new(name: &str, x: f64, y: f64) -> Self {
        Entity {
            name: name.to_string(),
            x,
            y,
        }
    }
}

/// `isWithin(Loc(o), distance, building)`, negated when `negated` holds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialConstraint {
    pub negated: bool,
    pub distance: u32,
    pub building: String,
}

impl SpatialConstraint {
    pub fn within(distance: u32, building: &str) -> Self {
        SpatialConstraint {
            negated: false,
            distance,
            building: building.to_string(),
        }
    }

    pub fn outside(distance: u32, building: &str) -> Self {
        SpatialConstraint {
            negated: true,
            ..Self::within(distance, building)
        }
    }

    pub fn holds(&self, buildings: &[Building], x: f64, y: f64) -> bool {
        let inside = buildings
            .iter()
            .find(|b| b.name == self.building)
            .is_some_and(|b| b.within(x, y, self.distance as f64));
        inside != self.negated
    }
}

/// Constraints on one party. `None` imposes nothing; `Some` requires one of
/// the listed alternatives, so an empty list is unsatisfiable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyConstraints {
    pub spatial: Option<Vec<SpatialConstraint>>,
    pub temporal: Option<Vec<PeriodicExpression>>,
}

impl PartyConstraints {
    pub fn holds(&self, buildings: &[Building], t: Instant, x: f64, y: f64) -> bool {
        self.spatial
            .as_ref()
            .is_none_or(|cs| cs.iter().any(|c| c.holds(buildings, x, y)))
            && self
                .temporal
                .as_ref()
                .is_none_or(|ps| ps.iter().any(|p| p.satisfied_by(t)))
    }

    fn complexity(&self) -> usize {
        self.spatial.as_ref().map_or(0, Vec::len)
            + self.temporal.as_ref().map_or(0, |ps| {
                ps.iter()
                    .map(|p| p.months.len() + p.days.len() + p.hours.len())
                    .sum()
            })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarbacRole {
    pub user: PartyConstraints,
    pub permission: PartyConstraints,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StarbacPolicy {
    pub buildings: Vec<Building>,
    pub roles: Vec<StarbacRole>,
}

impl StarbacPolicy {
    pub fn grants(&self, t: Instant, user: (f64, f64), object: (f64, f64)) -> bool {
        self.roles.iter().any(|r| {
            r.user.holds(&self.buildings, t, user.0, user.1)
                && r.permission.holds(&self.buildings, t, object.0, object.1)
        })
    }

    /// Spatial constraints plus month, day and hour memberships.
    pub fn complexity(&self) -> usize {
        self.roles
            .iter()
            .map(|r| r.user.complexity() + r.permission.complexity())
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Party {
    User,
    Permission,
}

impl Party {
    fn tag(self) -> &'static str {
        match self {
            Party::User => "u",
            Party::Permission => "p",
        }
    }

    fn var(self) -> &'static str {
        match self {
            Party::User => "u",
            Party::Permission => "p",
        }
    }

    fn loc(self) -> &'static str {
        match self {
            Party::User => "LocU",
            Party::Permission => "LocP",
        }
    }
}

#[derive(Clone, Debug)]
pub struct StarbacTemplate {
    pub template: Template,
    pub config: StarbacConfig,
    pub buildings: Vec<Building>,
    /// Constraint denoted by each value of the `AREA` sort.
    pub areas: BTreeMap<String, SpatialConstraint>,
}

/// `AREA` value of an unused spatial slot; it contains no position.
pub const NO_AREA: &str = "none";

/// Name of the `AREA` value denoting `c`.
pub fn area_name(c: &SpatialConstraint) -> String {
    format!("{}{}@{}", if c.negated { "out" } else { "in" }, c.distance, c.building)
}

fn side_id(role: usize, party: Party) -> String {
    format!("r{}.{}", role + 1, party.tag())
}

fn spatial_slot(role: usize, party: Party, k: usize) -> String {
    format!("r{}.{}.s{k}", role + 1, party.tag())
}

fn temporal_slot(role: usize, party: Party, k: usize) -> String {
    format!("r{}.{}.t{k}", role + 1, party.tag())
}

impl StarbacConfig {
    fn slots(&self, party: Party) -> (usize, usize) {
        match party {
            Party::User => (self.user_spatial, self.user_temporal),
            Party::Permission => (self.perm_spatial, self.perm_temporal),
        }
    }

    fn validate(&self) -> Result<(), TemplateError> {
        if self.roles == 0 {
            return Err(TemplateError::Parameters("at least one role is required".into()));
        }
        if !(1..=periodic::HOURS).contains(&self.window) {
            return Err(TemplateError::Parameters(format!(
                "window {} outside 1..=24",
                self.window
            )));
        }
        let ws = std::iter::once(self.spatial_weight).chain(self.temporal_weights);
        if ws.into_iter().any(|w| !(w >= 0.0 && w.is_finite())) {
            return Err(TemplateError::Parameters("complexity weights must be non-negative".into()));
        }
        Ok(())
    }
}

fn val(s: &str) -> Term {
    Term::val(s)
}

fn spatial_formula(role: usize, party: Party, slots: usize) -> Formula {
    let side = side_id(role, party);
    let alternatives = (0..slots)
        .map(|k| {
            let s = spatial_slot(role, party, k);
            Formula::rel(
                "inArea",
                vec![
                    Term::app(party.loc(), vec![Term::var(party.var())]),
                    Term::app("SArea", vec![val(&s)]),
                ],
            )
        })
        .collect();
    Formula::or(vec![
        Formula::not(Formula::rel("SpOn", vec![val(&side)])),
        Formula::or(alternatives),
    ])
}

/// Membership of the instant's month, day and hour in the slot's sets.
pub(crate) fn periodic_formula(slot: &str) -> Formula {
    let t = || Term::var("t");
    let s = || val(slot);
    let unit = |sym: &str, of: &str, n: u32| {
        Formula::or(
            (1..=n as i64)
                .map(|v| {
                    Formula::and(vec![
                        Formula::rel(sym, vec![s(), Term::val(v)]),
                        Formula::eq(Term::app(of, vec![t()]), Term::val(v)),
                    ])
                })
                .collect(),
        )
    };
    let hours = Formula::or(
        (1..=periodic::HOURS as i64)
            .map(|h| {
                let hour = Term::app("hourOf", vec![t()]);
                Formula::and(vec![
                    Formula::rel("PH", vec![s(), Term::val(h)]),
                    Formula::le(Term::val(h), hour.clone()),
                    Formula::lt(hour, Term::add(Term::val(h), Term::app("window", vec![s()]))),
                ])
            })
            .collect(),
    );
    Formula::and(vec![
        unit("PM", "monthOf", periodic::MONTHS),
        unit("PD", "dayOf", periodic::DAYS),
        hours,
    ])
}

fn temporal_formula(role: usize, party: Party, slots: usize) -> Formula {
    let side = side_id(role, party);
    Formula::or(vec![
        Formula::not(Formula::rel("TOn", vec![val(&side)])),
        Formula::or(
            (0..slots)
                .map(|k| periodic_formula(&temporal_slot(role, party, k)))
                .collect(),
        ),
    ])
}

fn party_formula(cfg: &StarbacConfig, role: usize, party: Party) -> Formula {
    let (sp, tp) = cfg.slots(party);
    let mut parts = Vec::new();
    if sp > 0 {
        parts.push(spatial_formula(role, party, sp));
    }
    if tp > 0 {
        parts.push(temporal_formula(role, party, tp));
    }
    Formula::and(parts)
}

fn ints(range: std::ops::RangeInclusive<i64>) -> Vec<Value> {
    range.map(Value::Int).collect()
}

/// Adds the calendar sorts, the instant carrier and the rigid calendar
/// functions.
pub(crate) fn add_calendar(
    b: &mut StructureBuilder,
    instants: &[Instant],
) -> Result<(), TemplateError> {
    let names: Vec<String> = instants.iter().map(Instant::name).collect();
    check_unique("instant", &names)?;
    if let Some(t) = instants.iter().find(|t| !t.is_valid()) {
        return Err(TemplateError::Data(format!("instant {} outside the calendar", t.name())));
    }
    let table = |f: fn(&Instant) -> u32| {
        instants
            .iter()
            .map(move |t| (vec![Value::sym(&t.name())], Value::Int(f(t) as i64)))
    };
    b.sort("INSTANTS", syms(&names))?
        .sort("MONTHS", ints(1..=periodic::MONTHS as i64))?
        .sort("DAYS", ints(1..=periodic::DAYS as i64))?
        .sort("HOURS", ints(1..=periodic::HOURS as i64))?
        .rigid_function("monthOf", &["INSTANTS"], "MONTHS", table(|t| t.month))?
        .rigid_function("dayOf", &["INSTANTS"], "DAYS", table(|t| t.day))?
        .rigid_function("hourOf", &["INSTANTS"], "HOURS", table(|t| t.hour))?;
    Ok(())
}

pub fn build_starbac(
    users: &[Entity],
    perms: &[Entity],
    instants: &[Instant],
    buildings: &[Building],
    config: &StarbacConfig,
) -> Result<StarbacTemplate, TemplateError> {
    config.validate()?;
    let user_names: Vec<&str> = users.iter().map(|e| e.name.as_str()).collect();
    let perm_names: Vec<&str> = perms.iter().map(|e| e.name.as_str()).collect();
    check_unique("user", &user_names)?;
    check_unique("permission", &perm_names)?;
    let bnames: Vec<&str> = buildings.iter().map(|b| b.name.as_str()).collect();
    check_unique("building", &bnames)?;
    if let Some(e) = users.iter().chain(perms).find(|e| !(e.x.is_finite() && e.y.is_finite())) {
        return Err(TemplateError::Data(format!("position of `{}` is not finite", e.name)));
    }
    let positions: BTreeMap<String, (f64, f64)> = users
        .iter()
        .chain(perms)
        .map(|e| (position_name(e.x, e.y), (e.x, e.y)))
        .collect();
    let pos_names: Vec<&String> = positions.keys().collect();

    let mut b = StructureBuilder::new();
    b.sort("USERS", syms(&user_names))?
        .sort("PERMS", syms(&perm_names))?
        .sort("POS", syms(&pos_names))?;
    add_calendar(&mut b, instants)?;
    let loc = |es: &[Entity]| {
        es.iter()
            .map(|e| (vec![Value::sym(&e.name)], Value::sym(&position_name(e.x, e.y))))
            .collect::<Vec<_>>()
    };
    b.rigid_function("LocU", &["USERS"], "POS", loc(users))?
        .rigid_function("LocP", &["PERMS"], "POS", loc(perms))?;
    let mut areas = BTreeMap::new();
    let mut area_names = vec![NO_AREA.to_string()];
    for negated in [false, true] {
        for d in 0..=config.max_distance {
            for bl in buildings {
                let c = SpatialConstraint {
                    negated,
                    distance: d,
                    building: bl.name.clone(),
                };
                area_names.push(area_name(&c));
                areas.insert(area_name(&c), c);
            }
        }
    }
    let mut inside = Vec::new();
    for (name, (x, y)) in &positions {
        for a in &area_names[1..] {
            if areas[a].holds(buildings, *x, *y) {
                inside.push(vec![Value::sym(name), Value::sym(a)]);
            }
        }
    }

    let parties = [Party::User, Party::Permission];
    let mut sp_sides = Vec::new();
    let mut sp_slots = Vec::new();
    let mut tp_sides = Vec::new();
    let mut tp_slots = Vec::new();
    for r in 0..config.roles {
        for p in parties {
            let (sp, tp) = config.slots(p);
            if sp > 0 {
                sp_sides.push(side_id(r, p));
                sp_slots.extend((0..sp).map(|k| spatial_slot(r, p, k)));
            }
            if tp > 0 {
                tp_sides.push(side_id(r, p));
                tp_slots.extend((0..tp).map(|k| temporal_slot(r, p, k)));
            }
        }
    }
    if !sp_slots.is_empty() {
        b.sort("AREA", syms(&area_names))?
            .rigid_relation("inArea", &["POS", "AREA"], inside)?
            .sort("SPSIDE", syms(&sp_sides))?
            .sort("SPSLOT", syms(&sp_slots))?
            .flexible_relation("SpOn", &["SPSIDE"])?
            .flexible_function("SArea", &["SPSLOT"], "AREA")?;
    }
    if !tp_slots.is_empty() {
        b.sort("TSIDE", syms(&tp_sides))?
            .sort("TSLOT", syms(&tp_slots))?
            .sort("WIN", ints(1..=periodic::HOURS as i64))?
            .flexible_relation("TOn", &["TSIDE"])?
            .flexible_relation("PM", &["TSLOT", "MONTHS"])?
            .flexible_relation("PD", &["TSLOT", "DAYS"])?
            .flexible_relation("PH", &["TSLOT", "HOURS"])?
            .rigid_function(
                "window",
                &["TSLOT"],
                "WIN",
                tp_slots
                    .iter()
                    .map(|s| (vec![Value::sym(s)], Value::Int(config.window as i64))),
            )?;
    }
    let structure = b.build()?;
    let formula = Formula::or(
        (0..config.roles)
            .map(|r| {
                Formula::and(vec![
                    party_formula(config, r, Party::User),
                    party_formula(config, r, Party::Permission),
                ])
            })
            .collect(),
    );
    Ok(StarbacTemplate {
        template: Template::new(
            structure,
            formula,
            &[("t", "INSTANTS"), ("u", "USERS"), ("p", "PERMS")],
        )?,
        config: config.clone(),
        buildings: buildings.to_vec(),
        areas,
    })
}

impl StarbacTemplate {
    fn holds(&self, interp: &Interpretation, sym: &str, args: &[Value]) -> bool {
        interp.holds(&self.template.facts, sym, args)
    }

    fn function(&self, interp: &Interpretation, sym: &str, slot: &str) -> Value {
        let facts = &self.template.facts;
        let id = facts.lookup(sym, &[Value::sym(slot)]).expect("template fact");
        interp.value(facts, id).clone()
    }

    fn extract_party(&self, interp: &Interpretation, role: usize, party: Party) -> PartyConstraints {
        let (sp, tp) = self.config.slots(party);
        let side = Value::sym(&side_id(role, party));
        let spatial = (sp > 0 && self.holds(interp, "SpOn", std::slice::from_ref(&side))).then(|| {
            (0..sp)
                .filter_map(|k| {
                    let a = self.function(interp, "SArea", &spatial_slot(role, party, k));
                    self.areas.get(&a.to_string()).cloned()
                })
                .collect()
        });
        let temporal = (tp > 0 && self.holds(interp, "TOn", &[side])).then(|| {
            (0..tp)
                .map(|k| temporal_slot(role, party, k))
                .map(|s| {
                    let set = |sym: &str, n: u32| -> BTreeSet<u32> {
                        (1..=n)
                            .filter(|v| {
                                self.holds(interp, sym, &[Value::sym(&s), Value::Int(*v as i64)])
                            })
                            .collect()
                    };
                    PeriodicExpression {
                        months: set("PM", periodic::MONTHS),
                        days: set("PD", periodic::DAYS),
                        hours: set("PH", periodic::HOURS),
                        window: self.config.window,
                    }
                    .normalized()
                })
                .collect()
        });
        PartyConstraints { spatial, temporal }
    }

    pub fn extract(&self, interp: &Interpretation) -> StarbacPolicy {
        StarbacPolicy {
            buildings: self.buildings.clone(),
            roles: (0..self.config.roles)
                .map(|r| StarbacRole {
                    user: self.extract_party(interp, r, Party::User),
                    permission: self.extract_party(interp, r, Party::Permission),
                })
                .collect(),
        }
    }

    /// Interpretation realizing `policy`, which must fit the slot budget.
    /// Periodic expressions are normalized first; this needs window 1
    /// unless the expression already uses the template's window.
    pub fn encode(&self, policy: &StarbacPolicy) -> Result<Interpretation, TemplateError> {
        if policy.roles.len() > self.config.roles {
            return Err(TemplateError::Encoding(format!(
                "{} roles exceed the bound {}",
                policy.roles.len(),
                self.config.roles
            )));
        }
        let facts = &self.template.facts;
        let mut interp = Interpretation::zeros(facts);
        for (r, role) in policy.roles.iter().enumerate() {
            for (party, cs) in [(Party::User, &role.user), (Party::Permission, &role.permission)] {
                self.encode_party(&mut interp, r, party, cs)?;
            }
        }
        Ok(interp)
    }

    fn encode_party(
        &self,
        interp: &mut Interpretation,
        role: usize,
        party: Party,
        cs: &PartyConstraints,
    ) -> Result<(), TemplateError> {
        let facts = &self.template.facts;
        let (sp, tp) = self.config.slots(party);
        let side = Value::sym(&side_id(role, party));
        let too_many = |what: &str, n: usize, cap: usize| {
            TemplateError::Encoding(format!(
                "{n} {what} constraints for {} exceed {cap} slots",
                side_id(role, party)
            ))
        };
        if let Some(list) = &cs.spatial {
            if list.len() > sp || sp == 0 {
                return Err(too_many("spatial", list.len(), sp));
            }
            interp.set_true(facts, "SpOn", std::slice::from_ref(&side))?;
            for (k, c) in list.iter().enumerate() {
                let s = Value::sym(&spatial_slot(role, party, k));
                let area = area_name(c);
                if !self.areas.contains_key(&area) {
                    return Err(TemplateError::Encoding(format!(
                        "no area `{area}` within distance {} of the known buildings",
                        self.config.max_distance
                    )));
                }
                interp.assign(facts, &RandomFact::new("SArea", vec![s]), &Value::sym(&area))?;
            }
        }
        if let Some(list) = &cs.temporal {
            if list.len() > tp || tp == 0 {
                return Err(too_many("temporal", list.len(), tp));
            }
            interp.set_true(facts, "TOn", &[side])?;
            for (k, p) in list.iter().enumerate() {
                let s = Value::sym(&temporal_slot(role, party, k));
                let p = if p.window == self.config.window {
                    p.clone()
                } else if self.config.window == 1 {
                    p.normalized()
                } else {
                    return Err(TemplateError::Encoding(format!(
                        "window {} does not match the template window {}",
                        p.window, self.config.window
                    )));
                };
                for (sym, set) in [("PM", &p.months), ("PD", &p.days), ("PH", &p.hours)] {
                    for v in set {
                        interp.set_true(facts, sym, &[s.clone(), Value::Int(*v as i64)])?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn request(&self, instant: Instant, user: &str, perm: &str) -> crate::logic::Binding {
        self.template
            .binding(&[Value::sym(&instant.name()), Value::sym(user), Value::sym(perm)])
    }

    /// `SpOn · #{used area slots}` weighted by the spatial weight plus, per
    /// temporal slot, `TOn·(w_m ΣPM + w_d ΣPD + w_h ΣPH)`. With window 1 this equals the
    /// complexity of the extracted policy under unit weights.
    pub fn complexity(&self) -> LossExpression {
        let f = |sym: &str, args: Vec<Value>| LossExpression::fact(sym, args);
        let mut terms = Vec::new();
        let [wm, wd, wh] = self.config.temporal_weights;
        for r in 0..self.config.roles {
            for party in [Party::User, Party::Permission] {
                let (sp, tp) = self.config.slots(party);
                let side = Value::sym(&side_id(r, party));
                if sp > 0 {
                    terms.push(LossExpression::Product(vec![
                        LossExpression::Const(self.config.spatial_weight),
                        f("SpOn", vec![side.clone()]),
                        LossExpression::Sum(
                            (0..sp)
                                .map(|k| {
                                    let slot = Term::val(spatial_slot(r, party, k).as_str());
                                    LossExpression::formula(
                                        Formula::not(Formula::eq(
                                            Term::app("SArea", vec![slot]),
                                            Term::val(NO_AREA),
                                        )),
                                        Binding::new(),
                                    )
                                })
                                .collect(),
                        ),
                    ]));
                }
                for k in 0..tp {
                    let s = Value::sym(&temporal_slot(r, party, k));
                    let members = |sym: &str, n: u32, w: f64| {
                        LossExpression::scale(
                            w,
                            LossExpression::Sum(
                                (1..=n as i64)
                                    .map(|v| f(sym, vec![s.clone(), Value::Int(v)]))
                                    .collect(),
                            ),
                        )
                    };
                    terms.push(LossExpression::Product(vec![
                        f("TOn", vec![side.clone()]),
                        LossExpression::Sum(vec![
                            members("PM", periodic::MONTHS, wm),
                            members("PD", periodic::DAYS, wd),
                            members("PH", periodic::HOURS, wh),
                        ]),
                    ]));
                }
            }
        }
        LossExpression::Sum(terms)
    }
}
