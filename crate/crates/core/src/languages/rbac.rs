use super::{check_unique, syms, Template, TemplateError};
use crate::logic::{Formula, Interpretation, StructureBuilder, Term, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// `⋁_i UA(u, r_i) ∧ PA(r_i, p)` over `N` rigid role constants.
#[derive(Clone, Debug)]
pub struct RbacTemplate {
    pub template: Template,
    pub users: Vec<String>,
    pub perms: Vec<String>,
    pub roles: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbacRole {
    pub name: String,
    pub users: BTreeSet<String>,
    pub permissions: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RbacPolicy {
    pub roles: Vec<RbacRole>,
}

impl RbacPolicy {
    pub fn grants(&self, user: &str, perm: &str) -> bool {
        self.roles
            .iter()
            .any(|r| r.users.contains(user) && r.permissions.contains(perm))
    }

    /// Number of user-role and role-permission assignments.
    pub fn complexity(&self) -> usize {
        self.roles
            .iter()
            .map(|r| r.users.len() + r.permissions.len())
            .sum()
    }
}

pub(crate) fn role_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("r{i}")).collect()
}

pub fn build_rbac(users: &[String], perms: &[String], n: usize) -> Result<RbacTemplate, TemplateError> {
    let mut b = StructureBuilder::new();
    add_rbac_symbols(&mut b, users, perms, n)?;
    rbac_from_builder(b, users, perms, n)
}

pub(crate) fn add_rbac_symbols(
    b: &mut StructureBuilder,
    users: &[String],
    perms: &[String],
    n: usize,
) -> Result<(), TemplateError> {
    if n == 0 {
        return Err(TemplateError::Parameters("at least one role is required".into()));
    }
    check_unique("user", users)?;
    check_unique("permission", perms)?;
    let roles = role_names(n);
    b.sort("USERS", syms(users))?
        .sort("PERMS", syms(perms))?
        .sort("ROLES", syms(&roles))?
        .flexible_relation("UA", &["USERS", "ROLES"])?
        .flexible_relation("PA", &["ROLES", "PERMS"])?;
    for r in &roles {
        b.rigid_constant(r, "ROLES", Value::sym(r))?;
    }
    Ok(())
}

pub(crate) fn rbac_from_builder(
    b: StructureBuilder,
    users: &[String],
    perms: &[String],
    n: usize,
) -> Result<RbacTemplate, TemplateError> {
    let roles = role_names(n);
    let structure = b.build()?;
    structure.require_request_sorts()?;
    let formula = Formula::or(
        roles
            .iter()
            .map(|r| {
                Formula::and(vec![
                    Formula::rel("UA", vec![Term::var("u"), Term::constant(r)]),
                    Formula::rel("PA", vec![Term::constant(r), Term::var("p")]),
                ])
            })
            .collect(),
    );
    Ok(RbacTemplate {
        template: Template::new(structure, formula, &[("u", "USERS"), ("p", "PERMS")])?,
        users: users.to_vec(),
        perms: perms.to_vec(),
        roles,
    })
}

impl RbacTemplate {
    pub fn extract(&self, interp: &Interpretation) -> RbacPolicy {
        let facts = &self.template.facts;
        RbacPolicy {
            roles: self
                .roles
                .iter()
                .map(|r| {
                    let rv = Value::sym(r);
                    RbacRole {
                        name: r.clone(),
                        users: self
                            .users
                            .iter()
                            .filter(|u| interp.holds(facts, "UA", &[Value::sym(u), rv.clone()]))
                            .cloned()
                            .collect(),
                        permissions: self
                            .perms
                            .iter()
                            .filter(|p| interp.holds(facts, "PA", &[rv.clone(), Value::sym(p)]))
                            .cloned()
                            .collect(),
                    }
                })
                .collect(),
        }
    }

    /// Interpretation realizing `policy`; roles beyond `N` are rejected.
    pub fn encode(&self, policy: &RbacPolicy) -> Result<Interpretation, TemplateError> {
        if policy.roles.len() > self.roles.len() {
            return Err(TemplateError::Encoding(format!(
                "{} roles exceed the bound {}",
                policy.roles.len(),
                self.roles.len()
            )));
        }
        let facts = &self.template.facts;
        let mut interp = Interpretation::zeros(facts);
        for (role, r) in policy.roles.iter().zip(&self.roles) {
            let rv = Value::sym(r);
            for u in &role.users {
                interp
                    .set_true(facts, "UA", &[Value::sym(u), rv.clone()])
                    .map_err(|e| TemplateError::Encoding(e.to_string()))?;
            }
            for p in &role.permissions {
                interp
                    .set_true(facts, "PA", &[rv.clone(), Value::sym(p)])
                    .map_err(|e| TemplateError::Encoding(e.to_string()))?;
            }
        }
        Ok(interp)
    }

    pub fn request(&self, user: &str, perm: &str) -> crate::logic::Binding {
        self.template.binding(&[Value::sym(user), Value::sym(perm)])
    }
}
