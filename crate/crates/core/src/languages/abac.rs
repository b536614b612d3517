use super::{check_unique, syms, Template, TemplateError};
use crate::logic::{Formula, Interpretation, StructureBuilder, Term, Value};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// `⋁_i ⋀_j (RUA(s_i,a_j) → UAtt(u,a_j)) ∧ (RPA(s_i,a_j) → PAtt(p,a_j))`.
#[derive(Clone, Debug)]
pub struct AbacTemplate {
    pub template: Template,
    pub rules: Vec<String>,
    pub attributes: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbacRule {
    pub user_attributes: BTreeSet<String>,
    pub permission_attributes: BTreeSet<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbacPolicy {
    pub rules: Vec<AbacRule>,
}

impl AbacPolicy {
    pub fn grants(&self, user_attrs: &BTreeSet<String>, perm_attrs: &BTreeSet<String>) -> bool {
        self.rules.iter().any(|r| {
            r.user_attributes.is_subset(user_attrs) && r.permission_attributes.is_subset(perm_attrs)
        })
    }

    /// Number of attribute values required across all rules.
    pub fn complexity(&self) -> usize {
        self.rules
            .iter()
            .map(|r| r.user_attributes.len() + r.permission_attributes.len())
            .sum()
    }
}

/// Attribute relation of users or permissions.
pub type Attributes = BTreeMap<String, BTreeSet<String>>;

pub fn build_abac(
    users: &[String],
    perms: &[String],
    user_attrs: &Attributes,
    perm_attrs: &Attributes,
    attributes: &[String],
    n: usize,
) -> Result<AbacTemplate, TemplateError> {
    if n == 0 {
        return Err(TemplateError::Parameters("at least one rule is required".into()));
    }
    check_unique("user", users)?;
    check_unique("permission", perms)?;
    check_unique("attribute value", attributes)?;
    let rules: Vec<String> = (1..=n).map(|i| format!("s{i}")).collect();
    let known: BTreeSet<&str> = attributes.iter().map(String::as_str).collect();
    let rows = |owners: &[String], table: &Attributes| -> Vec<Vec<Value>> {
        owners
            .iter()
            .flat_map(|o| {
                table
                    .get(o)
                    .into_iter()
                    .flatten()
                    .filter(|a| known.contains(a.as_str()))
                    .map(move |a| vec![Value::sym(o), Value::sym(a)])
            })
            .collect()
    };
    let mut b = StructureBuilder::new();
    b.sort("USERS", syms(users))?
        .sort("PERMS", syms(perms))?
        .sort("RULES", syms(&rules))?
        .sort("ATTVALS", syms(attributes))?
        .flexible_relation("RUA", &["RULES", "ATTVALS"])?
        .flexible_relation("RPA", &["RULES", "ATTVALS"])?
        .rigid_relation("UAtt", &["USERS", "ATTVALS"], rows(users, user_attrs))?
        .rigid_relation("PAtt", &["PERMS", "ATTVALS"], rows(perms, perm_attrs))?;
    let structure = b.build()?;
    structure.require_request_sorts()?;
    let formula = Formula::or(
        rules
            .iter()
            .map(|s| {
                Formula::and(
                    attributes
                        .iter()
                        .map(|a| {
                            let (s, a) = (Term::val(s.as_str()), Term::val(a.as_str()));
                            Formula::and(vec![
                                Formula::implies(
                                    Formula::rel("RUA", vec![s.clone(), a.clone()]),
                                    Formula::rel("UAtt", vec![Term::var("u"), a.clone()]),
                                ),
                                Formula::implies(
                                    Formula::rel("RPA", vec![s, a.clone()]),
                                    Formula::rel("PAtt", vec![Term::var("p"), a]),
                                ),
                            ])
                        })
                        .collect(),
                )
            })
            .collect(),
    );
    Ok(AbacTemplate {
        template: Template::new(structure, formula, &[("u", "USERS"), ("p", "PERMS")])?,
        rules,
        attributes: attributes.to_vec(),
    })
}

impl AbacTemplate {
    pub fn extract(&self, interp: &Interpretation) -> AbacPolicy {
        let facts = &self.template.facts;
        AbacPolicy {
            rules: self
                .rules
                .iter()
                .map(|s| {
                    let sv = Value::sym(s);
                    let required = |sym: &str| -> BTreeSet<String> {
                        self.attributes
                            .iter()
                            .filter(|a| interp.holds(facts, sym, &[sv.clone(), Value::sym(a)]))
                            .cloned()
                            .collect()
                    };
                    AbacRule {
                        user_attributes: required("RUA"),
                        permission_attributes: required("RPA"),
                    }
                })
                .collect(),
        }
    }

    pub fn encode(&self, policy: &AbacPolicy) -> Result<Interpretation, TemplateError> {
        if policy.rules.len() > self.rules.len() {
            return Err(TemplateError::Encoding(format!(
                "{} rules exceed the bound {}",
                policy.rules.len(),
                self.rules.len()
            )));
        }
        let facts = &self.template.facts;
        let mut interp = Interpretation::zeros(facts);
        for (rule, s) in policy.rules.iter().zip(&self.rules) {
            for (sym, attrs) in [("RUA", &rule.user_attributes), ("RPA", &rule.permission_attributes)] {
                for a in attrs {
                    interp
                        .set_true(facts, sym, &[Value::sym(s), Value::sym(a)])
                        .map_err(|e| TemplateError::Encoding(e.to_string()))?;
                }
            }
        }
        Ok(interp)
    }

    pub fn request(&self, user: &str, perm: &str) -> crate::logic::Binding {
        self.template.binding(&[Value::sym(user), Value::sym(perm)])
    }
}
