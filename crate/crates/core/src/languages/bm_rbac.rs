use super::rbac::{add_rbac_symbols, rbac_from_builder, RbacTemplate};
use super::TemplateError;
use crate::logic::{StructureBuilder, Value};
use std::collections::BTreeMap;

/// RBAC template plus a rigid assignment of one attribute combination per
/// user.
#[derive(Clone, Debug)]
pub struct BmRbacTemplate {
    pub rbac: RbacTemplate,
    /// Attribute combination of each user.
    pub combination: BTreeMap<String, String>,
}

pub fn build_bm_rbac(
    users: &[String],
    perms: &[String],
    aa: &[(String, String)],
    n: usize,
) -> Result<BmRbacTemplate, TemplateError> {
    let mut combination = BTreeMap::new();
    for (u, a) in aa {
        if let Some(prev) = combination.insert(u.clone(), a.clone()) {
            if prev != *a {
                return Err(TemplateError::Data(format!(
                    "user `{u}` has attribute combinations `{prev}` and `{a}`"
                )));
            }
        }
    }
    for u in users {
        if !combination.contains_key(u) {
            return Err(TemplateError::Data(format!(
                "user `{u}` has no attribute combination"
            )));
        }
    }
    if let Some(u) = combination.keys().find(|u| !users.contains(u)) {
        return Err(TemplateError::Data(format!("attribute row for unknown user `{u}`")));
    }
    let mut combos: Vec<String> = combination.values().cloned().collect();
    combos.sort();
    combos.dedup();
    let mut b = StructureBuilder::new();
    add_rbac_symbols(&mut b, users, perms, n)?;
    b.sort("AVAL", combos.iter().map(|c| Value::sym(c)).collect())?
        .rigid_relation(
            "AA",
            &["USERS", "AVAL"],
            combination
                .iter()
                .map(|(u, a)| vec![Value::sym(u), Value::sym(a)]),
        )?;
    Ok(BmRbacTemplate {
        rbac: rbac_from_builder(b, users, perms, n)?,
        combination,
    })
}
