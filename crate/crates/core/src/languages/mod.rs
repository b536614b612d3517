//! Template formulas, structures and extraction mappings for the supported
//! policy languages.

pub mod abac;
pub mod bm_rbac;
pub mod rbac;
pub mod starbac;
pub mod xacml;

use crate::logic::{Binding, FactSet, Formula, LogicError, Structure, Value};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error(transparent)]
    Logic(#[from] LogicError),
    #[error("invalid template parameters: {0}")]
    Parameters(String),
    #[error("invalid input data: {0}")]
    Data(String),
    #[error("policy does not fit the template: {0}")]
    Encoding(String),
}

/// A template formula together with its structure, free variables and
/// random facts.
#[derive(Clone, Debug)]
pub struct Template {
    pub structure: Arc<Structure>,
    pub formula: Formula,
    /// Free variables with their sorts, in request order.
    pub variables: Vec<(String, String)>,
    pub facts: Arc<FactSet>,
}

impl Template {
    pub(crate) fn new(
        structure: Structure,
        formula: Formula,
        variables: &[(&str, &str)],
    ) -> Result<Self, TemplateError> {
        let facts = crate::logic::enumerate_random_facts(&formula, &structure)?;
        Ok(Template {
            structure: Arc::new(structure),
            formula,
            variables: variables
                .iter()
                .map(|(v, s)| (v.to_string(), s.to_string()))
                .collect(),
            facts: Arc::new(facts),
        })
    }

    /// Binds the free variables, in order, to `values`.
    pub fn binding(&self, values: &[Value]) -> Binding {
        assert_eq!(values.len(), self.variables.len(), "request arity");
        let mut b = Binding::new();
        for ((name, _), v) in self.variables.iter().zip(values) {
            b.set(name, v.clone());
        }
        b
    }
}

pub(crate) fn syms<S: AsRef<str>>(xs: &[S]) -> Vec<Value> {
    xs.iter().map(|x| Value::sym(x.as_ref())).collect()
}

pub(crate) fn check_unique<S: AsRef<str>>(what: &str, xs: &[S]) -> Result<(), TemplateError> {
    let mut seen = std::collections::HashSet::new();
    for x in xs {
        if !seen.insert(x.as_ref()) {
            return Err(TemplateError::Data(format!("duplicate {what} `{}`", x.as_ref())));
        }
    }
    if xs.is_empty() {
        return Err(TemplateError::Data(format!("no {what}s given")));
    }
    Ok(())
}
