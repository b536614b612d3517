//! Reduced XACML: rules `(decision, attributes)` and policies combining
//! children with first-applicable, allow-overrides or deny-overrides.

use super::{check_unique, syms, Template, TemplateError};
use crate::expectation::LossExpression;
use crate::logic::{Formula, Interpretation, StructureBuilder, Term, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Effect {
    Allow,
    Deny,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Combinator {
    FirstApp,
    AllowOv,
    DenyOv,
}

impl Combinator {
    pub const ALL: [Combinator; 3] = [Combinator::FirstApp, Combinator::AllowOv, Combinator::DenyOv];

    pub fn name(self) -> &'static str {
        match self {
            Combinator::FirstApp => "FirstApp",
            Combinator::AllowOv => "AllowOv",
            Combinator::DenyOv => "DenyOv",
        }
    }
}

impl Effect {
    pub fn name(self) -> &'static str {
        match self {
            Effect::Allow => "allow",
            Effect::Deny => "deny",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum XacmlDecision {
    Allow,
    Deny,
    NotApplicable,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum XacmlNode {
    Rule {
        effect: Effect,
        attributes: BTreeSet<String>,
    },
    Policy {
        combinator: Combinator,
        children: Vec<XacmlNode>,
    },
}

impl XacmlNode {
    pub fn rule<S: AsRef<str>>(effect: Effect, attributes: &[S]) -> Self {
        XacmlNode::Rule {
            effect,
            attributes: attributes.iter().map(|a| a.as_ref().to_string()).collect(),
        }
    }

    pub fn policy(combinator: Combinator, children: Vec<XacmlNode>) -> Self {
        XacmlNode::Policy {
            combinator,
            children,
        }
    }

    pub fn decide(&self, request: &BTreeSet<String>) -> XacmlDecision {
        match self {
            XacmlNode::Rule { effect, attributes } => {
                if attributes.is_subset(request) {
                    match effect {
                        Effect::Allow => XacmlDecision::Allow,
                        Effect::Deny => XacmlDecision::Deny,
                    }
                } else {
                    XacmlDecision::NotApplicable
                }
            }
            XacmlNode::Policy {
                combinator,
                children,
            } => {
                let ds: Vec<XacmlDecision> = children.iter().map(|c| c.decide(request)).collect();
                let any = |d| ds.contains(&d);
                match combinator {
                    Combinator::AllowOv if any(XacmlDecision::Allow) => XacmlDecision::Allow,
                    Combinator::AllowOv if any(XacmlDecision::Deny) => XacmlDecision::Deny,
                    Combinator::DenyOv if any(XacmlDecision::Deny) => XacmlDecision::Deny,
                    Combinator::DenyOv if any(XacmlDecision::Allow) => XacmlDecision::Allow,
                    Combinator::FirstApp => ds
                        .into_iter()
                        .find(|d| *d != XacmlDecision::NotApplicable)
                        .unwrap_or(XacmlDecision::NotApplicable),
                    _ => XacmlDecision::NotApplicable,
                }
            }
        }
    }

    /// Nodes plus required attribute values.
    pub fn complexity(&self) -> usize {
        match self {
            XacmlNode::Rule { attributes, .. } => 1 + attributes.len(),
            XacmlNode::Policy { children, .. } => {
                1 + children.iter().map(XacmlNode::complexity).sum::<usize>()
            }
        }
    }

    /// Length of the longest chain of nested policies.
    pub fn depth(&self) -> usize {
        match self {
            XacmlNode::Rule { .. } => 0,
            XacmlNode::Policy { children, .. } => {
                1 + children.iter().map(XacmlNode::depth).max().unwrap_or(0)
            }
        }
    }

    pub fn breadth(&self) -> usize {
        match self {
            XacmlNode::Rule { .. } => 0,
            XacmlNode::Policy { children, .. } => children
                .iter()
                .map(XacmlNode::breadth)
                .max()
                .unwrap_or(0)
                .max(children.len()),
        }
    }
}

/// A mined policy; `None` when the root is inactive, which decides nothing.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct XacmlPolicy {
    pub root: Option<XacmlNode>,
}

impl XacmlPolicy {
    pub fn decide(&self, request: &BTreeSet<String>) -> XacmlDecision {
        self.root
            .as_ref()
            .map_or(XacmlDecision::NotApplicable, |r| r.decide(request))
    }

    pub fn grants(&self, request: &BTreeSet<String>) -> bool {
        self.decide(request) == XacmlDecision::Allow
    }

    pub fn complexity(&self) -> usize {
        self.root.as_ref().map_or(0, XacmlNode::complexity)
    }
}

#[derive(Clone, Debug)]
pub struct XacmlTemplate {
    pub template: Template,
    pub depth: usize,
    pub breadth: usize,
    pub attributes: Vec<String>,
    /// Node paths in tree order; the name of `[0, 1]` is `y.0.1`.
    pub nodes: Vec<Vec<usize>>,
}

pub fn node_name(path: &[usize]) -> String {
    let mut s = String::from("y");
    for j in path {
        s.push('.');
        s.push_str(&j.to_string());
    }
    s
}

struct Parts {
    allows: Formula,
    denies: Formula,
    na: Formula,
}

fn node_term(path: &[usize]) -> Term {
    Term::val(node_name(path).as_str())
}

fn flag(sym: &str, path: &[usize]) -> Formula {
    Formula::rel(sym, vec![node_term(path)])
}

fn is(sym: &str, path: &[usize], v: &str) -> Formula {
    Formula::eq(Term::app(sym, vec![node_term(path)]), Term::val(v))
}

/// `⊕_j (⋀_{i<j} NA_i ∧ hit_j ∧ ⋀_{k>j} ¬block_k)`.
fn first_hit(kids: &[Parts], hit: impl Fn(&Parts) -> &Formula, block: Option<&dyn Fn(&Parts) -> &Formula>) -> Formula {
    Formula::xor(
        (0..kids.len())
            .map(|j| {
                let mut c: Vec<Formula> = kids[..j].iter().map(|k| k.na.clone()).collect();
                c.push(hit(&kids[j]).clone());
                if let Some(block) = block {
                    c.extend(kids[j + 1..].iter().map(|k| Formula::not(block(k).clone())));
                }
                Formula::and(c)
            })
            .collect(),
    )
}

fn build_node(path: &mut Vec<usize>, depth: usize, breadth: usize, attributes: &[String]) -> Parts {
    let active = flag("XActive", path);
    let matches = Formula::and(
        attributes
            .iter()
            .map(|a| {
                Formula::implies(
                    Formula::rel("XRequiresAVal", vec![node_term(path), Term::val(a.as_str())]),
                    Formula::rel("hasAttVal", vec![Term::var("z"), Term::val(a.as_str())]),
                )
            })
            .collect(),
    );
    let rule_allow = Formula::and(vec![is("XDec", path, "allow"), matches.clone()]);
    let rule_deny = Formula::and(vec![is("XDec", path, "deny"), matches.clone()]);
    let rule_na = Formula::not(matches);
    let on = |f: Formula| Formula::and(vec![active.clone(), f]);
    let na_of = |f: Formula| Formula::xor(vec![Formula::not(active.clone()), on(f)]);
    if path.len() == depth {
        return Parts {
            allows: on(rule_allow),
            denies: on(rule_deny),
            na: na_of(rule_na),
        };
    }
    let kids: Vec<Parts> = (0..breadth)
        .map(|j| {
            path.push(j);
            let p = build_node(path, depth, breadth, attributes);
            path.pop();
            p
        })
        .collect();
    let comb = |c: Combinator, f: Formula| Formula::and(vec![is("XComb", path, c.name()), f]);
    let pol_allow = Formula::xor(vec![
        comb(Combinator::AllowOv, Formula::or(kids.iter().map(|k| k.allows.clone()).collect())),
        comb(Combinator::FirstApp, first_hit(&kids, |k| &k.allows, None)),
        comb(Combinator::DenyOv, first_hit(&kids, |k| &k.allows, Some(&|k: &Parts| &k.denies))),
    ]);
    let pol_deny = Formula::xor(vec![
        comb(Combinator::DenyOv, Formula::or(kids.iter().map(|k| k.denies.clone()).collect())),
        comb(Combinator::FirstApp, first_hit(&kids, |k| &k.denies, None)),
        comb(Combinator::AllowOv, first_hit(&kids, |k| &k.denies, Some(&|k: &Parts| &k.allows))),
    ]);
    let pol_na = Formula::and(kids.iter().map(|k| k.na.clone()).collect());
    let is_rule = flag("XIsRule", path);
    let split = |r: Formula, p: Formula| {
        Formula::xor(vec![
            Formula::and(vec![is_rule.clone(), r]),
            Formula::and(vec![Formula::not(is_rule.clone()), p]),
        ])
    };
    Parts {
        allows: on(split(rule_allow, pol_allow)),
        denies: on(split(rule_deny, pol_deny)),
        na: na_of(split(rule_na, pol_na)),
    }
}

fn all_paths(depth: usize, breadth: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut i = 0;
    while i < out.len() {
        if out[i].len() < depth {
            for j in 0..breadth {
                let mut p = out[i].clone();
                p.push(j);
                out.push(p);
            }
        }
        i += 1;
    }
    out
}

/// Template over policy trees with at most `depth` nested policy levels and
/// `breadth` children per policy. Nodes at the last level are always rules.
///
/// `requests` pairs a request name with the attribute values it carries.
pub fn build_xacml(
    attributes: &[String],
    requests: &[(String, BTreeSet<String>)],
    depth: usize,
    breadth: usize,
) -> Result<XacmlTemplate, TemplateError> {
    if breadth == 0 {
        return Err(TemplateError::Parameters("breadth must be at least 1".into()));
    }
    check_unique("attribute value", attributes)?;
    let names: Vec<&str> = requests.iter().map(|(r, _)| r.as_str()).collect();
    check_unique("request", &names)?;
    let nodes = all_paths(depth, breadth);
    let node_names: Vec<String> = nodes.iter().map(|p| node_name(p)).collect();
    let known: BTreeSet<&str> = attributes.iter().map(String::as_str).collect();
    let mut b = StructureBuilder::new();
    b.sort("POLS", syms(&node_names))?
        .sort("AVALS", syms(attributes))?
        .sort("REQS", syms(&names))?
        .sort("DEC", syms(&["allow", "deny"]))?
        .sort("COMB", syms(&Combinator::ALL.map(Combinator::name)))?
        .flexible_relation("XActive", &["POLS"])?
        .flexible_relation("XIsRule", &["POLS"])?
        .flexible_function("XDec", &["POLS"], "DEC")?
        .flexible_function("XComb", &["POLS"], "COMB")?
        .flexible_relation("XRequiresAVal", &["POLS", "AVALS"])?
        .rigid_relation(
            "hasAttVal",
            &["REQS", "AVALS"],
            requests.iter().flat_map(|(r, attrs)| {
                attrs
                    .iter()
                    .filter(|a| known.contains(a.as_str()))
                    .map(move |a| vec![Value::sym(r), Value::sym(a)])
            }),
        )?;
    let structure = b.build()?;
    let root = build_node(&mut Vec::new(), depth, breadth, attributes);
    Ok(XacmlTemplate {
        template: Template::new(structure, root.allows, &[("z", "REQS")])?,
        depth,
        breadth,
        attributes: attributes.to_vec(),
        nodes,
    })
}

impl XacmlTemplate {
    fn holds(&self, interp: &Interpretation, sym: &str, path: &[usize]) -> bool {
        interp.holds(&self.template.facts, sym, &[Value::sym(&node_name(path))])
    }

    fn function(&self, interp: &Interpretation, sym: &str, path: &[usize]) -> String {
        let facts = &self.template.facts;
        let id = facts
            .lookup(sym, &[Value::sym(&node_name(path))])
            .expect("template fact");
        interp.value(facts, id).to_string()
    }

    fn is_rule(&self, interp: &Interpretation, path: &[usize]) -> bool {
        path.len() == self.depth || self.holds(interp, "XIsRule", path)
    }

    fn extract_node(&self, interp: &Interpretation, path: &mut Vec<usize>) -> XacmlNode {
        if self.is_rule(interp, path) {
            let name = Value::sym(&node_name(path));
            let effect = match self.function(interp, "XDec", path).as_str() {
                "deny" => Effect::Deny,
                _ => Effect::Allow,
            };
            return XacmlNode::Rule {
                effect,
                attributes: self
                    .attributes
                    .iter()
                    .filter(|a| {
                        interp.holds(
                            &self.template.facts,
                            "XRequiresAVal",
                            &[name.clone(), Value::sym(a)],
                        )
                    })
                    .cloned()
                    .collect(),
            };
        }
        let combinator = match self.function(interp, "XComb", path).as_str() {
            "AllowOv" => Combinator::AllowOv,
            "DenyOv" => Combinator::DenyOv,
            _ => Combinator::FirstApp,
        };
        let mut children = Vec::new();
        for j in 0..self.breadth {
            path.push(j);
            if self.holds(interp, "XActive", path) {
                children.push(self.extract_node(interp, path));
            }
            path.pop();
        }
        XacmlNode::Policy {
            combinator,
            children,
        }
    }

    /// Inactive children are dropped; an inactive root yields no policy.
    pub fn extract(&self, interp: &Interpretation) -> XacmlPolicy {
        let mut path = Vec::new();
        XacmlPolicy {
            root: self
                .holds(interp, "XActive", &path)
                .then(|| self.extract_node(interp, &mut path)),
        }
    }

    /// Interpretation whose extraction is `policy`. Unused decision and
    /// combinator slots default to `allow` and `FirstApp`.
    pub fn encode(&self, policy: &XacmlPolicy) -> Result<Interpretation, TemplateError> {
        let facts = &self.template.facts;
        let mut interp = Interpretation::zeros(facts);
        for path in &self.nodes {
            let name = Value::sym(&node_name(path));
            for (sym, v) in [("XDec", "allow"), ("XComb", "FirstApp")] {
                interp.assign(facts, &crate::logic::RandomFact::new(sym, vec![name.clone()]), &Value::sym(v))?;
            }
        }
        if let Some(root) = &policy.root {
            self.encode_node(root, &mut Vec::new(), &mut interp)?;
        }
        Ok(interp)
    }

    fn encode_node(
        &self,
        node: &XacmlNode,
        path: &mut Vec<usize>,
        interp: &mut Interpretation,
    ) -> Result<(), TemplateError> {
        let facts = &self.template.facts;
        let name = Value::sym(&node_name(path));
        let set = |interp: &mut Interpretation, sym: &str, v: Value| {
            interp.assign(facts, &crate::logic::RandomFact::new(sym, vec![name.clone()]), &v)
        };
        set(interp, "XActive", Value::Bool(true))?;
        match node {
            XacmlNode::Rule { effect, attributes } => {
                set(interp, "XIsRule", Value::Bool(true))?;
                set(interp, "XDec", Value::sym(effect.name()))?;
                for a in attributes {
                    if !self.attributes.contains(a) {
                        return Err(TemplateError::Encoding(format!("unknown attribute value `{a}`")));
                    }
                    interp.set_true(facts, "XRequiresAVal", &[name.clone(), Value::sym(a)])?;
                }
            }
            XacmlNode::Policy {
                combinator,
                children,
            } => {
                if path.len() >= self.depth {
                    return Err(TemplateError::Encoding(format!(
                        "policy below the depth bound {}",
                        self.depth
                    )));
                }
                if children.len() > self.breadth {
                    return Err(TemplateError::Encoding(format!(
                        "{} children exceed the breadth bound {}",
                        children.len(),
                        self.breadth
                    )));
                }
                set(interp, "XComb", Value::sym(combinator.name()))?;
                for (j, c) in children.iter().enumerate() {
                    path.push(j);
                    self.encode_node(c, path, interp)?;
                    path.pop();
                }
            }
        }
        Ok(())
    }

    pub fn request(&self, name: &str) -> crate::logic::Binding {
        self.template.binding(&[Value::sym(name)])
    }

    /// `Σ_σ eff(σ)·(1 + rule(σ)·Σ_a XRequiresAVal(σ,a))`, where `eff(σ)`
    /// holds when `σ` and its ancestors are active and no ancestor is a rule.
    /// Equals [`XacmlPolicy::complexity`] of the extraction.
    pub fn complexity(&self) -> LossExpression {
        let fact = |sym: &str, path: &[usize]| LossExpression::fact(sym, vec![Value::sym(&node_name(path))]);
        let not_rule = |path: &[usize]| LossExpression::sub(LossExpression::Const(1.0), fact("XIsRule", path));
        let mut terms = Vec::with_capacity(self.nodes.len());
        for path in &self.nodes {
            let mut eff = Vec::new();
            for k in 0..=path.len() {
                eff.push(fact("XActive", &path[..k]));
                if k < path.len() {
                    eff.push(not_rule(&path[..k]));
                }
            }
            let requires = LossExpression::Sum(
                self.attributes
                    .iter()
                    .map(|a| {
                        LossExpression::fact(
                            "XRequiresAVal",
                            vec![Value::sym(&node_name(path)), Value::sym(a)],
                        )
                    })
                    .collect(),
            );
            let rule_part = if path.len() == self.depth {
                requires
            } else {
                LossExpression::Product(vec![fact("XIsRule", path), requires])
            };
            eff.push(LossExpression::Sum(vec![LossExpression::Const(1.0), rule_part]));
            terms.push(LossExpression::Product(eff));
        }
        LossExpression::Sum(terms)
    }
}
