use super::error::LogicResult;
use super::eval::{evaluate_atom_with, FlexibleSource};
use super::facts::{FactId, FactSet, RandomFact};
use super::formula::{Atom, Binding, Formula, Node, Term};
use super::structure::Structure;
use super::value::Value;
use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Holds,
    Violated { atom: String },
}

impl CheckOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, CheckOutcome::Holds)
    }
}

/// Each flexible reference (relation atom or flexible function application)
/// occurs at most once. Atoms over rigid symbols only are not counted.
pub fn check_diverse(formula: &Formula, structure: &Structure) -> CheckOutcome {
    let mut seen = HashMap::new();
    let mut offending = None;
    formula.for_each_atom(&mut |atom| {
        for r in flexible_refs(atom, structure) {
            let count = seen.entry(r.clone()).or_insert(0usize);
            *count += 1;
            if *count == 2 && offending.is_none() {
                offending = Some(r);
            }
        }
    });
    match offending {
        None => CheckOutcome::Holds,
        Some(atom) => CheckOutcome::Violated { atom },
    }
}

/// No flexible reference occurs in two distinct members.
pub fn check_unrelated(formulas: &[Formula], structure: &Structure) -> CheckOutcome {
    let mut owner: HashMap<String, usize> = HashMap::new();
    for (i, f) in formulas.iter().enumerate() {
        let mut refs = BTreeSet::new();
        f.for_each_atom(&mut |atom| refs.extend(flexible_refs(atom, structure)));
        for r in refs {
            if let Some(&j) = owner.get(&r) {
                if j != i {
                    return CheckOutcome::Violated { atom: r };
                }
            }
            owner.insert(r, i);
        }
    }
    CheckOutcome::Holds
}

/// Flexible references of one atom, rendered with rigid constants grounded.
pub fn flexible_refs(atom: &Atom, structure: &Structure) -> Vec<String> {
    let sig = structure.signature();
    let is_flex = |s: &str| sig.lookup(s).map(|d| d.is_flexible()).unwrap_or(false);
    let mut out = Vec::new();
    if let Atom::Rel(sym, args) = atom {
        if is_flex(sym) {
            out.push(render_app(sym, args, structure));
        }
    }
    for t in atom.terms() {
        t.for_each_app(&mut |sym, args| {
            if is_flex(sym) {
                out.push(render_app(sym, args, structure));
            }
        });
    }
    out
}

fn render_app(sym: &str, args: &[Term], structure: &Structure) -> String {
    let parts: Vec<String> = args.iter().map(|a| render_term(a, structure)).collect();
    format!("{sym}({})", parts.join(", "))
}

fn render_term(t: &Term, structure: &Structure) -> String {
    match t {
        Term::App(sym, args) if args.is_empty() => {
            let sig = structure.signature();
            match sig.symbol_id(sym) {
                Ok(id) if !sig.symbol(id).is_flexible() => structure
                    .rigid_apply(id, &[])
                    .map(|v| v.to_string())
                    .unwrap_or_else(|_| sym.to_string()),
                _ => sym.to_string(),
            }
        }
        Term::App(sym, args) => render_app(sym, args, structure),
        Term::Add(a, b) => format!("{} + {}", render_term(a, structure), render_term(b, structure)),
        other => other.to_string(),
    }
}

struct Recording<'a> {
    facts: &'a FactSet,
    seen: RefCell<BTreeSet<FactId>>,
}

impl FlexibleSource for Recording<'_> {
    fn flexible_value(&self, fact: &RandomFact) -> LogicResult<Value> {
        let id = self
            .facts
            .id(fact)
            .ok_or_else(|| super::error::LogicError::Incomplete(fact.to_string()))?;
        self.seen.borrow_mut().insert(id);
        Ok(self.facts.range(id)[0].clone())
    }
}

enum Partial {
    Known(bool),
    Depends(BTreeSet<FactId>),
}

/// Random facts the value of `formula` at `binding` can depend on, after
/// short-circuiting subformulas whose truth is fixed by rigid data alone.
/// Flexible terms nested inside flexible applications are not supported.
pub fn ground_support(
    formula: &Formula,
    structure: &Structure,
    facts: &FactSet,
    binding: &Binding,
) -> LogicResult<BTreeSet<FactId>> {
    Ok(match partial(formula, structure, facts, binding)? {
        Partial::Known(_) => BTreeSet::new(),
        Partial::Depends(s) => s,
    })
}

fn partial(
    f: &Formula,
    structure: &Structure,
    facts: &FactSet,
    binding: &Binding,
) -> LogicResult<Partial> {
    let rec = |x: &Formula| partial(x, structure, facts, binding);
    Ok(match f.node() {
        Node::True => Partial::Known(true),
        Node::False => Partial::Known(false),
        Node::Atom(a) => {
            let src = Recording {
                facts,
                seen: RefCell::new(BTreeSet::new()),
            };
            let v = evaluate_atom_with(a, structure, &src, binding)?;
            let seen = src.seen.into_inner();
            if seen.is_empty() {
                Partial::Known(v)
            } else {
                Partial::Depends(seen)
            }
        }
        Node::Not(x) => match rec(x)? {
            Partial::Known(b) => Partial::Known(!b),
            d => d,
        },
        Node::And(xs) => junction(xs.iter().map(rec), false)?,
        Node::Or(xs) => junction(xs.iter().map(rec), true)?,
        Node::Implies(a, b) => {
            let na = match rec(a)? {
                Partial::Known(v) => Partial::Known(!v),
                d => d,
            };
            junction([Ok(na), rec(b)].into_iter(), true)?
        }
        Node::Xor(xs) => {
            let mut deps = BTreeSet::new();
            let mut trues = 0;
            let mut depends = false;
            for x in xs {
                match rec(x)? {
                    Partial::Known(b) => trues += b as usize,
                    Partial::Depends(s) => {
                        depends = true;
                        deps.extend(s);
                    }
                }
            }
            if depends {
                Partial::Depends(deps)
            } else {
                Partial::Known(trues == 1)
            }
        }
    })
}

/// Conjunction (`absorbing = false`) or disjunction (`absorbing = true`).
fn junction(
    parts: impl Iterator<Item = LogicResult<Partial>>,
    absorbing: bool,
) -> LogicResult<Partial> {
    let mut deps = BTreeSet::new();
    let mut depends = false;
    for p in parts {
        match p? {
            Partial::Known(b) if b == absorbing => return Ok(Partial::Known(absorbing)),
            Partial::Known(_) => {}
            Partial::Depends(s) => {
                depends = true;
                deps.extend(s);
            }
        }
    }
    Ok(if depends {
        Partial::Depends(deps)
    } else {
        Partial::Known(!absorbing)
    })
}
