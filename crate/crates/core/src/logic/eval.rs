use super::error::{LogicError, LogicResult};
use super::facts::{FactSet, Interpretation, RandomFact};
use super::formula::{Atom, Binding, Formula, Node, Term};
use super::structure::Structure;
use super::value::Value;

/// Supplies values of flexible symbols at ground arguments.
pub trait FlexibleSource {
    fn flexible_value(&self, fact: &RandomFact) -> LogicResult<Value>;
}

/// An interpretation read through its fact set.
pub struct InterpretationView<'a> {
    pub facts: &'a FactSet,
    pub interp: &'a Interpretation,
}

impl FlexibleSource for InterpretationView<'_> {
    fn flexible_value(&self, fact: &RandomFact) -> LogicResult<Value> {
        let id = self
            .facts
            .id(fact)
            .ok_or_else(|| LogicError::Incomplete(fact.to_string()))?;
        if id.index() >= self.interp.len() {
            return Err(LogicError::Incomplete(fact.to_string()));
        }
        Ok(self.interp.value(self.facts, id).clone())
    }
}

/// Truth value of `formula` under the rigid interpretation plus `interp`.
pub fn evaluate(
    formula: &Formula,
    structure: &Structure,
    facts: &FactSet,
    interp: &Interpretation,
    binding: &Binding,
) -> LogicResult<bool> {
    evaluate_with(formula, structure, &InterpretationView { facts, interp }, binding)
}

pub fn evaluate_with<S: FlexibleSource + ?Sized>(
    formula: &Formula,
    structure: &Structure,
    source: &S,
    binding: &Binding,
) -> LogicResult<bool> {
    Evaluator {
        structure,
        source,
        binding,
    }
    .formula(formula)
}

pub fn evaluate_term_with<S: FlexibleSource + ?Sized>(
    term: &Term,
    structure: &Structure,
    source: &S,
    binding: &Binding,
) -> LogicResult<Value> {
    Evaluator {
        structure,
        source,
        binding,
    }
    .term(term)
}

pub fn evaluate_atom_with<S: FlexibleSource + ?Sized>(
    atom: &Atom,
    structure: &Structure,
    source: &S,
    binding: &Binding,
) -> LogicResult<bool> {
    Evaluator {
        structure,
        source,
        binding,
    }
    .atom(atom)
}

struct Evaluator<'a, S: ?Sized> {
    structure: &'a Structure,
    source: &'a S,
    binding: &'a Binding,
}

impl<S: FlexibleSource + ?Sized> Evaluator<'_, S> {
    fn formula(&self, f: &Formula) -> LogicResult<bool> {
        match f.node() {
            Node::True => Ok(true),
            Node::False => Ok(false),
            Node::Atom(a) => self.atom(a),
            Node::Not(x) => Ok(!self.formula(x)?),
            Node::And(xs) => {
                for x in xs {
                    if !self.formula(x)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Node::Or(xs) => {
                for x in xs {
                    if self.formula(x)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            Node::Implies(a, b) => Ok(!self.formula(a)? || self.formula(b)?),
            Node::Xor(xs) => {
                let mut hits = 0;
                for x in xs {
                    if self.formula(x)? {
                        hits += 1;
                    }
                }
                if hits > 1 {
                    return Err(LogicError::ExclusivityViolated(f.to_string()));
                }
                Ok(hits == 1)
            }
        }
    }

    fn args(&self, args: &[Term]) -> LogicResult<Vec<Value>> {
        args.iter().map(|t| self.term(t)).collect()
    }

    fn atom(&self, a: &Atom) -> LogicResult<bool> {
        match a {
            Atom::Rel(sym, args) => {
                let sig = self.structure.signature();
                let id = sig.symbol_id(sym)?;
                let decl = sig.symbol(id);
                if !decl.is_relation() {
                    return Err(LogicError::IllTyped(format!("`{sym}` is not a relation")));
                }
                let vals = self.args(args)?;
                check_arity(sym, decl.arg_sorts.len(), vals.len())?;
                if decl.is_flexible() {
                    let v = self.source.flexible_value(&RandomFact {
                        symbol: decl.name.clone(),
                        args: vals,
                    })?;
                    v.as_bool()
                        .ok_or_else(|| LogicError::IllTyped(format!("`{sym}` yielded {v}")))
                } else {
                    self.structure.rigid_holds(id, &vals)
                }
            }
            Atom::Eq(x, y) => Ok(self.term(x)? == self.term(y)?),
            Atom::Le(x, y) => Ok(self.int(x)? <= self.int(y)?),
            Atom::Lt(x, y) => Ok(self.int(x)? < self.int(y)?),
        }
    }

    fn int(&self, t: &Term) -> LogicResult<i64> {
        let v = self.term(t)?;
        v.as_int()
            .ok_or_else(|| LogicError::IllTyped(format!("`{t}` is {v}, not an integer")))
    }

    fn term(&self, t: &Term) -> LogicResult<Value> {
        match t {
            Term::Var(name) => self
                .binding
                .get(name)
                .cloned()
                .ok_or_else(|| LogicError::UnboundVariable(name.to_string())),
            Term::Const(v) => Ok(v.clone()),
            Term::Add(a, b) => Ok(Value::Int(self.int(a)? + self.int(b)?)),
            Term::App(sym, args) => {
                let sig = self.structure.signature();
                let id = sig.symbol_id(sym)?;
                let decl = sig.symbol(id);
                if decl.is_relation() {
                    return Err(LogicError::IllTyped(format!(
                        "relation `{sym}` used as a term"
                    )));
                }
                let vals = self.args(args)?;
                check_arity(sym, decl.arg_sorts.len(), vals.len())?;
                if decl.is_flexible() {
                    self.source.flexible_value(&RandomFact {
                        symbol: decl.name.clone(),
                        args: vals,
                    })
                } else {
                    self.structure.rigid_apply(id, &vals)
                }
            }
        }
    }
}

fn check_arity(sym: &str, want: usize, got: usize) -> LogicResult<()> {
    if want != got {
        return Err(LogicError::IllTyped(format!(
            "`{sym}` takes {want} arguments, got {got}"
        )));
    }
    Ok(())
}
