use super::value::Value;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Arc<str>),
    /// A domain element written directly.
    Const(Value),
    /// Function or constant symbol application.
    App(Arc<str>, Vec<Term>),
    /// Integer addition.
    Add(Box<Term>, Box<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(Arc::from(name))
    }

    pub fn val(v: impl Into<Value>) -> Self {
        Term::Const(v.into())
    }

    pub fn app(sym: &str, args: Vec<Term>) -> Self {
        Term::App(Arc::from(sym), args)
    }

    pub fn constant(sym: &str) -> Self {
        Term::App(Arc::from(sym), Vec::new())
    }

    pub fn add(a: Term, b: Term) -> Self {
        Term::Add(Box::new(a), Box::new(b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    Rel(Arc<str>, Vec<Term>),
    Eq(Term, Term),
    Le(Term, Term),
    Lt(Term, Term),
}

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Node {
    True,
    False,
    Atom(Atom),
    Not(Formula),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Formula, Formula),
    /// Disjunction whose branches are asserted pairwise exclusive.
    Xor(Vec<Formula>),
}

/// Quantifier-free formula. Cloning is cheap; subformulas are shared.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Formula(Arc<Node>);

impl Formula {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn tt() -> Self {
        Formula(Arc::new(Node::True))
    }

    pub fn ff() -> Self {
        Formula(Arc::new(Node::False))
    }

    pub fn atom(a: Atom) -> Self {
        Formula(Arc::new(Node::Atom(a)))
    }

    pub fn rel(sym: &str, args: Vec<Term>) -> Self {
        Self::atom(Atom::Rel(Arc::from(sym), args))
    }

    pub fn eq(a: Term, b: Term) -> Self {
        Self::atom(Atom::Eq(a, b))
    }

    pub fn le(a: Term, b: Term) -> Self {
        Self::atom(Atom::Le(a, b))
    }

    pub fn lt(a: Term, b: Term) -> Self {
        Self::atom(Atom::Lt(a, b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula(Arc::new(Node::Not(f)))
    }

    pub fn and(fs: Vec<Formula>) -> Self {
        Formula(Arc::new(Node::And(fs)))
    }

    pub fn or(fs: Vec<Formula>) -> Self {
        Formula(Arc::new(Node::Or(fs)))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula(Arc::new(Node::Implies(a, b)))
    }

    pub fn xor(fs: Vec<Formula>) -> Self {
        Formula(Arc::new(Node::Xor(fs)))
    }

    /// Calls `f` on every atom occurrence, left to right.
    pub fn for_each_atom<'a>(&'a self, f: &mut impl FnMut(&'a Atom)) {
        match self.node() {
            Node::True | Node::False => {}
            Node::Atom(a) => f(a),
            Node::Not(x) => x.for_each_atom(f),
            Node::And(xs) | Node::Or(xs) | Node::Xor(xs) => {
                xs.iter().for_each(|x| x.for_each_atom(f))
            }
            Node::Implies(a, b) => {
                a.for_each_atom(f);
                b.for_each_atom(f);
            }
        }
    }

    /// Number of AST nodes, counting shared subformulas once per occurrence.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::True | Node::False | Node::Atom(_) => 1,
            Node::Not(x) => 1 + x.size(),
            Node::And(xs) | Node::Or(xs) | Node::Xor(xs) => {
                1 + xs.iter().map(Formula::size).sum::<usize>()
            }
            Node::Implies(a, b) => 1 + a.size() + b.size(),
        }
    }
}

impl Term {
    pub fn for_each_app<'a>(&'a self, f: &mut impl FnMut(&'a str, &'a [Term])) {
        match self {
            Term::Var(_) | Term::Const(_) => {}
            Term::App(s, args) => {
                f(s, args);
                args.iter().for_each(|a| a.for_each_app(f));
            }
            Term::Add(a, b) => {
                a.for_each_app(f);
                b.for_each_app(f);
            }
        }
    }
}

impl Atom {
    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::Rel(_, args) => args.iter().collect(),
            Atom::Eq(a, b) | Atom::Le(a, b) | Atom::Lt(a, b) => vec![a, b],
        }
    }
}

/// Assignment of domain elements to free variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Binding(Vec<(Arc<str>, Value)>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, v: impl Into<Value>) -> Self {
        self.set(name, v.into());
        self
    }

    pub fn set(&mut self, name: &str, v: Value) {
        match self.0.iter_mut().find(|(n, _)| n.as_ref() == name) {
            Some(slot) => slot.1 = v,
            None => self.0.push((Arc::from(name), v)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.iter().find(|(n, _)| n.as_ref() == name).map(|(_, v)| v)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Value)> {
        self.0.iter().map(|(n, v)| (n.as_ref(), v))
    }
}

fn join(f: &mut fmt::Formatter<'_>, xs: &[impl fmt::Display], sep: &str) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(v),
            Term::Const(c) => write!(f, "{c}"),
            Term::App(s, args) if args.is_empty() => f.write_str(s),
            Term::App(s, args) => {
                write!(f, "{s}(")?;
                join(f, args, ", ")?;
                f.write_str(")")
            }
            Term::Add(a, b) => write!(f, "{a} + {b}"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Rel(s, args) => {
                write!(f, "{s}(")?;
                join(f, args, ", ")?;
                f.write_str(")")
            }
            Atom::Eq(a, b) => write!(f, "{a} = {b}"),
            Atom::Le(a, b) => write!(f, "{a} ≤ {b}"),
            Atom::Lt(a, b) => write!(f, "{a} < {b}"),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::True => f.write_str("⊤"),
            Node::False => f.write_str("⊥"),
            Node::Atom(a) => write!(f, "{a}"),
            Node::Not(x) => write!(f, "¬{x}"),
            Node::And(xs) if xs.is_empty() => f.write_str("⊤"),
            Node::Or(xs) | Node::Xor(xs) if xs.is_empty() => f.write_str("⊥"),
            Node::And(xs) => {
                f.write_str("(")?;
                join(f, xs, " ∧ ")?;
                f.write_str(")")
            }
            Node::Or(xs) => {
                f.write_str("(")?;
                join(f, xs, " ∨ ")?;
                f.write_str(")")
            }
            Node::Xor(xs) => {
                f.write_str("(")?;
                join(f, xs, " ⊕ ")?;
                f.write_str(")")
            }
            Node::Implies(a, b) => write!(f, "({a} → {b})"),
        }
    }
}
