//! Ground arithmetic circuits for formula instances.
//!
//! A formula at a binding compiles to a DAG whose gates are indicators over
//! one fact, truth tables over a few function facts, complements, products
//! over fact-disjoint children and sums over exclusive children. Gates are hash-consed, so instances that share a
//! subformula share its gates. Children always precede parents.

use super::distribution::FactorDistribution;
use super::error::{ExpectationError, ExpectationResult};
use crate::logic::{
    evaluate_atom_with, evaluate_term_with, Atom, Binding, FactId, FactSet, FlexibleSource,
    Formula, LogicError, LogicResult, Node, RandomFact, Structure, Term, Value,
};
use std::collections::HashMap;
use std::sync::Arc;

pub(crate) type NodeId = u32;

/// Largest joint table built for one atom.
const JOINT_LIMIT: usize = 1 << 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Gate {
    Indicator { fact: FactId, mask: Box<[bool]> },
    /// Truth table over the product of the facts' ranges, last fact fastest.
    Joint { facts: Box<[FactId]>, table: Box<[bool]> },
    Not(NodeId),
    And(Box<[NodeId]>),
    Sum(Box<[NodeId]>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Compiled {
    Const(bool),
    Node(NodeId),
}

#[derive(Clone, Copy, Debug)]
pub struct Pin {
    pub fact: FactId,
    pub value: u32,
}

#[derive(Debug, Default)]
pub(crate) struct Circuit {
    pub gates: Vec<Gate>,
    pub supports: Vec<Arc<[FactId]>>,
    consing: HashMap<Gate, NodeId>,
}

impl Circuit {
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    fn intern(&mut self, gate: Gate, support: Arc<[FactId]>) -> NodeId {
        if let Some(&id) = self.consing.get(&gate) {
            return id;
        }
        let id = self.gates.len() as NodeId;
        self.consing.insert(gate.clone(), id);
        self.gates.push(gate);
        self.supports.push(support);
        id
    }

    /// Drops the hash-consing table once compilation is finished.
    pub fn freeze(&mut self) {
        self.consing = HashMap::new();
    }

    /// Facts each gate reads directly.
    pub fn direct_facts(&self, id: NodeId) -> &[FactId] {
        match &self.gates[id as usize] {
            Gate::Indicator { .. } | Gate::Joint { .. } => &self.supports[id as usize],
            _ => &[],
        }
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        match &self.gates[id as usize] {
            Gate::Not(c) => std::slice::from_ref(c),
            Gate::And(cs) | Gate::Sum(cs) => cs,
            _ => &[],
        }
    }

    /// Value of one gate given its children's values.
    pub fn eval_gate(
        &self,
        id: NodeId,
        child: impl Fn(NodeId) -> f64,
        q: &FactorDistribution,
        pin: Option<Pin>,
    ) -> f64 {
        match &self.gates[id as usize] {
            Gate::Indicator { fact, mask } => match pin {
                Some(p) if p.fact == *fact => mask[p.value as usize] as u8 as f64,
                _ => q
                    .pmf(*fact)
                    .iter()
                    .zip(mask.iter())
                    .filter(|(_, m)| **m)
                    .map(|(p, _)| *p)
                    .sum(),
            },
            Gate::Joint { facts, table } => joint_expectation(facts, table, q, pin),
            Gate::Not(c) => 1.0 - child(*c),
            Gate::And(cs) => cs.iter().map(|c| child(*c)).product(),
            Gate::Sum(cs) => cs.iter().map(|c| child(*c)).sum(),
        }
    }

    /// Values of all gates in creation order.
    pub fn eval_all(&self, q: &FactorDistribution, pin: Option<Pin>) -> Vec<f64> {
        let mut vals = vec![0.0; self.gates.len()];
        for id in 0..self.gates.len() {
            let v = self.eval_gate(id as NodeId, |c| vals[c as usize], q, pin);
            vals[id] = v;
        }
        vals
    }
}

fn joint_expectation(
    facts: &[FactId],
    table: &[bool],
    q: &FactorDistribution,
    pin: Option<Pin>,
) -> f64 {
    let k = facts.len();
    let mut strides = vec![1usize; k];
    for i in (0..k.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * q.pmf(facts[i + 1]).len();
    }
    #[allow(clippy::too_many_arguments)]
    fn walk(
        level: usize,
        offset: usize,
        weight: f64,
        facts: &[FactId],
        strides: &[usize],
        table: &[bool],
        q: &FactorDistribution,
        pin: Option<Pin>,
    ) -> f64 {
        if level == facts.len() {
            return if table[offset] { weight } else { 0.0 };
        }
        let f = facts[level];
        match pin {
            Some(p) if p.fact == f => walk(
                level + 1,
                offset + p.value as usize * strides[level],
                weight,
                facts,
                strides,
                table,
                q,
                pin,
            ),
            _ => q
                .pmf(f)
                .iter()
                .enumerate()
                .filter(|(_, m)| **m != 0.0)
                .map(|(v, m)| {
                    walk(
                        level + 1,
                        offset + v * strides[level],
                        weight * m,
                        facts,
                        strides,
                        table,
                        q,
                        pin,
                    )
                })
                .sum(),
        }
    }
    walk(0, 0, 1.0, facts, &strides, table, q, pin)
}

/// Rejects flexible symbols; used to evaluate rigid arguments.
struct RigidOnly;

impl FlexibleSource for RigidOnly {
    fn flexible_value(&self, fact: &RandomFact) -> LogicResult<Value> {
        Err(LogicError::IllTyped(format!(
            "flexible term {fact} where a rigid value is required"
        )))
    }
}

struct Assignment<'a> {
    facts: &'a FactSet,
    ids: &'a [FactId],
    digits: &'a [usize],
}

impl FlexibleSource for Assignment<'_> {
    fn flexible_value(&self, fact: &RandomFact) -> LogicResult<Value> {
        let id = self
            .facts
            .id(fact)
            .ok_or_else(|| LogicError::Incomplete(fact.to_string()))?;
        let k = self
            .ids
            .iter()
            .position(|x| *x == id)
            .ok_or_else(|| LogicError::Incomplete(fact.to_string()))?;
        Ok(self.facts.range(id)[self.digits[k]].clone())
    }
}

pub(crate) struct Compiler<'a> {
    pub structure: &'a Structure,
    pub facts: &'a FactSet,
    pub circuit: &'a mut Circuit,
    memo: HashMap<*const Node, Compiled>,
}

impl<'a> Compiler<'a> {
    pub fn new(structure: &'a Structure, facts: &'a FactSet, circuit: &'a mut Circuit) -> Self {
        Compiler {
            structure,
            facts,
            circuit,
            memo: HashMap::new(),
        }
    }

    /// Compiles one formula instance. Shared subformulas are compiled once
    /// per call.
    pub fn compile(&mut self, f: &Formula, binding: &Binding) -> ExpectationResult<Compiled> {
        self.memo.clear();
        self.formula(f, binding)
    }

    fn formula(&mut self, f: &Formula, b: &Binding) -> ExpectationResult<Compiled> {
        let key = f.node() as *const Node;
        if let Some(c) = self.memo.get(&key) {
            return Ok(*c);
        }
        let out = match f.node() {
            Node::True => Compiled::Const(true),
            Node::False => Compiled::Const(false),
            Node::Atom(a) => self.atom(a, b)?,
            Node::Not(x) => {
                let c = self.formula(x, b)?;
                self.not(c)
            }
            Node::And(xs) => {
                let cs = xs
                    .iter()
                    .map(|x| self.formula(x, b))
                    .collect::<ExpectationResult<Vec<_>>>()?;
                self.and(cs, f)?
            }
            Node::Or(xs) => {
                let mut cs = Vec::with_capacity(xs.len());
                for x in xs {
                    let c = self.formula(x, b)?;
                    cs.push(self.not(c));
                }
                let conj = self.and(cs, f)?;
                self.not(conj)
            }
            Node::Implies(x, y) => {
                let cx = self.formula(x, b)?;
                let cy = self.formula(y, b)?;
                let ny = self.not(cy);
                let conj = self.and(vec![cx, ny], f)?;
                self.not(conj)
            }
            Node::Xor(xs) => {
                let mut kids = Vec::new();
                let mut any_true = false;
                for x in xs {
                    match self.formula(x, b)? {
                        Compiled::Const(true) => any_true = true,
                        Compiled::Const(false) => {}
                        Compiled::Node(n) => kids.push(n),
                    }
                }
                if any_true {
                    Compiled::Const(true)
                } else {
                    match kids.len() {
                        0 => Compiled::Const(false),
                        1 => Compiled::Node(kids[0]),
                        _ => {
                            let support = union(kids.iter().map(|k| &self.circuit.supports[*k as usize]));
                            Compiled::Node(self.circuit.intern(Gate::Sum(kids.into()), support))
                        }
                    }
                }
            }
        };
        self.memo.insert(key, out);
        Ok(out)
    }

    fn not(&mut self, c: Compiled) -> Compiled {
        match c {
            Compiled::Const(v) => Compiled::Const(!v),
            Compiled::Node(n) => {
                if let Gate::Not(inner) = self.circuit.gates[n as usize] {
                    return Compiled::Node(inner);
                }
                let support = self.circuit.supports[n as usize].clone();
                Compiled::Node(self.circuit.intern(Gate::Not(n), support))
            }
        }
    }

    fn and(&mut self, cs: Vec<Compiled>, origin: &Formula) -> ExpectationResult<Compiled> {
        let mut kids = Vec::with_capacity(cs.len());
        for c in cs {
            match c {
                Compiled::Const(false) => return Ok(Compiled::Const(false)),
                Compiled::Const(true) => {}
                Compiled::Node(n) => kids.push(n),
            }
        }
        match kids.len() {
            0 => Ok(Compiled::Const(true)),
            1 => Ok(Compiled::Node(kids[0])),
            _ => {
                let total: usize = kids
                    .iter()
                    .map(|k| self.circuit.supports[*k as usize].len())
                    .sum();
                let support = union(kids.iter().map(|k| &self.circuit.supports[*k as usize]));
                if support.len() != total {
                    let shared = shared_fact(kids.iter().map(|k| &self.circuit.supports[*k as usize]))
                        .map(|f| self.facts.fact(f).to_string())
                        .unwrap_or_default();
                    return Err(ExpectationError::Decomposition {
                        subformula: truncate(origin.to_string()),
                        reason: format!("conjuncts share random fact {shared}"),
                    });
                }
                Ok(Compiled::Node(self.circuit.intern(Gate::And(kids.into()), support)))
            }
        }
    }

    fn ground_fact(&self, sym: &str, args: &[Term], b: &Binding) -> ExpectationResult<FactId> {
        let vals = args
            .iter()
            .map(|t| evaluate_term_with(t, self.structure, &RigidOnly, b))
            .collect::<LogicResult<Vec<_>>>()
            .map_err(|e| ExpectationError::Unsupported(format!("{sym}: {e}")))?;
        let decl = self.structure.signature().lookup(sym)?;
        let fact = RandomFact {
            symbol: decl.name.clone(),
            args: vals,
        };
        self.facts
            .id(&fact)
            .ok_or_else(|| ExpectationError::UnknownFact(fact.to_string()))
    }

    fn atom(&mut self, a: &Atom, b: &Binding) -> ExpectationResult<Compiled> {
        let sig = self.structure.signature();
        let flex = |s: &str| -> ExpectationResult<bool> { Ok(sig.lookup(s)?.is_flexible()) };
        let mut ids: Vec<FactId> = Vec::new();
        if let Atom::Rel(sym, args) = a {
            if flex(sym)? {
                let id = self.ground_fact(sym, args, b)?;
                let mask: Box<[bool]> = self
                    .facts
                    .range(id)
                    .iter()
                    .map(|v| *v == Value::Bool(true))
                    .collect();
                return Ok(Compiled::Node(
                    self.circuit
                        .intern(Gate::Indicator { fact: id, mask }, Arc::from([id].as_slice())),
                ));
            }
        }
        let mut apps: Vec<(&str, &[Term])> = Vec::new();
        for t in a.terms() {
            t.for_each_app(&mut |s, args| apps.push((s, args)));
        }
        for (s, args) in apps {
            if flex(s)? {
                let id = self.ground_fact(s, args, b)?;
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
        }
        if ids.is_empty() {
            return Ok(Compiled::Const(evaluate_atom_with(a, self.structure, &RigidOnly, b)?));
        }
        let radices: Vec<usize> = ids.iter().map(|id| self.facts.range(*id).len()).collect();
        let size: usize = radices.iter().product();
        if size > JOINT_LIMIT {
            return Err(ExpectationError::Unsupported(format!(
                "atom {a} ranges over {size} joint values"
            )));
        }
        let mut table = Vec::with_capacity(size);
        let mut digits = vec![0usize; ids.len()];
        for _ in 0..size {
            let src = Assignment {
                facts: self.facts,
                ids: &ids,
                digits: &digits,
            };
            table.push(evaluate_atom_with(a, self.structure, &src, b)?);
            for k in (0..digits.len()).rev() {
                digits[k] += 1;
                if digits[k] < radices[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        if table.iter().all(|x| *x) {
            return Ok(Compiled::Const(true));
        }
        if table.iter().all(|x| !*x) {
            return Ok(Compiled::Const(false));
        }
        let mut sorted = ids.clone();
        sorted.sort();
        let gate = if ids.len() == 1 {
            Gate::Indicator {
                fact: ids[0],
                mask: table.into(),
            }
        } else {
            Gate::Joint {
                facts: ids.into(),
                table: table.into(),
            }
        };
        Ok(Compiled::Node(self.circuit.intern(gate, Arc::from(sorted))))
    }
}

fn union<'s>(sets: impl Iterator<Item = &'s Arc<[FactId]>>) -> Arc<[FactId]> {
    let mut all: Vec<FactId> = sets.flat_map(|s| s.iter().copied()).collect();
    all.sort_unstable();
    all.dedup();
    Arc::from(all)
}

fn shared_fact<'s>(sets: impl Iterator<Item = &'s Arc<[FactId]>>) -> Option<FactId> {
    let mut seen = std::collections::HashSet::new();
    for s in sets {
        for f in s.iter() {
            if !seen.insert(*f) {
                return Some(*f);
            }
        }
    }
    None
}

pub(crate) fn truncate(mut s: String) -> String {
    const MAX: usize = 240;
    if s.chars().count() > MAX {
        s = s.chars().take(MAX).collect::<String>() + "…";
    }
    s
}
