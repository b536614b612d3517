use super::error::{LogicError, LogicResult};
use super::formula::Formula;
use super::structure::Structure;
use super::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

/// A flexible symbol grounded at concrete arguments.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RandomFact {
    pub symbol: Arc<str>,
    pub args: Vec<Value>,
}

impl RandomFact {
    pub fn new(symbol: &str, args: Vec<Value>) -> Self {
        RandomFact {
            symbol: Arc::from(symbol),
            args,
        }
    }
}

impl fmt::Display for RandomFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.symbol)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FactId(pub u32);

impl FactId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Ordered set of random facts with their value ranges.
#[derive(Clone, Debug, Default)]
pub struct FactSet {
    facts: Vec<RandomFact>,
    ranges: Vec<Arc<[Value]>>,
    index: HashMap<RandomFact, FactId>,
}

impl FactSet {
    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn fact(&self, id: FactId) -> &RandomFact {
        &self.facts[id.index()]
    }

    pub fn range(&self, id: FactId) -> &[Value] {
        &self.ranges[id.index()]
    }

    pub fn id(&self, fact: &RandomFact) -> Option<FactId> {
        self.index.get(fact).copied()
    }

    pub fn lookup(&self, symbol: &str, args: &[Value]) -> Option<FactId> {
        self.id(&RandomFact::new(symbol, args.to_vec()))
    }

    pub fn ids(&self) -> impl Iterator<Item = FactId> {
        (0..self.facts.len() as u32).map(FactId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (FactId, &RandomFact)> {
        self.facts
            .iter()
            .enumerate()
            .map(|(i, f)| (FactId(i as u32), f))
    }

    /// True when every range value reads as 0 or 1.
    pub fn is_binary(&self, id: FactId) -> bool {
        self.range(id)
            .iter()
            .all(|v| matches!(v.as_f64(), Some(x) if x == 0.0 || x == 1.0))
    }

    /// Position of `v` in the range of `id`.
    pub fn value_index(&self, id: FactId, v: &Value) -> Option<u32> {
        self.range(id).iter().position(|x| x == v).map(|i| i as u32)
    }

    /// Number of joint assignments, saturating at `u128::MAX`.
    pub fn state_count(&self) -> u128 {
        self.ranges
            .iter()
            .fold(1u128, |acc, r| acc.saturating_mul(r.len() as u128))
    }

    fn push(&mut self, fact: RandomFact, range: Arc<[Value]>) {
        let id = FactId(self.facts.len() as u32);
        self.index.insert(fact.clone(), id);
        self.facts.push(fact);
        self.ranges.push(range);
    }

    /// All groundings of the named flexible symbols, ordered by symbol name
    /// and then lexicographically by argument carrier order.
    pub fn for_symbols<'a>(
        structure: &Structure,
        symbols: impl IntoIterator<Item = &'a str>,
    ) -> LogicResult<FactSet> {
        let sig = structure.signature();
        let names: BTreeSet<&str> = symbols.into_iter().collect();
        let mut set = FactSet::default();
        for name in names {
            let id = sig.symbol_id(name)?;
            let decl = sig.symbol(id);
            if !decl.is_flexible() {
                continue;
            }
            let range: Arc<[Value]> = Arc::from(sig.sort(decl.result_sort).carrier());
            let carriers: Vec<&[Value]> = decl
                .arg_sorts
                .iter()
                .map(|s| sig.sort(*s).carrier())
                .collect();
            for args in cartesian(&carriers) {
                set.push(RandomFact::new(name, args), range.clone());
            }
        }
        Ok(set)
    }

    pub fn symbols_of(&self) -> BTreeSet<Arc<str>> {
        self.facts.iter().map(|f| f.symbol.clone()).collect()
    }
}

/// Lexicographic product, last coordinate fastest.
pub fn cartesian(carriers: &[&[Value]]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for c in carriers {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                c.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// Every grounding of every flexible symbol occurring in `formula`.
pub fn enumerate_random_facts(formula: &Formula, structure: &Structure) -> LogicResult<FactSet> {
    let sig = structure.signature();
    let mut used: Vec<&str> = Vec::new();
    formula.for_each_atom(&mut |atom| {
        if let super::formula::Atom::Rel(s, _) = atom {
            used.push(s);
        }
        for t in atom.terms() {
            t.for_each_app(&mut |s, _| used.push(s));
        }
    });
    let mut names: BTreeSet<Arc<str>> = BTreeSet::new();
    let mut err = None;
    for s in used {
        match sig.lookup(s) {
            Ok(d) if d.is_flexible() => {
                names.insert(d.name.clone());
            }
            Ok(_) => {}
            Err(e) => err = Some(e),
        }
    }
    if let Some(e) = err {
        return Err(e);
    }
    FactSet::for_symbols(structure, names.iter().map(|s| s.as_ref()))
}

/// Value index per fact; total over a [`FactSet`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interpretation {
    values: Vec<u32>,
}

impl Interpretation {
    pub fn new(values: Vec<u32>) -> Self {
        Interpretation { values }
    }

    /// Every fact at the first value of its range (false for relations).
    pub fn zeros(facts: &FactSet) -> Self {
        Interpretation {
            values: vec![0; facts.len()],
        }
    }

    pub fn get(&self, id: FactId) -> u32 {
        self.values[id.index()]
    }

    pub fn set(&mut self, id: FactId, v: u32) {
        self.values[id.index()] = v;
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value<'a>(&self, facts: &'a FactSet, id: FactId) -> &'a Value {
        &facts.range(id)[self.get(id) as usize]
    }

    /// Sets a fact by value; fails if the fact or value is unknown.
    pub fn assign(&mut self, facts: &FactSet, fact: &RandomFact, v: &Value) -> LogicResult<()> {
        let id = facts
            .id(fact)
            .ok_or_else(|| LogicError::Incomplete(fact.to_string()))?;
        let idx = facts
            .value_index(id, v)
            .ok_or_else(|| LogicError::OutOfCarrier {
                sort: fact.symbol.to_string(),
                value: v.to_string(),
            })?;
        self.set(id, idx);
        Ok(())
    }

    /// Convenience for relation facts.
    pub fn set_true(&mut self, facts: &FactSet, symbol: &str, args: &[Value]) -> LogicResult<()> {
        self.assign(facts, &RandomFact::new(symbol, args.to_vec()), &Value::Bool(true))
    }

    pub fn holds(&self, facts: &FactSet, symbol: &str, args: &[Value]) -> bool {
        facts
            .lookup(symbol, args)
            .map(|id| self.value(facts, id) == &Value::Bool(true))
            .unwrap_or(false)
    }
}
