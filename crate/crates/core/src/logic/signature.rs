use super::error::{LogicError, LogicResult};
use super::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

/// Name of the built-in boolean sort.
pub const BOOL: &str = "BOOL";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SortId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolId(pub u32);

/// A sort together with its ordered finite carrier.
#[derive(Clone, Debug)]
pub struct Sort {
    name: Arc<str>,
    carrier: Vec<Value>,
    index: HashMap<Value, u32>,
}

impl Sort {
    pub fn new(name: &str, carrier: Vec<Value>) -> LogicResult<Self> {
        if carrier.is_empty() {
            return Err(LogicError::EmptyCarrier(name.to_string()));
        }
        let mut index = HashMap::with_capacity(carrier.len());
        for (i, v) in carrier.iter().enumerate() {
            if index.insert(v.clone(), i as u32).is_some() {
                return Err(LogicError::DuplicateElement {
                    sort: name.to_string(),
                    value: v.to_string(),
                });
            }
        }
        Ok(Sort {
            name: Arc::from(name),
            carrier,
            index,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn carrier(&self) -> &[Value] {
        &self.carrier
    }

    pub fn position(&self, v: &Value) -> Option<u32> {
        self.index.get(v).copied()
    }

    pub fn contains(&self, v: &Value) -> bool {
        self.index.contains_key(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolKind {
    Relation,
    Function,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rigidity {
    Rigid,
    Flexible,
}

#[derive(Clone, Debug)]
pub struct SymbolDecl {
    pub name: Arc<str>,
    pub kind: SymbolKind,
    pub arg_sorts: Vec<SortId>,
    /// `BOOL` for relations.
    pub result_sort: SortId,
    pub rigidity: Rigidity,
}

impl SymbolDecl {
    pub fn is_flexible(&self) -> bool {
        self.rigidity == Rigidity::Flexible
    }

    pub fn is_relation(&self) -> bool {
        self.kind == SymbolKind::Relation
    }
}

/// Sorts (with carriers) and symbol declarations.
#[derive(Clone, Debug)]
pub struct Signature {
    sorts: Vec<Sort>,
    sort_index: HashMap<Arc<str>, SortId>,
    symbols: Vec<SymbolDecl>,
    symbol_index: HashMap<Arc<str>, SymbolId>,
}

impl Default for Signature {
    fn default() -> Self {
        Self::new()
    }
}

impl Signature {
    pub fn new() -> Self {
        let mut sig = Signature {
            sorts: Vec::new(),
            sort_index: HashMap::new(),
            symbols: Vec::new(),
            symbol_index: HashMap::new(),
        };
        sig.add_sort(BOOL, vec![Value::Bool(false), Value::Bool(true)])
            .expect("fresh signature");
        sig
    }

    pub fn add_sort(&mut self, name: &str, carrier: Vec<Value>) -> LogicResult<SortId> {
        if self.sort_index.contains_key(name) {
            return Err(LogicError::DuplicateSort(name.to_string()));
        }
        let sort = Sort::new(name, carrier)?;
        let id = SortId(self.sorts.len() as u32);
        self.sort_index.insert(sort.name.clone(), id);
        self.sorts.push(sort);
        Ok(id)
    }

    pub fn add_symbol(
        &mut self,
        name: &str,
        kind: SymbolKind,
        args: &[&str],
        result: &str,
        rigidity: Rigidity,
    ) -> LogicResult<SymbolId> {
        if self.symbol_index.contains_key(name) {
            return Err(LogicError::DuplicateSymbol(name.to_string()));
        }
        if kind == SymbolKind::Constant && !args.is_empty() {
            return Err(LogicError::IllTyped(format!(
                "constant `{name}` declared with arguments"
            )));
        }
        if kind == SymbolKind::Relation && result != BOOL {
            return Err(LogicError::IllTyped(format!(
                "relation `{name}` must have result sort {BOOL}"
            )));
        }
        let arg_sorts = args
            .iter()
            .map(|s| self.sort_id(s))
            .collect::<LogicResult<Vec<_>>>()?;
        let result_sort = self.sort_id(result)?;
        let id = SymbolId(self.symbols.len() as u32);
        let name: Arc<str> = Arc::from(name);
        self.symbol_index.insert(name.clone(), id);
        self.symbols.push(SymbolDecl {
            name,
            kind,
            arg_sorts,
            result_sort,
            rigidity,
        });
        Ok(id)
    }

    pub fn add_relation(
        &mut self,
        name: &str,
        args: &[&str],
        rigidity: Rigidity,
    ) -> LogicResult<SymbolId> {
        self.add_symbol(name, SymbolKind::Relation, args, BOOL, rigidity)
    }

    pub fn add_function(
        &mut self,
        name: &str,
        args: &[&str],
        result: &str,
        rigidity: Rigidity,
    ) -> LogicResult<SymbolId> {
        self.add_symbol(name, SymbolKind::Function, args, result, rigidity)
    }

    pub fn add_constant(
        &mut self,
        name: &str,
        result: &str,
        rigidity: Rigidity,
    ) -> LogicResult<SymbolId> {
        self.add_symbol(name, SymbolKind::Constant, &[], result, rigidity)
    }

    pub fn sort_id(&self, name: &str) -> LogicResult<SortId> {
        self.sort_index
            .get(name)
            .copied()
            .ok_or_else(|| LogicError::UnknownSort(name.to_string()))
    }

    pub fn sort(&self, id: SortId) -> &Sort {
        &self.sorts[id.0 as usize]
    }

    pub fn sort_named(&self, name: &str) -> LogicResult<&Sort> {
        Ok(self.sort(self.sort_id(name)?))
    }

    pub fn sorts(&self) -> &[Sort] {
        &self.sorts
    }

    pub fn symbol_id(&self, name: &str) -> LogicResult<SymbolId> {
        self.symbol_index
            .get(name)
            .copied()
            .ok_or_else(|| LogicError::UnknownSymbol(name.to_string()))
    }

    pub fn symbol(&self, id: SymbolId) -> &SymbolDecl {
        &self.symbols[id.0 as usize]
    }

    pub fn lookup(&self, name: &str) -> LogicResult<&SymbolDecl> {
        Ok(self.symbol(self.symbol_id(name)?))
    }

    pub fn symbols(&self) -> &[SymbolDecl] {
        &self.symbols
    }
}
