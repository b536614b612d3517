use super::error::{LogicError, LogicResult};
use super::signature::{Rigidity, Signature, SymbolId, SymbolKind};
use super::value::Value;
use serde::Deserialize;
use std::collections::{HashMap, HashSet};

/// Fixed interpretation of one rigid symbol.
#[derive(Clone, Debug)]
pub enum RigidTable {
    Relation(HashSet<Vec<Value>>),
    Function(HashMap<Vec<Value>, Value>),
}

/// A signature with carriers plus interpretations of all rigid symbols.
#[derive(Clone, Debug)]
pub struct Structure {
    signature: Signature,
    tables: Vec<Option<RigidTable>>,
}

impl Structure {
    /// Validates that every rigid symbol has a total, well-typed table and
    /// that no flexible symbol is interpreted.
    pub fn new(signature: Signature, mut tables: HashMap<String, RigidTable>) -> LogicResult<Self> {
        let mut slots = Vec::with_capacity(signature.symbols().len());
        for decl in signature.symbols() {
            let table = tables.remove(decl.name.as_ref());
            match (decl.rigidity, table) {
                (Rigidity::Flexible, Some(_)) => {
                    return Err(LogicError::FlexibleInterpreted(decl.name.to_string()))
                }
                (Rigidity::Flexible, None) => slots.push(None),
                (Rigidity::Rigid, None) => {
                    return Err(LogicError::MissingRigid(decl.name.to_string()))
                }
                (Rigidity::Rigid, Some(t)) => {
                    check_table(&signature, decl.name.as_ref(), &t)?;
                    slots.push(Some(t));
                }
            }
        }
        if let Some(name) = tables.keys().next() {
            return Err(LogicError::UnknownSymbol(name.clone()));
        }
        Ok(Structure {
            signature,
            tables: slots,
        })
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    /// Checks that the request sorts every policy signature carries exist.
    pub fn require_request_sorts(&self) -> LogicResult<()> {
        self.signature.sort_id("USERS")?;
        self.signature.sort_id("PERMS")?;
        Ok(())
    }

    pub fn rigid_holds(&self, sym: SymbolId, args: &[Value]) -> LogicResult<bool> {
        match &self.tables[sym.0 as usize] {
            Some(RigidTable::Relation(set)) => Ok(set.contains(args)),
            _ => Err(LogicError::IllTyped(format!(
                "`{}` is not a rigid relation",
                self.signature.symbol(sym).name
            ))),
        }
    }

    pub fn rigid_apply(&self, sym: SymbolId, args: &[Value]) -> LogicResult<Value> {
        match &self.tables[sym.0 as usize] {
            Some(RigidTable::Function(map)) => map.get(args).cloned().ok_or_else(|| {
                LogicError::IllTyped(format!(
                    "`{}` applied outside its domain",
                    self.signature.symbol(sym).name
                ))
            }),
            _ => Err(LogicError::IllTyped(format!(
                "`{}` is not a rigid function",
                self.signature.symbol(sym).name
            ))),
        }
    }

    /// Loads a structure from its JSON description. Rigid function rows carry
    /// the result as their last element.
    pub fn from_json(text: &str) -> LogicResult<Self> {
        let doc: StructureDoc =
            serde_json::from_str(text).map_err(|e| LogicError::Document(e.to_string()))?;
        let mut sig = Signature::new();
        for s in &doc.sorts {
            sig.add_sort(&s.name, s.carrier.clone())?;
        }
        for s in &doc.symbols {
            let args: Vec<&str> = s.args.iter().map(String::as_str).collect();
            let result = match (s.kind, &s.result) {
                (SymbolKind::Relation, _) => super::signature::BOOL.to_string(),
                (_, Some(r)) => r.clone(),
                (_, None) => {
                    return Err(LogicError::Document(format!(
                        "symbol `{}` needs a result sort",
                        s.name
                    )))
                }
            };
            sig.add_symbol(&s.name, s.kind, &args, &result, s.rigidity)?;
        }
        let mut tables = HashMap::new();
        for (name, rows) in doc.rigid {
            let decl = sig.lookup(&name)?;
            let table = if decl.is_relation() {
                RigidTable::Relation(rows.into_iter().collect())
            } else {
                let mut map = HashMap::new();
                for mut row in rows {
                    let result = row.pop().ok_or_else(|| {
                        LogicError::Document(format!("empty row in table `{name}`"))
                    })?;
                    map.insert(row, result);
                }
                RigidTable::Function(map)
            };
            tables.insert(name, table);
        }
        Structure::new(sig, tables)
    }
}

fn check_table(sig: &Signature, name: &str, table: &RigidTable) -> LogicResult<()> {
    let decl = sig.lookup(name)?;
    let bad = |reason: String| LogicError::RigidTable {
        symbol: name.to_string(),
        reason,
    };
    let check_args = |args: &[Value]| -> LogicResult<()> {
        if args.len() != decl.arg_sorts.len() {
            return Err(bad(format!("row of arity {} expected {}", args.len(), decl.arg_sorts.len())));
        }
        for (v, s) in args.iter().zip(&decl.arg_sorts) {
            if !sig.sort(*s).contains(v) {
                return Err(bad(format!("`{v}` not in {}", sig.sort(*s).name())));
            }
        }
        Ok(())
    };
    match table {
        RigidTable::Relation(set) => {
            if !decl.is_relation() {
                return Err(bad("relation table for a function".into()));
            }
            set.iter().try_for_each(|row| check_args(row))
        }
        RigidTable::Function(map) => {
            if decl.is_relation() {
                return Err(bad("function table for a relation".into()));
            }
            let result_sort = sig.sort(decl.result_sort);
            for (args, v) in map {
                check_args(args)?;
                if !result_sort.contains(v) {
                    return Err(bad(format!("result `{v}` not in {}", result_sort.name())));
                }
            }
            let domain: usize = decl
                .arg_sorts
                .iter()
                .map(|s| sig.sort(*s).carrier().len())
                .product();
            if map.len() != domain {
                return Err(bad(format!("{} of {} arguments covered", map.len(), domain)));
            }
            Ok(())
        }
    }
}

#[derive(Deserialize)]
struct StructureDoc {
    sorts: Vec<SortDoc>,
    symbols: Vec<SymbolDoc>,
    #[serde(default)]
    rigid: HashMap<String, Vec<Vec<Value>>>,
}

#[derive(Deserialize)]
struct SortDoc {
    name: String,
    carrier: Vec<Value>,
}

#[derive(Deserialize)]
struct SymbolDoc {
    name: String,
    kind: SymbolKind,
    #[serde(default)]
    args: Vec<String>,
    result: Option<String>,
    rigidity: Rigidity,
}

/// Incremental construction of a [`Structure`].
#[derive(Default)]
pub struct StructureBuilder {
    pub signature: Signature,
    tables: HashMap<String, RigidTable>,
}

impl StructureBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn sort(&mut self, name: &str, carrier: Vec<Value>) -> LogicResult<&mut Self> {
        self.signature.add_sort(name, carrier)?;
        Ok(self)
    }

    pub fn flexible_relation(&mut self, name: &str, args: &[&str]) -> LogicResult<&mut Self> {
        self.signature.add_relation(name, args, Rigidity::Flexible)?;
        Ok(self)
    }

    pub fn flexible_function(
        &mut self,
        name: &str,
        args: &[&str],
        result: &str,
    ) -> LogicResult<&mut Self> {
        self.signature.add_function(name, args, result, Rigidity::Flexible)?;
        Ok(self)
    }

    pub fn rigid_relation(
        &mut self,
        name: &str,
        args: &[&str],
        rows: impl IntoIterator<Item = Vec<Value>>,
    ) -> LogicResult<&mut Self> {
        self.signature.add_relation(name, args, Rigidity::Rigid)?;
        self.tables
            .insert(name.to_string(), RigidTable::Relation(rows.into_iter().collect()));
        Ok(self)
    }

    pub fn rigid_function(
        &mut self,
        name: &str,
        args: &[&str],
        result: &str,
        rows: impl IntoIterator<Item = (Vec<Value>, Value)>,
    ) -> LogicResult<&mut Self> {
        self.signature.add_function(name, args, result, Rigidity::Rigid)?;
        self.tables
            .insert(name.to_string(), RigidTable::Function(rows.into_iter().collect()));
        Ok(self)
    }

    pub fn rigid_constant(&mut self, name: &str, sort: &str, value: Value) -> LogicResult<&mut Self> {
        self.signature.add_constant(name, sort, Rigidity::Rigid)?;
        let mut map = HashMap::new();
        map.insert(Vec::new(), value);
        self.tables.insert(name.to_string(), RigidTable::Function(map));
        Ok(self)
    }

    pub fn build(self) -> LogicResult<Structure> {
        Structure::new(self.signature, self.tables)
    }
}
