//! Many-sorted first-order IR: signatures, finite structures, quantifier-free
//! formulas, random facts and interpretations.

mod analysis;
mod error;
mod eval;
mod facts;
mod formula;
mod signature;
mod structure;
mod value;

pub use analysis::{check_diverse, check_unrelated, flexible_refs, ground_support, CheckOutcome};
pub use error::{LogicError, LogicResult};
pub use eval::{
    evaluate, evaluate_atom_with, evaluate_term_with, evaluate_with, FlexibleSource,
    InterpretationView,
};
pub use facts::{cartesian, enumerate_random_facts, FactId, FactSet, Interpretation, RandomFact};
pub use formula::{Atom, Binding, Formula, Node, Term};
pub use signature::{Rigidity, Signature, Sort, SortId, SymbolDecl, SymbolId, SymbolKind, BOOL};
pub use structure::{RigidTable, Structure, StructureBuilder};
pub use value::Value;
