//! Constraint Aggregation Language.
//!
//! Parses CAL box declarations, evaluates their clauses by unification and
//! exact rational arithmetic, exports them as Horn clauses, and aggregates
//! constraints across networks of connected boxes.

pub mod error;
pub mod syntax;
pub mod terms;
pub mod unify;
pub mod arith;
pub mod clauses;
pub mod horn;
pub mod aggregate;
pub mod cli;

pub use error::{CalError, Diagnostic, Pos, Result, Severity};
pub use terms::{Session, SetTerm, Term, TermKind, Var, VarKind};
