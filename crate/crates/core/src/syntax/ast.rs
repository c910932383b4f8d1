//! Surface syntax tree, before desugaring.

use std::fmt;

use num_rational::BigRational;

use crate::error::Pos;

/// Source position attached to AST nodes. Two spans always compare equal so
/// that structural equality of trees ignores where they came from.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span(pub Pos);

impl PartialEq for Span {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Span {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelOp {
    Eq,
    Gt,
    Lt,
    Ge,
    Le,
    Ne,
}

impl RelOp {
    pub fn as_str(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Gt => ">",
            RelOp::Lt => "<",
            RelOp::Ge => ">=",
            RelOp::Le => "<=",
            RelOp::Ne => "!=",
        }
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InfixOp {
    Plus,
    Minus,
    Times,
    Slash,
    Hat,
    Union,
}

impl InfixOp {
    pub fn as_str(self) -> &'static str {
        match self {
            InfixOp::Plus => "+",
            InfixOp::Minus => "-",
            InfixOp::Times => "*",
            InfixOp::Slash => "/",
            InfixOp::Hat => "^",
            InfixOp::Union => "\\/",
        }
    }

    /// The reserved backslash identifier the operator desugars to.
    pub fn symbol(self) -> &'static str {
        match self {
            InfixOp::Plus => crate::terms::PLUS,
            InfixOp::Minus => crate::terms::MINUS,
            InfixOp::Times => crate::terms::TIMES,
            InfixOp::Slash => crate::terms::SLASH,
            InfixOp::Hat => crate::terms::HAT,
            InfixOp::Union => crate::terms::UNION,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sigil {
    /// `$name`
    Single,
    /// `$$name`
    Double,
    /// `$_`
    Anon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarRef {
    pub sigil: Sigil,
    pub name: String,
    pub span: Span,
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sigil {
            Sigil::Single => write!(f, "${}", self.name),
            Sigil::Double => write!(f, "$${}", self.name),
            Sigil::Anon => f.write_str("$_"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Num(BigRational),
    Sym(String),
    Var(VarRef),
    /// `(e1, e2, ...)`, at least two members.
    Tuple(Vec<Expr>),
    /// `head(e1, ...)`, the head-extraction form of a tuple.
    Apply(String, Vec<Expr>),
    /// `{e1, ...}`
    Set(Vec<Expr>),
    Binary(InfixOp, Box<Expr>, Box<Expr>),
    /// Leading sign applied to a non-literal operand.
    Neg(Box<Expr>),
    /// `( e )` used for grouping.
    Group(Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SurfacePredicate {
    Relation {
        lhs: Expr,
        op: RelOp,
        rhs: Expr,
        span: Span,
    },
    Equivalence {
        lhs: Expr,
        rhs: Expr,
        span: Span,
    },
}

impl SurfacePredicate {
    pub fn span(&self) -> Span {
        match self {
            SurfacePredicate::Relation { span, .. } | SurfacePredicate::Equivalence { span, .. } => {
                *span
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceClause {
    pub conditions: Vec<SurfacePredicate>,
    pub assertions: Vec<SurfacePredicate>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvidedBlock {
    pub conditions: Vec<SurfacePredicate>,
    pub decls: Vec<Decl>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decl {
    Clause(SurfaceClause),
    Provided(ProvidedBlock),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub name: String,
    /// `None` when the signature omits the input tuple entirely.
    pub input: Option<Vec<String>>,
    pub outputs: Vec<Vec<String>>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceAst {
    pub header: Header,
    pub decls: Vec<Decl>,
}
