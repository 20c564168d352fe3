//! Surface syntax, as written in `.lm` files.

use crate::lang::Span;

#[derive(Debug, Clone, PartialEq)]
pub struct SExpr {
    pub span: Span,
    pub kind: SExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExprKind {
    Var(String),
    Con(String),
    Int(i64),
    Str(String),
    /// Qualifier wildcard, optionally sorted: `⋆` or `⋆:Int`.
    Wild(Option<Box<SType>>),
    App(Box<SExpr>, Box<SExpr>),
    BinOp(String, Box<SExpr>, Box<SExpr>),
    Neg(Box<SExpr>),
    Lam(Vec<SPat>, Box<SExpr>),
    If(Box<SExpr>, Box<SExpr>, Box<SExpr>),
    Case(Box<SExpr>, Vec<SAlt>),
    Let(Vec<SDecl>, Box<SExpr>),
    Tuple(Vec<SExpr>),
    List(Vec<SExpr>),
    Comp(Box<SExpr>, Vec<SQual>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SQual {
    Gen(SPat, SExpr),
    Guard(SExpr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SAlt {
    pub pat: SPat,
    pub rhs: Rhs,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SPat {
    pub span: Span,
    pub kind: SPatKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SPatKind {
    Var(String),
    Wild,
    Con(String, Vec<SPat>),
    Int(i64),
    Tuple(Vec<SPat>),
    List(Vec<SPat>),
    As(String, Box<SPat>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum RhsBody {
    Plain(SExpr),
    Guarded(Vec<(SExpr, SExpr)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    pub body: RhsBody,
    pub wheres: Vec<SDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SDecl {
    Sig { names: Vec<String>, sig: SSig, span: Span },
    Fun { name: String, args: Vec<SPat>, rhs: Rhs, span: Span },
    Pat { pat: SPat, rhs: Rhs, span: Span },
}

impl SDecl {
    pub fn span(&self) -> Span {
        match self {
            SDecl::Sig { span, .. } | SDecl::Fun { span, .. } | SDecl::Pat { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SType {
    pub span: Span,
    pub kind: STypeKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum STypeKind {
    Var(String),
    /// Type constructor or alias application. Lists use `List`, tuples
    /// `(,)`.
    Con(String, Vec<SType>),
    /// Application headed by a lower-case name; only meaningful as a value
    /// argument of an alias, e.g. `AVLN a (nodeHeight l r)`.
    VarApp(String, Vec<SType>),
    Fun(Option<String>, Box<SType>, Box<SType>),
    /// `{v:T | p}`
    Refine(String, Box<SType>, Box<SExpr>),
    /// `{p}` or an integer literal in argument position.
    PredArg(Box<SExpr>),
}

/// A type with its class context.
#[derive(Debug, Clone, PartialEq)]
pub struct SSig {
    pub ord: Vec<String>,
    pub ty: SType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SCtor {
    pub name: String,
    pub fields: Vec<(Option<String>, SType)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SData {
    pub name: String,
    pub params: Vec<String>,
    pub ctors: Vec<SCtor>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SAlias {
    pub name: String,
    pub params: Vec<String>,
    pub body: SType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SQualif {
    pub name: String,
    pub params: Vec<(String, SType)>,
    pub body: SExpr,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Annotation {
    Alias(SAlias),
    Data(SData),
    Measure { name: String, span: Span },
    Sig { name: String, sig: SSig, span: Span },
    Qualif(SQualif),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Ann(Annotation),
    /// Plain (unrefined) data declaration.
    Data(SData),
    Decl(SDecl),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
    pub items: Vec<Item>,
}
