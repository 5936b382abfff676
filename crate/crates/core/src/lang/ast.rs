//! MiniLang abstract syntax tree.
//!
//! The parser produces names only; [`crate::lang::typeck`] fills in expression
//! types and resolves every variable reference to a local slot or a field index.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Source position used for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

pub type ExprId = u32;
pub type StmtId = u32;
pub type PredId = u32;
pub type MethodId = u32;
/// Executable line number. Every executable statement owns exactly one line,
/// numbered by its ordinal position in source order (1-based).
pub type Line = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Type {
    Int,
    Float,
    Bool,
    Str,
}

impl Type {
    pub fn is_numeric(self) -> bool {
        matches!(self, Type::Int | Type::Float)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Type::Int => "int",
            Type::Float => "float",
            Type::Bool => "bool",
            Type::Str => "string",
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Visibility {
    Public,
    Private,
}

/// The five declared exception kinds plus the implicit arithmetic one raised by
/// division by zero and integer overflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExceptionKind {
    E1,
    E2,
    E3,
    E4,
    E5,
    Arithmetic,
}

impl ExceptionKind {
    pub const ALL: [ExceptionKind; 6] = [
        ExceptionKind::E1,
        ExceptionKind::E2,
        ExceptionKind::E3,
        ExceptionKind::E4,
        ExceptionKind::E5,
        ExceptionKind::Arithmetic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExceptionKind::E1 => "E1",
            ExceptionKind::E2 => "E2",
            ExceptionKind::E3 => "E3",
            ExceptionKind::E4 => "E4",
            ExceptionKind::E5 => "E5",
            ExceptionKind::Arithmetic => "Arithmetic",
        }
    }

    /// Kinds that can appear after `throw`.
    pub fn declared(name: &str) -> Option<ExceptionKind> {
        match name {
            "E1" => Some(ExceptionKind::E1),
            "E2" => Some(ExceptionKind::E2),
            "E3" => Some(ExceptionKind::E3),
            "E4" => Some(ExceptionKind::E4),
            "E5" => Some(ExceptionKind::E5),
            _ => None,
        }
    }
}

impl fmt::Display for ExceptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl ArithOp {
    pub const ALL: [ArithOp; 5] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div, ArithOp::Rem];

    pub fn token(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
            ArithOp::Rem => "%",
        }
    }

    pub fn from_token(tok: &str) -> Option<ArithOp> {
        ArithOp::ALL.into_iter().find(|op| op.token() == tok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl RelOp {
    pub const ALL: [RelOp; 6] = [RelOp::Lt, RelOp::Le, RelOp::Gt, RelOp::Ge, RelOp::Eq, RelOp::Ne];

    pub fn token(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Eq => "==",
            RelOp::Ne => "!=",
        }
    }

    pub fn from_token(tok: &str) -> Option<RelOp> {
        RelOp::ALL.into_iter().find(|op| op.token() == tok)
    }

    pub fn is_equality(self) -> bool {
        matches!(self, RelOp::Eq | RelOp::Ne)
    }

    /// Applies the operator to an already-computed ordering.
    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            RelOp::Lt => ord == Less,
            RelOp::Le => ord != Greater,
            RelOp::Gt => ord == Greater,
            RelOp::Ge => ord != Less,
            RelOp::Eq => ord == Equal,
            RelOp::Ne => ord != Equal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinOp {
    Arith(ArithOp),
    Rel(RelOp),
    And,
    Or,
}

impl BinOp {
    pub fn token(self) -> &'static str {
        match self {
            BinOp::Arith(op) => op.token(),
            BinOp::Rel(op) => op.token(),
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Rel(op) if op.is_equality() => 3,
            BinOp::Rel(_) => 4,
            BinOp::Arith(ArithOp::Add | ArithOp::Sub) => 5,
            BinOp::Arith(_) => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Literal {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl Literal {
    pub fn ty(&self) -> Type {
        match self {
            Literal::Int(_) => Type::Int,
            Literal::Float(_) => Type::Float,
            Literal::Bool(_) => Type::Bool,
            Literal::Str(_) => Type::Str,
        }
    }
}

/// Where a name lives once resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Place {
    Unresolved,
    Local(u32),
    Field(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub id: ExprId,
    pub pos: Pos,
    /// Filled in by the type checker.
    pub ty: Type,
    pub kind: ExprKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Lit(Literal),
    Var { name: String, place: Place },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call { name: String, method: Option<MethodId>, args: Vec<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub id: StmtId,
    pub line: Line,
    pub pos: Pos,
    pub kind: StmtKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Decl { ty: Type, name: String, slot: u32, init: Expr },
    Assign { name: String, place: Place, value: Expr },
    If { pred: PredId, cond: Expr, then_body: Vec<Stmt>, else_body: Option<Vec<Stmt>> },
    While { pred: PredId, cond: Expr, body: Vec<Stmt> },
    Return(Option<Expr>),
    Throw(ExceptionKind),
    Expr(Expr),
}

impl Stmt {
    /// Condition expression for `if` and `while` headers.
    pub fn predicate(&self) -> Option<(PredId, &Expr)> {
        match &self.kind {
            StmtKind::If { pred, cond, .. } | StmtKind::While { pred, cond, .. } => Some((*pred, cond)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub name: String,
    pub pos: Pos,
    pub visibility: Visibility,
    pub is_ctor: bool,
    pub params: Vec<Param>,
    /// `None` is `void`.
    pub ret: Option<Type>,
    pub body: Vec<Stmt>,
    /// Number of local slots, parameters first. Set by the type checker.
    pub frame_size: u32,
}

impl MethodDecl {
    /// Public, non-constructor methods are the ones a test may call directly.
    pub fn is_test_callable(&self) -> bool {
        self.visibility == Visibility::Public && !self.is_ctor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    /// Constructor first when present, then methods in source order.
    pub methods: Vec<MethodDecl>,
}

/// Walks every statement of a body in source order, including nested ones.
pub fn walk_stmts<'a>(body: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for stmt in body {
        f(stmt);
        match &stmt.kind {
            StmtKind::If { then_body, else_body, .. } => {
                walk_stmts(then_body, f);
                if let Some(e) = else_body {
                    walk_stmts(e, f);
                }
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            _ => {}
        }
    }
}

/// Top-level expressions directly owned by a statement.
pub fn stmt_exprs(stmt: &Stmt) -> Vec<&Expr> {
    match &stmt.kind {
        StmtKind::Decl { init, .. } => vec![init],
        StmtKind::Assign { value, .. } => vec![value],
        StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
        StmtKind::Return(Some(e)) | StmtKind::Expr(e) => vec![e],
        StmtKind::Return(None) | StmtKind::Throw(_) => vec![],
    }
}

/// Pre-order walk over an expression tree.
pub fn walk_expr<'a>(expr: &'a Expr, f: &mut dyn FnMut(&'a Expr)) {
    f(expr);
    match &expr.kind {
        ExprKind::Unary(_, e) => walk_expr(e, f),
        ExprKind::Binary(_, l, r) => {
            walk_expr(l, f);
            walk_expr(r, f);
        }
        ExprKind::Call { args, .. } => args.iter().for_each(|a| walk_expr(a, f)),
        ExprKind::Lit(_) | ExprKind::Var { .. } => {}
    }
}
