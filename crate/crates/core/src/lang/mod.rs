//! MiniLang frontend: parsing, type checking, control-flow and
//! control-dependence graphs.

pub mod ast;
pub mod cdg;
pub mod cfg;
mod lexer;
mod parser;
pub mod pretty;
mod typeck;
mod unit;

use thiserror::Error;

pub use ast::{ExceptionKind, Line, MethodDecl, MethodId, PredId, StmtId, Type, Visibility};
pub use cdg::{build_cdg, BranchSide, ControlDependencyGraph};
pub use cfg::{build_cfg, BasicBlock, BlockId, Cfg, Edge, EdgeKind};
pub use pretty::pretty_print;
pub use unit::{MethodGraphs, PredInfo, SourceUnit, StmtInfo};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("duplicate method `{name}` at {line}:{col}")]
    DuplicateMethod { name: String, line: u32, col: u32 },
    #[error("type error at {line}:{col}: {msg}")]
    Type { line: u32, col: u32, msg: String },
}

impl FrontendError {
    pub(crate) fn syntax(pos: ast::Pos, msg: impl Into<String>) -> Self {
        FrontendError::Syntax { line: pos.line, col: pos.col, msg: msg.into() }
    }

    pub(crate) fn ty(pos: ast::Pos, msg: impl Into<String>) -> Self {
        FrontendError::Type { line: pos.line, col: pos.col, msg: msg.into() }
    }
}

/// Parses and type-checks a MiniLang class, then builds its graphs.
pub fn parse(source: &str) -> Result<SourceUnit, FrontendError> {
    let mut class = parser::parse_class(source)?;
    typeck::check_class(&mut class)?;
    Ok(SourceUnit::build(class))
}

/// Twice the number of predicates: every `if`/`while` condition has a true
/// and a false branch goal.
pub fn count_branches(unit: &SourceUnit) -> usize {
    unit.count_branches()
}
