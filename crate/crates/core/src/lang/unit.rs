use std::collections::{BTreeMap, BTreeSet};

use super::ast::*;
use super::cdg::{build_cdg, BranchSide, ControlDependencyGraph};
use super::cfg::{build_cfg, BlockId, Cfg};

#[derive(Debug, Clone)]
pub struct MethodGraphs {
    pub cfg: Cfg,
    pub cdg: ControlDependencyGraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StmtInfo {
    pub method: MethodId,
    pub line: Line,
    pub block: BlockId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PredInfo {
    pub method: MethodId,
    pub stmt: StmtId,
    pub line: Line,
    pub block: BlockId,
    /// Branch outcomes that control whether this predicate is evaluated.
    pub deps: BTreeSet<BranchSide>,
    /// Evaluated on every entry to the method, whatever `deps` says.
    pub on_entry: bool,
}

/// A parsed, type-checked MiniLang class with its per-method graphs.
///
/// Immutable after construction and shared freely across search workers.
#[derive(Debug, Clone)]
pub struct SourceUnit {
    pub name: String,
    pub class: ClassDecl,
    pub graphs: Vec<MethodGraphs>,
    /// Indexed by statement id; statement `i` owns line `i + 1`.
    pub stmts: Vec<StmtInfo>,
    pub preds: Vec<PredInfo>,
    /// Literal values appearing in the source, for constant seeding.
    pub constants: Vec<Literal>,
}

impl SourceUnit {
    pub(crate) fn build(class: ClassDecl) -> SourceUnit {
        let mut stmts: BTreeMap<StmtId, StmtInfo> = BTreeMap::new();
        let mut preds: BTreeMap<PredId, PredInfo> = BTreeMap::new();
        let mut constants: Vec<Literal> = Vec::new();
        let mut graphs = Vec::with_capacity(class.methods.len());

        for (mid, method) in class.methods.iter().enumerate() {
            let cfg = build_cfg(method);
            let cdg = build_cdg(&cfg);
            let mut block_of: BTreeMap<StmtId, BlockId> = BTreeMap::new();
            for block in &cfg.blocks {
                for &s in &block.stmts {
                    block_of.insert(s, block.id);
                }
            }
            walk_stmts(&method.body, &mut |stmt| {
                let block = block_of[&stmt.id];
                stmts.insert(stmt.id, StmtInfo { method: mid as MethodId, line: stmt.line, block });
                if let Some((pred, _)) = stmt.predicate() {
                    preds.insert(
                        pred,
                        PredInfo {
                            method: mid as MethodId,
                            stmt: stmt.id,
                            line: stmt.line,
                            block,
                            deps: cdg.deps(block).iter().copied().filter(|d| d.pred != pred).collect(),
                            on_entry: cdg.on_entry(block),
                        },
                    );
                }
                for e in stmt_exprs(stmt) {
                    walk_expr(e, &mut |x| {
                        if let ExprKind::Lit(lit) = &x.kind {
                            if !constants.contains(lit) {
                                constants.push(lit.clone());
                            }
                        }
                    });
                }
            });
            graphs.push(MethodGraphs { cfg, cdg });
        }

        debug_assert!(stmts.keys().copied().eq(0..stmts.len() as StmtId));
        debug_assert!(preds.keys().copied().eq(0..preds.len() as PredId));
        SourceUnit {
            name: class.name.clone(),
            class,
            graphs,
            stmts: stmts.into_values().collect(),
            preds: preds.into_values().collect(),
            constants,
        }
    }

    pub fn methods(&self) -> &[MethodDecl] {
        &self.class.methods
    }

    pub fn method(&self, id: MethodId) -> &MethodDecl {
        &self.class.methods[id as usize]
    }

    pub fn method_id(&self, name: &str) -> Option<MethodId> {
        self.class.methods.iter().position(|m| m.name == name).map(|i| i as MethodId)
    }

    pub fn ctor(&self) -> Option<MethodId> {
        self.class.methods.iter().position(|m| m.is_ctor).map(|i| i as MethodId)
    }

    /// Public non-constructor methods, the ones tests may call.
    pub fn public_methods(&self) -> impl Iterator<Item = MethodId> + '_ {
        self.class.methods.iter().enumerate().filter(|(_, m)| m.is_test_callable()).map(|(i, _)| i as MethodId)
    }

    pub fn line_count(&self) -> usize {
        self.stmts.len()
    }

    /// All executable lines in order.
    pub fn lines(&self) -> impl Iterator<Item = Line> + '_ {
        self.stmts.iter().map(|s| s.line)
    }

    pub fn line_info(&self, line: Line) -> Option<&StmtInfo> {
        line.checked_sub(1).and_then(|i| self.stmts.get(i as usize))
    }

    /// Mapping from line to owning `(method, block)`.
    pub fn line_table(&self) -> BTreeMap<Line, (MethodId, BlockId)> {
        self.stmts.iter().map(|s| (s.line, (s.method, s.block))).collect()
    }

    /// Immediate control dependencies of a line.
    pub fn line_deps(&self, line: Line) -> &BTreeSet<BranchSide> {
        let info = self.line_info(line).expect("line belongs to unit");
        self.graphs[info.method as usize].cdg.deps(info.block)
    }

    /// Whether a line runs on every entry to its method.
    pub fn line_on_entry(&self, line: Line) -> bool {
        let info = self.line_info(line).expect("line belongs to unit");
        self.graphs[info.method as usize].cdg.on_entry(info.block)
    }

    pub fn branch_sides(&self) -> impl Iterator<Item = BranchSide> + '_ {
        (0..self.preds.len() as PredId).flat_map(|pred| [BranchSide { pred, side: true }, BranchSide { pred, side: false }])
    }

    pub fn count_branches(&self) -> usize {
        2 * self.preds.len()
    }

    pub fn stmt(&self, id: StmtId) -> Option<&Stmt> {
        let info = self.stmts.get(id as usize)?;
        let mut found = None;
        walk_stmts(&self.method(info.method).body, &mut |s| {
            if s.id == id {
                found = Some(s);
            }
        });
        found
    }
}
