//! Per-method control-flow graphs over basic blocks.

use serde::Serialize;

use super::ast::*;

pub type BlockId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeKind {
    True,
    False,
    Fallthrough,
    Exception,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Edge {
    pub from: BlockId,
    pub to: BlockId,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BasicBlock {
    pub id: BlockId,
    pub stmts: Vec<StmtId>,
    /// Lines in execution order.
    pub lines: Vec<Line>,
    /// Set when the block ends in an `if`/`while` condition.
    pub predicate: Option<PredId>,
}

impl BasicBlock {
    pub fn last_line(&self) -> Option<Line> {
        self.lines.last().copied()
    }
}

/// Control-flow graph of one method. The exit block is synthetic and holds no
/// lines; returns fall through to it and throws reach it by exception edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cfg {
    pub blocks: Vec<BasicBlock>,
    pub edges: Vec<Edge>,
    pub entry: BlockId,
    pub exit: BlockId,
}

impl Cfg {
    pub fn successors(&self, b: BlockId) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.from == b)
    }

    pub fn predecessors(&self, b: BlockId) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.to == b)
    }

    /// Blocks that carry at least one line.
    pub fn code_blocks(&self) -> impl Iterator<Item = &BasicBlock> + '_ {
        self.blocks.iter().filter(|b| !b.lines.is_empty())
    }

    /// Blocks with an edge into the synthetic exit.
    pub fn exits(&self) -> Vec<BlockId> {
        let mut v: Vec<BlockId> = self.predecessors(self.exit).map(|e| e.from).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

struct Builder {
    blocks: Vec<BasicBlock>,
    edges: Vec<Edge>,
    cur: Option<BlockId>,
    /// Edges whose target is the next block to be opened.
    pending: Vec<(BlockId, EdgeKind)>,
}

impl Builder {
    fn new_block(&mut self) -> BlockId {
        let id = self.blocks.len() as BlockId;
        self.blocks.push(BasicBlock { id, stmts: Vec::new(), lines: Vec::new(), predicate: None });
        for (from, kind) in std::mem::take(&mut self.pending) {
            self.edges.push(Edge { from, to: id, kind });
        }
        id
    }

    fn ensure_block(&mut self) -> BlockId {
        match self.cur {
            Some(b) => b,
            None => {
                let b = self.new_block();
                self.cur = Some(b);
                b
            }
        }
    }

    /// Ends the current block; its fallthrough joins whatever comes next.
    fn close(&mut self) {
        if let Some(b) = self.cur.take() {
            self.pending.push((b, EdgeKind::Fallthrough));
        }
    }

    fn push(&mut self, b: BlockId, stmt: &Stmt) {
        let block = &mut self.blocks[b as usize];
        block.stmts.push(stmt.id);
        block.lines.push(stmt.line);
    }

    fn lower(&mut self, body: &[Stmt], exit_edges: &mut Vec<(BlockId, EdgeKind)>) {
        for stmt in body {
            match &stmt.kind {
                StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_) => {
                    let b = self.ensure_block();
                    self.push(b, stmt);
                }
                StmtKind::Return(_) | StmtKind::Throw(_) => {
                    let b = self.ensure_block();
                    self.push(b, stmt);
                    let kind = if matches!(stmt.kind, StmtKind::Throw(_)) { EdgeKind::Exception } else { EdgeKind::Fallthrough };
                    exit_edges.push((b, kind));
                    self.cur = None;
                }
                StmtKind::If { pred, then_body, else_body, .. } => {
                    let b = self.ensure_block();
                    self.push(b, stmt);
                    self.blocks[b as usize].predicate = Some(*pred);
                    self.cur = None;

                    self.pending = vec![(b, EdgeKind::True)];
                    self.lower(then_body, exit_edges);
                    self.close();
                    let mut join = std::mem::take(&mut self.pending);

                    self.pending = vec![(b, EdgeKind::False)];
                    if let Some(e) = else_body {
                        self.lower(e, exit_edges);
                    }
                    self.close();
                    join.append(&mut self.pending);
                    self.pending = join;
                }
                StmtKind::While { pred, body, .. } => {
                    // The header must be a block of its own so the back edge can target it.
                    let header = match self.cur {
                        Some(b) if self.blocks[b as usize].stmts.is_empty() => b,
                        _ => {
                            self.close();
                            self.new_block()
                        }
                    };
                    self.push(header, stmt);
                    self.blocks[header as usize].predicate = Some(*pred);
                    self.cur = None;

                    self.pending = vec![(header, EdgeKind::True)];
                    self.lower(body, exit_edges);
                    self.close();
                    for (from, kind) in std::mem::take(&mut self.pending) {
                        self.edges.push(Edge { from, to: header, kind });
                    }
                    self.pending = vec![(header, EdgeKind::False)];
                }
            }
        }
    }
}

pub fn build_cfg(method: &MethodDecl) -> Cfg {
    let mut b = Builder { blocks: Vec::new(), edges: Vec::new(), cur: None, pending: Vec::new() };
    let entry = b.ensure_block();
    let mut exit_edges = Vec::new();
    b.lower(&method.body, &mut exit_edges);
    b.close();
    let exit = b.new_block();
    for (from, kind) in exit_edges {
        b.edges.push(Edge { from, to: exit, kind });
    }
    b.edges.sort_by_key(|e| (e.from, e.to, e.kind as u8));
    Cfg { blocks: b.blocks, edges: b.edges, entry, exit }
}
