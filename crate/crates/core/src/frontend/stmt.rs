//! Statement enumeration: one entry per assignment, `if` and `case`.

use std::collections::BTreeSet;

use serde::Serialize;

use super::ast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StmtKindTag {
    ContinuousAssign,
    BlockingAssign,
    NonblockingAssign,
    If,
    Case,
}

impl StmtKindTag {
    pub fn is_branch(self) -> bool {
        matches!(self, Self::If | Self::Case)
    }
}

/// Where a statement lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockContext {
    Continuous,
    Combinational,
    Clocked,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StmtEntry {
    pub id: StmtId,
    pub span: Span,
    pub kind: StmtKindTag,
    pub block: BlockId,
    pub context: BlockContext,
    /// Nearest enclosing branch statement.
    pub parent: Option<StmtId>,
    /// Target signal of an assignment.
    pub written: Option<String>,
    /// Right-hand side (plus left-hand index) identifiers for assignments;
    /// condition, subject and label identifiers for branches.
    pub reads: BTreeSet<String>,
    /// Identifiers of the conditions of every enclosing branch.
    pub guards: BTreeSet<String>,
    /// For branches: signals written by any nested assignment.
    pub controls: BTreeSet<String>,
}

impl StmtEntry {
    pub fn line(&self) -> u32 {
        self.span.start.line
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StatementTable {
    pub entries: Vec<StmtEntry>,
}

impl StatementTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: StmtId) -> Option<&StmtEntry> {
        self.entries.get(id.0)
    }

    pub fn ids(&self) -> impl Iterator<Item = StmtId> + '_ {
        self.entries.iter().map(|e| e.id)
    }

    /// Statements whose span starts on `line`.
    pub fn on_line(&self, line: u32) -> Vec<StmtId> {
        self.entries
            .iter()
            .filter(|e| e.line() == line)
            .map(|e| e.id)
            .collect()
    }
}

pub fn enumerate_statements(design: &Design) -> StatementTable {
    let mut entries: Vec<Option<StmtEntry>> = vec![None; design.stmt_count];
    for (i, item) in design.items.iter().enumerate() {
        let block = BlockId(i);
        match item {
            Item::ContinuousAssign { id, lhs, rhs, span } => {
                entries[id.0] = Some(StmtEntry {
                    id: *id,
                    span: *span,
                    kind: StmtKindTag::ContinuousAssign,
                    block,
                    context: BlockContext::Continuous,
                    parent: None,
                    written: Some(lhs.name.clone()),
                    reads: assignment_reads(lhs, rhs),
                    guards: BTreeSet::new(),
                    controls: BTreeSet::new(),
                });
            }
            Item::Always {
                sensitivity, body, ..
            } => {
                let context = match sensitivity {
                    Sensitivity::Edge { .. } => BlockContext::Clocked,
                    Sensitivity::Combinational => BlockContext::Combinational,
                };
                let mut cx = Walker {
                    block,
                    context,
                    out: &mut entries,
                };
                cx.visit(body, None, &BTreeSet::new());
            }
        }
    }
    StatementTable {
        entries: entries
            .into_iter()
            .enumerate()
            .map(|(i, e)| e.unwrap_or_else(|| panic!("statement id {i} not present in design")))
            .collect(),
    }
}

fn assignment_reads(lhs: &LValue, rhs: &Expr) -> BTreeSet<String> {
    let mut reads = BTreeSet::new();
    rhs.collect_idents(&mut reads);
    if let Select::Bit(idx) = &lhs.select {
        idx.collect_idents(&mut reads);
    }
    reads
}

struct Walker<'a> {
    block: BlockId,
    context: BlockContext,
    out: &'a mut Vec<Option<StmtEntry>>,
}

impl Walker<'_> {
    /// Returns the set of signals written by assignments nested in `stmt`.
    fn visit(
        &mut self,
        stmt: &Stmt,
        parent: Option<StmtId>,
        guards: &BTreeSet<String>,
    ) -> BTreeSet<String> {
        match &stmt.kind {
            StmtKind::Null => BTreeSet::new(),
            StmtKind::Block(stmts) => {
                let mut written = BTreeSet::new();
                for s in stmts {
                    written.extend(self.visit(s, parent, guards));
                }
                written
            }
            StmtKind::Assign { op, lhs, rhs } => {
                let id = stmt.id.expect("assignments carry ids");
                self.out[id.0] = Some(StmtEntry {
                    id,
                    span: stmt.span,
                    kind: match op {
                        AssignOp::Blocking => StmtKindTag::BlockingAssign,
                        AssignOp::Nonblocking => StmtKindTag::NonblockingAssign,
                    },
                    block: self.block,
                    context: self.context,
                    parent,
                    written: Some(lhs.name.clone()),
                    reads: assignment_reads(lhs, rhs),
                    guards: guards.clone(),
                    controls: BTreeSet::new(),
                });
                BTreeSet::from([lhs.name.clone()])
            }
            StmtKind::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let id = stmt.id.expect("branches carry ids");
                let mut reads = BTreeSet::new();
                cond.collect_idents(&mut reads);
                let mut inner = guards.clone();
                inner.extend(reads.iter().cloned());
                let mut controls = self.visit(then_branch, Some(id), &inner);
                if let Some(e) = else_branch {
                    controls.extend(self.visit(e, Some(id), &inner));
                }
                self.push_branch(stmt, id, StmtKindTag::If, parent, reads, guards, controls)
            }
            StmtKind::Case { subject, arms } => {
                let id = stmt.id.expect("branches carry ids");
                let mut reads = BTreeSet::new();
                subject.collect_idents(&mut reads);
                for l in arms.iter().flat_map(|a| a.labels.iter()) {
                    l.collect_idents(&mut reads);
                }
                let mut inner = guards.clone();
                inner.extend(reads.iter().cloned());
                let mut controls = BTreeSet::new();
                for arm in arms {
                    controls.extend(self.visit(&arm.body, Some(id), &inner));
                }
                self.push_branch(stmt, id, StmtKindTag::Case, parent, reads, guards, controls)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn push_branch(
        &mut self,
        stmt: &Stmt,
        id: StmtId,
        kind: StmtKindTag,
        parent: Option<StmtId>,
        reads: BTreeSet<String>,
        guards: &BTreeSet<String>,
        controls: BTreeSet<String>,
    ) -> BTreeSet<String> {
        self.out[id.0] = Some(StmtEntry {
            id,
            span: stmt.span,
            kind,
            block: self.block,
            context: self.context,
            parent,
            written: None,
            reads,
            guards: guards.clone(),
            controls: controls.clone(),
        });
        controls
    }
}
