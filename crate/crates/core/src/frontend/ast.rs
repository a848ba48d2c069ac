//! Abstract syntax for a single-module design.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::lexer::SourcePos;

/// Dense statement identifier, assigned in source order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StmtId(pub usize);

impl fmt::Display for StmtId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Index of a top-level item (continuous assign or always block).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlockId(pub usize);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Span {
    pub start: SourcePos,
    pub end: SourcePos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PortDir {
    Input,
    Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NetType {
    Wire,
    Reg,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignalDecl {
    pub name: String,
    pub port: Option<PortDir>,
    pub net: NetType,
    pub msb: u32,
    pub lsb: u32,
    pub span: Span,
}

impl SignalDecl {
    pub fn width(&self) -> u32 {
        self.msb - self.lsb + 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub value: Literal,
    pub span: Span,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Literal {
    pub width: Option<u32>,
    pub value: u64,
}

impl Literal {
    pub fn width_or_default(&self) -> u32 {
        self.width.unwrap_or(32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Not,
    LogicalNot,
    Neg,
    Plus,
    ReduceAnd,
    ReduceOr,
    ReduceXor,
    ReduceNand,
    ReduceNor,
    ReduceXnor,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Xnor,
    Shl,
    Shr,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    LogicalAnd,
    LogicalOr,
}

impl BinaryOp {
    fn is_relational(self) -> bool {
        matches!(
            self,
            Self::Eq | Self::Ne | Self::Lt | Self::Le | Self::Gt | Self::Ge
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Ident(String),
    Literal(Literal),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
    Concat(Vec<Expr>),
    Repeat(u32, Vec<Expr>),
    /// `name[index]`
    Index(String, Box<Expr>),
    /// `name[msb:lsb]` with constant bounds
    Slice(String, u32, u32),
}

/// Value lookup used by expression evaluation.
pub trait SignalEnv {
    /// Current value and declared `(width, lsb)` of a signal.
    fn lookup(&self, name: &str) -> (u64, u32, u32);
}

pub fn mask(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

impl Expr {
    /// Collects every signal identifier the expression reads.
    pub fn collect_idents(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Ident(n) | Expr::Slice(n, _, _) => {
                out.insert(n.clone());
            }
            Expr::Literal(_) => {}
            Expr::Unary(_, e) => e.collect_idents(out),
            Expr::Binary(_, a, b) => {
                a.collect_idents(out);
                b.collect_idents(out);
            }
            Expr::Ternary(c, t, e) => {
                c.collect_idents(out);
                t.collect_idents(out);
                e.collect_idents(out);
            }
            Expr::Concat(es) | Expr::Repeat(_, es) => es.iter().for_each(|e| e.collect_idents(out)),
            Expr::Index(n, i) => {
                out.insert(n.clone());
                i.collect_idents(out);
            }
        }
    }

    /// Self-determined width. `width_of` resolves identifier widths.
    pub fn self_width(&self, width_of: &dyn Fn(&str) -> u32) -> u32 {
        match self {
            Expr::Ident(n) => width_of(n),
            Expr::Literal(l) => l.width_or_default(),
            Expr::Unary(op, e) => match op {
                UnaryOp::Not | UnaryOp::Neg | UnaryOp::Plus => e.self_width(width_of),
                _ => 1,
            },
            Expr::Binary(op, a, b) => match op {
                BinaryOp::Shl | BinaryOp::Shr => a.self_width(width_of),
                BinaryOp::LogicalAnd | BinaryOp::LogicalOr => 1,
                op if op.is_relational() => 1,
                _ => a.self_width(width_of).max(b.self_width(width_of)),
            },
            Expr::Ternary(_, t, e) => t.self_width(width_of).max(e.self_width(width_of)),
            Expr::Concat(es) => es.iter().map(|e| e.self_width(width_of)).sum(),
            Expr::Repeat(n, es) => n * es.iter().map(|e| e.self_width(width_of)).sum::<u32>(),
            Expr::Index(..) => 1,
            Expr::Slice(_, msb, lsb) => msb - lsb + 1,
        }
    }

    /// Evaluates with Verilog's context-determined sizing: operands of
    /// arithmetic and bitwise operators are extended to `width` before the
    /// operation; relational, shift-amount, reduction and concatenation
    /// operands are self-determined. The result is masked to `width`.
    pub fn eval(&self, env: &dyn SignalEnv, width: u32) -> u64 {
        let width_of = |n: &str| env.lookup(n).1;
        let m = mask(width);
        let v = match self {
            Expr::Ident(n) => env.lookup(n).0,
            Expr::Literal(l) => l.value,
            Expr::Unary(op, e) => {
                let sw = e.self_width(&width_of);
                match op {
                    UnaryOp::Not => !e.eval(env, width),
                    UnaryOp::Neg => e.eval(env, width).wrapping_neg(),
                    UnaryOp::Plus => e.eval(env, width),
                    UnaryOp::LogicalNot => (e.eval(env, sw) == 0) as u64,
                    UnaryOp::ReduceAnd => (e.eval(env, sw) == mask(sw)) as u64,
                    UnaryOp::ReduceNand => (e.eval(env, sw) != mask(sw)) as u64,
                    UnaryOp::ReduceOr => (e.eval(env, sw) != 0) as u64,
                    UnaryOp::ReduceNor => (e.eval(env, sw) == 0) as u64,
                    UnaryOp::ReduceXor => (e.eval(env, sw).count_ones() & 1) as u64,
                    UnaryOp::ReduceXnor => (!e.eval(env, sw).count_ones() & 1) as u64,
                }
            }
            Expr::Binary(op, a, b) => match op {
                BinaryOp::Add => a.eval(env, width).wrapping_add(b.eval(env, width)),
                BinaryOp::Sub => a.eval(env, width).wrapping_sub(b.eval(env, width)),
                BinaryOp::Mul => a.eval(env, width).wrapping_mul(b.eval(env, width)),
                BinaryOp::And => a.eval(env, width) & b.eval(env, width),
                BinaryOp::Or => a.eval(env, width) | b.eval(env, width),
                BinaryOp::Xor => a.eval(env, width) ^ b.eval(env, width),
                BinaryOp::Xnor => !(a.eval(env, width) ^ b.eval(env, width)),
                BinaryOp::Shl | BinaryOp::Shr => {
                    let amount = b.eval(env, b.self_width(&width_of));
                    let base = a.eval(env, width);
                    if amount >= 64 {
                        0
                    } else if *op == BinaryOp::Shl {
                        base << amount
                    } else {
                        base >> amount
                    }
                }
                BinaryOp::LogicalAnd => {
                    let l = a.eval(env, a.self_width(&width_of)) != 0;
                    let r = b.eval(env, b.self_width(&width_of)) != 0;
                    (l && r) as u64
                }
                BinaryOp::LogicalOr => {
                    let l = a.eval(env, a.self_width(&width_of)) != 0;
                    let r = b.eval(env, b.self_width(&width_of)) != 0;
                    (l || r) as u64
                }
                rel => {
                    let cw = a.self_width(&width_of).max(b.self_width(&width_of));
                    let (l, r) = (a.eval(env, cw), b.eval(env, cw));
                    let holds = match rel {
                        BinaryOp::Eq => l == r,
                        BinaryOp::Ne => l != r,
                        BinaryOp::Lt => l < r,
                        BinaryOp::Le => l <= r,
                        BinaryOp::Gt => l > r,
                        BinaryOp::Ge => l >= r,
                        _ => unreachable!(),
                    };
                    holds as u64
                }
            },
            Expr::Ternary(c, t, e) => {
                if c.eval(env, c.self_width(&width_of)) != 0 {
                    t.eval(env, width)
                } else {
                    e.eval(env, width)
                }
            }
            Expr::Concat(es) => concat(env, es, &width_of),
            Expr::Repeat(n, es) => {
                let part_w: u32 = es.iter().map(|e| e.self_width(&width_of)).sum();
                let part = concat(env, es, &width_of);
                let mut acc = 0u64;
                for _ in 0..*n {
                    acc = shl(acc, part_w) | part;
                }
                acc
            }
            Expr::Index(n, i) => {
                let (value, w, lsb) = env.lookup(n);
                let idx = i.eval(env, i.self_width(&width_of));
                match idx.checked_sub(lsb as u64) {
                    Some(bit) if bit < w as u64 => (value >> bit) & 1,
                    _ => 0,
                }
            }
            Expr::Slice(n, msb, lsb) => {
                let (value, _, base) = env.lookup(n);
                (value >> (lsb - base)) & mask(msb - lsb + 1)
            }
        };
        v & m
    }
}

fn shl(v: u64, by: u32) -> u64 {
    if by >= 64 {
        0
    } else {
        v << by
    }
}

fn concat(env: &dyn SignalEnv, es: &[Expr], width_of: &dyn Fn(&str) -> u32) -> u64 {
    let mut acc = 0u64;
    for e in es {
        let w = e.self_width(width_of);
        acc = shl(acc, w) | e.eval(env, w);
    }
    acc
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Select {
    Whole,
    Bit(Expr),
    Part(u32, u32),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LValue {
    pub name: String,
    pub select: Select,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignOp {
    Blocking,
    Nonblocking,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseArm {
    /// Empty for the `default` arm.
    pub labels: Vec<Expr>,
    pub body: Stmt,
}

impl CaseArm {
    pub fn is_default(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Block(Vec<Stmt>),
    If {
        cond: Expr,
        then_branch: Box<Stmt>,
        else_branch: Option<Box<Stmt>>,
    },
    /// Arms in source order, including at most one default arm.
    Case {
        subject: Expr,
        arms: Vec<CaseArm>,
    },
    Assign {
        op: AssignOp,
        lhs: LValue,
        rhs: Expr,
    },
    Null,
}

/// A procedural statement. `id` is set for assignments, `if` and `case`;
/// blocks and null statements are not enumerated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub id: Option<StmtId>,
    pub kind: StmtKind,
    pub span: Span,
}

impl Stmt {
    /// Visits this statement and all nested statements in source order.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        match &self.kind {
            StmtKind::Block(stmts) => stmts.iter().for_each(|s| s.walk(f)),
            StmtKind::If {
                then_branch,
                else_branch,
                ..
            } => {
                then_branch.walk(f);
                if let Some(e) = else_branch {
                    e.walk(f);
                }
            }
            StmtKind::Case { arms, .. } => arms.iter().for_each(|a| a.body.walk(f)),
            StmtKind::Assign { .. } | StmtKind::Null => {}
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Edge {
    Posedge,
    Negedge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sensitivity {
    Edge { edge: Edge, clock: String },
    Combinational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Item {
    ContinuousAssign {
        id: StmtId,
        lhs: LValue,
        rhs: Expr,
        span: Span,
    },
    Always {
        sensitivity: Sensitivity,
        body: Stmt,
        span: Span,
    },
}

/// Parsed single-module design.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Design {
    pub name: String,
    /// Ports and variables in declaration order.
    pub signals: Vec<SignalDecl>,
    pub params: Vec<ParamDecl>,
    pub items: Vec<Item>,
    pub stmt_count: usize,
}

impl Design {
    pub fn signal(&self, name: &str) -> Option<&SignalDecl> {
        self.signals.iter().find(|s| s.name == name)
    }

    pub fn signal_index(&self, name: &str) -> Option<usize> {
        self.signals.iter().position(|s| s.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &SignalDecl> {
        self.signals
            .iter()
            .filter(|s| s.port == Some(PortDir::Input))
    }

    pub fn outputs(&self) -> impl Iterator<Item = &SignalDecl> {
        self.signals
            .iter()
            .filter(|s| s.port == Some(PortDir::Output))
    }

    /// Names of clock signals referenced by edge-sensitive blocks.
    pub fn clocks(&self) -> BTreeSet<&str> {
        self.items
            .iter()
            .filter_map(|item| match item {
                Item::Always {
                    sensitivity: Sensitivity::Edge { clock, .. },
                    ..
                } => Some(clock.as_str()),
                _ => None,
            })
            .collect()
    }
}
