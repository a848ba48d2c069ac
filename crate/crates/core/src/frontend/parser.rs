//! Recursive-descent parser producing a [`Design`].
//!
//! Statement ids are handed out while parsing, so they follow source order:
//! a branch receives its id before any of the statements nested in it.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::lexer::{SourcePos, Token, TokenKind};
use super::FrontendError;

const MAX_WIDTH: u32 = 64;

pub fn parse_design(tokens: &[Token]) -> Result<Design, FrontendError> {
    let mut p = Parser {
        tokens,
        idx: 0,
        next_stmt: 0,
        params: HashMap::new(),
        params_in_order: Vec::new(),
    };
    let design = p.module()?;
    if let Some(tok) = p.peek() {
        if tok.is("module") {
            return Err(unsupported(tok, "more than one module per file"));
        }
        return Err(p.expected(&["end of file"]));
    }
    validate(&design)?;
    Ok(design)
}

struct Parser<'t> {
    tokens: &'t [Token],
    idx: usize,
    next_stmt: usize,
    params: HashMap<String, Literal>,
    params_in_order: Vec<ParamDecl>,
}

fn unsupported(tok: &Token, what: &str) -> FrontendError {
    FrontendError::Unsupported {
        pos: tok.pos,
        construct: what.to_string(),
    }
}

const UNSUPPORTED_KEYWORDS: &[(&str, &str)] = &[
    ("for", "for loop"),
    ("while", "while loop"),
    ("repeat", "repeat loop"),
    ("forever", "forever loop"),
    ("function", "function"),
    ("task", "task"),
    ("initial", "initial block"),
    ("generate", "generate block"),
    ("genvar", "genvar"),
    ("inout", "inout port"),
    ("integer", "integer variable"),
    ("casez", "casez"),
    ("casex", "casex"),
    ("logic", "SystemVerilog logic type"),
];

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.idx)
    }

    fn peek_is(&self, text: &str) -> bool {
        self.peek().is_some_and(|t| t.is(text))
    }

    fn here(&self) -> SourcePos {
        match self.peek() {
            Some(t) => t.pos,
            None => self.tokens.last().map(end_pos).unwrap_or_default(),
        }
    }

    fn prev_end(&self) -> SourcePos {
        self.idx
            .checked_sub(1)
            .map(|i| end_pos(&self.tokens[i]))
            .unwrap_or_default()
    }

    fn expected(&self, what: &[&str]) -> FrontendError {
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Keyword {
                if let Some((_, name)) = UNSUPPORTED_KEYWORDS.iter().find(|(k, _)| *k == tok.lexeme)
                {
                    return unsupported(tok, name);
                }
            }
            if tok.is("#") {
                return unsupported(tok, "delay control");
            }
        }
        FrontendError::Parse {
            pos: self.here(),
            expected: what.iter().map(|s| s.to_string()).collect(),
            found: self
                .peek()
                .map(|t| format!("`{}`", t.lexeme))
                .unwrap_or_else(|| "end of file".into()),
        }
    }

    fn bump(&mut self) -> &'t Token {
        let t = &self.tokens[self.idx];
        self.idx += 1;
        t
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.peek_is(text) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, text: &str) -> Result<&'t Token, FrontendError> {
        if self.peek_is(text) {
            Ok(self.bump())
        } else {
            Err(self.expected(&[&format!("`{text}`")]))
        }
    }

    fn ident(&mut self) -> Result<(String, &'t Token), FrontendError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => {
                self.idx += 1;
                Ok((t.lexeme.clone(), t))
            }
            _ => Err(self.expected(&["identifier"])),
        }
    }

    fn alloc_stmt(&mut self) -> StmtId {
        let id = StmtId(self.next_stmt);
        self.next_stmt += 1;
        id
    }

    fn module(&mut self) -> Result<Design, FrontendError> {
        self.expect("module")?;
        let (name, _) = self.ident()?;
        let mut signals: Vec<SignalDecl> = Vec::new();
        // Non-ANSI headers list bare names whose directions come later.
        let mut pending_ports: Vec<(String, SourcePos)> = Vec::new();

        if self.eat("#") {
            return Err(unsupported(
                &self.tokens[self.idx - 1],
                "module parameter port list",
            ));
        }
        if self.eat("(") {
            if !self.peek_is(")") {
                if self.peek_is("input") || self.peek_is("output") || self.peek_is("inout") {
                    self.ansi_ports(&mut signals)?;
                } else {
                    loop {
                        let (n, t) = self.ident()?;
                        pending_ports.push((n, t.pos));
                        if !self.eat(",") {
                            break;
                        }
                    }
                }
            }
            self.expect(")")?;
        }
        self.expect(";")?;

        let mut items = Vec::new();
        loop {
            let Some(tok) = self.peek() else {
                return Err(self.expected(&["`endmodule`"]));
            };
            match tok.lexeme.as_str() {
                "endmodule" if tok.kind == TokenKind::Keyword => {
                    self.bump();
                    break;
                }
                "input" | "output" if tok.kind == TokenKind::Keyword => {
                    let decls = self.port_declaration()?;
                    for d in decls {
                        if !pending_ports.iter().any(|(n, _)| *n == d.name) {
                            return Err(FrontendError::semantic(
                                d.span.start,
                                format!("`{}` is not listed in the module port list", d.name),
                            ));
                        }
                        merge_decl(&mut signals, d)?;
                    }
                }
                "reg" | "wire" if tok.kind == TokenKind::Keyword => {
                    for d in self.var_declaration()? {
                        merge_decl(&mut signals, d)?;
                    }
                }
                "parameter" | "localparam" if tok.kind == TokenKind::Keyword => {
                    self.param_declaration()?
                }
                "assign" if tok.kind == TokenKind::Keyword => items.push(self.continuous_assign()?),
                "always" if tok.kind == TokenKind::Keyword => items.push(self.always()?),
                _ if tok.kind == TokenKind::Identifier => {
                    return Err(unsupported(tok, "module instantiation"));
                }
                _ => {
                    return Err(self.expected(&[
                        "`input`",
                        "`output`",
                        "`reg`",
                        "`wire`",
                        "`localparam`",
                        "`assign`",
                        "`always`",
                        "`endmodule`",
                    ]))
                }
            }
        }

        for (n, pos) in &pending_ports {
            match signals.iter().find(|s| s.name == *n) {
                Some(s) if s.port.is_some() => {}
                _ => {
                    return Err(FrontendError::semantic(
                        *pos,
                        format!("port `{n}` has no direction declaration"),
                    ))
                }
            }
        }

        Ok(Design {
            name,
            signals,
            params: std::mem::take(&mut self.params_in_order),
            items,
            stmt_count: self.next_stmt,
        })
    }

    fn ansi_ports(&mut self, signals: &mut Vec<SignalDecl>) -> Result<(), FrontendError> {
        let mut current: Option<(PortDir, NetType, u32, u32)> = None;
        loop {
            let start = self.here();
            if self.peek_is("input") || self.peek_is("output") || self.peek_is("inout") {
                let dir = self.direction()?;
                let net = self.net_type(dir)?;
                let (msb, lsb) = self.opt_range()?;
                current = Some((dir, net, msb, lsb));
            }
            let Some((dir, net, msb, lsb)) = current else {
                return Err(self.expected(&["`input`", "`output`"]));
            };
            let (name, _) = self.ident()?;
            let decl = SignalDecl {
                name,
                port: Some(dir),
                net,
                msb,
                lsb,
                span: Span {
                    start,
                    end: self.prev_end(),
                },
            };
            merge_decl(signals, decl)?;
            if !self.eat(",") {
                return Ok(());
            }
        }
    }

    fn direction(&mut self) -> Result<PortDir, FrontendError> {
        let tok = self.bump();
        match tok.lexeme.as_str() {
            "input" => Ok(PortDir::Input),
            "output" => Ok(PortDir::Output),
            _ => Err(unsupported(tok, "inout port")),
        }
    }

    fn net_type(&mut self, dir: PortDir) -> Result<NetType, FrontendError> {
        if self.peek_is("reg") {
            let tok = self.bump();
            if dir == PortDir::Input {
                return Err(FrontendError::semantic(
                    tok.pos,
                    "input ports cannot be declared `reg`",
                ));
            }
            Ok(NetType::Reg)
        } else {
            self.eat("wire");
            Ok(NetType::Wire)
        }
    }

    fn port_declaration(&mut self) -> Result<Vec<SignalDecl>, FrontendError> {
        let start = self.here();
        let dir = self.direction()?;
        let net = self.net_type(dir)?;
        let (msb, lsb) = self.opt_range()?;
        let mut out = Vec::new();
        loop {
            let (name, _) = self.ident()?;
            out.push(SignalDecl {
                name,
                port: Some(dir),
                net,
                msb,
                lsb,
                span: Span {
                    start,
                    end: self.prev_end(),
                },
            });
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")?;
        Ok(out)
    }

    fn var_declaration(&mut self) -> Result<Vec<SignalDecl>, FrontendError> {
        let start = self.here();
        let net = if self.bump().lexeme == "reg" {
            NetType::Reg
        } else {
            NetType::Wire
        };
        let (msb, lsb) = self.opt_range()?;
        let mut out = Vec::new();
        loop {
            let (name, _) = self.ident()?;
            if self.peek_is("[") {
                return Err(unsupported(
                    self.peek().unwrap(),
                    "memory (array) declaration",
                ));
            }
            if self.peek_is("=") {
                return Err(unsupported(self.peek().unwrap(), "declaration initializer"));
            }
            out.push(SignalDecl {
                name,
                port: None,
                net,
                msb,
                lsb,
                span: Span {
                    start,
                    end: self.prev_end(),
                },
            });
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")?;
        Ok(out)
    }

    fn param_declaration(&mut self) -> Result<(), FrontendError> {
        self.bump();
        if self.peek_is("[") {
            // Optional range on the parameter; the literal's own width wins.
            self.opt_range()?;
        }
        loop {
            let start = self.here();
            let (name, tok) = self.ident()?;
            if self.params.contains_key(&name) {
                return Err(FrontendError::semantic(
                    tok.pos,
                    format!("parameter `{name}` declared twice"),
                ));
            }
            self.expect("=")?;
            let expr = self.expr()?;
            let value = self.const_literal(&expr, start)?;
            self.params.insert(name.clone(), value);
            self.params_in_order.push(ParamDecl {
                name,
                value,
                span: Span {
                    start,
                    end: self.prev_end(),
                },
            });
            if !self.eat(",") {
                break;
            }
        }
        self.expect(";")?;
        Ok(())
    }

    fn const_literal(&self, expr: &Expr, pos: SourcePos) -> Result<Literal, FrontendError> {
        match expr {
            Expr::Literal(l) => Ok(*l),
            other => {
                let value = const_eval(other).ok_or_else(|| {
                    FrontendError::semantic(pos, "expected a constant expression")
                })?;
                Ok(Literal { width: None, value })
            }
        }
    }

    fn const_u32(&mut self) -> Result<u32, FrontendError> {
        let pos = self.here();
        let e = self.expr()?;
        const_eval(&e)
            .and_then(|v| u32::try_from(v).ok())
            .ok_or_else(|| FrontendError::semantic(pos, "expected a constant index"))
    }

    fn opt_range(&mut self) -> Result<(u32, u32), FrontendError> {
        if !self.peek_is("[") {
            return Ok((0, 0));
        }
        let open = self.bump();
        let msb = self.const_u32()?;
        self.expect(":")?;
        let lsb = self.const_u32()?;
        self.expect("]")?;
        if msb < lsb {
            return Err(unsupported(open, "descending-index ranges ([lsb:msb])"));
        }
        if msb - lsb + 1 > MAX_WIDTH {
            return Err(FrontendError::semantic(
                open.pos,
                "signal widths are limited to 64 bits",
            ));
        }
        Ok((msb, lsb))
    }

    fn continuous_assign(&mut self) -> Result<Item, FrontendError> {
        let start = self.expect("assign")?.pos;
        let id = self.alloc_stmt();
        let lhs = self.lvalue()?;
        self.expect("=")?;
        let rhs = self.expr()?;
        self.expect(";")?;
        Ok(Item::ContinuousAssign {
            id,
            lhs,
            rhs,
            span: Span {
                start,
                end: self.prev_end(),
            },
        })
    }

    fn always(&mut self) -> Result<Item, FrontendError> {
        let start = self.expect("always")?.pos;
        let at = self.expect("@")?;
        let sensitivity = if self.eat("*") {
            Sensitivity::Combinational
        } else {
            self.expect("(")?;
            let sens = if self.eat("*") {
                Sensitivity::Combinational
            } else if self.peek_is("posedge") || self.peek_is("negedge") {
                let edge = if self.bump().lexeme == "posedge" {
                    Edge::Posedge
                } else {
                    Edge::Negedge
                };
                let (clock, _) = self.ident()?;
                if self.peek_is("or") || self.peek_is(",") {
                    return Err(unsupported(
                        self.peek().unwrap(),
                        "multiple edges in one sensitivity list (model resets synchronously)",
                    ));
                }
                Sensitivity::Edge { edge, clock }
            } else {
                // Explicit level-sensitive list; treated as combinational.
                loop {
                    self.ident()?;
                    if !(self.eat("or") || self.eat(",")) {
                        break;
                    }
                }
                Sensitivity::Combinational
            };
            self.expect(")")?;
            sens
        };
        let _ = at;
        let body = self.statement()?;
        Ok(Item::Always {
            sensitivity,
            body,
            span: Span {
                start,
                end: self.prev_end(),
            },
        })
    }

    fn statement(&mut self) -> Result<Stmt, FrontendError> {
        let start = self.here();
        let Some(tok) = self.peek() else {
            return Err(self.expected(&["statement"]));
        };
        if tok.kind == TokenKind::Keyword {
            match tok.lexeme.as_str() {
                "begin" => {
                    self.bump();
                    if self.eat(":") {
                        self.ident()?;
                    }
                    let mut stmts = Vec::new();
                    while !self.peek_is("end") {
                        if self.peek().is_none() {
                            return Err(self.expected(&["`end`"]));
                        }
                        stmts.push(self.statement()?);
                    }
                    self.bump();
                    return Ok(Stmt {
                        id: None,
                        kind: StmtKind::Block(stmts),
                        span: Span {
                            start,
                            end: self.prev_end(),
                        },
                    });
                }
                "if" => {
                    self.bump();
                    let id = self.alloc_stmt();
                    self.expect("(")?;
                    let cond = self.expr()?;
                    self.expect(")")?;
                    let then_branch = Box::new(self.statement()?);
                    let else_branch = if self.eat("else") {
                        Some(Box::new(self.statement()?))
                    } else {
                        None
                    };
                    return Ok(Stmt {
                        id: Some(id),
                        kind: StmtKind::If {
                            cond,
                            then_branch,
                            else_branch,
                        },
                        span: Span {
                            start,
                            end: self.prev_end(),
                        },
                    });
                }
                "case" => {
                    self.bump();
                    let id = self.alloc_stmt();
                    self.expect("(")?;
                    let subject = self.expr()?;
                    self.expect(")")?;
                    let mut arms = Vec::new();
                    let mut seen_default = false;
                    while !self.peek_is("endcase") {
                        if self.peek().is_none() {
                            return Err(self.expected(&["`endcase`"]));
                        }
                        let labels = if self.peek_is("default") {
                            let d = self.bump();
                            if seen_default {
                                return Err(FrontendError::semantic(
                                    d.pos,
                                    "duplicate default arm",
                                ));
                            }
                            seen_default = true;
                            self.eat(":");
                            Vec::new()
                        } else {
                            let mut labels = vec![self.expr()?];
                            while self.eat(",") {
                                labels.push(self.expr()?);
                            }
                            self.expect(":")?;
                            labels
                        };
                        let body = self.statement()?;
                        arms.push(CaseArm { labels, body });
                    }
                    self.bump();
                    return Ok(Stmt {
                        id: Some(id),
                        kind: StmtKind::Case { subject, arms },
                        span: Span {
                            start,
                            end: self.prev_end(),
                        },
                    });
                }
                _ => {}
            }
        }
        if self.eat(";") {
            return Ok(Stmt {
                id: None,
                kind: StmtKind::Null,
                span: Span {
                    start,
                    end: self.prev_end(),
                },
            });
        }
        if tok.kind != TokenKind::Identifier {
            if tok.is("{") {
                return Err(unsupported(tok, "concatenation on the left-hand side"));
            }
            return Err(self.expected(&["statement"]));
        }
        let id = self.alloc_stmt();
        let lhs = self.lvalue()?;
        let op = if self.eat("=") {
            AssignOp::Blocking
        } else if self.eat("<=") {
            AssignOp::Nonblocking
        } else {
            return Err(self.expected(&["`=`", "`<=`"]));
        };
        let rhs = self.expr()?;
        self.expect(";")?;
        Ok(Stmt {
            id: Some(id),
            kind: StmtKind::Assign { op, lhs, rhs },
            span: Span {
                start,
                end: self.prev_end(),
            },
        })
    }

    fn lvalue(&mut self) -> Result<LValue, FrontendError> {
        if self.peek_is("{") {
            return Err(unsupported(
                self.peek().unwrap(),
                "concatenation on the left-hand side",
            ));
        }
        let (name, tok) = self.ident()?;
        if self.params.contains_key(&name) {
            return Err(FrontendError::semantic(
                tok.pos,
                format!("cannot assign to parameter `{name}`"),
            ));
        }
        let select = if self.eat("[") {
            let first = self.expr()?;
            let sel = if self.eat(":") {
                let pos = self.here();
                let lsb = self.const_u32()?;
                let msb = const_eval(&first)
                    .and_then(|v| u32::try_from(v).ok())
                    .ok_or_else(|| {
                        FrontendError::semantic(pos, "part-select bounds must be constant")
                    })?;
                Select::Part(msb, lsb)
            } else {
                Select::Bit(first)
            };
            self.expect("]")?;
            sel
        } else {
            Select::Whole
        };
        Ok(LValue { name, select })
    }

    // Precedence climbing, lowest first.
    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let cond = self.binary(0)?;
        if self.eat("?") {
            let t = self.expr()?;
            self.expect(":")?;
            let e = self.expr()?;
            return Ok(Expr::Ternary(Box::new(cond), Box::new(t), Box::new(e)));
        }
        Ok(cond)
    }

    fn binary(&mut self, level: usize) -> Result<Expr, FrontendError> {
        const LEVELS: &[&[(&str, BinaryOp)]] = &[
            &[("||", BinaryOp::LogicalOr)],
            &[("&&", BinaryOp::LogicalAnd)],
            &[("|", BinaryOp::Or)],
            &[
                ("^", BinaryOp::Xor),
                ("~^", BinaryOp::Xnor),
                ("^~", BinaryOp::Xnor),
            ],
            &[("&", BinaryOp::And)],
            &[("==", BinaryOp::Eq), ("!=", BinaryOp::Ne)],
            &[
                ("<", BinaryOp::Lt),
                ("<=", BinaryOp::Le),
                (">", BinaryOp::Gt),
                (">=", BinaryOp::Ge),
            ],
            &[("<<", BinaryOp::Shl), (">>", BinaryOp::Shr)],
            &[("+", BinaryOp::Add), ("-", BinaryOp::Sub)],
            &[("*", BinaryOp::Mul)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while let Some(tok) = self.peek() {
            if tok.kind != TokenKind::Operator {
                break;
            }
            if matches!(
                tok.lexeme.as_str(),
                "===" | "!==" | "<<<" | ">>>" | "/" | "%"
            ) {
                return Err(unsupported(tok, &format!("operator `{}`", tok.lexeme)));
            }
            let Some((_, op)) = LEVELS[level].iter().find(|(t, _)| *t == tok.lexeme) else {
                break;
            };
            self.bump();
            let rhs = self.binary(level + 1)?;
            lhs = Expr::Binary(*op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let Some(tok) = self.peek() else {
            return Err(self.expected(&["expression"]));
        };
        if tok.kind == TokenKind::Operator {
            let op = match tok.lexeme.as_str() {
                "~" => Some(UnaryOp::Not),
                "!" => Some(UnaryOp::LogicalNot),
                "-" => Some(UnaryOp::Neg),
                "+" => Some(UnaryOp::Plus),
                "&" => Some(UnaryOp::ReduceAnd),
                "|" => Some(UnaryOp::ReduceOr),
                "^" => Some(UnaryOp::ReduceXor),
                "~&" => Some(UnaryOp::ReduceNand),
                "~|" => Some(UnaryOp::ReduceNor),
                "~^" | "^~" => Some(UnaryOp::ReduceXnor),
                _ => None,
            };
            if let Some(op) = op {
                self.bump();
                let operand = self.unary()?;
                return Ok(Expr::Unary(op, Box::new(operand)));
            }
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        let Some(tok) = self.peek() else {
            return Err(self.expected(&["expression"]));
        };
        match tok.kind {
            TokenKind::Number { width, value } => {
                self.bump();
                Ok(Expr::Literal(Literal { width, value }))
            }
            TokenKind::Identifier => {
                self.bump();
                let name = tok.lexeme.clone();
                if let Some(lit) = self.params.get(&name) {
                    return Ok(Expr::Literal(*lit));
                }
                if self.peek_is("(") {
                    return Err(unsupported(tok, "function call"));
                }
                if self.eat("[") {
                    let first = self.expr()?;
                    let e = if self.eat(":") {
                        let pos = self.here();
                        let lsb = self.const_u32()?;
                        let msb = const_eval(&first)
                            .and_then(|v| u32::try_from(v).ok())
                            .ok_or_else(|| {
                                FrontendError::semantic(pos, "part-select bounds must be constant")
                            })?;
                        Expr::Slice(name, msb, lsb)
                    } else {
                        Expr::Index(name, Box::new(first))
                    };
                    self.expect("]")?;
                    return Ok(e);
                }
                Ok(Expr::Ident(name))
            }
            _ if tok.is("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            _ if tok.is("{") => {
                self.bump();
                let first = self.expr()?;
                if self.peek_is("{") {
                    // replication {n{...}}
                    let pos = tok.pos;
                    let count = const_eval(&first)
                        .and_then(|v| u32::try_from(v).ok())
                        .filter(|&n| n > 0)
                        .ok_or_else(|| {
                            FrontendError::semantic(
                                pos,
                                "replication count must be a positive constant",
                            )
                        })?;
                    self.bump();
                    let mut parts = vec![self.expr()?];
                    while self.eat(",") {
                        parts.push(self.expr()?);
                    }
                    self.expect("}")?;
                    self.expect("}")?;
                    return Ok(Expr::Repeat(count, parts));
                }
                let mut parts = vec![first];
                while self.eat(",") {
                    parts.push(self.expr()?);
                }
                self.expect("}")?;
                Ok(Expr::Concat(parts))
            }
            _ => Err(self.expected(&["expression"])),
        }
    }
}

fn end_pos(t: &Token) -> SourcePos {
    let mut pos = t.pos;
    for c in t.lexeme.chars() {
        if c == '\n' {
            pos.line += 1;
            pos.col = 1;
        } else {
            pos.col += 1;
        }
    }
    pos.offset = t.end_offset();
    pos
}

fn merge_decl(signals: &mut Vec<SignalDecl>, decl: SignalDecl) -> Result<(), FrontendError> {
    if let Some(existing) = signals.iter_mut().find(|s| s.name == decl.name) {
        // `output y; reg y;` style: a port may be redeclared once as reg/wire.
        let compatible = existing.port.is_some() != decl.port.is_some()
            && (existing.msb, existing.lsb) == (decl.msb, decl.lsb);
        if !compatible {
            return Err(FrontendError::semantic(
                decl.span.start,
                format!("`{}` declared twice", decl.name),
            ));
        }
        existing.port = existing.port.or(decl.port);
        if decl.net == NetType::Reg {
            existing.net = NetType::Reg;
        }
        return Ok(());
    }
    signals.push(decl);
    Ok(())
}

struct NoSignals;

impl SignalEnv for NoSignals {
    fn lookup(&self, _: &str) -> (u64, u32, u32) {
        unreachable!("constant expressions contain no identifiers")
    }
}

/// Evaluates an identifier-free expression at 64-bit width.
pub fn const_eval(e: &Expr) -> Option<u64> {
    let mut ids = BTreeSet::new();
    e.collect_idents(&mut ids);
    if !ids.is_empty() {
        return None;
    }
    Some(e.eval(&NoSignals, 64))
}

/// Post-parse checks: every identifier declared, selects in range, widths ≤ 64.
fn validate(design: &Design) -> Result<(), FrontendError> {
    let declared = |name: &str, pos: SourcePos| -> Result<&SignalDecl, FrontendError> {
        design
            .signal(name)
            .ok_or_else(|| FrontendError::semantic(pos, format!("`{name}` is not declared")))
    };
    let check_expr = |e: &Expr, pos: SourcePos| -> Result<(), FrontendError> {
        let mut ids = BTreeSet::new();
        e.collect_idents(&mut ids);
        for id in &ids {
            declared(id, pos)?;
        }
        check_slices(design, e, pos)?;
        let w = e.self_width(&|n| design.signal(n).map(|s| s.width()).unwrap_or(1));
        if w > MAX_WIDTH {
            return Err(FrontendError::semantic(
                pos,
                "expression wider than 64 bits",
            ));
        }
        Ok(())
    };
    let check_lvalue = |lv: &LValue, pos: SourcePos| -> Result<(), FrontendError> {
        let decl = declared(&lv.name, pos)?;
        match &lv.select {
            Select::Whole => Ok(()),
            Select::Bit(e) => check_expr(e, pos),
            Select::Part(msb, lsb) => {
                if msb < lsb || *lsb < decl.lsb || *msb > decl.msb {
                    Err(FrontendError::semantic(
                        pos,
                        format!("part-select out of range for `{}`", lv.name),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    };

    let clocks = design.clocks();
    for item in &design.items {
        match item {
            Item::ContinuousAssign { lhs, rhs, span, .. } => {
                check_lvalue(lhs, span.start)?;
                check_expr(rhs, span.start)?;
            }
            Item::Always {
                sensitivity,
                body,
                span,
            } => {
                if let Sensitivity::Edge { clock, .. } = sensitivity {
                    let decl = declared(clock, span.start)?;
                    if decl.port != Some(PortDir::Input) || decl.width() != 1 {
                        return Err(FrontendError::semantic(
                            span.start,
                            format!("clock `{clock}` must be a 1-bit input"),
                        ));
                    }
                }
                let mut result = Ok(());
                body.walk(&mut |s| {
                    if result.is_err() {
                        return;
                    }
                    let pos = s.span.start;
                    result = match &s.kind {
                        StmtKind::Assign { lhs, rhs, .. } => {
                            check_lvalue(lhs, pos).and_then(|_| check_expr(rhs, pos))
                        }
                        StmtKind::If { cond, .. } => check_expr(cond, pos),
                        StmtKind::Case { subject, arms } => {
                            check_expr(subject, pos).and_then(|_| {
                                arms.iter()
                                    .flat_map(|a| a.labels.iter())
                                    .try_for_each(|l| check_expr(l, pos))
                            })
                        }
                        StmtKind::Block(_) | StmtKind::Null => Ok(()),
                    };
                });
                result?;
            }
        }
    }
    if clocks.len() > 1 {
        let pos = design.items.iter().find_map(|i| match i {
            Item::Always {
                sensitivity: Sensitivity::Edge { .. },
                span,
                ..
            } => Some(span.start),
            _ => None,
        });
        return Err(FrontendError::Unsupported {
            pos: pos.unwrap_or_default(),
            construct: "multiple clocks".into(),
        });
    }
    Ok(())
}

fn check_slices(design: &Design, e: &Expr, pos: SourcePos) -> Result<(), FrontendError> {
    match e {
        Expr::Slice(n, msb, lsb) => {
            let decl = design
                .signal(n)
                .ok_or_else(|| FrontendError::semantic(pos, format!("`{n}` is not declared")))?;
            if msb < lsb || *lsb < decl.lsb || *msb > decl.msb {
                return Err(FrontendError::semantic(
                    pos,
                    format!("part-select out of range for `{n}`"),
                ));
            }
            Ok(())
        }
        Expr::Ident(_) | Expr::Literal(_) => Ok(()),
        Expr::Unary(_, a) => check_slices(design, a, pos),
        Expr::Index(_, a) => check_slices(design, a, pos),
        Expr::Binary(_, a, b) => {
            check_slices(design, a, pos)?;
            check_slices(design, b, pos)
        }
        Expr::Ternary(a, b, c) => {
            check_slices(design, a, pos)?;
            check_slices(design, b, pos)?;
            check_slices(design, c, pos)
        }
        Expr::Concat(es) | Expr::Repeat(_, es) => {
            es.iter().try_for_each(|x| check_slices(design, x, pos))
        }
    }
}
