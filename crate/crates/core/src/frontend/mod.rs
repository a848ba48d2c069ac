//! Verilog-subset frontend: tokenizer, parser and statement enumeration.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod stmt;

use thiserror::Error;

pub use ast::{Design, StmtId};
pub use lexer::{tokenize, SourcePos, Token, TokenKind};
pub use parser::parse_design;
pub use stmt::{enumerate_statements, StatementTable, StmtEntry, StmtKindTag};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{pos}: {message}")]
    Lex { pos: SourcePos, message: String },
    #[error("{pos}: expected {}, found {found}", expected.join(" or "))]
    Parse {
        pos: SourcePos,
        expected: Vec<String>,
        found: String,
    },
    #[error("{pos}: unsupported construct: {construct}")]
    Unsupported { pos: SourcePos, construct: String },
    #[error("{pos}: {message}")]
    Semantic { pos: SourcePos, message: String },
}

impl FrontendError {
    pub(crate) fn lex(pos: SourcePos, message: impl Into<String>) -> Self {
        Self::Lex {
            pos,
            message: message.into(),
        }
    }

    pub(crate) fn semantic(pos: SourcePos, message: impl Into<String>) -> Self {
        Self::Semantic {
            pos,
            message: message.into(),
        }
    }

    pub fn pos(&self) -> SourcePos {
        match self {
            Self::Lex { pos, .. }
            | Self::Parse { pos, .. }
            | Self::Unsupported { pos, .. }
            | Self::Semantic { pos, .. } => *pos,
        }
    }

    /// `file:line:col: message`
    pub fn with_file(&self, file: &str) -> String {
        format!("{file}:{self}")
    }
}

/// Tokenizes and parses in one step.
pub fn parse_source(source: &str) -> Result<Design, FrontendError> {
    parse_design(&tokenize(source)?)
}
