//! Tokenizer for the synthesizable Verilog subset.

use std::fmt;

use super::FrontendError;

/// Line/column (1-based) plus byte offset into the source.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourcePos {
    pub line: u32,
    pub col: u32,
    pub offset: usize,
}

impl fmt::Display for SourcePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Identifier,
    /// Sized or unsized literal. `width` is `None` for unsized literals.
    Number {
        width: Option<u32>,
        value: u64,
    },
    Operator,
    Punctuation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub pos: SourcePos,
}

impl Token {
    pub fn is(&self, text: &str) -> bool {
        self.lexeme == text
            && !matches!(self.kind, TokenKind::Identifier | TokenKind::Number { .. })
    }

    /// Byte offset one past the last character of the lexeme.
    pub fn end_offset(&self) -> usize {
        self.pos.offset + self.lexeme.len()
    }
}

pub const KEYWORDS: &[&str] = &[
    "module",
    "endmodule",
    "input",
    "output",
    "inout",
    "wire",
    "reg",
    "logic",
    "integer",
    "assign",
    "always",
    "initial",
    "posedge",
    "negedge",
    "or",
    "begin",
    "end",
    "if",
    "else",
    "case",
    "casez",
    "casex",
    "endcase",
    "default",
    "parameter",
    "localparam",
    "for",
    "while",
    "repeat",
    "forever",
    "function",
    "endfunction",
    "task",
    "endtask",
    "generate",
    "endgenerate",
    "genvar",
];

// Longest first so that maximal munch works by linear scan.
const OPERATORS: &[&str] = &[
    "<<<", ">>>", "===", "!==", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "~^", "^~", "~&",
    "~|", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "=", "?",
];

const PUNCTUATION: &[char] = &['(', ')', '[', ']', '{', '}', ';', ',', ':', '@', '#', '.'];

struct Cursor<'a> {
    src: &'a str,
    offset: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn pos(&self) -> SourcePos {
        SourcePos {
            line: self.line,
            col: self.col,
            offset: self.offset,
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.offset..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn bump_while(&mut self, mut pred: impl FnMut(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.bump();
        }
    }
}

/// Splits `source` into tokens. Whitespace and comments are dropped; every
/// token's `lexeme` is the exact source slice at `pos`.
pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontendError> {
    let mut cur = Cursor {
        src: source,
        offset: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let start = cur.pos();
        if c == '/' && cur.peek_at(1) == Some('/') {
            cur.bump_while(|c| c != '\n');
            continue;
        }
        if c == '/' && cur.peek_at(1) == Some('*') {
            cur.bump();
            cur.bump();
            loop {
                match cur.peek() {
                    None => return Err(FrontendError::lex(start, "unterminated block comment")),
                    Some('*') if cur.peek_at(1) == Some('/') => {
                        cur.bump();
                        cur.bump();
                        break;
                    }
                    Some(_) => {
                        cur.bump();
                    }
                }
            }
            continue;
        }

        let kind = if c.is_ascii_alphabetic() || c == '_' {
            cur.bump_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$');
            let word = &source[start.offset..cur.offset];
            if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() || c == '\'' {
            lex_number(&mut cur, start)?
        } else if let Some(op) = OPERATORS.iter().find(|op| cur.rest().starts_with(**op)) {
            for _ in 0..op.len() {
                cur.bump();
            }
            TokenKind::Operator
        } else if PUNCTUATION.contains(&c) {
            cur.bump();
            TokenKind::Punctuation
        } else {
            return Err(FrontendError::lex(
                start,
                format!("unexpected character {c:?}"),
            ));
        };

        tokens.push(Token {
            kind,
            lexeme: source[start.offset..cur.offset].to_string(),
            pos: start,
        });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>, start: SourcePos) -> Result<TokenKind, FrontendError> {
    let mut size_text = String::new();
    while let Some(c) = cur.peek() {
        if c.is_ascii_digit() || c == '_' {
            if c != '_' {
                size_text.push(c);
            }
            cur.bump();
        } else {
            break;
        }
    }
    if cur.peek() != Some('\'') {
        let value = parse_digits(&size_text, 10)
            .ok_or_else(|| FrontendError::lex(start, "decimal literal does not fit in 64 bits"))?;
        return Ok(TokenKind::Number { width: None, value });
    }
    cur.bump();

    let width = if size_text.is_empty() {
        None
    } else {
        let w: u32 = size_text
            .parse()
            .ok()
            .filter(|w| (1..=64).contains(w))
            .ok_or_else(|| FrontendError::lex(start, "literal width must be in 1..64"))?;
        Some(w)
    };

    if matches!(cur.peek(), Some('s' | 'S')) {
        return Err(FrontendError::lex(
            cur.pos(),
            "signed literals are not supported",
        ));
    }
    let radix = match cur.bump() {
        Some('b' | 'B') => 2,
        Some('o' | 'O') => 8,
        Some('d' | 'D') => 10,
        Some('h' | 'H') => 16,
        _ => {
            return Err(FrontendError::lex(
                start,
                "expected base specifier b, o, d or h",
            ))
        }
    };

    let digits_start = cur.offset;
    cur.bump_while(|c| c.is_ascii_alphanumeric() || c == '_');
    let digits: String = cur.src[digits_start..cur.offset]
        .chars()
        .filter(|&c| c != '_')
        .collect();
    if digits.is_empty() {
        return Err(FrontendError::lex(start, "missing digits in based literal"));
    }
    if digits
        .chars()
        .any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?'))
    {
        return Err(FrontendError::lex(
            start,
            "x/z digits are not supported (two-state values only)",
        ));
    }
    let value = parse_digits(&digits, radix)
        .ok_or_else(|| FrontendError::lex(start, format!("invalid digits for base {radix}")))?;
    if let Some(w) = width {
        if w < 64 && value >> w != 0 {
            return Err(FrontendError::lex(
                start,
                format!("literal value does not fit in {w} bits"),
            ));
        }
    }
    Ok(TokenKind::Number { width, value })
}

fn parse_digits(digits: &str, radix: u32) -> Option<u64> {
    if digits.is_empty() {
        return None;
    }
    let mut value: u64 = 0;
    for c in digits.chars() {
        let d = c.to_digit(radix)? as u64;
        value = value.checked_mul(radix as u64)?.checked_add(d)?;
    }
    Some(value)
}
