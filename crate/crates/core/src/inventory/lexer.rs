//! Token-level C scanner.
//!
//! Produces identifiers, numbers, punctuators, string/char literals and whole
//! preprocessor directives. Comments are dropped. No macro expansion happens.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Str,
    Char,
    Punct,
    /// A full preprocessor line, including backslash continuations.
    Directive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token<'a> {
    pub kind: TokenKind,
    pub text: &'a str,
    /// Byte offset of the first character.
    pub start: usize,
    /// 1-based line of the first character.
    pub line: u32,
}

impl Token<'_> {
    pub fn end(&self) -> usize {
        self.start + self.text.len()
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_ident(&self) -> bool {
        self.kind == TokenKind::Ident
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated block comment starting on line {0}")]
    UnterminatedComment(u32),
    #[error("unterminated literal starting on line {0}")]
    UnterminatedLiteral(u32),
}

const PUNCT3: [&str; 3] = ["...", "<<=", ">>="];
const PUNCT2: [&str; 19] = [
    "&&", "||", "->", "==", "!=", "<=", ">=", "++", "--", "<<", ">>", "+=", "-=", "*=", "/=", "|=", "&=", "^=", "::",
];

/// Tokenizes `src`, failing on unterminated comments and literals.
pub fn tokenize(src: &str) -> Result<Vec<Token<'_>>, LexError> {
    Lexer::new(src, true).run()
}

/// Tokenizes `src`; an unterminated comment or literal swallows the rest of
/// the input instead of failing.
pub fn tokenize_lenient(src: &str) -> Vec<Token<'_>> {
    Lexer::new(src, false).run().expect("lenient lexing never fails")
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    at_line_start: bool,
    strict: bool,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str, strict: bool) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            line: 1,
            at_line_start: true,
            strict,
        }
    }

    fn peek(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn bump(&mut self) {
        if self.bytes[self.pos] == b'\n' {
            self.line += 1;
        }
        self.pos += 1;
    }

    fn run(mut self) -> Result<Vec<Token<'a>>, LexError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek(0) {
            match c {
                b'\n' => {
                    self.bump();
                    self.at_line_start = true;
                }
                c if c.is_ascii_whitespace() => self.bump(),
                b'/' if self.peek(1) == Some(b'/') => self.skip_line_comment(),
                b'/' if self.peek(1) == Some(b'*') => self.skip_block_comment()?,
                b'#' if self.at_line_start => out.push(self.directive()),
                _ => {
                    self.at_line_start = false;
                    out.push(self.token()?);
                }
            }
        }
        Ok(out)
    }

    fn skip_line_comment(&mut self) {
        while let Some(c) = self.peek(0) {
            if c == b'\n' {
                break;
            }
            self.bump();
        }
    }

    fn skip_block_comment(&mut self) -> Result<(), LexError> {
        let line = self.line;
        self.pos += 2;
        loop {
            match self.peek(0) {
                None if self.strict => return Err(LexError::UnterminatedComment(line)),
                None => return Ok(()),
                Some(b'*') if self.peek(1) == Some(b'/') => {
                    self.pos += 2;
                    return Ok(());
                }
                Some(_) => self.bump(),
            }
        }
    }

    fn directive(&mut self) -> Token<'a> {
        let start = self.pos;
        let line = self.line;
        while let Some(c) = self.peek(0) {
            match c {
                b'\\' if self.peek(1) == Some(b'\n') => {
                    self.bump();
                    self.bump();
                }
                b'\\' if self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') => {
                    self.bump();
                    self.bump();
                    self.bump();
                }
                b'\n' => break,
                b'/' if self.peek(1) == Some(b'*') => {
                    // A block comment may continue a directive across lines.
                    let _ = self.skip_block_comment();
                }
                _ => self.bump(),
            }
        }
        Token {
            kind: TokenKind::Directive,
            text: self.src[start..self.pos].trim_end(),
            start,
            line,
        }
    }

    fn token(&mut self) -> Result<Token<'a>, LexError> {
        let start = self.pos;
        let line = self.line;
        let c = self.bytes[self.pos];
        let kind = if c == b'_' || c.is_ascii_alphabetic() {
            while matches!(self.peek(0), Some(b) if b == b'_' || b.is_ascii_alphanumeric()) {
                self.pos += 1;
            }
            TokenKind::Ident
        } else if c.is_ascii_digit() || (c == b'.' && matches!(self.peek(1), Some(d) if d.is_ascii_digit())) {
            while let Some(b) = self.peek(0) {
                let exponent_sign =
                    (b == b'+' || b == b'-') && matches!(self.bytes[self.pos - 1], b'e' | b'E' | b'p' | b'P');
                if b.is_ascii_alphanumeric() || b == b'.' || b == b'_' || b == b'\'' || exponent_sign {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            TokenKind::Number
        } else if c == b'"' || c == b'\'' {
            self.literal(c, line)?;
            if c == b'"' {
                TokenKind::Str
            } else {
                TokenKind::Char
            }
        } else {
            let rest = &self.src[self.pos..];
            let len = if PUNCT3.iter().any(|p| rest.starts_with(p)) {
                3
            } else if PUNCT2.iter().any(|p| rest.starts_with(p)) {
                2
            } else {
                rest.chars().next().map_or(1, char::len_utf8)
            };
            self.pos += len;
            TokenKind::Punct
        };
        Ok(Token {
            kind,
            text: &self.src[start..self.pos],
            start,
            line,
        })
    }

    fn literal(&mut self, quote: u8, line: u32) -> Result<(), LexError> {
        self.pos += 1;
        loop {
            match self.peek(0) {
                None => {
                    return if self.strict {
                        Err(LexError::UnterminatedLiteral(line))
                    } else {
                        Ok(())
                    }
                }
                Some(b'\\') => {
                    self.pos += 1;
                    if self.peek(0).is_some() {
                        self.bump();
                    }
                }
                Some(b'\n') => {
                    // Literals never span raw newlines in C.
                    return if self.strict {
                        Err(LexError::UnterminatedLiteral(line))
                    } else {
                        Ok(())
                    };
                }
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }
}
