//! Tokenizer for the map definition language.

use std::fmt;

use thiserror::Error;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Position {
    pub line: usize,
    pub column: usize,
    /// Byte offset into the source.
    pub offset: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Number,
    Identifier,
    Operator,
    Punctuation,
    Keyword,
    /// End-of-input marker; always the last token.
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub position: Position,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }
}

pub const KEYWORDS: [&str; 4] = ["map", "piecewise", "else", "abs"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unexpected character {found:?} at {position}")]
pub struct LexError {
    pub found: char,
    pub position: Position,
}

/// Splits `source` into tokens. Whitespace and `#` comments are dropped; the
/// returned list always ends with a [`TokenKind::Eof`] token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer {
        src: source,
        chars: source.char_indices().peekable(),
        line: 1,
        column: 1,
    };
    let mut tokens = Vec::new();
    loop {
        let tok = lexer.next_token()?;
        let done = tok.kind == TokenKind::Eof;
        tokens.push(tok);
        if done {
            return Ok(tokens);
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    line: usize,
    column: usize,
}

impl Lexer<'_> {
    fn position(&mut self) -> Position {
        let offset = self.chars.peek().map_or(self.src.len(), |&(i, _)| i);
        Position {
            line: self.line,
            column: self.column,
            offset,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Result<Token, LexError> {
        self.skip_trivia();
        let start = self.position();
        let Some(c) = self.peek() else {
            return Ok(Token {
                kind: TokenKind::Eof,
                lexeme: String::new(),
                position: start,
            });
        };

        let kind = if c.is_ascii_digit() {
            self.number();
            TokenKind::Number
        } else if c.is_ascii_alphabetic() || c == '_' {
            while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                self.bump();
            }
            let word = &self.src[start.offset..self.position().offset];
            if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else {
            self.bump();
            match c {
                '+' | '-' | '*' | '/' | '^' => TokenKind::Operator,
                '<' | '>' => {
                    if self.peek() == Some('=') {
                        self.bump();
                    }
                    TokenKind::Operator
                }
                '=' => {
                    if self.peek() == Some('>') {
                        self.bump();
                    }
                    TokenKind::Operator
                }
                '(' | ')' | '{' | '}' | ';' => TokenKind::Punctuation,
                other => {
                    return Err(LexError {
                        found: other,
                        position: start,
                    })
                }
            }
        };
        let end = self.position().offset;
        Ok(Token {
            kind,
            lexeme: self.src[start.offset..end].to_string(),
            position: start,
        })
    }

    /// digits [ "." digits ] [ ("e"|"E") ["+"|"-"] digits ]
    fn number(&mut self) {
        self.digits();
        if self.peek() == Some('.') && self.lookahead_is_digit(1) {
            self.bump();
            self.digits();
        }
        if matches!(self.peek(), Some('e' | 'E')) {
            let sign = matches!(self.lookahead(1), Some('+' | '-'));
            let digit_at = if sign { 2 } else { 1 };
            if self.lookahead_is_digit(digit_at) {
                self.bump();
                if sign {
                    self.bump();
                }
                self.digits();
            }
        }
    }

    fn digits(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.bump();
        }
    }

    fn lookahead(&self, n: usize) -> Option<char> {
        self.chars.clone().nth(n).map(|(_, c)| c)
    }

    fn lookahead_is_digit(&self, n: usize) -> bool {
        self.lookahead(n).is_some_and(|c| c.is_ascii_digit())
    }
}
