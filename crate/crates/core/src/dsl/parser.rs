//! Recursive-descent parser.
//!
//! ```text
//! mapfile   := "map" ident "(" ident ")" "=" expr
//! expr      := piecewise | sum
//! piecewise := "piecewise" "{" (guard "=>" sum ";")+ "else" "=>" sum [";"] "}"
//! guard     := sum ("<"|"<="|">"|">=") ["-"] number
//! sum       := prod (("+"|"-") prod)*
//! prod      := unary (("*"|"/") unary)*
//! unary     := "-" unary | power
//! power     := atom ["^" integer]
//! atom      := number | ident | "abs" "(" expr ")" | "(" expr ")"
//! ```
//!
//! The guard left-hand side is usually the bare map variable; any `sum` is
//! accepted so that printed derivatives of `abs(u)` parse back.

use std::fmt;

use thiserror::Error;

use super::ast::{CmpOp, Expr, Guard, Piecewise};
use super::lexer::{tokenize, LexError, Position, Token, TokenKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub struct ParseError {
    pub position: Position,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "parse error at {}: expected ", self.position)?;
        match self.expected.as_slice() {
            [one] => write!(f, "{one}")?,
            many => write!(f, "one of {}", many.join(", "))?,
        }
        let found = if self.found.is_empty() {
            "end of input"
        } else {
            &self.found
        };
        write!(f, "; found `{found}`")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DslError {
    #[error("lex error: {0}")]
    Lex(#[from] LexError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

impl DslError {
    pub fn position(&self) -> Position {
        match self {
            DslError::Lex(e) => e.position,
            DslError::Parse(e) => e.position,
        }
    }
}

/// Header and body of a parsed `map` definition.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedMap {
    pub name: String,
    pub variable: String,
    pub body: Expr,
}

pub fn parse_map_source(source: &str) -> Result<ParsedMap, DslError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        var: String::new(),
    };
    p.expect(TokenKind::Keyword, "map", "`map`")?;
    let name = p.ident("map name")?;
    p.expect(TokenKind::Punctuation, "(", "`(`")?;
    p.var = p.ident("variable name")?;
    p.expect(TokenKind::Punctuation, ")", "`)`")?;
    p.expect(TokenKind::Operator, "=", "`=`")?;
    let body = p.expr()?;
    p.end()?;
    Ok(ParsedMap {
        name,
        variable: p.var,
        body,
    })
}

/// Parses a bare expression in the variable `var`.
pub fn parse_expr(source: &str, var: &str) -> Result<Expr, DslError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        tokens: &tokens,
        pos: 0,
        var: var.to_string(),
    };
    let e = p.expr()?;
    p.end()?;
    Ok(e)
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    var: String,
}

impl Parser<'_> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.pos];
        if t.kind != TokenKind::Eof {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.peek().is(kind, lexeme)
    }

    fn eat(&mut self, kind: TokenKind, lexeme: &str) -> bool {
        if self.at(kind, lexeme) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error<S: Into<String>>(&self, expected: impl IntoIterator<Item = S>) -> DslError {
        let t = self.peek();
        DslError::Parse(ParseError {
            position: t.position,
            expected: expected.into_iter().map(Into::into).collect(),
            found: t.lexeme.clone(),
        })
    }

    fn expect(&mut self, kind: TokenKind, lexeme: &str, label: &str) -> Result<(), DslError> {
        if self.eat(kind, lexeme) {
            Ok(())
        } else {
            Err(self.error([label]))
        }
    }

    fn ident(&mut self, label: &str) -> Result<String, DslError> {
        if self.peek().kind == TokenKind::Identifier {
            Ok(self.advance().lexeme.clone())
        } else {
            Err(self.error([label]))
        }
    }

    fn end(&self) -> Result<(), DslError> {
        if self.peek().kind == TokenKind::Eof {
            Ok(())
        } else {
            Err(self.error(["end of input", "operator"]))
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        if self.at(TokenKind::Keyword, "piecewise") {
            self.piecewise()
        } else {
            self.sum()
        }
    }

    fn piecewise(&mut self) -> Result<Expr, DslError> {
        self.advance();
        self.expect(TokenKind::Punctuation, "{", "`{`")?;
        let mut branches = Vec::new();
        while !self.at(TokenKind::Keyword, "else") {
            if !branches.is_empty() && self.at(TokenKind::Punctuation, "}") {
                return Err(self.error(["guard", "`else`"]));
            }
            let guard = self.guard()?;
            self.expect(TokenKind::Operator, "=>", "`=>`")?;
            let body = self.sum()?;
            self.expect(TokenKind::Punctuation, ";", "`;`")?;
            branches.push((guard, body));
        }
        if branches.is_empty() {
            return Err(self.error(["guard"]));
        }
        self.advance();
        self.expect(TokenKind::Operator, "=>", "`=>`")?;
        let otherwise = self.sum()?;
        self.eat(TokenKind::Punctuation, ";");
        self.expect(TokenKind::Punctuation, "}", "`}`")?;
        Ok(Expr::Piecewise(Piecewise {
            branches,
            otherwise: Box::new(otherwise),
        }))
    }

    fn guard(&mut self) -> Result<Guard, DslError> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            t if t.kind == TokenKind::Operator => CmpOp::from_symbol(&t.lexeme),
            _ => None,
        };
        let Some(op) = op else {
            return Err(self.error(["`<`", "`<=`", "`>`", "`>=`"]));
        };
        self.advance();
        let negative = self.eat(TokenKind::Operator, "-");
        let bound = self.number("number")?;
        Ok(Guard {
            lhs,
            op,
            bound: if negative { -bound } else { bound },
        })
    }

    fn number(&mut self, label: &str) -> Result<f64, DslError> {
        let t = self.peek();
        if t.kind == TokenKind::Number {
            if let Ok(v) = t.lexeme.parse::<f64>() {
                self.advance();
                return Ok(v);
            }
        }
        Err(self.error([label]))
    }

    fn sum(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.prod()?;
        loop {
            if self.eat(TokenKind::Operator, "+") {
                lhs = Expr::add(lhs, self.prod()?);
            } else if self.eat(TokenKind::Operator, "-") {
                lhs = Expr::sub(lhs, self.prod()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn prod(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(TokenKind::Operator, "*") {
                lhs = Expr::mul(lhs, self.unary()?);
            } else if self.eat(TokenKind::Operator, "/") {
                lhs = Expr::div(lhs, self.unary()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.eat(TokenKind::Operator, "-") {
            Ok(Expr::neg(self.unary()?))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.atom()?;
        if !self.eat(TokenKind::Operator, "^") {
            return Ok(base);
        }
        let t = self.peek();
        let exp = if t.kind == TokenKind::Number && t.lexeme.bytes().all(|b| b.is_ascii_digit()) {
            t.lexeme.parse::<u32>().ok()
        } else {
            None
        };
        match exp {
            Some(n) => {
                self.advance();
                Ok(Expr::pow(base, n))
            }
            None => Err(self.error(["non-negative integer exponent"])),
        }
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let t = self.peek().clone();
        match t.kind {
            TokenKind::Number => Ok(Expr::Const(self.number("number")?)),
            TokenKind::Identifier => {
                if t.lexeme != self.var {
                    return Err(self.error([format!("variable `{}`", self.var)]));
                }
                self.advance();
                Ok(Expr::Var(t.lexeme))
            }
            TokenKind::Keyword if t.lexeme == "abs" => {
                self.advance();
                self.expect(TokenKind::Punctuation, "(", "`(`")?;
                let inner = self.expr()?;
                self.expect(TokenKind::Punctuation, ")", "`)`")?;
                Ok(Expr::abs(inner))
            }
            TokenKind::Punctuation if t.lexeme == "(" => {
                self.advance();
                let inner = self.expr()?;
                self.expect(TokenKind::Punctuation, ")", "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error(["number", "identifier", "`abs`", "`(`", "`-`"])),
        }
    }
}
