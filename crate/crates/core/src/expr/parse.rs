//! Infix parser. Precedence, tightest first: `^` (right associative), unary
//! minus, `* /`, `+ -`. So `-x^2` is `-(x^2)` and `2^-1` is `2^(-1)`.

use super::{Expr, UnaryOp};
use crate::error::ExprError;

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next(&mut self) -> Result<(usize, Tok), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((start, Tok::End));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((start, t));
        }
        if c.is_ascii_digit() || c == b'.' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
                end += 1;
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    while k < bytes.len() && bytes[k].is_ascii_digit() {
                        k += 1;
                    }
                    end = k;
                }
            }
            let text = &self.src[start..end];
            let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                offset: start,
                message: format!("malformed number '{text}'"),
            })?;
            self.pos = end;
            return Ok((start, Tok::Num(value)));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((start, Tok::Ident(self.src[start..end].to_string())));
        }
        // report the whole (possibly multi-byte) character
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ExprError::Syntax {
            offset: start,
            message: format!("unexpected character '{ch}'"),
        })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: (usize, Tok),
    names: &'a [String],
    depth: usize,
}

/// Parse `text` into a tree whose variables index into `names`.
pub fn parse(text: &str, names: &[String]) -> Result<Expr, ExprError> {
    let mut lexer = Lexer { src: text, pos: 0 };
    let first = lexer.next()?;
    let mut p = Parser {
        lexer,
        peeked: first,
        names,
        depth: 0,
    };
    let e = p.expr()?;
    match &p.peeked {
        (_, Tok::End) => Ok(e),
        (off, t) => Err(ExprError::Syntax {
            offset: *off,
            message: format!("unexpected trailing token {t:?}"),
        }),
    }
}

impl Parser<'_> {
    fn bump(&mut self) -> Result<(usize, Tok), ExprError> {
        let next = self.lexer.next()?;
        Ok(std::mem::replace(&mut self.peeked, next))
    }

    fn enter(&mut self) -> Result<(), ExprError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return Err(ExprError::Syntax {
                offset: self.peeked.0,
                message: "expression nested too deeply".into(),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            match self.peeked.1 {
                Tok::Plus => {
                    self.bump()?;
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.bump()?;
                    lhs = lhs - self.term()?;
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peeked.1 {
                Tok::Star => {
                    self.bump()?;
                    lhs = lhs * self.unary()?;
                }
                Tok::Slash => {
                    self.bump()?;
                    lhs = lhs / self.unary()?;
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        self.enter()?;
        let e = match self.peeked.1 {
            Tok::Minus => {
                self.bump()?;
                -self.unary()?
            }
            Tok::Plus => {
                self.bump()?;
                self.unary()?
            }
            _ => self.power()?,
        };
        self.depth -= 1;
        Ok(e)
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peeked.1 == Tok::Caret {
            self.bump()?;
            let exponent = self.unary()?;
            return Ok(base.pow(exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let (offset, tok) = self.bump()?;
        match tok {
            Tok::Num(v) => Ok(Expr::constant(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peeked.1 == Tok::LParen {
                    let Some(op) = UnaryOp::from_name(&name) else {
                        return Err(ExprError::Syntax {
                            offset,
                            message: format!("unknown function '{name}'"),
                        });
                    };
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Expr::unary(op, arg));
                }
                if let Some(i) = self.names.iter().position(|n| *n == name) {
                    return Ok(Expr::var(i));
                }
                if name == "pi" {
                    return Ok(Expr::constant(std::f64::consts::PI));
                }
                if UnaryOp::from_name(&name).is_some() {
                    return Err(ExprError::Syntax {
                        offset,
                        message: format!("function '{name}' needs a parenthesised argument"),
                    });
                }
                Err(ExprError::UnknownVariable(name))
            }
            Tok::End => Err(ExprError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
            other => Err(ExprError::Syntax {
                offset,
                message: format!("unexpected token {other:?}"),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.bump()? {
            (_, Tok::RParen) => Ok(()),
            (offset, t) => Err(ExprError::Syntax {
                offset,
                message: format!("expected ')', found {t:?}"),
            }),
        }
    }
}
