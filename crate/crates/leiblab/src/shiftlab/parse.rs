//! Text grammar for shift-operator expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*')? factor)*        juxtaposition composes
//! factor := primary '^'*                   postfix adjoint
//! primary:= 'B' | "B'" | 'J' | 'P' | 'I'
//!         | rational                       scalar multiple of the identity
//!         | '-' primary
//!         | '(' expr ')'
//! ```
//!
//! Rationals are `a` or `a/b` in decimal digits. Adjoints are rewritten
//! structurally at parse time, so the returned tree is adjoint-free.

use super::{QC, ShiftOp};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Token {
    B,
    BPrime,
    J,
    P,
    I,
    Number(i64, i64),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(input: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let mut chars = input.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                chars.next();
            }
            'B' => {
                chars.next();
                if chars.peek() == Some(&'\'') {
                    chars.next();
                    tokens.push(Token::BPrime);
                } else {
                    tokens.push(Token::B);
                }
            }
            'J' => {
                chars.next();
                tokens.push(Token::J);
            }
            'P' => {
                chars.next();
                tokens.push(Token::P);
            }
            'I' => {
                chars.next();
                tokens.push(Token::I);
            }
            '+' => {
                chars.next();
                tokens.push(Token::Plus);
            }
            '-' => {
                chars.next();
                tokens.push(Token::Minus);
            }
            '*' => {
                chars.next();
                tokens.push(Token::Star);
            }
            '^' => {
                chars.next();
                tokens.push(Token::Caret);
            }
            '(' => {
                chars.next();
                tokens.push(Token::LParen);
            }
            ')' => {
                chars.next();
                tokens.push(Token::RParen);
            }
            '0'..='9' => {
                let num = read_int(&mut chars)?;
                let den = if chars.peek() == Some(&'/') {
                    chars.next();
                    if !matches!(chars.peek(), Some('0'..='9')) {
                        return Err(Error::Parse("expected digits after '/'".into()));
                    }
                    read_int(&mut chars)?
                } else {
                    1
                };
                if den == 0 {
                    return Err(Error::Parse("zero denominator".into()));
                }
                tokens.push(Token::Number(num, den));
            }
            other => {
                return Err(Error::Parse(format!("unexpected character '{other}'")));
            }
        }
    }
    Ok(tokens)
}

fn read_int(chars: &mut std::iter::Peekable<std::str::Chars<'_>>) -> Result<i64> {
    let mut digits = String::new();
    while let Some(&c) = chars.peek() {
        if c.is_ascii_digit() {
            digits.push(c);
            chars.next();
        } else {
            break;
        }
    }
    digits
        .parse()
        .map_err(|_| Error::Parse(format!("integer '{digits}' out of range")))
}

/// A bare number parses to a scaled identity; composing with one on the
/// left is plain scaling. Absorbing it keeps parsed trees in the shape the
/// printer emits, so display and parse invert each other structurally.
fn combine(acc: ShiftOp, rhs: ShiftOp) -> ShiftOp {
    if let ShiftOp::Scale(c, inner) = &acc {
        if **inner == ShiftOp::Id {
            return rhs.scaled(c.clone());
        }
    }
    acc.compose(rhs)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<ShiftOp> {
        let mut acc = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => {
                    self.next();
                    acc = acc.plus(self.term()?);
                }
                Token::Minus => {
                    self.next();
                    acc = acc.minus(self.term()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<ShiftOp> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.next();
                    let rhs = self.factor()?;
                    acc = combine(acc, rhs);
                }
                Some(
                    Token::B
                    | Token::BPrime
                    | Token::J
                    | Token::P
                    | Token::I
                    | Token::Number(..)
                    | Token::LParen,
                ) => {
                    let rhs = self.factor()?;
                    acc = combine(acc, rhs);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<ShiftOp> {
        let mut op = self.primary()?;
        while self.peek() == Some(&Token::Caret) {
            self.next();
            op = op.adjoint();
        }
        Ok(op)
    }

    fn primary(&mut self) -> Result<ShiftOp> {
        match self.next() {
            Some(Token::B) => Ok(ShiftOp::B),
            Some(Token::BPrime) => Ok(ShiftOp::Binv),
            Some(Token::J) => Ok(ShiftOp::J),
            Some(Token::P) => Ok(ShiftOp::P),
            Some(Token::I) => Ok(ShiftOp::Id),
            Some(Token::Number(num, den)) => {
                Ok(ShiftOp::Id.scaled(QC::from_ratio(num, den)?))
            }
            Some(Token::Minus) => {
                // a minus directly before a number is a negative literal;
                // anywhere else it negates the operator it precedes
                if let Some(&Token::Number(num, den)) = self.peek() {
                    self.next();
                    return Ok(ShiftOp::Id.scaled(QC::from_ratio(-num, den)?));
                }
                Ok(self.primary()?.scaled(QC::from_int(-1)))
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err(Error::Parse("missing closing parenthesis".into())),
                }
            }
            Some(tok) => Err(Error::Parse(format!("unexpected token {tok:?}"))),
            None => Err(Error::Parse("unexpected end of expression".into())),
        }
    }
}

/// Parses an operator expression; the result never contains adjoint nodes
/// because `^` is rewritten away structurally.
pub fn parse_shift_expr(input: &str) -> Result<ShiftOp> {
    let tokens = tokenize(input)?;
    if tokens.is_empty() {
        return Err(Error::Parse("empty expression".into()));
    }
    let mut parser = Parser { tokens, pos: 0 };
    let op = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Parse(format!(
            "trailing input at token {}",
            parser.pos
        )));
    }
    Ok(op)
}
