//! Tiny arithmetic expression grammar for custom coefficients and payoffs:
//! numbers, `x`, `+ - * /`, unary minus, parentheses, and the functions
//! `exp, cosh, sinh, sqrt, abs, min, max`.  No variables beyond `x`, no
//! general scripting.

use anyhow::{anyhow, bail, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Exp(Box<Expr>),
    Cosh(Box<Expr>),
    Sinh(Box<Expr>),
    Sqrt(Box<Expr>),
    Abs(Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr> {
        let tokens = tokenize(text)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expression()?;
        if parser.pos != parser.tokens.len() {
            bail!(
                "unexpected trailing input in expression: {:?}",
                parser.tokens[parser.pos]
            );
        }
        Ok(expr)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Exp(a) => a.eval(x).exp(),
            Expr::Cosh(a) => a.eval(x).cosh(),
            Expr::Sinh(a) => a.eval(x).sinh(),
            Expr::Sqrt(a) => a.eval(x).sqrt(),
            Expr::Abs(a) => a.eval(x).abs(),
            Expr::Min(a, b) => a.eval(x).min(b.eval(x)),
            Expr::Max(a, b) => a.eval(x).max(b.eval(x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Comma,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '(' => {
                out.push(Token::LParen);
                i += 1;
            }
            ')' => {
                out.push(Token::RParen);
                i += 1;
            }
            ',' => {
                out.push(Token::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_digit()
                        || chars[i] == '.'
                        || chars[i] == 'e'
                        || chars[i] == 'E'
                        || ((chars[i] == '+' || chars[i] == '-')
                            && i > start
                            && (chars[i - 1] == 'e' || chars[i - 1] == 'E')))
                {
                    i += 1;
                }
                let s: String = chars[start..i].iter().collect();
                let v: f64 = s.parse().map_err(|_| anyhow!("bad number literal {s:?}"))?;
                out.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => bail!("unexpected character {other:?} in expression"),
        }
    }
    Ok(out)
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

    fn expect(&mut self, t: Token) -> Result<()> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            got => bail!("expected {t:?}, got {got:?}"),
        }
    }

    fn expression(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(Token::Slash) => {
                    self.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if let Some(Token::Minus) = self.peek() {
            self.next();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Expr::Num(v)),
            Some(Token::LParen) => {
                let inner = self.expression()?;
                self.expect(Token::RParen)?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => match name.as_str() {
                "x" => Ok(Expr::X),
                "exp" | "cosh" | "sinh" | "sqrt" | "abs" => {
                    self.expect(Token::LParen)?;
                    let arg = self.expression()?;
                    self.expect(Token::RParen)?;
                    Ok(match name.as_str() {
                        "exp" => Expr::Exp(Box::new(arg)),
                        "cosh" => Expr::Cosh(Box::new(arg)),
                        "sinh" => Expr::Sinh(Box::new(arg)),
                        "sqrt" => Expr::Sqrt(Box::new(arg)),
                        _ => Expr::Abs(Box::new(arg)),
                    })
                }
                "min" | "max" => {
                    self.expect(Token::LParen)?;
                    let a = self.expression()?;
                    self.expect(Token::Comma)?;
                    let b = self.expression()?;
                    self.expect(Token::RParen)?;
                    Ok(if name == "min" {
                        Expr::Min(Box::new(a), Box::new(b))
                    } else {
                        Expr::Max(Box::new(a), Box::new(b))
                    })
                }
                other => bail!(
                    "unknown identifier {other:?} (only x and exp/cosh/sinh/sqrt/abs/min/max)"
                ),
            },
            got => bail!("unexpected token {got:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_and_functions() {
        let e = Expr::parse("abs(x) + 2 * exp(-x) - min(x, 1) / 4").unwrap();
        let x = 0.5_f64;
        let want = x.abs() + 2.0 * (-x).exp() - x.min(1.0) / 4.0;
        assert!((e.eval(x) - want).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = Expr::parse("-x * 3 + 4").unwrap();
        assert_eq!(e.eval(2.0), -2.0);
        let e = Expr::parse("2 - -3").unwrap();
        assert_eq!(e.eval(0.0), 5.0);
        let e = Expr::parse("(1 + 2) * (3 - 1)").unwrap();
        assert_eq!(e.eval(0.0), 6.0);
    }

    #[test]
    fn scientific_notation() {
        let e = Expr::parse("1e-3 * x + 2.5E2").unwrap();
        assert_eq!(e.eval(1000.0), 1.0 + 250.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("min(x)").is_err());
        assert!(Expr::parse("x ^ 2").is_err());
        assert!(Expr::parse("1 2").is_err());
    }
}
