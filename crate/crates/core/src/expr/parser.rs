use thiserror::Error;

use super::{Expr, UnaryOp, Var};
use crate::expr::BinaryOp;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}{hint}")]
    UnknownIdentifier {
        name: String,
        offset: usize,
        hint: &'static str,
    },
    #[error("exponent at byte {offset} is not constant")]
    NonConstantExponent { offset: usize },
    #[error("nesting deeper than {limit} at byte {offset}")]
    TooDeep { limit: usize, offset: usize },
    #[error("expression has more than {limit} tokens")]
    TooManyTokens { limit: usize },
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty | ParseError::TooManyTokens { .. } => None,
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::NonConstantExponent { offset }
            | ParseError::TooDeep { offset, .. } => Some(*offset),
        }
    }
}

/// Resource limits applied while parsing untrusted input.
#[derive(Debug, Clone, Copy)]
pub struct ParseLimits {
    pub max_depth: usize,
    pub max_tokens: usize,
}

impl Default for ParseLimits {
    fn default() -> Self {
        Self {
            max_depth: 64,
            max_tokens: 4096,
        }
    }
}

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
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn lex(text: &str, limits: &ParseLimits) -> Result<Vec<Token>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if out.len() >= limits.max_tokens {
            return Err(ParseError::TooManyTokens {
                limit: limits.max_tokens,
            });
        }
        let start = i;
        let tok = match c {
            b'+' => Tok::Plus,
            b'-' => Tok::Minus,
            b'*' => Tok::Star,
            b'/' => Tok::Slash,
            b'^' => Tok::Caret,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let lexeme = &text[start..i];
                if lexeme == "." {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: "lone decimal point".into(),
                    });
                }
                let value = lexeme.parse::<f64>().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("malformed number `{lexeme}`"),
                })?;
                out.push(Token {
                    tok: Tok::Num(value),
                    offset: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    offset: start,
                });
                continue;
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        out.push(Token { tok, offset: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    depth: usize,
    limits: &'a ParseLimits,
}

/// Parses an expression with the default [`ParseLimits`].
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    parse_with_limits(text, &ParseLimits::default())
}

pub fn parse_with_limits(text: &str, limits: &ParseLimits) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let tokens = lex(text, limits)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        end: text.len(),
        depth: 0,
        limits,
    };
    let expr = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError::Syntax {
            offset: tok.offset,
            message: "unexpected trailing input".into(),
        });
    }
    Ok(expr)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.tok == tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > self.limits.max_depth {
            return Err(ParseError::TooDeep {
                limit: self.limits.max_depth,
                offset: self.offset(),
            });
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => BinaryOp::Add,
                Some(Tok::Minus) => BinaryOp::Sub,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        self.depth -= 1;
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().map(|t| &t.tok) {
                Some(Tok::Star) => BinaryOp::Mul,
                Some(Tok::Slash) => BinaryOp::Div,
                _ => break,
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let out = if self.eat(&Tok::Minus) {
            match self.unary()? {
                // Negative literals are stored as constants.
                Expr::Const(c) => Expr::Const(-c),
                other => Expr::unary(UnaryOp::Neg, other),
            }
        } else {
            self.power()?
        };
        self.depth -= 1;
        Ok(out)
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if !self.eat(&Tok::Caret) {
            return Ok(base);
        }
        let offset = self.offset();
        let exponent = self.unary()?;
        if !exponent.is_constant() {
            return Err(ParseError::NonConstantExponent { offset });
        }
        let value = exponent
            .eval(0.0, 0.0)
            .map_err(|e| ParseError::Syntax {
                offset,
                message: format!("exponent does not evaluate: {e}"),
            })?;
        Ok(Expr::pow(base, value))
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let offset = self.offset();
        let Some(token) = self.bump() else {
            return Err(ParseError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            });
        };
        match token.tok {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var(Var::X)),
                "y" => Ok(Expr::Var(Var::Y)),
                _ => {
                    if let Some(op) = UnaryOp::from_function_name(&name) {
                        if !self.eat(&Tok::LParen) {
                            return Err(ParseError::Syntax {
                                offset: self.offset(),
                                message: format!("`{name}` requires parentheses"),
                            });
                        }
                        let arg = self.expr()?;
                        self.expect_close()?;
                        Ok(Expr::unary(op, arg))
                    } else {
                        let hint = if name == "r" {
                            " (write sqrt(x^2+y^2) instead of r)"
                        } else {
                            ""
                        };
                        Err(ParseError::UnknownIdentifier {
                            name,
                            offset: token.offset,
                            hint,
                        })
                    }
                }
            },
            other => Err(ParseError::Syntax {
                offset: token.offset,
                message: format!("unexpected {}", describe(&other)),
            }),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        if self.eat(&Tok::RParen) {
            Ok(())
        } else {
            Err(ParseError::Syntax {
                offset: self.offset(),
                message: "expected `)`".into(),
            })
        }
    }
}

fn describe(tok: &Tok) -> &'static str {
    match tok {
        Tok::Num(_) => "number",
        Tok::Ident(_) => "identifier",
        Tok::Plus => "`+`",
        Tok::Minus => "`-`",
        Tok::Star => "`*`",
        Tok::Slash => "`/`",
        Tok::Caret => "`^`",
        Tok::LParen => "`(`",
        Tok::RParen => "`)`",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_of_variables() {
        assert_eq!(
            parse("x*y").unwrap(),
            Expr::binary(BinaryOp::Mul, Expr::x(), Expr::y())
        );
    }

    #[test]
    fn log_over_sum() {
        let e = parse("log(1+x^2+y^2)").unwrap();
        let Expr::Unary(UnaryOp::Log, arg) = e else {
            panic!("expected log node");
        };
        assert!(matches!(*arg, Expr::Binary(BinaryOp::Add, _, _)));
    }

    #[test]
    fn unbalanced_reports_end_offset() {
        let err = parse("log(1+").unwrap_err();
        assert_eq!(err.offset(), Some(6));
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn precedence() {
        // ^ binds tighter than unary minus, which binds tighter than * and /.
        let e = parse("-x^2").unwrap();
        assert_eq!(e, Expr::unary(UnaryOp::Neg, Expr::pow(Expr::x(), 2.0)));
        let e = parse("1-2-3").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), -4.0);
        let e = parse("8/4/2").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), 1.0);
        let e = parse("2^3^2").unwrap();
        assert_eq!(e.eval(0.0, 0.0).unwrap(), 512.0);
        let e = parse("2*-x").unwrap();
        assert_eq!(e.eval(3.0, 0.0).unwrap(), -6.0);
        let e = parse("x^-1").unwrap();
        assert_eq!(e, Expr::pow(Expr::x(), -1.0));
    }

    #[test]
    fn constant_exponent_expressions_fold() {
        assert_eq!(parse("x^(1/2)").unwrap(), Expr::pow(Expr::x(), 0.5));
    }

    #[test]
    fn rejects_non_constant_exponent() {
        let err = parse("2^x").unwrap_err();
        assert_eq!(err, ParseError::NonConstantExponent { offset: 2 });
    }

    #[test]
    fn rejects_unknown_and_polar_identifiers() {
        assert!(matches!(
            parse("foo(x)"),
            Err(ParseError::UnknownIdentifier { .. })
        ));
        let err = parse("log(r)").unwrap_err();
        assert!(err.to_string().contains("sqrt(x^2+y^2)"));
    }

    #[test]
    fn functions_need_parentheses() {
        assert!(parse("exp x").is_err());
        assert!(parse("sin").is_err());
    }

    #[test]
    fn no_implicit_multiplication() {
        let err = parse("2x").unwrap_err();
        assert_eq!(err.offset(), Some(1));
    }

    #[test]
    fn rejects_empty_and_garbage() {
        assert_eq!(parse("   "), Err(ParseError::Empty));
        assert!(parse("x $ y").is_err());
        assert!(parse(")").is_err());
        assert!(parse("1 2").is_err());
        assert!(parse(".").is_err());
    }

    #[test]
    fn depth_limit_is_an_error() {
        let text = format!("{}x{}", "(".repeat(500), ")".repeat(500));
        assert!(matches!(parse(&text), Err(ParseError::TooDeep { .. })));
        let minus = format!("{}x", "-".repeat(500));
        assert!(matches!(parse(&minus), Err(ParseError::TooDeep { .. })));
    }

    #[test]
    fn token_limit_is_an_error() {
        let limits = ParseLimits {
            max_depth: 64,
            max_tokens: 10,
        };
        let text = vec!["x"; 20].join("+");
        assert_eq!(
            parse_with_limits(&text, &limits),
            Err(ParseError::TooManyTokens { limit: 10 })
        );
    }
}
