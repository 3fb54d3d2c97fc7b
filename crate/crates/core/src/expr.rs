//! A small arithmetic-expression interpreter over the variables `t` and `x`
//! with symbolic differentiation, used to accept coefficient definitions
//! from config files.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fun {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
    Asinh,
    Atan,
}

impl Fun {
    fn from_name(s: &str) -> Option<Fun> {
        Some(match s {
            "sin" => Fun::Sin,
            "cos" => Fun::Cos,
            "tan" => Fun::Tan,
            "exp" => Fun::Exp,
            "ln" | "log" => Fun::Ln,
            "sqrt" => Fun::Sqrt,
            "abs" => Fun::Abs,
            "sinh" => Fun::Sinh,
            "cosh" => Fun::Cosh,
            "tanh" => Fun::Tanh,
            "asinh" => Fun::Asinh,
            "atan" => Fun::Atan,
            _ => return None,
        })
    }

    fn apply(self, v: f64) -> f64 {
        match self {
            Fun::Sin => v.sin(),
            Fun::Cos => v.cos(),
            Fun::Tan => v.tan(),
            Fun::Exp => v.exp(),
            Fun::Ln => v.ln(),
            Fun::Sqrt => v.sqrt(),
            Fun::Abs => v.abs(),
            Fun::Sinh => v.sinh(),
            Fun::Cosh => v.cosh(),
            Fun::Tanh => v.tanh(),
            Fun::Asinh => v.asinh(),
            Fun::Atan => v.atan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    X,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Fun(Fun, Box<Expr>),
}

use Expr::*;

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Expr(format!(
                "trailing input at token {:?}",
                p.tokens[p.pos]
            )));
        }
        Ok(e)
    }

    pub fn eval(&self, t: f64, x: f64) -> f64 {
        match self {
            Num(c) => *c,
            T => t,
            X => x,
            Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Pow(a, b) => a.eval(t, x).powf(b.eval(t, x)),
            Neg(a) => -a.eval(t, x),
            Fun(f, a) => f.apply(a.eval(t, x)),
        }
    }

    pub fn depends_on_t(&self) -> bool {
        match self {
            T => true,
            Num(_) | X => false,
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                a.depends_on_t() || b.depends_on_t()
            }
            Neg(a) | Fun(_, a) => a.depends_on_t(),
        }
    }

    /// Symbolic partial derivative with respect to `x` (`wrt_x = true`) or `t`.
    pub fn diff(&self, wrt_x: bool) -> Expr {
        let d = |e: &Expr| e.diff(wrt_x);
        match self {
            Num(_) => Num(0.0),
            T => Num(if wrt_x { 0.0 } else { 1.0 }),
            X => Num(if wrt_x { 1.0 } else { 0.0 }),
            Add(a, b) => simp_add(d(a), d(b)),
            Sub(a, b) => simp_sub(d(a), d(b)),
            Mul(a, b) => simp_add(
                simp_mul(d(a), (**b).clone()),
                simp_mul((**a).clone(), d(b)),
            ),
            Div(a, b) => simp_div(
                simp_sub(
                    simp_mul(d(a), (**b).clone()),
                    simp_mul((**a).clone(), d(b)),
                ),
                simp_mul((**b).clone(), (**b).clone()),
            ),
            Pow(a, b) => {
                let da = d(a);
                if let Num(c) = **b {
                    // d(a^c) = c a^(c-1) a'
                    simp_mul(
                        simp_mul(Num(c), Pow(a.clone(), Box::new(Num(c - 1.0)))),
                        da,
                    )
                } else {
                    // general: a^b (b' ln a + b a' / a)
                    let db = d(b);
                    simp_mul(
                        Pow(a.clone(), b.clone()),
                        simp_add(
                            simp_mul(db, Fun(self::Fun::Ln, a.clone())),
                            simp_div(simp_mul((**b).clone(), da), (**a).clone()),
                        ),
                    )
                }
            }
            Neg(a) => simp_neg(d(a)),
            Fun(f, a) => {
                let da = d(a);
                let outer = match f {
                    self::Fun::Sin => Fun(self::Fun::Cos, a.clone()),
                    self::Fun::Cos => simp_neg(Fun(self::Fun::Sin, a.clone())),
                    self::Fun::Tan => simp_div(
                        Num(1.0),
                        simp_mul(
                            Fun(self::Fun::Cos, a.clone()),
                            Fun(self::Fun::Cos, a.clone()),
                        ),
                    ),
                    self::Fun::Exp => Fun(self::Fun::Exp, a.clone()),
                    self::Fun::Ln => simp_div(Num(1.0), (**a).clone()),
                    self::Fun::Sqrt => simp_div(
                        Num(0.5),
                        Fun(self::Fun::Sqrt, a.clone()),
                    ),
                    // sign(u) away from the kink
                    self::Fun::Abs => simp_div((**a).clone(), Fun(self::Fun::Abs, a.clone())),
                    self::Fun::Sinh => Fun(self::Fun::Cosh, a.clone()),
                    self::Fun::Cosh => Fun(self::Fun::Sinh, a.clone()),
                    self::Fun::Tanh => simp_sub(
                        Num(1.0),
                        simp_mul(
                            Fun(self::Fun::Tanh, a.clone()),
                            Fun(self::Fun::Tanh, a.clone()),
                        ),
                    ),
                    self::Fun::Asinh => simp_div(
                        Num(1.0),
                        Fun(
                            self::Fun::Sqrt,
                            Box::new(simp_add(
                                Num(1.0),
                                simp_mul((**a).clone(), (**a).clone()),
                            )),
                        ),
                    ),
                    self::Fun::Atan => simp_div(
                        Num(1.0),
                        simp_add(Num(1.0), simp_mul((**a).clone(), (**a).clone())),
                    ),
                };
                simp_mul(outer, da)
            }
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Num(c) if *c == 0.0)
}
fn is_one(e: &Expr) -> bool {
    matches!(e, Num(c) if *c == 1.0)
}

fn simp_add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x + y),
        _ if is_zero(&a) => b,
        _ if is_zero(&b) => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}
fn simp_sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x - y),
        _ if is_zero(&b) => a,
        _ if is_zero(&a) => simp_neg(b),
        _ => Sub(Box::new(a), Box::new(b)),
    }
}
fn simp_mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x * y),
        _ if is_zero(&a) || is_zero(&b) => Num(0.0),
        _ if is_one(&a) => b,
        _ if is_one(&b) => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}
fn simp_div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return Num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Div(Box::new(a), Box::new(b))
}
fn simp_neg(a: Expr) -> Expr {
    match a {
        Num(x) => Num(-x),
        Neg(inner) => *inner,
        _ => Neg(Box::new(a)),
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
    Caret,
    LParen,
    RParen,
}

fn lex(src: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '^' => {
                tokens.push(Token::Caret);
                i += 1;
            }
            '(' => {
                tokens.push(Token::LParen);
                i += 1;
            }
            ')' => {
                tokens.push(Token::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let s: String = bytes[start..i].iter().collect();
                let v = s
                    .parse()
                    .map_err(|_| Error::Expr(format!("bad number '{s}'")))?;
                tokens.push(Token::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                tokens.push(Token::Ident(bytes[start..i].iter().collect()));
            }
            other => return Err(Error::Expr(format!("unexpected character '{other}'"))),
        }
    }
    Ok(tokens)
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

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(op) = self.peek() {
            match op {
                Token::Plus => {
                    self.next();
                    lhs = Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.next();
                    lhs = Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        while let Some(op) = self.peek() {
            match op {
                Token::Star => {
                    self.next();
                    lhs = Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Token::Slash => {
                    self.next();
                    lhs = Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.unary()?;
        if let Some(Token::Caret) = self.peek() {
            self.next();
            // right associative
            let exp = self.factor()?;
            return Ok(Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Token::Minus) = self.peek() {
            self.next();
            return Ok(simp_neg(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(Num(v)),
            Some(Token::Ident(name)) => match name.as_str() {
                "t" => Ok(T),
                "x" => Ok(X),
                "pi" => Ok(Num(std::f64::consts::PI)),
                _ => {
                    let f = Fun::from_name(&name)
                        .ok_or_else(|| Error::Expr(format!("unknown identifier '{name}'")))?;
                    match self.next() {
                        Some(Token::LParen) => {}
                        _ => return Err(Error::Expr(format!("expected '(' after '{name}'"))),
                    }
                    let arg = self.expr()?;
                    match self.next() {
                        Some(Token::RParen) => {}
                        _ => return Err(Error::Expr("expected ')'".into())),
                    }
                    Ok(Fun(f, Box::new(arg)))
                }
            },
            Some(Token::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(e),
                    _ => Err(Error::Expr("expected ')'".into())),
                }
            }
            other => Err(Error::Expr(format!("unexpected token {other:?}"))),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(c) => write!(f, "{c}"),
            T => write!(f, "t"),
            X => write!(f, "x"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a} ^ {b})"),
            Neg(a) => write!(f, "(-{a})"),
            Fun(fun, a) => write!(f, "{fun:?}({a})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(e: &Expr, t: f64, x: f64) -> f64 {
        let h = 1e-6 * (1.0 + x.abs());
        (e.eval(t, x + h) - e.eval(t, x - h)) / (2.0 * h)
    }

    #[test]
    fn parse_and_eval() {
        let e = Expr::parse("(1 + t) * x^2 - sin(pi * x) / 2").unwrap();
        let t = 0.3;
        let x = 0.7;
        let want = (1.0 + t) * x * x - (std::f64::consts::PI * x).sin() / 2.0;
        assert!((e.eval(t, x) - want).abs() < 1e-14);
    }

    #[test]
    fn parse_errors() {
        assert!(Expr::parse("x +").is_err());
        assert!(Expr::parse("foo(x)").is_err());
        assert!(Expr::parse("x ) 2").is_err());
        assert!(Expr::parse("sin x").is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for src in [
            "x^3 - 2*x",
            "sqrt(1 + x^2)",
            "exp(-x) * sin(2*x)",
            "(1 + t) * x",
            "ln(2 + x^2)",
            "abs(x)^0.8",
            "tanh(x) + atan(x)",
        ] {
            let e = Expr::parse(src).unwrap();
            let dx = e.diff(true);
            for x in [0.4, 1.1, 2.3] {
                let got = dx.eval(0.5, x);
                let want = fd(&e, 0.5, x);
                assert!(
                    (got - want).abs() <= 1e-6 * (1.0 + want.abs()),
                    "{src} at {x}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn third_derivative() {
        let e = Expr::parse("x^5").unwrap();
        let d3 = e.diff(true).diff(true).diff(true);
        // 60 x^2
        assert!((d3.eval(0.0, 2.0) - 240.0).abs() < 1e-9);
    }

    #[test]
    fn time_derivative() {
        let e = Expr::parse("(1 + t) * x").unwrap();
        let dt = e.diff(false);
        assert!((dt.eval(0.7, 3.0) - 3.0).abs() < 1e-14);
        assert!(e.depends_on_t());
        assert!(!Expr::parse("x^2").unwrap().depends_on_t());
    }
}
