//! Parser and evaluator for the scalar expressions that supply problem
//! coefficients and custom boundary functionals.
//!
//! The grammar is deliberately small and unambiguous (no implicit
//! multiplication, no unary minus):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?                  -- '^' is right-associative
//! base   := number | variable | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func   := floor | abs | sqrt | min | max | exp | log
//! ```
//!
//! `floor` is the integer part (truncation toward -inf), `log` is the natural
//! logarithm, and `min`/`max` take exactly two arguments. Numbers are
//! unsigned literals such as `2`, `0.5` or `1.25e-3`; a negative constant can
//! be written as `0 - 2.5`.
//!
//! Parsed expressions are immutable and evaluation is pure, so they can be
//! shared freely between threads.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::math;

/// Built-in functions accepted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Floor,
    Abs,
    Sqrt,
    Min,
    Max,
    Exp,
    Log,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "floor" => Func::Floor,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Floor => "floor",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Ast {
    Num(f64),
    Var(usize),
    Bin(BinOp, Box<Ast>, Box<Ast>),
    Call(Func, Vec<Ast>),
}

/// Parse failure with the byte offset into the source where it occurred.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub pos: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownIdentifier(String),
    WrongArity {
        name: &'static str,
        expected: usize,
        got: usize,
    },
    BadNumber(String),
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::Empty => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedChar(c) => {
                write!(f, "unexpected character '{}' at byte {}", c, self.pos)
            }
            ParseErrorKind::UnexpectedToken(t) => {
                write!(f, "unexpected token '{}' at byte {}", t, self.pos)
            }
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of expression"),
            ParseErrorKind::UnknownIdentifier(n) => {
                write!(f, "unknown identifier '{}' at byte {}", n, self.pos)
            }
            ParseErrorKind::WrongArity {
                name,
                expected,
                got,
            } => write!(
                f,
                "function '{}' takes {} argument(s), got {} (at byte {})",
                name, expected, got, self.pos
            ),
            ParseErrorKind::BadNumber(t) => {
                write!(f, "malformed number '{}' at byte {}", t, self.pos)
            }
        }
    }
}

impl core::error::Error for ParseError {}

/// Evaluation failure: some operation left the real domain (NaN/inf).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalError {
    /// Operation that produced the non-finite value, e.g. `"sqrt"` or `"/"`.
    pub op: &'static str,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "domain error: '{}' produced a non-finite value", self.op)
    }
}

impl core::error::Error for EvalError {}

/// Evaluation failure at a specific grid index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridEvalError {
    pub index: usize,
    pub error: EvalError,
}

impl fmt::Display for GridEvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at grid index {}", self.error, self.index)
    }
}

impl core::error::Error for GridEvalError {}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn next_tok(&mut self) -> Result<Option<(usize, Tok)>, ParseError> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos] as char;
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => {
                self.pos += 1;
                Tok::Op(c)
            }
            '(' => {
                self.pos += 1;
                Tok::LParen
            }
            ')' => {
                self.pos += 1;
                Tok::RParen
            }
            ',' => {
                self.pos += 1;
                Tok::Comma
            }
            '0'..='9' => {
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                if self.pos < self.src.len() && self.src[self.pos] == b'.' {
                    self.pos += 1;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                }
                if self.pos < self.src.len() && (self.src[self.pos] | 0x20) == b'e' {
                    let mark = self.pos;
                    self.pos += 1;
                    if self.pos < self.src.len()
                        && (self.src[self.pos] == b'+' || self.src[self.pos] == b'-')
                    {
                        self.pos += 1;
                    }
                    if self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                            self.pos += 1;
                        }
                    } else {
                        // 'e' belonged to something else (e.g. "2exp" is a
                        // syntax error anyway); back off.
                        self.pos = mark;
                    }
                }
                let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
                let v: f64 = text.parse().map_err(|_| ParseError {
                    pos: start,
                    kind: ParseErrorKind::BadNumber(text.to_string()),
                })?;
                Tok::Num(v)
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap();
                Tok::Ident(text.to_string())
            }
            other => {
                return Err(ParseError {
                    pos: start,
                    kind: ParseErrorKind::UnexpectedChar(other),
                })
            }
        };
        Ok(Some((start, tok)))
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let mut lx = Lexer::new(src);
    let mut out = Vec::new();
    while let Some(t) = lx.next_tok()? {
        out.push(t);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser (recursive descent over the token list)
// ---------------------------------------------------------------------------

struct Parser<'a> {
    toks: &'a [(usize, Tok)],
    idx: usize,
    vars: &'a [&'a str],
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.idx)
    }

    fn bump(&mut self) -> Option<&(usize, Tok)> {
        let t = self.toks.get(self.idx);
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn err_here(&self, kind: ParseErrorKind) -> ParseError {
        let pos = self
            .toks
            .get(self.idx)
            .map(|(p, _)| *p)
            .unwrap_or(self.src_len);
        ParseError { pos, kind }
    }

    fn expr(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.term()?;
        while let Some((_, Tok::Op(c @ ('+' | '-')))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.idx += 1;
            let rhs = self.term()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Ast, ParseError> {
        let mut lhs = self.factor()?;
        while let Some((_, Tok::Op(c @ ('*' | '/')))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.idx += 1;
            let rhs = self.factor()?;
            lhs = Ast::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Ast, ParseError> {
        let base = self.base()?;
        if let Some((_, Tok::Op('^'))) = self.peek() {
            self.idx += 1;
            let exponent = self.factor()?;
            return Ok(Ast::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Ast, ParseError> {
        let (pos, tok) = match self.bump() {
            Some(t) => (t.0, t.1.clone()),
            None => return Err(self.err_here(ParseErrorKind::UnexpectedEnd)),
        };
        match tok {
            Tok::Num(v) => Ok(Ast::Num(v)),
            Tok::Ident(name) => {
                if let Some(func) = Func::lookup(&name) {
                    match self.bump() {
                        Some((_, Tok::LParen)) => {}
                        _ => {
                            return Err(ParseError {
                                pos,
                                kind: ParseErrorKind::UnexpectedToken(name),
                            })
                        }
                    }
                    let mut args = Vec::new();
                    args.push(self.expr()?);
                    while let Some((_, Tok::Comma)) = self.peek() {
                        self.idx += 1;
                        args.push(self.expr()?);
                    }
                    match self.bump() {
                        Some((_, Tok::RParen)) => {}
                        _ => return Err(self.err_here(ParseErrorKind::UnexpectedEnd)),
                    }
                    if args.len() != func.arity() {
                        return Err(ParseError {
                            pos,
                            kind: ParseErrorKind::WrongArity {
                                name: func.name(),
                                expected: func.arity(),
                                got: args.len(),
                            },
                        });
                    }
                    Ok(Ast::Call(func, args))
                } else if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    Ok(Ast::Var(i))
                } else {
                    Err(ParseError {
                        pos,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    })
                }
            }
            Tok::LParen => {
                let inner = self.expr()?;
                match self.bump() {
                    Some((_, Tok::RParen)) => Ok(inner),
                    Some((p, t)) => Err(ParseError {
                        pos: *p,
                        kind: ParseErrorKind::UnexpectedToken(token_text(t)),
                    }),
                    None => Err(self.err_here(ParseErrorKind::UnexpectedEnd)),
                }
            }
            other => Err(ParseError {
                pos,
                kind: ParseErrorKind::UnexpectedToken(token_text(&other)),
            }),
        }
    }
}

fn token_text(t: &Tok) -> String {
    match t {
        Tok::Num(v) => alloc::format!("{v:?}"),
        Tok::Ident(s) => s.clone(),
        Tok::Op(c) => c.to_string(),
        Tok::LParen => "(".to_string(),
        Tok::RParen => ")".to_string(),
        Tok::Comma => ",".to_string(),
    }
}

// ---------------------------------------------------------------------------
// Public expression types
// ---------------------------------------------------------------------------

/// A parsed scalar expression over a fixed list of variable names.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    vars: Vec<String>,
    ast: Ast,
}

impl Expr {
    /// Parse `source` with the allowed variable names `vars`.
    pub fn parse(source: &str, vars: &[&str]) -> Result<Expr, ParseError> {
        if source.trim().is_empty() {
            return Err(ParseError {
                pos: 0,
                kind: ParseErrorKind::Empty,
            });
        }
        let toks = tokenize(source)?;
        let mut p = Parser {
            toks: &toks,
            idx: 0,
            vars,
            src_len: source.len(),
        };
        let ast = p.expr()?;
        if let Some((pos, t)) = p.peek() {
            return Err(ParseError {
                pos: *pos,
                kind: ParseErrorKind::UnexpectedToken(token_text(t)),
            });
        }
        Ok(Expr {
            source: source.to_string(),
            vars: vars.iter().map(|v| v.to_string()).collect(),
            ast,
        })
    }

    /// The original source text.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// The variable names, in environment order.
    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|s| s.as_str())
    }

    /// Evaluate with `env[i]` bound to the i-th variable name.
    pub fn eval(&self, env: &[f64]) -> Result<f64, EvalError> {
        debug_assert_eq!(env.len(), self.vars.len());
        eval_ast(&self.ast, env)
    }
}

impl fmt::Display for Expr {
    /// Prints a fully parenthesized form that reparses to an identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print_ast(&self.ast, &self.vars, f)
    }
}

fn eval_ast(ast: &Ast, env: &[f64]) -> Result<f64, EvalError> {
    let check = |v: f64, op: &'static str| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError { op })
        }
    };
    match ast {
        Ast::Num(v) => Ok(*v),
        Ast::Var(i) => Ok(env[*i]),
        Ast::Bin(op, a, b) => {
            let x = eval_ast(a, env)?;
            let y = eval_ast(b, env)?;
            match op {
                BinOp::Add => check(x + y, "+"),
                BinOp::Sub => check(x - y, "-"),
                BinOp::Mul => check(x * y, "*"),
                BinOp::Div => check(x / y, "/"),
                BinOp::Pow => check(math::pow(x, y), "^"),
            }
        }
        Ast::Call(func, args) => {
            let a = eval_ast(&args[0], env)?;
            match func {
                Func::Floor => Ok(math::floor(a)),
                Func::Abs => Ok(math::abs(a)),
                Func::Sqrt => check(math::sqrt(a), "sqrt"),
                Func::Exp => check(math::exp(a), "exp"),
                Func::Log => check(math::ln(a), "log"),
                Func::Min => {
                    let b = eval_ast(&args[1], env)?;
                    Ok(math::min(a, b))
                }
                Func::Max => {
                    let b = eval_ast(&args[1], env)?;
                    Ok(math::max(a, b))
                }
            }
        }
    }
}

fn print_ast(ast: &Ast, vars: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match ast {
        Ast::Num(v) => {
            // The grammar has no unary minus; negative constants round-trip
            // through an explicit subtraction.
            if v.is_sign_negative() && *v != 0.0 {
                write!(f, "(0 - {:?})", -v)
            } else {
                write!(f, "{:?}", v)
            }
        }
        Ast::Var(i) => write!(f, "{}", vars[*i]),
        Ast::Bin(op, a, b) => {
            write!(f, "(")?;
            print_ast(a, vars, f)?;
            write!(f, " {} ", op.symbol())?;
            print_ast(b, vars, f)?;
            write!(f, ")")
        }
        Ast::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                print_ast(a, vars, f)?;
            }
            write!(f, ")")
        }
    }
}

/// A coefficient function of the single variable `x`, such as `p(x)` or `q(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientExpr(Expr);

impl CoefficientExpr {
    pub fn parse(source: &str) -> Result<CoefficientExpr, ParseError> {
        Ok(CoefficientExpr(Expr::parse(source, &["x"])?))
    }

    /// A constant coefficient (no parsing involved).
    pub fn constant(value: f64) -> CoefficientExpr {
        CoefficientExpr(Expr {
            source: alloc::format!("{value:?}"),
            vars: alloc::vec![String::from("x")],
            ast: Ast::Num(value),
        })
    }

    pub fn source(&self) -> &str {
        self.0.source()
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.0.eval(&[x])
    }

    /// Pointwise evaluation, reporting the grid index of any domain error.
    pub fn eval_on_grid(&self, grid: &[f64]) -> Result<Vec<f64>, GridEvalError> {
        let mut out = Vec::with_capacity(grid.len());
        for (i, &x) in grid.iter().enumerate() {
            out.push(self.eval(x).map_err(|error| GridEvalError { index: i, error })?);
        }
        Ok(out)
    }
}

impl fmt::Display for CoefficientExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn p(src: &str) -> CoefficientExpr {
        CoefficientExpr::parse(src).unwrap()
    }

    #[test]
    fn polynomial_at_point() {
        assert_eq!(p("1 + x^3").eval(6.0).unwrap(), 217.0);
    }

    #[test]
    fn identity() {
        assert_eq!(p("x").eval(3.7).unwrap(), 3.7);
    }

    #[test]
    fn integer_part() {
        assert_eq!(p("floor(x)").eval(5.999).unwrap(), 5.0);
    }

    #[test]
    fn grid_evaluation() {
        let g = [2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(p("floor(x)").eval_on_grid(&g).unwrap(), vec![2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(p("1+x^3").eval_on_grid(&[2.0, 6.0]).unwrap(), vec![9.0, 217.0]);
        assert_eq!(p("0").eval_on_grid(&g).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(p("2 + 3 * 4").eval(0.0).unwrap(), 14.0);
        assert_eq!(p("2 * 3 ^ 2").eval(0.0).unwrap(), 18.0);
        // right-associative power: 2^(3^2)
        assert_eq!(p("2 ^ 3 ^ 2").eval(0.0).unwrap(), 512.0);
        assert_eq!(p("10 - 2 - 3").eval(0.0).unwrap(), 5.0);
    }

    #[test]
    fn functions() {
        assert_eq!(p("min(x, 3)").eval(5.0).unwrap(), 3.0);
        assert_eq!(p("max(x, 3)").eval(5.0).unwrap(), 5.0);
        assert_eq!(p("abs(2 - x)").eval(5.0).unwrap(), 3.0);
        assert_eq!(p("sqrt(x)").eval(9.0).unwrap(), 3.0);
    }

    #[test]
    fn syntax_error_carries_position() {
        let e = CoefficientExpr::parse("1 + $").unwrap_err();
        assert_eq!(e.pos, 4);
        assert!(matches!(e.kind, ParseErrorKind::UnexpectedChar('$')));
    }

    #[test]
    fn unknown_identifier_rejected() {
        let e = CoefficientExpr::parse("1 + y").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnknownIdentifier(ref n) if n == "y"));
        assert_eq!(e.pos, 4);
    }

    #[test]
    fn wrong_arity_rejected() {
        let e = CoefficientExpr::parse("min(x)").unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::WrongArity { expected: 2, got: 1, .. }
        ));
        let e = CoefficientExpr::parse("sqrt(x, 1)").unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::WrongArity { expected: 1, got: 2, .. }
        ));
    }

    #[test]
    fn empty_source_rejected() {
        assert!(matches!(
            CoefficientExpr::parse("   ").unwrap_err().kind,
            ParseErrorKind::Empty
        ));
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(CoefficientExpr::parse("1 + 2 2").is_err());
        assert!(CoefficientExpr::parse("(1 + 2").is_err());
    }

    #[test]
    fn domain_error_at_grid_index() {
        let e = p("sqrt(1 - x)");
        let err = e.eval_on_grid(&[0.0, 1.0, 2.0]).unwrap_err();
        assert_eq!(err.index, 2);
        assert_eq!(err.error.op, "sqrt");
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        assert!(p("1 / (x - x)").eval(1.0).is_err());
        assert!(p("log(x)").eval(0.0).is_err());
    }

    #[test]
    fn print_reparses_identically() {
        for src in [
            "1 + x^3",
            "floor(x) * (x - 2) / max(x, 1.5)",
            "sqrt(abs(1 - x)) + exp(x / 10) - log(x + 1)",
            "2 ^ x ^ 2",
        ] {
            let e = p(src);
            let printed = format!("{e}");
            let re = CoefficientExpr::parse(&printed).unwrap();
            for i in 0..40 {
                let x = 0.1 + 0.37 * i as f64;
                let a = e.eval(x).unwrap();
                let b = re.eval(x).unwrap();
                assert!(
                    (a - b).abs() <= 1e-12 * (1.0 + a.abs()),
                    "round-trip mismatch on {src} at x={x}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn constant_roundtrip() {
        let c = CoefficientExpr::constant(2.25);
        assert_eq!(c.eval(123.0).unwrap(), 2.25);
        let re = CoefficientExpr::parse(&format!("{c}")).unwrap();
        assert_eq!(re.eval(0.0).unwrap(), 2.25);
    }

    #[test]
    fn multi_variable_expressions() {
        let e = Expr::parse("y - 0.5 * mean", &["y", "mean"]).unwrap();
        assert_eq!(e.eval(&[4.0, 6.0]).unwrap(), 1.0);
    }
}
