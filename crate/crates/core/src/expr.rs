//! Arithmetic expressions used to describe `f`, `f'`, antiderivatives and `eta` maps as text.
//!
//! Precedence, loosest first: `or`, `and`, comparisons (`< <= > >= ==`, non-associative),
//! `+ -`, `* /`, unary minus, `^` (right-associative), calls and atoms. Supported calls are
//! `sin cos exp log abs sqrt` and `if(cond, then, else)`; `pi` is a built-in constant.
//! Conditions and numbers are distinct types: a condition can only appear as the first
//! argument of `if` or as an operand of `and`/`or`.
//!
//! Only the taken branch of an `if` is evaluated, so `if(x > 0, log(x), 0)` is total.

use std::fmt;

use thiserror::Error;

use crate::property::{Property, PropertyReport, Witness, WorstTracker};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("parse error at offset {position}: {message}")]
pub struct ParseError {
    /// Character offset into the source, at most `source.chars().count()`.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {function} of {input} in `{expr}`")]
    Domain { function: &'static str, expr: String, input: f64 },
    #[error("expected {expected} variable values, got {got}")]
    Arity { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Abs,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl CmpOp {
    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
    If(Box<Cond>, Box<Node>, Box<Node>),
}

#[derive(Debug, Clone, PartialEq)]
enum Cond {
    Cmp(CmpOp, Node, Node),
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
}

/// A parsed numeric expression together with its declared variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
    vars: Vec<String>,
    source: String,
}

impl Expr {
    /// Parses `source` over the given variable names. Values are later bound positionally
    /// in the same order.
    pub fn parse(source: &str, variables: &[&str]) -> Result<Expr, ParseError> {
        let tokens = lex(source)?;
        let end = source.chars().count();
        let mut p = Parser { tokens, idx: 0, vars: variables, end };
        if p.tokens.is_empty() {
            return Err(ParseError { position: 0, message: "empty expression".into() });
        }
        let parsed = p.parse_or()?;
        if let Some(tok) = p.peek() {
            return Err(ParseError { position: tok.pos, message: format!("unexpected `{}`", tok.kind) });
        }
        let root = parsed.into_num()?;
        Ok(Expr { root, vars: variables.iter().map(|s| s.to_string()).collect(), source: source.to_string() })
    }

    pub fn variables(&self) -> &[String] {
        &self.vars
    }

    /// The text this expression was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        if values.len() != self.vars.len() {
            return Err(EvalError::Arity { expected: self.vars.len(), got: values.len() });
        }
        self.eval_node(&self.root, values)
    }

    /// Fully parenthesised rendering that reparses to an identical tree.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        write_node(&mut s, &self.root, &self.vars);
        s
    }

    fn eval_node(&self, node: &Node, values: &[f64]) -> Result<f64, EvalError> {
        Ok(match node {
            Node::Num(x) => *x,
            Node::Var(i) => values[*i],
            Node::Neg(a) => -self.eval_node(a, values)?,
            Node::Bin(op, a, b) => {
                let (x, y) = (self.eval_node(a, values)?, self.eval_node(b, values)?);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => pow(x, y),
                }
            }
            Node::Call(func, a) => {
                let x = self.eval_node(a, values)?;
                let domain_err = || {
                    let mut expr = String::new();
                    write_node(&mut expr, node, &self.vars);
                    EvalError::Domain { function: func.name(), expr, input: x }
                };
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Abs => x.abs(),
                    Func::Log if x <= 0.0 => return Err(domain_err()),
                    Func::Log => x.ln(),
                    Func::Sqrt if x < 0.0 => return Err(domain_err()),
                    Func::Sqrt => x.sqrt(),
                }
            }
            Node::If(c, a, b) => {
                if self.eval_cond(c, values)? {
                    self.eval_node(a, values)?
                } else {
                    self.eval_node(b, values)?
                }
            }
        })
    }

    fn eval_cond(&self, cond: &Cond, values: &[f64]) -> Result<bool, EvalError> {
        Ok(match cond {
            Cond::Cmp(op, a, b) => {
                let (x, y) = (self.eval_node(a, values)?, self.eval_node(b, values)?);
                match op {
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                    CmpOp::Eq => x == y,
                }
            }
            Cond::And(a, b) => self.eval_cond(a, values)? && self.eval_cond(b, values)?,
            Cond::Or(a, b) => self.eval_cond(a, values)? || self.eval_cond(b, values)?,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical())
    }
}

// Integer exponents go through powi so that e.g. (-2)^3 is -8 rather than NaN.
fn pow(x: f64, y: f64) -> f64 {
    if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
        x.powi(y as i32)
    } else {
        x.powf(y)
    }
}

fn write_node(out: &mut String, node: &Node, vars: &[String]) {
    match node {
        Node::Num(x) => out.push_str(&format!("{x:?}")),
        Node::Var(i) => out.push_str(&vars[*i]),
        Node::Neg(a) => {
            out.push_str("(-");
            write_node(out, a, vars);
            out.push(')');
        }
        Node::Bin(op, a, b) => {
            out.push('(');
            write_node(out, a, vars);
            out.push_str(match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
                BinOp::Pow => " ^ ",
            });
            write_node(out, b, vars);
            out.push(')');
        }
        Node::Call(func, a) => {
            out.push_str(func.name());
            out.push('(');
            write_node(out, a, vars);
            out.push(')');
        }
        Node::If(c, a, b) => {
            out.push_str("if(");
            write_cond(out, c, vars);
            out.push_str(", ");
            write_node(out, a, vars);
            out.push_str(", ");
            write_node(out, b, vars);
            out.push(')');
        }
    }
}

fn write_cond(out: &mut String, cond: &Cond, vars: &[String]) {
    out.push('(');
    match cond {
        Cond::Cmp(op, a, b) => {
            write_node(out, a, vars);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_node(out, b, vars);
        }
        Cond::And(a, b) | Cond::Or(a, b) => {
            write_cond(out, a, vars);
            out.push_str(if matches!(cond, Cond::And(..)) { " and " } else { " or " });
            write_cond(out, b, vars);
        }
    }
    out.push(')');
}

#[derive(Debug, Clone, PartialEq)]
enum TokKind {
    Num(f64),
    Ident(String),
    Sym(&'static str),
}

impl fmt::Display for TokKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokKind::Num(x) => write!(f, "{x}"),
            TokKind::Ident(s) => f.write_str(s),
            TokKind::Sym(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    pos: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value =
                text.parse::<f64>().map_err(|_| ParseError { position: start, message: format!("malformed number `{text}`") })?;
            tokens.push(Token { kind: TokKind::Num(value), pos: start });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            tokens.push(Token { kind: TokKind::Ident(chars[start..i].iter().collect()), pos: start });
            continue;
        }
        let next = chars.get(i + 1).copied();
        let sym = match (c, next) {
            ('<', Some('=')) => "<=",
            ('>', Some('=')) => ">=",
            ('=', Some('=')) => "==",
            ('<', _) => "<",
            ('>', _) => ">",
            ('+', _) => "+",
            ('-', _) => "-",
            ('*', _) => "*",
            ('/', _) => "/",
            ('^', _) => "^",
            ('(', _) => "(",
            (')', _) => ")",
            (',', _) => ",",
            _ => return Err(ParseError { position: start, message: format!("unexpected character `{c}`") }),
        };
        i += sym.len();
        tokens.push(Token { kind: TokKind::Sym(sym), pos: start });
    }
    Ok(tokens)
}

enum Parsed {
    Num(Node, usize),
    Bool(Cond, usize),
}

impl Parsed {
    fn into_num(self) -> Result<Node, ParseError> {
        match self {
            Parsed::Num(n, _) => Ok(n),
            Parsed::Bool(_, pos) => Err(ParseError { position: pos, message: "expected a number, found a condition".into() }),
        }
    }

    fn into_bool(self) -> Result<Cond, ParseError> {
        match self {
            Parsed::Bool(c, _) => Ok(c),
            Parsed::Num(_, pos) => Err(ParseError { position: pos, message: "expected a condition, found a number".into() }),
        }
    }

    fn pos(&self) -> usize {
        match self {
            Parsed::Num(_, p) | Parsed::Bool(_, p) => *p,
        }
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    idx: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.idx)
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |t| t.pos)
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Some(Token { kind: TokKind::Sym(s), .. }) if *s == sym) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn eat_keyword(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Token { kind: TokKind::Ident(s), .. }) if s == word) {
            self.idx += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |t| format!("`{}`", t.kind));
            Err(ParseError { position: self.pos(), message: format!("expected `{sym}`, found {found}") })
        }
    }

    fn parse_or(&mut self) -> Result<Parsed, ParseError> {
        let mut left = self.parse_and()?;
        while self.eat_keyword("or") {
            let pos = left.pos();
            let l = left.into_bool()?;
            let r = self.parse_and()?.into_bool()?;
            left = Parsed::Bool(Cond::Or(Box::new(l), Box::new(r)), pos);
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<Parsed, ParseError> {
        let mut left = self.parse_cmp()?;
        while self.eat_keyword("and") {
            let pos = left.pos();
            let l = left.into_bool()?;
            let r = self.parse_cmp()?.into_bool()?;
            left = Parsed::Bool(Cond::And(Box::new(l), Box::new(r)), pos);
        }
        Ok(left)
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        match self.peek() {
            Some(Token { kind: TokKind::Sym(s), .. }) => match *s {
                "<" => Some(CmpOp::Lt),
                "<=" => Some(CmpOp::Le),
                ">" => Some(CmpOp::Gt),
                ">=" => Some(CmpOp::Ge),
                "==" => Some(CmpOp::Eq),
                _ => None,
            },
            _ => None,
        }
    }

    fn parse_cmp(&mut self) -> Result<Parsed, ParseError> {
        let left = self.parse_add()?;
        let Some(op) = self.cmp_op() else { return Ok(left) };
        self.idx += 1;
        let pos = left.pos();
        let l = left.into_num()?;
        let r = self.parse_add()?.into_num()?;
        if self.cmp_op().is_some() {
            return Err(ParseError { position: self.pos(), message: "comparisons cannot be chained".into() });
        }
        Ok(Parsed::Bool(Cond::Cmp(op, l, r), pos))
    }

    fn parse_add(&mut self) -> Result<Parsed, ParseError> {
        let mut left = self.parse_mul()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Add
            } else if self.eat_sym("-") {
                BinOp::Sub
            } else {
                return Ok(left);
            };
            let pos = left.pos();
            let l = left.into_num()?;
            let r = self.parse_mul()?.into_num()?;
            left = Parsed::Num(Node::Bin(op, Box::new(l), Box::new(r)), pos);
        }
    }

    fn parse_mul(&mut self) -> Result<Parsed, ParseError> {
        let mut left = self.parse_unary()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Mul
            } else if self.eat_sym("/") {
                BinOp::Div
            } else {
                return Ok(left);
            };
            let pos = left.pos();
            let l = left.into_num()?;
            let r = self.parse_unary()?.into_num()?;
            left = Parsed::Num(Node::Bin(op, Box::new(l), Box::new(r)), pos);
        }
    }

    fn parse_unary(&mut self) -> Result<Parsed, ParseError> {
        let pos = self.pos();
        if self.eat_sym("-") {
            let inner = self.parse_unary()?.into_num()?;
            return Ok(Parsed::Num(Node::Neg(Box::new(inner)), pos));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Parsed, ParseError> {
        let base = self.parse_atom()?;
        if self.eat_sym("^") {
            let pos = base.pos();
            let b = base.into_num()?;
            // Exponent binds through unary minus and recurses, giving right associativity.
            let e = self.parse_unary()?.into_num()?;
            return Ok(Parsed::Num(Node::Bin(BinOp::Pow, Box::new(b), Box::new(e)), pos));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Parsed, ParseError> {
        let pos = self.pos();
        let Some(tok) = self.peek().cloned() else {
            return Err(ParseError { position: pos, message: "unexpected end of input".into() });
        };
        match tok.kind {
            TokKind::Num(x) => {
                self.idx += 1;
                Ok(Parsed::Num(Node::Num(x), pos))
            }
            TokKind::Sym("(") => {
                self.idx += 1;
                let inner = self.parse_or()?;
                self.expect_sym(")")?;
                Ok(match inner {
                    Parsed::Num(n, _) => Parsed::Num(n, pos),
                    Parsed::Bool(c, _) => Parsed::Bool(c, pos),
                })
            }
            TokKind::Ident(name) => {
                self.idx += 1;
                if self.eat_sym("(") {
                    return self.parse_call(&name, pos);
                }
                if let Some(i) = self.vars.iter().position(|v| *v == name) {
                    Ok(Parsed::Num(Node::Var(i), pos))
                } else if name == "pi" {
                    Ok(Parsed::Num(Node::Num(std::f64::consts::PI), pos))
                } else {
                    Err(ParseError { position: pos, message: format!("unknown variable `{name}`") })
                }
            }
            TokKind::Sym(s) => Err(ParseError { position: pos, message: format!("unexpected `{s}`") }),
        }
    }

    fn parse_call(&mut self, name: &str, pos: usize) -> Result<Parsed, ParseError> {
        let mut args = Vec::new();
        if !self.eat_sym(")") {
            loop {
                args.push(self.parse_or()?);
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        let arity_err = |expected: usize, got: usize| ParseError {
            position: pos,
            message: format!("`{name}` takes {expected} argument(s), got {got}"),
        };
        if name == "if" {
            if args.len() != 3 {
                return Err(arity_err(3, args.len()));
            }
            let mut it = args.into_iter();
            let c = it.next().unwrap().into_bool()?;
            let a = it.next().unwrap().into_num()?;
            let b = it.next().unwrap().into_num()?;
            return Ok(Parsed::Num(Node::If(Box::new(c), Box::new(a), Box::new(b)), pos));
        }
        let Some(func) = Func::from_name(name) else {
            return Err(ParseError { position: pos, message: format!("unknown function `{name}`") });
        };
        if args.len() != 1 {
            return Err(arity_err(1, args.len()));
        }
        let arg = args.pop().unwrap().into_num()?;
        Ok(Parsed::Num(Node::Call(func, Box::new(arg)), pos))
    }
}

/// Step used for the central difference at `x`.
pub fn fd_step(x: f64) -> f64 {
    1e-6_f64.max(1e-6 * x.abs())
}

pub const DERIVATIVE_REL_TOL: f64 = 1e-4;

/// Compares `df` against central differences of `f` at the interior nodes of an
/// `points`-node uniform grid on `[lo, hi]`. Mismatch is `|df - fd| / max(|fd|, 1)`.
pub fn check_derivative(f: &Expr, df: &Expr, lo: f64, hi: f64, points: usize) -> Result<PropertyReport, EvalError> {
    assert!(lo < hi && points >= 3, "check_derivative needs lo < hi and at least 3 points");
    let mut worst = WorstTracker::new();
    let step = (hi - lo) / (points - 1) as f64;
    for i in 1..points - 1 {
        let x = lo + step * i as f64;
        let h = fd_step(x);
        let fd = (f.eval(&[x + h])? - f.eval(&[x - h])?) / (2.0 * h);
        let d = df.eval(&[x])?;
        let mismatch = (d - fd).abs() / fd.abs().max(1.0);
        worst.record(if mismatch.is_nan() { f64::INFINITY } else { mismatch }, Witness::Point { x });
    }
    Ok(worst.finish(Property::Derivative, None, DERIVATIVE_REL_TOL))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::property::Verdict;

    fn ev(src: &str, x: f64) -> f64 {
        Expr::parse(src, &["x"]).unwrap().eval(&[x]).unwrap()
    }

    #[test]
    fn precedence_golden_suite() {
        let cases: &[(&str, f64, f64)] = &[
            ("2+3*4^2", 0.0, 50.0),
            ("2^3^2", 0.0, 512.0),
            ("-2^2", 0.0, -4.0),
            ("(-2)^2", 0.0, 4.0),
            ("2^-1", 0.0, 0.5),
            ("10-4-3", 0.0, 3.0),
            ("16/4/2", 0.0, 2.0),
            ("2*3+4*5", 0.0, 26.0),
            ("2*(3+4)*5", 0.0, 70.0),
            ("--3", 0.0, 3.0),
            ("-x^2", 3.0, -9.0),
            ("x^2", 0.5, 0.25),
            ("abs(x)", -3.0, 3.0),
            ("1 - 2 * 3 ^ 2 / 6", 0.0, -2.0),
            ("sqrt(16) + log(1)", 0.0, 4.0),
            ("exp(0) * cos(0) + sin(0)", 0.0, 1.0),
            ("if(x < 1, 10, 20)", 0.5, 10.0),
            ("if(x < 1, 10, 20)", 1.0, 20.0),
            ("if(x <= 1, 10, 20)", 1.0, 10.0),
            ("if(x > 0 and x < 2 or x == -5, 1, 0)", -5.0, 1.0),
            ("if(x > 0 and (x < 2 or x == -5), 1, 0)", -5.0, 0.0),
            ("if(x >= 3, x, -x) * 2", 4.0, 8.0),
            ("(-2)^3", 0.0, -8.0),
            ("1.5e1 + .5", 0.0, 15.5),
            ("x*x*x - 3*x", 2.0, 2.0),
        ];
        assert!(cases.len() >= 20);
        for &(src, x, want) in cases {
            assert_eq!(ev(src, x), want, "{src} at {x}");
        }
    }

    #[test]
    fn exp_one() {
        assert!((ev("exp(1)", 0.0) - std::f64::consts::E).abs() <= 1e-15);
    }

    #[test]
    fn piecewise_eta_expression() {
        let e = Expr::parse("if(v<=0 and u<=0, v-u, u-v)", &["v", "u"]).unwrap();
        assert_eq!(e.eval(&[-1.0, -2.0]).unwrap(), 1.0);
        assert_eq!(e.eval(&[1.0, -1.0]).unwrap(), -2.0);
    }

    #[test]
    fn incomplete_expression_position() {
        let err = Expr::parse("2*", &["x"]).unwrap_err();
        assert_eq!(err.position, 2);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(Expr::parse("y+1", &["x"]).unwrap_err().position, 0);
        assert_eq!(Expr::parse("x + foo(1)", &["x"]).unwrap_err().position, 4);
        assert!(Expr::parse("sin(1, 2)", &["x"]).unwrap_err().message.contains("argument"));
        assert!(Expr::parse("if(1, 2, 3)", &["x"]).is_err());
        assert!(Expr::parse("x < 1", &["x"]).is_err());
        assert!(Expr::parse("1 < x < 2", &["x"]).is_err());
        assert!(Expr::parse("(x", &["x"]).is_err());
        assert!(Expr::parse("x $ 2", &["x"]).is_err());
        assert!(Expr::parse("   ", &["x"]).is_err());
        let err = Expr::parse("x + ", &["x"]).unwrap_err();
        assert!(err.position <= 4);
    }

    #[test]
    fn domain_errors() {
        let e = Expr::parse("1 + log(x)", &["x"]).unwrap();
        match e.eval(&[-1.0]) {
            Err(EvalError::Domain { function, input, expr }) => {
                assert_eq!(function, "log");
                assert_eq!(input, -1.0);
                assert_eq!(expr, "log(x)");
            }
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("sqrt(x)", &["x"]).unwrap().eval(&[-0.1]).is_err());
        assert!(Expr::parse("log(x)", &["x"]).unwrap().eval(&[0.0]).is_err());
    }

    #[test]
    fn untaken_branch_is_not_evaluated() {
        assert_eq!(ev("if(x>0, log(x), 0)", -1.0), 0.0);
    }

    #[test]
    fn canonical_form_reparses() {
        let e = Expr::parse("-x^2 + if(x <= 0 or x > 1, 2*x, 1/3)", &["x"]).unwrap();
        let again = Expr::parse(&e.to_canonical(), &["x"]).unwrap();
        assert_eq!(e.root, again.root);
    }

    #[test]
    fn derivative_gate() {
        let p = |s: &str| Expr::parse(s, &["x"]).unwrap();
        assert!(check_derivative(&p("x^2"), &p("2*x"), 0.0, 1.0, 11).unwrap().passed());
        assert!(check_derivative(&p("exp(x)"), &p("exp(x)"), 0.0, 1.0, 11).unwrap().passed());
        let bad = check_derivative(&p("x^2"), &p("x"), 0.0, 1.0, 11).unwrap();
        assert_eq!(bad.verdict, Verdict::Violated);
        let Some(Witness::Point { x }) = bad.witness else { panic!() };
        // finite-difference oracle at the witness: relative gap between x and 2x
        let h = fd_step(x);
        let fd = ((x + h).powi(2) - (x - h).powi(2)) / (2.0 * h);
        assert!((x - fd).abs() / fd.abs().max(1.0) > 1e-4);
        assert_eq!(bad.samples, 9);
    }

    #[test]
    fn derivative_gate_propagates_domain_error() {
        let p = |s: &str| Expr::parse(s, &["x"]).unwrap();
        assert!(check_derivative(&p("log(x)"), &p("1/x"), -1.0, 1.0, 5).is_err());
    }
}
