//! A small expression language for conformal factors and weight functions.
//!
//! Identifiers: `z`, `zbar`, `w`, `wbar`, `r2` and the imaginary unit `i`.
//! Functions: `sqrt`, `exp`, `log`, `conj`, `abs2`. Operators `+ - * /` with
//! the usual precedence, unary minus, and `^` with an integer exponent only
//! (`x^3`, `x^-2`, `x^(-2)`). Numbers may carry an `i` suffix (`2.5i`).
//!
//! `r2` is not a free variable: at evaluation time it expands to
//! `λ(z)·w·wbar` through the chart, so radial weights pick up their `z` and
//! `w` derivatives automatically.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{self, seed_variables, Jet2, Point4, Scalar, C64, I};
use crate::surface::ConformalChart;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Z,
    Zbar,
    W,
    Wbar,
    R2,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::Z => "z",
            Var::Zbar => "zbar",
            Var::W => "w",
            Var::Wbar => "wbar",
            Var::R2 => "r2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Conj,
    Abs2,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Conj => "conj",
            Func::Abs2 => "abs2",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "conj" => Func::Conj,
            "abs2" => Func::Abs2,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Lit(C64),
    Var(Var),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

/// Which of the paper's function classes an expression belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DependenceClass {
    Constant,
    BaseOnly,
    Radial,
    Mixed,
}

impl DependenceClass {
    /// Constants belong to both the base-only and the radial class.
    pub fn is_base_only(self) -> bool {
        matches!(self, DependenceClass::Constant | DependenceClass::BaseOnly)
    }

    pub fn is_radial(self) -> bool {
        matches!(self, DependenceClass::Constant | DependenceClass::Radial)
    }

    /// Whether an expression of class `self` may be declared as `declared`.
    pub fn fits(self, declared: DependenceClass) -> bool {
        match declared {
            DependenceClass::Constant => self == DependenceClass::Constant,
            DependenceClass::BaseOnly => self.is_base_only(),
            DependenceClass::Radial => self.is_radial(),
            DependenceClass::Mixed => true,
        }
    }
}

/// Values bound to the identifiers during evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Env<S> {
    pub z: Option<S>,
    pub zbar: Option<S>,
    pub w: Option<S>,
    pub wbar: Option<S>,
    pub r2: Option<S>,
}

impl<S: Scalar> Env<S> {
    pub fn empty() -> Self {
        Env {
            z: None,
            zbar: None,
            w: None,
            wbar: None,
            r2: None,
        }
    }

    /// Only `r2` bound; used to evaluate radial functions of one variable.
    pub fn radial(r2: S) -> Self {
        Env {
            r2: Some(r2),
            ..Env::empty()
        }
    }

    fn get(&self, v: Var) -> Result<S> {
        let slot = match v {
            Var::Z => self.z,
            Var::Zbar => self.zbar,
            Var::W => self.w,
            Var::Wbar => self.wbar,
            Var::R2 => self.r2,
        };
        slot.ok_or_else(|| Error::Invalid(format!("identifier `{}` is not bound here", v.name())))
    }
}

impl<S: Scalar> Env<S> {
    /// Binds `z, zbar, w, wbar` from the real coordinate variables.
    pub fn from_real([x, y, s, t]: [S; 4]) -> Self {
        Env {
            z: Some(x + y.scale(I)),
            zbar: Some(x - y.scale(I)),
            w: Some(s + t.scale(I)),
            wbar: Some(s - t.scale(I)),
            r2: None,
        }
    }
}

impl Env<C64> {
    pub fn values(p: Point4, lambda: Option<C64>) -> Self {
        Env {
            z: Some(p.z),
            zbar: Some(p.z.conj()),
            w: Some(p.w),
            wbar: Some(p.w.conj()),
            r2: lambda.map(|l| l * p.w * p.w.conj()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expression {
    source: String,
    ast: Node,
    vars: BTreeSet<Var>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.ast == other.ast
    }
}

impl Expression {
    pub fn parse(source: &str) -> Result<Expression> {
        let tokens = tokenize(source)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            len: source.len(),
        };
        let ast = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(Error::Syntax {
                position: tok.pos,
                message: format!("unexpected {:?}", tok.kind),
            });
        }
        Ok(Expression::from_ast(source.to_string(), ast))
    }

    pub fn from_ast(source: String, ast: Node) -> Expression {
        let mut vars = BTreeSet::new();
        collect_vars(&ast, &mut vars);
        Expression { source, ast, vars }
    }

    pub fn constant(c: C64) -> Expression {
        let ast = Node::Lit(c);
        Expression::from_ast(ast.to_string(), ast)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    pub fn variables(&self) -> &BTreeSet<Var> {
        &self.vars
    }

    pub fn classify(&self) -> DependenceClass {
        classify_vars(&self.vars)
    }

    /// Value if the expression has no identifiers.
    pub fn constant_value(&self) -> Option<C64> {
        if self.vars.is_empty() {
            self.eval_with(&Env::<C64>::empty()).ok()
        } else {
            None
        }
    }

    pub fn eval_with<S: Scalar>(&self, env: &Env<S>) -> Result<S> {
        eval_node(&self.ast, env)
    }

    /// Evaluates at `p` as a [`Jet2`] in `(x, y, s, t)`, expanding `r2`
    /// through the chart's conformal factor.
    pub fn eval(&self, p: Point4, chart: &ConformalChart) -> Result<Jet2> {
        let mut env = Env::from_real(seed_variables(p));
        if self.vars.contains(&Var::R2) {
            let lambda = chart.lambda().eval_with(&env)?;
            env.r2 = Some(lambda * env.w.unwrap() * env.wbar.unwrap());
        }
        self.eval_with(&env)
    }

    /// Plain complex value at `p`.
    pub fn eval_value(&self, p: Point4, chart: &ConformalChart) -> Result<C64> {
        let lambda = if self.vars.contains(&Var::R2) {
            Some(chart.lambda().eval_with(&Env::values(p, None))?)
        } else {
            None
        };
        self.eval_with(&Env::values(p, lambda))
    }

    /// For a radial expression `φ(r²)`, the value and the first two
    /// derivatives with respect to `r²`.
    pub fn radial_derivatives(&self, r2: f64) -> Result<[C64; 3]> {
        if !self.classify().is_radial() {
            return Err(Error::Invalid(format!("`{}` is not radial", self.source)));
        }
        let seed = Jet2::variable(0, C64::new(r2, 0.0));
        let j = self.eval_with(&Env::radial(seed))?;
        Ok([j.value, j.grad[0], j.h(0, 0)])
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ast)
    }
}

fn classify_vars(vars: &BTreeSet<Var>) -> DependenceClass {
    if vars.is_empty() {
        DependenceClass::Constant
    } else if vars.iter().all(|v| matches!(v, Var::Z | Var::Zbar)) {
        DependenceClass::BaseOnly
    } else if vars.iter().all(|v| *v == Var::R2) {
        DependenceClass::Radial
    } else {
        DependenceClass::Mixed
    }
}

fn collect_vars(node: &Node, out: &mut BTreeSet<Var>) {
    match node {
        Node::Lit(_) => {}
        Node::Var(v) => {
            out.insert(*v);
        }
        Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => collect_vars(a, out),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
    }
}

fn eval_node<S: Scalar>(node: &Node, env: &Env<S>) -> Result<S> {
    Ok(match node {
        Node::Lit(c) => S::constant(*c),
        Node::Var(v) => env.get(*v)?,
        Node::Neg(a) => -eval_node(a, env)?,
        Node::Add(a, b) => eval_node(a, env)? + eval_node(b, env)?,
        Node::Sub(a, b) => eval_node(a, env)? - eval_node(b, env)?,
        Node::Mul(a, b) => eval_node(a, env)? * eval_node(b, env)?,
        Node::Div(a, b) => {
            let num = eval_node(a, env)?;
            let den = eval_node(b, env)?;
            jets::div(num, den).map_err(|_| Error::Pole(b.to_string()))?
        }
        Node::Pow(a, n) => {
            jets::powi(eval_node(a, env)?, *n).map_err(|_| Error::Pole(node.to_string()))?
        }
        Node::Call(func, a) => {
            let u = eval_node(a, env)?;
            match func {
                Func::Sqrt => jets::sqrt(u)?,
                Func::Exp => jets::exp(u),
                Func::Log => jets::ln(u)?,
                Func::Conj => u.conj(),
                Func::Abs2 => jets::abs2(u),
            }
        }
    })
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Lit(c) => {
                if c.im == 0.0 && c.re >= 0.0 && c.re.is_sign_positive() {
                    write!(f, "{}", c.re)
                } else if c.re == 0.0 && c.re.is_sign_positive() && c.im >= 0.0 {
                    write!(f, "{}i", c.im)
                } else {
                    write!(f, "(({})+({})*i)", c.re, c.im)
                }
            }
            Node::Var(v) => write!(f, "{}", v.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Pow(a, n) => {
                if *n < 0 {
                    write!(f, "({a})^({n})")
                } else {
                    write!(f, "({a})^{n}")
                }
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

// ---------------------------------------------------------------------------
// Tokenizer and precedence-climbing parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Imaginary(f64),
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
    kind: TokenKind,
    pos: usize,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '*' => TokenKind::Star,
            '/' => TokenKind::Slash,
            '^' => TokenKind::Caret,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            d if d.is_ascii_digit() || d == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| Error::Syntax {
                    position: start,
                    message: format!("malformed number `{text}`"),
                })?;
                let imaginary = i < bytes.len()
                    && bytes[i] == b'i'
                    && !bytes
                        .get(i + 1)
                        .is_some_and(|b| b.is_ascii_alphanumeric() || *b == b'_');
                if imaginary {
                    i += 1;
                    out.push(Token {
                        kind: TokenKind::Imaginary(value),
                        pos: start,
                    });
                } else {
                    out.push(Token {
                        kind: TokenKind::Number(value),
                        pos: start,
                    });
                }
                continue;
            }
            a if a.is_ascii_alphabetic() || a == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    kind: TokenKind::Ident(src[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            other => {
                return Err(Error::Syntax {
                    position: start,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        out.push(Token { kind, pos: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    len: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn here(&self) -> usize {
        self.peek().map_or(self.len, |t| t.pos)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek().is_some_and(|t| &t.kind == kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: &TokenKind) -> Result<()> {
        if self.eat(kind) {
            Ok(())
        } else {
            Err(Error::Syntax {
                position: self.here(),
                message: format!("expected {kind:?}"),
            })
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&TokenKind::Plus) {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&TokenKind::Minus) {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&TokenKind::Star) {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&TokenKind::Slash) {
                lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(&TokenKind::Minus) {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&TokenKind::Plus) {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if !self.eat(&TokenKind::Caret) {
            return Ok(base);
        }
        let n = self.exponent()?;
        if self.peek().is_some_and(|t| t.kind == TokenKind::Caret) {
            return Err(Error::Syntax {
                position: self.here(),
                message: "chained exponents are not supported; parenthesize".into(),
            });
        }
        Ok(Node::Pow(Box::new(base), n))
    }

    fn exponent(&mut self) -> Result<i32> {
        let paren = self.eat(&TokenKind::LParen);
        let negative = if self.eat(&TokenKind::Minus) {
            true
        } else {
            self.eat(&TokenKind::Plus);
            false
        };
        let position = self.here();
        let n = match self.next().map(|t| t.kind.clone()) {
            Some(TokenKind::Number(v)) if v.fract() == 0.0 && v.abs() <= 1024.0 => v as i32,
            _ => {
                return Err(Error::Syntax {
                    position,
                    message: "exponent must be an integer literal".into(),
                })
            }
        };
        if paren {
            self.expect(&TokenKind::RParen)?;
        }
        Ok(if negative { -n } else { n })
    }

    fn atom(&mut self) -> Result<Node> {
        let position = self.here();
        let tok = self.next().cloned().ok_or(Error::Syntax {
            position,
            message: "unexpected end of input".into(),
        })?;
        match tok.kind {
            TokenKind::Number(v) => Ok(Node::Lit(C64::new(v, 0.0))),
            TokenKind::Imaginary(v) => Ok(Node::Lit(C64::new(0.0, v))),
            TokenKind::LParen => {
                let inner = self.expr()?;
                self.expect(&TokenKind::RParen)?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if let Some(func) = Func::from_name(&name) {
                    self.expect(&TokenKind::LParen)?;
                    let arg = self.expr()?;
                    self.expect(&TokenKind::RParen)?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                Ok(match name.as_str() {
                    "z" => Node::Var(Var::Z),
                    "zbar" => Node::Var(Var::Zbar),
                    "w" => Node::Var(Var::W),
                    "wbar" => Node::Var(Var::Wbar),
                    "r2" => Node::Var(Var::R2),
                    "i" => Node::Lit(C64::new(0.0, 1.0)),
                    _ => return Err(Error::UnknownIdentifier(name)),
                })
            }
            other => Err(Error::Syntax {
                position: tok.pos,
                message: format!("unexpected {other:?}"),
            }),
        }
    }
}

/// Formats a real number so that it parses back as the same value.
pub fn real_literal(x: f64) -> String {
    if x < 0.0 {
        format!("(-{})", -x)
    } else {
        format!("{x}")
    }
}

/// Formats a complex number as a parseable expression.
pub fn complex_literal(c: C64) -> String {
    if c.im == 0.0 {
        real_literal(c.re)
    } else {
        format!("({}+{}*i)", real_literal(c.re), real_literal(c.im))
    }
}
