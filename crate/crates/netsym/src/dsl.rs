//! Response-function expressions.
//!
//! Grammar (informally): sums of products of powers over the atoms
//! `lambda`, `x<k>`, numeric literals, named constants (inlined at parse
//! time) and parenthesised sub-expressions, with unary minus and integer
//! exponents via `^`.

use std::collections::HashMap;
use std::fmt;

use crate::error::{NetsymError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// x<k>, 0-indexed internally.
    Var(usize),
    Lambda,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(k: usize) -> Expr {
        Expr::Var(k)
    }

    /// Largest variable index used, plus one (0 when no variables occur).
    pub fn num_vars(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Lambda => 0,
            Expr::Var(k) => k + 1,
            Expr::Neg(a) | Expr::Pow(a, _) => a.num_vars(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.num_vars().max(b.num_vars())
            }
        }
    }

    pub fn uses_lambda(&self) -> bool {
        match self {
            Expr::Lambda => true,
            Expr::Num(_) | Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) => a.uses_lambda(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.uses_lambda() || b.uses_lambda()
            }
        }
    }

    pub fn eval(&self, vars: &[f64], lambda: f64) -> Result<f64> {
        let v = self.eval_unchecked(vars, lambda)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NetsymError::NonFinite(format!(
                "expression evaluated to {v}"
            )))
        }
    }

    fn eval_unchecked(&self, vars: &[f64], lambda: f64) -> Result<f64> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(k) => {
                if *k >= vars.len() {
                    return Err(NetsymError::UnknownVariable(format!("x{}", k + 1)));
                }
                vars[*k]
            }
            Expr::Lambda => lambda,
            Expr::Neg(a) => -a.eval_unchecked(vars, lambda)?,
            Expr::Add(a, b) => a.eval_unchecked(vars, lambda)? + b.eval_unchecked(vars, lambda)?,
            Expr::Sub(a, b) => a.eval_unchecked(vars, lambda)? - b.eval_unchecked(vars, lambda)?,
            Expr::Mul(a, b) => a.eval_unchecked(vars, lambda)? * b.eval_unchecked(vars, lambda)?,
            Expr::Div(a, b) => a.eval_unchecked(vars, lambda)? / b.eval_unchecked(vars, lambda)?,
            Expr::Pow(a, e) => a.eval_unchecked(vars, lambda)?.powi(*e as i32),
        })
    }

    /// Symbolic partial with respect to x<k> (`Target::Var(k)`) or λ,
    /// simplified by constant folding only.
    pub fn partial(&self, target: Target) -> Expr {
        let d = match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(k) => Expr::Num(if target == Target::Var(*k) { 1.0 } else { 0.0 }),
            Expr::Lambda => Expr::Num(if target == Target::Lambda { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::Neg(Box::new(a.partial(target))),
            Expr::Add(a, b) => Expr::Add(Box::new(a.partial(target)), Box::new(b.partial(target))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.partial(target)), Box::new(b.partial(target))),
            Expr::Mul(a, b) => Expr::Add(
                Box::new(Expr::Mul(Box::new(a.partial(target)), b.clone())),
                Box::new(Expr::Mul(a.clone(), Box::new(b.partial(target)))),
            ),
            Expr::Div(a, b) => Expr::Div(
                Box::new(Expr::Sub(
                    Box::new(Expr::Mul(Box::new(a.partial(target)), b.clone())),
                    Box::new(Expr::Mul(a.clone(), Box::new(b.partial(target)))),
                )),
                Box::new(Expr::Pow(b.clone(), 2)),
            ),
            Expr::Pow(a, e) => {
                if *e == 0 {
                    Expr::Num(0.0)
                } else {
                    Expr::Mul(
                        Box::new(Expr::Mul(
                            Box::new(Expr::Num(*e as f64)),
                            Box::new(Expr::Pow(a.clone(), e - 1)),
                        )),
                        Box::new(a.partial(target)),
                    )
                }
            }
        };
        d.fold()
    }

    /// Constant folding: collapse numeric subtrees and drop additive zeros
    /// and multiplicative zeros/ones. No other rewriting.
    pub fn fold(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Lambda => self.clone(),
            Expr::Neg(a) => match a.fold() {
                Expr::Num(v) => Expr::Num(-v),
                fa => Expr::Neg(Box::new(fa)),
            },
            Expr::Add(a, b) => match (a.fold(), b.fold()) {
                (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
                (Expr::Num(x), fb) if x == 0.0 => fb,
                (fa, Expr::Num(y)) if y == 0.0 => fa,
                (fa, fb) => Expr::Add(Box::new(fa), Box::new(fb)),
            },
            Expr::Sub(a, b) => match (a.fold(), b.fold()) {
                (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
                (fa, Expr::Num(y)) if y == 0.0 => fa,
                (Expr::Num(x), fb) if x == 0.0 => Expr::Neg(Box::new(fb)).fold(),
                (fa, fb) => Expr::Sub(Box::new(fa), Box::new(fb)),
            },
            Expr::Mul(a, b) => match (a.fold(), b.fold()) {
                (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
                (Expr::Num(x), _) | (_, Expr::Num(x)) if x == 0.0 => Expr::Num(0.0),
                (Expr::Num(x), fb) if x == 1.0 => fb,
                (fa, Expr::Num(y)) if y == 1.0 => fa,
                (fa, fb) => Expr::Mul(Box::new(fa), Box::new(fb)),
            },
            Expr::Div(a, b) => match (a.fold(), b.fold()) {
                (Expr::Num(x), Expr::Num(y)) if y != 0.0 => Expr::Num(x / y),
                (Expr::Num(x), _) if x == 0.0 => Expr::Num(0.0),
                (fa, Expr::Num(y)) if y == 1.0 => fa,
                (fa, fb) => Expr::Div(Box::new(fa), Box::new(fb)),
            },
            Expr::Pow(a, e) => match (a.fold(), e) {
                (_, 0) => Expr::Num(1.0),
                (fa, 1) => fa,
                (Expr::Num(v), e) => Expr::Num(v.powi(*e as i32)),
                (fa, e) => Expr::Pow(Box::new(fa), *e),
            },
        }
    }

    /// Substitute expressions for variables (x<k> ↦ subs[k]); λ untouched.
    pub fn substitute(&self, subs: &[Expr]) -> Expr {
        match self {
            Expr::Num(_) | Expr::Lambda => self.clone(),
            Expr::Var(k) => subs[*k].clone(),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute(subs))),
            Expr::Add(a, b) => {
                Expr::Add(Box::new(a.substitute(subs)), Box::new(b.substitute(subs)))
            }
            Expr::Sub(a, b) => {
                Expr::Sub(Box::new(a.substitute(subs)), Box::new(b.substitute(subs)))
            }
            Expr::Mul(a, b) => {
                Expr::Mul(Box::new(a.substitute(subs)), Box::new(b.substitute(subs)))
            }
            Expr::Div(a, b) => {
                Expr::Div(Box::new(a.substitute(subs)), Box::new(b.substitute(subs)))
            }
            Expr::Pow(a, e) => Expr::Pow(Box::new(a.substitute(subs)), *e),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Var(usize),
    Lambda,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn prec(e: &Expr) -> u8 {
            match e {
                Expr::Add(..) | Expr::Sub(..) => 1,
                Expr::Neg(..) => 2,
                Expr::Mul(..) | Expr::Div(..) => 3,
                Expr::Pow(..) => 4,
                _ => 5,
            }
        }
        fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
            if prec(e) < min {
                write!(f, "(")?;
                write!(f, "{e}")?;
                write!(f, ")")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    write!(f, "({v})")
                } else if v.fract() == 0.0 && v.abs() < 1e15 {
                    write!(f, "{}", *v as i64)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(k) => write!(f, "x{}", k + 1),
            Expr::Lambda => write!(f, "lambda"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                write_child(f, a, 3)
            }
            Expr::Add(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " + ")?;
                write_child(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write_child(f, a, 1)?;
                write!(f, " - ")?;
                write_child(f, b, 2)
            }
            Expr::Mul(a, b) => {
                write_child(f, a, 3)?;
                write!(f, "*")?;
                write_child(f, b, 4)
            }
            Expr::Div(a, b) => {
                write_child(f, a, 3)?;
                write!(f, "/")?;
                write_child(f, b, 4)
            }
            Expr::Pow(a, e) => {
                write_child(f, a, 5)?;
                write!(f, "^{e}")
            }
        }
    }
}

/// Parse with named constants inlined as numeric literals.
pub fn parse(src: &str, consts: &HashMap<String, f64>) -> Result<Expr> {
    Parser::new(src, consts).parse_all()
}

pub fn parse_simple(src: &str) -> Result<Expr> {
    parse(src, &HashMap::new())
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    consts: &'a HashMap<String, f64>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, consts: &'a HashMap<String, f64>) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
            consts,
        }
    }

    fn err(&self, msg: impl Into<String>) -> NetsymError {
        let before = &self.src[..self.pos.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let col = self.pos - before.rfind('\n').map_or(0, |i| i + 1) + 1;
        NetsymError::SyntaxError {
            line,
            col,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse_all(&mut self) -> Result<Expr> {
        let e = self.expr()?;
        self.skip_ws();
        if self.pos < self.bytes.len() {
            return Err(self.err(format!(
                "unexpected character '{}'",
                self.bytes[self.pos] as char
            )));
        }
        Ok(e)
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    e = Expr::Add(Box::new(e), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    e = Expr::Sub(Box::new(e), Box::new(self.term()?));
                }
                _ => return Ok(e),
            }
        }
    }

    // term := factor (('*' | '/') factor)*
    fn term(&mut self) -> Result<Expr> {
        let mut e = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    e = Expr::Mul(Box::new(e), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    e = Expr::Div(Box::new(e), Box::new(self.factor()?));
                }
                _ => return Ok(e),
            }
        }
    }

    // factor := '-' factor | atom ('^' INT)?
    fn factor(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let a = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let e = self.integer()? as u32;
            return Ok(Expr::Pow(Box::new(a), e));
        }
        Ok(a)
    }

    // atom := NUMBER | 'lambda' | 'x' INT | CONSTNAME | '(' expr ')'
    fn atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric()
                        || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = &self.src[start..self.pos];
                if name == "lambda" {
                    return Ok(Expr::Lambda);
                }
                if let Some(digits) = name.strip_prefix('x') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let k: usize = digits.parse().map_err(|_| {
                            self.err(format!("bad variable index in '{name}'"))
                        })?;
                        if k == 0 {
                            return Err(self.err("variable indices start at x1"));
                        }
                        return Ok(Expr::Var(k - 1));
                    }
                }
                match self.consts.get(name) {
                    Some(&v) => Ok(Expr::Num(v)),
                    None => Err(NetsymError::UnknownVariable(name.to_string())),
                }
            }
            Some(c) => Err(self.err(format!("unexpected character '{}'", c as char))),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_digit() || self.bytes[self.pos] == b'.')
        {
            self.pos += 1;
        }
        // exponent part like 1e-3
        if self.pos < self.bytes.len() && (self.bytes[self.pos] | 32) == b'e' {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.bytes.len()
                && (self.bytes[self.pos] == b'+' || self.bytes[self.pos] == b'-')
            {
                self.pos += 1;
            }
            if self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| self.err(format!("bad number '{}'", &self.src[start..self.pos])))
    }

    fn integer(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer exponent"));
        }
        self.src[start..self.pos]
            .parse()
            .map_err(|_| self.err("exponent out of range"))
    }
}

/// Network vector field built from a response expression: component i is
/// f(x_{σ1(i)}, …, x_{σn(i)}).
#[derive(Debug, Clone)]
pub struct ResponseField {
    pub expr: Expr,
    /// argument tables: args[i][j] = which cell feeds slot j of cell i
    pub args: Vec<Vec<usize>>,
}

impl ResponseField {
    pub fn new(spec: &crate::network::NetworkSpec, expr: Expr) -> Result<Self> {
        let nv = expr.num_vars();
        if nv > spec.maps().len() {
            return Err(NetsymError::UnknownVariable(format!("x{nv}")));
        }
        let n = spec.num_cells();
        let args = (0..n)
            .map(|i| spec.maps().iter().map(|s| s.apply(i)).collect())
            .collect();
        Ok(ResponseField { expr, args })
    }

    pub fn dim(&self) -> usize {
        self.args.len()
    }

    pub fn eval(&self, x: &[f64], lambda: f64) -> Result<Vec<f64>> {
        self.args
            .iter()
            .map(|a| {
                let slots: Vec<f64> = a.iter().map(|&c| x[c]).collect();
                self.expr.eval(&slots, lambda)
            })
            .collect()
    }

    /// Jacobian at (x, λ) by symbolic partials of the response function.
    pub fn jacobian(&self, x: &[f64], lambda: f64) -> Result<Vec<Vec<f64>>> {
        let nslots = self.args[0].len();
        let partials: Vec<Expr> = (0..nslots).map(|k| self.expr.partial(Target::Var(k))).collect();
        let n = self.args.len();
        let mut jac = vec![vec![0.0; n]; n];
        for (i, a) in self.args.iter().enumerate() {
            let slots: Vec<f64> = a.iter().map(|&c| x[c]).collect();
            for (k, p) in partials.iter().enumerate() {
                jac[i][a[k]] += p.eval(&slots, lambda)?;
            }
        }
        Ok(jac)
    }
}

/// Compose two homogeneous response functions along a network: the response
/// of the once-iterated system, h(x_slots) = f applied to g-values of the
/// forwarded slots. Given a network with maps σ_1..σ_n and responses f, g,
/// the composite cell map x ↦ f(g(...σ arguments...)) is again homogeneous
/// with response h(y_1..y_n) = f(g(y_{σ̃ args}) ...). Concretely, slot j of h
/// feeds g with slots (σ̃_1(j), …, σ̃_n(j)) when the network is a monoid
/// network; for a general closed network we use the composition table.
pub fn compose_networks(
    spec: &crate::network::NetworkSpec,
    f: &Expr,
    g: &Expr,
) -> Result<Expr> {
    // need the composition table: σ_j ∘ σ_k = σ_{table[j][k]}
    let table = crate::network::table_of(spec)?;
    let n = spec.maps().len();
    // h(x_1..x_n) = f(g1, ..., gn) with g_j = g(x_{t(j,1)}, ..., x_{t(j,n)})
    // where slot k of the j-th inner g reads slot table[k][j]: the cell
    // feeding slot k of cell σ_j(i) is σ_k(σ_j(i)) = σ_{table[k][j]}(i).
    let subs: Vec<Expr> = (0..n)
        .map(|j| {
            let inner: Vec<Expr> = (0..n).map(|k| Expr::Var(table.compose(k, j))).collect();
            g.substitute(&inner)
        })
        .collect();
    Ok(f.substitute(&subs).fold())
}

/// Lie bracket of two network vector fields: [F,G](x) = DG(x)F(x) − DF(x)G(x).
pub fn lie_bracket(
    spec: &crate::network::NetworkSpec,
    f: &Expr,
    g: &Expr,
    x: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    let ff = ResponseField::new(spec, f.clone())?;
    let gg = ResponseField::new(spec, g.clone())?;
    let fv = ff.eval(x, lambda)?;
    let gv = gg.eval(x, lambda)?;
    let df = ff.jacobian(x, lambda)?;
    let dg = gg.jacobian(x, lambda)?;
    let n = x.len();
    Ok((0..n)
        .map(|i| {
            (0..n)
                .map(|j| dg[i][j] * fv[j] - df[i][j] * gv[j])
                .sum()
        })
        .collect())
}
