//! Small exact symbolic layer for branch formulas: multivariate polynomials
//! and rational functions over ℚ in named coefficient symbols, plus formal
//! square roots (a symbol `s` carrying the relation s² = radicand).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::rat::Rat;
use num_traits::{One, Signed, Zero};

/// Symbol table shared by all polynomials of one classification run.
#[derive(Debug, Clone, Default)]
pub struct SymTable {
    names: Vec<String>,
    /// for a formal square root, the polynomial it squares to
    squares: Vec<Option<Poly>>,
}

impl SymTable {
    pub fn new() -> Self {
        SymTable::default()
    }

    pub fn add(&mut self, name: &str) -> usize {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return i;
        }
        self.names.push(name.to_string());
        self.squares.push(None);
        self.names.len() - 1
    }

    /// A formal square root of `square`; reused when the same radicand was
    /// already introduced.
    pub fn add_sqrt(&mut self, square: Poly) -> usize {
        for (i, s) in self.squares.iter().enumerate() {
            if s.as_ref() == Some(&square) {
                return i;
            }
        }
        self.names.push(format!("sqrt#{}", self.names.len()));
        self.squares.push(Some(square));
        self.names.len() - 1
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn square_of(&self, i: usize) -> Option<&Poly> {
        self.squares[i].as_ref()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Exponent map symbol-id → power; the empty map is the constant monomial.
pub type Monomial = BTreeMap<usize, u32>;

/// Multivariate polynomial: monomial → coefficient, zero coefficients never
/// stored. Square-root symbols are kept to exponent ≤ 1 by substituting
/// their defining relation (see `reduce`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Poly {
    pub terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Rat) -> Poly {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::new(), c);
        }
        Poly { terms }
    }

    pub fn one() -> Poly {
        Poly::constant(Rat::one())
    }

    pub fn symbol(id: usize) -> Poly {
        let mut m = Monomial::new();
        m.insert(id, 1);
        let mut terms = BTreeMap::new();
        terms.insert(m, Rat::one());
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_empty())
    }

    pub fn as_constant(&self) -> Option<Rat> {
        if self.is_zero() {
            return Some(Rat::zero());
        }
        if self.is_constant() {
            return self.terms.values().next().cloned();
        }
        None
    }

    fn insert(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get() + &c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), v * c)).collect(),
        }
    }

    /// Product without square-root reduction.
    fn mul_raw(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let mut m = ma.clone();
                for (&s, &e) in mb {
                    *m.entry(s).or_insert(0) += e;
                }
                out.insert(m, ca * cb);
            }
        }
        out
    }

    /// Product with square-root symbols reduced via s² = radicand.
    pub fn mul(&self, other: &Poly, syms: &SymTable) -> Poly {
        self.mul_raw(other).reduce(syms)
    }

    /// Substitute s² ↦ square_of(s) until all sqrt exponents are ≤ 1.
    pub fn reduce(&self, syms: &SymTable) -> Poly {
        let mut cur = self.clone();
        loop {
            let mut changed = false;
            let mut next = Poly::zero();
            for (m, c) in &cur.terms {
                let hit = m
                    .iter()
                    .find(|(&s, &e)| e >= 2 && syms.square_of(s).is_some())
                    .map(|(&s, _)| s);
                match hit {
                    Some(s) => {
                        changed = true;
                        let mut rest = m.clone();
                        let e = rest.remove(&s).unwrap();
                        if e > 2 {
                            rest.insert(s, e - 2);
                        }
                        let mut base = Poly::zero();
                        base.insert(rest, c.clone());
                        let sq = syms.square_of(s).unwrap().clone();
                        next = next.add(&base.mul_raw(&sq));
                    }
                    None => next.insert(m.clone(), c.clone()),
                }
            }
            cur = next;
            if !changed {
                return cur;
            }
        }
    }

    pub fn pow(&self, e: u32, syms: &SymTable) -> Poly {
        let mut out = Poly::one();
        for _ in 0..e {
            out = out.mul(self, syms);
        }
        out
    }

    pub fn contains_sqrt(&self, syms: &SymTable) -> bool {
        self.terms
            .keys()
            .any(|m| m.keys().any(|&s| syms.square_of(s).is_some()))
    }

    /// Numeric value under an assignment id → f64. Square-root symbols get
    /// the principal root of their (evaluated) radicand.
    pub fn eval(&self, vals: &[f64], syms: &SymTable) -> f64 {
        use num_traits::ToPrimitive;
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut v = c.to_f64().unwrap();
            for (&s, &e) in m {
                let base = match syms.square_of(s) {
                    Some(sq) => sq.eval(vals, syms).abs().sqrt(),
                    None => vals[s],
                };
                v *= base.powi(e as i32);
            }
            total += v;
        }
        total
    }

    /// Numeric value where the sign of each square root is chosen by
    /// `sqrt_signs` (defaulting to +).
    pub fn eval_signed(&self, vals: &[f64], signs: &BTreeMap<usize, f64>, syms: &SymTable) -> f64 {
        use num_traits::ToPrimitive;
        let mut total = 0.0;
        for (m, c) in &self.terms {
            let mut v = c.to_f64().unwrap();
            for (&s, &e) in m {
                let base = match syms.square_of(s) {
                    Some(sq) => {
                        let sign = signs.get(&s).copied().unwrap_or(1.0);
                        sign * sq.eval_signed(vals, signs, syms).abs().sqrt()
                    }
                    None => vals[s],
                };
                v *= base.powi(e as i32);
            }
            total += v;
        }
        total
    }

    pub fn render(&self, syms: &SymTable) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let mut parts: Vec<String> = Vec::new();
            if !c.abs().is_one() || m.is_empty() {
                parts.push(format_rat(&c.abs()));
            }
            for (&s, &e) in m {
                let name = match syms.square_of(s) {
                    Some(sq) => format!("sqrt({})", sq.render(syms)),
                    None => syms.name(s).to_string(),
                };
                if e == 1 {
                    parts.push(name);
                } else {
                    parts.push(format!("{name}^{e}"));
                }
            }
            let term = parts.join("*");
            if i == 0 {
                if c.is_negative() {
                    out.push('-');
                }
            } else if c.is_negative() {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            out.push_str(&term);
        }
        out
    }
}

fn format_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rational function num/den; den is nonzero as a polynomial and carries the
/// implicit genericity condition den ≠ 0.
#[derive(Debug, Clone)]
pub struct RatFn {
    pub num: Poly,
    pub den: Poly,
}

impl RatFn {
    pub fn zero() -> RatFn {
        RatFn {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn from_poly(p: Poly) -> RatFn {
        RatFn {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, other: &RatFn, syms: &SymTable) -> RatFn {
        RatFn {
            num: self
                .num
                .mul(&other.den, syms)
                .add(&other.num.mul(&self.den, syms)),
            den: self.den.mul(&other.den, syms),
        }
    }

    pub fn sub(&self, other: &RatFn, syms: &SymTable) -> RatFn {
        self.add(&other.neg(), syms)
    }

    pub fn neg(&self) -> RatFn {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFn, syms: &SymTable) -> RatFn {
        RatFn {
            num: self.num.mul(&other.num, syms),
            den: self.den.mul(&other.den, syms),
        }
    }

    /// None when dividing by the zero function.
    pub fn div(&self, other: &RatFn, syms: &SymTable) -> Option<RatFn> {
        if other.is_zero() {
            return None;
        }
        Some(RatFn {
            num: self.num.mul(&other.den, syms),
            den: self.den.mul(&other.num, syms),
        })
    }

    /// Equality by cross-multiplication.
    pub fn eq(&self, other: &RatFn, syms: &SymTable) -> bool {
        self.num
            .mul(&other.den, syms)
            .sub(&other.num.mul(&self.den, syms))
            .is_zero()
    }

    pub fn eval(&self, vals: &[f64], syms: &SymTable) -> f64 {
        self.num.eval(vals, syms) / self.den.eval(vals, syms)
    }

    pub fn eval_signed(&self, vals: &[f64], signs: &BTreeMap<usize, f64>, syms: &SymTable) -> f64 {
        self.num.eval_signed(vals, signs, syms) / self.den.eval_signed(vals, signs, syms)
    }

    pub fn render(&self, syms: &SymTable) -> String {
        if self.den.as_constant().map_or(false, |c| c.is_one()) {
            return self.num.render(syms);
        }
        let num = self.num.render(syms);
        let den = self.den.render(syms);
        let wrap = |s: &str| {
            if s.contains(" + ") || s.contains(" - ") {
                format!("({s})")
            } else {
                s.to_string()
            }
        };
        format!("{}/{}", wrap(&num), wrap(&den))
    }
}

/// Univariate polynomial in one extra formal variable with `RatFn`
/// coefficients — the segment equations of a Newton polygon.
pub fn ratfn_poly_roots_linear(c0: &RatFn, c1: &RatFn, syms: &SymTable) -> Option<RatFn> {
    // c1 w + c0 = 0
    c0.neg().div(c1, syms)
}

/// Roots of c2 w² + c1 w + c0 = 0 via the quadratic formula, introducing a
/// formal square root of the discriminant. Returns None when the radicand
/// itself contains a square root (nested radicals are out of scope).
pub fn ratfn_poly_roots_quadratic(
    c0: &RatFn,
    c1: &RatFn,
    c2: &RatFn,
    syms: &mut SymTable,
) -> Option<(Vec<RatFn>, Poly)> {
    // discriminant c1² − 4 c0 c2 as a RatFn N/D; sqrt(N/D) = sqrt(N·D)/D
    let four = RatFn::from_poly(Poly::constant(crate::rat::rat(4)));
    let disc = c1.mul(c1, syms).sub(&four.mul(&c0.mul(c2, syms), syms), syms);
    if disc.num.contains_sqrt(syms) || disc.den.contains_sqrt(syms) {
        return None;
    }
    let radicand = disc.num.mul(&disc.den, syms);
    if radicand.is_zero() {
        return None; // degenerate double root: non-generic
    }
    let s = syms.add_sqrt(radicand.clone());
    let sqrt_disc = RatFn {
        num: Poly::symbol(s),
        den: disc.den.clone(),
    };
    let two_c2 = c2.mul(&RatFn::from_poly(Poly::constant(crate::rat::rat(2))), syms);
    let mut roots = Vec::new();
    for sign in [1i64, -1] {
        let num = c1.neg().add(
            &sqrt_disc.mul(&RatFn::from_poly(Poly::constant(crate::rat::rat(sign))), syms),
            syms,
        );
        roots.push(num.div(&two_c2, syms)?);
    }
    Some((roots, radicand))
}

/// Render λ^e with e in half-integer units (`e` counts powers of μ = λ^½).
pub fn render_lambda_power(mu_power: u32) -> String {
    match mu_power {
        0 => String::new(),
        2 => "*lambda".to_string(),
        e if e % 2 == 0 => format!("*lambda^{}", e / 2),
        1 => "*sqrt(lambda)".to_string(),
        e => {
            let mut s = String::new();
            let _ = write!(s, "*lambda^({e}/2)");
            s
        }
    }
}
