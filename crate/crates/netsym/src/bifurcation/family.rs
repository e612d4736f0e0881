//! Constrained equivariant Taylor families on a kernel summand.
//!
//! A family member is a polynomial map r: W × ℝ → W, written in coordinates
//! u ∈ ℝ^m for the summand and the parameter λ, with monomials u^α λ^β for
//! |α| ≤ 3, β ≤ 1, |α| + β ≥ 1.  Two linear conditions cut the space down:
//! equivariance r(A_σ u; λ) = A_σ r(u; λ) for every σ, and — for
//! classification at a bifurcation point — the requirement that the u-linear
//! λ-free part lies in the radical of End(W) (the linearization on the kernel
//! of the semisimple part is nilpotent).

use std::collections::BTreeMap;

use crate::rat::{Rat, RatMat};
use crate::symbolic::{Poly, SymTable};
use num_traits::{One, Zero};

/// u^alpha · lambda^beta
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UMonomial {
    pub alpha: Vec<u32>,
    pub beta: u32,
}

impl UMonomial {
    pub fn u_degree(&self) -> u32 {
        self.alpha.iter().sum()
    }

    pub fn render(&self, comp_prefix: &str) -> String {
        let mut parts = Vec::new();
        if self.beta == 1 {
            parts.push("lambda".to_string());
        }
        for (j, &e) in self.alpha.iter().enumerate() {
            match e {
                0 => {}
                1 => parts.push(format!("{}{}", comp_prefix, j + 1)),
                _ => parts.push(format!("{}{}^{}", comp_prefix, j + 1, e)),
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

/// All monomials u^α λ^β with |α| ≤ max_u, β ≤ max_lambda, |α|+β ≥ 1,
/// ordered by (total degree, λ-degree, exponents) for determinism.
pub fn monomial_basis(m: usize, max_u: u32, max_lambda: u32) -> Vec<UMonomial> {
    let mut alphas: Vec<Vec<u32>> = Vec::new();
    let mut cur = vec![0u32; m];
    loop {
        if cur.iter().sum::<u32>() <= max_u {
            alphas.push(cur.clone());
        }
        // odometer over exponent vectors bounded by max_u in each slot
        let mut j = 0;
        loop {
            if j == m {
                let mut out = Vec::new();
                for beta in 0..=max_lambda {
                    for a in &alphas {
                        let total = a.iter().sum::<u32>() + beta;
                        if total >= 1 {
                            out.push(UMonomial { alpha: a.clone(), beta });
                        }
                    }
                }
                out.sort_by_key(|t| {
                    (t.u_degree() + t.beta, t.beta, t.alpha.clone())
                });
                return out;
            }
            if cur[j] < max_u {
                cur[j] += 1;
                break;
            }
            cur[j] = 0;
            j += 1;
        }
    }
}

/// Dense polynomial in the u-variables alone (used while expanding u^α ∘ A_σ).
type UPoly = BTreeMap<Vec<u32>, Rat>;

fn upoly_mul(a: &UPoly, b: &UPoly) -> UPoly {
    let mut out: UPoly = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
            let entry = out.entry(e).or_insert_with(Rat::zero);
            *entry += ca.clone() * cb.clone();
        }
    }
    out.retain(|_, c| !c.is_zero());
    out
}

/// (Σ_k row[k] u_k)^e expanded.
fn linear_form_pow(row: &[Rat], e: u32) -> UPoly {
    let m = row.len();
    let mut acc: UPoly = BTreeMap::new();
    acc.insert(vec![0; m], Rat::one());
    let mut base: UPoly = BTreeMap::new();
    for (k, c) in row.iter().enumerate() {
        if !c.is_zero() {
            let mut exp = vec![0; m];
            exp[k] = 1;
            base.insert(exp, c.clone());
        }
    }
    for _ in 0..e {
        acc = upoly_mul(&acc, &base);
    }
    acc
}

/// Expansion of the monomial u^α after the substitution u ↦ M u.
fn monomial_after(m_mat: &RatMat, alpha: &[u32]) -> UPoly {
    let m = alpha.len();
    let mut acc: UPoly = BTreeMap::new();
    acc.insert(vec![0; m], Rat::one());
    for (j, &e) in alpha.iter().enumerate() {
        if e == 0 {
            continue;
        }
        let row: Vec<Rat> = (0..m).map(|k| m_mat.get(j, k).clone()).collect();
        acc = upoly_mul(&acc, &linear_form_pow(&row, e));
    }
    acc
}

/// A basis of the constrained Taylor family, with one named coefficient
/// symbol per basis vector.
#[derive(Debug, Clone)]
pub struct TaylorFamily {
    pub dim: usize,
    pub monomials: Vec<UMonomial>,
    /// each basis vector has length dim * monomials.len(), component-major
    pub basis: Vec<Vec<Rat>>,
    pub syms: SymTable,
    /// coeffs[i][t]: symbolic coefficient of monomial t in component i
    pub coeffs: Vec<Vec<Poly>>,
}

const COEFF_NAMES: &[&str] = &[
    "a", "b", "c", "d", "e", "f", "g", "h", "k", "l", "m", "n", "p", "q", "r", "s",
];

impl TaylorFamily {
    fn from_basis(dim: usize, monomials: Vec<UMonomial>, basis: Vec<Vec<Rat>>) -> TaylorFamily {
        let mut syms = SymTable::new();
        let t = monomials.len();
        let mut coeffs = vec![vec![Poly::zero(); t]; dim];
        for (l, vec_l) in basis.iter().enumerate() {
            let name = if l < COEFF_NAMES.len() {
                COEFF_NAMES[l].to_string()
            } else {
                format!("c{}", l + 1)
            };
            let id = syms.add(&name);
            let sym = Poly::symbol(id);
            for i in 0..dim {
                for tt in 0..t {
                    let c = &vec_l[i * t + tt];
                    if !c.is_zero() {
                        coeffs[i][tt] = coeffs[i][tt].add(&sym.scale(c));
                    }
                }
            }
        }
        TaylorFamily { dim, monomials, basis, syms, coeffs }
    }

    /// Number of free coefficients.
    pub fn num_coeffs(&self) -> usize {
        self.basis.len()
    }

    /// The monomials spanned by the family in component `i` (those with a
    /// nonzero symbolic coefficient).
    pub fn support(&self, i: usize) -> Vec<String> {
        self.monomials
            .iter()
            .zip(&self.coeffs[i])
            .filter(|(_, c)| !c.is_zero())
            .map(|(t, _)| t.render("u"))
            .collect()
    }

    /// Instantiate the family at concrete coefficient values; returns, per
    /// component, the coefficient of each monomial.
    pub fn instantiate(&self, cvals: &[Rat]) -> Vec<Vec<Rat>> {
        assert_eq!(cvals.len(), self.basis.len());
        let t = self.monomials.len();
        let mut out = vec![vec![Rat::zero(); t]; self.dim];
        for (l, vec_l) in self.basis.iter().enumerate() {
            for i in 0..self.dim {
                for tt in 0..t {
                    let c = &vec_l[i * t + tt];
                    if !c.is_zero() {
                        out[i][tt] += c.clone() * cvals[l].clone();
                    }
                }
            }
        }
        out
    }

    /// Evaluate the instantiated map at rational (u, λ).
    pub fn eval_instance(coeffs: &[Vec<Rat>], monomials: &[UMonomial], u: &[Rat], lambda: &Rat) -> Vec<Rat> {
        coeffs
            .iter()
            .map(|row| {
                let mut acc = Rat::zero();
                for (t, c) in monomials.iter().zip(row) {
                    if c.is_zero() {
                        continue;
                    }
                    let mut v = c.clone();
                    for (j, &e) in t.alpha.iter().enumerate() {
                        for _ in 0..e {
                            v *= u[j].clone();
                        }
                    }
                    for _ in 0..t.beta {
                        v *= lambda.clone();
                    }
                    acc += v;
                }
                acc
            })
            .collect()
    }

    /// Exact fit of concrete per-monomial coefficients onto the family basis.
    /// Returns None when the map does not lie in the family.
    pub fn fit(&self, coeffs: &[Vec<Rat>]) -> Option<Vec<Rat>> {
        let t = self.monomials.len();
        let rows = self.dim * t;
        let cols = self.basis.len();
        let mut mat = RatMat::zeros(rows, cols);
        for (l, vec_l) in self.basis.iter().enumerate() {
            for r in 0..rows {
                mat.set(r, l, vec_l[r].clone());
            }
        }
        let mut rhs = vec![Rat::zero(); rows];
        for i in 0..self.dim {
            for tt in 0..t {
                rhs[i * t + tt] = coeffs[i][tt].clone();
            }
        }
        mat.solve(&rhs)
    }
}

/// Rows of the linear system expressing r(A_σ u; λ) = A_σ r(u; λ) for all σ,
/// in the unknowns c[i][t] (component-major).
fn equivariance_rows(action: &[RatMat], monomials: &[UMonomial]) -> Vec<Vec<Rat>> {
    let m = action[0].rows();
    let t = monomials.len();
    let index_of = |alpha: &[u32], beta: u32| -> Option<usize> {
        monomials.iter().position(|mo| mo.alpha == alpha && mo.beta == beta)
    };
    let mut rows = Vec::new();
    for a in action {
        if a.is_identity() {
            continue;
        }
        // precompute expansions of each monomial under u ↦ A u
        let expansions: Vec<UPoly> = monomials.iter().map(|mo| monomial_after(a, &mo.alpha)).collect();
        for i in 0..m {
            // coefficient of each target monomial t' in r_i(Au) − (A r(u))_i
            let mut per_target: BTreeMap<usize, Vec<Rat>> = BTreeMap::new();
            for (tt, mo) in monomials.iter().enumerate() {
                for (alpha_p, coeff) in &expansions[tt] {
                    let tp = index_of(alpha_p, mo.beta)
                        .expect("substitution preserves degree, so the target monomial is in range");
                    let row = per_target.entry(tp).or_insert_with(|| vec![Rat::zero(); m * t]);
                    row[i * t + tt] += coeff.clone();
                }
            }
            for j in 0..m {
                let aij = a.get(i, j).clone();
                if aij.is_zero() {
                    continue;
                }
                for tp in 0..t {
                    let row = per_target.entry(tp).or_insert_with(|| vec![Rat::zero(); m * t]);
                    row[j * t + tp] -= aij.clone();
                }
            }
            for (_, row) in per_target {
                if row.iter().any(|c| !c.is_zero()) {
                    rows.push(row);
                }
            }
        }
    }
    rows
}

/// Rows forcing the u-linear, λ-free block B (B[i][j] = c[i][u_j]) to lie in
/// the span of `radical`: one row per functional annihilating that span.
fn radical_rows(radical: &[RatMat], m: usize, monomials: &[UMonomial]) -> Vec<Vec<Rat>> {
    let t = monomials.len();
    // index of the monomial u_j (λ-free, degree one)
    let lin_idx: Vec<usize> = (0..m)
        .map(|j| {
            monomials
                .iter()
                .position(|mo| mo.beta == 0 && mo.u_degree() == 1 && mo.alpha[j] == 1)
                .expect("degree-one monomials are always present")
        })
        .collect();
    // annihilator of span{radical} inside the m×m matrix space
    let s = radical.len();
    let mut flat = RatMat::zeros(s.max(1), m * m);
    for (l, r) in radical.iter().enumerate() {
        for i in 0..m {
            for j in 0..m {
                flat.set(l, i * m + j, r.get(i, j).clone());
            }
        }
    }
    let ann = flat.nullspace();
    let mut rows = Vec::new();
    for z in ann {
        let mut row = vec![Rat::zero(); m * t];
        for i in 0..m {
            for j in 0..m {
                if !z[i * m + j].is_zero() {
                    row[i * t + lin_idx[j]] += z[i * m + j].clone();
                }
            }
        }
        if row.iter().any(|c| !c.is_zero()) {
            rows.push(row);
        }
    }
    rows
}

fn family_from_rows(m: usize, monomials: Vec<UMonomial>, rows: Vec<Vec<Rat>>) -> TaylorFamily {
    let t = monomials.len();
    let basis = if rows.is_empty() {
        // no constraints: the standard basis
        let mut b = Vec::new();
        for r in 0..m * t {
            let mut v = vec![Rat::zero(); m * t];
            v[r] = Rat::one();
            b.push(v);
        }
        b
    } else {
        let mat = RatMat::from_rows(rows);
        mat.nullspace()
    };
    TaylorFamily::from_basis(m, monomials, basis)
}

/// The space of equivariant polynomial maps of degree ≤ 3 in u, ≤ 1 in λ.
pub fn equivariant_taylor_family(action: &[RatMat]) -> TaylorFamily {
    let m = action[0].rows();
    let monomials = monomial_basis(m, 3, 1);
    let rows = equivariance_rows(action, &monomials);
    family_from_rows(m, monomials, rows)
}

/// The equivariant family further constrained so that the u-linear λ-free
/// part lies in the radical of End(W); this is the family of reduced vector
/// fields at a codimension-one bifurcation point.
pub fn kernel_taylor_family(action: &[RatMat], end_radical: &[RatMat]) -> TaylorFamily {
    let m = action[0].rows();
    let monomials = monomial_basis(m, 3, 1);
    let mut rows = equivariance_rows(action, &monomials);
    rows.extend(radical_rows(end_radical, m, &monomials));
    family_from_rows(m, monomials, rows)
}
