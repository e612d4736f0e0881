//! Lyapunov–Schmidt reduction onto the generalized kernel of the semisimple
//! part of the linearization.
//!
//! Two routes are provided. `reduced_taylor` expands the reduced vector
//! field symbolically, order by order in exact rational arithmetic, up to
//! total degree 4 in (u, λ); this is what the classifier consumes when it
//! extracts named Taylor coefficients from a concrete response function.
//! `ls_reduce` builds a numeric evaluator for r(u; λ) via a Newton solve of
//! the image equation, which works for non-polynomial response functions and
//! backs the continuation driver.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::bifurcation::family::{TaylorFamily, UMonomial};
use crate::bifurcation::jc::{jordan_chevalley, jordan_chevalley_f64};
use crate::dsl::{Expr, ResponseField};
use crate::error::{NetsymError, Result};
use crate::network::{FundamentalNetwork, Representation};
use crate::rat::{Rat, RatMat};
use crate::repalg::SubRep;

/// Total degree (in u and λ jointly) kept by the exact expansion. The
/// constrained families use |α| ≤ 3, λ-degree ≤ 1, so degree 4 suffices.
pub const TAYLOR_TOTAL_DEGREE: u32 = 4;

const EQUILIBRIUM_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-10;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 50;
const RANK_TOL: f64 = 1e-8;

/// Multivariate polynomial in the kernel coordinates u_1..u_k and λ:
/// (u-exponents, λ-exponent) → coefficient.
type MP = BTreeMap<(Vec<u32>, u32), Rat>;

fn mp_deg(key: &(Vec<u32>, u32)) -> u32 {
    key.0.iter().sum::<u32>() + key.1
}

fn mp_add_term(p: &mut MP, key: (Vec<u32>, u32), c: Rat) {
    if c.is_zero() {
        return;
    }
    match p.entry(key) {
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(c);
        }
    }
}

fn mp_scale(p: &MP, c: &Rat) -> MP {
    if c.is_zero() {
        return MP::new();
    }
    p.iter().map(|(k, v)| (k.clone(), v * c)).collect()
}

fn mp_add_assign(p: &mut MP, q: &MP) {
    for (k, v) in q {
        mp_add_term(p, k.clone(), v.clone());
    }
}

fn mp_mul(p: &MP, q: &MP, max_deg: u32) -> MP {
    let mut out = MP::new();
    for (ka, va) in p {
        for (kb, vb) in q {
            if mp_deg(ka) + mp_deg(kb) > max_deg {
                continue;
            }
            let alpha: Vec<u32> = ka.0.iter().zip(&kb.0).map(|(a, b)| a + b).collect();
            mp_add_term(&mut out, (alpha, ka.1 + kb.1), va * vb);
        }
    }
    out
}

fn mp_pow(p: &MP, e: u32, max_deg: u32, nvars: usize) -> MP {
    let mut out = MP::new();
    out.insert((vec![0; nvars], 0), Rat::one());
    for _ in 0..e {
        out = mp_mul(&out, p, max_deg);
    }
    out
}

use num_traits::One;

/// Exact rational of an f64, rejecting non-finite input.
fn rat_of_f64(v: f64) -> Result<Rat> {
    BigRational::from_float(v)
        .ok_or_else(|| NetsymError::NonFinite(format!("coefficient {v} has no finite value")))
}

/// A polynomial in slot variables and λ, with rational coefficients taken
/// exactly from the f64 literals: (slot exponents, λ exponent) → coefficient.
fn expr_to_poly(expr: &Expr, nslots: usize) -> Result<MP> {
    Ok(match expr {
        Expr::Num(v) => {
            let c = rat_of_f64(*v)?;
            let mut p = MP::new();
            mp_add_term(&mut p, (vec![0; nslots], 0), c);
            p
        }
        Expr::Var(k) => {
            let mut alpha = vec![0; nslots];
            alpha[*k] = 1;
            let mut p = MP::new();
            p.insert((alpha, 0), Rat::one());
            p
        }
        Expr::Lambda => {
            let mut p = MP::new();
            p.insert((vec![0; nslots], 1), Rat::one());
            p
        }
        Expr::Neg(a) => mp_scale(&expr_to_poly(a, nslots)?, &(-Rat::one())),
        Expr::Add(a, b) => {
            let mut p = expr_to_poly(a, nslots)?;
            mp_add_assign(&mut p, &expr_to_poly(b, nslots)?);
            p
        }
        Expr::Sub(a, b) => {
            let mut p = expr_to_poly(a, nslots)?;
            mp_add_assign(&mut p, &mp_scale(&expr_to_poly(b, nslots)?, &(-Rat::one())));
            p
        }
        Expr::Mul(a, b) => mp_mul(
            &expr_to_poly(a, nslots)?,
            &expr_to_poly(b, nslots)?,
            u32::MAX,
        ),
        Expr::Div(a, b) => {
            let q = expr_to_poly(b, nslots)?;
            let c = match q.iter().next() {
                Some((k, v)) if q.len() == 1 && mp_deg(k) == 0 => v.clone(),
                _ => {
                    return Err(NetsymError::InvalidSpec(
                        "response function must be polynomial: division by a non-constant".into(),
                    ))
                }
            };
            mp_scale(&expr_to_poly(a, nslots)?, &(Rat::one() / c))
        }
        Expr::Pow(a, e) => mp_pow(&expr_to_poly(a, nslots)?, *e, u32::MAX, nslots),
    })
}

/// Γ component polynomials in the ambient variables, shifted so that the
/// origin sits at (x0, λ0).
fn gamma_polys(field: &ResponseField, x0: &[Rat], lambda0: &Rat) -> Result<Vec<MP>> {
    let n = field.dim();
    let nslots = field.args[0].len();
    let f = expr_to_poly(&field.expr, nslots)?;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // remap slot exponents to ambient cells
        let mut gi = MP::new();
        for ((alpha, beta), c) in &f {
            let mut amb = vec![0u32; n];
            for (j, e) in alpha.iter().enumerate() {
                amb[field.args[i][j]] += e;
            }
            mp_add_term(&mut gi, (amb, *beta), c.clone());
        }
        out.push(shift_poly(&gi, x0, lambda0));
    }
    Ok(out)
}

/// Substitute x_j → x_j + x0_j and λ → λ + λ0.
fn shift_poly(p: &MP, x0: &[Rat], lambda0: &Rat) -> MP {
    if x0.iter().all(|v| v.is_zero()) && lambda0.is_zero() {
        return p.clone();
    }
    let n = x0.len();
    // linear polys x_j + x0_j and λ + λ0
    let mut out = MP::new();
    for ((alpha, beta), c) in p {
        let mut term = MP::new();
        term.insert((vec![0; n], 0), c.clone());
        for (j, &e) in alpha.iter().enumerate() {
            let mut lin = MP::new();
            let mut key = vec![0; n];
            key[j] = 1;
            lin.insert((key, 0), Rat::one());
            if !x0[j].is_zero() {
                lin.insert((vec![0; n], 0), x0[j].clone());
            }
            term = mp_mul(&term, &mp_pow(&lin, e, u32::MAX, n), u32::MAX);
        }
        if *beta > 0 {
            let mut lin = MP::new();
            lin.insert((vec![0; n], 1), Rat::one());
            if !lambda0.is_zero() {
                lin.insert((vec![0; n], 0), lambda0.clone());
            }
            term = mp_mul(&term, &mp_pow(&lin, *beta, u32::MAX, n), u32::MAX);
        }
        mp_add_assign(&mut out, &term);
    }
    out
}

/// Exact Taylor expansion of the reduced vector field on ker L0^S.
#[derive(Debug, Clone)]
pub struct ExactReduction {
    /// echelonized basis of ker L0^S, ambient coordinates
    pub kernel_basis: Vec<Vec<Rat>>,
    /// basis of im L0^S
    pub image_basis: Vec<Vec<Rat>>,
    /// action of each σ on kernel coordinates
    pub kernel_action: Vec<RatMat>,
    /// linearization at the reduction point
    pub l0: RatMat,
    /// semisimple part of l0
    pub semisimple: RatMat,
    /// monomials (u-exponents, λ-exponent) with a nonzero coefficient in r
    pub monomials: Vec<(Vec<u32>, u32)>,
    /// coeffs[i][t]: coefficient of monomial t in component i of r
    pub coeffs: Vec<Vec<Rat>>,
}

impl ExactReduction {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.len()
    }

    /// Projections P_ker, P_im onto the two factors of W = ker ⊕ im.
    pub fn projections(&self) -> (RatMat, RatMat) {
        let n = self.l0.rows();
        let k = self.kernel_basis.len();
        let cols: Vec<Vec<Rat>> = self
            .kernel_basis
            .iter()
            .chain(self.image_basis.iter())
            .cloned()
            .collect();
        let m = RatMat::from_cols(n, &cols);
        let minv = m.inverse().expect("kernel and image are complementary");
        let mut sel_k = RatMat::zeros(n, n);
        for i in 0..k {
            sel_k.set_one(i, i);
        }
        let mut sel_i = RatMat::zeros(n, n);
        for i in k..n {
            sel_i.set_one(i, i);
        }
        (m.mul(&sel_k).mul(&minv), m.mul(&sel_i).mul(&minv))
    }

    /// Evaluate r at rational (u, λ).
    pub fn eval(&self, u: &[Rat], lambda: &Rat) -> Vec<Rat> {
        self.coeffs
            .iter()
            .map(|row| {
                let mut acc = Rat::zero();
                for ((alpha, beta), c) in self.monomials.iter().zip(row) {
                    if c.is_zero() {
                        continue;
                    }
                    let mut v = c.clone();
                    for (j, &e) in alpha.iter().enumerate() {
                        for _ in 0..e {
                            v *= u[j].clone();
                        }
                    }
                    for _ in 0..*beta {
                        v *= lambda.clone();
                    }
                    acc += v;
                }
                acc
            })
            .collect()
    }

    /// Coefficient of a given monomial in component i (zero when absent).
    pub fn coefficient(&self, i: usize, alpha: &[u32], beta: u32) -> Rat {
        self.monomials
            .iter()
            .position(|(a, b)| a == alpha && *b == beta)
            .map(|t| self.coeffs[i][t].clone())
            .unwrap_or_else(Rat::zero)
    }
}

/// Expand the reduced vector field r(u; λ) = Γ_ker(B_ker u + X_im(u, λ); λ)
/// symbolically to total degree 4, with exact rational coefficients.
pub fn reduced_taylor(
    fund: &FundamentalNetwork,
    rep: &Representation,
    rf: &Expr,
    x0: &[f64],
    lambda0: f64,
) -> Result<ExactReduction> {
    let field = ResponseField::new(fund.base(), rf.clone())?;
    let n = field.dim();
    if rep.ambient_dim() != n || x0.len() != n {
        return Err(NetsymError::InvalidSpec(
            "representation and point must match the fundamental network dimension".into(),
        ));
    }
    let x0r: Vec<Rat> = x0.iter().map(|&v| rat_of_f64(v)).collect::<Result<_>>()?;
    let l0r = rat_of_f64(lambda0)?;

    // symmetry of the reduction point, checked exactly
    for a in rep.matrices() {
        let ax = a.mul_vec(&x0r);
        let res = ax
            .iter()
            .zip(&x0r)
            .map(|(p, q)| (p - q).to_f64().unwrap_or(f64::INFINITY).abs())
            .fold(0.0, f64::max);
        if res > 0.0 {
            return Err(NetsymError::NotSymmetricPoint(res));
        }
    }

    let gamma = gamma_polys(&field, &x0r, &l0r)?;

    // equilibrium: no constant term after the shift
    let zero_key = (vec![0u32; n], 0u32);
    let mut eq_res = 0.0f64;
    for g in &gamma {
        if let Some(c) = g.get(&zero_key) {
            eq_res = eq_res.max(c.to_f64().unwrap_or(f64::INFINITY).abs());
        }
    }
    if eq_res > 0.0 {
        return Err(NetsymError::NotEquilibrium(eq_res));
    }

    // linearization
    let mut l0 = RatMat::zeros(n, n);
    for (i, g) in gamma.iter().enumerate() {
        for ((alpha, beta), c) in g {
            if *beta == 0 && alpha.iter().sum::<u32>() == 1 {
                let j = alpha.iter().position(|&e| e == 1).unwrap();
                l0.set(i, j, c.clone());
            }
        }
    }
    let (s, _nil) = jordan_chevalley(&l0);
    let kernel_basis = s.nullspace();
    let image_basis = s.column_space();
    let k = kernel_basis.len();
    let q = image_basis.len();
    debug_assert_eq!(k + q, n);

    // coordinates: rows of M⁻¹ split into kernel rows and image rows
    let cols: Vec<Vec<Rat>> = kernel_basis.iter().chain(image_basis.iter()).cloned().collect();
    let m = RatMat::from_cols(n, &cols);
    let minv = m.inverse().expect("kernel and image are complementary");

    // action of each σ on kernel coordinates: C_σ = π_ker A_σ B_ker
    let b_ker = RatMat::from_cols(n, &kernel_basis);
    let mut pi_ker = RatMat::zeros(k, n);
    let mut pi_im = RatMat::zeros(q, n);
    for j in 0..n {
        for i in 0..k {
            pi_ker.set(i, j, minv.get(i, j).clone());
        }
        for i in 0..q {
            pi_im.set(i, j, minv.get(k + i, j).clone());
        }
    }
    let kernel_action: Vec<RatMat> = rep
        .matrices()
        .iter()
        .map(|a| pi_ker.mul(a).mul(&b_ker))
        .collect();

    // implicit solve of the image equation, order by order:
    // v ← v − L_ii⁻¹ π_im Γ(B_ker u + B_im v; λ), truncated at degree 4.
    let b_im = RatMat::from_cols(n, &image_basis);
    let compose = |v: &[MP]| -> Vec<MP> {
        // ambient coordinate polys x_j(u, v, λ)
        let mut args: Vec<MP> = Vec::with_capacity(n);
        for j in 0..n {
            let mut p = MP::new();
            for (l, col) in kernel_basis.iter().enumerate() {
                if !col[j].is_zero() {
                    let mut key = vec![0u32; k];
                    key[l] = 1;
                    mp_add_term(&mut p, (key, 0), col[j].clone());
                }
            }
            for (l, col) in image_basis.iter().enumerate() {
                if !col[j].is_zero() {
                    mp_add_assign(&mut p, &mp_scale(&v[l], &col[j]));
                }
            }
            args.push(p);
        }
        // Γ_i composed with the substitution, truncated
        gamma
            .iter()
            .map(|g| {
                let mut out = MP::new();
                for ((alpha, beta), c) in g {
                    if *beta > TAYLOR_TOTAL_DEGREE {
                        continue;
                    }
                    let mut term = MP::new();
                    term.insert((vec![0; k], *beta), c.clone());
                    for (j, &e) in alpha.iter().enumerate() {
                        if e == 0 {
                            continue;
                        }
                        term = mp_mul(
                            &term,
                            &mp_pow(&args[j], e, TAYLOR_TOTAL_DEGREE, k),
                            TAYLOR_TOTAL_DEGREE,
                        );
                        if term.is_empty() {
                            break;
                        }
                    }
                    mp_add_assign(&mut out, &term);
                }
                out
            })
            .collect()
    };
    let project = |rows: &RatMat, polys: &[MP]| -> Vec<MP> {
        (0..rows.rows())
            .map(|i| {
                let mut acc = MP::new();
                for (j, p) in polys.iter().enumerate() {
                    if !rows.get(i, j).is_zero() {
                        mp_add_assign(&mut acc, &mp_scale(p, rows.get(i, j)));
                    }
                }
                acc
            })
            .collect()
    };

    let mut v: Vec<MP> = vec![MP::new(); q];
    if q > 0 {
        let l_ii = pi_im.mul(&l0).mul(&b_im);
        let l_ii_inv = l_ii
            .inverse()
            .expect("L0 is invertible on the image of its semisimple part");
        for _ in 0..=TAYLOR_TOTAL_DEGREE {
            let g = project(&pi_im, &compose(&v));
            let corr = project(&l_ii_inv, &g);
            for (vl, cl) in v.iter_mut().zip(&corr) {
                mp_add_assign(vl, &mp_scale(cl, &(-Rat::one())));
            }
        }
        let residual = project(&pi_im, &compose(&v));
        if residual.iter().any(|p| !p.is_empty()) {
            return Err(NetsymError::NewtonDivergence(
                "implicit series solve did not stabilize".into(),
            ));
        }
    }

    let r = project(&pi_ker, &compose(&v));
    let mut monomials: Vec<(Vec<u32>, u32)> = r
        .iter()
        .flat_map(|p| p.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    monomials.sort_by_key(|key| (mp_deg(key), key.1, key.0.clone()));
    let coeffs: Vec<Vec<Rat>> = r
        .iter()
        .map(|p| {
            monomials
                .iter()
                .map(|key| p.get(key).cloned().unwrap_or_else(Rat::zero))
                .collect()
        })
        .collect();

    Ok(ExactReduction {
        kernel_basis,
        image_basis,
        kernel_action,
        l0,
        semisimple: s,
        monomials,
        coeffs,
    })
}

/// Restrict the reduced vector field to one summand of the kernel and fit it
/// onto the summand's constrained Taylor family, returning the concrete
/// coefficient values (in the family's naming order). The summands listed in
/// `kernel_summands` must jointly span the kernel; the projection onto the
/// chosen one is taken along the others.
pub fn summand_fit(
    red: &ExactReduction,
    kernel_summands: &[&SubRep],
    which: usize,
    family: &TaylorFamily,
) -> Result<Option<Vec<Rat>>> {
    let k = red.kernel_dim();
    let b_ker = RatMat::from_cols(red.l0.rows(), &red.kernel_basis);
    // all summand basis vectors, expressed in kernel coordinates
    let mut cols: Vec<Vec<Rat>> = Vec::new();
    let mut block_start = 0usize;
    let mut block_dim = 0usize;
    for (s, sub) in kernel_summands.iter().enumerate() {
        if s == which {
            block_start = cols.len();
            block_dim = sub.dim();
        }
        for col in &sub.basis {
            let c = b_ker.solve(col).ok_or_else(|| {
                NetsymError::InvalidSpec("summand does not lie inside the kernel".into())
            })?;
            cols.push(c);
        }
    }
    if cols.len() != k {
        return Err(NetsymError::InvalidSpec(
            "summands do not span the kernel".into(),
        ));
    }
    let t = RatMat::from_cols(k, &cols);
    let tinv = t
        .inverse()
        .ok_or_else(|| NetsymError::InvalidSpec("summand bases are dependent".into()))?;

    // substitute u = T·(0, …, w, …, 0) with w in the chosen block, i.e.
    // u_l = Σ_j T[l][block_start+j] w_j, then read off the block rows of
    // T⁻¹ r(u).
    let m = block_dim;
    let linear_forms: Vec<MP> = (0..k)
        .map(|l| {
            let mut p = MP::new();
            for j in 0..m {
                let c = t.get(l, block_start + j).clone();
                if !c.is_zero() {
                    let mut key = vec![0u32; m];
                    key[j] = 1;
                    p.insert((key, 0), c);
                }
            }
            p
        })
        .collect();
    let mut r_w: Vec<MP> = vec![MP::new(); m];
    for (i, row) in red.coeffs.iter().enumerate() {
        // component i of r, composed with the substitution
        let mut ri = MP::new();
        for ((alpha, beta), c) in red.monomials.iter().zip(row) {
            if c.is_zero() {
                continue;
            }
            let mut term = MP::new();
            term.insert((vec![0; m], *beta), c.clone());
            for (l, &e) in alpha.iter().enumerate() {
                if e > 0 {
                    term = mp_mul(
                        &term,
                        &mp_pow(&linear_forms[l], e, TAYLOR_TOTAL_DEGREE, m),
                        TAYLOR_TOTAL_DEGREE,
                    );
                }
                if term.is_empty() {
                    break;
                }
            }
            mp_add_assign(&mut ri, &term);
        }
        for (j, target) in r_w.iter_mut().enumerate() {
            let c = tinv.get(block_start + j, i);
            if !c.is_zero() {
                mp_add_assign(target, &mp_scale(&ri, c));
            }
        }
    }

    // per-monomial coefficients in the family's monomial order
    let coeffs: Vec<Vec<Rat>> = r_w
        .iter()
        .map(|p| {
            family
                .monomials
                .iter()
                .map(|mo: &UMonomial| {
                    p.get(&(mo.alpha.clone(), mo.beta))
                        .cloned()
                        .unwrap_or_else(Rat::zero)
                })
                .collect()
        })
        .collect();
    Ok(family.fit(&coeffs))
}

/// Numeric Lyapunov–Schmidt reduction: an evaluator for r(u; λ) obtained by
/// a Newton solve of the image equation.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub x0: Vec<f64>,
    pub lambda0: f64,
    pub l0: DMatrix<f64>,
    /// n×k, columns spanning ker L0^S
    pub kernel_basis: DMatrix<f64>,
    /// n×q, columns spanning im L0^S
    pub image_basis: DMatrix<f64>,
    pub p_ker: DMatrix<f64>,
    pub p_im: DMatrix<f64>,
    pi_ker: DMatrix<f64>,
    pi_im: DMatrix<f64>,
    field: ResponseField,
}

impl ReducedSystem {
    pub fn kernel_dim(&self) -> usize {
        self.kernel_basis.ncols()
    }

    /// Ambient point X0 + B_ker u + B_im v(u, λ) solving the image equation.
    pub fn full_point(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let n = self.x0.len();
        let q = self.image_basis.ncols();
        let uk = DVector::from_column_slice(u);
        let base = DVector::from_column_slice(&self.x0) + &self.kernel_basis * uk;
        let mut v = DVector::zeros(q);
        for _ in 0..NEWTON_MAX_ITERS {
            let x = &base + &self.image_basis * &v;
            let xs: Vec<f64> = (0..n).map(|i| x[i]).collect();
            let g = &self.pi_im * DVector::from_vec(self.field.eval(&xs, lambda)?);
            if g.norm() <= NEWTON_TOL {
                return Ok(xs);
            }
            let jac = self.field.jacobian(&xs, lambda)?;
            let jm = DMatrix::from_fn(n, n, |i, j| jac[i][j]);
            let sys = &self.pi_im * jm * &self.image_basis;
            let step = sys.lu().solve(&g).ok_or_else(|| {
                NetsymError::NewtonDivergence("singular image-equation Jacobian".into())
            })?;
            v -= step;
        }
        Err(NetsymError::NewtonDivergence(format!(
            "image equation not solved after {NEWTON_MAX_ITERS} iterations"
        )))
    }

    /// The reduced vector field r(u; λ).
    pub fn eval_r(&self, u: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let x = self.full_point(u, lambda)?;
        let g = DVector::from_vec(self.field.eval(&x, lambda)?);
        let r = &self.pi_ker * g;
        Ok(r.iter().cloned().collect())
    }

    /// Kernel coordinates of an ambient displacement from X0.
    pub fn kernel_coords(&self, x: &[f64]) -> Vec<f64> {
        let d = DVector::from_column_slice(x) - DVector::from_column_slice(&self.x0);
        let u = &self.pi_ker * d;
        u.iter().cloned().collect()
    }
}

/// Build the numeric reduction at an equilibrium (X0, λ0) fixed by the whole
/// monoid action.
pub fn ls_reduce(
    fund: &FundamentalNetwork,
    rep: &Representation,
    rf: &Expr,
    x0: &[f64],
    lambda0: f64,
) -> Result<ReducedSystem> {
    let field = ResponseField::new(fund.base(), rf.clone())?;
    let n = field.dim();
    if rep.ambient_dim() != n || x0.len() != n {
        return Err(NetsymError::InvalidSpec(
            "representation and point must match the fundamental network dimension".into(),
        ));
    }
    let g0 = field.eval(x0, lambda0)?;
    let res = g0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if res >= EQUILIBRIUM_TOL {
        return Err(NetsymError::NotEquilibrium(res));
    }
    let mut sym_res = 0.0f64;
    for a in rep.matrices() {
        let ax = a.apply_f64(x0);
        for (p, q) in ax.iter().zip(x0) {
            sym_res = sym_res.max((p - q).abs());
        }
    }
    if sym_res >= SYMMETRY_TOL {
        return Err(NetsymError::NotSymmetricPoint(sym_res));
    }

    let jac = field.jacobian(x0, lambda0)?;
    let l0 = DMatrix::from_fn(n, n, |i, j| jac[i][j]);
    let (s, _nil) = jordan_chevalley_f64(&l0)?;

    let svd = s.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let tol = RANK_TOL * smax.max(1.0);
    let v_t = svd.v_t.as_ref().expect("svd with v requested");
    let u_m = svd.u.as_ref().expect("svd with u requested");
    let mut ker_cols: Vec<DVector<f64>> = Vec::new();
    let mut im_cols: Vec<DVector<f64>> = Vec::new();
    for (i, sv) in svd.singular_values.iter().enumerate() {
        if *sv <= tol {
            ker_cols.push(v_t.row(i).transpose());
        } else {
            im_cols.push(u_m.column(i).into_owned());
        }
    }
    let k = ker_cols.len();
    let q = im_cols.len();
    let kernel_basis = DMatrix::from_fn(n, k, |i, j| ker_cols[j][i]);
    let image_basis = DMatrix::from_fn(n, q, |i, j| im_cols[j][i]);
    let mut m = DMatrix::zeros(n, n);
    for j in 0..k {
        m.set_column(j, &kernel_basis.column(j));
    }
    for j in 0..q {
        m.set_column(k + j, &image_basis.column(j));
    }
    let minv = m.clone().try_inverse().ok_or_else(|| {
        NetsymError::IllConditioned("kernel and image bases are not complementary".into())
    })?;
    let pi_ker = minv.rows(0, k).into_owned();
    let pi_im = minv.rows(k, q).into_owned();
    let p_ker = &kernel_basis * &pi_ker;
    let p_im = &image_basis * &pi_im;

    Ok(ReducedSystem {
        x0: x0.to_vec(),
        lambda0,
        l0,
        kernel_basis,
        image_basis,
        p_ker,
        p_im,
        pi_ker,
        pi_im,
        field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bifurcation::family::kernel_taylor_family;
    use crate::dsl::parse_simple;
    use crate::network::{catalogue_table, fundamental_from_table, rep_matrices};
    use crate::rat::rat;
    use crate::repalg::{decompose_report, endomorphism_basis, radical_basis, DEFAULT_SEED};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sigma1_setup() -> (FundamentalNetwork, Representation) {
        let table = catalogue_table(3, 1).unwrap();
        let fund = fundamental_from_table(&table).unwrap();
        let rep = rep_matrices(&fund, 1);
        (fund, rep)
    }

    #[test]
    fn zero_field_reduces_to_zero() {
        let (fund, rep) = sigma1_setup();
        let rf = Expr::num(0.0);
        let red = reduced_taylor(&fund, &rep, &rf, &[0.0; 3], 0.0).unwrap();
        assert_eq!(red.kernel_dim(), 3);
        assert!(red.coeffs.iter().all(|row| row.iter().all(|c| c.is_zero())));
        let sys = ls_reduce(&fund, &rep, &rf, &[0.0; 3], 0.0).unwrap();
        assert_eq!(sys.kernel_dim(), 3);
        let r = sys.eval_r(&[0.3, -0.1, 0.7], 0.2).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn linear_field_reduces_to_l0_restriction() {
        // for a linear Γ the implicit solve is exact and r is the
        // restriction of L0 to ker L0^S
        let (fund, rep) = sigma1_setup();
        let rf = parse_simple("x3 - x1").unwrap();
        let red = reduced_taylor(&fund, &rep, &rf, &[0.0; 3], 0.0).unwrap();
        let k = red.kernel_dim();
        assert!(k > 0);
        let b_ker = RatMat::from_cols(3, &red.kernel_basis);
        // r must be exactly linear with matrix π_ker L0 B_ker
        for (i, row) in red.coeffs.iter().enumerate() {
            for ((alpha, beta), c) in red.monomials.iter().zip(row) {
                if c.is_zero() {
                    continue;
                }
                assert_eq!((alpha.iter().sum::<u32>(), *beta), (1, 0));
                let j = alpha.iter().position(|&e| e == 1).unwrap();
                // compare against kernel coordinates of L0 B_ker e_j
                let l0col = red.l0.mul_vec(&red.kernel_basis[j]);
                let uc = b_ker.solve(&l0col).unwrap();
                assert_eq!(*c, uc[i]);
            }
        }
        // numeric side agrees on the kernel dimension
        let sys = ls_reduce(&fund, &rep, &rf, &[0.0; 3], 0.0).unwrap();
        assert_eq!(sys.kernel_dim(), k);
    }

    #[test]
    fn sigma1_instance_matches_catalogue_normal_form() {
        let (fund, rep) = sigma1_setup();
        let rf = parse_simple("lambda*x1 + x3 - x1^2").unwrap();
        let red = reduced_taylor(&fund, &rep, &rf, &[0.0; 3], 0.0).unwrap();
        assert_eq!(red.kernel_dim(), 2);
        // the kernel is {X2 = 0}: echelonized basis {e1, e3}
        assert_eq!(
            red.kernel_basis,
            vec![
                vec![rat(1), rat(0), rat(0)],
                vec![rat(0), rat(0), rat(1)]
            ]
        );
        // truncated reduced field in coordinates (X1, X3):
        //   r1 = λX1 + X3 − X1², r3 = λX3 − X3², matching the catalogue
        //   normal form with a = 1, b = 1, c = −1
        assert_eq!(red.coefficient(0, &[1, 0], 1), rat(1)); // a λX1
        assert_eq!(red.coefficient(0, &[0, 1], 0), rat(1)); // b X3
        assert_eq!(red.coefficient(0, &[2, 0], 0), rat(-1)); // c X1²
        assert_eq!(red.coefficient(1, &[0, 1], 1), rat(1)); // a λX3
        assert_eq!(red.coefficient(1, &[0, 2], 0), rat(-1)); // c X3²
        // r3 has no dependence on X1 through quadratic order
        assert_eq!(red.coefficient(1, &[1, 0], 0), rat(0));
        assert_eq!(red.coefficient(1, &[1, 0], 1), rat(0));
        assert_eq!(red.coefficient(1, &[1, 1], 0), rat(0));
        assert_eq!(red.coefficient(1, &[2, 0], 0), rat(0));

        // the same coefficients come out of the family fit against the
        // 2-dimensional summand
        let report = decompose_report(&rep, DEFAULT_SEED).unwrap();
        let idx = report.summands.iter().position(|s| s.sub.dim() == 2).unwrap();
        let sub = &report.summands[idx].sub;
        let end = endomorphism_basis(&sub.action);
        let rad = radical_basis(&end);
        let family = kernel_taylor_family(&sub.action, &rad);
        let fit = summand_fit(&red, &[sub], 0, &family).unwrap().unwrap();
        // identify coefficients through the instantiated per-monomial values
        let inst = family.instantiate(&fit);
        let t_lu1 = family
            .monomials
            .iter()
            .position(|m| m.alpha == vec![1, 0] && m.beta == 1)
            .unwrap();
        let t_u2 = family
            .monomials
            .iter()
            .position(|m| m.alpha == vec![0, 1] && m.beta == 0)
            .unwrap();
        let t_u1sq = family
            .monomials
            .iter()
            .position(|m| m.alpha == vec![2, 0] && m.beta == 0)
            .unwrap();
        // basis columns of the summand are supported on cells 1 and 3, so
        // its coordinates are scalings of (X1, X3); λu and u² coefficients
        // transform like the catalogue's a and c under that scaling
        for col in &sub.basis {
            assert!(col[1].is_zero());
        }
        let s1 = &sub.basis[0][0];
        let s2 = &sub.basis[1][2];
        assert!(!s1.is_zero() && !s2.is_zero());
        assert_eq!(inst[0][t_lu1], rat(1)); // a is scale invariant
        assert_eq!(&inst[0][t_u2] * s2, s1 * rat(1)); // b
        assert_eq!(&inst[0][t_u1sq] * s1, rat(-1)); // c
    }

    #[test]
    fn numeric_reduction_invariants() {
        let (fund, rep) = sigma1_setup();
        let rf = parse_simple("lambda*x1 + x3 - x1^2").unwrap();
        let sys = ls_reduce(&fund, &rep, &rf, &[0.0; 3], 0.0).unwrap();
        assert_eq!(sys.kernel_dim(), 2);

        // projections commute with every A_σ
        for a in rep.matrices() {
            let af = DMatrix::from_fn(3, 3, |i, j| a.get(i, j).to_f64().unwrap());
            for p in [&sys.p_ker, &sys.p_im] {
                let comm = &af * p - p * &af;
                assert!(comm.norm() < 1e-8, "projection fails to commute");
            }
        }

        // r is equivariant under the induced kernel action
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for a in rep.matrices() {
            let af = DMatrix::from_fn(3, 3, |i, j| a.get(i, j).to_f64().unwrap());
            let c_sigma = &sys.pi_ker * &af * &sys.kernel_basis;
            for _ in 0..10 {
                let u = DVector::from_fn(2, |_, _| rng.gen_range(-0.05..0.05));
                let lam = rng.gen_range(-0.01..0.01);
                let cu = &c_sigma * &u;
                let r_cu =
                    DVector::from_vec(sys.eval_r(cu.as_slice(), lam).unwrap());
                let c_ru = &c_sigma
                    * DVector::from_vec(sys.eval_r(u.as_slice(), lam).unwrap());
                assert!((r_cu - c_ru).norm() < 1e-8, "r is not equivariant");
            }
        }

        // Jacobian of r at (0, λ0) is the restriction of L0 to the kernel
        let restricted = &sys.pi_ker * &sys.l0 * &sys.kernel_basis;
        let h = 1e-6;
        for j in 0..2 {
            let mut up = [0.0; 2];
            up[j] = h;
            let mut um = [0.0; 2];
            um[j] = -h;
            let rp = sys.eval_r(&up, 0.0).unwrap();
            let rm = sys.eval_r(&um, 0.0).unwrap();
            for i in 0..2 {
                let d = (rp[i] - rm[i]) / (2.0 * h);
                assert!((d - restricted[(i, j)]).abs() < 1e-8);
            }
        }
        // and that restriction is nilpotent
        let n2 = &restricted * &restricted;
        assert!(n2.norm() < 1e-8);
    }

    #[test]
    fn rejects_bad_base_points() {
        let (fund, rep) = sigma1_setup();
        let rf = parse_simple("lambda*x1 + x3 - x1^2").unwrap();
        let err = ls_reduce(&fund, &rep, &rf, &[0.5, 0.5, 0.5], 0.0).unwrap_err();
        assert!(matches!(err, NetsymError::NotEquilibrium(_)));
        let rf0 = Expr::num(0.0);
        let err = ls_reduce(&fund, &rep, &rf0, &[1.0, 0.0, 0.0], 0.0).unwrap_err();
        assert!(matches!(err, NetsymError::NotSymmetricPoint(_)));
        let err = reduced_taylor(&fund, &rep, &rf, &[0.5, 0.5, 0.5], 0.0).unwrap_err();
        assert!(matches!(err, NetsymError::NotEquilibrium(_)));
        let err = reduced_taylor(&fund, &rep, &rf0, &[1.0, 0.0, 0.0], 0.0).unwrap_err();
        assert!(matches!(err, NetsymError::NotSymmetricPoint(_)));
    }

    #[test]
    fn division_by_variable_is_rejected() {
        let (fund, rep) = sigma1_setup();
        let rf = parse_simple("x1 / x2").unwrap();
        let err = reduced_taylor(&fund, &rep, &rf, &[0.0; 3], 0.0).unwrap_err();
        assert!(matches!(err, NetsymError::InvalidSpec(_)));
        // dividing by a constant is fine
        let rf = parse_simple("x1 / 2").unwrap();
        let red = reduced_taylor(&fund, &rep, &rf, &[0.0; 3], 0.0).unwrap();
        assert!(!red.l0.is_zero());
    }
}
