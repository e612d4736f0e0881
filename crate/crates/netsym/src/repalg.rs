//! Endomorphism algebras and indecomposable decompositions of monoid
//! representations, computed exactly over the rationals.
//!
//! A summand is split off a subrepresentation W by picking a random element
//! E of the commutant End(W), factoring its minimal polynomial into coprime
//! pieces and taking generalized kernels. Recursion bottoms out when End(W)
//! is a local algebra, i.e. End(W)/rad is a division algebra — over the
//! reals that quotient has dimension 1, 2 or 4 (real, complex, quaternionic
//! type).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NetsymError, Result};
use crate::network::Representation;
use crate::rat::{rat, Rat, RatMat, RatPoly};
use num_traits::{One, Signed, Zero};

/// Ambient-dimension cap for the exact decomposition pipeline.
pub const DECOMPOSE_AMBIENT_BOUND: usize = 64;

pub const DEFAULT_SEED: u64 = 0x5EED;

/// An invariant subspace with the restricted monoid action.
#[derive(Debug, Clone)]
pub struct SubRep {
    pub ambient_dim: usize,
    /// columns spanning the subspace, each of length `ambient_dim`
    pub basis: Vec<Vec<Rat>>,
    /// restricted action matrices, one per monoid element, size dim × dim
    pub action: Vec<RatMat>,
}

impl SubRep {
    pub fn whole(rep: &Representation) -> SubRep {
        let n = rep.ambient_dim();
        SubRep {
            ambient_dim: n,
            basis: (0..n)
                .map(|j| {
                    (0..n)
                        .map(|i| if i == j { Rat::one() } else { Rat::zero() })
                        .collect()
                })
                .collect(),
            action: rep.matrices().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis_matrix(&self) -> RatMat {
        RatMat::from_cols(self.ambient_dim, &self.basis)
    }

    /// Restrict to the span of `cols` (coordinates in W). The span must be
    /// invariant under the restricted action; returns None otherwise.
    fn restrict(&self, cols: &[Vec<Rat>]) -> Option<SubRep> {
        let b = RatMat::from_cols(self.dim(), cols);
        let mut action = Vec::with_capacity(self.action.len());
        for a in &self.action {
            let ab = a.mul(&b);
            // solve B M = A B columnwise
            let mut m = RatMat::zeros(cols.len(), cols.len());
            for j in 0..cols.len() {
                let col: Vec<Rat> = (0..self.dim()).map(|i| ab.get(i, j).clone()).collect();
                let x = b.solve(&col)?;
                // verify (solve zero-fills free vars; must check residual)
                let back = b.mul_vec(&x);
                if back != col {
                    return None;
                }
                for i in 0..cols.len() {
                    m.set(i, j, x[i].clone());
                }
            }
            action.push(m);
        }
        // ambient basis for the new subrep: basis_matrix * cols
        let big = self.basis_matrix().mul(&b);
        let basis = (0..cols.len())
            .map(|j| (0..self.ambient_dim).map(|i| big.get(i, j).clone()).collect())
            .collect();
        Some(SubRep {
            ambient_dim: self.ambient_dim,
            basis,
            action,
        })
    }
}

/// Basis of the commutant {X : X·Aσ = Aσ·X for all σ} of the (restricted)
/// action, in a deterministic order.
pub fn endomorphism_basis(action: &[RatMat]) -> Vec<RatMat> {
    let w = action.first().map_or(0, |a| a.rows());
    if w == 0 {
        return vec![];
    }
    // unknowns: X(i,j) flattened row-major; equations: (X A − A X)(i,j) = 0
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for a in action {
        for i in 0..w {
            for j in 0..w {
                let mut row = vec![Rat::zero(); w * w];
                // (X A)(i,j) = Σ_k X(i,k) A(k,j)
                for k in 0..w {
                    row[i * w + k] = &row[i * w + k] + a.get(k, j);
                }
                // −(A X)(i,j) = −Σ_k A(i,k) X(k,j)
                for k in 0..w {
                    row[k * w + j] = &row[k * w + j] - a.get(i, k);
                }
                rows.push(row);
            }
        }
    }
    let m = RatMat::from_rows(rows);
    m.nullspace()
        .into_iter()
        .map(|v| {
            let mut x = RatMat::zeros(w, w);
            for i in 0..w {
                for j in 0..w {
                    x.set(i, j, v[i * w + j].clone());
                }
            }
            x
        })
        .collect()
}

/// Radical of the matrix algebra spanned by `basis` (which must be closed
/// under multiplication — a commutant always is): the kernel of the trace
/// form x ↦ (tr(x·b_i))_i, intersected with the algebra.
pub fn radical_basis(basis: &[RatMat]) -> Vec<RatMat> {
    if basis.is_empty() {
        return vec![];
    }
    let k = basis.len();
    let mut gram = RatMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gram.set(i, j, basis[i].mul(&basis[j]).trace());
        }
    }
    gram.nullspace()
        .into_iter()
        .map(|c| {
            let mut x = RatMat::zeros(basis[0].rows(), basis[0].cols());
            for (ci, b) in c.iter().zip(basis) {
                if !ci.is_zero() {
                    x = x.add(&b.scale(ci));
                }
            }
            x
        })
        .collect()
}

/// The commutant of a (restricted) action together with its radical.
#[derive(Debug, Clone)]
pub struct EndoAlgebra {
    pub ambient_dim: usize,
    pub basis: Vec<RatMat>,
    pub radical_basis: Vec<RatMat>,
    pub quotient_dim: usize,
}

pub fn endo_algebra(action: &[RatMat]) -> EndoAlgebra {
    let basis = endomorphism_basis(action);
    let rad = radical_basis(&basis);
    let quotient_dim = basis.len() - rad.len();
    EndoAlgebra {
        ambient_dim: action.first().map_or(0, |a| a.rows()),
        basis,
        radical_basis: rad,
        quotient_dim,
    }
}

/// Basis of the enveloping algebra: the span of all products of action
/// matrices (the identity is among them for a monoid), closed under
/// multiplication to a fixpoint.
pub fn enveloping_basis(action: &[RatMat]) -> Vec<RatMat> {
    let w = action.first().map_or(0, |a| a.rows());
    if w == 0 {
        return vec![];
    }
    let mut span: Vec<Vec<Rat>> = Vec::new(); // RREF rows of flattened elements
    let mut basis: Vec<RatMat> = Vec::new();
    let add = |m: &RatMat, span: &mut Vec<Vec<Rat>>, basis: &mut Vec<RatMat>| -> bool {
        let mut rows = span.clone();
        rows.push(flatten(m));
        let (r, _) = RatMat::from_rows(rows).rref();
        let rank: usize = (0..r.rows())
            .filter(|&i| (0..r.cols()).any(|j| !r.get(i, j).is_zero()))
            .count();
        if rank > span.len() {
            *span = (0..rank)
                .map(|i| (0..r.cols()).map(|j| r.get(i, j).clone()).collect())
                .collect();
            basis.push(m.clone());
            true
        } else {
            false
        }
    };
    for a in action {
        add(a, &mut span, &mut basis);
    }
    let mut frontier = 0;
    while frontier < basis.len() {
        let len = basis.len();
        for i in 0..len {
            for j in 0..len {
                if i < frontier && j < frontier {
                    continue;
                }
                let prod = basis[i].mul(&basis[j]);
                add(&prod, &mut span, &mut basis);
            }
        }
        frontier = len;
    }
    basis
}

/// Every element of a local algebra's basis (plus `samples` random
/// combinations) is invertible or nilpotent; used as a certificate that a
/// summand's End is local.
pub fn invertible_or_nilpotent_certificate(end: &[RatMat], seed: u64, samples: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<RatMat> = end.to_vec();
    for _ in 0..samples {
        candidates.push(random_commutant_element(end, &mut rng));
    }
    candidates
        .iter()
        .all(|e| e.is_invertible() || e.is_nilpotent())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DivisionType {
    Real,
    Complex,
    Quaternionic,
}

/// Full description of one indecomposable summand.
#[derive(Debug, Clone)]
pub struct Summand {
    pub sub: SubRep,
    pub end_dim: usize,
    pub radical_dim: usize,
    pub division_type: DivisionType,
    pub indecomposable: bool,
    pub irreducible: bool,
}

/// Result of `decompose_report`: the indecomposable summands grouped into
/// isomorphism classes.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub summands: Vec<Summand>,
    /// partition of summand indices into isomorphism classes
    pub iso_classes: Vec<Vec<usize>>,
    pub multiplicity_free: bool,
}

/// Minimal polynomial of a square rational matrix.
pub fn min_poly(e: &RatMat) -> RatPoly {
    let n = e.rows();
    // find the least k with I, E, …, E^k dependent
    let mut powers: Vec<Vec<Rat>> = Vec::new();
    let mut cur = RatMat::identity(n);
    for _ in 0..=n {
        powers.push(flatten(&cur));
        let m = RatMat::from_cols(n * n, &powers);
        let ns = m.nullspace();
        if let Some(v) = ns.first() {
            // lowest-degree dependency; normalize monic
            let lead = v.last().unwrap().clone();
            return RatPoly::new(v.iter().map(|c| c / &lead).collect());
        }
        cur = cur.mul(e);
    }
    unreachable!("minimal polynomial must exist by Cayley-Hamilton");
}

fn flatten(m: &RatMat) -> Vec<Rat> {
    let (r, c) = (m.rows(), m.cols());
    (0..r)
        .flat_map(|i| (0..c).map(move |j| (i, j)))
        .map(|(i, j)| m.get(i, j).clone())
        .collect()
}

/// Factor a monic rational polynomial into pairwise-coprime monic factors.
/// Exact via squarefree factorization and rational roots; pieces that resist
/// both are split further with a numeric root-clustering heuristic whose
/// candidate factors are verified by exact division. Any still-unfactored
/// remainder is returned as-is (it is coprime to the rest).
pub fn coprime_factors(p: &RatPoly) -> Vec<(RatPoly, usize)> {
    let mut out: Vec<(RatPoly, usize)> = Vec::new();
    for (sf, mult) in p.squarefree_factorization() {
        let (roots, mut rest) = sf.rational_roots();
        for r in roots {
            out.push((RatPoly::new(vec![-r.clone(), Rat::one()]), mult));
        }
        if rest.degree() >= 3 {
            // heuristic: peel verified quadratic factors found numerically
            loop {
                match peel_quadratic(&rest) {
                    Some((q, r2)) if rest.degree() > 2 => {
                        out.push((q, mult));
                        rest = r2;
                        if rest.degree() <= 2 {
                            break;
                        }
                    }
                    _ => break,
                }
            }
        }
        if rest.degree() >= 1 {
            out.push((rest, mult));
        }
    }
    out
}

/// Find one exact monic quadratic factor of `p` (degree ≥ 3) by clustering
/// numeric roots into conjugate pairs and rationalizing the candidate
/// coefficients; verified by exact division.
fn peel_quadratic(p: &RatPoly) -> Option<(RatPoly, RatPoly)> {
    use num_traits::ToPrimitive;
    let deg = p.degree();
    // companion matrix eigenvalues
    let coeffs: Vec<f64> = p.coeffs().iter().map(|c| c.to_f64().unwrap()).collect();
    let lead = coeffs[deg];
    let mut comp = nalgebra::DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let eig = comp.complex_eigenvalues();
    let roots: Vec<(f64, f64)> = eig.iter().map(|c| (c.re, c.im)).collect();
    for (re, im) in &roots {
        // conjugate pair (or two reals treated via their pair sums)
        let (s, q) = if im.abs() > 1e-9 {
            (2.0 * re, re * re + im * im)
        } else {
            continue;
        };
        if let (Some(sr), Some(qr)) = (rationalize(s), rationalize(q)) {
            let cand = RatPoly::new(vec![qr, -sr, Rat::one()]);
            let (quot, rem) = p.div_rem(&cand);
            if rem.is_zero() {
                return Some((cand, quot));
            }
        }
    }
    None
}

/// Continued-fraction rationalization with bounded denominator.
fn rationalize(x: f64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (1i128, 0i128, x.floor() as i128, 1i128);
    let mut frac = x - x.floor();
    for _ in 0..40 {
        let approx = p1 as f64 / q1 as f64;
        if (approx - x).abs() < 1e-9 * (1.0 + x.abs()) {
            return Some(Rat::new(
                num_bigint::BigInt::from(p1),
                num_bigint::BigInt::from(q1),
            ));
        }
        if frac.abs() < 1e-12 {
            break;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as i128;
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > 1_000_000 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    if (p1 as f64 / q1 as f64 - x).abs() < 1e-9 * (1.0 + x.abs()) {
        Some(Rat::new(
            num_bigint::BigInt::from(p1),
            num_bigint::BigInt::from(q1),
        ))
    } else {
        None
    }
}

fn discriminant_sign(q: &RatPoly) -> i32 {
    // for monic x² + bx + c: b² − 4c
    let c = &q.coeffs()[0];
    let b = &q.coeffs()[1];
    let d = b * b - rat(4) * c;
    if d.is_zero() {
        0
    } else if d.is_positive() {
        1
    } else {
        -1
    }
}

/// Split W along the coprime factorization of the minimal polynomial of E:
/// W = ⊕ ker p_i(E)^{m_i}. Returns None when the factorization is primary.
fn split_by(sub: &SubRep, e: &RatMat) -> Option<Vec<SubRep>> {
    let mp = min_poly(e);
    let factors = coprime_factors(&mp);
    if factors.len() < 2 {
        return None;
    }
    let mut parts = Vec::new();
    for (f, mult) in &factors {
        let fm = f.eval_matrix(e).pow(*mult);
        let kernel = fm.nullspace();
        debug_assert!(!kernel.is_empty());
        let part = sub
            .restrict(&kernel)
            .expect("generalized eigenspace of a commutant element is invariant");
        parts.push(part);
    }
    debug_assert_eq!(parts.iter().map(|p| p.dim()).sum::<usize>(), sub.dim());
    Some(parts)
}

fn random_commutant_element(end: &[RatMat], rng: &mut ChaCha8Rng) -> RatMat {
    let mut e = RatMat::zeros(end[0].rows(), end[0].cols());
    for b in end {
        let c = rat(rng.gen_range(-9i64..=9));
        if !c.is_zero() {
            e = e.add(&b.scale(&c));
        }
    }
    e
}

/// Decide locality of End(W) and its division type, or find an element that
/// splits (returned as Err(matrix) for the caller to split on).
fn classify_end(
    sub: &SubRep,
    end: &[RatMat],
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Summand, RatMat> {
    let rad = radical_basis(end);
    let q_dim = end.len() - rad.len();
    // check every basis element and a few random ones: in a local algebra the
    // min poly mod radical must be primary (single irreducible factor)
    let mut candidates: Vec<RatMat> = end.to_vec();
    for _ in 0..10 {
        candidates.push(random_commutant_element(end, rng));
    }
    for e in &candidates {
        let mp = min_poly(e);
        if coprime_factors(&mp).len() >= 2 {
            return Err(e.clone());
        }
    }
    let division_type = match q_dim {
        1 => DivisionType::Real,
        2 => {
            // distinguish ℂ from the split case ℝ⊕ℝ hiding behind an
            // irrational quadratic: a complex-type algebra has an element
            // whose min poly mod nilpotents is an irreducible quadratic with
            // negative discriminant
            let has_neg = candidates.iter().any(|e| {
                let sf = min_poly(e).squarefree_part();
                sf.degree() == 2 && discriminant_sign(&sf) < 0
            });
            if has_neg {
                DivisionType::Complex
            } else {
                // positive-discriminant quadratic: W splits over ℝ but not
                // over ℚ — outside this pipeline's exact scope
                return Err(candidates
                    .iter()
                    .find(|e| min_poly(e).squarefree_part().degree() == 2)
                    .cloned()
                    .unwrap_or_else(|| end[0].clone()));
            }
        }
        4 => DivisionType::Quaternionic,
        _ => {
            // quotient dimension other than 1/2/4 means W still splits
            return Err(random_commutant_element(end, rng));
        }
    };
    // An indecomposable is irreducible exactly when the algebra generated by
    // the action matrices is semisimple: its radical spans an invariant
    // proper subspace otherwise.
    let irreducible = radical_basis(&enveloping_basis(&sub.action)).is_empty();
    Ok(Summand {
        sub: sub.clone(),
        end_dim: end.len(),
        radical_dim: rad.len(),
        division_type,
        indecomposable: true,
        irreducible,
    })
}

/// Decompose the representation into indecomposable summands over ℝ.
/// Summands are sorted by (dimension, lexicographic ambient basis) so the
/// output is deterministic for a fixed seed.
pub fn decompose(rep: &Representation, seed: u64) -> Result<Vec<Summand>> {
    if rep.ambient_dim() > DECOMPOSE_AMBIENT_BOUND {
        return Err(NetsymError::BoundExceeded {
            requested: rep.ambient_dim(),
            bound: DECOMPOSE_AMBIENT_BOUND,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Summand> = Vec::new();
    let mut stack = vec![SubRep::whole(rep)];
    while let Some(sub) = stack.pop() {
        let end = endomorphism_basis(&sub.action);
        assert!(!end.is_empty(), "identity always commutes");
        let mut split_done = false;
        let mut attempts = 0;
        loop {
            match classify_end(&sub, &end, &mut rng) {
                Ok(s) => {
                    out.push(s);
                    break;
                }
                Err(e) => match split_by(&sub, &e) {
                    Some(parts) => {
                        stack.extend(parts);
                        split_done = true;
                        break;
                    }
                    None => {
                        attempts += 1;
                        if attempts >= 10 {
                            return Err(NetsymError::SplitFailure(
                                "no splitting element found after 10 attempts".into(),
                            ));
                        }
                    }
                },
            }
        }
        let _ = split_done;
    }
    out.sort_by(|a, b| {
        a.sub
            .dim()
            .cmp(&b.sub.dim())
            .then_with(|| a.sub.basis.cmp(&b.sub.basis))
    });
    Ok(out)
}

/// Decompose and group the summands into isomorphism classes.
pub fn decompose_report(rep: &Representation, seed: u64) -> Result<DecompositionReport> {
    let summands = decompose(rep, seed)?;
    let mut iso_classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..summands.len() {
        let found = iso_classes.iter_mut().find(|class| {
            are_isomorphic(&summands[class[0]].sub, &summands[i].sub, seed)
        });
        match found {
            Some(class) => class.push(i),
            None => iso_classes.push(vec![i]),
        }
    }
    let multiplicity_free = iso_classes.iter().all(|c| c.len() == 1);
    Ok(DecompositionReport {
        summands,
        iso_classes,
        multiplicity_free,
    })
}

/// Basis of Hom(A, B): matrices X with action_B[σ]·X = X·action_A[σ].
pub fn hom_space(a: &SubRep, b: &SubRep) -> Vec<RatMat> {
    assert_eq!(a.action.len(), b.action.len());
    let (da, db) = (a.dim(), b.dim());
    if da == 0 || db == 0 {
        return vec![];
    }
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for (ma, mb) in a.action.iter().zip(&b.action) {
        for i in 0..db {
            for j in 0..da {
                let mut row = vec![Rat::zero(); db * da];
                // (B X)(i,j) = Σ_k B(i,k) X(k,j)
                for k in 0..db {
                    row[k * da + j] = &row[k * da + j] + mb.get(i, k);
                }
                // −(X A)(i,j)
                for k in 0..da {
                    row[i * da + k] = &row[i * da + k] - ma.get(k, j);
                }
                rows.push(row);
            }
        }
    }
    RatMat::from_rows(rows)
        .nullspace()
        .into_iter()
        .map(|v| {
            let mut x = RatMat::zeros(db, da);
            for i in 0..db {
                for j in 0..da {
                    x.set(i, j, v[i * da + j].clone());
                }
            }
            x
        })
        .collect()
}

/// Isomorphism test with certificate: sample random elements of Hom(A,B)
/// (seeded, 20 tries) looking for an invertible one; also accept an
/// invertible product of a Hom(A,B) and a Hom(B,A) sample.
pub fn are_isomorphic(a: &SubRep, b: &SubRep, seed: u64) -> bool {
    if a.dim() != b.dim() {
        return false;
    }
    if a.dim() == 0 {
        return true;
    }
    let hab = hom_space(a, b);
    if hab.is_empty() {
        return false;
    }
    let hba = hom_space(b, a);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |basis: &[RatMat], rng: &mut ChaCha8Rng| {
        let mut x = RatMat::zeros(basis[0].rows(), basis[0].cols());
        for m in basis {
            let c = rat(rng.gen_range(-9i64..=9));
            if !c.is_zero() {
                x = x.add(&m.scale(&c));
            }
        }
        x
    };
    for _ in 0..20 {
        let x = sample(&hab, &mut rng);
        if x.is_invertible() {
            return true;
        }
        if !hba.is_empty() {
            let y = sample(&hba, &mut rng);
            if y.mul(&x).is_invertible() {
                return true;
            }
        }
    }
    false
}

/// Krull-Schmidt check: the two decompositions have matching multisets of
/// isomorphism classes.
pub fn krull_schmidt_check(a: &[Summand], b: &[Summand], seed: u64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut used = vec![false; b.len()];
    for sa in a {
        let mut found = false;
        for (i, sb) in b.iter().enumerate() {
            if !used[i] && are_isomorphic(&sa.sub, &sb.sub, seed) {
                used[i] = true;
                found = true;
                break;
            }
        }
        if !found {
            return false;
        }
    }
    true
}
