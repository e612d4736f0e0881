//! Exact rational matrices and univariate polynomials.
//!
//! Everything in the representation-algebra pipeline runs on these so that
//! decompositions and type labels are certificate grade.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Dense rational matrix, row major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatMat {
    rows: usize,
    cols: usize,
    data: Vec<Rat>,
}

impl RatMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RatMat {
            rows,
            cols,
            data: vec![Rat::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RatMat::zeros(n, n);
        for i in 0..n {
            m.set_one(i, i);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c));
        RatMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        RatMat::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| rat(v)).collect())
                .collect(),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rat {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rat) {
        self.data[i * self.cols + j] = v;
    }

    pub fn set_one(&mut self, i: usize, j: usize) {
        self.set(i, j, Rat::one());
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self.get(i, j).is_one()
                    } else {
                        self.get(i, j).is_zero()
                    }
                })
            })
    }

    pub fn transpose(&self) -> RatMat {
        let mut t = RatMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }

    pub fn add(&self, other: &RatMat) -> RatMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &RatMat) -> RatMat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        RatMat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, s: &Rat) -> RatMat {
        RatMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn mul(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.cols, other.rows);
        let mut out = RatMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let v = out.get(i, j) + a * b;
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j) * &v[j])
                    .fold(Rat::zero(), |a, b| a + b)
            })
            .collect()
    }

    pub fn apply_f64(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j).to_f64().unwrap_or(0.0) * x[j])
                    .sum()
            })
            .collect()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self.get(i, j).to_f64().unwrap_or(f64::NAN))
                    .collect()
            })
            .collect()
    }

    pub fn trace(&self) -> Rat {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).fold(Rat::zero(), |acc, i| acc + self.get(i, i))
    }

    pub fn pow(&self, mut e: usize) -> RatMat {
        assert_eq!(self.rows, self.cols);
        let mut result = RatMat::identity(self.rows);
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    pub fn is_nilpotent(&self) -> bool {
        self.pow(self.rows.max(1)).is_zero()
    }

    /// Reduced row echelon form together with pivot column indices.
    pub fn rref(&self) -> (RatMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row >= m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            for j in 0..m.cols {
                let tmp = m.get(row, j).clone();
                let v = m.get(p, j).clone();
                m.set(row, j, v);
                m.set(p, j, tmp);
            }
            let inv = m.get(row, col).clone();
            for j in 0..m.cols {
                let v = m.get(row, j) / &inv;
                m.set(row, j, v);
            }
            for r in 0..m.rows {
                if r != row && !m.get(r, col).is_zero() {
                    let f = m.get(r, col).clone();
                    for j in 0..m.cols {
                        let v = m.get(r, j) - &f * m.get(row, j);
                        m.set(r, j, v);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the kernel, one vector per column, in the standard RREF
    /// back-substitution order (deterministic).
    pub fn nullspace(&self) -> Vec<Vec<Rat>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&fc| {
                let mut v = vec![Rat::zero(); self.cols];
                v[fc] = Rat::one();
                for (prow, &pcol) in pivots.iter().enumerate() {
                    v[pcol] = -r.get(prow, fc).clone();
                }
                v
            })
            .collect()
    }

    /// Basis of the column space: the columns at pivot positions of the
    /// transpose-free RREF computed on self.
    pub fn column_space(&self) -> Vec<Vec<Rat>> {
        let (_, pivots) = self.rref();
        pivots
            .iter()
            .map(|&c| (0..self.rows).map(|i| self.get(i, c).clone()).collect())
            .collect()
    }

    /// Solve `self * x = b`; `None` when inconsistent. Free variables are 0.
    pub fn solve(&self, b: &[Rat]) -> Option<Vec<Rat>> {
        assert_eq!(self.rows, b.len());
        let mut aug = RatMat::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let (r, pivots) = aug.rref();
        if pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![Rat::zero(); self.cols];
        for (prow, &pcol) in pivots.iter().enumerate() {
            x[pcol] = r.get(prow, self.cols).clone();
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<RatMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = RatMat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set_one(i, n + i);
        }
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return None;
        }
        let mut inv = RatMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.set(i, j, r.get(i, n + j).clone());
            }
        }
        Some(inv)
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    /// Stack columns into matrix form. `cols` are length-`rows` vectors.
    pub fn from_cols(rows: usize, cols: &[Vec<Rat>]) -> RatMat {
        let mut m = RatMat::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows);
            for i in 0..rows {
                m.set(i, j, c[i].clone());
            }
        }
        m
    }

    /// Characteristic polynomial by Faddeev-LeVerrier; coefficients of
    /// λ^0 .. λ^n so that p(λ) = det(λI − A).
    pub fn char_poly(&self) -> RatPoly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut coeffs = vec![Rat::zero(); n + 1];
        coeffs[n] = Rat::one();
        let mut m = RatMat::zeros(n, n);
        for k in 1..=n {
            // M_k = A·M_{k-1} + c_{n-k+1}·I,  c_{n-k} = −tr(A·M_k)/k
            m = self.mul(&m);
            for i in 0..n {
                let v = m.get(i, i) + &coeffs[n - k + 1];
                m.set(i, i, v);
            }
            coeffs[n - k] = -self.mul(&m).trace() / rat(k as i64);
        }
        RatPoly::new(coeffs)
    }
}

/// Univariate polynomial with rational coefficients, low degree first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatPoly {
    coeffs: Vec<Rat>,
}

impl RatPoly {
    pub fn new(mut coeffs: Vec<Rat>) -> Self {
        while coeffs.len() > 1 && coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(Rat::zero());
        }
        RatPoly { coeffs }
    }

    pub fn zero() -> Self {
        RatPoly::new(vec![Rat::zero()])
    }

    pub fn one() -> Self {
        RatPoly::new(vec![Rat::one()])
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        RatPoly::new(coeffs.iter().map(|&c| rat(c)).collect())
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn leading(&self) -> &Rat {
        self.coeffs.last().unwrap()
    }

    pub fn monic(&self) -> RatPoly {
        let l = self.leading().clone();
        if l.is_zero() || l.is_one() {
            return self.clone();
        }
        RatPoly::new(self.coeffs.iter().map(|c| c / &l).collect())
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        self.coeffs
            .iter()
            .rev()
            .fold(Rat::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_matrix(&self, a: &RatMat) -> RatMat {
        let n = a.rows();
        let mut acc = RatMat::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = a.mul(&acc);
            for i in 0..n {
                let v = acc.get(i, i) + c;
                acc.set(i, i, v);
            }
        }
        acc
    }

    pub fn derivative(&self) -> RatPoly {
        if self.coeffs.len() <= 1 {
            return RatPoly::zero();
        }
        RatPoly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| c * rat((i + 1) as i64))
                .collect(),
        )
    }

    pub fn add(&self, other: &RatPoly) -> RatPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        RatPoly::new(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero);
                    let b = other.coeffs.get(i).cloned().unwrap_or_else(Rat::zero);
                    a + b
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &RatPoly) -> RatPoly {
        if self.is_zero() || other.is_zero() {
            return RatPoly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + a * b;
            }
        }
        RatPoly::new(out)
    }

    /// Quotient and remainder of division by `d`.
    pub fn div_rem(&self, d: &RatPoly) -> (RatPoly, RatPoly) {
        assert!(!d.is_zero());
        let mut rem = self.coeffs.clone();
        let dd = d.degree();
        if self.degree() < dd || self.is_zero() {
            return (RatPoly::zero(), self.clone());
        }
        let mut quot = vec![Rat::zero(); self.degree() - dd + 1];
        let lead = d.leading().clone();
        for i in (dd..rem.len()).rev() {
            let c = &rem[i] / &lead;
            if c.is_zero() {
                continue;
            }
            quot[i - dd] = c.clone();
            for (k, dc) in d.coeffs.iter().enumerate() {
                rem[i - dd + k] = &rem[i - dd + k] - &c * dc;
            }
        }
        (RatPoly::new(quot), RatPoly::new(rem))
    }

    pub fn gcd(&self, other: &RatPoly) -> RatPoly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Squarefree part p / gcd(p, p').
    pub fn squarefree_part(&self) -> RatPoly {
        let g = self.gcd(&self.derivative());
        if g.degree() == 0 {
            return self.monic();
        }
        self.div_rem(&g).0.monic()
    }

    /// Yun's squarefree factorization: returns (factor, multiplicity) pairs
    /// with the factors squarefree, pairwise coprime, multiplicities
    /// ascending.
    pub fn squarefree_factorization(&self) -> Vec<(RatPoly, usize)> {
        let p = self.monic();
        if p.degree() == 0 {
            return vec![];
        }
        let dp = p.derivative();
        let a0 = p.gcd(&dp);
        let mut b = p.div_rem(&a0).0;
        let mut c = dp.div_rem(&a0).0;
        let mut d = c.add(&b.derivative().mul(&RatPoly::from_i64(&[-1])));
        let mut out = Vec::new();
        let mut mult = 1;
        while b.degree() > 0 {
            let a = b.gcd(&d);
            if a.degree() > 0 {
                out.push((a.monic(), mult));
            }
            b = b.div_rem(&a).0;
            c = d.div_rem(&a).0;
            d = c.add(&b.derivative().mul(&RatPoly::from_i64(&[-1])));
            mult += 1;
        }
        out
    }

    /// All rational roots with the quotient after dividing them out.
    pub fn rational_roots(&self) -> (Vec<Rat>, RatPoly) {
        let mut p = self.monic();
        let mut roots = Vec::new();
        loop {
            if p.degree() == 0 {
                break;
            }
            // clear denominators, apply the rational root theorem
            let lcm = p
                .coeffs
                .iter()
                .map(|c| c.denom().clone())
                .fold(BigInt::one(), |a, b| {
                    &a * &b / num_integer_gcd(&a, &b)
                });
            let ints: Vec<BigInt> = p.coeffs.iter().map(|c| c.numer() * &lcm / c.denom()).collect();
            let a0 = ints[0].clone();
            let an = ints.last().unwrap().clone();
            if a0.is_zero() {
                roots.push(Rat::zero());
                p = p.div_rem(&RatPoly::from_i64(&[0, 1])).0;
                continue;
            }
            let mut found = None;
            'search: for pnum in divisors(&a0.abs()) {
                for qden in divisors(&an.abs()) {
                    for sign in [1i64, -1] {
                        let cand = Rat::new(&pnum * BigInt::from(sign), qden.clone());
                        if p.eval(&cand).is_zero() {
                            found = Some(cand);
                            break 'search;
                        }
                    }
                }
            }
            match found {
                Some(r) => {
                    p = p
                        .div_rem(&RatPoly::new(vec![-r.clone(), Rat::one()]))
                        .0;
                    roots.push(r);
                }
                None => break,
            }
        }
        roots.sort();
        (roots, p)
    }
}

fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let mut a = a.abs();
    let mut b = b.abs();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    if a.is_zero() {
        BigInt::one()
    } else {
        a
    }
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    // small-magnitude divisors only; falls back to 1 and |n| for large n
    if let Some(v) = n.to_i64() {
        let v = v.abs().max(1);
        let mut out: Vec<i64> = (1..=((v as f64).sqrt() as i64 + 1))
            .filter(|d| v % d == 0)
            .flat_map(|d| [d, v / d])
            .collect();
        out.sort_unstable();
        out.dedup();
        out.into_iter().map(BigInt::from).collect()
    } else {
        vec![BigInt::one(), n.abs()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_and_nullspace() {
        let m = RatMat::from_i64_rows(&[&[1, 2, 3], &[2, 4, 6], &[1, 1, 1]]);
        assert_eq!(m.rank(), 2);
        let ns = m.nullspace();
        assert_eq!(ns.len(), 1);
        for v in &ns {
            assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = RatMat::from_i64_rows(&[&[2, 1], &[1, 1]]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        let sing = RatMat::from_i64_rows(&[&[1, 2], &[2, 4]]);
        assert!(sing.inverse().is_none());
    }

    #[test]
    fn char_poly_small() {
        // det(λI − A) for A = [[2,0],[0,3]] is (λ−2)(λ−3) = 6 − 5λ + λ²
        let a = RatMat::from_i64_rows(&[&[2, 0], &[0, 3]]);
        assert_eq!(a.char_poly(), RatPoly::from_i64(&[6, -5, 1]));
        // nilpotent Jordan block: λ²
        let n = RatMat::from_i64_rows(&[&[0, 1], &[0, 0]]);
        assert_eq!(n.char_poly(), RatPoly::from_i64(&[0, 0, 1]));
        assert!(n.is_nilpotent());
    }

    #[test]
    fn cayley_hamilton() {
        let a = RatMat::from_i64_rows(&[&[1, 2, 0], &[0, 1, 1], &[3, 0, 2]]);
        let p = a.char_poly();
        assert!(p.eval_matrix(&a).is_zero());
    }

    #[test]
    fn poly_division_and_gcd() {
        // (x² − 1) / (x − 1) = x + 1
        let p = RatPoly::from_i64(&[-1, 0, 1]);
        let d = RatPoly::from_i64(&[-1, 1]);
        let (q, r) = p.div_rem(&d);
        assert_eq!(q, RatPoly::from_i64(&[1, 1]));
        assert!(r.is_zero());
        let g = p.gcd(&d);
        assert_eq!(g, RatPoly::from_i64(&[-1, 1]).monic());
    }

    #[test]
    fn squarefree_factorization_yun() {
        // (x−1)²(x+2)
        let p = RatPoly::from_i64(&[-1, 1])
            .mul(&RatPoly::from_i64(&[-1, 1]))
            .mul(&RatPoly::from_i64(&[2, 1]));
        let f = p.squarefree_factorization();
        assert_eq!(f.len(), 2);
        assert_eq!(f[0], (RatPoly::from_i64(&[2, 1]), 1));
        assert_eq!(f[1], (RatPoly::from_i64(&[-1, 1]), 2));
        assert_eq!(p.squarefree_part().degree(), 2);
    }

    #[test]
    fn rational_roots_found() {
        // (x − 1/2)(x + 3)(x² + 1)
        let p = RatPoly::new(vec![rat_frac(-1, 2), rat(1)])
            .mul(&RatPoly::from_i64(&[3, 1]))
            .mul(&RatPoly::from_i64(&[1, 0, 1]));
        let (roots, rest) = p.rational_roots();
        assert_eq!(roots, vec![rat(-3), rat_frac(1, 2)]);
        assert_eq!(rest, RatPoly::from_i64(&[1, 0, 1]));
    }
}
