//! Jordan–Chevalley decomposition L = S + N with S semisimple, N nilpotent,
//! S·N = N·S, computed by Newton iteration on the squarefree part of the
//! characteristic polynomial. Exact over ℚ; the numeric fallback clusters
//! eigenvalues and runs the same iteration in f64.

use crate::error::{NetsymError, Result};
use crate::rat::{RatMat, RatPoly};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Exact decomposition of a rational matrix.
pub fn jordan_chevalley(l: &RatMat) -> (RatMat, RatMat) {
    let n = l.rows();
    if n == 0 {
        return (l.clone(), l.clone());
    }
    let f = l.char_poly().squarefree_part();
    let fd = f.derivative();
    let mut x = l.clone();
    // quadratic convergence: N^(2^k) = 0 once 2^k ≥ n
    for _ in 0..=n.ilog2() as usize + 1 {
        let fx = f.eval_matrix(&x);
        if fx.is_zero() {
            break;
        }
        let dinv = fd
            .eval_matrix(&x)
            .inverse()
            .expect("f squarefree makes f'(x) invertible along the iteration");
        x = x.sub(&dinv.mul(&fx));
    }
    debug_assert!(f.eval_matrix(&x).is_zero());
    let nil = l.sub(&x);
    (x, nil)
}

/// The minimal polynomial of the semisimple part is squarefree; expose it
/// for testing.
pub fn semisimple_min_poly(l: &RatMat) -> RatPoly {
    l.char_poly().squarefree_part()
}

const CLUSTER_TOL: f64 = 1e-8;
const CLUSTER_GAP: f64 = 1e-10;

/// Numeric decomposition: cluster the eigenvalues at tolerance 1e-8, form
/// the real squarefree polynomial with one root per cluster, and Newton-solve
/// for the semisimple part.
pub fn jordan_chevalley_f64(l: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = l.nrows();
    assert_eq!(n, l.ncols());
    if n == 0 {
        return Ok((l.clone(), l.clone()));
    }
    let eigs = complex_eigs_bounded(l)?;
    // single-linkage clustering
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut Vec<usize>, mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (eigs[i] - eigs[j]).norm() < CLUSTER_TOL {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a] = b;
            }
        }
    }
    let roots: Vec<usize> = (0..n).filter(|&i| find(&mut label, i) == i).collect();
    let means: Vec<Complex64> = roots
        .iter()
        .map(|&r| {
            let members: Vec<usize> = (0..n).filter(|&i| find(&mut label, i) == r).collect();
            members.iter().map(|&i| eigs[i]).sum::<Complex64>() / members.len() as f64
        })
        .collect();
    // ambiguity check: distinct clusters whose margin above the merge
    // tolerance is thinner than the gap resolution
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (find(&mut label, i), find(&mut label, j));
            if a != b && (eigs[i] - eigs[j]).norm() < CLUSTER_TOL + CLUSTER_GAP {
                return Err(NetsymError::IllConditioned(format!(
                    "eigenvalues {} and {} straddle the clustering tolerance",
                    eigs[i], eigs[j]
                )));
            }
        }
    }
    // real squarefree polynomial with the cluster means as roots
    let mut coeffs = vec![1.0f64]; // ascending, starts as the constant 1
    let mut consumed = vec![false; means.len()];
    for i in 0..means.len() {
        if consumed[i] {
            continue;
        }
        consumed[i] = true;
        if means[i].im.abs() < CLUSTER_TOL {
            coeffs = poly_mul(&coeffs, &[-means[i].re, 1.0]);
        } else {
            let conj = means[i].conj();
            let j = (0..means.len())
                .find(|&j| !consumed[j] && (means[j] - conj).norm() < 1e-6)
                .ok_or_else(|| {
                    NetsymError::IllConditioned(format!(
                        "complex eigenvalue {} has no conjugate partner",
                        means[i]
                    ))
                })?;
            consumed[j] = true;
            coeffs = poly_mul(&coeffs, &[means[i].norm_sqr(), -2.0 * means[i].re, 1.0]);
        }
    }
    let deriv: Vec<f64> =
        coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
    let scale = 1.0 + l.norm();
    let mut x = l.clone();
    for _ in 0..60 {
        let fx = poly_eval_matrix(&coeffs, &x);
        if fx.norm() < 1e-12 * scale {
            break;
        }
        let d = poly_eval_matrix(&deriv, &x);
        let sol = d.lu().solve(&fx).ok_or_else(|| {
            NetsymError::IllConditioned("f'(x) became singular during the Newton step".to_string())
        })?;
        x -= sol;
    }
    let fx = poly_eval_matrix(&coeffs, &x);
    if fx.norm() > 1e-7 * scale {
        return Err(NetsymError::IllConditioned(format!(
            "Newton iteration stalled with residual {:e}",
            fx.norm()
        )));
    }
    let nil = l - &x;
    Ok((x, nil))
}

/// Complex eigenvalues via a Schur decomposition with a bounded iteration
/// count (the unbounded variant can fail to terminate on defective input),
/// reading 1×1 and 2×2 blocks off the quasi-triangular factor. Triangular
/// matrices short-circuit to their diagonal.
fn complex_eigs_bounded(l: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = l.nrows();
    let upper = (0..n).all(|i| (0..i).all(|j| l[(i, j)] == 0.0));
    let lower = (0..n).all(|i| (i + 1..n).all(|j| l[(i, j)] == 0.0));
    if upper || lower {
        return Ok((0..n).map(|i| Complex64::new(l[(i, i)], 0.0)).collect());
    }
    let schur = nalgebra::linalg::Schur::try_new(l.clone(), f64::EPSILON, 100_000)
        .ok_or_else(|| {
            NetsymError::IllConditioned("Schur iteration failed to converge".to_string())
        })?;
    let (_, t) = schur.unpack();
    let mut eigs = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a, b) = (t[(i, i)], t[(i, i + 1)]);
            let (c, d) = (t[(i + 1, i)], t[(i + 1, i + 1)]);
            let tr = a + d;
            let disc = (a - d) * (a - d) + 4.0 * b * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                eigs.push(Complex64::new((tr + sq) / 2.0, 0.0));
                eigs.push(Complex64::new((tr - sq) / 2.0, 0.0));
            } else {
                let sq = (-disc).sqrt();
                eigs.push(Complex64::new(tr / 2.0, sq / 2.0));
                eigs.push(Complex64::new(tr / 2.0, -sq / 2.0));
            }
            i += 2;
        } else {
            eigs.push(Complex64::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    Ok(eigs)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval_matrix(coeffs: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut acc = DMatrix::<f64>::zeros(n, n);
    for c in coeffs.iter().rev() {
        acc = acc * x + DMatrix::<f64>::identity(n, n) * *c;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat;
    use num_traits::Zero;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forced_small_cases() {
        let l = RatMat::from_i64_rows(&[&[0, 1], &[0, 0]]);
        let (s, n) = jordan_chevalley(&l);
        assert!(s.is_zero());
        assert_eq!(n, l);

        let l = RatMat::from_i64_rows(&[&[2, 0], &[0, 3]]);
        let (s, n) = jordan_chevalley(&l);
        assert_eq!(s, l);
        assert!(n.is_zero());

        let l = RatMat::from_i64_rows(&[&[1, 1], &[0, 1]]);
        let (s, n) = jordan_chevalley(&l);
        assert!(s.is_identity());
        assert_eq!(n, RatMat::from_i64_rows(&[&[0, 1], &[0, 0]]));
    }

    #[test]
    fn invariants_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..40 {
            let n = rng.gen_range(1..=5);
            let mut l = RatMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    l.set(i, j, rat(rng.gen_range(-3..=3)));
                }
            }
            let (s, nil) = jordan_chevalley(&l);
            assert_eq!(s.add(&nil), l);
            assert_eq!(s.mul(&nil), nil.mul(&s));
            assert!(nil.pow(n).is_zero());
            // minimal polynomial of S is squarefree: sf(charpoly)(S) = 0
            assert!(semisimple_min_poly(&l).eval_matrix(&s).is_zero());
            // S commutes with everything that commutes with L
            let comm = commutant(&l);
            for c in &comm {
                assert_eq!(s.mul(c), c.mul(&s));
            }
        }
    }

    fn commutant(l: &RatMat) -> Vec<RatMat> {
        // nullspace of X ↦ LX − XL
        let n = l.rows();
        let mut rows = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let mut row = vec![crate::rat::Rat::zero(); n * n];
                for k in 0..n {
                    row[k * n + j] += l.get(i, k).clone();
                    row[i * n + k] -= l.get(k, j).clone();
                }
                rows.push(row);
            }
        }
        RatMat::from_rows(rows)
            .nullspace()
            .into_iter()
            .map(|v| {
                let mut m = RatMat::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        m.set(i, j, v[i * n + j].clone());
                    }
                }
                m
            })
            .collect()
    }

    #[test]
    fn numeric_agrees_with_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..30 {
            let n = rng.gen_range(1..=5);
            let mut l = RatMat::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    l.set(i, j, rat(rng.gen_range(-3..=3)));
                }
            }
            let (s_exact, _) = jordan_chevalley(&l);
            let lf = DMatrix::from_fn(n, n, |i, j| {
                use num_traits::ToPrimitive;
                l.get(i, j).to_f64().unwrap()
            });
            match jordan_chevalley_f64(&lf) {
                Ok((s, nil)) => {
                    let sf = DMatrix::from_fn(n, n, |i, j| {
                        use num_traits::ToPrimitive;
                        s_exact.get(i, j).to_f64().unwrap()
                    });
                    assert!((&s - &sf).norm() < 1e-6, "semisimple parts differ");
                    assert!((&s * &nil - &nil * &s).norm() < 1e-8);
                }
                Err(NetsymError::IllConditioned(_)) => {
                    // exact eigenvalues closer than the clustering margin —
                    // a legitimate refusal for integer matrices with repeated
                    // nearby roots; skip
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }
}
