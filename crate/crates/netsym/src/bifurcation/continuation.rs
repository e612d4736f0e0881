//! Numerical continuation of steady-state branches.
//!
//! Branches are discovered by Newton solves seeded along kernel directions
//! of the linearization at the bifurcation point, then marched toward λ0 on
//! a log-spaced grid (8 points per decade, two decades). The asymptotic
//! exponent of each branch is a least-squares slope of log‖X−X0‖ against
//! log|λ−λ0| over the decade nearest λ0.

use nalgebra::{DMatrix, DVector};

use crate::dsl::{Expr, ResponseField};
use crate::error::{NetsymError, Result};
use crate::network::{conjugation_maps, FundamentalNetwork, NetworkSpec};
use crate::synchrony::Partition;

/// Minimum admissible continuation step.
pub const MIN_STEP: f64 = 1e-12;
/// Grid resolution of the log-spaced marching grid.
pub const POINTS_PER_DECADE: usize = 8;
/// Number of decades marched toward λ0.
pub const DECADES: usize = 2;

const NEWTON_MAX_ITERS: usize = 50;
const EQUILIBRIUM_TOL: f64 = 1e-8;
const KERNEL_TOL: f64 = 1e-7;
const DIVERGENCE_GUARD: f64 = 1e6;
/// Magnitude of the tangent perturbation used for branch switching,
/// relative to the kernel-direction norm.
const SWITCH_PERTURBATION: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    /// largest |λ − λ0| on the marching grid
    pub step: f64,
    /// Newton corrector tolerance on ‖Γ‖
    pub newton_tol: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            step: 1e-2,
            newton_tol: 1e-10,
        }
    }
}

/// One continued branch: equilibrium points ordered from the far end of the
/// grid toward λ0 (or through λ0 when the linearization is regular).
#[derive(Debug, Clone)]
pub struct ContinuationRun {
    /// (λ, X) pairs
    pub points: Vec<(f64, Vec<f64>)>,
    /// ‖Γ(X; λ)‖ at each point
    pub residuals: Vec<f64>,
    /// least-squares slope of log‖X−X0‖ vs log|λ−λ0|; None for a branch
    /// pinned at X0
    pub fitted_exponent: Option<f64>,
}

impl ContinuationRun {
    /// Largest distance from the base point along the run.
    pub fn amplitude(&self, x0: &[f64]) -> f64 {
        self.points
            .iter()
            .map(|(_, x)| dist(x, x0))
            .fold(0.0, f64::max)
    }

    /// The point of the run closest in λ to the given value.
    pub fn point_nearest(&self, lambda: f64) -> &(f64, Vec<f64>) {
        self.points
            .iter()
            .min_by(|a, b| {
                (a.0 - lambda)
                    .abs()
                    .partial_cmp(&(b.0 - lambda).abs())
                    .unwrap()
            })
            .expect("runs are non-empty")
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Newton corrector at fixed λ. Returns the converged point and its residual.
fn newton(
    field: &ResponseField,
    seed: &[f64],
    lambda: f64,
    tol: f64,
) -> Option<(Vec<f64>, f64)> {
    let n = seed.len();
    let mut x = DVector::from_column_slice(seed);
    for _ in 0..NEWTON_MAX_ITERS {
        let xs: Vec<f64> = x.iter().cloned().collect();
        let g = DVector::from_vec(field.eval(&xs, lambda).ok()?);
        let res = g.norm();
        if res <= tol {
            return Some((xs, res));
        }
        if res > DIVERGENCE_GUARD || x.norm() > DIVERGENCE_GUARD {
            return None;
        }
        let jac = field.jacobian(&xs, lambda).ok()?;
        let jm = DMatrix::from_fn(n, n, |i, j| jac[i][j]);
        let step = jm.lu().solve(&g)?;
        x -= step;
    }
    None
}

/// March from a converged point at `lam_from` to `lam_to`, inserting
/// intermediate λ values when the corrector loses the branch. Fails once the
/// inserted step falls below MIN_STEP.
fn march(
    field: &ResponseField,
    x_from: &[f64],
    lam_from: f64,
    lam_to: f64,
    tol: f64,
) -> Option<(Vec<f64>, f64)> {
    if let Some(hit) = newton(field, x_from, lam_to, tol) {
        return Some(hit);
    }
    if (lam_to - lam_from).abs() < MIN_STEP {
        return None;
    }
    let mid = 0.5 * (lam_from + lam_to);
    let (x_mid, _) = march(field, x_from, lam_from, mid, tol)?;
    march(field, &x_mid, mid, lam_to, tol)
}

/// Row-reduce the transposed basis so the spanning vectors are as sparse and
/// axis-aligned as the subspace allows; seeds then probe coordinate-like
/// directions instead of arbitrary rotations of them.
fn echelonize(basis: DMatrix<f64>) -> DMatrix<f64> {
    let k = basis.ncols();
    let n = basis.nrows();
    let mut rows = basis.transpose();
    let mut pivot_row = 0;
    for col in 0..n {
        if pivot_row == k {
            break;
        }
        let (best, bestval) = (pivot_row..k)
            .map(|r| (r, rows[(r, col)].abs()))
            .fold((pivot_row, 0.0f64), |acc, it| if it.1 > acc.1 { it } else { acc });
        if bestval < 1e-9 {
            continue;
        }
        rows.swap_rows(pivot_row, best);
        let pv = rows[(pivot_row, col)];
        for j in 0..n {
            rows[(pivot_row, j)] /= pv;
        }
        for r in 0..k {
            if r != pivot_row {
                let f = rows[(r, col)];
                if f != 0.0 {
                    for j in 0..n {
                        rows[(r, j)] -= f * rows[(pivot_row, j)];
                    }
                }
            }
        }
        pivot_row += 1;
    }
    // keep the pivot-1 scaling (so seeds hit coordinate-aligned points
    // exactly) and clean tiny elimination residue
    for r in 0..k {
        for j in 0..n {
            if rows[(r, j)].abs() < 1e-12 {
                rows[(r, j)] = 0.0;
            }
        }
    }
    rows.transpose()
}

/// Seed offsets in kernel coordinates: every combination of per-coordinate
/// amplitudes from {0, ±perturbation, ±h, ±√h}, covering branches whose
/// components scale differently with λ (the all-zero seed tracks the branch
/// through X0).
fn seed_offsets(kernel: &DMatrix<f64>, h: f64) -> Vec<DVector<f64>> {
    let n = kernel.nrows();
    let k = kernel.ncols();
    let amps = [0.0, SWITCH_PERTURBATION, -SWITCH_PERTURBATION, h, -h, h.sqrt(), -h.sqrt()];
    let mut seeds = Vec::new();
    let mut idx = vec![0usize; k];
    loop {
        let mut d = DVector::zeros(n);
        for (j, &a) in idx.iter().enumerate() {
            if amps[a] != 0.0 {
                d += kernel.column(j) * amps[a];
            }
        }
        seeds.push(d);
        let mut j = 0;
        loop {
            if j == k {
                return seeds;
            }
            if idx[j] + 1 < amps.len() {
                idx[j] += 1;
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}

/// Continue all steady-state branches of a fundamental network emanating
/// from (X0, λ0) within the given λ range.
pub fn continue_branches(
    fund: &FundamentalNetwork,
    rf: &Expr,
    x0: &[f64],
    lambda0: f64,
    lambda_range: (f64, f64),
    opts: &ContinuationOptions,
) -> Result<Vec<ContinuationRun>> {
    continue_on_spec(&fund.as_spec()?, rf, x0, lambda0, lambda_range, opts)
}

/// Continuation on an arbitrary closed network spec.
pub fn continue_on_spec(
    spec: &NetworkSpec,
    rf: &Expr,
    x0: &[f64],
    lambda0: f64,
    lambda_range: (f64, f64),
    opts: &ContinuationOptions,
) -> Result<Vec<ContinuationRun>> {
    let field = ResponseField::new(spec, rf.clone())?;
    let n = field.dim();
    if x0.len() != n {
        return Err(NetsymError::InvalidSpec(
            "base point must match the fundamental network dimension".into(),
        ));
    }
    let (lo, hi) = lambda_range;
    if !(lo <= lambda0 && lambda0 <= hi) {
        return Err(NetsymError::InvalidSpec(
            "lambda0 must lie inside the continuation range".into(),
        ));
    }
    if opts.step <= MIN_STEP {
        return Err(NetsymError::StepUnderflow(MIN_STEP));
    }
    let g0 = field.eval(x0, lambda0)?;
    let res0 = norm(&g0);
    if res0 >= EQUILIBRIUM_TOL {
        return Err(NetsymError::NotEquilibrium(res0));
    }

    // directions spanning ker L0^S, the generalized kernel of the
    // semisimple part of the linearization at the base point
    let jac = field.jacobian(x0, lambda0)?;
    let l0 = DMatrix::from_fn(n, n, |i, j| jac[i][j]);
    let (semi, _) = crate::bifurcation::jc::jordan_chevalley_f64(&l0)?;
    let svd = semi.svd(false, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let ktol = KERNEL_TOL * smax.max(1.0);
    let v_t = svd.v_t.as_ref().expect("svd with v requested");
    let ker_cols: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, sv)| **sv <= ktol)
        .map(|(i, _)| v_t.row(i).transpose())
        .collect();
    let kernel = echelonize(DMatrix::from_fn(n, ker_cols.len(), |i, j| ker_cols[j][i]));

    let mut runs: Vec<(i32, ContinuationRun)> = Vec::new();
    for side in [1.0f64, -1.0] {
        let width = if side > 0.0 { hi - lambda0 } else { lambda0 - lo };
        let h0 = opts.step.min(0.9 * width);
        if h0 < 10.0 * MIN_STEP {
            continue;
        }
        let npts = POINTS_PER_DECADE * DECADES + 1;
        let lams: Vec<f64> = (0..npts)
            .map(|t| lambda0 + side * h0 * 10f64.powf(-(t as f64) / POINTS_PER_DECADE as f64))
            .collect();

        // discover distinct equilibria at the outermost grid point
        let mut firsts: Vec<(Vec<f64>, f64)> = Vec::new();
        for offset in seed_offsets(&kernel, h0) {
            let seed: Vec<f64> = (0..n).map(|i| x0[i] + offset[i]).collect();
            if let Some((x, r)) = newton(&field, &seed, lams[0], opts.newton_tol) {
                if !firsts
                    .iter()
                    .any(|(y, _)| dist(&x, y) < 1e-6 * (1.0 + norm(&x)))
                {
                    firsts.push((x, r));
                }
            }
        }

        'first: for (x_first, r_first) in firsts {
            let mut points = vec![(lams[0], x_first.clone())];
            let mut residuals = vec![r_first];
            let mut prev = x_first;
            for w in lams.windows(2) {
                match march(&field, &prev, w[0], w[1], opts.newton_tol) {
                    Some((x, r)) => {
                        points.push((w[1], x.clone()));
                        residuals.push(r);
                        prev = x;
                    }
                    None => continue 'first,
                }
            }
            let run = ContinuationRun {
                points,
                residuals,
                fitted_exponent: None,
            };
            // marching inward can merge onto a branch already recorded
            let is_dup = runs.iter().any(|(s, other)| {
                *s == side as i32
                    && run
                        .points
                        .iter()
                        .zip(&other.points)
                        .all(|((_, a), (_, b))| dist(a, b) < 1e-6 * (1.0 + norm(a)))
            });
            if !is_dup {
                runs.push((side as i32, run));
            }
        }
    }

    if runs.is_empty() {
        return Err(NetsymError::NoConvergence(
            "no branch survived the Newton corrector on either side".into(),
        ));
    }

    // merge the two halves of the branch through X0 when the linearization
    // is regular: a single smooth branch crosses λ0 with no switching
    let mut merged: Vec<ContinuationRun> = Vec::new();
    if kernel.ncols() == 0 {
        let mut through: Vec<(f64, Vec<f64>)> = Vec::new();
        let mut through_res: Vec<f64> = Vec::new();
        for (s, run) in &runs {
            if *s < 0 {
                through.extend(run.points.iter().cloned());
                through_res.extend(run.residuals.iter().cloned());
            }
        }
        through.reverse();
        through_res.reverse();
        through.push((lambda0, x0.to_vec()));
        through_res.push(res0);
        for (s, run) in &runs {
            if *s > 0 {
                let mut pts = run.points.clone();
                let mut rs = run.residuals.clone();
                pts.reverse();
                rs.reverse();
                through.extend(pts);
                through_res.extend(rs);
            }
        }
        merged.push(ContinuationRun {
            points: through,
            residuals: through_res,
            fitted_exponent: None,
        });
    } else {
        merged.extend(runs.into_iter().map(|(_, r)| r));
    }

    // asymptotic exponent over the decade nearest λ0
    for run in &mut merged {
        let mut pts: Vec<(f64, f64)> = run
            .points
            .iter()
            .map(|(lam, x)| ((lam - lambda0).abs(), dist(x, x0)))
            .filter(|(m, _)| *m > 0.0)
            .collect();
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mmin = pts.first().map(|p| p.0).unwrap_or(0.0);
        let window: Vec<(f64, f64)> = pts
            .into_iter()
            .filter(|(m, _)| *m <= 10.0 * mmin * (1.0 + 1e-9))
            .collect();
        if window.len() >= 3 && window.iter().all(|(_, r)| *r > 1e-9) {
            let xs: Vec<f64> = window.iter().map(|(m, _)| m.ln()).collect();
            let ys: Vec<f64> = window.iter().map(|(_, r)| r.ln()).collect();
            let nw = xs.len() as f64;
            let mx = xs.iter().sum::<f64>() / nw;
            let my = ys.iter().sum::<f64>() / nw;
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let sxy: f64 = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| (x - mx) * (y - my))
                .sum();
            run.fitted_exponent = Some(sxy / sxx);
        }
    }

    // deterministic report order: by λ of the outermost point, then by the
    // outermost X vector
    merged.sort_by(|a, b| {
        let pa = &a.points[0];
        let pb = &b.points[0];
        pa.0.partial_cmp(&pb.0)
            .unwrap()
            .then_with(|| {
                pa.1.iter()
                    .zip(&pb.1)
                    .map(|(x, y)| x.partial_cmp(y).unwrap())
                    .find(|o| !o.is_eq())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    Ok(merged)
}

/// A continued branch of the original network, with its synchrony pattern
/// and, per conjugation map π_i, the fundamental branch its image lies on.
#[derive(Debug, Clone)]
pub struct LiftedBranch {
    pub points: Vec<(f64, Vec<f64>)>,
    pub residuals: Vec<f64>,
    /// value partition of the cells along the branch
    pub partition: Partition,
    /// fund_runs[i] = index of the fundamental run containing π_i(x), when
    /// one of the supplied runs matches
    pub fund_runs: Vec<Option<usize>>,
}

/// Group cells by equal values, up to a relative tolerance.
fn value_partition(x: &[f64]) -> Partition {
    let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut labels = vec![usize::MAX; x.len()];
    let mut next = 0;
    for i in 0..x.len() {
        if labels[i] != usize::MAX {
            continue;
        }
        labels[i] = next;
        for j in i + 1..x.len() {
            if labels[j] == usize::MAX && (x[i] - x[j]).abs() < 1e-6 * scale {
                labels[j] = next;
            }
        }
        next += 1;
    }
    Partition::from_labels(&labels)
}

/// Branches of the original network: every original equilibrium is mapped to
/// a fundamental equilibrium by each conjugation π_i, so original branches
/// are continued directly and reported with their synchrony pattern and the
/// fundamental branches their π_i-images lie on.
pub fn lift_to_original(
    spec: &NetworkSpec,
    rf: &Expr,
    fund_runs: &[ContinuationRun],
    x0: &[f64],
    lambda0: f64,
    lambda_range: (f64, f64),
    opts: &ContinuationOptions,
) -> Result<Vec<LiftedBranch>> {
    let orig_runs = continue_on_spec(spec, rf, x0, lambda0, lambda_range, opts)?;
    let pis = conjugation_maps(spec)?;
    let mut out = Vec::with_capacity(orig_runs.len());
    for run in orig_runs {
        let fund_run_of = |i: usize| -> Option<usize> {
            'cand: for (ri, cand) in fund_runs.iter().enumerate() {
                for (lam, x) in &run.points {
                    let y = pis[i].apply_f64(x);
                    let (_, z) = cand.point_nearest(*lam);
                    if dist(&y, z) >= 1e-6 * (1.0 + norm(&y)) {
                        continue 'cand;
                    }
                }
                return Some(ri);
            }
            None
        };
        let fund_runs_idx: Vec<Option<usize>> = (0..x0.len()).map(fund_run_of).collect();
        let partition = value_partition(&run.points[0].1);
        out.push(LiftedBranch {
            points: run.points,
            residuals: run.residuals,
            partition,
            fund_runs: fund_runs_idx,
        });
    }
    Ok(out)
}
