//! Fixed-step RK4 integration and the numerical cross-checks tying a
//! network to its fundamental network: the semiconjugacies π_i intertwine
//! the two flows, and equilibria correspond under them.

use crate::dsl::{Expr, ResponseField};
use crate::error::{NetsymError, Result};
use crate::network::{conjugation_maps, fundamental_from_table, table_of, NetworkSpec};

pub const BLOWUP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().unwrap()
    }
}

pub fn rk4_step(
    field: &impl Fn(&[f64]) -> Result<Vec<f64>>,
    x: &[f64],
    h: f64,
) -> Result<Vec<f64>> {
    let n = x.len();
    let k1 = field(x)?;
    let x2: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k1[i]).collect();
    let k2 = field(&x2)?;
    let x3: Vec<f64> = (0..n).map(|i| x[i] + 0.5 * h * k2[i]).collect();
    let k3 = field(&x3)?;
    let x4: Vec<f64> = (0..n).map(|i| x[i] + h * k3[i]).collect();
    let k4 = field(&x4)?;
    Ok((0..n)
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrate ẋ = F(x) from `x0` over [0, t_end] with fixed step `dt`,
/// recording every `record_every`-th state (and always the last).
pub fn integrate(
    field: &impl Fn(&[f64]) -> Result<Vec<f64>>,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory> {
    assert!(dt > 0.0 && t_end >= 0.0);
    let steps = (t_end / dt).round() as usize;
    let mut x = x0.to_vec();
    let mut times = vec![0.0];
    let mut states = vec![x.clone()];
    let every = record_every.max(1);
    for s in 1..=steps {
        x = rk4_step(field, &x, dt)?;
        if x.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP_THRESHOLD) {
            return Err(NetsymError::NonFinite(format!(
                "trajectory escaped at step {s}"
            )));
        }
        if s % every == 0 || s == steps {
            times.push(s as f64 * dt);
            states.push(x.clone());
        }
    }
    Ok(Trajectory { times, states })
}

pub fn simulate_network(
    spec: &NetworkSpec,
    expr: &Expr,
    lambda: f64,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    record_every: usize,
) -> Result<Trajectory> {
    let rf = ResponseField::new(spec, expr.clone())?;
    if x0.len() != spec.num_cells() {
        return Err(NetsymError::InvalidSpec(format!(
            "initial state has {} entries, network has {} cells",
            x0.len(),
            spec.num_cells()
        )));
    }
    integrate(&|x: &[f64]| rf.eval(x, lambda), x0, t_end, dt, record_every)
}

/// Max-norm residual of the semiconjugacy identity Γ_f ∘ π_i = π_i ∘ γ_f:
/// integrate both systems, push the original trajectory through π_i and
/// compare against the fundamental trajectory started at π_i(x0). Returns
/// the worst residual over all i and all recorded times.
pub fn semiconjugacy_residual(
    spec: &NetworkSpec,
    expr: &Expr,
    lambda: f64,
    x0: &[f64],
    t_end: f64,
    dt: f64,
) -> Result<f64> {
    let table = table_of(spec)?;
    let fnet = fundamental_from_table(&table)?;
    let fspec = fnet.as_spec()?;
    let pis = conjugation_maps(spec)?;
    let orig = simulate_network(spec, expr, lambda, x0, t_end, dt, 10)?;
    let mut worst: f64 = 0.0;
    for pi in &pis {
        let y0 = pi.apply_f64(x0);
        let fund = simulate_network(&fspec, expr, lambda, &y0, t_end, dt, 10)?;
        for (xs, ys) in orig.states.iter().zip(&fund.states) {
            let px = pi.apply_f64(xs);
            for (a, b) in px.iter().zip(ys) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

/// Check the equilibrium correspondence: x is an equilibrium of the original
/// network iff every π_i(x) is an equilibrium of the fundamental network.
/// Returns (residual_original, worst_residual_fundamental).
pub fn equilibrium_correspondence(
    spec: &NetworkSpec,
    expr: &Expr,
    lambda: f64,
    x: &[f64],
) -> Result<(f64, f64)> {
    let rf = ResponseField::new(spec, expr.clone())?;
    let res_orig = rf
        .eval(x, lambda)?
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let table = table_of(spec)?;
    let fnet = fundamental_from_table(&table)?;
    let fspec = fnet.as_spec()?;
    let frf = ResponseField::new(&fspec, expr.clone())?;
    let pis = conjugation_maps(spec)?;
    let mut worst: f64 = 0.0;
    for pi in &pis {
        let y = pi.apply_f64(x);
        let r = frf
            .eval(&y, lambda)?
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(r);
    }
    Ok((res_orig, worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_simple;
    use crate::network::running_example;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn rk4_fourth_order_on_scalar_ode() {
        // ẋ = x, x(1) = e; halving the step should cut the error ~16×
        let field = |x: &[f64]| Ok(vec![x[0]]);
        let exact = 1.0f64.exp();
        let mut errs = Vec::new();
        for dt in [0.1, 0.05, 0.025] {
            let t = integrate(&field, &[1.0], 1.0, dt, usize::MAX).unwrap();
            errs.push((t.last()[0] - exact).abs());
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(order1 > 3.5 && order2 > 3.5, "orders {order1}, {order2}");
    }

    #[test]
    fn blowup_detected() {
        let field = |x: &[f64]| Ok(vec![x[0] * x[0]]);
        match integrate(&field, &[10.0], 5.0, 0.01, 1) {
            Err(NetsymError::NonFinite(_)) => {}
            other => panic!("{:?}", other.map(|t| t.last().to_vec())),
        }
    }

    #[test]
    fn synchrony_invariance_under_flow() {
        // balanced {1,2}{3} of the running example stays synchronous
        let spec = running_example();
        let e = parse_simple("x1 - x1^3 + 0.5*x2 - 0.2*x3").unwrap();
        let t = simulate_network(&spec, &e, 0.0, &[0.4, 0.4, -0.9], 5.0, 1e-3, 100).unwrap();
        for s in &t.states {
            assert!((s[0] - s[1]).abs() < 1e-10);
        }
    }

    #[test]
    fn semiconjugacy_random_responses() {
        let spec = running_example();
        let mut rng = StdRng::seed_from_u64(2024);
        for _ in 0..10 {
            let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.6..0.6)).collect();
            let src = format!(
                "{}*x1 + {}*x2 + {}*x3 + {}*x1^2 + {}*x2*x3 - {}*x1^3 - 0.2*x1^3",
                c[0], c[1], c[2], c[3], c[4], c[5].abs()
            );
            let e = parse_simple(&src).unwrap();
            let x0: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let r = semiconjugacy_residual(&spec, &e, 0.1, &x0, 5.0, 1e-3).unwrap();
            assert!(r < 1e-7, "residual {r} for {src}");
        }
    }

    #[test]
    fn equilibrium_correspondence_holds() {
        let spec = running_example();
        // x = 0 is an equilibrium of ẋ_i = f with f(0,0,0) = 0
        let e = parse_simple("x1 - x2^2 + x3^2 - x1^3").unwrap();
        let (r0, rf) = equilibrium_correspondence(&spec, &e, 0.0, &[0.0, 0.0, 0.0]).unwrap();
        assert!(r0 < 1e-10 && rf < 1e-10);
        // non-equilibrium point: both sides see it
        let (r0, rf) = equilibrium_correspondence(&spec, &e, 0.0, &[0.5, -0.2, 0.1]).unwrap();
        assert!(r0 > 1e-3 && rf > 1e-3);
    }

    #[test]
    fn nontrivial_equilibrium_correspondence() {
        // find a nonzero equilibrium numerically by relaxation, then check
        // all π_i images are fundamental-network equilibria
        let spec = running_example();
        let e = parse_simple("0.3 + x1 - x1^3 - 0.4*x2 + 0.1*x3").unwrap();
        let t = simulate_network(&spec, &e, 0.0, &[0.7, -0.3, 0.2], 80.0, 1e-2, 1000).unwrap();
        let x = t.last().to_vec();
        let (r0, rf) = equilibrium_correspondence(&spec, &e, 0.0, &x).unwrap();
        assert!(r0 < 1e-8, "relaxation did not converge: {r0}");
        assert!(rf < 1e-8 + 1e-10, "fundamental residual {rf}");
    }
}
