//! Generic codimension-one steady-state classification per indecomposable
//! summand: solve the leading-order branch equations of the constrained
//! Taylor family under generic-coefficient assumptions.
//!
//! Branches are found with a Newton-polygon elimination in μ = λ^(1/2): each
//! step picks an equation that, after substituting the components already
//! solved, involves a single unknown component, and splits on the roots the
//! polygon admits (u = 0 when every term carries the unknown, plus one root
//! per descending hull segment). Solutions come in μ ↦ −μ pairs; the two
//! arms of a square-root branch are reported as one branch, matching the
//! usual counting of a saddle-node or pitchfork as a single branch.

use std::collections::BTreeMap;

use crate::error::{NetsymError, Result};
use crate::network::NetworkSpec;
use crate::rat::Rat;
use crate::repalg::{endomorphism_basis, radical_basis, DecompositionReport, DivisionType, Summand};
use crate::symbolic::{
    ratfn_poly_roots_linear, ratfn_poly_roots_quadratic, render_lambda_power, Poly, RatFn, SymTable,
};
use crate::synchrony::Partition;
use num_complex::Complex64;
use num_traits::Zero;

use super::family::{kernel_taylor_family, TaylorFamily};

/// Leading-order behavior of one branch component: either identically zero
/// or coeff · μ^mu_pow with μ = λ^(1/2).
#[derive(Debug, Clone)]
pub enum BranchComp {
    Zero,
    Leading { coeff: RatFn, mu_pow: u32 },
}

impl BranchComp {
    fn is_zero(&self) -> bool {
        matches!(self, BranchComp::Zero)
    }

    /// μ ↦ −μ flips the sign of components with odd μ-power.
    fn flipped(&self) -> BranchComp {
        match self {
            BranchComp::Zero => BranchComp::Zero,
            BranchComp::Leading { coeff, mu_pow } => {
                if mu_pow % 2 == 1 {
                    BranchComp::Leading { coeff: coeff.neg(), mu_pow: *mu_pow }
                } else {
                    self.clone()
                }
            }
        }
    }

    fn eq(&self, other: &BranchComp, syms: &SymTable) -> bool {
        match (self, other) {
            (BranchComp::Zero, BranchComp::Zero) => true,
            (
                BranchComp::Leading { coeff: a, mu_pow: p },
                BranchComp::Leading { coeff: b, mu_pow: q },
            ) => p == q && a.eq(b, syms),
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BranchFormula {
    /// leading terms in summand coordinates u
    pub components: Vec<BranchComp>,
    /// leading terms in the coordinates of the ambient representation space
    pub ambient: Vec<BranchComp>,
    /// leading λ-exponent of the branch as a reduced fraction (1,1) or (1,2)
    pub exponent: Option<(u32, u32)>,
    /// human-readable synchrony statement in ambient coordinates
    pub synchrony: String,
    /// per ambient component, e.g. "X1 = -(a/c)*lambda + h.o.t."
    pub rendered: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    SaddleNode,
    Transcritical,
    Pitchfork,
    Composite,
    NoneGeneric,
    Unresolved,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::SaddleNode => "saddle-node",
            Kind::Transcritical => "transcritical",
            Kind::Pitchfork => "pitchfork",
            Kind::Composite => "composite",
            Kind::NoneGeneric => "none-generic",
            Kind::Unresolved => "unresolved",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BifurcationClass {
    pub summand_index: usize,
    pub dim: usize,
    pub division_type: DivisionType,
    pub kind: Kind,
    pub family: TaylorFamily,
    /// family coefficient symbols plus any formal square roots the branch
    /// formulas introduced
    pub syms: SymTable,
    pub branches: Vec<BranchFormula>,
    /// polynomials in the family coefficients that must not vanish for the
    /// leading-order analysis to be valid
    pub genericity: Vec<Poly>,
    pub genericity_rendered: Vec<String>,
}

type EqTerms = BTreeMap<(Vec<u32>, u32), RatFn>;

struct Solver {
    m: usize,
    eqs: Vec<EqTerms>,
    syms: SymTable,
    genericity: Vec<Poly>,
    raw_branches: Vec<Vec<BranchComp>>,
    unresolved: bool,
}

impl Solver {
    fn new(family: &TaylorFamily) -> Solver {
        let m = family.dim;
        let mut eqs = Vec::with_capacity(m);
        for i in 0..m {
            let mut terms: EqTerms = BTreeMap::new();
            for (t, coeff) in family.monomials.iter().zip(&family.coeffs[i]) {
                if !coeff.is_zero() {
                    terms.insert((t.alpha.clone(), 2 * t.beta), RatFn::from_poly(coeff.clone()));
                }
            }
            eqs.push(terms);
        }
        Solver {
            m,
            eqs,
            syms: family.syms.clone(),
            genericity: Vec::new(),
            raw_branches: Vec::new(),
            unresolved: false,
        }
    }

    fn add_condition(&mut self, p: &Poly) {
        if p.is_zero() || p.is_constant() {
            return;
        }
        let proportional = |a: &Poly, b: &Poly| -> bool {
            let (la, lb) = match (a.terms.iter().next(), b.terms.iter().next()) {
                (Some((_, ca)), Some((_, cb))) => (ca.clone(), cb.clone()),
                _ => return false,
            };
            a.scale(&lb) == b.scale(&la)
        };
        if !self.genericity.iter().any(|q| proportional(q, p)) {
            self.genericity.push(p.clone());
        }
    }

    fn add_ratfn_condition(&mut self, c: &RatFn) {
        let num = c.num.clone();
        let den = c.den.clone();
        self.add_condition(&num);
        self.add_condition(&den);
    }

    /// Substitute the solved components into equation `eq`; exponent entries
    /// of solved variables are folded into the coefficient and μ-power.
    fn substitute(&self, eq: &EqTerms, assign: &[Option<BranchComp>]) -> EqTerms {
        let mut out: EqTerms = BTreeMap::new();
        'term: for ((alpha, q), coeff) in eq {
            let mut c = coeff.clone();
            let mut qq = *q;
            let mut aa = alpha.clone();
            for (v, slot) in assign.iter().enumerate() {
                let p = alpha[v];
                if p == 0 {
                    continue;
                }
                match slot {
                    None => {}
                    Some(BranchComp::Zero) => continue 'term,
                    Some(BranchComp::Leading { coeff: w, mu_pow: e }) => {
                        let mut wp = w.clone();
                        for _ in 1..p {
                            wp = wp.mul(w, &self.syms);
                        }
                        c = c.mul(&wp, &self.syms);
                        qq += p * e;
                        aa[v] = 0;
                    }
                }
            }
            let entry = out.entry((aa, qq)).or_insert_with(RatFn::zero);
            *entry = entry.add(&c, &self.syms);
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn solve(&mut self, assign: &mut Vec<Option<BranchComp>>, used: &mut Vec<bool>) {
        // substitute all unused equations; discharge the ones that became
        // trivial and prune paths where an equation can no longer vanish
        let mut discharged: Vec<usize> = Vec::new();
        let mut prune = false;
        let mut cand: Option<(usize, EqTerms, usize)> = None;
        for idx in 0..self.eqs.len() {
            if used[idx] {
                continue;
            }
            let sub = self.substitute(&self.eqs[idx], assign);
            if sub.is_empty() {
                used[idx] = true;
                discharged.push(idx);
                continue;
            }
            let mut vars: Vec<usize> = Vec::new();
            for (alpha, _) in sub.keys() {
                for (v, &p) in alpha.iter().enumerate() {
                    if p > 0 && !vars.contains(&v) {
                        vars.push(v);
                    }
                }
            }
            if vars.is_empty() {
                // leading-order inconsistency: Σ c·μ^q with generically
                // nonzero c — no solution along this path
                prune = true;
                break;
            }
            if vars.len() == 1 && cand.is_none() {
                cand = Some((idx, sub, vars[0]));
            }
        }
        if !prune {
            if assign.iter().all(|a| a.is_some()) {
                // a leftover non-trivial equation would have pruned above
                let comps: Vec<BranchComp> = assign.iter().map(|a| a.clone().unwrap()).collect();
                self.raw_branches.push(comps);
            } else if let Some((idx, sub, v)) = cand {
                used[idx] = true;
                for option in self.univariate_options(&sub, v) {
                    assign[v] = Some(option);
                    self.solve(assign, used);
                    assign[v] = None;
                }
                used[idx] = false;
            } else {
                // either the equations ran out with components still free,
                // or only genuinely multivariate equations remain
                self.unresolved = true;
            }
        }
        for idx in discharged {
            used[idx] = false;
        }
    }

    /// Newton-polygon analysis of a single-variable equation: the admissible
    /// leading-order values of component `v`.
    fn univariate_options(&mut self, sub: &EqTerms, v: usize) -> Vec<BranchComp> {
        // per power of u_v, the minimal μ-power and its coefficient
        let mut per_p: BTreeMap<u32, BTreeMap<u32, RatFn>> = BTreeMap::new();
        for ((alpha, q), c) in sub {
            let p = alpha[v];
            let slot = per_p.entry(p).or_default().entry(*q).or_insert_with(RatFn::zero);
            *slot = slot.add(c, &self.syms);
        }
        let mut pts: Vec<(u32, u32, RatFn)> = Vec::new();
        for (p, by_q) in &per_p {
            for (q, c) in by_q {
                if !c.is_zero() {
                    pts.push((*p, *q, c.clone()));
                    break;
                }
            }
        }
        if pts.is_empty() {
            return Vec::new();
        }
        let mut options = Vec::new();
        let p_min = pts[0].0;
        if p_min > 0 {
            options.push(BranchComp::Zero);
        }
        // nonzero roots: Newton polygon on the exponents relative to p_min
        let shifted: Vec<(u32, u32, RatFn)> =
            pts.iter().map(|(p, q, c)| (p - p_min, *q, c.clone())).collect();
        let mut cur = 0usize;
        while cur + 1 < shifted.len() {
            // steepest descending segment from the current hull vertex
            let (p1, q1, _) = shifted[cur].clone();
            let mut best: Option<(usize, i64, u32)> = None; // (index, num, den) of slope
            for j in cur + 1..shifted.len() {
                let (p2, q2, _) = shifted[j].clone();
                if q2 >= q1 {
                    continue;
                }
                let num = q1 as i64 - q2 as i64;
                let den = p2 - p1;
                let better = match &best {
                    None => true,
                    // maximize slope num/den; tie → longer segment
                    Some((_, bn, bd)) => {
                        num * (*bd as i64) > *bn * (den as i64)
                            || (num * (*bd as i64) == *bn * (den as i64))
                    }
                };
                if better {
                    best = Some((j, num, den));
                }
            }
            let Some((j, num, den)) = best else { break };
            let (p2, q2, _) = shifted[j].clone();
            if num % (den as i64) != 0 {
                // branch exponent not a multiple of 1/2: not representable
                self.unresolved = true;
                cur = j;
                continue;
            }
            let e = (num / den as i64) as u32;
            // coefficients of the segment polynomial Σ c_k W^k, k = 0..d
            let d = (p2 - p1) as usize;
            let mut seg: Vec<RatFn> = vec![RatFn::zero(); d + 1];
            for (p, q, c) in &shifted {
                if *p < p1 || *p > p2 {
                    continue;
                }
                let expect = q1 as i64 - e as i64 * (*p - p1) as i64;
                if *q as i64 == expect {
                    seg[(*p - p1) as usize] = c.clone();
                }
            }
            self.add_ratfn_condition(&seg[0]);
            self.add_ratfn_condition(&seg[d]);
            match d {
                1 => {
                    if let Some(w) = ratfn_poly_roots_linear(&seg[0], &seg[1], &self.syms) {
                        options.push(BranchComp::Leading { coeff: w, mu_pow: e });
                    } else {
                        self.unresolved = true;
                    }
                }
                2 => {
                    match ratfn_poly_roots_quadratic(&seg[0], &seg[1], &seg[2], &mut self.syms) {
                        Some((roots, radicand)) => {
                            self.add_condition(&radicand);
                            for w in roots {
                                options.push(BranchComp::Leading { coeff: w, mu_pow: e });
                            }
                        }
                        None => self.unresolved = true,
                    }
                }
                _ => self.unresolved = true,
            }
            cur = j;
            if q2 == 0 {
                break;
            }
        }
        options
    }
}

/// Group the components of a branch into a synchrony statement over the
/// ambient coordinates, e.g. "X1 = X2 = -X3" or "X2 = X3 = 0".
fn synchrony_tag(ambient: &[BranchComp], syms: &SymTable, prefix: &str) -> String {
    let n = ambient.len();
    let zeros: Vec<usize> = (0..n).filter(|&k| ambient[k].is_zero()).collect();
    let nonzero: Vec<usize> = (0..n).filter(|&k| !ambient[k].is_zero()).collect();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &k in &nonzero {
        let mut placed = false;
        for class in classes.iter_mut() {
            if ambient[class[0]].eq(&ambient[k], syms) {
                class.push(k);
                placed = true;
                break;
            }
        }
        if !placed {
            classes.push(vec![k]);
        }
    }
    // merge a class with the negation of an earlier one
    let mut pieces: Vec<String> = Vec::new();
    let mut consumed = vec![false; classes.len()];
    for i in 0..classes.len() {
        if consumed[i] {
            continue;
        }
        let mut names: Vec<String> =
            classes[i].iter().map(|&k| format!("{}{}", prefix, k + 1)).collect();
        for j in i + 1..classes.len() {
            if consumed[j] {
                continue;
            }
            let neg_j = ambient[classes[j][0]].flipped_sign();
            if ambient[classes[i][0]].eq(&neg_j, syms) {
                names.extend(classes[j].iter().map(|&k| format!("-{}{}", prefix, k + 1)));
                consumed[j] = true;
            }
        }
        if names.len() > 1 {
            pieces.push(names.join(" = "));
        }
        consumed[i] = true;
    }
    if !zeros.is_empty() {
        let mut names: Vec<String> = zeros.iter().map(|&k| format!("{}{}", prefix, k + 1)).collect();
        names.push("0".to_string());
        pieces.push(names.join(" = "));
    }
    if pieces.is_empty() {
        "no synchrony".to_string()
    } else {
        pieces.join(", ")
    }
}

impl BranchComp {
    /// The negation of the leading coefficient (μ-power kept).
    fn flipped_sign(&self) -> BranchComp {
        match self {
            BranchComp::Zero => BranchComp::Zero,
            BranchComp::Leading { coeff, mu_pow } => {
                BranchComp::Leading { coeff: coeff.neg(), mu_pow: *mu_pow }
            }
        }
    }
}

fn ambient_components(
    summand: &Summand,
    comps: &[BranchComp],
    syms: &SymTable,
) -> Vec<BranchComp> {
    let ambient_dim = summand.sub.ambient_dim;
    let basis = &summand.sub.basis;
    (0..ambient_dim)
        .map(|k| {
            let mut by_e: BTreeMap<u32, RatFn> = BTreeMap::new();
            for (j, comp) in comps.iter().enumerate() {
                if let BranchComp::Leading { coeff, mu_pow } = comp {
                    let b = &basis[j][k];
                    if b.is_zero() {
                        continue;
                    }
                    let scaled = coeff.mul(&RatFn::from_poly(Poly::constant(b.clone())), syms);
                    let slot = by_e.entry(*mu_pow).or_insert_with(RatFn::zero);
                    *slot = slot.add(&scaled, syms);
                }
            }
            for (e, c) in by_e {
                if !c.is_zero() {
                    return BranchComp::Leading { coeff: c, mu_pow: e };
                }
            }
            BranchComp::Zero
        })
        .collect()
}

fn render_branch(ambient: &[BranchComp], syms: &SymTable, prefix: &str) -> Vec<String> {
    ambient
        .iter()
        .enumerate()
        .map(|(k, comp)| match comp {
            BranchComp::Zero => format!("{}{} = 0", prefix, k + 1),
            BranchComp::Leading { coeff, mu_pow } => format!(
                "{}{} = {}{} + h.o.t.",
                prefix,
                k + 1,
                coeff.render(syms),
                render_lambda_power(*mu_pow)
            ),
        })
        .collect()
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Classification of one indecomposable summand.
pub fn classify_summand(summand: &Summand, summand_index: usize) -> BifurcationClass {
    let action = &summand.sub.action;
    let end = endomorphism_basis(action);
    let rad = radical_basis(&end);
    let family = kernel_taylor_family(action, &rad);
    if summand.division_type != DivisionType::Real {
        // §-style exclusion: steady-state codimension-one bifurcations do
        // not occur along complex or quaternionic summands
        return BifurcationClass {
            summand_index,
            dim: summand.sub.dim(),
            division_type: summand.division_type,
            kind: Kind::NoneGeneric,
            syms: family.syms.clone(),
            family,
            branches: Vec::new(),
            genericity: Vec::new(),
            genericity_rendered: Vec::new(),
        };
    }
    let mut solver = Solver::new(&family);
    let mut assign = vec![None; solver.m];
    let mut used = vec![false; solver.m];
    solver.solve(&mut assign, &mut used);

    // merge the two arms of each μ ↦ −μ pair and drop duplicates
    let mut merged: Vec<Vec<BranchComp>> = Vec::new();
    for b in &solver.raw_branches {
        let flip: Vec<BranchComp> = b.iter().map(|c| c.flipped()).collect();
        let dup = merged.iter().any(|kept| {
            kept.iter().zip(b).all(|(x, y)| x.eq(y, &solver.syms))
                || kept.iter().zip(&flip).all(|(x, y)| x.eq(y, &solver.syms))
        });
        if !dup {
            merged.push(b.clone());
        }
    }
    merged.sort_by_key(|b| {
        let nonzero = b.iter().filter(|c| !c.is_zero()).count();
        let min_e = b
            .iter()
            .filter_map(|c| match c {
                BranchComp::Leading { mu_pow, .. } => Some(*mu_pow),
                BranchComp::Zero => None,
            })
            .min()
            .unwrap_or(0);
        (nonzero, std::cmp::Reverse(min_e))
    });

    let branches: Vec<BranchFormula> = merged
        .iter()
        .map(|comps| {
            let ambient = ambient_components(summand, comps, &solver.syms);
            let exponent = ambient
                .iter()
                .filter_map(|c| match c {
                    BranchComp::Leading { mu_pow, .. } => Some(*mu_pow),
                    BranchComp::Zero => None,
                })
                .min()
                .map(|e| {
                    let g = gcd(e, 2);
                    (e / g, 2 / g)
                });
            let synchrony = synchrony_tag(&ambient, &solver.syms, "X");
            let rendered = render_branch(&ambient, &solver.syms, "X");
            BranchFormula { components: comps.clone(), ambient, exponent, synchrony, rendered }
        })
        .collect();

    let kind = if solver.unresolved {
        Kind::Unresolved
    } else if summand.sub.dim() >= 2 {
        Kind::Composite
    } else {
        let has_zero = branches.iter().any(|b| b.components.iter().all(|c| c.is_zero()));
        let nonzero: Vec<&BranchFormula> =
            branches.iter().filter(|b| b.components.iter().any(|c| !c.is_zero())).collect();
        let exps: Vec<(u32, u32)> = nonzero.iter().filter_map(|b| b.exponent).collect();
        match (has_zero, exps.as_slice()) {
            (false, [(1, 2)]) => Kind::SaddleNode,
            (true, [(1, 1)]) => Kind::Transcritical,
            (true, [(1, 2)]) => Kind::Pitchfork,
            _ => Kind::Composite,
        }
    };

    let genericity_rendered: Vec<String> =
        solver.genericity.iter().map(|p| format!("{} != 0", p.render(&solver.syms))).collect();
    BifurcationClass {
        summand_index,
        dim: summand.sub.dim(),
        division_type: summand.division_type,
        kind,
        family,
        syms: solver.syms,
        branches,
        genericity: solver.genericity,
        genericity_rendered,
    }
}

/// Classify every summand of a multiplicity-free decomposition.
pub fn classify_codim1(report: &DecompositionReport) -> Result<Vec<BifurcationClass>> {
    if !report.multiplicity_free {
        return Err(NetsymError::HypothesisViolated(
            "classification theorem hypothesis violated: isomorphic summands repeat".to_string(),
        ));
    }
    Ok(report
        .summands
        .iter()
        .enumerate()
        .map(|(i, s)| classify_summand(s, i))
        .collect())
}

/// Numeric evaluation of a symbolic classification at concrete coefficients.
#[derive(Debug, Clone)]
pub enum InstancePrediction {
    /// a flagged genericity coefficient vanishes: the instance is outside
    /// the generic regime and the branch formulas do not apply
    NonGeneric { failing: Vec<String> },
    Branches(Vec<PredictedBranch>),
}

#[derive(Debug, Clone)]
pub struct PredictedBranch {
    pub description: Vec<String>,
    pub synchrony: String,
    /// leading λ-exponent (None for the trivial branch)
    pub exponent: Option<f64>,
    /// per requested λ: the predicted state in ambient coordinates, or None
    /// when the leading-order formula is not real there
    pub points: Vec<Option<Vec<f64>>>,
    /// the same states in summand coordinates u
    pub summand_points: Vec<Option<Vec<f64>>>,
}

const GENERICITY_TOL: f64 = 1e-9;

/// Evaluate the branch formulas of `class` at coefficient values `cvals`
/// (ordered like `class.family` coefficients) on a grid of λ values.
pub fn instantiate_class(
    class: &BifurcationClass,
    cvals: &[f64],
    lambdas: &[f64],
) -> InstancePrediction {
    assert_eq!(cvals.len(), class.family.num_coeffs());
    // coefficient symbols come first in the table; radicand polynomials
    // reference only those
    let mut base_vals = vec![0.0; class.syms.len()];
    base_vals[..cvals.len()].copy_from_slice(cvals);
    let mut failing = Vec::new();
    for (p, label) in class.genericity.iter().zip(&class.genericity_rendered) {
        if p.eval(&base_vals, &class.syms).abs() < GENERICITY_TOL {
            failing.push(label.clone());
        }
    }
    if !failing.is_empty() {
        return InstancePrediction::NonGeneric { failing };
    }

    // every sqrt symbol gets a ± choice per arm
    let sqrt_ids: Vec<usize> =
        (0..class.syms.len()).filter(|&i| class.syms.square_of(i).is_some()).collect();
    let mut out = Vec::new();
    for branch in &class.branches {
        let n_arms = 1usize << sqrt_ids.len();
        let mut arms: Vec<(Vec<Option<Vec<f64>>>, Vec<Option<Vec<f64>>>)> = Vec::new();
        for arm in 0..n_arms {
            let mut points = Vec::with_capacity(lambdas.len());
            let mut upoints = Vec::with_capacity(lambdas.len());
            for &lam in lambdas {
                points.push(predict_point(class, &branch.ambient, &base_vals, &sqrt_ids, arm, lam));
                upoints.push(predict_point(
                    class,
                    &branch.components,
                    &base_vals,
                    &sqrt_ids,
                    arm,
                    lam,
                ));
            }
            let pair = (points, upoints);
            if pair.0.iter().any(|p| p.is_some()) && !arms.contains(&pair) {
                arms.push(pair);
            }
        }
        let exponent = branch.exponent.map(|(n, d)| n as f64 / d as f64);
        for (points, summand_points) in arms {
            out.push(PredictedBranch {
                description: branch.rendered.clone(),
                synchrony: branch.synchrony.clone(),
                exponent,
                points,
                summand_points,
            });
        }
    }
    InstancePrediction::Branches(out)
}

fn predict_point(
    class: &BifurcationClass,
    comps: &[BranchComp],
    base_vals: &[f64],
    sqrt_ids: &[usize],
    arm: usize,
    lam: f64,
) -> Option<Vec<f64>> {
    // μ = principal complex square root of λ; sqrt symbols likewise
    let mu = Complex64::new(lam, 0.0).sqrt();
    let mut vals: Vec<Complex64> = base_vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    for (bit, &id) in sqrt_ids.iter().enumerate() {
        let radicand = class.syms.square_of(id).expect("sqrt symbol").eval(base_vals, &class.syms);
        let sign = if arm >> bit & 1 == 0 { 1.0 } else { -1.0 };
        vals[id] = Complex64::new(radicand, 0.0).sqrt() * sign;
    }
    let eval_poly = |p: &Poly| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (mono, c) in &p.terms {
            let mut term = Complex64::new(rat_to_f64(c), 0.0);
            for (&id, &e) in mono {
                term *= vals[id].powu(e);
            }
            acc += term;
        }
        acc
    };
    let mut point = Vec::with_capacity(comps.len());
    let scale: f64 = base_vals.iter().map(|v| v.abs()).fold(1.0, f64::max);
    for comp in comps {
        match comp {
            BranchComp::Zero => point.push(0.0),
            BranchComp::Leading { coeff, mu_pow } => {
                let den = eval_poly(&coeff.den);
                if den.norm() < 1e-14 {
                    return None;
                }
                let v = eval_poly(&coeff.num) / den * mu.powu(*mu_pow);
                if v.im.abs() > 1e-9 * scale.max(v.norm()) {
                    return None;
                }
                point.push(v.re);
            }
        }
    }
    Some(point)
}

fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or(f64::NAN)
}

/// Push a synchrony pattern of the fundamental network down to the original
/// network: cells i, and inputs j ~ k in the fundamental pattern force
/// x_{σ_j(i)} = x_{σ_k(i)}.
pub fn lift_partition(spec: &NetworkSpec, fund_partition: &Partition) -> Partition {
    let n_cells = spec.num_cells();
    let mut parent: Vec<usize> = (0..n_cells).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n_cells {
        for block in fund_partition.blocks() {
            let first = spec.map(block[0]).apply(i);
            for &other in &block[1..] {
                let a = find(&mut parent, first);
                let b = find(&mut parent, spec.map(other).apply(i));
                parent[a] = b;
            }
        }
    }
    let labels: Vec<usize> = (0..n_cells).map(|i| find(&mut parent, i)).collect();
    Partition::from_labels(&labels)
}

/// The synchrony pattern of a branch, read off from which components share
/// the same leading term (zeros form one value class).
pub fn branch_value_partition(ambient: &[BranchComp], syms: &SymTable) -> Partition {
    let n = ambient.len();
    let mut labels = vec![usize::MAX; n];
    let mut reps: Vec<usize> = Vec::new();
    for k in 0..n {
        let mut found = None;
        for (ci, &r) in reps.iter().enumerate() {
            if ambient[k].eq(&ambient[r], syms) {
                found = Some(ci);
                break;
            }
        }
        let ci = found.unwrap_or_else(|| {
            reps.push(k);
            reps.len() - 1
        });
        labels[k] = ci;
    }
    Partition::from_labels(&labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{catalogue_table, fundamental_from_table, rep_matrices, running_example};
    use crate::rat::rat;
    use crate::repalg::decompose_report;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn classes_of_catalogue(which: usize) -> Vec<BifurcationClass> {
        let table = catalogue_table(3, which).unwrap();
        let fnet = fundamental_from_table(&table).unwrap();
        let rep = rep_matrices(&fnet, 1);
        let report = decompose_report(&rep, 0x5EED).unwrap();
        let mut classes = classify_codim1(&report).unwrap();
        classes.sort_by_key(|c| (c.dim, c.branches.len()));
        classes
    }

    fn shape(classes: &[BifurcationClass]) -> Vec<(usize, &'static str, usize)> {
        classes.iter().map(|c| (c.dim, c.kind.as_str(), c.branches.len())).collect()
    }

    #[test]
    fn catalogue_kinds_and_branch_counts() {
        // the three-cell catalogue, summands sorted by (dim, branch count)
        let expected: Vec<Vec<(usize, &str, usize)>> = vec![
            vec![(1, "saddle-node", 1), (2, "composite", 3)],
            vec![(1, "saddle-node", 1), (1, "pitchfork", 2), (1, "transcritical", 2)],
            vec![(1, "saddle-node", 1), (1, "transcritical", 2), (1, "transcritical", 2)],
            vec![(1, "saddle-node", 1), (2, "composite", 4)],
            vec![(1, "transcritical", 2), (2, "composite", 2)],
            vec![(1, "saddle-node", 1), (2, "none-generic", 0)],
            vec![(1, "saddle-node", 1), (1, "pitchfork", 2), (1, "transcritical", 2)],
        ];
        for (which, want) in (1..=7).zip(&expected) {
            let classes = classes_of_catalogue(which);
            let mut got = shape(&classes);
            got.sort_by_key(|&(d, k, n)| (d, n, k));
            let mut want = want.clone();
            want.sort_by_key(|&(d, k, n)| (d, n, k));
            assert_eq!(got, want, "catalogue entry {which}");
        }
    }

    #[test]
    fn sigma1_composite_branch_structure() {
        let classes = classes_of_catalogue(1);
        let comp = classes.iter().find(|c| c.dim == 2).unwrap();
        assert_eq!(comp.kind, Kind::Composite);
        // trivial branch, a λ-linear branch, and a √λ branch
        let mut exps: Vec<Option<(u32, u32)>> = comp.branches.iter().map(|b| b.exponent).collect();
        exps.sort();
        assert_eq!(exps, vec![None, Some((1, 1)), Some((1, 2))]);
        // the summand is {X2 = 0}: every branch keeps the second fundamental
        // cell at zero, and the λ-linear branch has a single nonzero component
        for b in &comp.branches {
            assert!(b.ambient[1].is_zero(), "branches lie inside {{X2 = 0}}");
        }
        let linear = comp.branches.iter().find(|b| b.exponent == Some((1, 1))).unwrap();
        assert_eq!(linear.ambient.iter().filter(|c| !c.is_zero()).count(), 1);
        let sqrt = comp.branches.iter().find(|b| b.exponent == Some((1, 2))).unwrap();
        assert_eq!(sqrt.ambient.iter().filter(|c| !c.is_zero()).count(), 2);
    }

    #[test]
    fn hypothesis_guard_refuses_repeated_summands() {
        // the trivial monoid acting on V = ℝ²: two copies of the trivial rep
        let table = crate::network::MonoidTable::new(vec![vec![0]]).unwrap();
        let fnet = fundamental_from_table(&table).unwrap();
        let rep = rep_matrices(&fnet, 2);
        let report = decompose_report(&rep, 0x5EED).unwrap();
        assert!(!report.multiplicity_free);
        let err = classify_codim1(&report).unwrap_err();
        assert!(err.to_string().contains("hypothesis violated"));
    }

    #[test]
    fn degenerate_coefficient_guard() {
        let classes = classes_of_catalogue(4);
        let comp = classes.iter().find(|c| c.dim == 2).unwrap();
        assert!(!comp.genericity.is_empty());
        // choose coefficients that zero out the first flagged condition:
        // the condition is affine in some symbol once the others are set to 1
        let p = &comp.genericity[0];
        let k = comp.family.num_coeffs();
        let mut cvals = vec![1.0; k];
        'sym: for s in 0..k {
            // p = A·s + B with A, B independent of s?
            if p.terms.keys().any(|m| m.get(&s).map_or(false, |&e| e > 1)) {
                continue;
            }
            let mut a = 0.0;
            let mut b = 0.0;
            for (mono, c) in &p.terms {
                let mut v = rat_to_f64(c);
                for (&id, &e) in mono {
                    if id != s {
                        v *= 1f64.powi(e as i32);
                    }
                }
                if mono.contains_key(&s) {
                    a += v;
                } else {
                    b += v;
                }
            }
            if a.abs() > 1e-12 {
                cvals[s] = -b / a;
                break 'sym;
            }
        }
        match instantiate_class(comp, &cvals, &[1e-3]) {
            InstancePrediction::NonGeneric { failing } => assert!(!failing.is_empty()),
            InstancePrediction::Branches(_) => panic!("expected a non-generic instance"),
        }
    }

    #[test]
    fn predicted_points_refine_under_newton() {
        // leading-order correctness oracle: each predicted branch point,
        // used as a Newton seed on the instantiated family map, converges
        // to a solution within a few percent of the prediction
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for which in [1usize, 4, 5] {
            let classes = classes_of_catalogue(which);
            let comp = classes.iter().find(|c| c.dim == 2).unwrap();
            let k = comp.family.num_coeffs();
            let cvals_rat: Vec<crate::rat::Rat> = (0..k)
                .map(|_| {
                    let v = rng.gen_range(1..=6) * if rng.gen_bool(0.5) { 1 } else { -1 };
                    rat(v)
                })
                .collect();
            let cvals: Vec<f64> = cvals_rat.iter().map(rat_to_f64).collect();
            let inst = comp.family.instantiate(&cvals_rat);
            let inst_f64: Vec<Vec<f64>> =
                inst.iter().map(|row| row.iter().map(rat_to_f64).collect()).collect();
            let monos = &comp.family.monomials;
            let r = |u: &[f64], lam: f64| -> Vec<f64> {
                inst_f64
                    .iter()
                    .map(|row| {
                        let mut acc = 0.0;
                        for (t, c) in monos.iter().zip(row) {
                            if *c == 0.0 {
                                continue;
                            }
                            let mut v = *c;
                            for (j, &e) in t.alpha.iter().enumerate() {
                                v *= u[j].powi(e as i32);
                            }
                            v *= lam.powi(t.beta as i32);
                            acc += v;
                        }
                        acc
                    })
                    .collect()
            };
            let lambdas = [1e-5, -1e-5];
            let pred = match instantiate_class(comp, &cvals, &lambdas) {
                InstancePrediction::Branches(b) => b,
                InstancePrediction::NonGeneric { failing } => {
                    panic!("random odd coefficients hit a degenerate set: {failing:?}")
                }
            };
            let mut verified = 0usize;
            for branch in &pred {
                for (li, up) in branch.summand_points.iter().enumerate() {
                    let Some(u0) = up else { continue };
                    let lam = lambdas[li];
                    // damped Newton with finite-difference Jacobian
                    let mut u = u0.clone();
                    for _ in 0..60 {
                        let f = r(&u, lam);
                        let h = 1e-9;
                        let mut jac = [[0.0f64; 2]; 2];
                        for j in 0..2 {
                            let mut up_ = u.clone();
                            up_[j] += h;
                            let fp = r(&up_, lam);
                            for i in 0..2 {
                                jac[i][j] = (fp[i] - f[i]) / h;
                            }
                        }
                        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
                        if det.abs() < 1e-18 {
                            break;
                        }
                        let du = [
                            (f[0] * jac[1][1] - f[1] * jac[0][1]) / det,
                            (jac[0][0] * f[1] - jac[1][0] * f[0]) / det,
                        ];
                        u[0] -= du[0];
                        u[1] -= du[1];
                        if du[0].abs() + du[1].abs() < 1e-14 {
                            break;
                        }
                    }
                    let res = r(&u, lam);
                    assert!(res[0].abs() + res[1].abs() < 1e-10, "Newton residual, catalogue {which}");
                    let dist =
                        ((u[0] - u0[0]).powi(2) + (u[1] - u0[1]).powi(2)).sqrt();
                    let scale = (u0[0].powi(2) + u0[1].powi(2)).sqrt().max(1e-6);
                    assert!(
                        dist <= 0.05 * scale.max(lam.abs().sqrt()),
                        "catalogue {which}: prediction {u0:?} refined to {u:?} at λ={lam}"
                    );
                    verified += 1;
                }
            }
            assert!(verified >= 3, "catalogue {which}: too few real predicted points");
        }
    }

    #[test]
    fn lift_partition_goldens() {
        let spec = running_example();
        let lifted = lift_partition(&spec, &Partition::from_labels(&[0, 1, 1]));
        assert_eq!(lifted, Partition::from_labels(&[0, 0, 1])); // {X2=X3} → {x1=x2}
        let lifted = lift_partition(&spec, &Partition::from_labels(&[0, 0, 1]));
        assert_eq!(lifted, Partition::from_labels(&[0, 1, 0])); // {X1=X2} → {x1=x3}
        let lifted = lift_partition(&spec, &Partition::all_in_one(3));
        assert_eq!(lifted, Partition::all_in_one(3));
        let lifted = lift_partition(&spec, &Partition::singletons(3));
        assert_eq!(lifted, Partition::singletons(3));
    }
}
