//! Serializable report types. All cell, map and summand indices are
//! 1-indexed in reports; field order (and therefore output bytes) is fixed
//! by the struct declarations.

use netsym::bifurcation::BifurcationClass;
use netsym::network::{FundamentalNetwork, MonoidTable, NetworkSpec};
use netsym::repalg::{DecompositionReport, DivisionType};
use netsym::synchrony::{Partition, SymmetryExpr};
use serde::Serialize;

#[derive(Serialize)]
pub struct TableReport {
    pub size: usize,
    /// 1-indexed position of the unit, or null for a semigroup without one
    pub unit: Option<usize>,
    pub table: Vec<Vec<usize>>,
    /// the closed map set, 1-indexed images
    pub maps: Vec<Vec<usize>>,
}

impl TableReport {
    pub fn new(spec: &NetworkSpec, table: &MonoidTable) -> Self {
        TableReport {
            size: table.size(),
            unit: table.unit_index().map(|u| u + 1),
            table: table
                .rows()
                .iter()
                .map(|r| r.iter().map(|&v| v + 1).collect())
                .collect(),
            maps: spec.maps().iter().map(|m| m.to_one_indexed()).collect(),
        }
    }
}

#[derive(Serialize)]
pub struct FundamentalReport {
    pub cells: usize,
    /// 1-indexed position of the unit in the monoid
    pub unit: usize,
    /// left-multiplication maps σ̃, 1-indexed images
    pub tilde_maps: Vec<Vec<usize>>,
    /// equations[j] = argument cells of Ẋ_j = f(X_…)
    pub equations: Vec<Vec<usize>>,
    /// conjugations[i][k] = cell of the original network feeding slot k of
    /// π_i, i.e. π_i(x)_k = x_{σ_k(i)}
    pub conjugations: Vec<Vec<usize>>,
}

impl FundamentalReport {
    pub fn new(orig: &NetworkSpec, fund: &FundamentalNetwork) -> Self {
        let conjugations = (0..orig.num_cells())
            .map(|i| orig.maps().iter().map(|s| s.apply(i) + 1).collect())
            .collect();
        FundamentalReport {
            cells: fund.num_cells(),
            unit: fund.unit_index() + 1,
            tilde_maps: fund.tilde_maps().iter().map(|m| m.to_one_indexed()).collect(),
            equations: fund.equations(),
            conjugations,
        }
    }
}

#[derive(Serialize)]
pub struct PartitionReport {
    pub blocks: Vec<Vec<usize>>,
    pub balanced: bool,
    /// generating symmetry expression, when the partition was reached from
    /// fixed/image/preimage spaces of the representation maps
    pub symmetry: Option<String>,
}

#[derive(Serialize)]
pub struct SynchronyReport {
    pub cells: usize,
    pub partitions: Vec<PartitionReport>,
    /// how many balanced partitions were reached by symmetry derivations
    pub symmetry_coverage: usize,
}

impl SynchronyReport {
    pub fn new(
        spec: &NetworkSpec,
        balanced: &[Partition],
        symmetry: &[(Partition, SymmetryExpr)],
    ) -> Self {
        let partitions: Vec<PartitionReport> = balanced
            .iter()
            .map(|p| PartitionReport {
                blocks: p.blocks_one_indexed(),
                balanced: true,
                symmetry: symmetry
                    .iter()
                    .find(|(q, _)| q == p)
                    .map(|(_, e)| e.render()),
            })
            .collect();
        let symmetry_coverage = partitions.iter().filter(|p| p.symmetry.is_some()).count();
        SynchronyReport {
            cells: spec.num_cells(),
            partitions,
            symmetry_coverage,
        }
    }
}

#[derive(Serialize)]
pub struct SummandReport {
    pub dim: usize,
    /// columns spanning the summand inside W, entries as rational strings
    pub basis: Vec<Vec<String>>,
    pub end_dim: usize,
    pub radical_dim: usize,
    pub division_type: DivisionType,
    pub indecomposable: bool,
    pub irreducible: bool,
}

#[derive(Serialize)]
pub struct DecomposeReport {
    pub ambient_dim: usize,
    pub seed: u64,
    pub summands: Vec<SummandReport>,
    /// partition of 1-indexed summand positions into isomorphism classes
    pub iso_classes: Vec<Vec<usize>>,
    pub multiplicity_free: bool,
}

impl DecomposeReport {
    pub fn new(ambient_dim: usize, seed: u64, report: &DecompositionReport) -> Self {
        DecomposeReport {
            ambient_dim,
            seed,
            summands: report
                .summands
                .iter()
                .map(|s| SummandReport {
                    dim: s.sub.dim(),
                    basis: s
                        .sub
                        .basis
                        .iter()
                        .map(|col| col.iter().map(|v| v.to_string()).collect())
                        .collect(),
                    end_dim: s.end_dim,
                    radical_dim: s.radical_dim,
                    division_type: s.division_type,
                    indecomposable: s.indecomposable,
                    irreducible: s.irreducible,
                })
                .collect(),
            iso_classes: report
                .iso_classes
                .iter()
                .map(|c| c.iter().map(|&i| i + 1).collect())
                .collect(),
            multiplicity_free: report.multiplicity_free,
        }
    }
}

#[derive(Serialize)]
pub struct BranchReport {
    /// leading λ-exponent as a reduced fraction string, e.g. "1" or "1/2"
    pub exponent: Option<String>,
    pub synchrony: String,
    /// one rendered asymptotic formula per ambient component
    pub formulas: Vec<String>,
}

#[derive(Serialize)]
pub struct ClassReport {
    pub summand: usize,
    pub dim: usize,
    pub division_type: DivisionType,
    pub kind: String,
    pub branches: Vec<BranchReport>,
    /// coefficient polynomials that must not vanish for the leading-order
    /// analysis to apply
    pub genericity: Vec<String>,
}

impl ClassReport {
    pub fn new(class: &BifurcationClass) -> Self {
        ClassReport {
            summand: class.summand_index + 1,
            dim: class.dim,
            division_type: class.division_type,
            kind: class.kind.as_str().to_string(),
            branches: class
                .branches
                .iter()
                .map(|b| BranchReport {
                    exponent: b.exponent.map(|(p, q)| {
                        if q == 1 {
                            format!("{p}")
                        } else {
                            format!("{p}/{q}")
                        }
                    }),
                    synchrony: b.synchrony.clone(),
                    formulas: b.rendered.clone(),
                })
                .collect(),
            genericity: class.genericity_rendered.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct ClassifyReport {
    pub dim_v: usize,
    pub multiplicity_free: bool,
    pub classes: Vec<ClassReport>,
}

#[derive(Serialize)]
pub struct VerifyReport {
    pub lambda: f64,
    pub t_end: f64,
    pub dt: f64,
    pub semiconjugacy_residual: f64,
    pub equilibrium_residual_original: f64,
    pub equilibrium_residual_fundamental: f64,
    pub tolerance: f64,
    pub ok: bool,
}

#[derive(Serialize)]
pub struct ContinueBranchSummary {
    pub file: String,
    pub points: usize,
    pub fitted_exponent: Option<f64>,
    pub max_residual: f64,
    pub lambda_outer: f64,
    pub x_outer: Vec<f64>,
}

#[derive(Serialize)]
pub struct ContinueSummary {
    pub lambda0: f64,
    pub range: (f64, f64),
    pub step: f64,
    pub branches: Vec<ContinueBranchSummary>,
}

#[derive(Serialize)]
pub struct EnumerateReport {
    pub cells: usize,
    pub count: usize,
    pub classes: Vec<TableOnly>,
}

#[derive(Serialize)]
pub struct TableOnly {
    pub size: usize,
    pub unit: Option<usize>,
    pub table: Vec<Vec<usize>>,
}

impl TableOnly {
    pub fn new(table: &MonoidTable) -> Self {
        TableOnly {
            size: table.size(),
            unit: table.unit_index().map(|u| u + 1),
            table: table
                .rows()
                .iter()
                .map(|r| r.iter().map(|&v| v + 1).collect())
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct CatalogueEntry {
    pub index: usize,
    pub table: TableOnly,
    pub equations: Vec<Vec<usize>>,
    pub balanced_partitions: Vec<Vec<Vec<usize>>>,
    pub decomposition: DecomposeReport,
    pub classification: ClassifyReport,
}

#[derive(Serialize)]
pub struct CatalogueReport {
    pub cells: usize,
    pub seed: u64,
    pub monoids: Vec<CatalogueEntry>,
}
