//! `netsym` — command line front end.
//!
//! Every subcommand validates its inputs, computes one report and writes it
//! atomically (no partial artifacts). Exit code 0 on success; 2 on any
//! error, with a one-line machine-readable JSON diagnostic on stderr.

mod report;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netsym::bifurcation::{classify_codim1, continue_branches, ContinuationOptions};
use netsym::dsl::{parse, Expr};
use netsym::network::{
    catalogue_table, enumerate_monoids, fundamental_from_table, fundamental_network,
    semigroup_closure, table_of, NetworkSpec, NetworkSpecFile,
};
use netsym::repalg::{decompose_report, DEFAULT_SEED};
use netsym::synchrony::{enumerate_balanced, synchrony_from_symmetry, SYMMETRY_CLOSURE_CAP};
use netsym::NetsymError;
use report::*;

#[derive(Parser)]
#[command(name = "netsym", version, about = "Coupled-cell network analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// RNG seed for the decomposition search (falls back to NETSYM_SEED,
    /// then to the built-in default)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// write the report here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// named constants usable in response expressions, e.g. --const a=1.5
    #[arg(long = "const", value_name = "NAME=VALUE", global = true)]
    consts: Vec<String>,
}

#[derive(Args)]
struct FieldArgs {
    /// response function: a file path, or the expression itself
    #[arg(short = 'f', long = "field")]
    field: String,
    /// initial/base point, comma-separated
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
}

impl FieldArgs {
    fn x0(&self) -> Result<Vec<f64>, NetsymError> {
        self.x0
            .split(',')
            .map(|t| {
                t.trim().parse().map_err(|_| {
                    NetsymError::InvalidSpec(format!("--x0: `{t}` is not a number"))
                })
            })
            .collect()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Close the map set under composition and print the composition table
    Closure { net: PathBuf },
    /// Fundamental network: σ̃ maps, equations and conjugations π_i
    Fundamental { net: PathBuf },
    /// Balanced partitions, tagged with symmetry derivations where found
    Synchrony {
        net: PathBuf,
        /// analyse the fundamental network instead of the input network
        #[arg(long)]
        fundamental: bool,
    },
    /// Decompose the monoid representation into indecomposable summands
    Decompose {
        net: PathBuf,
        /// internal dimension of each cell
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Classify generic codimension-one synchrony-breaking bifurcations
    Classify {
        net: PathBuf,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Integrate the network ODE and emit a CSV trajectory
    Simulate {
        net: PathBuf,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        lambda: f64,
        /// integration time
        #[arg(long)]
        t: f64,
        /// step size
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        fundamental: bool,
    },
    /// Continue steady-state branches through a bifurcation point
    Continue {
        net: PathBuf,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        lambda0: f64,
        /// λ interval, two values
        #[arg(long, num_args = 2, allow_hyphen_values = true)]
        range: Vec<f64>,
        #[arg(long, default_value_t = 1e-2)]
        step: f64,
        /// Newton corrector tolerance
        #[arg(long, default_value_t = 1e-10)]
        tol_newton: f64,
    },
    /// Check the semiconjugacy identity along trajectories
    Verify {
        net: PathBuf,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        /// residual threshold for the ok flag
        #[arg(long, default_value_t = 1e-7)]
        tol_residual: f64,
    },
    /// Enumerate monoids of self-maps of {1..n} up to isomorphism
    EnumerateMonoids {
        n: usize,
        /// refuse n above this bound
        #[arg(long, default_value_t = 5)]
        bound: usize,
    },
    /// Full report for every monoid of the given cell count, end to end
    Catalogue {
        #[arg(default_value_t = 3)]
        cells: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (code, message) = diagnostic(&e);
            eprintln!(
                "{}",
                serde_json::json!({ "error": code, "message": message })
            );
            ExitCode::from(2)
        }
    }
}

/// Stable error codes for scripting against stderr.
fn diagnostic(e: &NetsymError) -> (&'static str, String) {
    let code = match e {
        NetsymError::InvalidSpec(_) => "invalid-spec",
        NetsymError::NotAMonoid(_) => "not-a-monoid",
        NetsymError::BoundExceeded { .. } => "bound-exceeded",
        NetsymError::SyntaxError { .. } => "syntax-error",
        NetsymError::UnknownVariable(_) => "unknown-variable",
        NetsymError::NonFinite(_) => "non-finite",
        NetsymError::SplitFailure(_) => "split-failure",
        NetsymError::NotIndecomposable(_) => "not-indecomposable",
        NetsymError::HypothesisViolated(_) => "hypothesis-violated",
        NetsymError::IllConditioned(_) => "ill-conditioned",
        NetsymError::NotEquilibrium(_) => "not-equilibrium",
        NetsymError::NotSymmetricPoint(_) => "not-symmetric-point",
        NetsymError::NewtonDivergence(_) => "newton-divergence",
        NetsymError::NoConvergence(_) => "no-convergence",
        NetsymError::StepUnderflow(_) => "step-underflow",
        NetsymError::Io(_) => "io",
        NetsymError::Json(_) => "json",
    };
    (code, e.to_string())
}

fn run(cli: Cli) -> Result<(), NetsymError> {
    let seed = cli
        .seed
        .or_else(|| {
            std::env::var("NETSYM_SEED")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(DEFAULT_SEED);
    let consts = parse_consts(&cli.consts)?;
    let out = cli.out;

    match cli.command {
        Command::Closure { net } => {
            let spec = load_spec(&net)?;
            let (closed, table) = semigroup_closure(&spec)?;
            emit_json(&out, &TableReport::new(&closed, &table))
        }
        Command::Fundamental { net } => {
            let spec = load_spec(&net)?;
            let closed = netsym::network::monoid_completion(&spec)?;
            let fund = fundamental_network(&closed)?;
            emit_json(&out, &FundamentalReport::new(&closed, &fund))
        }
        Command::Synchrony { net, fundamental } => {
            let spec = load_spec(&net)?;
            let target = if fundamental {
                let closed = netsym::network::monoid_completion(&spec)?;
                fundamental_network(&closed)?.as_spec()?
            } else {
                spec
            };
            let balanced = enumerate_balanced(&target)?;
            let symmetry = if target.is_monoid() {
                synchrony_from_symmetry(&target, SYMMETRY_CLOSURE_CAP)?
            } else {
                Vec::new()
            };
            emit_json(&out, &SynchronyReport::new(&target, &balanced, &symmetry))
        }
        Command::Decompose { net, dim } => {
            let spec = load_spec(&net)?;
            let fund = fundamental_of(&spec)?;
            let rep = netsym::network::rep_matrices(&fund, dim);
            let report = decompose_report(&rep, seed)?;
            emit_json(&out, &DecomposeReport::new(rep.ambient_dim(), seed, &report))
        }
        Command::Classify { net, dim } => {
            let spec = load_spec(&net)?;
            let fund = fundamental_of(&spec)?;
            let rep = netsym::network::rep_matrices(&fund, dim);
            let report = decompose_report(&rep, seed)?;
            let classes = classify_codim1(&report)?;
            emit_json(
                &out,
                &ClassifyReport {
                    dim_v: dim,
                    multiplicity_free: report.multiplicity_free,
                    classes: classes.iter().map(ClassReport::new).collect(),
                },
            )
        }
        Command::Simulate {
            net,
            field,
            lambda,
            t,
            dt,
            fundamental,
        } => {
            let spec = load_spec(&net)?;
            let target = if fundamental {
                fundamental_of(&spec)?.as_spec()?
            } else {
                spec
            };
            let expr = load_expr(&field.field, &consts)?;
            let traj = netsym::simulator::simulate_network(
                &target, &expr, lambda, &field.x0()?, t, dt, 1,
            )?;
            let mut csv = String::from("t");
            for i in 1..=target.num_cells() {
                csv.push_str(&format!(",x{i}"));
            }
            csv.push('\n');
            for (time, state) in traj.times.iter().zip(&traj.states) {
                csv.push_str(&format!("{time}"));
                for v in state {
                    csv.push_str(&format!(",{v}"));
                }
                csv.push('\n');
            }
            emit_text(&out, &csv)
        }
        Command::Continue {
            net,
            field,
            lambda0,
            range,
            step,
            tol_newton,
        } => {
            let spec = load_spec(&net)?;
            let fund = fundamental_of(&spec)?;
            let expr = load_expr(&field.field, &consts)?;
            let opts = ContinuationOptions {
                step,
                newton_tol: tol_newton,
            };
            let runs = continue_branches(
                &fund,
                &expr,
                &field.x0()?,
                lambda0,
                (range[0], range[1]),
                &opts,
            )?;
            // branch CSVs live next to the summary (or in the cwd)
            let dir = out
                .as_deref()
                .and_then(Path::parent)
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf();
            fs::create_dir_all(&dir)?;
            let mut branches = Vec::new();
            for (k, run) in runs.iter().enumerate() {
                let file = dir.join(format!("branch-{:02}.csv", k + 1));
                let mut csv = String::from("lambda");
                for i in 1..=fund.num_cells() {
                    csv.push_str(&format!(",X{i}"));
                }
                csv.push_str(",residual\n");
                for ((lam, x), res) in run.points.iter().zip(&run.residuals) {
                    csv.push_str(&format!("{lam}"));
                    for v in x {
                        csv.push_str(&format!(",{v}"));
                    }
                    csv.push_str(&format!(",{res}\n"));
                }
                fs::write(&file, csv)?;
                branches.push(ContinueBranchSummary {
                    file: file.to_string_lossy().into_owned(),
                    points: run.points.len(),
                    fitted_exponent: run.fitted_exponent,
                    max_residual: run.residuals.iter().fold(0.0f64, |m, r| m.max(*r)),
                    lambda_outer: run.points[0].0,
                    x_outer: run.points[0].1.clone(),
                });
            }
            emit_json(
                &out,
                &ContinueSummary {
                    lambda0,
                    range: (range[0], range[1]),
                    step,
                    branches,
                },
            )
        }
        Command::Verify {
            net,
            field,
            lambda,
            t,
            dt,
            tol_residual,
        } => {
            let spec = load_spec(&net)?;
            let expr = load_expr(&field.field, &consts)?;
            let semi = netsym::simulator::semiconjugacy_residual(
                &spec, &expr, lambda, &field.x0()?, t, dt,
            )?;
            let (eq_orig, eq_fund) =
                netsym::simulator::equilibrium_correspondence(&spec, &expr, lambda, &field.x0()?)?;
            emit_json(
                &out,
                &VerifyReport {
                    lambda,
                    t_end: t,
                    dt,
                    semiconjugacy_residual: semi,
                    equilibrium_residual_original: eq_orig,
                    equilibrium_residual_fundamental: eq_fund,
                    tolerance: tol_residual,
                    ok: semi < tol_residual,
                },
            )
        }
        Command::EnumerateMonoids { n, bound } => {
            let tables = enumerate_monoids(n, bound)?;
            emit_json(
                &out,
                &EnumerateReport {
                    cells: n,
                    count: tables.len(),
                    classes: tables.iter().map(TableOnly::new).collect(),
                },
            )
        }
        Command::Catalogue { cells } => {
            let mut monoids = Vec::new();
            for which in 1.. {
                let Some(table) = catalogue_table(cells, which) else {
                    break;
                };
                let fund = fundamental_from_table(&table)?;
                let fspec = fund.as_spec()?;
                let rep = netsym::network::rep_matrices(&fund, 1);
                let decomp = decompose_report(&rep, seed)?;
                let classes = classify_codim1(&decomp)?;
                monoids.push(CatalogueEntry {
                    index: which,
                    table: TableOnly::new(&table),
                    equations: fund.equations(),
                    balanced_partitions: enumerate_balanced(&fspec)?
                        .iter()
                        .map(|p| p.blocks_one_indexed())
                        .collect(),
                    decomposition: DecomposeReport::new(rep.ambient_dim(), seed, &decomp),
                    classification: ClassifyReport {
                        dim_v: 1,
                        multiplicity_free: decomp.multiplicity_free,
                        classes: classes.iter().map(ClassReport::new).collect(),
                    },
                });
            }
            if monoids.is_empty() {
                return Err(NetsymError::InvalidSpec(format!(
                    "no catalogue for {cells} cells"
                )));
            }
            emit_json(&out, &CatalogueReport { cells, seed, monoids })
        }
    }
}

fn load_spec(path: &Path) -> Result<NetworkSpec, NetsymError> {
    let text = fs::read_to_string(path)?;
    let file: NetworkSpecFile = serde_json::from_str(&text)?;
    NetworkSpec::from_file_repr(&file)
}

/// The fundamental network of the monoid completion of the closure.
fn fundamental_of(spec: &NetworkSpec) -> Result<netsym::network::FundamentalNetwork, NetsymError> {
    let closed = netsym::network::monoid_completion(spec)?;
    let table = table_of(&closed)?;
    fundamental_from_table(&table)
}

/// Read the response function from a file when the argument names one,
/// otherwise parse the argument itself as an expression.
fn load_expr(arg: &str, consts: &HashMap<String, f64>) -> Result<Expr, NetsymError> {
    let src = match fs::read_to_string(arg) {
        Ok(text) => text.lines().next().unwrap_or("").to_string(),
        Err(_) => arg.to_string(),
    };
    parse(&src, consts)
}

fn parse_consts(items: &[String]) -> Result<HashMap<String, f64>, NetsymError> {
    let mut map = HashMap::new();
    for item in items {
        let (name, value) = item.split_once('=').ok_or_else(|| {
            NetsymError::InvalidSpec(format!("--const expects NAME=VALUE, got `{item}`"))
        })?;
        let v: f64 = value.parse().map_err(|_| {
            NetsymError::InvalidSpec(format!("--const {name}: `{value}` is not a number"))
        })?;
        map.insert(name.to_string(), v);
    }
    Ok(map)
}

fn emit_json<T: serde::Serialize>(out: &Option<PathBuf>, value: &T) -> Result<(), NetsymError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit_text(out, &text)
}

fn emit_text(out: &Option<PathBuf>, text: &str) -> Result<(), NetsymError> {
    match out {
        Some(path) => fs::write(path, text).map_err(NetsymError::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
