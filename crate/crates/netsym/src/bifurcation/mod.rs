//! Steady-state bifurcation analysis: equivariant Taylor families on kernel
//! summands, generic codimension-one classification, Jordan–Chevalley
//! decomposition, Lyapunov–Schmidt reduction and numerical continuation.

pub mod classify;
pub mod continuation;
pub mod family;
pub mod jc;
pub mod reduce;

pub use continuation::{
    continue_branches, continue_on_spec, lift_to_original, ContinuationOptions, ContinuationRun,
    LiftedBranch,
};
pub use classify::{
    branch_value_partition, classify_codim1, classify_summand, instantiate_class, lift_partition,
    BifurcationClass, BranchComp, BranchFormula, InstancePrediction, Kind, PredictedBranch,
};
pub use jc::{jordan_chevalley, jordan_chevalley_f64};
pub use reduce::{ls_reduce, reduced_taylor, summand_fit, ExactReduction, ReducedSystem};
pub use family::{equivariant_taylor_family, kernel_taylor_family, TaylorFamily, UMonomial};
