//! Additive secret sharing for sparse matrices over finite fields, with
//! shares that are themselves sparse.
//!
//! A matrix whose entries are zero with probability s (and otherwise
//! uniform) is hidden by drawing a pad R entry by entry from a conditional
//! distribution and publishing the pair (R, A + R). Tuning that conditional
//! trades share sparsity against how much the shares tell an observer about
//! A; [`optimizer`] finds the distribution with the least leakage for any
//! requested pair of share zero fractions, and [`leakage`] evaluates the
//! leakage of an arbitrary choice in closed form or empirically.
//!
//! For distributed storage, [`placement`] splits each share into row blocks
//! replicated across nodes so that any fixed number of node losses is
//! survivable and no node can reconstruct anything alone, and [`codec`]
//! gives each stored block a compact bit-packed form whose size is what the
//! cost model in [`placement`] predicts.
//!
//! Everything is deterministic given a seed: [`rng`] derives a stream per
//! matrix entry, so shares can be regenerated entry by entry in any order.

pub mod codec;
pub mod error;
pub mod field;
pub mod leakage;
pub mod optimizer;
pub mod placement;
pub mod rng;
pub mod sharing;

pub use error::{Error, Result};
pub use field::FieldOrder;
pub use leakage::{
    total_leakage, ConditionalPmf, GeneralConditionalPmf, LeakageReport, LogBase, SourceModel,
    SparsityTargets,
};
pub use optimizer::{
    optimize_general_pmf, solve_optimal_pmf, sweep_leakage, GeneralSolution, OptimizationResult,
    SweepOutcome, SweepPoint,
};
pub use placement::AssignmentPlan;
pub use sharing::{
    empirical_leakage, generate_source, make_shares, reconstruct, Entry, SharePair, SparseMatrix,
};
