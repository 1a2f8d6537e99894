//! Solvers for covering problems with multiple submodular or linear coverage
//! constraints: a greedy-plus-rounding pipeline for submodular covering (MSC),
//! an LP-based pipeline for covering coverage functions (CCF), and a
//! star/column-generation pipeline for facility location with outliers (FLMO).
//!
//! The crates are organized around a four-stage pattern shared by all solvers:
//! guess a high-cost core, solve a fractional relaxation on the residual,
//! round it, then greedily repair any constraint the rounding left short.

pub mod acceptance;
pub mod brute;
pub mod ccf;
pub mod error;
pub mod experiment;
pub mod extension;
pub mod flmo;
pub mod gen;
pub mod ground;
pub mod instance;
pub mod io;
pub mod lp;
pub mod msc;
pub mod relax;
pub mod report;
pub mod rng;
pub mod rounding;
pub mod sets;
pub mod submodular;

pub use error::CoreError;
pub use extension::{independent_round, mle_estimate, mle_exact, FractionalPoint};
pub use ground::{CostFunction, GroundSet};
pub use instance::{residual_ccf, residual_msc, restrict_universe, CcfInstance, MscInstance};
pub use lp::{solve_lp, Cmp, LpModel, LpSolution, LpStatus};
pub use relax::{build_ccf_lp, solve_msc_relax, MscRelaxResult, RelaxStatus};
pub use rng::RngStream;
pub use rounding::{lipschitz_ell, lipschitz_greedy, round_fractional, LipschitzGreedyResult, RoundingOutcome};
pub use sets::BitSet;
pub use submodular::{eval, marginal, Oracle, WeightedCoverageFunction};
