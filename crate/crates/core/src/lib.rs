//! Discrete entropy toolkit centred on one fact: replacing a joint
//! distribution by the product of its marginals never lowers its
//! entropy.
//!
//! Modules:
//! - [`dist`]: joints, marginals, decorrelation, conditioning, mixtures
//! - [`entropy`]: entropy, chain decomposition, mutual information, averaging gap
//! - [`maxent`]: maximum-entropy distributions under expectation constraints
//! - [`continuum`]: Maxwell velocity sampling and binned-entropy studies
//! - [`ingest`]: CSV input and JSON/CSV report output
//! - [`cli`]: the `entrocorr` command line

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod continuum;
pub mod dist;
pub mod entropy;
pub mod ingest;
pub mod maxent;
pub mod sum;

pub use dist::{ConditionalFamily, DistError, JointDist, Marginal, MixtureWeights, NormalizeMode, Prob};
pub use entropy::{
    averaging_gap, chain_decompose, entropy, mutual_information, sigma, subadditivity_report,
    ChainDecomposition, EntropyError, EntropyValue, SubadditivityReport, Unit,
};
pub use maxent::{boltzmann, solve_maxent, MaxEntError, MaxEntProblem, MaxEntSolution, SolverOptions};
pub use continuum::{
    bin_joint, bin_sweep, maxwell_assumption_report, sample_maxwell, BinSpec, ContinuumError,
    MaxwellParams, MaxwellReport, SampleSet, SweepRow,
};
pub use ingest::{
    joint_from_pairs, read_joint_csv, write_joint_csv, write_report, IngestError, ReportFormat, ReportMeta,
};
