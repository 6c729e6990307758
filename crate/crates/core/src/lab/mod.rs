//! Exact finite-n laboratory: disorder sampling, exhaustive enumeration of the
//! Gibbs measure, disorder averages and the experiments built on them.

pub mod average;
pub mod disorder;
pub mod enumerate;
pub mod experiments;

pub use average::{collect, neumaier_sum, DisorderAverage, Estimate, SampleSet};
pub use disorder::{hamiltonian_linear, hamiltonian_sk, overlap, sample_seed, DisorderSample};
pub use enumerate::{
    coupled_gibbs, gibbs_overlap_moments, log_z_exact, CoupledReport, Coupling, GibbsParams,
    GibbsReport, ENUMERATION_BUDGET,
};
pub use experiments::*;
