//! Exact total-variation mixing profiles for finite Markov chains.
//!
//! The crate evaluates the discrete (`P^t`), lazy (`((I+P)/2)^t`), averaged
//! (`(P^t + P^{t+1})/2`) and continuous-time (`exp(-t(I-P))`) kernels of a
//! finite chain, computes worst-case distances and mixing times for each,
//! and checks the inequalities relating them on concrete chains.

pub mod chain;
pub mod coupling;
pub mod cutoff;
pub mod distances;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod maximal;
pub mod spectral;
pub mod theorem_lab;
pub mod zoo;

pub use distances::{mixing_time, phi, psi, worst_case_distance, DistanceProfile, MixingReport, Start};
pub use chain::{lazy_kernel, tv_distance, validate_chain, ChainSpec, Distribution, ValidatedChain};
pub use error::{Error, Result};
pub use kernel::{Engine, Kernel, KernelMode, PowerKernel};
pub use spectral::{decompose, heat_series_reference, Spectrum};
pub use zoo::{make_chain, FamilySpec};
