//! Quantum state tomography by linear regression estimation.
//!
//! The crate turns tomography into a linear least-squares problem over the
//! Bloch coordinates of a state in an orthonormal Pauli basis:
//!
//! - [`basis`]: the operator basis and Bloch-vector conversions,
//! - [`measurement`]: measurement sets, Gram matrices and the analytic MSE bound,
//! - [`sampling`]: Born-rule probabilities and binomial measurement records,
//! - [`lre`]: least-squares estimation and projection onto physical states,
//! - [`mle`]: an iterative maximum-likelihood baseline,
//! - [`bench`]: the experiment runners behind the `tomo` CLI.

pub mod basis;
pub mod bench;
pub mod error;
pub mod lre;
pub mod matrix;
pub mod measurement;
pub mod mle;
pub mod sampling;
pub mod states;

pub use basis::{bloch_to_matrix, pauli_basis, state_to_bloch, BlochVector, OperatorBasis};
pub use error::{Result, TomoError};
pub use lre::{lre_estimate, ls_estimate, plre, project_physical, simplex_project, EstimateReport};
pub use matrix::{herm_eig, hs_inner, kron, ComplexMatrix, HermitianEigenSystem};
pub use measurement::{
    cube_set, mse_upper_bound, mub_set, optimal_bound_global, optimal_bound_local_2qubit,
    tetrahedron_set, verify_spectrum, MeasurementSet,
};
pub use mle::{log_likelihood, mle_estimate, MleOptions, MleOutcome};
pub use sampling::{simulate_record, true_probabilities, MeasurementRecord};
pub use states::{mse, random_mixed_pure, werner, DensityMatrix};
