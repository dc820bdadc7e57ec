//! Linear regression estimation.
//!
//! The measured frequencies satisfy the regression model
//! `p̂ₙ - 1/d = Ψ⁽ⁿ⁾ᵀΘ + eₙ`. The least-squares solution
//! `Θ̂ = (XᵀX)⁻¹ Σₙ Ψ⁽ⁿ⁾(p̂ₙ - 1/d)` gives the pseudo-estimate
//! `μ̂ = I/d + Σ Θ̂ᵢΩᵢ`, which has unit trace but may have negative
//! eigenvalues. The physical estimate is the density matrix closest to `μ̂`
//! in Hilbert-Schmidt norm: it keeps the eigenvectors of `μ̂` and replaces the
//! spectrum by its Euclidean projection onto the probability simplex.
//!
//! With `(XᵀX)⁻¹` cached on the measurement set, an estimate costs O(M d²)
//! for `XᵀY`, O(d⁴) for the inverse product and O(d³) for the projection.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::basis::{bloch_to_matrix, BlochVector, OperatorBasis};
use crate::error::{Result, TomoError};
use crate::matrix::{herm_eig, ComplexMatrix, HERMITIAN_TOLERANCE};
use crate::measurement::MeasurementSet;
use crate::sampling::MeasurementRecord;
use crate::states::{mse, DensityMatrix, MatrixJson};

/// Largest trace drift that [`project_physical`] silently renormalizes.
pub const TRACE_DRIFT_TOLERANCE: f64 = 1e-8;

/// Least-squares Bloch vector from a record, using the set's cached `(XᵀX)⁻¹`.
pub fn ls_estimate(record: &MeasurementRecord, set: &MeasurementSet) -> Result<BlochVector> {
    record.check_against(set)?;
    let inverse = set.gram_inverse()?;
    let f = set.feature_len();
    let inv_d = 1.0 / set.dim() as f64;

    let mut xty = vec![0.0; f];
    for (n, &freq) in record.frequencies.iter().enumerate() {
        let y = freq - inv_d;
        if y == 0.0 {
            continue;
        }
        for (acc, &psi) in xty.iter_mut().zip(set.psi(n)) {
            *acc += psi * y;
        }
    }
    let theta = inverse
        .chunks_exact(f)
        .map(|row| row.iter().zip(&xty).map(|(a, b)| a * b).sum())
        .collect();
    Ok(BlochVector(theta))
}

/// Pseudo linear regression estimate `μ̂ = I/d + Σ Θ̂ᵢΩᵢ`.
pub fn plre(theta_hat: &BlochVector, basis: &OperatorBasis) -> Result<ComplexMatrix> {
    bloch_to_matrix(theta_hat, basis)
}

/// Euclidean projection onto the probability simplex `{w ≥ 0, Σw = 1}`.
///
/// Sort-and-scan: with `u` sorted descending, the active set is the longest
/// prefix for which `uⱼ - (Σ_{i≤j} uᵢ - 1)/j > 0`, and `w = max(v - τ, 0)`
/// with `τ` the corresponding water level.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        prefix += uj;
        let level = (prefix - 1.0) / (j + 1) as f64;
        if uj - level > 0.0 {
            tau = level;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - tau).max(0.0)).collect()
}

/// Spectra before and after the physical projection.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectrumShift {
    pub before: Vec<f64>,
    pub after: Vec<f64>,
}

/// Closest density matrix to a Hermitian unit-trace matrix in Hilbert-Schmidt norm.
pub fn project_physical(mu_hat: &ComplexMatrix) -> Result<DensityMatrix> {
    project_with_spectrum(mu_hat).map(|(rho, _)| rho)
}

fn project_with_spectrum(mu_hat: &ComplexMatrix) -> Result<(DensityMatrix, SpectrumShift)> {
    if !mu_hat.is_square() {
        return Err(TomoError::ShapeMismatch(format!(
            "cannot project a {}x{} matrix",
            mu_hat.rows(),
            mu_hat.cols()
        )));
    }
    let deviation = mu_hat.hermitian_deviation();
    if deviation > HERMITIAN_TOLERANCE {
        return Err(TomoError::NotHermitian { deviation });
    }
    let trace = mu_hat.trace().re;
    if (trace - 1.0).abs() > TRACE_DRIFT_TOLERANCE {
        return Err(TomoError::NotUnitTrace { trace });
    }
    let eig = herm_eig(&mu_hat.scale(1.0 / trace))?;
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        // already physical: keep it bit-for-bit
        let mut rho = if (trace - 1.0).abs() <= 1e-12 {
            mu_hat.clone()
        } else {
            mu_hat.scale(1.0 / trace)
        };
        rho.hermitize();
        let after = eig.eigenvalues.clone();
        return Ok((
            DensityMatrix::new_unchecked(rho),
            SpectrumShift {
                before: eig.eigenvalues,
                after,
            },
        ));
    }
    let after = simplex_project(&eig.eigenvalues);
    let mut rho = eig.recompose(&after);
    rho.hermitize();
    Ok((
        DensityMatrix::new_unchecked(rho),
        SpectrumShift {
            before: eig.eigenvalues,
            after,
        },
    ))
}

/// Everything produced by one run of the estimator.
#[derive(Clone, Debug)]
pub struct EstimateReport {
    pub theta_hat: BlochVector,
    /// Pseudo-estimate: Hermitian, unit trace, possibly indefinite.
    pub mu_hat: ComplexMatrix,
    /// Physical estimate.
    pub rho_hat: DensityMatrix,
    pub eigenvalue_shift: SpectrumShift,
    /// Least-squares solve plus assembly of `mu_hat`.
    pub elapsed_ls: Duration,
    pub elapsed_projection: Duration,
    /// Squared Hilbert-Schmidt error of `rho_hat`, when the truth is known.
    pub mse_vs_truth: Option<f64>,
    /// Same for `mu_hat`.
    pub mse_plre_vs_truth: Option<f64>,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    theta_hat: &'a [f64],
    mu_hat: MatrixJson,
    rho_hat: MatrixJson,
    eigenvalue_shift: &'a SpectrumShift,
    elapsed_ls_ns: u128,
    elapsed_projection_ns: u128,
    mse_vs_truth: Option<f64>,
    mse_plre_vs_truth: Option<f64>,
}

impl EstimateReport {
    pub fn elapsed_total(&self) -> Duration {
        self.elapsed_ls + self.elapsed_projection
    }

    pub fn to_json(&self) -> String {
        self.to_json_with_timing(true)
    }

    /// JSON form; timing fields are written as 0 when `timing` is false.
    pub fn to_json_with_timing(&self, timing: bool) -> String {
        let ns = |d: Duration| if timing { d.as_nanos() } else { 0 };
        let json = ReportJson {
            theta_hat: self.theta_hat.as_slice(),
            mu_hat: MatrixJson::from_matrix(&self.mu_hat),
            rho_hat: MatrixJson::from_matrix(self.rho_hat.matrix()),
            eigenvalue_shift: &self.eigenvalue_shift,
            elapsed_ls_ns: ns(self.elapsed_ls),
            elapsed_projection_ns: ns(self.elapsed_projection),
            mse_vs_truth: self.mse_vs_truth,
            mse_plre_vs_truth: self.mse_plre_vs_truth,
        };
        serde_json::to_string_pretty(&json).expect("serializable")
    }
}

/// Least squares, pseudo-estimate and physical projection in one call.
pub fn lre_estimate(
    record: &MeasurementRecord,
    set: &MeasurementSet,
    basis: &OperatorBasis,
    truth: Option<&DensityMatrix>,
) -> Result<EstimateReport> {
    if basis.n_qubits() != set.n_qubits() {
        return Err(TomoError::ShapeMismatch(format!(
            "{}-qubit basis for a {}-qubit measurement set",
            basis.n_qubits(),
            set.n_qubits()
        )));
    }
    let start = Instant::now();
    let theta_hat = ls_estimate(record, set)?;
    let mu_hat = plre(&theta_hat, basis)?;
    let elapsed_ls = start.elapsed();

    let start = Instant::now();
    let (rho_hat, eigenvalue_shift) = project_with_spectrum(&mu_hat)?;
    let elapsed_projection = start.elapsed();

    let (mse_vs_truth, mse_plre_vs_truth) = match truth {
        Some(t) => (Some(mse(rho_hat.matrix(), t)?), Some(mse(&mu_hat, t)?)),
        None => (None, None),
    };
    Ok(EstimateReport {
        theta_hat,
        mu_hat,
        rho_hat,
        eigenvalue_shift,
        elapsed_ls,
        elapsed_projection,
        mse_vs_truth,
        mse_plre_vs_truth,
    })
}
