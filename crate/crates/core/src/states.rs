//! Density matrices, the benchmark state families and the squared
//! Hilbert-Schmidt error metric.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::basis::MAX_QUBITS;
use crate::error::{Result, TomoError};
use crate::matrix::{herm_eig, ComplexMatrix};

/// Tolerance on Hermiticity, trace and positivity of a [`DensityMatrix`].
pub const STATE_TOLERANCE: f64 = 1e-10;

/// Generator stream used for state sampling; measurement simulation uses a
/// different stream so the same seed never correlates the two.
pub(crate) const STATE_STREAM: u64 = 1;

/// A validated quantum state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    /// Validates `matrix` against the density-matrix invariants.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() == 0 {
            return Err(TomoError::ShapeMismatch(format!(
                "density matrix must be square and non-empty, got {}x{}",
                matrix.rows(),
                matrix.cols()
            )));
        }
        let deviation = matrix.hermitian_deviation();
        if deviation > STATE_TOLERANCE {
            return Err(TomoError::NotHermitian { deviation });
        }
        let trace = matrix.trace().re;
        if (trace - 1.0).abs() > STATE_TOLERANCE {
            return Err(TomoError::NotUnitTrace { trace });
        }
        let min_eigenvalue = *herm_eig(&matrix)?
            .eigenvalues
            .last()
            .expect("non-empty spectrum");
        if min_eigenvalue < -STATE_TOLERANCE {
            return Err(TomoError::NotPositive { min_eigenvalue });
        }
        Ok(DensityMatrix(matrix))
    }

    /// Wraps a matrix the caller already knows to be a valid state.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        DensityMatrix(matrix)
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix(ComplexMatrix::identity(dim).scale(1.0 / dim as f64))
    }

    /// The pure state `|v><v|` for a normalized `v`.
    pub fn pure(v: &[Complex64]) -> Result<Self> {
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > STATE_TOLERANCE {
            return Err(TomoError::NotUnitTrace { trace: norm });
        }
        Ok(DensityMatrix(ComplexMatrix::outer(v)))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        self.0.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&MatrixJson::from_matrix(&self.0)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: MatrixJson = crate::error::decode_json(text, "density matrix")?;
        DensityMatrix::new(raw.to_matrix()?)
    }
}

/// Wire form of a square complex matrix: `{"dim": d, "re": [[..]], "im": [[..]]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.rows())
                .map(|i| m.row(i).iter().map(f).collect())
                .collect()
        };
        MatrixJson {
            dim: m.rows(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let dim = self.dim;
        let max = 1usize << MAX_QUBITS;
        if dim == 0 || dim > max {
            return Err(TomoError::parse(
                "dim",
                format!("{dim} is outside 1..={max}"),
            ));
        }
        for (name, part) in [("re", &self.re), ("im", &self.im)] {
            if part.len() != dim {
                return Err(TomoError::parse(
                    name,
                    format!("expected {dim} rows, found {}", part.len()),
                ));
            }
            if let Some((i, row)) = part.iter().enumerate().find(|(_, r)| r.len() != dim) {
                return Err(TomoError::parse(
                    format!("{name}[{i}]"),
                    format!("expected {dim} entries, found {}", row.len()),
                ));
            }
        }
        let data = self
            .re
            .iter()
            .flatten()
            .zip(self.im.iter().flatten())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        ComplexMatrix::from_vec(dim, dim, data)
    }
}

/// Werner state `q |ψ⁻><ψ⁻| + (1 - q) I/4` with `|ψ⁻> = (|01> - |10>)/√2`.
pub fn werner(q: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&q) {
        return Err(TomoError::OutOfRange {
            name: "q",
            value: q,
            range: "[0, 1]",
        });
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = [0.0, s, -s, 0.0].map(|x| Complex64::new(x, 0.0));
    let m = &ComplexMatrix::outer(&singlet).scale(q)
        + &ComplexMatrix::identity(4).scale((1.0 - q) / 4.0);
    Ok(DensityMatrix(m))
}

/// `α |ψ><ψ| + (1 - α) I/d` with `|ψ>` Haar-random, drawn as a normalized
/// vector of independent standard complex Gaussians.
pub fn random_mixed_pure(n_qubits: usize, alpha: f64, seed: u64) -> Result<DensityMatrix> {
    if n_qubits == 0 {
        return Err(TomoError::OutOfRange {
            name: "n_qubits",
            value: 0.0,
            range: "1..=6",
        });
    }
    if n_qubits > MAX_QUBITS {
        return Err(TomoError::DimensionTooLarge {
            n_qubits,
            max: MAX_QUBITS,
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(TomoError::OutOfRange {
            name: "alpha",
            value: alpha,
            range: "[0, 1]",
        });
    }
    let d = 1usize << n_qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(STATE_STREAM);
    let psi = haar_vector(d, &mut rng);
    let m = &ComplexMatrix::outer(&psi).scale(alpha)
        + &ComplexMatrix::identity(d).scale((1.0 - alpha) / d as f64);
    Ok(DensityMatrix(m))
}

pub(crate) fn haar_vector<R: rand::Rng>(d: usize, rng: &mut R) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..d)
        .map(|_| {
            Complex64::new(
                StandardNormal.sample(&mut *rng),
                StandardNormal.sample(&mut *rng),
            )
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Squared Hilbert-Schmidt distance `Tr((estimate - truth)²)`.
pub fn mse(estimate: &ComplexMatrix, truth: &DensityMatrix) -> Result<f64> {
    let t = truth.matrix();
    if (estimate.rows(), estimate.cols()) != (t.rows(), t.cols()) {
        return Err(TomoError::ShapeMismatch(format!(
            "estimate is {}x{}, truth is {}x{}",
            estimate.rows(),
            estimate.cols(),
            t.rows(),
            t.cols()
        )));
    }
    Ok(estimate
        .as_slice()
        .iter()
        .zip(t.as_slice())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum())
}
