//! Orthonormal Pauli operator basis and Bloch-vector coordinates.
//!
//! For n qubits the basis holds the d² = 4ⁿ operators
//! `Ω_i = (σ_{l_1}/√2) ⊗ … ⊗ (σ_{l_n}/√2)` with `i = Σ_k 4^{n-1-k} l_k`,
//! i.e. the Pauli word read as a big-endian base-4 number. `Ω_0 = I/√d` and
//! every other operator is traceless, so a unit-trace Hermitian matrix is
//! `ρ = I/d + Σ_{i≥1} Θ_i Ω_i` with `Θ_i = Tr(ρ Ω_i)`.
//!
//! Each Pauli word is a monomial matrix: row `r` has exactly one nonzero entry,
//! in column `r XOR x_mask`. The basis stores that sparse form, so traces and
//! reconstructions cost O(d) per operator instead of O(d²).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::matrix::{ComplexMatrix, HERMITIAN_TOLERANCE};

/// Largest supported register (d = 64).
pub const MAX_QUBITS: usize = 6;

/// Unit-trace tolerance for inputs to [`state_to_bloch`].
pub const TRACE_TOLERANCE: f64 = 1e-8;

/// One basis operator in monomial form: `Ω[r, r ^ x_mask] = entries[r]`.
#[derive(Clone, Debug)]
struct PauliWord {
    digits: Vec<u8>,
    x_mask: usize,
    entries: Vec<Complex64>,
}

impl PauliWord {
    fn new(digits: Vec<u8>) -> Self {
        let n = digits.len();
        let norm = (0.5f64).powf(n as f64 / 2.0);
        let mut x_mask = 0usize;
        for (k, &l) in digits.iter().enumerate() {
            if l == 1 || l == 2 {
                x_mask |= 1 << (n - 1 - k);
            }
        }
        let entries = (0..1usize << n)
            .map(|r| {
                let mut z = Complex64::new(norm, 0.0);
                for (k, &l) in digits.iter().enumerate() {
                    let bit = (r >> (n - 1 - k)) & 1;
                    z *= match (l, bit) {
                        (2, 0) => Complex64::new(0.0, -1.0),
                        (2, _) => Complex64::new(0.0, 1.0),
                        (3, 1) => Complex64::new(-1.0, 0.0),
                        _ => Complex64::new(1.0, 0.0),
                    };
                }
                z
            })
            .collect();
        PauliWord {
            digits,
            x_mask,
            entries,
        }
    }

    /// `Tr(ρ Ω) = Σ_r Ω[r, c] ρ[c, r]` with `c = r ^ x_mask`.
    fn trace_with(&self, rho: &ComplexMatrix) -> Complex64 {
        self.entries
            .iter()
            .enumerate()
            .map(|(r, &w)| w * rho[(r ^ self.x_mask, r)])
            .sum()
    }

    fn dense(&self) -> ComplexMatrix {
        let d = self.entries.len();
        let mut m = ComplexMatrix::zeros(d, d);
        for (r, &w) in self.entries.iter().enumerate() {
            m[(r, r ^ self.x_mask)] = w;
        }
        m
    }
}

/// Orthonormal Hermitian operator basis `{Ω_i}` for an n-qubit register.
#[derive(Clone, Debug)]
pub struct OperatorBasis {
    n_qubits: usize,
    words: Vec<PauliWord>,
}

/// Builds the normalized Pauli-product basis for `n_qubits` qubits.
pub fn pauli_basis(n_qubits: usize) -> Result<OperatorBasis> {
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
    let words = (0..1usize << (2 * n_qubits))
        .map(|index| {
            let digits = (0..n_qubits)
                .map(|k| ((index >> (2 * (n_qubits - 1 - k))) & 3) as u8)
                .collect();
            PauliWord::new(digits)
        })
        .collect();
    Ok(OperatorBasis { n_qubits, words })
}

impl OperatorBasis {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Hilbert-space dimension d.
    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Number of operators, d².
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Dense matrix of `Ω_index`.
    pub fn operator(&self, index: usize) -> ComplexMatrix {
        self.words[index].dense()
    }

    pub fn operators(&self) -> impl Iterator<Item = ComplexMatrix> + '_ {
        self.words.iter().map(PauliWord::dense)
    }

    /// Pauli word of `Ω_index`, e.g. `"XY"` for index 6 with two qubits.
    pub fn label(&self, index: usize) -> String {
        self.words[index]
            .digits
            .iter()
            .map(|&l| ['I', 'X', 'Y', 'Z'][l as usize])
            .collect()
    }

    /// Pauli digits `l_k` of `Ω_index`, first qubit first.
    pub fn digits(&self, index: usize) -> &[u8] {
        &self.words[index].digits
    }

    /// `Tr(m Ω_index)` for a d×d matrix.
    pub fn trace_with(&self, index: usize, m: &ComplexMatrix) -> Complex64 {
        self.words[index].trace_with(m)
    }

    /// `<v| Ω_index |v>`, the coordinate of `|v><v|` along `Ω_index`.
    pub fn expectation(&self, index: usize, v: &[Complex64]) -> f64 {
        let word = &self.words[index];
        word.entries
            .iter()
            .enumerate()
            .map(|(r, &w)| v[r].conj() * w * v[r ^ word.x_mask])
            .sum::<Complex64>()
            .re
    }

    fn check_square(&self, m: &ComplexMatrix) -> Result<()> {
        let d = self.dim();
        if m.rows() != d || m.cols() != d {
            return Err(TomoError::ShapeMismatch(format!(
                "expected {d}x{d} matrix for a {}-qubit basis, got {}x{}",
                self.n_qubits,
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    }
}

/// Real coordinates `Θ_1..Θ_{d²-1}` of a unit-trace Hermitian matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlochVector(pub Vec<f64>);

impl BlochVector {
    pub fn zeros(len: usize) -> Self {
        BlochVector(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    /// Squared Euclidean distance.
    pub fn distance_sqr(&self, other: &BlochVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl From<Vec<f64>> for BlochVector {
    fn from(v: Vec<f64>) -> Self {
        BlochVector(v)
    }
}

/// Coordinates `Θ_i = Tr(ρ Ω_i)` for `i ≥ 1`.
pub fn state_to_bloch(rho: &ComplexMatrix, basis: &OperatorBasis) -> Result<BlochVector> {
    basis.check_square(rho)?;
    let deviation = rho.hermitian_deviation();
    if deviation > HERMITIAN_TOLERANCE {
        return Err(TomoError::NotHermitian { deviation });
    }
    let trace = rho.trace().re;
    if (trace - 1.0).abs() > TRACE_TOLERANCE {
        return Err(TomoError::NotUnitTrace { trace });
    }
    Ok(bloch_unchecked(rho, basis))
}

/// [`state_to_bloch`] without the input validation.
pub(crate) fn bloch_unchecked(rho: &ComplexMatrix, basis: &OperatorBasis) -> BlochVector {
    BlochVector(
        basis.words[1..]
            .iter()
            .map(|w| w.trace_with(rho).re)
            .collect(),
    )
}

/// `I/d + Σ Θ_i Ω_i`. Hermitian with unit trace, not necessarily positive.
pub fn bloch_to_matrix(theta: &BlochVector, basis: &OperatorBasis) -> Result<ComplexMatrix> {
    if theta.len() + 1 != basis.len() {
        return Err(TomoError::ShapeMismatch(format!(
            "Bloch vector of length {} for a basis of {} operators",
            theta.len(),
            basis.len()
        )));
    }
    let d = basis.dim();
    let mut m = ComplexMatrix::identity(d).scale(1.0 / d as f64);
    for (&t, word) in theta.0.iter().zip(&basis.words[1..]) {
        if t == 0.0 {
            continue;
        }
        for (r, &w) in word.entries.iter().enumerate() {
            m[(r, r ^ word.x_mask)] += w * t;
        }
    }
    // Diagonal entries are real by construction; drop rounding residue.
    for i in 0..d {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
    Ok(m)
}

/// `Ω_0` coefficient shared by every unit-trace matrix, `1/√d`.
pub fn identity_coordinate(dim: usize) -> f64 {
    (dim as f64).sqrt().recip()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{hs_inner, kron, pauli};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn ket0() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, 0.0])
    }

    #[test]
    fn single_qubit_basis_is_normalized_paulis() {
        let basis = pauli_basis(1).unwrap();
        assert_eq!(basis.len(), 4);
        for l in 0..4 {
            let expected = pauli(l).scale(FRAC_1_SQRT_2);
            assert!(basis.operator(l).max_abs_diff(&expected) < 1e-15);
        }
    }

    #[test]
    fn two_qubit_index_five_is_xx_over_two() {
        let basis = pauli_basis(2).unwrap();
        assert_eq!(basis.len(), 16);
        assert_eq!(basis.label(5), "XX");
        let expected = kron(&pauli(1), &pauli(1)).scale(0.5);
        assert!(basis.operator(5).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn operators_match_kron_products() {
        let basis = pauli_basis(3).unwrap();
        for index in 0..basis.len() {
            let d = basis.digits(index);
            let expected = kron(
                &kron(&pauli(d[0] as usize), &pauli(d[1] as usize)),
                &pauli(d[2] as usize),
            )
            .scale(FRAC_1_SQRT_2.powi(3));
            assert!(basis.operator(index).max_abs_diff(&expected) < 1e-15);
            assert_eq!(
                index,
                16 * d[0] as usize + 4 * d[1] as usize + d[2] as usize
            );
        }
    }

    #[test]
    fn basis_is_orthonormal_and_traceless() {
        for n in 1..=3 {
            let basis = pauli_basis(n).unwrap();
            let ops: Vec<_> = basis.operators().collect();
            let d = basis.dim();
            let id = ComplexMatrix::identity(d).scale((1.0 / d as f64).sqrt());
            assert!(ops[0].max_abs_diff(&id) < 1e-15);
            for (i, a) in ops.iter().enumerate() {
                assert!(a.hermitian_deviation() < 1e-15);
                if i > 0 {
                    assert!(a.trace().norm() < 1e-12);
                }
                for (j, b) in ops.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((hs_inner(a, b).unwrap() - expected).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rejects_out_of_range_sizes() {
        assert!(matches!(
            pauli_basis(7),
            Err(TomoError::DimensionTooLarge { n_qubits: 7, .. })
        ));
        assert!(pauli_basis(0).is_err());
    }

    #[test]
    fn maximally_mixed_has_zero_coordinates() {
        let basis = pauli_basis(1).unwrap();
        let rho = ComplexMatrix::identity(2).scale(0.5);
        assert_eq!(
            state_to_bloch(&rho, &basis).unwrap(),
            BlochVector(vec![0.0; 3])
        );
    }

    #[test]
    fn ket_zero_coordinates() {
        let basis = pauli_basis(1).unwrap();
        let theta = state_to_bloch(&ket0(), &basis).unwrap();
        assert!(theta.0[0].abs() < 1e-15 && theta.0[1].abs() < 1e-15);
        assert!((theta.0[2] - FRAC_1_SQRT_2).abs() < 1e-15);
        let back = bloch_to_matrix(&theta, &basis).unwrap();
        assert!(back.max_abs_diff(&ket0()) < 1e-15);
    }

    #[test]
    fn zero_coordinates_give_identity_over_d() {
        let basis = pauli_basis(1).unwrap();
        let m = bloch_to_matrix(&BlochVector::zeros(3), &basis).unwrap();
        assert_eq!(m, ComplexMatrix::identity(2).scale(0.5));
    }

    #[test]
    fn state_to_bloch_errors() {
        let basis = pauli_basis(1).unwrap();
        let wrong = ComplexMatrix::identity(4).scale(0.25);
        assert!(matches!(
            state_to_bloch(&wrong, &basis),
            Err(TomoError::ShapeMismatch(_))
        ));
        let unnormalized = ComplexMatrix::identity(2);
        assert!(matches!(
            state_to_bloch(&unnormalized, &basis),
            Err(TomoError::NotUnitTrace { .. })
        ));
        assert!(bloch_to_matrix(&BlochVector::zeros(4), &basis).is_err());
    }
}
