//! Measurement sets, their design and Gram matrices, and the analytic
//! mean-squared-error bound `(M/4N) Tr((XᵀX)⁻¹)`.
//!
//! A set is a list of M rank-1 projectors `|Ψ⟩⟨Ψ|⁽ⁿ⁾`. Each one is a
//! standalone yes/no test: its feature vector `Ψ⁽ⁿ⁾` (Bloch coordinates
//! without the identity component) forms row n of the design matrix X.
//! The Gram matrix and its inverse are computed once, when the set is built,
//! since they depend only on the measurement design.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::basis::{pauli_basis, OperatorBasis, MAX_QUBITS};
use crate::error::{Result, TomoError};
use crate::matrix::ComplexMatrix;
use crate::states::MatrixJson;

/// Gram matrices whose smallest eigenvalue falls below `SINGULAR_RELATIVE * M`
/// are treated as singular.
pub const SINGULAR_RELATIVE: f64 = 1e-10;

/// Tolerance used by [`verify_spectrum`].
pub const SPECTRUM_TOLERANCE: f64 = 1e-9;

/// Single-qubit cube directions, in the order +x, -x, +y, -y, +z, -z.
pub const CUBE_DIRECTIONS: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, -1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0],
];

/// Single-qubit tetrahedron directions, before normalization by √3.
pub const TETRAHEDRON_DIRECTIONS: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

/// Fingerprint stored alongside a serialized set, recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetChecksum {
    pub count: usize,
    pub gram_trace: f64,
    pub design_sum: f64,
}

/// An immutable measurement design.
#[derive(Clone, Debug)]
pub struct MeasurementSet {
    label: String,
    n_qubits: usize,
    kets: Vec<Vec<Complex64>>,
    /// Row-major M x (d² - 1).
    design: Vec<f64>,
    /// Row-major (d² - 1) x (d² - 1).
    gram: Vec<f64>,
    gram_inverse: Option<Vec<f64>>,
    gram_eigenvalues: Vec<f64>,
}

impl MeasurementSet {
    /// Builds a set from normalized kets; each ket `v` contributes `|v⟩⟨v|`.
    pub fn from_kets(
        label: impl Into<String>,
        n_qubits: usize,
        kets: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let basis = pauli_basis(n_qubits)?;
        let d = basis.dim();
        check_kets(&kets, d)?;
        let features = basis.len() - 1;
        let mut design = Vec::with_capacity(kets.len() * features);
        for v in &kets {
            design.extend((1..basis.len()).map(|i| basis.expectation(i, v)));
        }
        let gram = gram_from_design(&design, features);
        Self::finish(label.into(), n_qubits, kets, design, gram)
    }

    /// All tensor products of a single-qubit set of Bloch directions.
    fn product(label: String, n_qubits: usize, directions: &[[f64; 3]]) -> Result<Self> {
        let basis = pauli_basis(n_qubits)?;
        let single_kets: Vec<Vec<Complex64>> = directions.iter().map(|r| qubit_ket(*r)).collect();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let single_features: Vec<[f64; 4]> = directions
            .iter()
            .map(|r| {
                let n = norm3(*r);
                [h, h * r[0] / n, h * r[1] / n, h * r[2] / n]
            })
            .collect();

        let count = directions.len().pow(n_qubits as u32);
        let features = basis.len() - 1;
        let mut kets = Vec::with_capacity(count);
        let mut design = Vec::with_capacity(count * features);
        for index in 0..count {
            let mut ket = vec![Complex64::new(1.0, 0.0)];
            let mut full = vec![1.0];
            for k in 0..n_qubits {
                let a =
                    (index / directions.len().pow((n_qubits - 1 - k) as u32)) % directions.len();
                ket = kron_vec(&ket, &single_kets[a]);
                full = kron_vec(&full, &single_features[a]);
            }
            kets.push(ket);
            design.extend_from_slice(&full[1..]);
        }

        // Σ over all products factorizes: the full Gram is the n-fold Kronecker
        // power of the single-qubit 4x4 Gram.
        let mut single_gram = [0.0; 16];
        for f in &single_features {
            for i in 0..4 {
                for j in 0..4 {
                    single_gram[4 * i + j] += f[i] * f[j];
                }
            }
        }
        let mut full_gram = vec![1.0];
        let mut side = 1;
        for _ in 0..n_qubits {
            full_gram = kron_square(&full_gram, side, &single_gram, 4);
            side *= 4;
        }
        let mut gram = Vec::with_capacity(features * features);
        for i in 1..side {
            gram.extend_from_slice(&full_gram[i * side + 1..(i + 1) * side]);
        }
        Self::finish(label, n_qubits, kets, design, gram)
    }

    fn finish(
        label: String,
        n_qubits: usize,
        kets: Vec<Vec<Complex64>>,
        design: Vec<f64>,
        gram: Vec<f64>,
    ) -> Result<Self> {
        let count = kets.len();
        let features = (1usize << (2 * n_qubits)) - 1;
        let (gram_eigenvalues, gram_inverse) = invert_symmetric(&gram, features, count)?;
        Ok(MeasurementSet {
            label,
            n_qubits,
            kets,
            design,
            gram,
            gram_inverse,
            gram_eigenvalues,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Number of projectors M.
    pub fn count(&self) -> usize {
        self.kets.len()
    }

    /// Length of each feature vector, d² - 1.
    pub fn feature_len(&self) -> usize {
        (1 << (2 * self.n_qubits)) - 1
    }

    pub fn kets(&self) -> &[Vec<Complex64>] {
        &self.kets
    }

    /// Dense projector `|Ψ⟩⟨Ψ|⁽ⁿ⁾`.
    pub fn projector(&self, n: usize) -> ComplexMatrix {
        ComplexMatrix::outer(&self.kets[n])
    }

    /// Feature vector `Ψ⁽ⁿ⁾`, i.e. row n of the design matrix.
    pub fn psi(&self, n: usize) -> &[f64] {
        let f = self.feature_len();
        &self.design[n * f..(n + 1) * f]
    }

    /// Row-major design matrix X (M rows).
    pub fn design_matrix(&self) -> &[f64] {
        &self.design
    }

    /// Row-major XᵀX.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    /// Eigenvalues of XᵀX, non-increasing.
    pub fn gram_eigenvalues(&self) -> &[f64] {
        &self.gram_eigenvalues
    }

    pub fn is_informationally_complete(&self) -> bool {
        self.gram_inverse.is_some()
    }

    /// Row-major (XᵀX)⁻¹.
    pub fn gram_inverse(&self) -> Result<&[f64]> {
        self.gram_inverse
            .as_deref()
            .ok_or_else(|| TomoError::SingularGram {
                min_eigenvalue: self.gram_eigenvalues.last().copied().unwrap_or(0.0),
            })
    }

    /// `Tr((XᵀX)⁻¹)`.
    pub fn gram_inverse_trace(&self) -> Result<f64> {
        let inv = self.gram_inverse()?;
        let f = self.feature_len();
        Ok((0..f).map(|i| inv[i * f + i]).sum())
    }

    pub fn checksum(&self) -> SetChecksum {
        let f = self.feature_len();
        SetChecksum {
            count: self.count(),
            gram_trace: (0..f).map(|i| self.gram[i * f + i]).sum(),
            design_sum: self.design.iter().sum(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = SetFile {
            label: self.label.clone(),
            dim: self.dim(),
            projectors: (0..self.count())
                .map(|n| {
                    let m = MatrixJson::from_matrix(&self.projector(n));
                    ProjectorJson { re: m.re, im: m.im }
                })
                .collect(),
            checksum: Some(self.checksum()),
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    /// Parses a set from its JSON form and checks the stored checksum, if any.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: SetFile = crate::error::decode_json(text, "measurement set")?;
        let d = file.dim;
        let n_qubits = d.trailing_zeros() as usize;
        if d < 2 || !d.is_power_of_two() || n_qubits > MAX_QUBITS {
            return Err(TomoError::parse(
                "dim",
                format!("{d} is not a power of two in 2..={}", 1 << MAX_QUBITS),
            ));
        }
        if file.projectors.is_empty() || file.projectors.len() > 6usize.pow(MAX_QUBITS as u32) {
            return Err(TomoError::parse(
                "projectors",
                format!(
                    "{} projectors is outside 1..={}",
                    file.projectors.len(),
                    6usize.pow(MAX_QUBITS as u32)
                ),
            ));
        }
        let mut kets = Vec::with_capacity(file.projectors.len());
        for (n, p) in file.projectors.into_iter().enumerate() {
            let field = format!("projectors[{n}]");
            let m = MatrixJson {
                dim: d,
                re: p.re,
                im: p.im,
            }
            .to_matrix()
            .map_err(|e| match e {
                TomoError::Parse {
                    field: inner,
                    message,
                } => TomoError::parse(format!("{field}.{inner}"), message),
                other => other,
            })?;
            kets.push(ket_of_projector(&m).map_err(|msg| TomoError::parse(field, msg))?);
        }
        let set = MeasurementSet::from_kets(file.label, n_qubits, kets)?;
        if let Some(stored) = file.checksum {
            let fresh = set.checksum();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-8 * a.abs().max(b.abs()).max(1.0);
            if stored.count != fresh.count
                || !close(stored.gram_trace, fresh.gram_trace)
                || !close(stored.design_sum, fresh.design_sum)
            {
                return Err(TomoError::parse(
                    "checksum",
                    format!("stored {stored:?} does not match recomputed {fresh:?}"),
                ));
            }
        }
        Ok(set)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetFile {
    label: String,
    dim: usize,
    projectors: Vec<ProjectorJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    checksum: Option<SetChecksum>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectorJson {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

/// Recovers `v` from `P = |v⟩⟨v|`, checking Hermiticity, unit trace and idempotence.
fn ket_of_projector(p: &ComplexMatrix) -> std::result::Result<Vec<Complex64>, String> {
    const TOL: f64 = 1e-10;
    let dev = p.hermitian_deviation();
    if dev > TOL {
        return Err(format!("not Hermitian (deviation {dev:.3e})"));
    }
    let trace = p.trace().re;
    if (trace - 1.0).abs() > TOL {
        return Err(format!("trace {trace} is not 1"));
    }
    let idem = (&(p * p) - p)
        .as_slice()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if idem > TOL {
        return Err(format!("not idempotent (max |P² - P| = {idem:.3e})"));
    }
    let d = p.rows();
    // Column j of |v⟩⟨v| is v·conj(v_j); the largest diagonal entry picks a safe column.
    let j = (0..d)
        .max_by(|&a, &b| p[(a, a)].re.total_cmp(&p[(b, b)].re))
        .expect("non-empty");
    let scale = p[(j, j)].re.sqrt();
    Ok((0..d).map(|i| p[(i, j)] / scale).collect())
}

fn check_kets(kets: &[Vec<Complex64>], d: usize) -> Result<()> {
    if kets.is_empty() {
        return Err(TomoError::ShapeMismatch(
            "measurement set has no projectors".into(),
        ));
    }
    for (n, v) in kets.iter().enumerate() {
        if v.len() != d {
            return Err(TomoError::ShapeMismatch(format!(
                "ket {n} has length {}, expected {d}",
                v.len()
            )));
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(TomoError::NotUnitTrace { trace: norm });
        }
    }
    Ok(())
}

fn norm3(r: [f64; 3]) -> f64 {
    (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt()
}

/// Pure qubit state with Bloch direction `r` (normalized internally).
pub fn qubit_ket(r: [f64; 3]) -> Vec<Complex64> {
    let n = norm3(r);
    let (x, y, z) = (r[0] / n, r[1] / n, r[2] / n);
    let theta = z.clamp(-1.0, 1.0).acos();
    let phi = y.atan2(x);
    vec![
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]
}

fn kron_vec<T>(a: &[T], b: &[T]) -> Vec<T>
where
    T: Copy + std::ops::Mul<Output = T>,
{
    a.iter()
        .flat_map(|&x| b.iter().map(move |&y| x * y))
        .collect()
}

fn kron_square(a: &[f64], na: usize, b: &[f64], nb: usize) -> Vec<f64> {
    let n = na * nb;
    let mut out = vec![0.0; n * n];
    for ai in 0..na {
        for aj in 0..na {
            let s = a[ai * na + aj];
            if s == 0.0 {
                continue;
            }
            for bi in 0..nb {
                for bj in 0..nb {
                    out[(ai * nb + bi) * n + aj * nb + bj] = s * b[bi * nb + bj];
                }
            }
        }
    }
    out
}

fn gram_from_design(design: &[f64], features: usize) -> Vec<f64> {
    let mut gram = vec![0.0; features * features];
    for row in design.chunks_exact(features) {
        for i in 0..features {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            let g = &mut gram[i * features..(i + 1) * features];
            for (gij, &rj) in g[i..].iter_mut().zip(&row[i..]) {
                *gij += ri * rj;
            }
        }
    }
    for i in 0..features {
        for j in 0..i {
            gram[i * features + j] = gram[j * features + i];
        }
    }
    gram
}

/// Spectrum (non-increasing) and, when the matrix is not singular, inverse
/// of a symmetric positive-semidefinite matrix.
fn invert_symmetric(gram: &[f64], n: usize, count: usize) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let threshold = SINGULAR_RELATIVE * count as f64;
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || gram[i * n + j] == 0.0));
    if diagonal {
        let diag: Vec<f64> = (0..n).map(|i| gram[i * n + i]).collect();
        let mut eigenvalues = diag.clone();
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let singular = eigenvalues.last().is_none_or(|&l| l < threshold);
        let inverse = (!singular).then(|| {
            let mut inv = vec![0.0; n * n];
            for (i, &g) in diag.iter().enumerate() {
                inv[i * n + i] = 1.0 / g;
            }
            inv
        });
        return Ok((eigenvalues, inverse));
    }

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(n, n, gram));
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    if eigenvalues.last().is_none_or(|&l| l < threshold) {
        return Ok((eigenvalues, None));
    }
    let v = &eig.eigenvectors;
    let mut inv = vec![0.0; n * n];
    for k in 0..n {
        let w = 1.0 / eig.eigenvalues[k];
        for i in 0..n {
            let vik = v[(i, k)] * w;
            for j in 0..n {
                inv[i * n + j] += vik * v[(j, k)];
            }
        }
    }
    Ok((eigenvalues, Some(inv)))
}

fn check_qubits(n_qubits: usize) -> Result<()> {
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
    Ok(())
}

/// The 6ⁿ products of the ±x, ±y, ±z single-qubit projectors.
pub fn cube_set(n_qubits: usize) -> Result<MeasurementSet> {
    check_qubits(n_qubits)?;
    MeasurementSet::product(format!("cube{n_qubits}"), n_qubits, &CUBE_DIRECTIONS)
}

/// The 4ⁿ products of the tetrahedral single-qubit projectors.
pub fn tetrahedron_set(n_qubits: usize) -> Result<MeasurementSet> {
    check_qubits(n_qubits)?;
    MeasurementSet::product(
        format!("tetra{n_qubits}"),
        n_qubits,
        &TETRAHEDRON_DIRECTIONS,
    )
}

/// Complete set of mutually unbiased bases for one or two qubits.
///
/// For two qubits the five bases are the joint eigenbases of the commuting
/// Pauli classes {ZI, IZ, ZZ} (computational), {XI, IX, XX}, {YI, IY, YY},
/// {XY, YZ, ZX} and {XZ, YX, ZY}.
pub fn mub_set(n_qubits: usize) -> Result<MeasurementSet> {
    match n_qubits {
        1 => {
            let kets = CUBE_DIRECTIONS.iter().map(|r| qubit_ket(*r)).collect();
            MeasurementSet::from_kets("mub1", 1, kets)
        }
        2 => {
            let basis = pauli_basis(2)?;
            // Two independent generators per class, as Pauli digit pairs.
            let classes: [[[usize; 2]; 2]; 5] = [
                [[3, 0], [0, 3]],
                [[1, 0], [0, 1]],
                [[2, 0], [0, 2]],
                [[1, 2], [2, 3]],
                [[1, 3], [2, 1]],
            ];
            let mut kets = Vec::with_capacity(20);
            for [g1, g2] in classes {
                let p1 = basis.operator(4 * g1[0] + g1[1]).scale(2.0);
                let p2 = basis.operator(4 * g2[0] + g2[1]).scale(2.0);
                for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                    kets.push(common_eigenvector(&p1, s1, &p2, s2));
                }
            }
            MeasurementSet::from_kets("mub2", 2, kets)
        }
        _ => Err(TomoError::Unsupported(format!(
            "mutually unbiased bases are built for 1 or 2 qubits, not {n_qubits}"
        ))),
    }
}

/// The joint eigenvector of commuting Paulis `p1`, `p2` with eigenvalues
/// `s1`, `s2`, phase-fixed so its first nonzero entry is real and positive.
fn common_eigenvector(p1: &ComplexMatrix, s1: f64, p2: &ComplexMatrix, s2: f64) -> Vec<Complex64> {
    let d = p1.rows();
    let id = ComplexMatrix::identity(d);
    let proj = &(&id + &p1.scale(s1)) * &(&id + &p2.scale(s2));
    let col = (0..d)
        .max_by(|&a, &b| proj[(a, a)].re.total_cmp(&proj[(b, b)].re))
        .expect("non-empty");
    let mut v: Vec<Complex64> = (0..d).map(|i| proj[(i, col)]).collect();
    let lead = *v.iter().find(|z| z.norm() > 1e-12).expect("nonzero column");
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let phase = lead.conj() / lead.norm();
    for z in &mut v {
        *z = *z * phase / norm;
    }
    v
}

/// Resolves a built-in set name such as `cube2`, `tetra3`, `tetrahedron1` or `mub2`.
pub fn builtin_set(name: &str) -> Result<MeasurementSet> {
    let split = name
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(|| TomoError::parse("set", format!("unknown set `{name}`")))?;
    let (family, digits) = name.split_at(split);
    let n: usize = digits
        .parse()
        .map_err(|_| TomoError::parse("set", format!("unknown set `{name}`")))?;
    match family {
        "cube" => cube_set(n),
        "tetra" | "tetrahedron" => tetrahedron_set(n),
        "mub" => mub_set(n),
        _ => Err(TomoError::parse(
            "set",
            format!("unknown set family `{family}`"),
        )),
    }
}

/// Asymptotic worst-case MSE `(M/4N) Tr((XᵀX)⁻¹)`.
pub fn mse_upper_bound(set: &MeasurementSet, total_copies: u64) -> Result<f64> {
    if total_copies == 0 {
        return Err(TomoError::InsufficientCopies {
            copies: 0,
            count: set.count(),
        });
    }
    let m = set.count() as f64;
    if !total_copies.is_multiple_of(set.count() as u64) {
        warn!(
            "{total_copies} copies are not divisible by {} bases; using N/M = {:.3}",
            set.count(),
            total_copies as f64 / m
        );
    }
    Ok(m / (4.0 * total_copies as f64) * set.gram_inverse_trace()?)
}

/// Minimum of the bound over all measurement sets in dimension `d`:
/// `d(d+1)(d²-1)/(4N)`, reached when all Gram eigenvalues equal `M/(d(d+1))`.
pub fn optimal_bound_global(d: usize, total_copies: u64) -> f64 {
    let d = d as f64;
    d * (d + 1.0) * (d * d - 1.0) / (4.0 * total_copies as f64)
}

/// Minimum of the bound over two-qubit product measurements, `99/N`.
///
/// The optimum has Gram eigenvalues `M/12` (x6) and `M/36` (x9), giving
/// `Tr((XᵀX)⁻¹) = 396/M`.
pub fn optimal_bound_local_2qubit(total_copies: u64) -> f64 {
    let trace_inverse_times_m = 6.0 * 12.0 + 9.0 * 36.0;
    trace_inverse_times_m / (4.0 * total_copies as f64)
}

/// Outcome of [`verify_spectrum`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    pub matches: bool,
    /// Gram eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// `eigenvalue - expected` per position; empty when the counts differ.
    pub residuals: Vec<f64>,
}

/// Compares the Gram spectrum with `expected` (value, multiplicity) pairs.
pub fn verify_spectrum(set: &MeasurementSet, expected: &[(f64, usize)]) -> SpectrumReport {
    let mut target: Vec<f64> = expected
        .iter()
        .flat_map(|&(value, mult)| std::iter::repeat_n(value, mult))
        .collect();
    target.sort_by(|a, b| b.total_cmp(a));
    let eigenvalues = set.gram_eigenvalues().to_vec();
    if target.len() != eigenvalues.len() {
        return SpectrumReport {
            matches: false,
            eigenvalues,
            residuals: Vec::new(),
        };
    }
    let residuals: Vec<f64> = eigenvalues
        .iter()
        .zip(&target)
        .map(|(a, b)| a - b)
        .collect();
    SpectrumReport {
        matches: residuals.iter().all(|r| r.abs() <= SPECTRUM_TOLERANCE),
        eigenvalues,
        residuals,
    }
}

/// Feature vector of an arbitrary pure state, for callers outside the set builders.
pub fn feature_vector(basis: &OperatorBasis, ket: &[Complex64]) -> Vec<f64> {
    (1..basis.len())
        .map(|i| basis.expectation(i, ket))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::bloch_to_matrix;
    use crate::matrix::herm_eig;

    const N: u64 = 36_000;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn check_invariants(set: &MeasurementSet) {
        let d = set.dim() as f64;
        let f = set.feature_len();
        for n in 0..set.count() {
            let p = set.projector(n);
            assert!(p.hermitian_deviation() < 1e-12);
            assert!((&p * &p).max_abs_diff(&p) < 1e-10);
            assert_close(p.trace().re, 1.0, 1e-12);
            let psi = set.psi(n);
            assert_close(psi.iter().map(|x| x * x).sum(), (d - 1.0) / d, 1e-10);
        }
        let recomputed = gram_from_design(set.design_matrix(), f);
        for (a, b) in recomputed.iter().zip(set.gram()) {
            assert_close(*a, *b, 1e-10);
        }
        let trace: f64 = (0..f).map(|i| set.gram()[i * f + i]).sum();
        assert_close(trace, set.count() as f64 * (d - 1.0) / d, 1e-9);
        let inv = set.gram_inverse().unwrap();
        for i in 0..f {
            for j in 0..f {
                let s: f64 = (0..f).map(|k| set.gram()[i * f + k] * inv[k * f + j]).sum();
                assert_close(s, if i == j { 1.0 } else { 0.0 }, 1e-8);
            }
        }
    }

    #[test]
    fn constructed_sets_satisfy_invariants() {
        for n in 1..=3 {
            check_invariants(&cube_set(n).unwrap());
            check_invariants(&tetrahedron_set(n).unwrap());
        }
        check_invariants(&mub_set(1).unwrap());
        check_invariants(&mub_set(2).unwrap());
    }

    #[test]
    fn product_fast_path_matches_generic_construction() {
        for set in [cube_set(2).unwrap(), tetrahedron_set(2).unwrap()] {
            let generic = MeasurementSet::from_kets("generic", 2, set.kets().to_vec()).unwrap();
            for (a, b) in generic.design_matrix().iter().zip(set.design_matrix()) {
                assert_close(*a, *b, 1e-14);
            }
            for (a, b) in generic.gram().iter().zip(set.gram()) {
                assert_close(*a, *b, 1e-12);
            }
        }
    }

    #[test]
    fn projectors_match_their_features() {
        let basis = pauli_basis(2).unwrap();
        let set = tetrahedron_set(2).unwrap();
        for n in 0..set.count() {
            let m = bloch_to_matrix(&set.psi(n).to_vec().into(), &basis).unwrap();
            assert!(m.max_abs_diff(&set.projector(n)) < 1e-14);
        }
    }

    #[test]
    fn cube_single_qubit() {
        let set = cube_set(1).unwrap();
        assert_eq!(set.count(), 6);
        let identity = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        for (a, b) in set.gram().iter().zip(identity) {
            assert_close(*a, b, 1e-15);
        }
        assert!(verify_spectrum(&set, &[(1.0, 3)]).matches);
        assert_close(mse_upper_bound(&set, N).unwrap() * N as f64, 4.5, 1e-12);
    }

    #[test]
    fn cube_two_qubits() {
        let set = cube_set(2).unwrap();
        assert_eq!(set.count(), 36);
        let f = set.feature_len();
        for i in 0..f {
            for j in 0..f {
                if i != j {
                    assert_eq!(set.gram()[i * f + j], 0.0);
                }
            }
        }
        let m = set.count() as f64;
        let report = verify_spectrum(&set, &[(m / 12.0, 6), (m / 36.0, 9)]);
        assert!(report.matches, "{report:?}");
        assert!(verify_spectrum(&set, &[(3.0, 6), (1.0, 9)]).matches);
        assert_close(mse_upper_bound(&set, N).unwrap() * N as f64, 99.0, 1e-9);
    }

    #[test]
    fn tetrahedron_sets() {
        let one = tetrahedron_set(1).unwrap();
        assert_eq!(one.count(), 4);
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 / 3.0 } else { 0.0 };
                assert_close(one.gram()[3 * i + j], expected, 1e-15);
            }
        }
        let two = tetrahedron_set(2).unwrap();
        assert_eq!(two.count(), 16);
        assert!(verify_spectrum(&two, &[(4.0 / 3.0, 6), (4.0 / 9.0, 9)]).matches);
        assert_close(mse_upper_bound(&two, N).unwrap() * N as f64, 99.0, 1e-9);
    }

    #[test]
    fn mub_two_qubits() {
        let set = mub_set(2).unwrap();
        assert_eq!(set.count(), 20);
        let report = verify_spectrum(&set, &[(1.0, 15)]);
        assert!(report.matches, "{report:?}");
        assert_close(mse_upper_bound(&set, N).unwrap() * N as f64, 75.0, 1e-9);

        let kets = set.kets();
        for a in 0..20 {
            for b in 0..20 {
                let overlap: Complex64 = kets[a]
                    .iter()
                    .zip(&kets[b])
                    .map(|(x, y)| x.conj() * y)
                    .sum();
                let expected = if a == b {
                    1.0
                } else if a / 4 == b / 4 {
                    0.0
                } else {
                    0.25
                };
                assert_close(overlap.norm_sqr(), expected, 1e-10);
            }
        }
        // Outside the computational basis every amplitude is ±1/2 or ±i/2.
        for v in &kets[4..] {
            for z in v {
                let ok = [(0.5, 0.0), (-0.5, 0.0), (0.0, 0.5), (0.0, -0.5)]
                    .iter()
                    .any(|&(re, im)| (z.re - re).abs() < 1e-12 && (z.im - im).abs() < 1e-12);
                assert!(ok, "{z}");
            }
        }
    }

    #[test]
    fn mub_one_qubit_matches_cube_bound() {
        let mub = mse_upper_bound(&mub_set(1).unwrap(), 600).unwrap();
        let cube = mse_upper_bound(&cube_set(1).unwrap(), 600).unwrap();
        assert_close(mub, cube, 1e-15);
        assert_close(mub * 600.0, 4.5, 1e-12);
        assert!(matches!(mub_set(3), Err(TomoError::Unsupported(_))));
    }

    #[test]
    fn optimal_bounds() {
        assert_close(optimal_bound_global(4, N) * N as f64, 75.0, 1e-12);
        assert_close(optimal_bound_global(2, N) * N as f64, 4.5, 1e-12);
        assert_close(optimal_bound_local_2qubit(N) * N as f64, 99.0, 1e-12);
        for set in [cube_set(2).unwrap(), tetrahedron_set(2).unwrap()] {
            assert_close(
                optimal_bound_local_2qubit(N),
                mse_upper_bound(&set, N).unwrap(),
                1e-12,
            );
        }
        for set in [
            cube_set(2).unwrap(),
            tetrahedron_set(2).unwrap(),
            mub_set(2).unwrap(),
        ] {
            assert!(optimal_bound_global(4, N) <= mse_upper_bound(&set, N).unwrap() + 1e-15);
        }
    }

    /// Grid search over the local-measurement eigenvalue problem. Within each
    /// group of equal-rank eigenvalues the sum of reciprocals is minimized by
    /// equal values (convexity), leaving a 2-parameter search over group sums.
    #[test]
    fn local_minimum_by_grid_search() {
        let m = 36.0;
        let mut best = f64::INFINITY;
        let steps = 600;
        for a in 0..=steps {
            let s1 = m / 4.0 + (m / 2.0) * a as f64 / steps as f64;
            for b in 0..=steps {
                let s2 = (m / 2.0 - s1).max(0.0) + (m / 2.0) * b as f64 / steps as f64;
                let s3 = 0.75 * m - s1 - s2;
                let (l1, l2, l3) = (s1 / 3.0, s2 / 3.0, s3 / 9.0);
                if s3 <= 0.0 || !(l1 >= l2 && l2 >= l3) {
                    continue;
                }
                best = best.min(3.0 / l1 + 3.0 / l2 + 9.0 / l3);
            }
        }
        assert_close(best * m, 396.0, 0.5);
        assert!(best * m >= 396.0 - 1e-9);
    }

    #[test]
    fn singular_set_is_reported() {
        let kets = CUBE_DIRECTIONS[4..].iter().map(|r| qubit_ket(*r)).collect();
        let set = MeasurementSet::from_kets("z-only", 1, kets).unwrap();
        assert!(!set.is_informationally_complete());
        assert!(matches!(
            mse_upper_bound(&set, 100),
            Err(TomoError::SingularGram { .. })
        ));
    }

    #[test]
    fn builtin_names() {
        assert_eq!(builtin_set("cube2").unwrap().count(), 36);
        assert_eq!(builtin_set("tetrahedron1").unwrap().count(), 4);
        assert_eq!(builtin_set("tetra2").unwrap().count(), 16);
        assert_eq!(builtin_set("mub2").unwrap().count(), 20);
        assert!(builtin_set("cube").is_err());
        assert!(builtin_set("sphere2").is_err());
        assert!(builtin_set("cube9").is_err());
    }

    #[test]
    fn json_round_trip() {
        let set = mub_set(2).unwrap();
        let back = MeasurementSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back.label(), "mub2");
        assert_eq!(back.count(), 20);
        for (a, b) in back.design_matrix().iter().zip(set.design_matrix()) {
            assert_close(*a, *b, 1e-14);
        }
    }

    #[test]
    fn json_checksum_mismatch_is_rejected() {
        let text = cube_set(1).unwrap().to_json();
        let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
        value["checksum"]["gram_trace"] = serde_json::json!(2.5);
        let err = MeasurementSet::from_json(&value.to_string()).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");
    }

    #[test]
    fn json_rejects_non_projectors() {
        let text = r#"{"label": "bad", "dim": 2, "projectors": [{"re": [[0.5, 0], [0, 0.5]], "im": [[0, 0], [0, 0]]}]}"#;
        let err = MeasurementSet::from_json(text).unwrap_err();
        assert!(err.to_string().contains("projectors[0]"), "{err}");
        let text = r#"{"label": "bad", "dim": 3, "projectors": []}"#;
        assert!(MeasurementSet::from_json(text)
            .unwrap_err()
            .to_string()
            .contains("dim"));
    }

    #[test]
    fn qubit_kets_point_along_directions() {
        for r in CUBE_DIRECTIONS.iter().chain(&TETRAHEDRON_DIRECTIONS) {
            let v = qubit_ket(*r);
            let p = ComplexMatrix::outer(&v);
            let e = herm_eig(&p).unwrap();
            assert_close(e.eigenvalues[0], 1.0, 1e-14);
            let n = norm3(*r);
            let basis = pauli_basis(1).unwrap();
            let h = std::f64::consts::FRAC_1_SQRT_2;
            for (k, &rk) in r.iter().enumerate() {
                assert_close(basis.expectation(k + 1, &v), h * rk / n, 1e-14);
            }
        }
    }
}
