//! Outcome probabilities and simulated measurement records.

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::basis::{bloch_unchecked, pauli_basis};
use crate::error::{Result, TomoError};
use crate::measurement::MeasurementSet;
use crate::states::DensityMatrix;

/// Generator stream used for binomial draws.
const RECORD_STREAM: u64 = 0;

/// Empirical frequencies `p̂ₙ`, one per projector of a measurement set.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord {
    pub set_label: String,
    /// Copies measured per projector, N/M.
    pub trials_per_base: f64,
    pub frequencies: Vec<f64>,
    /// Seed of the simulation; absent for imported data.
    pub seed: Option<u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordFile {
    set_label: String,
    trials_per_base: f64,
    frequencies: Vec<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

impl MeasurementRecord {
    pub fn new(
        set_label: impl Into<String>,
        trials_per_base: f64,
        frequencies: Vec<f64>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if !(trials_per_base.is_finite() && trials_per_base > 0.0) {
            return Err(TomoError::parse(
                "trials_per_base",
                format!("{trials_per_base} is not a positive number"),
            ));
        }
        if frequencies.is_empty() {
            return Err(TomoError::parse("frequencies", "no frequencies"));
        }
        if let Some((n, f)) = frequencies
            .iter()
            .enumerate()
            .find(|(_, f)| !(0.0..=1.0).contains(*f))
        {
            return Err(TomoError::parse(
                format!("frequencies[{n}]"),
                format!("{f} is outside [0, 1]"),
            ));
        }
        Ok(MeasurementRecord {
            set_label: set_label.into(),
            trials_per_base,
            frequencies,
            seed,
        })
    }

    /// Number of bases M.
    pub fn count(&self) -> usize {
        self.frequencies.len()
    }

    /// Total copies consumed, N.
    pub fn total_copies(&self) -> f64 {
        self.trials_per_base * self.count() as f64
    }

    pub fn to_json(&self) -> String {
        let file = RecordFile {
            set_label: self.set_label.clone(),
            trials_per_base: self.trials_per_base,
            frequencies: self.frequencies.clone(),
            seed: self.seed,
        };
        serde_json::to_string_pretty(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: RecordFile = crate::error::decode_json(text, "measurement record")?;
        Self::new(
            file.set_label,
            file.trials_per_base,
            file.frequencies,
            file.seed,
        )
    }

    /// Reads one frequency per line. Blank lines and `#` comments are skipped.
    pub fn from_csv(
        text: &str,
        set_label: impl Into<String>,
        trials_per_base: f64,
    ) -> Result<Self> {
        let mut frequencies = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let value: f64 = line.parse().map_err(|_| {
                TomoError::parse(
                    format!("line {}", lineno + 1),
                    format!("`{line}` is not a number"),
                )
            })?;
            frequencies.push(value);
        }
        Self::new(set_label, trials_per_base, frequencies, None)
    }

    pub(crate) fn check_against(&self, set: &MeasurementSet) -> Result<()> {
        if self.count() != set.count() {
            return Err(TomoError::ShapeMismatch(format!(
                "record has {} frequencies, set `{}` has {} projectors",
                self.count(),
                set.label(),
                set.count()
            )));
        }
        Ok(())
    }
}

/// Born-rule probabilities for every projector of a set.
#[derive(Clone, Debug, PartialEq)]
pub struct OutcomeProbabilities {
    /// `pₙ = ⟨Ψ⁽ⁿ⁾|ρ|Ψ⁽ⁿ⁾⟩`, clamped to [0, 1].
    pub values: Vec<f64>,
    /// Largest gap between the trace form and the affine form `1/d + ΘᵀΨ⁽ⁿ⁾`.
    pub affine_deviation: f64,
    /// Projectors with `pₙ = 1`: the state is already that projector.
    pub certain: Vec<usize>,
}

pub fn true_probabilities(
    rho: &DensityMatrix,
    set: &MeasurementSet,
) -> Result<OutcomeProbabilities> {
    if rho.dim() != set.dim() {
        return Err(TomoError::ShapeMismatch(format!(
            "state has dimension {}, set `{}` has dimension {}",
            rho.dim(),
            set.label(),
            set.dim()
        )));
    }
    let basis = pauli_basis(set.n_qubits())?;
    let theta = bloch_unchecked(rho.matrix(), &basis);
    let inv_d = 1.0 / set.dim() as f64;
    let mut affine_deviation = 0.0f64;
    let mut certain = Vec::new();
    let values = set
        .kets()
        .iter()
        .enumerate()
        .map(|(n, v)| {
            let p = rho.matrix().expectation(v).re;
            let affine = inv_d
                + set
                    .psi(n)
                    .iter()
                    .zip(theta.as_slice())
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            affine_deviation = affine_deviation.max((p - affine).abs());
            let p = p.clamp(0.0, 1.0);
            if p >= 1.0 - 1e-12 {
                certain.push(n);
            }
            p
        })
        .collect();
    Ok(OutcomeProbabilities {
        values,
        affine_deviation,
        certain,
    })
}

/// Draws `p̂ₙ = Binomial(N/M, pₙ)/(N/M)` for every projector.
///
/// When N is not a multiple of M each base gets `floor(N/M)` trials.
pub fn simulate_record(
    rho: &DensityMatrix,
    set: &MeasurementSet,
    total_copies: u64,
    seed: u64,
) -> Result<MeasurementRecord> {
    let m = set.count() as u64;
    if total_copies < m {
        return Err(TomoError::InsufficientCopies {
            copies: total_copies,
            count: set.count(),
        });
    }
    if !total_copies.is_multiple_of(m) {
        warn!(
            "{total_copies} copies are not divisible by {m} bases; using {} per base",
            total_copies / m
        );
    }
    let trials = total_copies / m;
    let probs = true_probabilities(rho, set)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RECORD_STREAM);
    let frequencies = probs
        .values
        .iter()
        .map(|&p| {
            let draw = Binomial::new(trials, p)
                .expect("p in [0, 1]")
                .sample(&mut rng);
            draw as f64 / trials as f64
        })
        .collect();
    Ok(MeasurementRecord {
        set_label: set.label().to_string(),
        trials_per_base: trials as f64,
        frequencies,
        seed: Some(seed),
    })
}
