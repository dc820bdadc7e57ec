//! Iterative maximum-likelihood baseline.
//!
//! Each projector is a two-outcome test, so the likelihood of a record is a
//! product of binomials and the normalized operators
//! `{Pₙ/M, (I - Pₙ)/M}` form a POVM. The RρR update uses
//!
//! `R(ρ) = (1/M) Σₙ [ (p̂ₙ/pₙ) Pₙ + ((1 - p̂ₙ)/(1 - pₙ)) (I - Pₙ) ]`,
//!
//! which satisfies `Tr(R(ρ)ρ) = 1`. A plain update that would lower the
//! likelihood is replaced by a diluted step `(I + εR)ρ(I + εR)` with
//! shrinking ε, so the likelihood trace never decreases.

use log::debug;
use num_complex::Complex64;

use crate::error::{Result, TomoError};
use crate::matrix::ComplexMatrix;
use crate::measurement::MeasurementSet;
use crate::sampling::MeasurementRecord;
use crate::states::DensityMatrix;

/// Dilution factors tried, in order, when the plain update loses likelihood.
const DILUTION_STEPS: [f64; 8] = [1.0, 0.5, 0.25, 0.1, 0.03, 0.01, 3e-3, 1e-3];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MleOptions {
    pub max_iterations: usize,
    /// Stop once `(L_new - L_old)/|L_old|` falls below this.
    pub relative_likelihood_tolerance: f64,
    /// Probabilities are clipped to `[floor, 1 - floor]`.
    pub probability_floor: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iterations: 2000,
            relative_likelihood_tolerance: 1e-10,
            probability_floor: 1e-12,
        }
    }
}

impl MleOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(TomoError::OutOfRange {
                name: "max_iterations",
                value: 0.0,
                range: ">= 1",
            });
        }
        if self.relative_likelihood_tolerance.is_nan() || self.relative_likelihood_tolerance <= 0.0
        {
            return Err(TomoError::OutOfRange {
                name: "relative_likelihood_tolerance",
                value: self.relative_likelihood_tolerance,
                range: "> 0",
            });
        }
        if !(self.probability_floor > 0.0 && self.probability_floor < 0.5) {
            return Err(TomoError::OutOfRange {
                name: "probability_floor",
                value: self.probability_floor,
                range: "(0, 0.5)",
            });
        }
        Ok(())
    }
}

/// Result of [`mle_estimate`].
#[derive(Clone, Debug)]
pub struct MleOutcome {
    pub rho: DensityMatrix,
    pub iterations: usize,
    /// Log-likelihood of the starting point followed by one entry per iteration.
    pub likelihood_trace: Vec<f64>,
    /// False when `max_iterations` was reached before the tolerance.
    pub converged: bool,
}

/// Binomial log-likelihood `Σₙ (N/M)[p̂ₙ log pₙ + (1 - p̂ₙ) log(1 - pₙ)]`,
/// with the default probability floor and `0·log 0 = 0`.
pub fn log_likelihood(
    record: &MeasurementRecord,
    set: &MeasurementSet,
    rho: &DensityMatrix,
) -> Result<f64> {
    record.check_against(set)?;
    if rho.dim() != set.dim() {
        return Err(TomoError::ShapeMismatch(format!(
            "state has dimension {}, set has dimension {}",
            rho.dim(),
            set.dim()
        )));
    }
    let probs = probabilities(rho.matrix(), set);
    Ok(likelihood_of(
        record,
        &probs,
        MleOptions::default().probability_floor,
    ))
}

fn probabilities(rho: &ComplexMatrix, set: &MeasurementSet) -> Vec<f64> {
    set.kets().iter().map(|v| rho.expectation(v).re).collect()
}

fn likelihood_of(record: &MeasurementRecord, probs: &[f64], floor: f64) -> f64 {
    let sum: f64 = record
        .frequencies
        .iter()
        .zip(probs)
        .map(|(&f, &p)| {
            let p = p.clamp(floor, 1.0 - floor);
            let mut term = 0.0;
            if f > 0.0 {
                term += f * p.ln();
            }
            if f < 1.0 {
                term += (1.0 - f) * (1.0 - p).ln();
            }
            term
        })
        .sum();
    record.trials_per_base * sum
}

/// `R(ρ)` from the current outcome probabilities.
fn r_operator(
    record: &MeasurementRecord,
    set: &MeasurementSet,
    probs: &[f64],
    floor: f64,
) -> ComplexMatrix {
    let d = set.dim();
    let m = set.count() as f64;
    let mut r = vec![Complex64::new(0.0, 0.0); d * d];
    let mut complement_weight = 0.0;
    for ((v, &f), &p) in set.kets().iter().zip(&record.frequencies).zip(probs) {
        let p = p.clamp(floor, 1.0 - floor);
        let a = f / p;
        let b = (1.0 - f) / (1.0 - p);
        complement_weight += b;
        let c = a - b;
        if c == 0.0 {
            continue;
        }
        for i in 0..d {
            let vi = v[i] * c;
            let row = &mut r[i * d..(i + 1) * d];
            for (rij, vj) in row.iter_mut().zip(v) {
                *rij += vi * vj.conj();
            }
        }
    }
    for i in 0..d {
        r[i * d + i] += complement_weight;
    }
    ComplexMatrix::from_vec(d, d, r)
        .expect("square buffer")
        .scale(1.0 / m)
}

/// `A ρ A† / Tr(A ρ A†)`, re-symmetrized.
fn sandwich(a: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    let mut out = &(a * rho) * &a.adjoint();
    let trace = out.trace().re;
    out = out.scale(1.0 / trace);
    out.hermitize();
    out
}

/// Maximum-likelihood state by RρR iteration, starting from `I/d`.
pub fn mle_estimate(
    record: &MeasurementRecord,
    set: &MeasurementSet,
    options: &MleOptions,
) -> Result<MleOutcome> {
    options.validate()?;
    record.check_against(set)?;
    // informational completeness
    set.gram_inverse()?;
    let floor = options.probability_floor;
    let d = set.dim();
    let identity = ComplexMatrix::identity(d);

    let mut rho = identity.scale(1.0 / d as f64);
    let mut probs = probabilities(&rho, set);
    let mut likelihood = likelihood_of(record, &probs, floor);
    let mut trace = vec![likelihood];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        iterations += 1;
        let r = r_operator(record, set, &probs, floor);

        let mut accepted = None;
        for (k, &eps) in DILUTION_STEPS.iter().enumerate() {
            let step = if k == 0 {
                sandwich(&r, &rho)
            } else {
                sandwich(&(&identity + &r.scale(eps)), &rho)
            };
            let step_probs = probabilities(&step, set);
            let step_likelihood = likelihood_of(record, &step_probs, floor);
            if step_likelihood >= likelihood {
                if k > 0 {
                    debug!("iteration {iterations}: diluted step with eps = {eps}");
                }
                accepted = Some((step, step_probs, step_likelihood));
                break;
            }
        }
        let Some((next, next_probs, next_likelihood)) = accepted else {
            // No step improves on the current iterate at working precision.
            trace.push(likelihood);
            converged = true;
            break;
        };
        let gain = (next_likelihood - likelihood) / likelihood.abs().max(f64::MIN_POSITIVE);
        rho = next;
        probs = next_probs;
        likelihood = next_likelihood;
        trace.push(likelihood);
        if gain < options.relative_likelihood_tolerance {
            converged = true;
            break;
        }
    }

    Ok(MleOutcome {
        rho: DensityMatrix::new_unchecked(rho),
        iterations,
        likelihood_trace: trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::herm_eig;
    use crate::measurement::cube_set;
    use crate::sampling::{simulate_record, true_probabilities};
    use crate::states::{mse, random_mixed_pure, werner};

    fn exact_record(rho: &DensityMatrix, set: &MeasurementSet) -> MeasurementRecord {
        let p = true_probabilities(rho, set).unwrap().values;
        MeasurementRecord::new(set.label(), 1000.0, p, None).unwrap()
    }

    #[test]
    fn single_base_likelihood() {
        let set = crate::measurement::MeasurementSet::from_kets(
            "one",
            1,
            vec![vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]],
        )
        .unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let record = MeasurementRecord::new("one", 10.0, vec![0.5], None).unwrap();
        let l = log_likelihood(&record, &set, &rho).unwrap();
        assert!((l - 10.0 * 0.5f64.ln()).abs() < 1e-12, "{l}");
    }

    #[test]
    fn degenerate_terms_vanish() {
        let set = cube_set(1).unwrap();
        let ket0 = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[1.0, 0.0])).unwrap();
        let record = exact_record(&ket0, &set);
        let l = log_likelihood(&record, &set, &ket0).unwrap();
        // only the four equatorial bases contribute
        // the clipped certain outcomes add O(1e-9) each
        assert!((l - 4.0 * 1000.0 * 0.5f64.ln()).abs() < 1e-8, "{l}");
    }

    #[test]
    fn likelihood_peaks_at_the_truth() {
        let set = cube_set(2).unwrap();
        let rho = werner(0.5).unwrap();
        let record = exact_record(&rho, &set);
        let best = log_likelihood(&record, &set, &rho).unwrap();
        for k in 0..=20 {
            let q = k as f64 / 20.0;
            if (q - 0.5).abs() < 1e-12 {
                continue;
            }
            let other = log_likelihood(&record, &set, &werner(q).unwrap()).unwrap();
            assert!(other < best, "q={q}");
        }
    }

    #[test]
    fn maximally_mixed_is_a_fixed_point() {
        let set = cube_set(2).unwrap();
        let rho = DensityMatrix::maximally_mixed(4);
        let out = mle_estimate(&exact_record(&rho, &set), &set, &MleOptions::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.converged);
        assert!(out.rho.matrix().max_abs_diff(rho.matrix()) < 1e-14);
    }

    #[test]
    fn exact_data_converges_to_the_truth() {
        let set = cube_set(2).unwrap();
        let options = MleOptions {
            max_iterations: 20_000,
            relative_likelihood_tolerance: 1e-15,
            ..MleOptions::default()
        };
        for rho in [werner(0.5).unwrap(), random_mixed_pure(2, 0.6, 3).unwrap()] {
            let out = mle_estimate(&exact_record(&rho, &set), &set, &options).unwrap();
            let err = mse(out.rho.matrix(), &rho).unwrap().sqrt();
            assert!(
                err < 1e-6,
                "error {err} after {} iterations",
                out.iterations
            );
        }
    }

    #[test]
    fn iterates_stay_physical_and_likelihood_increases() {
        let set = cube_set(2).unwrap();
        let truth = random_mixed_pure(2, 0.9, 21).unwrap();
        let record = simulate_record(&truth, &set, 3600, 4).unwrap();
        let out = mle_estimate(&record, &set, &MleOptions::default()).unwrap();
        for w in out.likelihood_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9);
        }
        let m = out.rho.matrix();
        assert!(m.hermitian_deviation() < 1e-12);
        assert!((m.trace().re - 1.0).abs() < 1e-9);
        assert!(*herm_eig(m).unwrap().eigenvalues.last().unwrap() >= -1e-9);
        assert_eq!(out.likelihood_trace.len(), out.iterations + 1);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let set = cube_set(2).unwrap();
        let record = simulate_record(&werner(0.8).unwrap(), &set, 3600, 4).unwrap();
        let options = MleOptions {
            max_iterations: 3,
            ..MleOptions::default()
        };
        let out = mle_estimate(&record, &set, &options).unwrap();
        assert_eq!(out.iterations, 3);
        assert!(!out.converged);
    }

    #[test]
    fn comparable_error_to_least_squares() {
        let set = cube_set(2).unwrap();
        let basis = crate::basis::pauli_basis(2).unwrap();
        let truth = werner(0.5).unwrap();
        let record = simulate_record(&truth, &set, 36_000, 21).unwrap();
        let lre = crate::lre::lre_estimate(&record, &set, &basis, Some(&truth)).unwrap();
        let mle = mle_estimate(&record, &set, &MleOptions::default()).unwrap();
        let ratio = mse(mle.rho.matrix(), &truth).unwrap() / lre.mse_vs_truth.unwrap();
        assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn invalid_options() {
        let set = cube_set(1).unwrap();
        let record = MeasurementRecord::new("cube1", 10.0, vec![0.5; 6], None).unwrap();
        let bad = MleOptions {
            max_iterations: 0,
            ..MleOptions::default()
        };
        assert!(mle_estimate(&record, &set, &bad).is_err());
        let bad = MleOptions {
            probability_floor: 0.0,
            ..MleOptions::default()
        };
        assert!(mle_estimate(&record, &set, &bad).is_err());
    }
}
