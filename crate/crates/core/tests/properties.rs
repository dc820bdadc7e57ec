use approx::assert_abs_diff_eq;
use lre_tomo::measurement::{builtin_set, feature_vector, qubit_ket};
use lre_tomo::{
    cube_set, lre_estimate, mse_upper_bound, optimal_bound_global, optimal_bound_local_2qubit,
    pauli_basis, random_mixed_pure, simulate_record, state_to_bloch, DensityMatrix,
    MeasurementRecord, MeasurementSet,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_direction(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if r > 0.1 && r <= 1.0 {
            return [v[0] / r, v[1] / r, v[2] / r];
        }
    }
}

fn product_ket(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn density_json_round_trip(n in 1usize..=3, alpha in 0.0f64..=1.0, seed in any::<u64>()) {
        let rho = random_mixed_pure(n, alpha, seed).unwrap();
        let back = DensityMatrix::from_json(&rho.to_json()).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn purity_matches_bloch_norm(n in 1usize..=3, alpha in 0.0f64..=1.0, seed in any::<u64>()) {
        let rho = random_mixed_pure(n, alpha, seed).unwrap();
        let theta = state_to_bloch(rho.matrix(), &pauli_basis(n).unwrap()).unwrap();
        let d = rho.dim() as f64;
        prop_assert!((rho.purity() - (1.0 / d + theta.norm_sqr())).abs() < 1e-12);
    }

    #[test]
    fn record_json_round_trip(seed in any::<u64>(), copies in 16u64..100_000) {
        let set = builtin_set("tetra2").unwrap();
        let rho = random_mixed_pure(2, 0.5, seed).unwrap();
        let record = simulate_record(&rho, &set, copies, seed).unwrap();
        prop_assert_eq!(MeasurementRecord::from_json(&record.to_json()).unwrap(), record);
    }

    #[test]
    fn estimates_stay_within_max_mse(n in 1usize..=3, alpha in 0.0f64..=1.0, seed in any::<u64>()) {
        let set = cube_set(n).unwrap();
        let truth = random_mixed_pure(n, alpha, seed).unwrap();
        let record = simulate_record(&truth, &set, set.count() as u64 * 10, seed).unwrap();
        let report = lre_estimate(&record, &set, &pauli_basis(n).unwrap(), Some(&truth)).unwrap();
        let m = report.mse_vs_truth.unwrap();
        prop_assert!((0.0..=2.0).contains(&m));
        prop_assert!(m <= report.mse_plre_vs_truth.unwrap() + 1e-15);
        prop_assert!(report.eigenvalue_shift.after.iter().all(|&w| w >= 0.0));
    }
}

#[test]
fn pure_projector_features_have_fixed_norm() {
    for name in [
        "cube1", "cube2", "cube3", "tetra1", "tetra2", "tetra3", "mub1", "mub2",
    ] {
        let set = builtin_set(name).unwrap();
        let basis = pauli_basis(set.n_qubits()).unwrap();
        let d = set.dim() as f64;
        for n in 0..set.count() {
            let psi = set.psi(n);
            let norm: f64 = psi.iter().map(|x| x * x).sum();
            assert_abs_diff_eq!(norm, (d - 1.0) / d, epsilon = 1e-12);
            let direct = feature_vector(&basis, &set.kets()[n]);
            for (a, b) in psi.iter().zip(&direct) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
        }
    }
}

#[test]
fn set_json_round_trip() {
    for name in ["cube2", "tetra1", "mub2"] {
        let set = builtin_set(name).unwrap();
        let back = MeasurementSet::from_json(&set.to_json()).unwrap();
        assert_eq!(back.count(), set.count());
        for (a, b) in back.gram().iter().zip(set.gram()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
    }
}

/// Random local product sets never beat the two-qubit local optimum.
#[test]
fn random_product_sets_respect_the_local_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let copies = 1_000_000;
    let local = optimal_bound_local_2qubit(copies);
    let global = optimal_bound_global(4, copies);
    let mut checked = 0;
    while checked < 200 {
        let k = rng.random_range(4..=7);
        let dirs: Vec<Vec<Complex64>> = (0..k)
            .map(|_| qubit_ket(random_direction(&mut rng)))
            .collect();
        let kets: Vec<Vec<Complex64>> = dirs
            .iter()
            .flat_map(|a| dirs.iter().map(move |b| product_ket(a, b)))
            .collect();
        let set = MeasurementSet::from_kets("random", 2, kets).unwrap();
        assert!(set.count() >= 16);
        if !set.is_informationally_complete() {
            continue;
        }
        let bound = mse_upper_bound(&set, copies).unwrap();
        assert!(
            bound >= local * (1.0 - 1e-9),
            "bound {bound} below local optimum {local}"
        );
        assert!(bound >= global * (1.0 - 1e-9));
        checked += 1;
    }
}
