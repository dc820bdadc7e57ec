use lre_tomo::{
    cube_set, lre_estimate, mse_upper_bound, pauli_basis, simulate_record, werner, DensityMatrix,
};

fn mean_lre_mse(truth: &DensityMatrix, copies: u64, trials: u64, seed0: u64) -> f64 {
    let set = cube_set(2).unwrap();
    let basis = pauli_basis(2).unwrap();
    let total: f64 = (0..trials)
        .map(|t| {
            let record = simulate_record(truth, &set, copies, seed0 + t).unwrap();
            lre_estimate(&record, &set, &basis, Some(truth))
                .unwrap()
                .mse_vs_truth
                .unwrap()
        })
        .sum();
    total / trials as f64
}

#[test]
fn batch_mean_error_respects_the_bound() {
    let copies = 36_000;
    let mean = mean_lre_mse(&werner(0.5).unwrap(), copies, 2000, 1);
    let bound = mse_upper_bound(&cube_set(2).unwrap(), copies).unwrap();
    assert!(mean <= 1.1 * bound, "mean {mean}, bound {bound}");
}

/// At the maximally mixed state every outcome has variance 0.1875 per trial,
/// below the worst case 0.25 the bound assumes.
#[test]
fn bound_dominates_at_the_maximally_mixed_state() {
    let copies = 36_000;
    let mean = mean_lre_mse(&werner(0.0).unwrap(), copies, 1000, 50_000);
    let bound = mse_upper_bound(&cube_set(2).unwrap(), copies).unwrap();
    assert!(mean <= bound, "mean {mean}, bound {bound}");
}
