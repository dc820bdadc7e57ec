#![no_main]

use libfuzzer_sys::fuzz_target;
use lre_tomo::DensityMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rho) = DensityMatrix::from_json(text) {
        let again = DensityMatrix::from_json(&rho.to_json()).expect("re-encoded state parses");
        assert_eq!(again.matrix(), rho.matrix());
    }
});
