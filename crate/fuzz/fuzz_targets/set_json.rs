#![no_main]

use libfuzzer_sys::fuzz_target;
use lre_tomo::MeasurementSet;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(set) = MeasurementSet::from_json(text) {
        assert!(set.count() > 0);
        let _ = set.gram_inverse_trace();
    }
});
