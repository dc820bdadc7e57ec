#![no_main]

use libfuzzer_sys::fuzz_target;
use lre_tomo::MeasurementRecord;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(record) = MeasurementRecord::from_csv(text, "fuzz", 100.0) {
        assert!(!record.frequencies.is_empty());
        assert!(record.frequencies.iter().all(|f| (0.0..=1.0).contains(f)));
    }
});
