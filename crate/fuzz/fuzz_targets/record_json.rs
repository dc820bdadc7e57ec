#![no_main]

use libfuzzer_sys::fuzz_target;
use lre_tomo::MeasurementRecord;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(record) = MeasurementRecord::from_json(text) {
        assert!(record.frequencies.iter().all(|f| (0.0..=1.0).contains(f)));
        assert_eq!(
            MeasurementRecord::from_json(&record.to_json()).unwrap(),
            record
        );
    }
});
