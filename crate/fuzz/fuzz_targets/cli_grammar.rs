#![no_main]

use libfuzzer_sys::fuzz_target;
use lre_tomo::bench::{parse_copies_list, parse_q_grid, parse_qubit_range, CopiesRule};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rule) = CopiesRule::parse(text) {
        for n in 0..8 {
            let _ = rule.evaluate(n);
        }
    }
    if let Ok(grid) = parse_q_grid(text) {
        assert!(!grid.is_empty() && grid.iter().all(|q| (0.0..=1.0).contains(q)));
    }
    if let Ok(range) = parse_qubit_range(text) {
        assert!(*range.start() >= 1 && range.start() <= range.end());
    }
    if let Ok(list) = parse_copies_list(text) {
        assert!(list.iter().all(|&c| c > 0));
    }
});
