#![no_main]

use libfuzzer_sys::fuzz_target;
use psa_core::io::{read_design_csv, write_design_csv};
use psa_core::GridSpace;

fuzz_target!(|data: &[u8]| {
    let Some((&levels, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let space = GridSpace::new(2, u32::from(levels).max(2)).unwrap();
    if let Ok(parsed) = read_design_csv(text, &space) {
        let again = read_design_csv(&write_design_csv(&parsed.points, &space), &space).unwrap();
        assert_eq!(again.points, parsed.points);
        assert!(again.warnings.is_empty());
    }
});
