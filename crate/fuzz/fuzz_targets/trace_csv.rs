#![no_main]

use libfuzzer_sys::fuzz_target;
use psa_core::io::{read_trace_csv, write_trace_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = read_trace_csv(text) {
        assert_eq!(read_trace_csv(&write_trace_csv(&rows)).unwrap(), rows);
    }
});
