#![no_main]

use libfuzzer_sys::fuzz_target;
use psa_core::CriterionSpec;

fuzz_target!(|data: &[u8]| {
    let Some((&dim, rest)) = data.split_first() else {
        return;
    };
    let Ok(text) = std::str::from_utf8(rest) else {
        return;
    };
    let dim = usize::from(dim % 8) + 1;
    if let Ok(spec) = CriterionSpec::parse(text, dim) {
        assert_eq!(CriterionSpec::parse(&spec.to_string(), dim).unwrap(), spec);
    }
});
