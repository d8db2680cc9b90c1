#![no_main]
use ehpc::spec::parse_number_list;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(values) = parse_number_list(s) {
            assert!(!values.is_empty() && values.iter().all(|v| v.is_finite()));
        }
    }
});
