#![no_main]
use ehpc::sim::PolicySpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = PolicySpec::parse(s) {
            assert_eq!(PolicySpec::parse(&p.to_string()), Ok(p));
        }
    }
});
