#![no_main]
use ehpc::RewardFunction;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(r) = RewardFunction::parse(s) {
            let again = RewardFunction::parse(&r.to_string()).expect("display re-parses");
            assert_eq!(r.to_string(), again.to_string());
            let _ = r.eval(1.0);
        }
    }
});
