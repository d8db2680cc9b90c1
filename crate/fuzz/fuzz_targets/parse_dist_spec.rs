#![no_main]
use ehpc::EnergyDistribution;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(d) = EnergyDistribution::parse(s) {
            let again = EnergyDistribution::parse(&d.to_string()).expect("display re-parses");
            assert_eq!(d.to_string(), again.to_string());
            let _ = d.cdf_strict(d.mean());
        }
    }
});
