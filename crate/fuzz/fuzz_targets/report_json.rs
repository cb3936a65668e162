#![no_main]

use ddmd::report::SpectrumReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(rep) = SpectrumReport::from_json(text) else { return };
    let out = rep.to_json().expect("parsed report serializes");
    assert_eq!(SpectrumReport::from_json(&out).expect("round trip"), rep);
    let _ = rep.plot_csv();
});
