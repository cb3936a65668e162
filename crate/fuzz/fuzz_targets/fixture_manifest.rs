#![no_main]

use ddmd::verify::FixtureManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = FixtureManifest::from_json(text) {
        assert_eq!(FixtureManifest::from_json(&m.to_json()).expect("round trip"), m);
    }
});
