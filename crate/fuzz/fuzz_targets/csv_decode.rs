#![no_main]

use ddmd::io::{decode_csv, encode_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(a) = decode_csv(text) else { return };
    let out = encode_csv(a.as_ref()).expect("decoded CSV is real");
    assert_eq!(decode_csv(&out).expect("re-encoded CSV must parse"), a);
});
