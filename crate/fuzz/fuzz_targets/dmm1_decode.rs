#![no_main]

use ddmd::io::{decode_dmm1, encode_dmm1};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(a) = decode_dmm1(data) else { return };
    let again = decode_dmm1(&encode_dmm1(a.as_ref())).expect("encoded matrix must decode");
    assert_eq!(a, again);
});
