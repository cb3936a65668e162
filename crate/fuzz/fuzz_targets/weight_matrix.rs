#![no_main]

use ddmd::io::{decode_dmm1, weights_from_matrix};
use ddmd::linalg::{creal, from_columns};
use ddmd::weighted::{InnerProduct, Orientation};
use libfuzzer_sys::fuzz_target;

// A weight file goes through the matrix decoder, then the positivity check,
// then becomes a diagonal inner product.
fuzz_target!(|data: &[u8]| {
    let Ok(a) = decode_dmm1(data) else { return };
    let Ok(w) = weights_from_matrix(a.as_ref()) else { return };
    for orient in [Orientation::M, Orientation::MInverse] {
        let ip = InnerProduct::diagonal(&w, orient).expect("checked weights are valid");
        let ones = from_columns(w.len(), &[vec![creal(1.0); w.len()]]);
        let back = ip.lift(ip.to_inner(ones.as_ref()).unwrap().as_ref()).unwrap();
        assert_eq!(back.nrows(), w.len());
    }
});
