#![no_main]

use libfuzzer_sys::fuzz_target;
use qmatch::retrieval::Index;

fuzz_target!(|data: &[u8]| {
    // Decoding untrusted bytes must never panic; on success the canonical
    // re-encoding reproduces the input.
    if let Ok(index) = Index::decode(data) {
        assert_eq!(index.encode(), data);
    }
});
