#![no_main]

use libfuzzer_sys::fuzz_target;
use qmatch::corpus::{parse_pool, TokenizerMode};

fuzz_target!(|text: &str| {
    for mode in [TokenizerMode::WhitespaceNormalize, TokenizerMode::PreSegmented] {
        if let Ok(pool) = parse_pool(text, mode) {
            // Accepted pools satisfy their invariants.
            for q in pool.iter() {
                assert!(!q.id().is_empty());
                assert_eq!(pool.by_id(q.id()).unwrap().text(), q.text());
            }
        }
    }
});
