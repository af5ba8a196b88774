#![no_main]

use libfuzzer_sys::fuzz_target;
use qmatch::corpus::{parse_pairs, parse_pool, TokenizerMode};

fuzz_target!(|text: &str| {
    let pool = parse_pool(
        "s1\tcat\tDo I need surgery?\ns2\t\tfever and cough\n",
        TokenizerMode::WhitespaceNormalize,
    )
    .unwrap();
    if let Ok(pairs) = parse_pairs(text, &pool) {
        for pair in &pairs {
            assert!(pool.contains_id(pair.standard_question.id()));
        }
    }
});
