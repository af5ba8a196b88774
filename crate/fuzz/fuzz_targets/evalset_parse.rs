#![no_main]

use libfuzzer_sys::fuzz_target;
use qmatch::corpus::{parse_pool, TokenizerMode};
use qmatch::eval::parse_evalset;

fuzz_target!(|text: &str| {
    let pool = parse_pool(
        "s1\tcat\tDo I need surgery?\ns2\t\tfever and cough\n",
        TokenizerMode::WhitespaceNormalize,
    )
    .unwrap();
    if let Ok(set) = parse_evalset(text, &pool) {
        for q in &set.queries {
            assert!(set.gold.gold_for(&q.id).is_some());
        }
    }
});
