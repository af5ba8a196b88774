#![no_main]

use libfuzzer_sys::fuzz_target;
use qmatch::embeddings::{parse_word2vec_text, word2vec_to_string};

fuzz_target!(|text: &str| {
    if let Ok(table) = parse_word2vec_text(text, 0) {
        // Accepted tables round-trip exactly.
        let rendered = word2vec_to_string(&table);
        let back = parse_word2vec_text(&rendered, 0).expect("rendered table must re-parse");
        assert_eq!(back.fingerprint(), table.fingerprint());
    }
});
