#![no_main]

use libfuzzer_sys::fuzz_target;
use qmatch_cli::commands::parse_query_batch;

fuzz_target!(|text: &str| {
    if let Ok(queries) = parse_query_batch(text) {
        for (id, _) in &queries {
            assert!(!id.is_empty());
        }
    }
});
