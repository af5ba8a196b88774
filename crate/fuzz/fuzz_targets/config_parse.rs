#![no_main]

use libfuzzer_sys::fuzz_target;
use qmatch_cli::config::parse_config;

fuzz_target!(|text: &str| {
    let _ = parse_config(text);
});
