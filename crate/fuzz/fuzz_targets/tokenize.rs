#![no_main]

use libfuzzer_sys::fuzz_target;
use qmatch::corpus::{tokenize, Token, TokenizerMode};

fuzz_target!(|text: &str| {
    for mode in [TokenizerMode::WhitespaceNormalize, TokenizerMode::PreSegmented] {
        let tokens = tokenize(text, mode);
        for tok in &tokens {
            assert!(!tok.as_str().is_empty());
            assert!(!tok.as_str().chars().any(char::is_whitespace));
        }
        if mode == TokenizerMode::PreSegmented {
            // Idempotent on its own output.
            let joined = tokens
                .iter()
                .map(Token::as_str)
                .collect::<Vec<_>>()
                .join(" ");
            assert_eq!(tokens, tokenize(&joined, mode));
        }
    }
});
