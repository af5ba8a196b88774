use crate::corpus::Token;
use crate::embeddings::{EmbeddingTable, PAD_ROW};

/// A question's tokens as a fixed-length row-id sequence.
///
/// Positions `0..length` hold embedding rows interned through the table;
/// positions past `length` hold the pad sentinel and are never touched by the
/// encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedSequence {
    ids: Vec<u32>,
    length: usize,
}

impl PaddedSequence {
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn max_len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }
}

/// Pads or truncates `tokens` to exactly `max_len` positions: truncation
/// keeps the first `max_len` tokens, padding is appended at the tail.
pub fn pad_or_truncate(
    tokens: &[Token],
    max_len: usize,
    table: &EmbeddingTable,
) -> PaddedSequence {
    assert!(max_len >= 1, "max_len must be >= 1");
    let length = tokens.len().min(max_len);
    let mut ids = Vec::with_capacity(max_len);
    for tok in &tokens[..length] {
        ids.push(table.intern(tok.as_str()));
    }
    ids.resize(max_len, PAD_ROW);
    PaddedSequence { ids, length }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable {
        EmbeddingTable::from_entries(
            2,
            vec![
                ("a".into(), vec![1.0, 0.0]),
                ("b".into(), vec![0.0, 1.0]),
            ],
            0,
        )
        .unwrap()
    }

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token::new(*w).unwrap()).collect()
    }

    #[test]
    fn pads_at_the_tail() {
        let t = table();
        let seq = pad_or_truncate(&toks(&["a", "b", "a"]), 5, &t);
        assert_eq!(seq.length(), 3);
        assert_eq!(seq.max_len(), 5);
        assert_eq!(&seq.ids()[3..], &[PAD_ROW, PAD_ROW]);
        assert_eq!(seq.ids()[0], seq.ids()[2]);
    }

    #[test]
    fn truncates_keeping_the_head() {
        let t = table();
        let long = toks(&["a", "b", "a", "b", "a", "b", "a", "b"]);
        let seq = pad_or_truncate(&long, 5, &t);
        assert_eq!(seq.length(), 5);
        assert_eq!(seq.ids().len(), 5);
        let head = pad_or_truncate(&long[..5], 5, &t);
        assert_eq!(seq, head);
    }

    #[test]
    fn exact_length_is_unchanged() {
        let t = table();
        let seq = pad_or_truncate(&toks(&["a", "b", "a", "b", "a"]), 5, &t);
        assert_eq!(seq.length(), 5);
        assert!(!seq.ids().contains(&PAD_ROW));
    }

    #[test]
    fn empty_tokens_give_zero_length() {
        let t = table();
        let seq = pad_or_truncate(&[], 4, &t);
        assert!(seq.is_empty());
        assert_eq!(seq.ids(), &[PAD_ROW; 4]);
    }

    #[test]
    fn oov_tokens_intern_consistently() {
        let t = table();
        let s1 = pad_or_truncate(&toks(&["mystery", "a"]), 3, &t);
        let s2 = pad_or_truncate(&toks(&["mystery"]), 3, &t);
        assert_eq!(s1.ids()[0], s2.ids()[0]);
    }
}
