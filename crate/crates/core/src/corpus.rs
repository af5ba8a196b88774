//! Text normalization, tokenization, vocabulary construction, and loading of
//! question pools and labeled question pairs.
//!
//! Pools and pair sets are plain UTF-8 tab-separated files (see
//! [`parse_pool`] and [`parse_pairs`] for the exact line formats). All types
//! here are immutable after construction and safe to share across threads.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fsio;

/// A single normalized text unit. Never empty, never contains whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    /// Builds a token from raw text, returning `None` when the invariant
    /// (non-empty, no whitespace) would be violated.
    pub fn new(surface: impl Into<String>) -> Option<Token> {
        let surface = surface.into();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            None
        } else {
            Some(Token(surface))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// How raw question text becomes tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenizerMode {
    /// Lowercase, split on whitespace, strip leading/trailing punctuation per
    /// token. Suitable for space-delimited languages.
    WhitespaceNormalize,
    /// Split on whitespace only; tokens pass through verbatim. Use for text
    /// that was segmented upstream (e.g. Chinese after word segmentation).
    PreSegmented,
}

impl TokenizerMode {
    pub fn name(self) -> &'static str {
        match self {
            TokenizerMode::WhitespaceNormalize => "whitespace-normalize",
            TokenizerMode::PreSegmented => "pre-segmented",
        }
    }

    pub fn from_name(name: &str) -> Option<TokenizerMode> {
        match name {
            "whitespace-normalize" => Some(TokenizerMode::WhitespaceNormalize),
            "pre-segmented" => Some(TokenizerMode::PreSegmented),
            _ => None,
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            TokenizerMode::WhitespaceNormalize => 0,
            TokenizerMode::PreSegmented => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<TokenizerMode> {
        match tag {
            0 => Some(TokenizerMode::WhitespaceNormalize),
            1 => Some(TokenizerMode::PreSegmented),
            _ => None,
        }
    }
}

impl std::str::FromStr for TokenizerMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<TokenizerMode, String> {
        TokenizerMode::from_name(s).ok_or_else(|| {
            format!(
                "unknown tokenizer mode {:?} (expected `whitespace-normalize` or `pre-segmented`)",
                s
            )
        })
    }
}

/// Tokenizes raw text. Deterministic; empty input yields an empty sequence.
pub fn tokenize(text: &str, mode: TokenizerMode) -> Vec<Token> {
    match mode {
        TokenizerMode::WhitespaceNormalize => text
            .to_lowercase()
            .split_whitespace()
            .filter_map(|raw| Token::new(raw.trim_matches(|c: char| !c.is_alphanumeric())))
            .collect(),
        TokenizerMode::PreSegmented => text.split_whitespace().filter_map(Token::new).collect(),
    }
}

/// A dense token-id space over a corpus, with corpus and document frequencies.
///
/// Ids are assigned in first-occurrence order over the corpus, restricted to
/// tokens whose corpus frequency reaches `min_count`.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    ids: HashMap<String, u32>,
    tokens: Vec<Token>,
    corpus_freq: Vec<u64>,
    doc_freq: Vec<u32>,
    min_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from token sequences (one per document).
    pub fn from_documents<'a, I>(documents: I, min_count: u64) -> Vocabulary
    where
        I: IntoIterator<Item = &'a [Token]>,
    {
        assert!(min_count >= 1, "min_count must be >= 1");
        // Intern tokens in first-occurrence order, counting as we go.
        let mut interned: HashMap<String, usize> = HashMap::new();
        let mut order: Vec<Token> = Vec::new();
        let mut cf: Vec<u64> = Vec::new();
        let mut df: Vec<u32> = Vec::new();
        let mut last_doc: Vec<usize> = Vec::new();
        for (doc_idx, doc) in documents.into_iter().enumerate() {
            for tok in doc {
                let idx = match interned.get(tok.as_str()) {
                    Some(&i) => i,
                    None => {
                        let i = order.len();
                        interned.insert(tok.as_str().to_owned(), i);
                        order.push(tok.clone());
                        cf.push(0);
                        df.push(0);
                        last_doc.push(usize::MAX);
                        i
                    }
                };
                cf[idx] += 1;
                if last_doc[idx] != doc_idx {
                    last_doc[idx] = doc_idx;
                    df[idx] += 1;
                }
            }
        }

        let mut ids = HashMap::new();
        let mut tokens = Vec::new();
        let mut kept_cf = Vec::new();
        let mut kept_df = Vec::new();
        for (i, tok) in order.into_iter().enumerate() {
            if cf[i] >= min_count {
                ids.insert(tok.as_str().to_owned(), tokens.len() as u32);
                tokens.push(tok);
                kept_cf.push(cf[i]);
                kept_df.push(df[i]);
            }
        }
        Vocabulary {
            ids,
            tokens,
            corpus_freq: kept_cf,
            doc_freq: kept_df,
            min_count,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Dense id of `token`, or `None` for out-of-vocabulary tokens.
    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &Token {
        &self.tokens[id as usize]
    }

    pub fn corpus_frequency(&self, id: u32) -> u64 {
        self.corpus_freq[id as usize]
    }

    /// Number of distinct documents containing the token.
    pub fn document_frequency(&self, id: u32) -> u32 {
        self.doc_freq[id as usize]
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter()
    }

    /// Content hash covering tokens, ids, frequencies, and `min_count`.
    /// Artifacts derived from a vocabulary carry this to detect mixups.
    pub fn fingerprint(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(self.min_count.to_le_bytes());
        h.update((self.tokens.len() as u64).to_le_bytes());
        for (i, tok) in self.tokens.iter().enumerate() {
            h.update((tok.as_str().len() as u64).to_le_bytes());
            h.update(tok.as_str().as_bytes());
            h.update(self.corpus_freq[i].to_le_bytes());
            h.update(u64::from(self.doc_freq[i]).to_le_bytes());
        }
        h.finalize().into()
    }

    /// Reassembles a vocabulary from its serialized parts. Rejects duplicate
    /// tokens and df > cf violations; used by the index decoder.
    pub(crate) fn from_parts(
        entries: Vec<(Token, u64, u32)>,
        min_count: u64,
    ) -> Result<Vocabulary> {
        if min_count < 1 {
            return Err(Error::Format("vocabulary min_count must be >= 1".into()));
        }
        let mut ids = HashMap::new();
        let mut tokens = Vec::with_capacity(entries.len());
        let mut corpus_freq = Vec::with_capacity(entries.len());
        let mut doc_freq = Vec::with_capacity(entries.len());
        for (tok, cf, df) in entries {
            if cf < min_count {
                return Err(Error::Format(format!(
                    "vocabulary token {:?} has frequency {} below min_count {}",
                    tok.as_str(),
                    cf,
                    min_count
                )));
            }
            if u64::from(df) > cf {
                return Err(Error::Format(format!(
                    "vocabulary token {:?} has document frequency {} above corpus frequency {}",
                    tok.as_str(),
                    df,
                    cf
                )));
            }
            if ids.insert(tok.as_str().to_owned(), tokens.len() as u32).is_some() {
                return Err(Error::Format(format!(
                    "duplicate vocabulary token {:?}",
                    tok.as_str()
                )));
            }
            tokens.push(tok);
            corpus_freq.push(cf);
            doc_freq.push(df);
        }
        Ok(Vocabulary {
            ids,
            tokens,
            corpus_freq,
            doc_freq,
            min_count,
        })
    }
}

/// Builds a vocabulary over the token sequences of `questions`, keeping
/// exactly the tokens with corpus frequency >= `min_count`.
pub fn build_vocabulary(questions: &[Question], min_count: u64) -> Vocabulary {
    Vocabulary::from_documents(questions.iter().map(|q| q.tokens()), min_count)
}

/// A question with its id, raw text, and derived tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    id: String,
    text: String,
    tokens: Vec<Token>,
    category: Option<String>,
}

impl Question {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        category: Option<String>,
        mode: TokenizerMode,
    ) -> Question {
        let text = text.into();
        let tokens = tokenize(&text, mode);
        Question {
            id: id.into(),
            text,
            tokens,
            // An empty category means "no category", matching the file format.
            category: category.filter(|c| !c.is_empty()),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn category(&self) -> Option<&str> {
        self.category.as_deref()
    }
}

/// The fixed, ordered set of standard questions user queries are matched
/// against. Insertion order is stable and defines retrieval tie-breaking.
#[derive(Debug, Clone)]
pub struct QuestionPool {
    questions: Vec<Question>,
    by_id: HashMap<String, usize>,
    mode: TokenizerMode,
}

impl QuestionPool {
    pub fn new(questions: Vec<Question>, mode: TokenizerMode) -> Result<QuestionPool> {
        let mut by_id = HashMap::with_capacity(questions.len());
        for (i, q) in questions.iter().enumerate() {
            if by_id.insert(q.id().to_owned(), i).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate question id {:?}",
                    q.id()
                )));
            }
        }
        Ok(QuestionPool {
            questions,
            by_id,
            mode,
        })
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn mode(&self) -> TokenizerMode {
        self.mode
    }

    pub fn get(&self, index: usize) -> &Question {
        &self.questions[index]
    }

    pub fn by_id(&self, id: &str) -> Option<&Question> {
        self.by_id.get(id).map(|&i| &self.questions[i])
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Question> {
        self.questions.iter()
    }
}

/// A labeled (user question, standard question) pair: label 1 when the
/// standard question can answer the user question, 0 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPair {
    pub pair_id: String,
    pub user_question: Question,
    pub standard_question: Question,
    pub label: bool,
}

fn split_line(line: &str) -> Vec<&str> {
    line.split('\t').collect()
}

/// Parses a pool file: one `id<TAB>category<TAB>text` line per question.
/// Lines starting with `#` and blank lines are ignored. An empty category
/// field means "no category".
pub fn parse_pool(input: &str, mode: TokenizerMode) -> Result<QuestionPool> {
    let mut questions = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (lineno, line) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 3 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let id = fields[0];
        if id.is_empty() {
            return Err(Error::parse(lineno, "empty question id"));
        }
        if seen.insert(id.to_owned(), lineno).is_some() {
            return Err(Error::parse(lineno, format!("duplicate question id {:?}", id)));
        }
        let category = if fields[1].is_empty() {
            None
        } else {
            Some(fields[1].to_owned())
        };
        questions.push(Question::new(id, fields[2], category, mode));
    }
    QuestionPool::new(questions, mode)
}

pub fn load_pool(path: impl AsRef<Path>, mode: TokenizerMode) -> Result<QuestionPool> {
    let path = path.as_ref();
    parse_pool(&fsio::read_to_string(path)?, mode).map_err(|e| e.in_file(path))
}

fn check_field(value: &str, what: &str) -> Result<()> {
    if value.contains('\t') || value.contains('\n') || value.contains('\r') {
        return Err(Error::InvalidInput(format!(
            "{} contains a tab or newline and cannot be written to a tab-separated file: {:?}",
            what, value
        )));
    }
    Ok(())
}

/// Serializes a pool back to the tab-separated format accepted by
/// [`parse_pool`]. Load after save yields an equal pool.
pub fn pool_to_string(pool: &QuestionPool) -> Result<String> {
    let mut out = String::new();
    for q in pool.iter() {
        check_field(q.id(), "question id")?;
        check_field(q.category().unwrap_or(""), "question category")?;
        check_field(q.text(), "question text")?;
        out.push_str(q.id());
        out.push('\t');
        out.push_str(q.category().unwrap_or(""));
        out.push('\t');
        out.push_str(q.text());
        out.push('\n');
    }
    Ok(out)
}

pub fn save_pool(pool: &QuestionPool, path: impl AsRef<Path>) -> Result<()> {
    fsio::write_atomic(path.as_ref(), pool_to_string(pool)?.as_bytes())
}

/// Parses a pair file: `pair_id<TAB>user_text<TAB>standard_question_id<TAB>label`
/// per line, label in {0,1}. Standard question ids are resolved against
/// `pool`; the user question is tokenized with the pool's tokenizer mode.
pub fn parse_pairs(input: &str, pool: &QuestionPool) -> Result<Vec<LabeledPair>> {
    let mut pairs = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let pair_id = fields[0];
        if pair_id.is_empty() {
            return Err(Error::parse(lineno, "empty pair id"));
        }
        let standard = pool.by_id(fields[2]).ok_or_else(|| {
            Error::parse(
                lineno,
                format!("standard question id {:?} not found in pool", fields[2]),
            )
        })?;
        let label = match fields[3] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::parse(
                    lineno,
                    format!("label must be 0 or 1, found {:?}", other),
                ))
            }
        };
        pairs.push(LabeledPair {
            pair_id: pair_id.to_owned(),
            user_question: Question::new(pair_id, fields[1], None, pool.mode()),
            standard_question: standard.clone(),
            label,
        });
    }
    Ok(pairs)
}

pub fn load_pairs(path: impl AsRef<Path>, pool: &QuestionPool) -> Result<Vec<LabeledPair>> {
    let path = path.as_ref();
    parse_pairs(&fsio::read_to_string(path)?, pool).map_err(|e| e.in_file(path))
}

pub fn pairs_to_string(pairs: &[LabeledPair]) -> Result<String> {
    let mut out = String::new();
    for p in pairs {
        check_field(&p.pair_id, "pair id")?;
        check_field(p.user_question.text(), "user question text")?;
        check_field(p.standard_question.id(), "standard question id")?;
        out.push_str(&p.pair_id);
        out.push('\t');
        out.push_str(p.user_question.text());
        out.push('\t');
        out.push_str(p.standard_question.id());
        out.push('\t');
        out.push_str(if p.label { "1" } else { "0" });
        out.push('\n');
    }
    Ok(out)
}

pub fn save_pairs(pairs: &[LabeledPair], path: impl AsRef<Path>) -> Result<()> {
    fsio::write_atomic(path.as_ref(), pairs_to_string(pairs)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(words: &[&str]) -> Vec<Token> {
        words.iter().map(|w| Token::new(*w).unwrap()).collect()
    }

    #[test]
    fn tokenize_normalizes_and_strips_punctuation() {
        let got = tokenize("Do I need surgery?", TokenizerMode::WhitespaceNormalize);
        assert_eq!(got, toks(&["do", "i", "need", "surgery"]));
    }

    #[test]
    fn tokenize_empty_input() {
        assert!(tokenize("", TokenizerMode::WhitespaceNormalize).is_empty());
        assert!(tokenize("", TokenizerMode::PreSegmented).is_empty());
        assert!(tokenize("?! ... --", TokenizerMode::WhitespaceNormalize).is_empty());
    }

    #[test]
    fn tokenize_presegmented_passes_through() {
        let got = tokenize("骨折 后 需要 手术 吗", TokenizerMode::PreSegmented);
        assert_eq!(got, toks(&["骨折", "后", "需要", "手术", "吗"]));
        // Verbatim: no lowercasing, no punct strip.
        let got = tokenize("Need Surgery?", TokenizerMode::PreSegmented);
        assert_eq!(got, toks(&["Need", "Surgery?"]));
    }

    #[test]
    fn tokenize_keeps_internal_punctuation() {
        let got = tokenize("it's co-occurring!", TokenizerMode::WhitespaceNormalize);
        assert_eq!(got, toks(&["it's", "co-occurring"]));
    }

    fn pool_from(texts: &[&str]) -> QuestionPool {
        let qs = texts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                Question::new(format!("q{}", i), *t, None, TokenizerMode::WhitespaceNormalize)
            })
            .collect();
        QuestionPool::new(qs, TokenizerMode::WhitespaceNormalize).unwrap()
    }

    #[test]
    fn vocabulary_respects_min_count() {
        // "fever" appears 5 times across documents.
        let pool = pool_from(&[
            "fever and cough",
            "fever again",
            "high fever",
            "fever fever",
        ]);
        let qs: Vec<Question> = pool.iter().cloned().collect();
        let vocab = build_vocabulary(&qs, 5);
        assert_eq!(vocab.len(), 1);
        let id = vocab.id("fever").unwrap();
        assert_eq!(vocab.corpus_frequency(id), 5);
        assert_eq!(vocab.document_frequency(id), 4);
        assert!(vocab.id("cough").is_none());
    }

    #[test]
    fn vocabulary_min_count_one_keeps_all() {
        let pool = pool_from(&["a b c", "b c d"]);
        let qs: Vec<Question> = pool.iter().cloned().collect();
        let vocab = build_vocabulary(&qs, 1);
        assert_eq!(vocab.len(), 4);
        // First-occurrence order.
        assert_eq!(vocab.id("a"), Some(0));
        assert_eq!(vocab.id("b"), Some(1));
        assert_eq!(vocab.id("c"), Some(2));
        assert_eq!(vocab.id("d"), Some(3));
    }

    #[test]
    fn vocabulary_document_frequency_hand_count() {
        // 3 docs; "x" occurs in 2 docs with total count 4; min_count=3.
        let pool = pool_from(&["x x y", "x x z", "y z"]);
        let qs: Vec<Question> = pool.iter().cloned().collect();
        let vocab = build_vocabulary(&qs, 3);
        let id = vocab.id("x").expect("x retained");
        assert_eq!(vocab.corpus_frequency(id), 4);
        assert_eq!(vocab.document_frequency(id), 2);
        assert!(vocab.id("y").is_none());
    }

    #[test]
    fn vocabulary_fingerprint_tracks_content() {
        let pool = pool_from(&["a b", "b c"]);
        let qs: Vec<Question> = pool.iter().cloned().collect();
        let v1 = build_vocabulary(&qs, 1);
        let v2 = build_vocabulary(&qs, 1);
        assert_eq!(v1.fingerprint(), v2.fingerprint());
        let v3 = build_vocabulary(&qs, 2);
        assert_ne!(v1.fingerprint(), v3.fingerprint());
    }

    #[test]
    fn parse_pool_basic_and_errors() {
        let pool = parse_pool(
            "# comment\nq1\tcold\tDo I have a cold?\nq2\t\tIs rest enough?\n",
            TokenizerMode::WhitespaceNormalize,
        )
        .unwrap();
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.get(0).category(), Some("cold"));
        assert_eq!(pool.get(1).category(), None);
        assert_eq!(pool.by_id("q2").unwrap().tokens(), toks(&["is", "rest", "enough"]));

        let err = parse_pool("q1\ta\tx\nq1\tb\ty\n", TokenizerMode::WhitespaceNormalize)
            .unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("duplicate"), "{err}");

        let err = parse_pool("q1\tonly-two-fields\n", TokenizerMode::WhitespaceNormalize)
            .unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn parse_pool_empty_file() {
        let pool = parse_pool("", TokenizerMode::WhitespaceNormalize).unwrap();
        assert!(pool.is_empty());
    }

    #[test]
    fn parse_pairs_resolves_and_validates() {
        let pool = parse_pool(
            "s1\t\tHow is breast milk jaundice diagnosed?\ns2\t\tWhat is neonatal jaundice?\n",
            TokenizerMode::WhitespaceNormalize,
        )
        .unwrap();
        let pairs = parse_pairs(
            "1\tWhat is the status of breast milk jaundice\ts1\t1\n\
             2\tIs ok breast milk jaundice vaccination?\ts1\t0\n",
            &pool,
        )
        .unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(pairs[0].label);
        assert!(!pairs[1].label);
        assert_eq!(pairs[0].standard_question.id(), "s1");

        let err = parse_pairs("1\ttext\tmissing\t1\n", &pool).unwrap_err();
        assert!(err.to_string().contains("not found"), "{err}");
        let err = parse_pairs("1\ttext\ts1\t2\n", &pool).unwrap_err();
        assert!(err.to_string().contains("label"), "{err}");
    }

    #[test]
    fn pool_and_pairs_round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let pool = parse_pool(
            "q1\tcat\tDo I need surgery?\nq2\t\t骨折 后 需要 手术 吗\n",
            TokenizerMode::WhitespaceNormalize,
        )
        .unwrap();
        let pool_path = dir.path().join("pool.tsv");
        save_pool(&pool, &pool_path).unwrap();
        let back = load_pool(&pool_path, TokenizerMode::WhitespaceNormalize).unwrap();
        assert_eq!(back.len(), pool.len());
        for (a, b) in pool.iter().zip(back.iter()) {
            assert_eq!(a, b);
        }

        let pairs = parse_pairs("p1\tneed surgery?\tq1\t1\n", &pool).unwrap();
        let pairs_path = dir.path().join("pairs.tsv");
        save_pairs(&pairs, &pairs_path).unwrap();
        let back = load_pairs(&pairs_path, &pool).unwrap();
        assert_eq!(back, pairs);
    }

    #[test]
    fn crlf_line_endings_are_tolerated() {
        let pool = parse_pool(
            "q1\tcat\tDo I need surgery?\r\nq2\t\tfever\r\n",
            TokenizerMode::WhitespaceNormalize,
        )
        .unwrap();
        assert_eq!(pool.len(), 2);
        assert_eq!(pool.by_id("q1").unwrap().text(), "Do I need surgery?");
        let pairs = parse_pairs("p1\tneed surgery\tq1\t1\r\n", &pool).unwrap();
        assert_eq!(pairs.len(), 1);
    }

    proptest! {
        #[test]
        fn pool_round_trips_through_text(
            rows in proptest::collection::vec(("[a-z]{1,6}", "[a-z0-9 ?]{0,30}"), 0..8),
        ) {
            let mut questions = Vec::new();
            let mut used = std::collections::HashSet::new();
            for (i, (cat, text)) in rows.iter().enumerate() {
                let id = format!("q{}", i);
                if used.insert(id.clone()) {
                    let category = if cat.len() % 2 == 0 { Some(cat.clone()) } else { None };
                    questions.push(Question::new(
                        id,
                        text.clone(),
                        category,
                        TokenizerMode::WhitespaceNormalize,
                    ));
                }
            }
            let pool = QuestionPool::new(questions, TokenizerMode::WhitespaceNormalize).unwrap();
            let text = pool_to_string(&pool).unwrap();
            let back = parse_pool(&text, TokenizerMode::WhitespaceNormalize).unwrap();
            prop_assert_eq!(back.len(), pool.len());
            for (a, b) in pool.iter().zip(back.iter()) {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn tokenize_presegmented_idempotent(text in "\\PC{0,60}") {
            let once = tokenize(&text, TokenizerMode::PreSegmented);
            let joined = once.iter().map(Token::as_str).collect::<Vec<_>>().join(" ");
            let twice = tokenize(&joined, TokenizerMode::PreSegmented);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn tokenize_invariants_hold(text in "\\PC{0,60}", presegmented in proptest::bool::ANY) {
            let mode = if presegmented {
                TokenizerMode::PreSegmented
            } else {
                TokenizerMode::WhitespaceNormalize
            };
            for tok in tokenize(&text, mode) {
                prop_assert!(!tok.as_str().is_empty());
                prop_assert!(!tok.as_str().chars().any(char::is_whitespace));
            }
        }

        #[test]
        fn vocabulary_shrinks_as_min_count_grows(
            docs in proptest::collection::vec("[a-d ]{0,20}", 1..8),
            k in 1u64..4,
        ) {
            let questions: Vec<Question> = docs
                .iter()
                .enumerate()
                .map(|(i, t)| Question::new(format!("q{}", i), t.clone(), None, TokenizerMode::WhitespaceNormalize))
                .collect();
            let lo = build_vocabulary(&questions, k);
            let hi = build_vocabulary(&questions, k + 1);
            for tok in hi.tokens() {
                prop_assert!(lo.id(tok.as_str()).is_some());
            }
        }
    }
}
