//! Text to TF-IDF sparse vectors.
//!
//! Three feature families are supported: character n-grams over the whole
//! normalized line (spaces included, so grams cross word boundaries), word
//! n-grams, and word skip-bigrams. Weights are raw term frequency times the
//! smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`, and every
//! transformed row is L2-normalized.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::scalar::{lit, Scalar};
use crate::sparse::{SparseMatrix, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    CharNgram(usize),
    WordNgram(usize),
    /// Word pairs with up to `k` intervening words.
    WordSkipBigram(usize),
}

impl FeatureKind {
    pub fn is_word_based(self) -> bool {
        !matches!(self, FeatureKind::CharNgram(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub lowercase: bool,
}

impl FeatureSpec {
    pub fn new(kind: FeatureKind) -> Self {
        Self {
            kind,
            lowercase: true,
        }
    }

    pub fn char_ngram(n: usize) -> Self {
        Self::new(FeatureKind::CharNgram(n))
    }

    pub fn word_ngram(n: usize) -> Self {
        Self::new(FeatureKind::WordNgram(n))
    }

    pub fn skip_bigram(k: usize) -> Self {
        Self::new(FeatureKind::WordSkipBigram(k))
    }

    pub fn with_lowercase(mut self, lowercase: bool) -> Self {
        self.lowercase = lowercase;
        self
    }

    /// Structural validity: n ≥ 1 for n-grams, any k for skip-bigrams.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            FeatureKind::CharNgram(0) | FeatureKind::WordNgram(0) => {
                Err(Error::FeatureSpec(self.to_string()))
            }
            _ => Ok(()),
        }
    }

    /// Whether the spec lies in the studied inventory: char 1-8, word 1-3,
    /// skip 1-3.
    pub fn in_standard_range(&self) -> bool {
        match self.kind {
            FeatureKind::CharNgram(n) => (1..=8).contains(&n),
            FeatureKind::WordNgram(n) => (1..=3).contains(&n),
            FeatureKind::WordSkipBigram(k) => (1..=3).contains(&k),
        }
    }
}

/// `char:N`, `word:N` or `skip:K`; lowercase state is not part of the text form.
impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FeatureKind::CharNgram(n) => write!(f, "char:{n}"),
            FeatureKind::WordNgram(n) => write!(f, "word:{n}"),
            FeatureKind::WordSkipBigram(k) => write!(f, "skip:{k}"),
        }
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::FeatureSpec(s.to_string());
        let (family, number) = s.trim().split_once(':').ok_or_else(bad)?;
        let number: usize = number.parse().map_err(|_| bad())?;
        let kind = match family {
            "char" => FeatureKind::CharNgram(number),
            "word" => FeatureKind::WordNgram(number),
            "skip" => FeatureKind::WordSkipBigram(number),
            _ => return Err(bad()),
        };
        let spec = FeatureSpec::new(kind);
        spec.validate().map_err(|_| bad())?;
        Ok(spec)
    }
}

/// Parses a comma-separated spec list such as `char:2,char:3,word:1`.
pub fn parse_spec_list(list: &str) -> Result<Vec<FeatureSpec>> {
    list.split(',')
        .filter(|item| !item.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// NFC, optional full lowercasing, whitespace runs collapsed to one space,
/// ends trimmed.
pub fn normalize_text(text: &str, lowercase: bool) -> String {
    let composed: String = text.nfc().collect();
    let cased = if lowercase {
        composed.to_lowercase()
    } else {
        composed
    };
    cased.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Splits normalized text on spaces. One-character tokens are kept.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split(' ').filter(|t| !t.is_empty()).collect()
}

/// All contiguous code-point windows of length `n`, with multiplicity.
pub fn extract_char_ngrams(text: &str, n: usize) -> Vec<String> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let chars: Vec<char> = text.chars().collect();
    if chars.len() < n {
        return Vec::new();
    }
    chars.windows(n).map(|w| w.iter().collect()).collect()
}

pub fn extract_word_ngrams<S: AsRef<str>>(tokens: &[S], n: usize) -> Vec<String> {
    assert!(n >= 1, "n-gram order must be at least 1");
    if tokens.len() < n {
        return Vec::new();
    }
    tokens
        .windows(n)
        .map(|w| {
            w.iter()
                .map(AsRef::as_ref)
                .collect::<Vec<&str>>()
                .join(" ")
        })
        .collect()
}

/// Ordered pairs `(tokens[i], tokens[j])` with `1 <= j - i <= k + 1`, emitted
/// by left position then distance.
pub fn extract_skip_bigrams<S: AsRef<str>>(tokens: &[S], k: usize) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        let last = (i + k + 1).min(tokens.len() - 1);
        for j in i + 1..=last {
            out.push(format!("{} {}", tokens[i].as_ref(), tokens[j].as_ref()));
        }
    }
    out
}

fn extract(text: &str, spec: &FeatureSpec) -> Vec<String> {
    let normalized = normalize_text(text, spec.lowercase);
    match spec.kind {
        FeatureKind::CharNgram(n) => extract_char_ngrams(&normalized, n),
        FeatureKind::WordNgram(n) => extract_word_ngrams(&tokenize(&normalized), n),
        FeatureKind::WordSkipBigram(k) => extract_skip_bigrams(&tokenize(&normalized), k),
    }
}

/// Raw term frequencies of `text` under `spec`.
pub fn count_features(text: &str, spec: &FeatureSpec) -> HashMap<String, usize> {
    let mut counts = HashMap::new();
    for feature in extract(text, spec) {
        *counts.entry(feature).or_insert(0) += 1;
    }
    counts
}

/// Feature strings in column order with their document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    features: Vec<String>,
    document_frequency: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(feature, df)` pairs; columns follow
    /// ascending byte order of the feature strings.
    pub fn from_entries(mut entries: Vec<(String, u64)>) -> Result<Self> {
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::config("duplicate vocabulary entry"));
        }
        if entries.iter().any(|(_, df)| *df == 0) {
            return Err(Error::config("document frequency must be at least 1"));
        }
        let (features, document_frequency): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        Ok(Self {
            features,
            document_frequency,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn index_of(&self, feature: &str) -> Option<usize> {
        self.index.get(feature).copied()
    }

    pub fn feature(&self, column: usize) -> &str {
        &self.features[column]
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn document_frequency(&self) -> &[u64] {
        &self.document_frequency
    }
}

/// Smoothed IDF: `ln((1 + n_docs) / (1 + df)) + 1`.
pub fn smoothed_idf<F: Scalar>(n_docs: u64, df: u64) -> F {
    let ratio = (1.0 + n_docs as f64) / (1.0 + df as f64);
    lit::<F>(ratio.ln() + 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel<F = f64> {
    spec: FeatureSpec,
    vocabulary: Vocabulary,
    idf: Vec<F>,
    n_docs: u64,
}

impl<F: Scalar> TfidfModel<F> {
    /// Rebuilds a model from stored parts, recomputing IDF from the
    /// document frequencies.
    pub fn from_parts(spec: FeatureSpec, vocabulary: Vocabulary, n_docs: u64) -> Result<Self> {
        if vocabulary.document_frequency().iter().any(|&df| df > n_docs) {
            return Err(Error::config("document frequency exceeds corpus size"));
        }
        let idf = vocabulary
            .document_frequency()
            .iter()
            .map(|&df| smoothed_idf(n_docs, df))
            .collect();
        Ok(Self {
            spec,
            vocabulary,
            idf,
            n_docs,
        })
    }

    pub fn fit(corpus: &Dataset, spec: FeatureSpec, min_df: usize) -> Result<Self> {
        fit_tfidf(corpus, spec, min_df)
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[F] {
        &self.idf
    }

    pub fn n_docs(&self) -> u64 {
        self.n_docs
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn transform(&self, text: &str) -> SparseVector<F> {
        transform(self, text)
    }
}

pub fn fit_tfidf<F: Scalar>(corpus: &Dataset, spec: FeatureSpec, min_df: usize) -> Result<TfidfModel<F>> {
    spec.validate()?;
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let per_doc: Vec<Vec<String>> = corpus
        .texts()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|text| count_features(text, &spec).into_keys().collect())
        .collect();
    let mut df: HashMap<String, u64> = HashMap::new();
    for features in per_doc {
        for feature in features {
            *df.entry(feature).or_insert(0) += 1;
        }
    }
    let entries: Vec<(String, u64)> = df
        .into_iter()
        .filter(|(_, count)| *count >= min_df as u64)
        .collect();
    if entries.is_empty() {
        return Err(Error::EmptyVocabulary { min_df });
    }
    let vocabulary = Vocabulary::from_entries(entries)?;
    TfidfModel::from_parts(spec, vocabulary, corpus.len() as u64)
}

/// TF-IDF vector of `text`; out-of-vocabulary features are dropped and the
/// result is unit length unless empty.
pub fn transform<F: Scalar>(model: &TfidfModel<F>, text: &str) -> SparseVector<F> {
    let pairs: Vec<(usize, F)> = count_features(text, &model.spec)
        .into_iter()
        .filter_map(|(feature, tf)| {
            model
                .vocabulary
                .index_of(&feature)
                .map(|col| (col, lit::<F>(tf as f64) * model.idf[col]))
        })
        .collect();
    SparseVector::from_pairs(pairs, model.dim())
        .expect("vocabulary columns are in range")
        .l2_normalized()
}

pub fn transform_corpus<F: Scalar>(model: &TfidfModel<F>, docs: &Dataset) -> SparseMatrix<F> {
    let rows: Vec<SparseVector<F>> = docs
        .instances()
        .par_iter()
        .map(|inst| transform(model, &inst.text))
        .collect();
    SparseMatrix::new(rows, model.dim()).expect("rows share the model dimension")
}
