//! Dataset model and file I/O.
//!
//! Datasets are UTF-8 files with one record per line. Labeled records are
//! `text<TAB>label`, unlabeled records are bare text. Prediction files hold
//! one label per line.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// One transcript utterance with an optional gold label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub text: String,
    pub label: Option<String>,
}

impl Instance {
    pub fn labeled(text: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            label: Some(label.into()),
        }
    }

    pub fn unlabeled(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            label: None,
        }
    }
}

/// Sorted set of distinct labels. Position in the list is the label id, and
/// the byte-wise ascending order doubles as the tie-break order everywhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelIndex {
    labels: Vec<String>,
    positions: HashMap<String, usize>,
}

impl LabelIndex {
    /// Builds an index from any collection of labels; duplicates collapse.
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = labels.into_iter().map(Into::into).collect();
        if set.iter().any(|l| l.is_empty()) {
            return Err(Error::config("labels must be non-empty strings"));
        }
        let labels: Vec<String> = set.into_iter().collect();
        let positions = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        Ok(Self { labels, positions })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.positions.get(label).copied()
    }

    pub fn id_or_err(&self, label: &str) -> Result<usize> {
        self.id(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn label(&self, id: usize) -> &str {
        &self.labels[id]
    }
}

/// A partition of instances. `label_index` is present iff every instance is
/// labeled (and the dataset is non-empty).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Dataset {
    instances: Vec<Instance>,
    label_index: Option<LabelIndex>,
}

impl Dataset {
    pub fn new(instances: Vec<Instance>) -> Self {
        let label_index = if !instances.is_empty() && instances.iter().all(|i| i.label.is_some())
        {
            LabelIndex::new(instances.iter().filter_map(|i| i.label.clone())).ok()
        } else {
            None
        };
        Self {
            instances,
            label_index,
        }
    }

    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(texts.into_iter().map(Instance::unlabeled).collect())
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn label_index(&self) -> Option<&LabelIndex> {
        self.label_index.as_ref()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.instances.iter().map(|i| i.text.as_str())
    }

    /// Gold labels in instance order, or [`Error::Unlabeled`].
    pub fn labels(&self) -> Result<Vec<&str>> {
        self.instances
            .iter()
            .map(|i| i.label.as_deref().ok_or(Error::Unlabeled))
            .collect()
    }

    /// Concatenation of two partitions, used when retraining on train+dev.
    pub fn concat(&self, other: &Dataset) -> Dataset {
        let mut instances = self.instances.clone();
        instances.extend(other.instances.iter().cloned());
        Dataset::new(instances)
    }
}

fn decode_lines(bytes: &[u8]) -> Result<&str> {
    std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::InvalidUtf8 { line }
    })
}

fn records(content: &str) -> impl Iterator<Item = (usize, &str)> {
    content
        .split('\n')
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
        .filter(|(_, line)| !line.is_empty())
}

/// Parses dataset content already in memory. See [`load_tsv`].
pub fn parse_tsv(content: &str, labeled: bool) -> Result<Dataset> {
    let mut instances = Vec::new();
    for (line_no, line) in records(content) {
        let fields: Vec<&str> = line.split('\t').collect();
        let instance = match (labeled, fields.as_slice()) {
            (true, [text, label]) => {
                if label.is_empty() {
                    return Err(Error::Malformed {
                        line: line_no,
                        message: "empty label".into(),
                    });
                }
                Instance::labeled(*text, *label)
            }
            (false, [text]) => Instance::unlabeled(*text),
            (_, fields) => {
                return Err(Error::Malformed {
                    line: line_no,
                    message: format!(
                        "expected {} tab-separated field(s), found {}",
                        if labeled { 2 } else { 1 },
                        fields.len()
                    ),
                })
            }
        };
        instances.push(instance);
    }
    Ok(Dataset::new(instances))
}

/// Loads a shared-task dataset file. Empty lines are skipped and a trailing
/// newline (or CRLF line ending) is tolerated.
pub fn load_tsv(path: impl AsRef<Path>, labeled: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_tsv(decode_lines(&bytes)?, labeled)
}

/// Loads texts from a file whose records may or may not carry a label
/// column; any label is discarded.
pub fn load_texts(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let content = decode_lines(&bytes)?;
    let mut instances = Vec::new();
    for (line_no, line) in records(content) {
        let mut fields = line.split('\t');
        let text = fields.next().unwrap_or_default();
        if fields.count() > 1 {
            return Err(Error::Malformed {
                line: line_no,
                message: "expected at most 2 tab-separated fields".into(),
            });
        }
        instances.push(Instance::unlabeled(text));
    }
    Ok(Dataset::new(instances))
}

/// Writes a dataset in the format read by [`load_tsv`].
pub fn save_tsv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for instance in dataset.instances() {
        out.push_str(&instance.text);
        if let Some(label) = &instance.label {
            out.push('\t');
            out.push_str(label);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes one label per line, newline-terminated.
pub fn save_predictions<S: AsRef<str>>(labels: &[S], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 4);
    for label in labels {
        out.push_str(label.as_ref());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads a prediction file written by [`save_predictions`].
pub fn load_predictions(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let content = decode_lines(&bytes)?;
    Ok(records(content).map(|(_, l)| l.to_string()).collect())
}

/// Instance counts requested per label for each partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

impl PartitionSizes {
    pub fn new(train: usize, dev: usize, test: usize) -> Self {
        Self { train, dev, test }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
    /// Marker trigrams planted for each label.
    pub markers: BTreeMap<String, Vec<String>>,
}

const SHARED_ALPHABET: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'ä', 'ö',
    'ü',
];
const MARKER_ALPHABET: &[char] = &['q', 'r', 's', 't', 'u', 'v', 'w', 'x', 'y', 'z'];
const SHARED_VOCAB_SIZE: usize = 400;
const MARKERS_PER_LABEL: usize = 4;
const MIN_WORDS: usize = 8;
const MAX_WORDS: usize = 20;

/// Generates train/dev/test partitions for testing without the real data.
///
/// Shared words use letters `a`-`p` plus umlauts, marker trigrams use only
/// `q`-`z`, so a marker can never occur by accident in another label's text.
/// Each word of an instance is, with probability `separability`, a shared
/// word with one of its label's markers spliced in at a random position.
/// The whole output is a function of the arguments.
pub fn generate_synthetic_corpus<S: AsRef<str>>(
    seed: u64,
    labels: &[S],
    per_label: PartitionSizes,
    separability: f64,
) -> Result<SyntheticCorpus> {
    if !(0.0..=1.0).contains(&separability) {
        return Err(Error::config(format!(
            "separability must be in [0, 1], got {separability}"
        )));
    }
    let names: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
    if names.len() < 2 {
        return Err(Error::config("at least 2 labels are required"));
    }
    let distinct: BTreeSet<&str> = names.iter().copied().collect();
    if distinct.len() != names.len() {
        return Err(Error::config("duplicate labels"));
    }
    if names.iter().any(|l| l.is_empty() || l.contains(['\t', '\n', '\r'])) {
        return Err(Error::config("labels must be non-empty and free of tabs/newlines"));
    }
    let marker_space = MARKER_ALPHABET.len().pow(3);
    if names.len() * MARKERS_PER_LABEL > marker_space {
        return Err(Error::config("too many labels for the marker alphabet"));
    }

    let mut rng = SplitMix64::new(seed);

    let mut vocab = BTreeSet::new();
    while vocab.len() < SHARED_VOCAB_SIZE {
        let len = rng.range_inclusive(2, 7);
        let word: String = (0..len)
            .map(|_| SHARED_ALPHABET[rng.below_usize(SHARED_ALPHABET.len())])
            .collect();
        vocab.insert(word);
    }
    let vocab: Vec<String> = vocab.into_iter().collect();

    let mut trigrams: Vec<String> = (0..marker_space)
        .map(|i| {
            let n = MARKER_ALPHABET.len();
            [i / (n * n), (i / n) % n, i % n]
                .iter()
                .map(|&j| MARKER_ALPHABET[j])
                .collect()
        })
        .collect();
    rng.shuffle(&mut trigrams);
    let markers: BTreeMap<String, Vec<String>> = names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let start = i * MARKERS_PER_LABEL;
            (name.to_string(), trigrams[start..start + MARKERS_PER_LABEL].to_vec())
        })
        .collect();

    let draw_instance = |rng: &mut SplitMix64, label: &str| -> Instance {
        let own = &markers[label];
        let n_words = rng.range_inclusive(MIN_WORDS, MAX_WORDS);
        let words: Vec<String> = (0..n_words)
            .map(|_| {
                let base = &vocab[rng.below_usize(vocab.len())];
                if rng.next_f64() < separability {
                    let marker = &own[rng.below_usize(own.len())];
                    let chars: Vec<char> = base.chars().collect();
                    let cut = rng.below_usize(chars.len() + 1);
                    let mut word: String = chars[..cut].iter().collect();
                    word.push_str(marker);
                    word.extend(&chars[cut..]);
                    word
                } else {
                    base.clone()
                }
            })
            .collect();
        Instance::labeled(words.join(" "), label)
    };

    let partition = |rng: &mut SplitMix64, count: usize| -> Dataset {
        let mut instances = Vec::with_capacity(count * names.len());
        for name in &names {
            for _ in 0..count {
                instances.push(draw_instance(rng, name));
            }
        }
        rng.shuffle(&mut instances);
        Dataset::new(instances)
    };

    let train = partition(&mut rng, per_label.train);
    let dev = partition(&mut rng, per_label.dev);
    let test = partition(&mut rng, per_label.test);
    Ok(SyntheticCorpus {
        train,
        dev,
        test,
        markers,
    })
}
