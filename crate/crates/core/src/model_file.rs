//! Versioned plain-text container for trained ensembles.
//!
//! ```text
//! dialect-id model
//! version 1
//! scalar f64
//! train c=<real> loss=<name> tol=<real> max_epochs=<int> seed=<int> fit_bias=<bool>
//! min_df <int>
//! labels <L>
//! <label>                          (L lines, ascending)
//! members <M>
//! member <spec> lowercase=<bool>   (then, per member:)
//! n_docs <int>
//! vocab <V>
//! <df>\t<idf>\t<feature>           (V lines, column order)
//! weights <label-id> epochs=<int> dim=<V> fit_bias=<bool>
//! <weight>                         (V or V+1 lines)
//! end
//! ```
//!
//! Reals are written in scientific notation with 17 significant digits, so
//! the file is deterministic and reloads bit-identically. Feature strings and
//! labels escape `\`, tab, CR and LF.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::corpus::LabelIndex;
use crate::ensemble::{EnsembleConfig, EnsembleModel, Member};
use crate::error::{Error, Result};
use crate::features::{FeatureSpec, TfidfModel, Vocabulary};
use crate::scalar::Scalar;
use crate::svm::{BinaryModel, LinearModel, Loss, TrainConfig};

pub const MAGIC: &str = "dialect-id model";
pub const VERSION: u32 = 1;

/// A trained ensemble together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile<F = f64> {
    pub config: EnsembleConfig<F>,
    pub ensemble: EnsembleModel<F>,
}

fn real<F: Scalar>(value: F) -> String {
    format!("{:.16e}", value.to_f64_lossless())
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

fn unescape(s: &str) -> Option<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        out.push(match chars.next()? {
            '\\' => '\\',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        });
    }
    Some(out)
}

impl<F: Scalar> ModelFile<F> {
    pub fn new(config: EnsembleConfig<F>, ensemble: EnsembleModel<F>) -> Self {
        Self { config, ensemble }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let t = &self.config.train;
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "version {VERSION}");
        let _ = writeln!(out, "scalar {}", F::NAME);
        let _ = writeln!(
            out,
            "train c={} loss={} tol={} max_epochs={} seed={} fit_bias={}",
            real(t.c),
            t.loss,
            real(t.tol),
            t.max_epochs,
            t.seed,
            t.fit_bias
        );
        let _ = writeln!(out, "min_df {}", self.config.min_df);
        let labels = self.ensemble.label_index().labels();
        let _ = writeln!(out, "labels {}", labels.len());
        for l in labels {
            let _ = writeln!(out, "{}", escape(l));
        }
        let members = self.ensemble.members();
        let _ = writeln!(out, "members {}", members.len());
        for m in members {
            let _ = writeln!(out, "member {} lowercase={}", m.spec, m.spec.lowercase);
            let vocab = m.tfidf.vocabulary();
            let _ = writeln!(out, "n_docs {}", m.tfidf.n_docs());
            let _ = writeln!(out, "vocab {}", vocab.len());
            for ((feature, df), idf) in vocab
                .features()
                .iter()
                .zip(vocab.document_frequency())
                .zip(m.tfidf.idf())
            {
                let _ = writeln!(out, "{df}\t{}\t{}", real(*idf), escape(feature));
            }
            for (id, b) in m.model.binary_models().iter().enumerate() {
                let _ = writeln!(
                    out,
                    "weights {id} epochs={} dim={} fit_bias={}",
                    b.epochs(),
                    b.dim(),
                    b.fit_bias()
                );
                for w in b.weights() {
                    let _ = writeln!(out, "{}", real(*w));
                }
            }
        }
        let _ = writeln!(out, "end");
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        r.header()?;
        let scalar = r.keyed("scalar")?;
        if scalar != F::NAME {
            return Err(r.err(format!("model stores {scalar} weights, expected {}", F::NAME)));
        }

        let train_line = r.keyed("train")?;
        let fields = r.fields(train_line)?;
        let get = |key: &str| -> Result<&str> {
            fields
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| r.err(format!("missing train field `{key}`")))
        };
        let train = TrainConfig {
            c: r.parse_real(get("c")?)?,
            loss: get("loss")?.parse::<Loss>().map_err(|e| r.err(e.to_string()))?,
            tol: r.parse_real(get("tol")?)?,
            max_epochs: r.parse(get("max_epochs")?)?,
            seed: r.parse(get("seed")?)?,
            fit_bias: r.parse(get("fit_bias")?)?,
        };
        let min_df: usize = r.parse_keyed("min_df")?;

        let n_labels: usize = r.parse_keyed("labels")?;
        let mut labels = Vec::with_capacity(n_labels);
        for _ in 0..n_labels {
            let line = r.line()?;
            labels.push(unescape(line).ok_or_else(|| r.err("bad escape in label"))?);
        }
        let label_index = LabelIndex::new(labels.clone()).map_err(|e| r.err(e.to_string()))?;
        if label_index.labels() != labels.as_slice() {
            return Err(r.err("labels must be distinct and in ascending order"));
        }

        let n_members: usize = r.parse_keyed("members")?;
        let mut members = Vec::with_capacity(n_members);
        for _ in 0..n_members {
            members.push(r.member::<F>(&label_index)?);
        }
        if r.line()? != "end" {
            return Err(r.err("expected `end`"));
        }
        let specs = members.iter().map(|m: &Member<F>| m.spec).collect();
        let config = EnsembleConfig {
            specs,
            train,
            min_df,
        };
        let ensemble = EnsembleModel::from_members(members)?;
        Ok(Self { config, ensemble })
    }
}

/// Scalar name recorded in a model file's header.
pub fn peek_scalar(text: &str) -> Result<String> {
    let mut r = Reader::new(text);
    r.header()?;
    Ok(r.keyed("scalar")?.to_string())
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line_no: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate(),
            line_no: 0,
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::ModelFormat {
            line: self.line_no,
            message: message.into(),
        }
    }

    fn line(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line_no = i + 1;
                Ok(l)
            }
            None => {
                self.line_no += 1;
                Err(self.err("unexpected end of file"))
            }
        }
    }

    fn header(&mut self) -> Result<()> {
        if self.line()? != MAGIC {
            return Err(self.err("not a dialect-id model file"));
        }
        let version = self.keyed("version")?;
        if version != VERSION.to_string() {
            return Err(Error::ModelVersion {
                found: version.to_string(),
                expected: VERSION,
            });
        }
        Ok(())
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let line = self.line()?;
        line.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key} ...`")))
    }

    fn parse<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }

    fn parse_keyed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let value = self.keyed(key)?;
        self.parse(value)
    }

    fn parse_real<F: Scalar>(&self, s: &str) -> Result<F> {
        let v: f64 = self.parse(s)?;
        if !v.is_finite() {
            return Err(self.err("non-finite number"));
        }
        Ok(F::from_f64_lossy(v))
    }

    fn fields(&self, line: &'a str) -> Result<Vec<(&'a str, &'a str)>> {
        line.split(' ')
            .map(|kv| {
                kv.split_once('=')
                    .ok_or_else(|| self.err(format!("expected key=value, found `{kv}`")))
            })
            .collect()
    }

    fn member<F: Scalar>(&mut self, label_index: &LabelIndex) -> Result<Member<F>> {
        let header = self.keyed("member")?;
        let (spec_text, flags) = header
            .split_once(' ')
            .ok_or_else(|| self.err("expected `member <spec> lowercase=<bool>`"))?;
        let lowercase: bool = match flags.strip_prefix("lowercase=") {
            Some(v) => self.parse(v)?,
            None => return Err(self.err("missing lowercase flag")),
        };
        let spec = spec_text
            .parse::<FeatureSpec>()
            .map_err(|e| self.err(e.to_string()))?
            .with_lowercase(lowercase);

        let n_docs: u64 = self.parse_keyed("n_docs")?;
        let n_vocab: usize = self.parse_keyed("vocab")?;
        let mut entries = Vec::with_capacity(n_vocab);
        let mut stored_idf = Vec::with_capacity(n_vocab);
        for _ in 0..n_vocab {
            let line = self.line()?;
            let mut parts = line.splitn(3, '\t');
            let (Some(df), Some(idf), Some(feature)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(self.err("expected `<df>\\t<idf>\\t<feature>`"));
            };
            let feature = unescape(feature).ok_or_else(|| self.err("bad escape in feature"))?;
            entries.push((feature, self.parse::<u64>(df)?));
            stored_idf.push(self.parse::<f64>(idf)?);
        }
        let sorted = entries.windows(2).all(|w| w[0].0 < w[1].0);
        if !sorted {
            return Err(self.err("vocabulary is not in ascending column order"));
        }
        let vocabulary = Vocabulary::from_entries(entries).map_err(|e| self.err(e.to_string()))?;
        let tfidf: TfidfModel<F> =
            TfidfModel::from_parts(spec, vocabulary, n_docs).map_err(|e| self.err(e.to_string()))?;
        for (&stored, &computed) in stored_idf.iter().zip(tfidf.idf()) {
            let computed = computed.to_f64_lossless();
            if (stored - computed).abs() > 1e-9 * computed.abs() {
                return Err(self.err("idf does not match document frequencies"));
            }
        }

        let mut per_label = Vec::with_capacity(label_index.len());
        for expected_id in 0..label_index.len() {
            let header = self.keyed("weights")?;
            let (id, rest) = header
                .split_once(' ')
                .ok_or_else(|| self.err("malformed weights header"))?;
            if self.parse::<usize>(id)? != expected_id {
                return Err(self.err(format!("expected weights for label id {expected_id}")));
            }
            let fields = self.fields(rest)?;
            let get = |key: &str| {
                fields
                    .iter()
                    .find(|(k, _)| *k == key)
                    .map(|(_, v)| *v)
                    .ok_or_else(|| self.err(format!("missing weights field `{key}`")))
            };
            let epochs: usize = self.parse(get("epochs")?)?;
            let dim: usize = self.parse(get("dim")?)?;
            let fit_bias: bool = self.parse(get("fit_bias")?)?;
            if dim != tfidf.dim() {
                return Err(Error::DimensionMismatch {
                    expected: tfidf.dim(),
                    found: dim,
                });
            }
            let len = dim + usize::from(fit_bias);
            let mut weights = Vec::with_capacity(len);
            for _ in 0..len {
                let line = self.line()?;
                weights.push(self.parse_real::<F>(line)?);
            }
            per_label.push(
                BinaryModel::from_parts(weights, dim, fit_bias, epochs)
                    .map_err(|e| self.err(e.to_string()))?,
            );
        }
        let model = LinearModel::from_parts(label_index.clone(), per_label)?;
        Ok(Member { spec, tfidf, model })
    }
}
