//! Hard-voting ensembles of one-vs-rest SVMs, one member per feature spec,
//! plus the model-selection drivers built on them.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::{Dataset, LabelIndex};
use crate::error::{Error, Result};
use crate::eval::macro_f1;
use crate::features::{fit_tfidf, transform, transform_corpus, FeatureSpec, TfidfModel};
use crate::scalar::{lit, Scalar};
use crate::svm::{predict_id, train_ovr, LinearModel, TrainConfig};

/// The 14 single-family configurations: char 1-8, word 1-3, skip 1-3.
pub fn paper_feature_specs() -> Vec<FeatureSpec> {
    (1..=8)
        .map(FeatureSpec::char_ngram)
        .chain((1..=3).map(FeatureSpec::word_ngram))
        .chain((1..=3).map(FeatureSpec::skip_bigram))
        .collect()
}

/// The four char n-gram members (n = 2..5) of the submitted system.
pub fn submitted_feature_specs() -> Vec<FeatureSpec> {
    (2..=5).map(FeatureSpec::char_ngram).collect()
}

/// Seven powers of ten, 10⁻³ through 10³.
pub fn default_c_grid<F: Scalar>() -> Vec<F> {
    (-3..=3).map(|e| lit(10f64.powi(e))).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig<F = f64> {
    pub specs: Vec<FeatureSpec>,
    pub train: TrainConfig<F>,
    pub min_df: usize,
}

impl<F: Scalar> EnsembleConfig<F> {
    pub fn new(specs: Vec<FeatureSpec>, train: TrainConfig<F>) -> Self {
        Self {
            specs,
            train,
            min_df: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.specs.is_empty() {
            return Err(Error::config("an ensemble needs at least one feature spec"));
        }
        let mut seen = HashSet::new();
        for spec in &self.specs {
            spec.validate()?;
            if !seen.insert(spec) {
                return Err(Error::config(format!("duplicate feature spec {spec}")));
            }
        }
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member<F = f64> {
    pub spec: FeatureSpec,
    pub tfidf: TfidfModel<F>,
    pub model: LinearModel<F>,
}

impl<F: Scalar> Member<F> {
    pub fn predict_id(&self, text: &str) -> Result<usize> {
        predict_id(&self.model, &transform(&self.tfidf, text))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleModel<F = f64> {
    members: Vec<Member<F>>,
    label_index: LabelIndex,
}

impl<F: Scalar> EnsembleModel<F> {
    pub fn from_members(members: Vec<Member<F>>) -> Result<Self> {
        let label_index = members
            .first()
            .ok_or_else(|| Error::config("an ensemble needs at least one member"))?
            .model
            .label_index()
            .clone();
        for m in &members {
            if m.model.label_index() != &label_index {
                return Err(Error::config("members disagree on the label set"));
            }
            if m.model.dim() != m.tfidf.dim() {
                return Err(Error::DimensionMismatch {
                    expected: m.tfidf.dim(),
                    found: m.model.dim(),
                });
            }
        }
        Ok(Self {
            members,
            label_index,
        })
    }

    pub fn members(&self) -> &[Member<F>] {
        &self.members
    }

    pub fn label_index(&self) -> &LabelIndex {
        &self.label_index
    }

    pub fn predict(&self, docs: &Dataset) -> Result<Vec<String>> {
        predict_ensemble(self, docs)
    }
}

pub fn train_member<F: Scalar>(
    train: &Dataset,
    spec: FeatureSpec,
    train_config: &TrainConfig<F>,
    min_df: usize,
) -> Result<Member<F>> {
    let label_index = train.label_index().ok_or(Error::Unlabeled)?;
    let labels = train.labels()?;
    let tfidf = fit_tfidf(train, spec, min_df)?;
    let x = transform_corpus(&tfidf, train);
    let model = train_ovr(&x, &labels, label_index, train_config)?;
    Ok(Member { spec, tfidf, model })
}

/// Fits TF-IDF and a one-vs-rest SVM per spec on `train`, members in spec
/// order.
pub fn train_ensemble<F: Scalar>(train: &Dataset, config: &EnsembleConfig<F>) -> Result<EnsembleModel<F>> {
    config.validate()?;
    let index = train.label_index().ok_or(Error::Unlabeled)?;
    if index.len() < 2 {
        return Err(Error::config("training data needs at least 2 labels"));
    }
    let members = config
        .specs
        .par_iter()
        .map(|&spec| train_member(train, spec, &config.train, config.min_df))
        .collect::<Result<Vec<_>>>()?;
    EnsembleModel::from_members(members)
}

/// Most frequent id; ties go to the smallest id.
pub fn majority_vote_ids(votes: &[usize], n_labels: usize) -> Result<usize> {
    if votes.is_empty() {
        return Err(Error::config("majority vote over zero members"));
    }
    let mut counts = vec![0usize; n_labels];
    for &v in votes {
        *counts
            .get_mut(v)
            .ok_or_else(|| Error::UnknownLabel(v.to_string()))? += 1;
    }
    let mut best = 0;
    for (id, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = id;
        }
    }
    Ok(best)
}

/// Majority rule over member votes with ascending-label-order tie-break.
pub fn majority_vote<'a, S: AsRef<str>>(votes: &[S], label_index: &'a LabelIndex) -> Result<&'a str> {
    let ids: Vec<usize> = votes
        .iter()
        .map(|v| label_index.id_or_err(v.as_ref()))
        .collect::<Result<_>>()?;
    majority_vote_ids(&ids, label_index.len()).map(|id| label_index.label(id))
}

/// Per-document member votes as label ids, `votes[doc][member]`.
pub fn member_votes<F: Scalar>(model: &EnsembleModel<F>, docs: &Dataset) -> Result<Vec<Vec<usize>>> {
    docs.instances()
        .par_iter()
        .map(|inst| {
            model
                .members
                .iter()
                .map(|m| m.predict_id(&inst.text))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

pub fn predict_ensemble<F: Scalar>(model: &EnsembleModel<F>, docs: &Dataset) -> Result<Vec<String>> {
    let n = model.label_index.len();
    member_votes(model, docs)?
        .iter()
        .map(|votes| majority_vote_ids(votes, n).map(|id| model.label_index.label(id).to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult<F = f64> {
    /// `(C, dev macro F1)` in grid order.
    pub per_c: Vec<(F, f64)>,
    pub best_c: F,
}

impl<F: Scalar> GridSearchResult<F> {
    pub fn best_score(&self) -> f64 {
        self.per_c
            .iter()
            .find(|(c, _)| *c == self.best_c)
            .map(|(_, s)| *s)
            .unwrap_or(f64::NAN)
    }

    pub fn render_tsv(&self) -> String {
        let mut out = String::from("c\tmacro_f1\n");
        for (c, score) in &self.per_c {
            let _ = writeln!(out, "{c}\t{score:.4}");
        }
        out
    }

    pub fn render_text(&self) -> String {
        let rows: Vec<(String, String)> = self
            .per_c
            .iter()
            .map(|(c, s)| {
                let mark = if *c == self.best_c { " *" } else { "" };
                (c.to_string(), format!("{s:.4}{mark}"))
            })
            .collect();
        aligned_table(("C", "F1 (macro)"), &rows)
    }
}

/// Highest score wins; among equal scores the smallest C.
pub fn select_best_c<F: Scalar>(per_c: &[(F, f64)]) -> Option<F> {
    let mut best: Option<(F, f64)> = None;
    for &(c, score) in per_c {
        best = match best {
            None => Some((c, score)),
            Some((bc, bs)) if score > bs || (score == bs && c < bc) => Some((c, score)),
            keep => keep,
        };
    }
    best.map(|(c, _)| c)
}

/// Trains the configured ensemble for every C in `grid` and scores it on
/// `dev` by macro F1.
pub fn grid_search_c<F: Scalar>(
    train: &Dataset,
    dev: &Dataset,
    config: &EnsembleConfig<F>,
    grid: &[F],
) -> Result<GridSearchResult<F>> {
    if grid.is_empty() {
        return Err(Error::config("empty C grid"));
    }
    let gold = dev.labels()?;
    let per_c = grid
        .par_iter()
        .map(|&c| {
            let cfg = EnsembleConfig {
                train: config.train.with_c(c),
                ..config.clone()
            };
            let model = train_ensemble(train, &cfg)?;
            let pred = predict_ensemble(&model, dev)?;
            let index = scoring_index(model.label_index(), dev)?;
            Ok((c, macro_f1(&gold, &pred, &index)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let best_c = select_best_c(&per_c).expect("non-empty grid");
    Ok(GridSearchResult { per_c, best_c })
}

/// Labels seen in training or dev; dev labels unseen in training still count
/// toward macro F1.
fn scoring_index(trained: &LabelIndex, dev: &Dataset) -> Result<LabelIndex> {
    let dev_labels = dev.labels()?;
    LabelIndex::new(
        trained
            .labels()
            .iter()
            .map(String::as_str)
            .chain(dev_labels)
            .map(str::to_string),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub header: (String, String),
    pub rows: Vec<(String, f64)>,
}

impl ScoreTable {
    pub fn render_tsv(&self) -> String {
        let mut out = format!("{}\t{}\n", self.header.0, self.header.1);
        for (name, score) in &self.rows {
            let _ = writeln!(out, "{name}\t{score:.4}");
        }
        out
    }

    pub fn render_text(&self) -> String {
        let rows: Vec<(String, String)> = self
            .rows
            .iter()
            .map(|(n, s)| (n.clone(), format!("{s:.4}")))
            .collect();
        aligned_table((&self.header.0, &self.header.1), &rows)
    }

    pub fn score(&self, name: &str) -> Option<f64> {
        self.rows.iter().find(|(n, _)| n == name).map(|(_, s)| *s)
    }
}

fn aligned_table(header: (&str, &str), rows: &[(String, String)]) -> String {
    let w0 = rows
        .iter()
        .map(|r| r.0.chars().count())
        .chain(std::iter::once(header.0.chars().count()))
        .max()
        .unwrap_or(0);
    let w1 = rows
        .iter()
        .map(|r| r.1.chars().count())
        .chain(std::iter::once(header.1.chars().count()))
        .max()
        .unwrap_or(0);
    let mut out = format!("{:<w0$}  {:<w1$}\n", header.0, header.1);
    let _ = writeln!(out, "{}  {}", "-".repeat(w0), "-".repeat(w1));
    for (a, b) in rows {
        let _ = writeln!(out, "{a:<w0$}  {b:<w1$}");
    }
    out
}

/// Human-readable name for a spec, e.g. `Character 4-grams`.
pub fn describe_spec(spec: &FeatureSpec) -> String {
    use crate::features::FeatureKind::*;
    match spec.kind {
        CharNgram(n) => format!("Character {n}-grams"),
        WordNgram(n) => format!("Word {n}-grams"),
        WordSkipBigram(k) => format!("Word {k}-skip bigrams"),
    }
}

struct ScoredMember {
    spec: FeatureSpec,
    votes: Vec<usize>,
}

fn score_members<F: Scalar>(
    train: &Dataset,
    dev: &Dataset,
    specs: &[FeatureSpec],
    train_config: &TrainConfig<F>,
    min_df: usize,
) -> Result<(Vec<ScoredMember>, LabelIndex)> {
    let index = train.label_index().ok_or(Error::Unlabeled)?.clone();
    let members = specs
        .par_iter()
        .map(|&spec| {
            let member = train_member(train, spec, train_config, min_df)?;
            let votes = dev
                .texts()
                .map(|t| member.predict_id(t))
                .collect::<Result<Vec<_>>>()?;
            Ok(ScoredMember { spec, votes })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((members, index))
}

/// One single-member ensemble per spec, each scored on `dev`.
pub fn ablation_table<F: Scalar>(
    train: &Dataset,
    dev: &Dataset,
    specs: &[FeatureSpec],
    train_config: &TrainConfig<F>,
    min_df: usize,
) -> Result<ScoreTable> {
    let gold = dev.labels()?;
    let (members, index) = score_members(train, dev, specs, train_config, min_df)?;
    let scoring = scoring_index(&index, dev)?;
    let rows = members
        .iter()
        .map(|m| {
            let pred: Vec<&str> = m.votes.iter().map(|&id| index.label(id)).collect();
            Ok((m.spec.to_string(), macro_f1(&gold, &pred, &scoring)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreTable {
        header: ("spec".into(), "macro_f1".into()),
        rows,
    })
}

/// Scores each candidate member subset on `dev`. Every distinct spec is
/// trained once and its dev votes are reused across subsets.
pub fn evaluate_subsets<F: Scalar>(
    train: &Dataset,
    dev: &Dataset,
    candidates: &[Vec<FeatureSpec>],
    train_config: &TrainConfig<F>,
    min_df: usize,
) -> Result<ScoreTable> {
    let gold = dev.labels()?;
    let mut unique: Vec<FeatureSpec> = Vec::new();
    for subset in candidates {
        EnsembleConfig::new(subset.clone(), *train_config).validate()?;
        for spec in subset {
            if !unique.contains(spec) {
                unique.push(*spec);
            }
        }
    }
    let (members, index) = score_members(train, dev, &unique, train_config, min_df)?;
    let scoring = scoring_index(&index, dev)?;
    let rows = candidates
        .iter()
        .map(|subset| {
            let chosen: Vec<&ScoredMember> = subset
                .iter()
                .map(|s| members.iter().find(|m| m.spec == *s).expect("trained above"))
                .collect();
            let pred = (0..dev.len())
                .map(|doc| {
                    let votes: Vec<usize> = chosen.iter().map(|m| m.votes[doc]).collect();
                    majority_vote_ids(&votes, index.len()).map(|id| index.label(id))
                })
                .collect::<Result<Vec<_>>>()?;
            let name = subset.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
            Ok((name, macro_f1(&gold, &pred, &scoring)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreTable {
        header: ("members".into(), "macro_f1".into()),
        rows,
    })
}
