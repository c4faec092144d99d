//! Confusion matrices and classification metrics.
//!
//! Metrics are computed in any [`MetricScalar`]; instantiate with
//! `Ratio<i64>` for exact values. Every `0/0` ratio is defined as 0.

use std::fmt::Write as _;

use crate::corpus::LabelIndex;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;
use crate::scalar::MetricScalar;

/// Rows are gold labels, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    label_index: LabelIndex,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn from_counts(label_index: LabelIndex, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = label_index.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::config(format!("confusion counts must be {n}x{n}")));
        }
        Ok(Self {
            label_index,
            counts,
        })
    }

    pub fn label_index(&self) -> &LabelIndex {
        &self.label_index
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn get(&self, gold: usize, predicted: usize) -> u64 {
        self.counts[gold][predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, gold: usize) -> u64 {
        self.counts[gold].iter().sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        self.counts.iter().map(|r| r[predicted]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// Aligned grid with gold labels down the side.
    pub fn render_text(&self) -> String {
        let labels = self.label_index.labels();
        let width = labels
            .iter()
            .map(|l| l.chars().count())
            .chain(self.counts.iter().flatten().map(|c| c.to_string().len()))
            .chain(std::iter::once("gold\\pred".len()))
            .max()
            .unwrap_or(1);
        let mut out = format!("{:>width$}", "gold\\pred");
        for l in labels {
            let _ = write!(out, " {l:>width$}");
        }
        out.push('\n');
        for (l, row) in labels.iter().zip(&self.counts) {
            let _ = write!(out, "{l:>width$}");
            for c in row {
                let _ = write!(out, " {c:>width$}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion_matrix<S: AsRef<str>, T: AsRef<str>>(
    gold: &[S],
    pred: &[T],
    label_index: &LabelIndex,
) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: gold.len(),
            right: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let n = label_index.len();
    let mut counts = vec![vec![0u64; n]; n];
    for (g, p) in gold.iter().zip(pred) {
        let g = label_index.id_or_err(g.as_ref())?;
        let p = label_index.id_or_err(p.as_ref())?;
        counts[g][p] += 1;
    }
    Ok(ConfusionMatrix {
        label_index: label_index.clone(),
        counts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMetrics<T> {
    pub label: String,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport<T = f64> {
    pub per_label: Vec<LabelMetrics<T>>,
    pub macro_f1: T,
    pub weighted_f1: T,
    pub accuracy: T,
    pub confusion: ConfusionMatrix,
}

fn ratio<T: MetricScalar>(num: T, den: T) -> T {
    if den.is_zero() {
        T::zero()
    } else {
        num / den
    }
}

pub fn metrics<T: MetricScalar>(confusion: &ConfusionMatrix) -> Result<MetricsReport<T>> {
    let total = confusion.total();
    if total == 0 {
        return Err(Error::EmptyCorpus);
    }
    let n = confusion.label_index.len();
    let two = T::one() + T::one();
    let per_label: Vec<LabelMetrics<T>> = (0..n)
        .map(|i| {
            let tp = T::from_count(confusion.get(i, i));
            let precision = ratio(tp.clone(), T::from_count(confusion.col_sum(i)));
            let recall = ratio(tp, T::from_count(confusion.row_sum(i)));
            let f1 = ratio(
                two.clone() * precision.clone() * recall.clone(),
                precision.clone() + recall.clone(),
            );
            LabelMetrics {
                label: confusion.label_index.label(i).to_string(),
                precision,
                recall,
                f1,
                support: confusion.row_sum(i),
            }
        })
        .collect();
    let f1_sum = per_label.iter().fold(T::zero(), |acc, m| acc + m.f1.clone());
    let macro_f1 = if n == 0 {
        T::zero()
    } else {
        f1_sum / T::from_count(n as u64)
    };
    let weighted = per_label.iter().fold(T::zero(), |acc, m| {
        acc + m.f1.clone() * T::from_count(m.support)
    });
    let total_t = T::from_count(total);
    Ok(MetricsReport {
        weighted_f1: weighted / total_t.clone(),
        accuracy: T::from_count(confusion.trace()) / total_t,
        macro_f1,
        per_label,
        confusion: confusion.clone(),
    })
}

pub fn evaluate<S: AsRef<str>, U: AsRef<str>>(
    gold: &[S],
    pred: &[U],
    label_index: &LabelIndex,
) -> Result<MetricsReport<f64>> {
    metrics(&confusion_matrix(gold, pred, label_index)?)
}

/// Macro F1 of `pred` against `gold`, labels taken from `label_index`.
pub fn macro_f1<S: AsRef<str>, U: AsRef<str>>(
    gold: &[S],
    pred: &[U],
    label_index: &LabelIndex,
) -> Result<f64> {
    evaluate(gold, pred, label_index).map(|r| r.macro_f1)
}

impl<T: MetricScalar> MetricsReport<T> {
    /// Per-label table, summary lines, then the confusion matrix.
    pub fn render_text(&self) -> String {
        let width = self
            .per_label
            .iter()
            .map(|m| m.label.chars().count())
            .chain(std::iter::once("label".len()))
            .max()
            .unwrap_or(5);
        let mut out = format!(
            "{:<width$}  {:>9}  {:>9}  {:>9}  {:>7}\n",
            "label", "precision", "recall", "f1", "support"
        );
        for m in &self.per_label {
            let _ = writeln!(
                out,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}",
                m.label,
                m.precision.to_f64(),
                m.recall.to_f64(),
                m.f1.to_f64(),
                m.support
            );
        }
        out.push('\n');
        let _ = writeln!(out, "macro F1     {:.4}", self.macro_f1.to_f64());
        let _ = writeln!(out, "weighted F1  {:.4}", self.weighted_f1.to_f64());
        let _ = writeln!(out, "accuracy     {:.4}", self.accuracy.to_f64());
        out.push('\n');
        out.push_str(&self.confusion.render_text());
        out
    }

    /// Machine-readable form: `metric` rows, then `confusion` rows.
    pub fn render_tsv(&self) -> String {
        let mut out = String::from("section\tlabel\tprecision\trecall\tf1\tsupport\n");
        for m in &self.per_label {
            let _ = writeln!(
                out,
                "label\t{}\t{:.4}\t{:.4}\t{:.4}\t{}",
                m.label,
                m.precision.to_f64(),
                m.recall.to_f64(),
                m.f1.to_f64(),
                m.support
            );
        }
        let _ = writeln!(out, "summary\tmacro_f1\t{:.4}", self.macro_f1.to_f64());
        let _ = writeln!(out, "summary\tweighted_f1\t{:.4}", self.weighted_f1.to_f64());
        let _ = writeln!(out, "summary\taccuracy\t{:.4}", self.accuracy.to_f64());
        for (label, row) in self
            .confusion
            .label_index
            .labels()
            .iter()
            .zip(&self.confusion.counts)
        {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            let _ = writeln!(out, "confusion\t{label}\t{}", cells.join("\t"));
        }
        out
    }
}

/// Uniform random predictions, one per gold instance, drawn with
/// [`SplitMix64`] seeded by `seed`.
pub fn random_baseline<S>(gold: &[S], label_index: &LabelIndex, seed: u64) -> Vec<String> {
    let mut rng = SplitMix64::new(seed);
    let n = label_index.len() as u64;
    gold.iter()
        .map(|_| label_index.label(rng.below(n) as usize).to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;
    use proptest::prelude::*;

    fn ab() -> LabelIndex {
        LabelIndex::new(["A", "B"]).unwrap()
    }

    #[test]
    fn direct_count() {
        let cm = confusion_matrix(&["A", "A", "B"], &["A", "B", "B"], &ab()).unwrap();
        assert_eq!(cm.counts(), [vec![1, 1], vec![0, 1]]);
        let cm = confusion_matrix(&["A", "B", "B"], &["A", "B", "B"], &ab()).unwrap();
        assert_eq!(cm.counts(), [vec![1, 0], vec![0, 2]]);
    }

    #[test]
    fn confusion_errors() {
        assert!(matches!(
            confusion_matrix(&["A"], &["A", "B"], &ab()),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            confusion_matrix(&["A"], &["C"], &ab()),
            Err(Error::UnknownLabel(_))
        ));
        assert!(confusion_matrix::<&str, &str>(&[], &[], &ab()).is_err());
    }

    #[test]
    fn exact_fixture() {
        let cm = ConfusionMatrix::from_counts(ab(), vec![vec![2, 0], vec![1, 1]]).unwrap();
        let r = metrics::<Ratio<i64>>(&cm).unwrap();
        assert_eq!(r.per_label[0].precision, Ratio::new(2, 3));
        assert_eq!(r.per_label[0].recall, Ratio::from_integer(1));
        assert_eq!(r.per_label[0].f1, Ratio::new(4, 5));
        assert_eq!(r.per_label[1].precision, Ratio::from_integer(1));
        assert_eq!(r.per_label[1].recall, Ratio::new(1, 2));
        assert_eq!(r.per_label[1].f1, Ratio::new(2, 3));
        assert_eq!(r.macro_f1, Ratio::new(11, 15));
        assert_eq!(r.accuracy, Ratio::new(3, 4));
        let f = metrics::<f64>(&cm).unwrap();
        assert_eq!(format!("{:.4}", f.macro_f1), "0.7333");
    }

    #[test]
    fn zero_support_label_scores_zero() {
        let index = LabelIndex::new(["A", "B", "C"]).unwrap();
        let r = evaluate(&["A", "B"], &["A", "B"], &index).unwrap();
        let c = &r.per_label[2];
        assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
        assert!((r.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.weighted_f1, 1.0);
    }

    #[test]
    fn empty_matrix_is_error() {
        let cm = ConfusionMatrix::from_counts(ab(), vec![vec![0, 0], vec![0, 0]]).unwrap();
        assert!(metrics::<f64>(&cm).is_err());
        assert!(ConfusionMatrix::from_counts(ab(), vec![vec![0, 0]]).is_err());
    }

    #[test]
    fn symmetric_binary_confusion_has_equal_macro_and_weighted() {
        let cm = ConfusionMatrix::from_counts(ab(), vec![vec![7, 3], vec![3, 7]]).unwrap();
        let r = metrics::<Ratio<i64>>(&cm).unwrap();
        assert_eq!(r.macro_f1, r.weighted_f1);
    }

    #[test]
    fn single_label_baseline_is_perfect() {
        let index = LabelIndex::new(["ZH"]).unwrap();
        let gold = vec!["ZH"; 20];
        let pred = random_baseline(&gold, &index, 3);
        assert_eq!(evaluate(&gold, &pred, &index).unwrap().macro_f1, 1.0);
    }

    #[test]
    fn balanced_baseline_near_quarter() {
        let index = LabelIndex::new(["BE", "BS", "LU", "ZH"]).unwrap();
        let gold: Vec<&str> = (0..10_000).map(|i| index.label(i % 4)).collect();
        for seed in 0..5 {
            let pred = random_baseline(&gold, &index, seed);
            let f1 = macro_f1(&gold, &pred, &index).unwrap();
            assert!((0.22..=0.28).contains(&f1), "seed {seed}: {f1}");
        }
        assert_eq!(random_baseline(&gold, &index, 8), random_baseline(&gold, &index, 8));
    }

    #[test]
    fn renders_four_decimals_and_integer_cells() {
        let cm = ConfusionMatrix::from_counts(ab(), vec![vec![2, 0], vec![1, 1]]).unwrap();
        let r = metrics::<f64>(&cm).unwrap();
        let text = r.render_text();
        assert!(text.contains("macro F1     0.7333"), "{text}");
        let tsv = r.render_tsv();
        assert!(tsv.contains("summary\tmacro_f1\t0.7333"));
        assert!(tsv.contains("confusion\tB\t1\t1"));
    }

    fn labels_strategy() -> impl Strategy<Value = Vec<(usize, usize)>> {
        prop::collection::vec((0usize..4, 0usize..4), 1..60)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn rows_match_gold_histogram(pairs in labels_strategy()) {
            let index = LabelIndex::new(["a", "b", "c", "d"]).unwrap();
            let gold: Vec<&str> = pairs.iter().map(|p| index.label(p.0)).collect();
            let pred: Vec<&str> = pairs.iter().map(|p| index.label(p.1)).collect();
            let cm = confusion_matrix(&gold, &pred, &index).unwrap();
            for i in 0..4 {
                let hist = pairs.iter().filter(|p| p.0 == i).count() as u64;
                prop_assert_eq!(cm.row_sum(i), hist);
            }
            prop_assert_eq!(cm.total(), pairs.len() as u64);

            let r = metrics::<Ratio<i64>>(&cm).unwrap();
            let mean = r.per_label.iter().fold(Ratio::from_integer(0), |a, m| a + m.f1) / Ratio::from_integer(4);
            prop_assert_eq!(r.macro_f1, mean);
            prop_assert_eq!(r.accuracy, Ratio::new(cm.trace() as i64, cm.total() as i64));
            for m in &r.per_label {
                for v in [m.precision, m.recall, m.f1] {
                    prop_assert!(v >= Ratio::from_integer(0) && v <= Ratio::from_integer(1));
                }
            }

            let mut rev_gold = gold.clone();
            let mut rev_pred = pred.clone();
            rev_gold.reverse();
            rev_pred.reverse();
            let r2 = metrics::<Ratio<i64>>(&confusion_matrix(&rev_gold, &rev_pred, &index).unwrap()).unwrap();
            prop_assert_eq!(r2, r);

            let perfect = metrics::<Ratio<i64>>(&confusion_matrix(&gold, &gold, &index).unwrap()).unwrap();
            prop_assert_eq!(perfect.accuracy, Ratio::from_integer(1));
            for m in perfect.per_label.iter().filter(|m| m.support > 0) {
                prop_assert_eq!(m.f1, Ratio::from_integer(1));
            }
        }
    }
}
