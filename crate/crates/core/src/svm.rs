//! L2-regularized linear SVM trained by dual coordinate descent.
//!
//! The solver minimizes `½‖w‖² + C Σ loss(1 − yᵢ w·x̂ᵢ)` where `x̂ᵢ` carries a
//! trailing constant 1 when the bias is fitted (the bias is therefore
//! regularized like any other weight). It keeps dual variables `αᵢ ≥ 0` and
//! the primal vector `w = Σ αᵢ yᵢ x̂ᵢ` in sync, updating one coordinate at a
//! time with a projected Newton step:
//!
//! * hinge: `Q̄ᵢᵢ = ‖x̂ᵢ‖²`, `αᵢ ∈ [0, C]`
//! * squared hinge: `Q̄ᵢᵢ = ‖x̂ᵢ‖² + 1/(2C)`, `αᵢ ∈ [0, ∞)`
//!
//! Instances are visited in a fresh seeded permutation every epoch, and the
//! solver stops once the largest projected-gradient magnitude seen during an
//! epoch drops below `tol`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::corpus::LabelIndex;
use crate::error::{Error, Result};
use crate::features::Vocabulary;
use crate::rng::SplitMix64;
use crate::scalar::{lit, Scalar};
use crate::sparse::{SparseMatrix, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Loss {
    Hinge,
    SquaredHinge,
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Hinge => "hinge",
            Loss::SquaredHinge => "squared_hinge",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(Loss::Hinge),
            "squared_hinge" => Ok(Loss::SquaredHinge),
            other => Err(Error::config(format!(
                "unknown loss `{other}` (expected hinge or squared_hinge)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig<F = f64> {
    pub c: F,
    pub loss: Loss,
    pub tol: F,
    pub max_epochs: usize,
    pub seed: u64,
    pub fit_bias: bool,
}

impl<F: Scalar> Default for TrainConfig<F> {
    fn default() -> Self {
        Self {
            c: F::one(),
            loss: Loss::SquaredHinge,
            tol: lit(1e-4),
            max_epochs: 1000,
            seed: 0,
            fit_bias: true,
        }
    }
}

impl<F: Scalar> TrainConfig<F> {
    pub fn with_c(mut self, c: F) -> Self {
        self.c = c;
        self
    }

    pub fn with_loss(mut self, loss: Loss) -> Self {
        self.loss = loss;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > F::zero() && self.c.is_finite()) {
            return Err(Error::config(format!("C must be positive, got {}", self.c)));
        }
        if !(self.tol > F::zero()) {
            return Err(Error::config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("max_epochs must be at least 1"));
        }
        Ok(())
    }

    /// Upper bound on each dual variable.
    fn upper_bound(&self) -> F {
        match self.loss {
            Loss::Hinge => self.c,
            Loss::SquaredHinge => F::infinity(),
        }
    }

    /// Diagonal shift added to `Qᵢᵢ`.
    fn diagonal(&self) -> F {
        match self.loss {
            Loss::Hinge => F::zero(),
            Loss::SquaredHinge => F::one() / (lit::<F>(2.0) * self.c),
        }
    }

    fn loss_at(&self, slack: F) -> F {
        let hinge = slack.max(F::zero());
        match self.loss {
            Loss::Hinge => hinge,
            Loss::SquaredHinge => hinge * hinge,
        }
    }
}

/// Primal weights of one binary problem. With a fitted bias the last slot of
/// `weights` is the bias weight.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel<F = f64> {
    weights: Vec<F>,
    dim: usize,
    fit_bias: bool,
    epochs: usize,
}

impl<F: Scalar> BinaryModel<F> {
    pub fn from_parts(weights: Vec<F>, dim: usize, fit_bias: bool, epochs: usize) -> Result<Self> {
        let expected = dim + usize::from(fit_bias);
        if weights.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::config("non-finite weight"));
        }
        Ok(Self {
            weights,
            dim,
            fit_bias,
            epochs,
        })
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    /// Feature weights without the bias slot.
    pub fn feature_weights(&self) -> &[F] {
        &self.weights[..self.dim]
    }

    pub fn bias(&self) -> F {
        if self.fit_bias {
            self.weights[self.dim]
        } else {
            F::zero()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fit_bias(&self) -> bool {
        self.fit_bias
    }

    /// Epochs the solver ran before stopping.
    pub fn epochs(&self) -> usize {
        self.epochs
    }

    pub fn decision(&self, v: &SparseVector<F>) -> F {
        v.dot_dense(&self.weights) + self.bias()
    }
}

/// Solver state reported to an observer after each epoch.
#[derive(Debug)]
pub struct EpochState<'a, F> {
    pub epoch: usize,
    pub alphas: &'a [F],
    pub weights: &'a [F],
    pub max_violation: F,
}

#[derive(Debug, Clone)]
pub struct DualSolution<F = f64> {
    pub model: BinaryModel<F>,
    pub alphas: Vec<F>,
    pub max_violation: F,
    pub converged: bool,
}

fn check_problem<F: Scalar>(x: &SparseMatrix<F>, y: &[i8]) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if let Some(bad) = y.iter().find(|&&s| s != 1 && s != -1) {
        return Err(Error::config(format!("binary targets must be ±1, got {bad}")));
    }
    if !(y.contains(&1) && y.contains(&-1)) {
        return Err(Error::DegenerateLabels);
    }
    if let Some(row) = x.rows().iter().position(|r| !r.is_finite()) {
        return Err(Error::NonFinite { row });
    }
    Ok(())
}

#[inline]
fn sign<F: Scalar>(s: i8) -> F {
    if s > 0 {
        F::one()
    } else {
        -F::one()
    }
}

/// Runs dual coordinate descent, calling `observer` after every epoch.
pub fn solve_dual_observed<F, O>(
    x: &SparseMatrix<F>,
    y: &[i8],
    config: &TrainConfig<F>,
    mut observer: O,
) -> Result<DualSolution<F>>
where
    F: Scalar,
    O: FnMut(EpochState<'_, F>),
{
    config.validate()?;
    check_problem(x, y)?;

    let n = x.n_rows();
    let dim = x.dim();
    let bias = config.fit_bias;
    let upper = config.upper_bound();
    let diagonal = config.diagonal();

    let mut w = vec![F::zero(); dim + usize::from(bias)];
    let mut alphas = vec![F::zero(); n];
    let qd: Vec<F> = x
        .rows()
        .iter()
        .map(|r| r.norm_sq() + if bias { F::one() } else { F::zero() } + diagonal)
        .collect();
    let ys: Vec<F> = y.iter().map(|&s| sign(s)).collect();

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(config.seed);
    let mut epochs = 0;
    let mut max_violation = F::infinity();
    let mut converged = false;

    while epochs < config.max_epochs {
        rng.shuffle(&mut order);
        max_violation = F::zero();
        for &i in &order {
            let row = x.row(i);
            let yi = ys[i];
            let mut margin = row.dot_dense(&w);
            if bias {
                margin = margin + w[dim];
            }
            let alpha = alphas[i];
            let grad = yi * margin - F::one() + diagonal * alpha;
            let projected = if alpha.is_zero() {
                grad.min(F::zero())
            } else if alpha >= upper {
                grad.max(F::zero())
            } else {
                grad
            };
            max_violation = max_violation.max(projected.abs());
            if projected.is_zero() {
                continue;
            }
            let updated = if qd[i] > F::zero() {
                (alpha - grad / qd[i]).max(F::zero()).min(upper)
            } else if grad < F::zero() {
                // A zero row under hinge loss: the dual is linear in αᵢ.
                upper
            } else {
                F::zero()
            };
            let delta = (updated - alpha) * yi;
            if delta.is_zero() {
                continue;
            }
            alphas[i] = updated;
            row.axpy(delta, &mut w);
            if bias {
                w[dim] = w[dim] + delta;
            }
        }
        epochs += 1;
        observer(EpochState {
            epoch: epochs,
            alphas: &alphas,
            weights: &w,
            max_violation,
        });
        if max_violation < config.tol {
            converged = true;
            break;
        }
    }

    Ok(DualSolution {
        model: BinaryModel {
            weights: w,
            dim,
            fit_bias: bias,
            epochs,
        },
        alphas,
        max_violation,
        converged,
    })
}

pub fn solve_dual<F: Scalar>(
    x: &SparseMatrix<F>,
    y: &[i8],
    config: &TrainConfig<F>,
) -> Result<DualSolution<F>> {
    solve_dual_observed(x, y, config, |_| {})
}

/// Trains one binary SVM; `y` holds +1/−1 targets.
pub fn train_binary_dcd<F: Scalar>(
    x: &SparseMatrix<F>,
    y: &[i8],
    config: &TrainConfig<F>,
) -> Result<BinaryModel<F>> {
    solve_dual(x, y, config).map(|s| s.model)
}

/// `w(α) = Σ αᵢ yᵢ x̂ᵢ`, recomputed from scratch.
pub fn weights_from_dual<F: Scalar>(
    alphas: &[F],
    x: &SparseMatrix<F>,
    y: &[i8],
    fit_bias: bool,
) -> Vec<F> {
    let dim = x.dim();
    let mut w = vec![F::zero(); dim + usize::from(fit_bias)];
    for ((row, &alpha), &s) in x.rows().iter().zip(alphas).zip(y) {
        let coef = alpha * sign::<F>(s);
        row.axpy(coef, &mut w);
        if fit_bias {
            w[dim] = w[dim] + coef;
        }
    }
    w
}

/// `½‖w‖² + C Σ loss(1 − yᵢ w·x̂ᵢ)`.
pub fn primal_objective<F: Scalar>(
    model: &BinaryModel<F>,
    x: &SparseMatrix<F>,
    y: &[i8],
    config: &TrainConfig<F>,
) -> F {
    let reg: F = model.weights.iter().map(|&w| w * w).sum::<F>() * lit(0.5);
    let loss: F = x
        .rows()
        .iter()
        .zip(y)
        .map(|(row, &s)| config.loss_at(F::one() - sign::<F>(s) * model.decision(row)))
        .sum();
    reg + config.c * loss
}

/// `Σαᵢ − ½‖w(α)‖²`, minus `Σαᵢ²/(4C)` for squared hinge.
pub fn dual_objective<F: Scalar>(
    alphas: &[F],
    x: &SparseMatrix<F>,
    y: &[i8],
    config: &TrainConfig<F>,
) -> F {
    let w = weights_from_dual(alphas, x, y, config.fit_bias);
    let sum: F = alphas.iter().copied().sum();
    let norm_sq: F = w.iter().map(|&v| v * v).sum();
    let mut value = sum - lit::<F>(0.5) * norm_sq;
    if config.loss == Loss::SquaredHinge {
        let sq: F = alphas.iter().map(|&a| a * a).sum();
        value = value - sq / (lit::<F>(4.0) * config.c);
    }
    value
}

/// One-vs-rest collection of binary models, ordered by label id.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel<F = f64> {
    label_index: LabelIndex,
    per_label: Vec<BinaryModel<F>>,
    dim: usize,
}

impl<F: Scalar> LinearModel<F> {
    pub fn from_parts(label_index: LabelIndex, per_label: Vec<BinaryModel<F>>) -> Result<Self> {
        if per_label.len() != label_index.len() {
            return Err(Error::LengthMismatch {
                left: per_label.len(),
                right: label_index.len(),
            });
        }
        let dim = per_label.first().map_or(0, BinaryModel::dim);
        if let Some(bad) = per_label.iter().find(|m| m.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self {
            label_index,
            per_label,
            dim,
        })
    }

    pub fn label_index(&self) -> &LabelIndex {
        &self.label_index
    }

    pub fn binary_models(&self) -> &[BinaryModel<F>] {
        &self.per_label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn decision_values(&self, v: &SparseVector<F>) -> Result<Vec<F>> {
        decision_values(self, v)
    }

    pub fn predict(&self, v: &SparseVector<F>) -> Result<&str> {
        predict(self, v)
    }
}

pub fn train_ovr<F: Scalar, S: AsRef<str>>(
    x: &SparseMatrix<F>,
    labels: &[S],
    label_index: &LabelIndex,
    config: &TrainConfig<F>,
) -> Result<LinearModel<F>> {
    config.validate()?;
    if x.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: labels.len(),
        });
    }
    let ids: Vec<usize> = labels
        .iter()
        .map(|l| label_index.id_or_err(l.as_ref()))
        .collect::<Result<_>>()?;
    let mut present = vec![false; label_index.len()];
    for &id in &ids {
        present[id] = true;
    }
    if label_index.len() < 2 || present.iter().filter(|&&p| p).count() < 2 {
        return Err(Error::config("one-vs-rest training needs at least 2 distinct labels"));
    }
    let per_label = (0..label_index.len())
        .into_par_iter()
        .map(|target| {
            let y: Vec<i8> = ids.iter().map(|&id| if id == target { 1 } else { -1 }).collect();
            train_binary_dcd(x, &y, config)
        })
        .collect::<Result<Vec<_>>>()?;
    LinearModel::from_parts(label_index.clone(), per_label)
}

/// Per-label scores `w_L · v̂`.
pub fn decision_values<F: Scalar>(model: &LinearModel<F>, v: &SparseVector<F>) -> Result<Vec<F>> {
    if v.dim() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            found: v.dim(),
        });
    }
    Ok(model.per_label.iter().map(|m| m.decision(v)).collect())
}

/// Index of the largest score, lowest index on ties.
pub fn argmax_lowest<F: PartialOrd + Copy>(scores: &[F]) -> Option<usize> {
    let mut best: Option<(usize, F)> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if !(s > b) => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

pub fn predict_id<F: Scalar>(model: &LinearModel<F>, v: &SparseVector<F>) -> Result<usize> {
    let scores = decision_values(model, v)?;
    Ok(argmax_lowest(&scores).expect("at least one label"))
}

pub fn predict<'m, F: Scalar>(model: &'m LinearModel<F>, v: &SparseVector<F>) -> Result<&'m str> {
    predict_id(model, v).map(|id| model.label_index.label(id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWeight<F = f64> {
    pub feature: String,
    pub weight: F,
}

/// The `k` features with the largest positive weight for `label`, heaviest
/// first, ties by feature string.
pub fn top_features<F: Scalar>(
    model: &LinearModel<F>,
    vocab: &Vocabulary,
    label: &str,
    k: usize,
) -> Result<Vec<FeatureWeight<F>>> {
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    if vocab.len() != model.dim {
        return Err(Error::DimensionMismatch {
            expected: model.dim,
            found: vocab.len(),
        });
    }
    let id = model.label_index.id_or_err(label)?;
    let weights = model.per_label[id].feature_weights();
    let mut ranked: Vec<(usize, F)> = weights
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, w)| *w > F::zero())
        .collect();
    ranked.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("finite weights")
            .then_with(|| vocab.feature(a.0).cmp(vocab.feature(b.0)))
    });
    ranked.truncate(k);
    Ok(ranked
        .into_iter()
        .map(|(col, weight)| FeatureWeight {
            feature: vocab.feature(col).to_string(),
            weight,
        })
        .collect())
}
