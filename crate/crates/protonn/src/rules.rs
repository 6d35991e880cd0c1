//! The prototype classifiers and their fitting procedures.
//!
//! A fitted rule is an ordered prototype set with paired labels and the raw
//! per-class vote counts behind each label. Four rule kinds share the
//! representation:
//!
//! * `optinet`  — prototypes form a gamma-net of an unlabeled pool; each
//!   prototype takes the majority label of the training samples that fell in
//!   its Voronoi cell.
//! * `protonn`  — prototypes drawn uniformly from the training set, labeled by
//!   Voronoi-cell votes.
//! * `protoknn` — prototypes drawn uniformly, labeled by the majority among
//!   their k nearest training samples.
//! * `knn`      — stores the training set whole together with k; prediction is
//!   a k-NN vote (k = 1 gives the 1-NN rule).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{k_nearest, nearest_sq, LabeledDataset, Label, Point};
use crate::netting::build_gamma_net;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    OptiNet,
    ProtoNN,
    ProtoKNN,
    KNN,
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            RuleKind::OptiNet => "optinet",
            RuleKind::ProtoNN => "protonn",
            RuleKind::ProtoKNN => "protoknn",
            RuleKind::KNN => "knn",
        };
        f.write_str(s)
    }
}

/// A fitted prototype rule. Serializes to JSON with full-precision floats,
/// so a round trip is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeRule {
    pub kind: RuleKind,
    pub d: usize,
    #[serde(rename = "M")]
    pub n_classes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Pool size for optinet, number of drawn prototypes for the random
    /// rules, n for knn.
    pub m: usize,
    #[serde(default)]
    pub seed: u64,
    /// Number of prototypes whose Voronoi cell received no training votes
    /// and therefore carry the fallback label 0.
    #[serde(default)]
    pub empty_cells: usize,
    pub prototypes: Vec<Point>,
    pub labels: Vec<Label>,
    pub counts: Vec<Vec<u64>>,
}

impl PrototypeRule {
    pub fn len(&self) -> usize {
        self.prototypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prototypes.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 {
            return Err(Error::NoClasses);
        }
        if self.prototypes.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if self.prototypes.len() != self.labels.len()
            || self.prototypes.len() != self.counts.len()
        {
            return Err(Error::invalid(format!(
                "rule with {} prototypes, {} labels, {} count rows",
                self.prototypes.len(),
                self.labels.len(),
                self.counts.len()
            )));
        }
        for p in &self.prototypes {
            if p.dim() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    got: p.dim(),
                });
            }
        }
        for (&l, votes) in self.labels.iter().zip(&self.counts) {
            if l.index() >= self.n_classes {
                return Err(Error::LabelOutOfRange {
                    label: l.0,
                    n_classes: self.n_classes,
                });
            }
            if votes.len() != self.n_classes {
                return Err(Error::invalid(format!(
                    "count row of length {} for {} classes",
                    votes.len(),
                    self.n_classes
                )));
            }
            if votes.iter().any(|&v| v > 0) {
                let (expect, _) = majority_label(votes)?;
                if expect != l {
                    return Err(Error::invalid(format!(
                        "label {l} inconsistent with vote counts"
                    )));
                }
            }
        }
        Ok(())
    }

    /// 1-NN prediction over the prototype set: the label paired with the
    /// nearest prototype, ties toward the smaller index.
    pub fn classify(&self, x: &Point) -> Result<Label> {
        if x.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.dim(),
            });
        }
        if self.prototypes.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let (idx, _) = nearest_sq(x.coords(), &self.prototypes);
        Ok(self.labels[idx])
    }

    /// Prediction with the rule's own semantics: a k-NN vote for `knn` rules,
    /// otherwise the 1-NN `classify`.
    pub fn predict(&self, x: &Point) -> Result<Label> {
        match self.kind {
            RuleKind::KNN => {
                let k = self.k.unwrap_or(1).min(self.prototypes.len());
                let ids = k_nearest(x, &self.prototypes, k)?;
                let mut votes = vec![0u64; self.n_classes];
                for i in ids {
                    votes[self.labels[i].index()] += 1;
                }
                Ok(majority_label(&votes)?.0)
            }
            _ => self.classify(x),
        }
    }

    /// Fraction of mislabeled points in a test set.
    pub fn test_error(&self, test: &LabeledDataset) -> Result<f64> {
        if test.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        let mut wrong = 0usize;
        for i in 0..test.n() {
            if self.predict(test.point(i))? != test.label(i) {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / test.n() as f64)
    }

    /// The rule restricted to the prototypes at `keep` (original order
    /// preserved by the caller); counts move with their prototypes.
    pub(crate) fn take(&self, keep: &[usize]) -> PrototypeRule {
        PrototypeRule {
            kind: self.kind,
            d: self.d,
            n_classes: self.n_classes,
            gamma: self.gamma,
            k: self.k,
            m: self.m,
            seed: self.seed,
            empty_cells: self.empty_cells,
            prototypes: keep.iter().map(|&i| self.prototypes[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
            counts: keep.iter().map(|&i| self.counts[i].clone()).collect(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rule: PrototypeRule = serde_json::from_str(s)?;
        rule.validate()?;
        Ok(rule)
    }
}

/// Smallest class index achieving the maximum count. All-zero votes return
/// class 0 together with an `empty` flag for the caller to surface.
pub fn majority_label(votes: &[u64]) -> Result<(Label, bool)> {
    if votes.is_empty() {
        return Err(Error::NoClasses);
    }
    let mut best = 0usize;
    for (j, &v) in votes.iter().enumerate().skip(1) {
        if v > votes[best] {
            best = j;
        }
    }
    let empty = votes[best] == 0;
    Ok((Label(best as u32), empty))
}

/// Voronoi-cell vote tally: training sample `i` votes for its nearest
/// prototype with class `Y_i`.
fn voronoi_votes(
    train: &LabeledDataset,
    prototypes: &[Point],
) -> (Vec<Vec<u64>>, Vec<Label>, usize) {
    let mut counts = vec![vec![0u64; train.n_classes()]; prototypes.len()];
    for i in 0..train.n() {
        let (cell, _) = nearest_sq(train.point(i).coords(), prototypes);
        counts[cell][train.label(i).index()] += 1;
    }
    let mut labels = Vec::with_capacity(prototypes.len());
    let mut empty_cells = 0usize;
    for votes in &counts {
        let (label, empty) = majority_label(votes).expect("n_classes >= 1");
        if empty {
            empty_cells += 1;
        }
        labels.push(label);
    }
    (counts, labels, empty_cells)
}

fn check_fit_inputs(train: &LabeledDataset, pool: &[Point]) -> Result<()> {
    if train.is_empty() || pool.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    for p in pool {
        if p.dim() != train.d() {
            return Err(Error::DimensionMismatch {
                expected: train.d(),
                got: p.dim(),
            });
        }
    }
    Ok(())
}

/// Fits the gamma-net rule: prototypes are the net members of `pool`, labels
/// are Voronoi-cell majority votes of the training labels.
pub fn fit_optinet(
    train: &LabeledDataset,
    pool: &[Point],
    gamma: f64,
) -> Result<PrototypeRule> {
    check_fit_inputs(train, pool)?;
    let net = build_gamma_net(pool, gamma)?;
    let prototypes = net.members(pool);
    let (counts, labels, empty_cells) = voronoi_votes(train, &prototypes);
    Ok(PrototypeRule {
        kind: RuleKind::OptiNet,
        d: train.d(),
        n_classes: train.n_classes(),
        gamma: Some(gamma),
        k: None,
        m: pool.len(),
        seed: 0,
        empty_cells,
        prototypes,
        labels,
        counts,
    })
}

/// Draws `m` distinct training indices uniformly without replacement.
fn draw_prototypes(train: &LabeledDataset, m: usize, seed: u64) -> Result<Vec<Point>> {
    if train.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if m == 0 || m > train.n() {
        return Err(Error::MOutOfRange { m, n: train.n() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, train.n(), m);
    Ok(picked.iter().map(|i| train.point(i).clone()).collect())
}

/// Random prototypes labeled by Voronoi-cell votes.
pub fn fit_protonn(train: &LabeledDataset, m: usize, seed: u64) -> Result<PrototypeRule> {
    let prototypes = draw_prototypes(train, m, seed)?;
    let (counts, labels, empty_cells) = voronoi_votes(train, &prototypes);
    Ok(PrototypeRule {
        kind: RuleKind::ProtoNN,
        d: train.d(),
        n_classes: train.n_classes(),
        gamma: None,
        k: None,
        m,
        seed,
        empty_cells,
        prototypes,
        labels,
        counts,
    })
}

/// Random prototypes labeled by the vote of their k nearest training samples.
pub fn fit_protoknn(
    train: &LabeledDataset,
    m: usize,
    k: usize,
    seed: u64,
) -> Result<PrototypeRule> {
    if k == 0 || k > train.n() {
        return Err(Error::KOutOfRange { k, n: train.n() });
    }
    let prototypes = draw_prototypes(train, m, seed)?;
    let mut counts = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for p in &prototypes {
        let ids = k_nearest(p, train.points(), k)?;
        let mut votes = vec![0u64; train.n_classes()];
        for i in ids {
            votes[train.label(i).index()] += 1;
        }
        let (label, _) = majority_label(&votes)?;
        labels.push(label);
        counts.push(votes);
    }
    Ok(PrototypeRule {
        kind: RuleKind::ProtoKNN,
        d: train.d(),
        n_classes: train.n_classes(),
        gamma: None,
        k: Some(k),
        m,
        seed,
        empty_cells: 0,
        prototypes,
        labels,
        counts,
    })
}

/// Stores the training set whole as a k-NN rule (k = 1 is 1-NN). Each point
/// carries a one-hot count row for its own label.
pub fn fit_knn(train: &LabeledDataset, k: usize) -> Result<PrototypeRule> {
    if train.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if k == 0 || k > train.n() {
        return Err(Error::KOutOfRange { k, n: train.n() });
    }
    let counts = train
        .labels()
        .iter()
        .map(|&l| {
            let mut row = vec![0u64; train.n_classes()];
            row[l.index()] = 1;
            row
        })
        .collect();
    Ok(PrototypeRule {
        kind: RuleKind::KNN,
        d: train.d(),
        n_classes: train.n_classes(),
        gamma: None,
        k: Some(k),
        m: train.n(),
        seed: 0,
        empty_cells: 0,
        prototypes: train.points().to_vec(),
        labels: train.labels().to_vec(),
        counts,
    })
}

/// One-off k-NN vote against a dataset, without building a rule.
pub fn knn_classify(train: &LabeledDataset, k: usize, x: &Point) -> Result<Label> {
    if k == 0 || k > train.n() {
        return Err(Error::KOutOfRange { k, n: train.n() });
    }
    let ids = k_nearest(x, train.points(), k)?;
    let mut votes = vec![0u64; train.n_classes()];
    for i in ids {
        votes[train.label(i).index()] += 1;
    }
    Ok(majority_label(&votes)?.0)
}

/// Smoothness/noise parameters that drive the margin and pool-size schedules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// Hoelder exponent in (0, 1].
    pub beta: f64,
    /// Margin (noise-tail) exponent, positive.
    pub alpha: f64,
    pub d: usize,
}

impl Schedule {
    pub fn new(beta: f64, alpha: f64, d: usize) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::invalid(format!("beta must be in (0,1], got {beta}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
        }
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        Ok(Schedule { beta, alpha, d })
    }

    /// Margin schedule `gamma_n = n^(-1/(2 beta + d))`.
    pub fn gamma(&self, n: usize) -> f64 {
        (n as f64).powf(-1.0 / (2.0 * self.beta + self.d as f64))
    }

    /// Pool-size schedule `m_n = ceil(log(gamma_n^(-beta (1+alpha))) / gamma_n^d)`,
    /// clamped into `[1, n]`.
    pub fn pool_size(&self, n: usize) -> usize {
        let gamma = self.gamma(n);
        let raw =
            (self.beta * (1.0 + self.alpha) * (1.0 / gamma).ln()) / gamma.powi(self.d as i32);
        (raw.ceil().max(1.0) as usize).min(n)
    }

    /// Neighbor-count schedule `k_n = round(n^(2 beta / (2 beta + d)))`,
    /// clamped into `[1, n]`.
    pub fn k(&self, n: usize) -> usize {
        let k = (n as f64)
            .powf(2.0 * self.beta / (2.0 * self.beta + self.d as f64))
            .round() as usize;
        k.clamp(1, n)
    }

    /// Prototype count `m = max(1, floor(n/k))` used by protoknn.
    pub fn protoknn_m(n: usize, k: usize) -> usize {
        (n / k).max(1)
    }
}
