//! Classifiers evaluated against the ground truth: the 1-NN output of the
//! engine, the passive k-NN baseline, and a few fixed references.

use crate::error::{invalid, Error, Result};
use crate::neighbors::NeighborIndex;
use crate::problem::{Label, Oracle, Pool, Problem};

/// Anything that maps a point to a label.
pub trait Classifier: Sync {
    fn classify(&self, x: &[f64]) -> Result<Label>;
}

impl<F> Classifier for F
where
    F: Fn(&[f64]) -> Label + Sync,
{
    fn classify(&self, x: &[f64]) -> Result<Label> {
        Ok(self(x))
    }
}

/// Predicts the same label everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstantClassifier(pub Label);

impl Classifier for ConstantClassifier {
    fn classify(&self, _x: &[f64]) -> Result<Label> {
        Ok(self.0)
    }
}

/// The Bayes classifier `1{eta >= 1/2}` of a problem.
#[derive(Debug, Clone, Copy)]
pub struct BayesClassifier<'a>(pub &'a dyn Problem);

impl Classifier for BayesClassifier<'_> {
    fn classify(&self, x: &[f64]) -> Result<Label> {
        Ok(self.0.bayes(x))
    }
}

/// A pool point with the label the engine inferred for it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LabeledPoint {
    pub index: usize,
    pub label: Label,
}

/// 1-NN classifier over a labeled subset of the pool. Ties go to the
/// support point with the lower pool index.
#[derive(Debug, Clone)]
pub struct OneNNClassifier {
    dim: usize,
    support: Vec<LabeledPoint>,
    index: Option<NeighborIndex>,
}

impl OneNNClassifier {
    pub fn new(pool: &Pool, support: &[LabeledPoint]) -> Result<Self> {
        let mut support = support.to_vec();
        support.sort_by_key(|p| p.index);
        support.dedup_by_key(|p| p.index);
        if let Some(bad) = support.iter().find(|p| p.index >= pool.len()) {
            return Err(Error::IndexOutOfRange {
                index: bad.index,
                len: pool.len(),
            });
        }
        // Support is sorted by pool index, so the index's local tie rule
        // coincides with the pool-index tie rule.
        let index = (!support.is_empty()).then(|| {
            let ids: Vec<usize> = support.iter().map(|p| p.index).collect();
            NeighborIndex::build(pool.points().select(&ids))
        });
        Ok(Self {
            dim: pool.dim(),
            support,
            index,
        })
    }

    pub fn support(&self) -> &[LabeledPoint] {
        &self.support
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        let index = self.index.as_ref().ok_or(Error::EmptySupport)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.support[index.nearest(x)?.index].label)
    }
}

impl Classifier for OneNNClassifier {
    fn classify(&self, x: &[f64]) -> Result<Label> {
        self.predict(x)
    }
}

/// Neighbor count for the passive baseline: `ceil(n^(2 alpha/(2 alpha + d)))`
/// when the smoothness exponent is known, `ceil(sqrt(n))` otherwise.
pub fn default_k(n: usize, alpha: Option<f64>, dim: usize) -> usize {
    let n_f = n as f64;
    let k = match alpha {
        Some(a) => n_f.powf(2.0 * a / (2.0 * a + dim as f64)).ceil(),
        None => n_f.sqrt().ceil(),
    };
    (k as usize).clamp(1, n.max(1))
}

/// Passive k-NN baseline: labels the first `n` pool points (a uniform random
/// subset, the pool being i.i.d.) and votes among the `k` nearest of them.
#[derive(Debug, Clone)]
pub struct PassiveKnn {
    k: usize,
    labels: Vec<Label>,
    index: NeighborIndex,
}

impl PassiveKnn {
    pub fn train(oracle: &mut Oracle<'_>, n: usize, k: usize) -> Result<Self> {
        let pool = oracle.pool();
        if k == 0 || k > n {
            return Err(invalid("k", format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        if n > pool.len() {
            return Err(invalid("n", format!("budget {n} exceeds pool size {}", pool.len())));
        }
        let labels = (0..n).map(|i| oracle.query(i)).collect::<Result<Vec<_>>>()?;
        let ids: Vec<usize> = (0..n).collect();
        Ok(Self {
            k,
            labels,
            index: NeighborIndex::build(pool.points().select(&ids)),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Majority vote among the `k` nearest labeled points, ties to 1.
    pub fn predict(&self, x: &[f64]) -> Result<Label> {
        let neighbors = self.index.knn(x, self.k)?;
        let ones: usize = neighbors.iter().map(|n| self.labels[n.index] as usize).sum();
        Ok(Label::from(2 * ones >= neighbors.len()))
    }
}

impl Classifier for PassiveKnn {
    fn classify(&self, x: &[f64]) -> Result<Label> {
        self.predict(x)
    }
}
