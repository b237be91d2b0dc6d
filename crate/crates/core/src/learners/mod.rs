//! Naive Bayes, a C4.5 decision tree and a RIPPER rule list behind one
//! train / predict-distribution interface.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{DataTable, Label, Schema};
use crate::error::{Error, Result};

pub mod c45;
pub mod naive_bayes;
pub mod ripper;

pub use c45::{c45_gain_ratio, C45Params, DecisionTree, Split, SplitScore};
pub use naive_bayes::{NaiveBayesModel, NaiveBayesParams};
pub use ripper::{ripper_grow_prune, Condition, Rule, RuleList, RipperParams};

/// A `[negative, positive]` probability pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassDist(pub [f64; 2]);

impl ClassDist {
    pub const UNIFORM: ClassDist = ClassDist([0.5, 0.5]);

    /// Normalizes non-negative scores; all-zero scores give the uniform pair.
    pub fn from_scores(neg: f64, pos: f64) -> ClassDist {
        let total = neg + pos;
        if total > 0.0 && total.is_finite() {
            ClassDist([neg / total, pos / total])
        } else {
            ClassDist::UNIFORM
        }
    }

    /// Laplace-smoothed class frequencies: `(n_c + 1) / (N + 2)`.
    pub fn laplace(counts: [f64; 2]) -> ClassDist {
        let total = counts[0] + counts[1] + 2.0;
        ClassDist([(counts[0] + 1.0) / total, (counts[1] + 1.0) / total])
    }

    pub fn negative(&self) -> f64 {
        self.0[0]
    }

    pub fn positive(&self) -> f64 {
        self.0[1]
    }

    pub fn prob(&self, label: Label) -> f64 {
        self.0[label.index()]
    }

    /// Arg-max label; an exact tie predicts negative.
    pub fn label(&self) -> Label {
        if self.0[1] > self.0[0] {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// Anything that maps an instance to a class distribution.
pub trait Classifier {
    /// Number of cells an instance must have.
    fn n_attributes(&self) -> usize;

    fn predict_distribution(&self, instance: &[f64]) -> Result<ClassDist>;

    fn predict_label(&self, instance: &[f64]) -> Result<Label> {
        self.predict_distribution(instance).map(|d| d.label())
    }
}

pub(crate) fn check_arity(expected: usize, instance: &[f64]) -> Result<()> {
    if instance.len() != expected {
        return Err(Error::mismatch(format!(
            "instance has {} cells, model expects {expected}",
            instance.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NaiveBayes,
    C45,
    Ripper,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::C45 => "c45",
            Algorithm::Ripper => "ripper",
        }
    }
}

/// A learning algorithm together with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum LearnerSpec {
    NaiveBayes(NaiveBayesParams),
    C45(C45Params),
    Ripper(RipperParams),
}

impl LearnerSpec {
    pub fn naive_bayes() -> Self {
        LearnerSpec::NaiveBayes(NaiveBayesParams::default())
    }

    pub fn c45() -> Self {
        LearnerSpec::C45(C45Params::default())
    }

    pub fn ripper() -> Self {
        LearnerSpec::Ripper(RipperParams::default())
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            LearnerSpec::NaiveBayes(_) => Algorithm::NaiveBayes,
            LearnerSpec::C45(_) => Algorithm::C45,
            LearnerSpec::Ripper(_) => Algorithm::Ripper,
        }
    }

    /// Replaces the seed of randomized learners (RIPPER's grow/prune
    /// split). Deterministic learners are returned unchanged.
    pub fn with_seed(&self, seed: u64) -> LearnerSpec {
        match self {
            LearnerSpec::Ripper(p) => LearnerSpec::Ripper(RipperParams { seed, ..p.clone() }),
            other => other.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LearnerSpec::NaiveBayes(p) => p.validate(),
            LearnerSpec::C45(p) => p.validate(),
            LearnerSpec::Ripper(p) => p.validate(),
        }
    }

    /// Fits the learner. Single-class tables are legal; a table without
    /// rows or without attributes is not.
    pub fn train(&self, table: &DataTable) -> Result<TrainedModel> {
        train(self, table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    NaiveBayes(NaiveBayesModel),
    C45(DecisionTree),
    Ripper(RuleList),
}

/// A fitted learner bound to the schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    schema: Arc<Schema>,
    body: ModelBody,
}

impl TrainedModel {
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn body(&self) -> &ModelBody {
        &self.body
    }

    pub fn algorithm(&self) -> Algorithm {
        match self.body {
            ModelBody::NaiveBayes(_) => Algorithm::NaiveBayes,
            ModelBody::C45(_) => Algorithm::C45,
            ModelBody::Ripper(_) => Algorithm::Ripper,
        }
    }

    pub fn schema_fingerprint(&self) -> u64 {
        self.schema.fingerprint()
    }

    /// Errors unless `table` has the schema this model was trained on.
    pub fn check_table(&self, table: &DataTable) -> Result<()> {
        if table.schema().fingerprint() != self.schema.fingerprint() {
            return Err(Error::mismatch("table schema differs from the training schema"));
        }
        Ok(())
    }

    pub fn predict_row(&self, table: &DataTable, row: usize) -> Result<ClassDist> {
        self.check_table(table)?;
        self.predict_distribution(table.row(row))
    }
}

impl Classifier for TrainedModel {
    fn n_attributes(&self) -> usize {
        self.schema.len()
    }

    fn predict_distribution(&self, instance: &[f64]) -> Result<ClassDist> {
        check_arity(self.schema.len(), instance)?;
        Ok(match &self.body {
            ModelBody::NaiveBayes(m) => m.predict(instance),
            ModelBody::C45(m) => m.predict(instance),
            ModelBody::Ripper(m) => m.predict(instance),
        })
    }
}

impl fmt::Display for TrainedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            ModelBody::NaiveBayes(m) => m.render(&self.schema, f),
            ModelBody::C45(m) => m.render(&self.schema, f),
            ModelBody::Ripper(m) => m.render(&self.schema, f),
        }
    }
}

pub fn train(spec: &LearnerSpec, table: &DataTable) -> Result<TrainedModel> {
    spec.validate()?;
    if table.is_empty() {
        return Err(Error::invalid("cannot train on an empty table"));
    }
    if table.n_attributes() == 0 {
        return Err(Error::invalid("cannot train on a table without attributes"));
    }
    let body = match spec {
        LearnerSpec::NaiveBayes(p) => ModelBody::NaiveBayes(NaiveBayesModel::fit(p, table)),
        LearnerSpec::C45(p) => ModelBody::C45(DecisionTree::fit(p, table)),
        LearnerSpec::Ripper(p) => ModelBody::Ripper(RuleList::fit(p, table)),
    };
    Ok(TrainedModel {
        schema: Arc::clone(table.schema_arc()),
        body,
    })
}

/// Entropy in bits of a weighted count vector.
pub(crate) fn entropy(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::*;
    use Label::{Negative as N, Positive as P};

    #[test]
    fn dist_helpers() {
        assert_eq!(ClassDist::laplace([3.0, 1.0]).0, [4.0 / 6.0, 2.0 / 6.0]);
        assert_eq!(ClassDist::laplace([164.0, 139.0]).0, [165.0 / 305.0, 140.0 / 305.0]);
        assert_eq!(ClassDist::UNIFORM.label(), N);
        assert_eq!(ClassDist::from_scores(0.0, 0.0), ClassDist::UNIFORM);
        assert_eq!(ClassDist([0.4, 0.6]).label(), P);
    }

    #[test]
    fn empty_or_attributeless_tables_rejected() {
        let t = nominal_table(&[2], &[(vec![0], N)]);
        let empty = t.select_rows(&[]);
        for spec in [LearnerSpec::naive_bayes(), LearnerSpec::c45(), LearnerSpec::ripper()] {
            assert!(spec.train(&empty).is_err());
        }
        let none = numeric_table(0, &[(vec![], N)]);
        assert!(LearnerSpec::c45().train(&none).is_err());
    }

    #[test]
    fn schema_mismatch_detected() {
        let t = nominal_table(&[2], &[(vec![0], N), (vec![1], P)]);
        let other = nominal_table(&[3], &[(vec![0], N)]);
        let m = LearnerSpec::c45().train(&t).unwrap();
        assert!(m.predict_distribution(&[0.0, 1.0]).is_err());
        assert!(m.predict_row(&other, 0).is_err());
        assert!(m.predict_row(&t, 0).is_ok());
    }

    #[test]
    fn single_class_tables_are_legal() {
        let t = nominal_table(&[2], &[(vec![0], P), (vec![1], P), (vec![1], P)]);
        for spec in [LearnerSpec::naive_bayes(), LearnerSpec::c45(), LearnerSpec::ripper()] {
            let m = spec.train(&t).unwrap();
            let d = m.predict_distribution(&[0.0]).unwrap();
            assert_eq!(d.label(), P, "{:?}", spec.algorithm());
        }
    }
}
