//! Naive Bayes with Laplace-smoothed nominal likelihoods and one Gaussian per
//! class for numeric attributes.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{is_missing, AttributeKind, DataTable, Schema};
use crate::error::{Error, Result};
use crate::learners::ClassDist;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NaiveBayesParams {
    /// Pseudo-count added to every class and every nominal category.
    pub laplace: f64,
    /// Minimum variance as a fraction of the squared attribute range.
    pub variance_floor: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams {
            laplace: 1.0,
            variance_floor: 1e-6,
        }
    }
}

impl NaiveBayesParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.laplace.is_finite() && self.laplace >= 0.0) {
            return Err(Error::Config(format!("naive_bayes.laplace = {} must be >= 0", self.laplace)));
        }
        if !(self.variance_floor.is_finite() && self.variance_floor >= 0.0) {
            return Err(Error::Config(format!(
                "naive_bayes.variance_floor = {} must be >= 0",
                self.variance_floor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FeatureModel {
    /// `probs[class][category]`
    Nominal { probs: [Vec<f64>; 2] },
    Gaussian { mean: [f64; 2], variance: [f64; 2] },
    /// Constant in training, or unobserved for one of the classes.
    Ignored,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub priors: [f64; 2],
    pub features: Vec<FeatureModel>,
}

impl NaiveBayesModel {
    pub(crate) fn fit(params: &NaiveBayesParams, table: &DataTable) -> Self {
        let counts = table.class_counts();
        let total = counts[0] + counts[1];
        let a = params.laplace;
        let priors = [
            (counts[0] + a) / (total + 2.0 * a),
            (counts[1] + a) / (total + 2.0 * a),
        ];
        let priors = if priors.iter().all(|p| p.is_finite()) { priors } else { [0.5, 0.5] };

        let features = table
            .schema()
            .attributes()
            .iter()
            .enumerate()
            .map(|(j, attr)| match &attr.kind {
                AttributeKind::Nominal(domain) => {
                    let k = domain.len();
                    let mut freq = [vec![0.0; k], vec![0.0; k]];
                    for i in 0..table.n_rows() {
                        let v = table.value(i, j);
                        if !is_missing(v) {
                            freq[table.label(i).index()][v as usize] += table.weight(i);
                        }
                    }
                    let probs = freq.map(|f| {
                        let seen: f64 = f.iter().sum();
                        let denom = seen + a * k as f64;
                        if denom > 0.0 {
                            f.iter().map(|c| (c + a) / denom).collect()
                        } else {
                            vec![1.0 / k as f64; k]
                        }
                    });
                    FeatureModel::Nominal { probs }
                }
                AttributeKind::Numeric => gaussian(table, j, params.variance_floor),
            })
            .collect();
        NaiveBayesModel { priors, features }
    }

    pub(crate) fn predict(&self, instance: &[f64]) -> ClassDist {
        let mut log_score = self.priors.map(f64::ln);
        for (feature, &v) in self.features.iter().zip(instance) {
            if is_missing(v) {
                continue;
            }
            match feature {
                FeatureModel::Nominal { probs } => {
                    for c in 0..2 {
                        log_score[c] += probs[c].get(v as usize).copied().unwrap_or(0.0).ln();
                    }
                }
                FeatureModel::Gaussian { mean, variance } => {
                    for c in 0..2 {
                        let d = v - mean[c];
                        log_score[c] += -0.5 * (2.0 * PI * variance[c]).ln() - d * d / (2.0 * variance[c]);
                    }
                }
                FeatureModel::Ignored => {}
            }
        }
        let max = log_score[0].max(log_score[1]);
        if max == f64::NEG_INFINITY || max.is_nan() {
            return ClassDist::UNIFORM;
        }
        let e = log_score.map(|s| (s - max).exp());
        ClassDist::from_scores(e[0], e[1])
    }

    pub(crate) fn render(&self, schema: &Schema, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [neg, pos] = schema.class_labels();
        writeln!(f, "Naive Bayes")?;
        writeln!(f, "  prior  {neg}: {:.5}  {pos}: {:.5}", self.priors[0], self.priors[1])?;
        for (attr, feature) in schema.attributes().iter().zip(&self.features) {
            match feature {
                FeatureModel::Nominal { probs } => {
                    writeln!(f, "  {} (nominal)", attr.name)?;
                    if let AttributeKind::Nominal(domain) = &attr.kind {
                        for (v, value) in domain.iter().enumerate() {
                            writeln!(f, "    {value:>12}  {:.5}  {:.5}", probs[0][v], probs[1][v])?;
                        }
                    }
                }
                FeatureModel::Gaussian { mean, variance } => writeln!(
                    f,
                    "  {} (gaussian)  {neg}: mean {:.5} sd {:.5}  {pos}: mean {:.5} sd {:.5}",
                    attr.name,
                    mean[0],
                    variance[0].sqrt(),
                    mean[1],
                    variance[1].sqrt()
                )?,
                FeatureModel::Ignored => writeln!(f, "  {} (ignored)", attr.name)?,
            }
        }
        Ok(())
    }
}

fn gaussian(table: &DataTable, j: usize, floor_fraction: f64) -> FeatureModel {
    let mut sum_w = [0.0; 2];
    let mut sum_x = [0.0; 2];
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..table.n_rows() {
        let v = table.value(i, j);
        if is_missing(v) {
            continue;
        }
        let c = table.label(i).index();
        sum_w[c] += table.weight(i);
        sum_x[c] += table.weight(i) * v;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if sum_w[0] <= 0.0 || sum_w[1] <= 0.0 {
        return FeatureModel::Ignored;
    }
    let mean = [sum_x[0] / sum_w[0], sum_x[1] / sum_w[1]];
    let mut sq = [0.0; 2];
    for i in 0..table.n_rows() {
        let v = table.value(i, j);
        if !is_missing(v) {
            let c = table.label(i).index();
            sq[c] += table.weight(i) * (v - mean[c]).powi(2);
        }
    }
    let floor = floor_fraction * (hi - lo).powi(2);
    let variance = [(sq[0] / sum_w[0]).max(floor), (sq[1] / sum_w[1]).max(floor)];
    if variance.iter().any(|&v| v <= 0.0) {
        return FeatureModel::Ignored;
    }
    FeatureModel::Gaussian { mean, variance }
}
