//! Two-level cascade: a Naive Bayes base learner on CFS-selected attributes
//! feeds its positive-class probability, as one extra numeric attribute, to
//! a meta learner trained on the original attributes.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::data::{project, DataTable, FeatureMask};
use crate::error::{Error, Result};
use crate::feature_select::{select_features, GaConfig};
use crate::learners::{check_arity, Algorithm, ClassDist, Classifier, LearnerSpec, TrainedModel};
use crate::rng::derive_seed;

/// Name of the attribute added by [`phi_extend`].
pub const P_POS: &str = "p_pos";

/// Which original attributes the meta learner sees next to `p_pos`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetaFeatures {
    #[default]
    All,
    /// Only the attributes selected for the base learner.
    Selected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub base: LearnerSpec,
    pub meta: LearnerSpec,
    #[serde(default)]
    pub ga: GaConfig,
    #[serde(default)]
    pub meta_features: MetaFeatures,
}

impl CascadeSpec {
    pub fn new(meta: LearnerSpec) -> Self {
        CascadeSpec {
            base: LearnerSpec::naive_bayes(),
            meta,
            ga: GaConfig::default(),
            meta_features: MetaFeatures::All,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.base.algorithm() != Algorithm::NaiveBayes {
            return Err(Error::Config("cascade base learner must be naive_bayes".into()));
        }
        if self.meta.algorithm() == Algorithm::NaiveBayes {
            return Err(Error::Config("cascade meta learner must be c45 or ripper".into()));
        }
        self.base.validate()?;
        self.meta.validate()?;
        self.ga.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeModel {
    pub base_mask: FeatureMask,
    pub base_model: TrainedModel,
    /// Original attributes passed to the meta learner, before `p_pos`.
    pub meta_mask: FeatureMask,
    pub meta_model: TrainedModel,
    pub n_attributes: usize,
}

/// Appends the base model's positive-class probability, computed on the
/// `base_mask` view of each row, as a numeric column named `p_pos`.
pub fn phi_extend(table: &DataTable, base_model: &TrainedModel, base_mask: &FeatureMask) -> Result<DataTable> {
    base_mask.check(table.n_attributes())?;
    let projected = table.schema().project(base_mask)?;
    if projected.fingerprint() != base_model.schema_fingerprint() {
        return Err(Error::mismatch("base model was not trained on the masked view of this schema"));
    }
    let column = p_pos_column(table, base_model, base_mask)?;
    table.with_numeric_column(P_POS, &column)
}

fn p_pos_column(table: &DataTable, base_model: &TrainedModel, base_mask: &FeatureMask) -> Result<Vec<f64>> {
    table
        .rows()
        .map(|row| base_model.predict_distribution(&base_mask.select(row)).map(|d| d.positive()))
        .collect()
}

/// Fits the cascade: CFS + GA on `table`, Naive Bayes on the selection, then
/// the meta learner on `table` extended with resubstitution `p_pos` values.
pub fn train_cascade(spec: &CascadeSpec, table: &DataTable, seed: u64) -> Result<CascadeModel> {
    spec.validate()?;
    let ga = GaConfig {
        seed: derive_seed(seed, &[0]),
        ..spec.ga.clone()
    };
    let base_mask = select_features(table, &ga)?;
    let base_model = spec.base.train(&project(table, &base_mask)?)?;
    let meta_mask = match spec.meta_features {
        MetaFeatures::All => FeatureMask::full(table.n_attributes())?,
        MetaFeatures::Selected => base_mask.clone(),
    };
    let column = p_pos_column(table, &base_model, &base_mask)?;
    let train1 = project(table, &meta_mask)?.with_numeric_column(P_POS, &column)?;
    let meta_model = spec.meta.with_seed(derive_seed(seed, &[1])).train(&train1)?;
    Ok(CascadeModel {
        base_mask,
        base_model,
        meta_mask,
        meta_model,
        n_attributes: table.n_attributes(),
    })
}

impl CascadeModel {
    pub fn p_pos(&self, instance: &[f64]) -> Result<f64> {
        check_arity(self.n_attributes, instance)?;
        Ok(self.base_model.predict_distribution(&self.base_mask.select(instance))?.positive())
    }

    /// The meta-level instance: the meta view of `instance` followed by
    /// `p_pos`.
    pub fn extend(&self, instance: &[f64]) -> Result<Vec<f64>> {
        let p = self.p_pos(instance)?;
        let mut extended = self.meta_mask.select(instance);
        extended.push(p);
        Ok(extended)
    }
}

impl Classifier for CascadeModel {
    fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    fn predict_distribution(&self, instance: &[f64]) -> Result<ClassDist> {
        self.meta_model.predict_distribution(&self.extend(instance)?)
    }
}

pub fn predict_cascade(model: &CascadeModel, instance: &[f64]) -> Result<ClassDist> {
    model.predict_distribution(instance)
}

impl fmt::Display for CascadeModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Cascade")?;
        writeln!(f, "base attributes {}", self.base_mask)?;
        write!(f, "{}", self.base_model)?;
        writeln!(f, "meta attributes {} + {P_POS}", self.meta_mask)?;
        write!(f, "{}", self.meta_model)
    }
}
