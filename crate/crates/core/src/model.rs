//! Method specifications, trained models and their on-disk format.
//!
//! Method names follow `[Bg-|RS-][C-]<RPR|C4.5|NB>`: an optional Bagging or
//! Random Subspace wrapper, an optional cascade marker, then the learner.
//! Plain `NB` runs Naive Bayes on CFS + GA selected attributes, and a
//! cascade always uses that selected Naive Bayes as its base level.

use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeSpec, MetaFeatures};
use crate::data::{DataTable, FeatureMask};
use crate::ensemble::{train_bagging, train_random_subspace, EnsembleModel, Member, MemberSpec};
use crate::error::{Error, Result};
use crate::feature_select::GaConfig;
use crate::learners::{Algorithm, C45Params, ClassDist, Classifier, LearnerSpec, NaiveBayesParams, RipperParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Wrapper {
    None,
    Bagging { n_members: usize },
    RandomSubspace { n_members: usize, fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    pub wrapper: Wrapper,
    pub member: MemberSpec,
}

/// Hyperparameters shared by all methods of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub naive_bayes: NaiveBayesParams,
    pub c45: C45Params,
    pub ripper: RipperParams,
    pub ga: GaConfig,
    pub meta_features: MetaFeatures,
    pub n_members: usize,
    pub subspace_fraction: f64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            naive_bayes: NaiveBayesParams::default(),
            c45: C45Params::default(),
            ripper: RipperParams::default(),
            ga: GaConfig::default(),
            meta_features: MetaFeatures::All,
            n_members: 30,
            subspace_fraction: 0.5,
        }
    }
}

impl Hyperparameters {
    pub fn learner(&self, algorithm: Algorithm) -> LearnerSpec {
        match algorithm {
            Algorithm::NaiveBayes => LearnerSpec::NaiveBayes(self.naive_bayes.clone()),
            Algorithm::C45 => LearnerSpec::C45(self.c45.clone()),
            Algorithm::Ripper => LearnerSpec::Ripper(self.ripper.clone()),
        }
    }
}

impl MethodSpec {
    /// Builds the method named `name` from shared hyperparameters.
    pub fn parse(name: &str, hp: &Hyperparameters) -> Result<MethodSpec> {
        let bad = || Error::Config(format!("unknown method name {name:?}; expected [Bg-|RS-][C-]<RPR|C4.5|NB>"));
        let (wrapper, rest) = if let Some(r) = name.strip_prefix("Bg-") {
            (Wrapper::Bagging { n_members: hp.n_members }, r)
        } else if let Some(r) = name.strip_prefix("RS-") {
            (
                Wrapper::RandomSubspace {
                    n_members: hp.n_members,
                    fraction: hp.subspace_fraction,
                },
                r,
            )
        } else {
            (Wrapper::None, name)
        };
        let (cascade, rest) = match rest.strip_prefix("C-") {
            Some(r) => (true, r),
            None => (false, rest),
        };
        let algorithm = match rest {
            "RPR" => Algorithm::Ripper,
            "C4.5" => Algorithm::C45,
            "NB" => Algorithm::NaiveBayes,
            _ => return Err(bad()),
        };
        let member = match (cascade, algorithm) {
            (true, Algorithm::NaiveBayes) => return Err(bad()),
            (true, meta) => MemberSpec::Cascade(CascadeSpec {
                base: hp.learner(Algorithm::NaiveBayes),
                meta: hp.learner(meta),
                ga: hp.ga.clone(),
                meta_features: hp.meta_features,
            }),
            (false, Algorithm::NaiveBayes) => MemberSpec::Selected {
                learner: hp.learner(Algorithm::NaiveBayes),
                ga: hp.ga.clone(),
            },
            (false, learner) => MemberSpec::Learner {
                learner: hp.learner(learner),
            },
        };
        let spec = MethodSpec {
            name: name.to_string(),
            wrapper,
            member,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.wrapper {
            Wrapper::None => {}
            Wrapper::Bagging { n_members } | Wrapper::RandomSubspace { n_members, .. } if n_members == 0 => {
                return Err(Error::Config(format!("{}: n_members must be >= 1", self.name)));
            }
            Wrapper::RandomSubspace { fraction, .. } if !(fraction > 0.0 && fraction <= 1.0) => {
                return Err(Error::Config(format!("{}: subspace fraction must be in (0, 1]", self.name)));
            }
            _ => {}
        }
        self.member.validate()
    }

    pub fn is_ensemble(&self) -> bool {
        self.wrapper != Wrapper::None
    }

    pub fn train(&self, table: &DataTable, seed: u64) -> Result<Model> {
        Ok(match self.wrapper {
            Wrapper::None => Model::Single(self.member.train(table, seed)?),
            Wrapper::Bagging { n_members } => Model::Ensemble(train_bagging(&self.member, table, n_members, seed)?),
            Wrapper::RandomSubspace { n_members, fraction } => {
                Model::Ensemble(train_random_subspace(&self.member, table, n_members, fraction, seed)?)
            }
        })
    }
}

/// The thirteen methods of the standard comparison.
pub const STANDARD_METHODS: [&str; 13] = [
    "RPR", "C4.5", "NB", "C-RPR", "C-C4.5", "Bg-RPR", "Bg-C4.5", "Bg-C-RPR", "Bg-C-C4.5", "RS-RPR", "RS-C4.5",
    "RS-C-RPR", "RS-C-C4.5",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Model {
    Single(Member),
    Ensemble(EnsembleModel),
}

/// A selection mask inside a trained model, for audit logs.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskRecord {
    pub member: Option<usize>,
    /// Attributes the member sees, in original coordinates.
    pub view: FeatureMask,
    /// Attributes chosen by feature selection, in original coordinates.
    pub selected: Option<FeatureMask>,
}

impl Model {
    pub fn masks(&self) -> Result<Vec<MaskRecord>> {
        match self {
            Model::Single(m) => Ok(vec![MaskRecord {
                member: None,
                view: FeatureMask::full(m.n_attributes())?,
                selected: m.selected_mask().cloned(),
            }]),
            Model::Ensemble(e) => e
                .members
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    Ok(MaskRecord {
                        member: Some(i),
                        view: m.mask.clone(),
                        selected: m.model.selected_mask().map(|s| m.mask.compose(s)).transpose()?,
                    })
                })
                .collect(),
        }
    }
}

impl Classifier for Model {
    fn n_attributes(&self) -> usize {
        match self {
            Model::Single(m) => m.n_attributes(),
            Model::Ensemble(e) => e.n_attributes(),
        }
    }

    fn predict_distribution(&self, instance: &[f64]) -> Result<ClassDist> {
        match self {
            Model::Single(m) => m.predict_distribution(instance),
            Model::Ensemble(e) => e.predict_distribution(instance),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Single(m) => write!(f, "{m}"),
            Model::Ensemble(e) => write!(f, "{e}"),
        }
    }
}

pub const MODEL_FORMAT: &str = "casgen-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<M> {
    format: String,
    version: u32,
    method: Option<String>,
    model: M,
}

/// Writes `model` as versioned JSON.
pub fn save_model<W: Write>(model: &Model, method: Option<&str>, writer: W) -> Result<()> {
    let envelope = Envelope {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        method: method.map(str::to_string),
        model,
    };
    serde_json::to_writer_pretty(writer, &envelope).map_err(|e| Error::ModelFormat(e.to_string()))
}

/// Reads a model written by [`save_model`], returning it with its method
/// name if one was recorded.
pub fn load_model<R: Read>(reader: R) -> Result<(Model, Option<String>)> {
    let value: serde_json::Value = serde_json::from_reader(reader).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if value.get("format").and_then(|f| f.as_str()) != Some(MODEL_FORMAT) {
        return Err(Error::ModelFormat(format!("not a {MODEL_FORMAT} file")));
    }
    let version = value.get("version").and_then(|v| v.as_u64());
    if version != Some(MODEL_VERSION as u64) {
        return Err(Error::ModelFormat(format!("unsupported model version {version:?}")));
    }
    let envelope: Envelope<Model> = serde_json::from_value(value).map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok((envelope.model, envelope.method))
}
