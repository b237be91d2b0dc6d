//! Bagging and Random Subspace ensembles over plain, feature-selected or
//! cascade members, with majority-vote and probability-averaging fusion.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cascade::{train_cascade, CascadeModel, CascadeSpec};
use crate::data::{bootstrap_sample, project, random_subspace, DataTable, FeatureMask, Label};
use crate::error::{Error, Result};
use crate::feature_select::{train_selected, GaConfig, SelectedModel};
use crate::learners::{check_arity, ClassDist, Classifier, LearnerSpec, TrainedModel};
use crate::rng::derive_seed;

/// What a single model (or ensemble member) is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MemberSpec {
    Learner { learner: LearnerSpec },
    /// The learner runs on the CFS + GA selected attributes.
    Selected { learner: LearnerSpec, ga: GaConfig },
    Cascade(CascadeSpec),
}

impl MemberSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            MemberSpec::Learner { learner } => learner.validate(),
            MemberSpec::Selected { learner, ga } => {
                learner.validate()?;
                ga.validate()
            }
            MemberSpec::Cascade(spec) => spec.validate(),
        }
    }

    pub fn train(&self, table: &DataTable, seed: u64) -> Result<Member> {
        Ok(match self {
            MemberSpec::Learner { learner } => Member::Learner(learner.with_seed(derive_seed(seed, &[1])).train(table)?),
            MemberSpec::Selected { learner, ga } => Member::Selected(train_selected(learner, ga, table, seed)?),
            MemberSpec::Cascade(spec) => Member::Cascade(train_cascade(spec, table, seed)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Member {
    Learner(TrainedModel),
    Selected(SelectedModel),
    Cascade(CascadeModel),
}

impl Member {
    /// Attribute subsets chosen by feature selection inside this member, in
    /// the coordinates of the member's own training table.
    pub fn selected_mask(&self) -> Option<&FeatureMask> {
        match self {
            Member::Learner(_) => None,
            Member::Selected(m) => Some(&m.mask),
            Member::Cascade(m) => Some(&m.base_mask),
        }
    }
}

impl Classifier for Member {
    fn n_attributes(&self) -> usize {
        match self {
            Member::Learner(m) => m.n_attributes(),
            Member::Selected(m) => m.n_attributes(),
            Member::Cascade(m) => m.n_attributes(),
        }
    }

    fn predict_distribution(&self, instance: &[f64]) -> Result<ClassDist> {
        match self {
            Member::Learner(m) => m.predict_distribution(instance),
            Member::Selected(m) => m.predict_distribution(instance),
            Member::Cascade(m) => m.predict_distribution(instance),
        }
    }
}

impl fmt::Display for Member {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Member::Learner(m) => write!(f, "{m}"),
            Member::Selected(m) => write!(f, "{m}"),
            Member::Cascade(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Construction {
    Bagging,
    RandomSubspace { fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    /// Vote shares of the members' labels.
    #[default]
    MajorityVote,
    AverageProbability,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    pub model: Member,
    /// Attributes of the ensemble input this member sees.
    pub mask: FeatureMask,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub construction: Construction,
    pub fusion: Fusion,
    pub members: Vec<EnsembleMember>,
    pub n_attributes: usize,
}

/// Trains `n` members, each on a bootstrap sample of `table`. Member `i`
/// draws its sample and trains with seeds derived from `(seed, i)`.
pub fn train_bagging(spec: &MemberSpec, table: &DataTable, n: usize, seed: u64) -> Result<EnsembleModel> {
    if n == 0 {
        return Err(Error::invalid("an ensemble needs at least one member"));
    }
    spec.validate()?;
    let full = FeatureMask::full(table.n_attributes())?;
    let members = (0..n)
        .into_par_iter()
        .map(|i| {
            let member_seed = derive_seed(seed, &[i as u64]);
            let sample = bootstrap_sample(table, derive_seed(member_seed, &[0]))?;
            Ok(EnsembleMember {
                model: spec.train(&sample, derive_seed(member_seed, &[1]))?,
                mask: full.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel {
        construction: Construction::Bagging,
        fusion: Fusion::MajorityVote,
        members,
        n_attributes: table.n_attributes(),
    })
}

/// Trains `n` members on all rows of `table`, each restricted to a random
/// attribute subset of the given fraction.
pub fn train_random_subspace(
    spec: &MemberSpec,
    table: &DataTable,
    n: usize,
    fraction: f64,
    seed: u64,
) -> Result<EnsembleModel> {
    if n == 0 {
        return Err(Error::invalid("an ensemble needs at least one member"));
    }
    spec.validate()?;
    let members = (0..n)
        .into_par_iter()
        .map(|i| {
            let member_seed = derive_seed(seed, &[i as u64]);
            let mask = random_subspace(table.schema(), fraction, derive_seed(member_seed, &[0]))?;
            let view = project(table, &mask)?;
            Ok(EnsembleMember {
                model: spec.train(&view, derive_seed(member_seed, &[1]))?,
                mask,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnsembleModel {
        construction: Construction::RandomSubspace { fraction },
        fusion: Fusion::MajorityVote,
        members,
        n_attributes: table.n_attributes(),
    })
}

impl EnsembleModel {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Each member's distribution on its own masked view of `instance`.
    pub fn member_distributions(&self, instance: &[f64]) -> Result<Vec<ClassDist>> {
        check_arity(self.n_attributes, instance)?;
        self.members
            .iter()
            .map(|m| {
                if m.mask.is_full(self.n_attributes) {
                    m.model.predict_distribution(instance)
                } else {
                    m.model.predict_distribution(&m.mask.select(instance))
                }
            })
            .collect()
    }

    pub fn member_labels(&self, instance: &[f64]) -> Result<Vec<Label>> {
        Ok(self.member_distributions(instance)?.iter().map(ClassDist::label).collect())
    }
}

/// Combines member distributions. Majority vote returns vote shares, so
/// an even split predicts negative through the usual tie rule.
pub fn fuse_distributions(members: &[ClassDist], fusion: Fusion) -> Result<ClassDist> {
    if members.is_empty() {
        return Err(Error::invalid("cannot fuse an empty ensemble"));
    }
    let n = members.len() as f64;
    Ok(match fusion {
        Fusion::MajorityVote => {
            let pos = members.iter().filter(|d| d.label() == Label::Positive).count() as f64;
            ClassDist([(n - pos) / n, pos / n])
        }
        Fusion::AverageProbability => {
            // Summing in sorted order makes the result independent of member order.
            let sorted_sum = |class: usize| {
                let mut v: Vec<f64> = members.iter().map(|d| d.0[class]).collect();
                v.sort_by(f64::total_cmp);
                v.iter().sum::<f64>()
            };
            ClassDist([sorted_sum(0) / n, sorted_sum(1) / n])
        }
    })
}

pub fn fuse(ensemble: &EnsembleModel, instance: &[f64], fusion: Fusion) -> Result<ClassDist> {
    fuse_distributions(&ensemble.member_distributions(instance)?, fusion)
}

impl Classifier for EnsembleModel {
    fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    fn predict_distribution(&self, instance: &[f64]) -> Result<ClassDist> {
        fuse(self, instance, self.fusion)
    }
}

impl fmt::Display for EnsembleModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.construction {
            Construction::Bagging => writeln!(f, "Bagging, {} members, {:?}", self.len(), self.fusion)?,
            Construction::RandomSubspace { fraction } => writeln!(
                f,
                "Random Subspace (fraction {fraction}), {} members, {:?}",
                self.len(),
                self.fusion
            )?,
        }
        for (i, m) in self.members.iter().enumerate() {
            writeln!(f, "--- member {i}, attributes {}", m.mask)?;
            write!(f, "{}", m.model)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::*;
    use crate::data::Label::{Negative as N, Positive as P};
    use proptest::prelude::*;

    fn table(seed: u64, n: usize) -> DataTable {
        let mut s = seed ^ 0x5DEECE66D;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 40) as f64 / (1u64 << 24) as f64
        };
        let rows: Vec<_> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..5).map(|_| (next() * 10.0).floor()).collect();
                let pos = x[0] + x[2] + 3.0 * next() > 10.0;
                (x, if pos { P } else { N })
            })
            .collect();
        numeric_table(5, &rows)
    }

    fn specs() -> Vec<MemberSpec> {
        vec![
            MemberSpec::Learner { learner: LearnerSpec::c45() },
            MemberSpec::Learner { learner: LearnerSpec::ripper() },
            MemberSpec::Cascade(CascadeSpec::new(LearnerSpec::c45())),
            MemberSpec::Cascade(CascadeSpec::new(LearnerSpec::ripper())),
        ]
    }

    #[test]
    fn fusion_examples() {
        let votes = [ClassDist([0.1, 0.9]), ClassDist([0.4, 0.6]), ClassDist([0.7, 0.3])];
        let d = fuse_distributions(&votes, Fusion::MajorityVote).unwrap();
        assert_eq!(d.0, [1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!(d.label(), P);
        let avg = fuse_distributions(&[ClassDist([0.6, 0.4]), ClassDist([0.2, 0.8])], Fusion::AverageProbability).unwrap();
        assert!((avg.0[0] - 0.4).abs() < 1e-15 && (avg.0[1] - 0.6).abs() < 1e-15);
        let tie = fuse_distributions(&[ClassDist([0.1, 0.9]), ClassDist([0.9, 0.1])], Fusion::MajorityVote).unwrap();
        assert_eq!(tie.label(), N);
        assert!(fuse_distributions(&[], Fusion::MajorityVote).is_err());
    }

    #[test]
    fn singleton_ensembles_match_their_member() {
        let t = table(1, 60);
        for spec in specs() {
            let bag = train_bagging(&spec, &t, 1, 9).unwrap();
            let rs = train_random_subspace(&spec, &t, 1, 1.0, 9).unwrap();
            assert!(rs.members[0].mask.is_full(5));
            let direct = spec.train(&t, derive_seed(derive_seed(9, &[0]), &[1])).unwrap();
            assert_eq!(rs.members[0].model, direct);
            for row in t.rows() {
                for fusion in [Fusion::MajorityVote, Fusion::AverageProbability] {
                    for e in [&bag, &rs] {
                        let member = e.members[0].model.predict_distribution(row).unwrap();
                        let fused = fuse(e, row, fusion).unwrap();
                        assert_eq!(fused.label(), member.label());
                        if fusion == Fusion::AverageProbability {
                            assert_eq!(fused, member);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn subspace_members_see_only_their_mask() {
        let t = table(2, 50);
        for spec in specs() {
            let e = train_random_subspace(&spec, &t, 6, 0.5, 4).unwrap();
            for m in &e.members {
                assert_eq!(m.mask.len(), 3);
                assert_eq!(m.model.n_attributes(), 3);
            }
            for row in t.rows().take(10) {
                let before = e.member_distributions(row).unwrap();
                for (k, m) in e.members.iter().enumerate() {
                    let mut perturbed = row.to_vec();
                    for a in 0..5 {
                        if !m.mask.contains(a) {
                            perturbed[a] = -1000.0 - a as f64;
                        }
                    }
                    assert_eq!(e.member_distributions(&perturbed).unwrap()[k], before[k]);
                }
            }
        }
    }

    #[test]
    fn members_use_expected_rows_and_are_reproducible() {
        let t = table(3, 40);
        let spec = MemberSpec::Learner { learner: LearnerSpec::c45() };
        let a = train_bagging(&spec, &t, 5, 21).unwrap();
        let b = train_bagging(&spec, &t, 5, 21).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.len(), 5);
        assert!(train_bagging(&spec, &t, 0, 1).is_err());
        assert!(train_random_subspace(&spec, &t, 2, 0.0, 1).is_err());
        // Member 3 alone, rebuilt from its derived seeds.
        let m3 = derive_seed(21, &[3]);
        let sample = bootstrap_sample(&t, derive_seed(m3, &[0])).unwrap();
        assert_eq!(a.members[3].model, spec.train(&sample, derive_seed(m3, &[1])).unwrap());
    }

    fn dists() -> impl Strategy<Value = Vec<ClassDist>> {
        prop::collection::vec((0u32..=1000).prop_map(|p| {
            let p = p as f64 / 1000.0;
            ClassDist([1.0 - p, p])
        }), 1..31)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn fusion_matches_loop_oracle(members in dists(), rotate in 0usize..31) {
            let n = members.len() as f64;
            let mut avg = [0.0; 2];
            let mut votes = [0.0; 2];
            for d in &members {
                avg[0] += d.0[0] / n;
                avg[1] += d.0[1] / n;
                let pos = d.0[1] > d.0[0];
                votes[usize::from(pos)] += 1.0;
            }
            let a = fuse_distributions(&members, Fusion::AverageProbability).unwrap();
            let v = fuse_distributions(&members, Fusion::MajorityVote).unwrap();
            prop_assert!((a.0[0] - avg[0]).abs() < 1e-12 && (a.0[1] - avg[1]).abs() < 1e-12);
            prop_assert_eq!(v.0, [votes[0] / n, votes[1] / n]);
            for d in [a, v] {
                prop_assert!(d.0[0] >= 0.0 && d.0[1] >= 0.0);
                prop_assert!((d.0[0] + d.0[1] - 1.0).abs() < 1e-9);
            }
            let mut permuted = members.clone();
            permuted.rotate_left(rotate % members.len());
            prop_assert_eq!(fuse_distributions(&permuted, Fusion::MajorityVote).unwrap(), v);
            prop_assert_eq!(fuse_distributions(&permuted, Fusion::AverageProbability).unwrap(), a);
            if members.len() % 2 == 1 {
                prop_assert!(v.0[1] != 0.5);
            }
        }
    }
}
