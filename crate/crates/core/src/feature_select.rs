//! Correlation-based feature subset selection searched by a genetic
//! algorithm.
//!
//! Correlations are symmetric uncertainties computed on discretized values:
//! nominal attributes use their categories, numeric attributes are cut into
//! ten equal-frequency bins, and a missing cell is a category of its own.
//! A subset of `k` attributes scores
//! `k * mean(r_cf) / sqrt(k + k (k - 1) * mean(r_ff))`.

use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{is_missing, project, AttributeKind, DataTable, FeatureMask};
use crate::error::{Error, Result};
use crate::learners::{check_arity, ClassDist, Classifier, LearnerSpec, TrainedModel};
use crate::rng::{derive_seed, rng_from_seed};

pub const DEFAULT_BINS: usize = 10;

/// Discretization and correlation statistics of one training table.
#[derive(Debug, Clone, PartialEq)]
pub struct CfsCache {
    cut_points: Vec<Vec<f64>>,
    class_corr: Vec<f64>,
    /// Row-major `n x n` attribute correlation matrix.
    corr: Vec<f64>,
    n: usize,
}

/// Equal-frequency cut points over the known values of a numeric column.
/// Runs of equal values are never split, so fewer cuts may result.
pub fn equal_frequency_cuts(values: &[f64], bins: usize) -> Vec<f64> {
    let mut known: Vec<f64> = values.iter().copied().filter(|v| !is_missing(*v)).collect();
    known.sort_by(f64::total_cmp);
    let n = known.len();
    let mut cuts: Vec<f64> = Vec::new();
    for b in 1..bins {
        let idx = b * n / bins;
        if idx == 0 || idx >= n || known[idx - 1] == known[idx] {
            continue;
        }
        let cut = (known[idx - 1] + known[idx]) / 2.0;
        if cuts.last().map_or(true, |&last| cut > last) {
            cuts.push(cut);
        }
    }
    cuts
}

/// Bin of `v` given ascending cut points; values equal to a cut fall
/// below it and missing values get bin `cuts.len() + 1`.
pub fn bin_of(cuts: &[f64], v: f64) -> usize {
    if is_missing(v) {
        cuts.len() + 1
    } else {
        cuts.partition_point(|&c| c < v)
    }
}

fn entropy_of(counts: impl Iterator<Item = f64>, total: f64) -> f64 {
    counts
        .filter(|&c| c > 0.0)
        .map(|c| {
            let p = c / total;
            -p * p.log2()
        })
        .sum()
}

/// Symmetric uncertainty of two coded columns with row weights; zero when
/// both columns are constant.
pub fn symmetric_uncertainty(x: &[usize], y: &[usize], weights: &[f64]) -> f64 {
    let kx = x.iter().max().map_or(0, |m| m + 1);
    let ky = y.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![0.0; kx * ky];
    let mut px = vec![0.0; kx];
    let mut py = vec![0.0; ky];
    let mut total = 0.0;
    for ((&a, &b), &w) in x.iter().zip(y).zip(weights) {
        joint[a * ky + b] += w;
        px[a] += w;
        py[b] += w;
        total += w;
    }
    if total <= 0.0 {
        return 0.0;
    }
    let hx = entropy_of(px.into_iter(), total);
    let hy = entropy_of(py.into_iter(), total);
    let hxy = entropy_of(joint.into_iter(), total);
    let denom = hx + hy;
    if denom <= 0.0 {
        return 0.0;
    }
    (2.0 * (hx + hy - hxy) / denom).clamp(0.0, 1.0)
}

impl CfsCache {
    pub fn build(table: &DataTable) -> Result<Self> {
        Self::with_bins(table, DEFAULT_BINS)
    }

    pub fn with_bins(table: &DataTable, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::invalid("CFS discretization needs at least 2 bins"));
        }
        let n = table.n_attributes();
        if n == 0 {
            return Err(Error::invalid("CFS needs at least one attribute"));
        }
        let rows = table.n_rows();
        let mut cut_points = Vec::with_capacity(n);
        let mut codes = Vec::with_capacity(n);
        for (a, attr) in table.schema().attributes().iter().enumerate() {
            let column: Vec<f64> = (0..rows).map(|i| table.value(i, a)).collect();
            match &attr.kind {
                AttributeKind::Nominal(domain) => {
                    cut_points.push(Vec::new());
                    codes.push(
                        column
                            .iter()
                            .map(|&v| if is_missing(v) { domain.len() } else { v as usize })
                            .collect::<Vec<_>>(),
                    );
                }
                AttributeKind::Numeric => {
                    let cuts = equal_frequency_cuts(&column, bins);
                    codes.push(column.iter().map(|&v| bin_of(&cuts, v)).collect());
                    cut_points.push(cuts);
                }
            }
        }
        let class: Vec<usize> = table.labels().iter().map(|l| l.index()).collect();
        let w = table.weights();
        let class_corr = codes.iter().map(|c| symmetric_uncertainty(c, &class, w)).collect();
        let mut corr = vec![0.0; n * n];
        for i in 0..n {
            corr[i * n + i] = 1.0;
            for j in i + 1..n {
                let su = symmetric_uncertainty(&codes[i], &codes[j], w);
                corr[i * n + j] = su;
                corr[j * n + i] = su;
            }
        }
        Ok(CfsCache {
            cut_points,
            class_corr,
            corr,
            n,
        })
    }

    pub fn n_attributes(&self) -> usize {
        self.n
    }

    /// Cut points of attribute `a`; empty for nominal attributes.
    pub fn cut_points(&self, a: usize) -> &[f64] {
        &self.cut_points[a]
    }

    pub fn class_correlation(&self, a: usize) -> f64 {
        self.class_corr[a]
    }

    pub fn correlation(&self, a: usize, b: usize) -> f64 {
        self.corr[a * self.n + b]
    }

    fn merit_of(&self, indices: impl Iterator<Item = usize> + Clone) -> f64 {
        let k = indices.clone().count() as f64;
        let rcf: f64 = indices.clone().map(|a| self.class_corr[a]).sum::<f64>() / k;
        let mut pair_sum = 0.0;
        let idx: Vec<usize> = indices.collect();
        for (x, &a) in idx.iter().enumerate() {
            for &b in &idx[x + 1..] {
                pair_sum += self.corr[a * self.n + b];
            }
        }
        let rff = if k > 1.0 { pair_sum / (k * (k - 1.0) / 2.0) } else { 0.0 };
        let denom = (k + k * (k - 1.0) * rff).sqrt();
        if denom <= 1e-12 {
            0.0
        } else {
            k * rcf / denom
        }
    }

    fn bits_merit(&self, bits: &[bool]) -> f64 {
        if !bits.iter().any(|&b| b) {
            return 0.0;
        }
        self.merit_of(bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i))
    }
}

pub fn cfs_merit(cache: &CfsCache, subset: &FeatureMask) -> Result<f64> {
    if subset.is_empty() {
        return Err(Error::invalid("CFS merit of an empty subset"));
    }
    subset.check(cache.n)?;
    Ok(cache.merit_of(subset.indices().iter().copied()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaConfig {
    pub population: usize,
    pub generations: usize,
    pub crossover: f64,
    /// Per-bit flip probability.
    pub mutation: f64,
    /// Best individuals copied unchanged into the next generation.
    pub elitism: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 20,
            generations: 20,
            crossover: 0.6,
            mutation: 0.033,
            elitism: 1,
            seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config(format!("ga.population = {} must be >= 2", self.population)));
        }
        for (name, p) in [("crossover", self.crossover), ("mutation", self.mutation)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("ga.{name} = {p} must be in [0, 1]")));
            }
        }
        if self.elitism > self.population {
            return Err(Error::Config("ga.elitism must not exceed ga.population".into()));
        }
        Ok(())
    }
}

/// Searches attribute subsets with a random initial population.
pub fn ga_search(cache: &CfsCache, config: &GaConfig) -> Result<FeatureMask> {
    ga_search_from(cache, config, Vec::new())
}

/// Like [`ga_search`], but the first individuals of the initial population
/// are `seeded`; the rest are random.
pub fn ga_search_from(cache: &CfsCache, config: &GaConfig, seeded: Vec<Vec<bool>>) -> Result<FeatureMask> {
    config.validate()?;
    let n = cache.n;
    if seeded.iter().any(|s| s.len() != n) {
        return Err(Error::invalid("seeded individual length differs from attribute count"));
    }
    let mut rng = rng_from_seed(config.seed);
    let repair = |bits: &mut Vec<bool>, rng: &mut crate::rng::Rng| {
        if !bits.iter().any(|&b| b) {
            bits[rng.gen_range(0..n as u64) as usize] = true;
        }
    };

    let mut population: Vec<Vec<bool>> = seeded.into_iter().take(config.population).collect();
    for bits in population.iter_mut() {
        repair(bits, &mut rng);
    }
    while population.len() < config.population {
        let mut bits: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        repair(&mut bits, &mut rng);
        population.push(bits);
    }
    let mut fitness: Vec<f64> = population.iter().map(|b| cache.bits_merit(b)).collect();
    let (mut best, mut best_fit) = (population[0].clone(), fitness[0]);
    let track = |pop: &[Vec<bool>], fit: &[f64], best: &mut Vec<bool>, best_fit: &mut f64| {
        for (b, &f) in pop.iter().zip(fit) {
            if f > *best_fit {
                *best_fit = f;
                *best = b.clone();
            }
        }
    };
    track(&population, &fitness, &mut best, &mut best_fit);

    for _ in 0..config.generations {
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
        let mut next: Vec<Vec<bool>> = order[..config.elitism].iter().map(|&i| population[i].clone()).collect();
        let total: f64 = fitness.iter().sum();
        let pick = |rng: &mut crate::rng::Rng| -> usize {
            if total <= 0.0 {
                return rng.gen_range(0..population.len() as u64) as usize;
            }
            let mut r = rng.gen::<f64>() * total;
            for (i, &f) in fitness.iter().enumerate() {
                r -= f;
                if r < 0.0 {
                    return i;
                }
            }
            population.len() - 1
        };
        while next.len() < config.population {
            let mut a = population[pick(&mut rng)].clone();
            let mut b = population[pick(&mut rng)].clone();
            if n > 1 && rng.gen_bool(config.crossover) {
                let point = rng.gen_range(1..n as u64) as usize;
                for i in point..n {
                    std::mem::swap(&mut a[i], &mut b[i]);
                }
            }
            for child in [&mut a, &mut b] {
                if config.mutation > 0.0 {
                    for bit in child.iter_mut() {
                        if rng.gen_bool(config.mutation) {
                            *bit = !*bit;
                        }
                    }
                }
                repair(child, &mut rng);
            }
            next.push(a);
            if next.len() < config.population {
                next.push(b);
            }
        }
        population = next;
        fitness = population.iter().map(|b| cache.bits_merit(b)).collect();
        track(&population, &fitness, &mut best, &mut best_fit);
    }
    FeatureMask::from_bits(&best)
}

/// Evaluates every non-empty subset; ties keep the first in binary counting
/// order. Limited to 20 attributes.
pub fn exhaustive_search(cache: &CfsCache) -> Result<FeatureMask> {
    let n = cache.n;
    if n > 20 {
        return Err(Error::invalid(format!("exhaustive search over {n} attributes")));
    }
    let mut best = (0u32, f64::NEG_INFINITY);
    for code in 1u32..(1 << n) {
        let m = cache.merit_of((0..n).filter(|i| code >> i & 1 == 1));
        if m > best.1 {
            best = (code, m);
        }
    }
    FeatureMask::new((0..n).filter(|i| best.0 >> i & 1 == 1).collect(), n)
}

/// CFS + GA on a training table.
pub fn select_features(table: &DataTable, config: &GaConfig) -> Result<FeatureMask> {
    let cache = CfsCache::build(table)?;
    ga_search(&cache, config)
}

/// A learner trained on the CFS + GA selected attributes of its table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedModel {
    pub mask: FeatureMask,
    pub model: TrainedModel,
    pub n_attributes: usize,
}

/// Selects attributes on `table` with a GA seeded from `seed`, then trains
/// `learner` on the projection.
pub fn train_selected(learner: &LearnerSpec, ga: &GaConfig, table: &DataTable, seed: u64) -> Result<SelectedModel> {
    let ga = GaConfig {
        seed: derive_seed(seed, &[0]),
        ..ga.clone()
    };
    let mask = select_features(table, &ga)?;
    let model = learner.with_seed(derive_seed(seed, &[1])).train(&project(table, &mask)?)?;
    Ok(SelectedModel {
        mask,
        model,
        n_attributes: table.n_attributes(),
    })
}

impl Classifier for SelectedModel {
    fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    fn predict_distribution(&self, instance: &[f64]) -> Result<ClassDist> {
        check_arity(self.n_attributes, instance)?;
        self.model.predict_distribution(&self.mask.select(instance))
    }
}

impl fmt::Display for SelectedModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "selected attributes {}", self.mask)?;
        write!(f, "{}", self.model)
    }
}
