//! C4.5 decision tree.
//!
//! Splits are chosen by gain ratio among the candidates whose information
//! gain is at least the mean gain of all valid candidates. Nominal
//! attributes split multiway and are tested at most once per path; numeric
//! attributes split in two at the midpoint between adjacent observed values.
//! Each split needs at least two branches holding `min_leaf` weight.
//!
//! Pruning is pessimistic error pruning with subtree replacement: the
//! estimated error of a node is the upper bound of the binomial confidence
//! interval at level `confidence` on its training error, and a subtree is
//! replaced by a leaf when the leaf estimate does not exceed the summed
//! leaf estimates of the subtree by more than 0.1.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{is_missing, AttributeKind, DataTable, Schema};
use crate::error::{Error, Result};
use crate::learners::{entropy, ClassDist};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct C45Params {
    /// Confidence factor of the pessimistic error estimate.
    pub confidence: f64,
    /// Minimum instance weight in at least two branches of a split.
    pub min_leaf: f64,
    pub prune: bool,
    /// Laplace-smooth leaf distributions.
    pub laplace: bool,
}

impl Default for C45Params {
    fn default() -> Self {
        C45Params {
            confidence: 0.25,
            min_leaf: 2.0,
            prune: true,
            laplace: true,
        }
    }
}

impl C45Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence <= 0.5) {
            return Err(Error::Config(format!("c45.confidence = {} must be in (0, 0.5]", self.confidence)));
        }
        if !(self.min_leaf.is_finite() && self.min_leaf > 0.0) {
            return Err(Error::Config(format!("c45.min_leaf = {} must be > 0", self.min_leaf)));
        }
        Ok(())
    }
}

/// A candidate test on one attribute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Split {
    /// One branch per category.
    Nominal,
    /// `value <= threshold` versus `value > threshold`.
    Threshold(f64),
}

/// Information gain and split information of a candidate, in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitScore {
    pub gain: f64,
    pub split_info: f64,
}

const SPLIT_INFO_EPS: f64 = 1e-12;

impl SplitScore {
    /// Gain ratio, or `None` when the split information is about zero.
    pub fn ratio(&self) -> Option<f64> {
        (self.split_info > SPLIT_INFO_EPS).then(|| self.gain / self.split_info)
    }

    /// Gain ratio if the candidate passes the guard against splits whose
    /// gain is below the mean gain of all candidates; `None` marks it
    /// ineligible.
    pub fn eligible_ratio(&self, mean_gain: f64) -> Option<f64> {
        if self.gain + 1e-12 < mean_gain {
            return None;
        }
        self.ratio()
    }
}

/// Gain and split information of `split` on `attribute`, over the rows of
/// `table` whose value is known. Gain is scaled by the known fraction.
pub fn c45_gain_ratio(table: &DataTable, attribute: usize, split: Split) -> Result<SplitScore> {
    if attribute >= table.n_attributes() {
        return Err(Error::invalid(format!("attribute {attribute} out of range")));
    }
    let attr = table.schema().attribute(attribute);
    let n_branches = match (&attr.kind, split) {
        (AttributeKind::Nominal(domain), Split::Nominal) => domain.len(),
        (AttributeKind::Numeric, Split::Threshold(t)) if t.is_finite() => 2,
        _ => return Err(Error::invalid(format!("split {split:?} does not fit attribute `{}`", attr.name))),
    };
    let mut branch_counts = vec![[0.0; 2]; n_branches];
    let mut total = 0.0;
    for i in 0..table.n_rows() {
        let w = table.weight(i);
        total += w;
        let v = table.value(i, attribute);
        if is_missing(v) {
            continue;
        }
        let b = match split {
            Split::Nominal => v as usize,
            Split::Threshold(t) => usize::from(v > t),
        };
        branch_counts[b][table.label(i).index()] += w;
    }
    Ok(score_branches(&branch_counts, total))
}

fn score_branches(branches: &[[f64; 2]], total: f64) -> SplitScore {
    let mut known = [0.0; 2];
    for b in branches {
        known[0] += b[0];
        known[1] += b[1];
    }
    let known_total = known[0] + known[1];
    if known_total <= 0.0 || total <= 0.0 {
        return SplitScore { gain: 0.0, split_info: 0.0 };
    }
    let mut children = 0.0;
    let mut split_info = 0.0;
    for b in branches {
        let w = b[0] + b[1];
        if w > 0.0 {
            let p = w / known_total;
            children += p * entropy(b);
            split_info -= p * p.log2();
        }
    }
    let gain = (known_total / total) * (entropy(&known) - children);
    SplitScore {
        gain: gain.max(0.0),
        split_info,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        counts: [f64; 2],
    },
    Nominal {
        attribute: usize,
        counts: [f64; 2],
        children: Vec<Node>,
        /// Branch taken by missing values.
        fallback: usize,
    },
    Threshold {
        attribute: usize,
        threshold: f64,
        counts: [f64; 2],
        le: Box<Node>,
        gt: Box<Node>,
        /// Whether missing values go to the `<=` branch.
        missing_le: bool,
    },
}

impl Node {
    pub fn counts(&self) -> [f64; 2] {
        match self {
            Node::Leaf { counts } | Node::Nominal { counts, .. } | Node::Threshold { counts, .. } => *counts,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Nominal { children, .. } => 1 + children.iter().map(Node::depth).max().unwrap_or(0),
            Node::Threshold { le, gt, .. } => 1 + le.depth().max(gt.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Nominal { children, .. } => children.iter().map(Node::n_leaves).sum(),
            Node::Threshold { le, gt, .. } => le.n_leaves() + gt.n_leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
    pub laplace: bool,
}

impl DecisionTree {
    pub(crate) fn fit(params: &C45Params, table: &DataTable) -> Self {
        let rows: Vec<usize> = (0..table.n_rows()).collect();
        let mut used = vec![false; table.n_attributes()];
        let mut root = grow(table, &rows, &mut used, params);
        if params.prune {
            let z = Normal::standard().inverse_cdf(1.0 - params.confidence);
            let cf = params.confidence;
            root = prune(root, cf, z).0;
        }
        DecisionTree {
            root,
            laplace: params.laplace,
        }
    }

    fn leaf_dist(&self, counts: [f64; 2]) -> ClassDist {
        if self.laplace {
            ClassDist::laplace(counts)
        } else {
            ClassDist::from_scores(counts[0], counts[1])
        }
    }

    pub(crate) fn predict(&self, instance: &[f64]) -> ClassDist {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { counts } => return self.leaf_dist(*counts),
                Node::Nominal {
                    attribute,
                    counts,
                    children,
                    fallback,
                } => {
                    let v = instance[*attribute];
                    let b = if is_missing(v) { *fallback } else { v as usize };
                    let Some(child) = children.get(b) else {
                        return self.leaf_dist(*counts);
                    };
                    // Branches that received no training data answer with
                    // the parent's distribution.
                    let c = child.counts();
                    if c[0] + c[1] <= 0.0 {
                        return self.leaf_dist(*counts);
                    }
                    node = child;
                }
                Node::Threshold {
                    attribute,
                    threshold,
                    le,
                    gt,
                    missing_le,
                    ..
                } => {
                    let v = instance[*attribute];
                    let go_le = if is_missing(v) { *missing_le } else { v <= *threshold };
                    node = if go_le { le } else { gt };
                }
            }
        }
    }

    pub(crate) fn render(&self, schema: &Schema, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "C4.5 tree ({} leaves, depth {})",
            self.root.n_leaves(),
            self.root.depth()
        )?;
        render_node(&self.root, schema, 0, f)
    }
}

fn render_leaf(counts: [f64; 2], schema: &Schema) -> String {
    let label = if counts[1] > counts[0] { 1 } else { 0 };
    format!(
        "{} ({}/{})",
        schema.class_labels()[label],
        counts[0] + counts[1],
        counts[1 - label]
    )
}

fn render_node(node: &Node, schema: &Schema, depth: usize, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let indent = "|   ".repeat(depth);
    match node {
        Node::Leaf { counts } => writeln!(f, "{indent}: {}", render_leaf(*counts, schema)),
        Node::Nominal { attribute, children, .. } => {
            let attr = schema.attribute(*attribute);
            for (v, child) in children.iter().enumerate() {
                let name = &attr.name;
                let value = attr.format_value(v as f64);
                if let Node::Leaf { counts } = child {
                    writeln!(f, "{indent}{name} = {value}: {}", render_leaf(*counts, schema))?;
                } else {
                    writeln!(f, "{indent}{name} = {value}")?;
                    render_node(child, schema, depth + 1, f)?;
                }
            }
            Ok(())
        }
        Node::Threshold {
            attribute,
            threshold,
            le,
            gt,
            ..
        } => {
            let name = &schema.attribute(*attribute).name;
            for (op, child) in [("<=", le), (">", gt)] {
                if let Node::Leaf { counts } = child.as_ref() {
                    writeln!(f, "{indent}{name} {op} {threshold}: {}", render_leaf(*counts, schema))?;
                } else {
                    writeln!(f, "{indent}{name} {op} {threshold}")?;
                    render_node(child, schema, depth + 1, f)?;
                }
            }
            Ok(())
        }
    }
}

struct Candidate {
    attribute: usize,
    split: Split,
    score: SplitScore,
}

fn weighted_counts(table: &DataTable, rows: &[usize]) -> [f64; 2] {
    let mut counts = [0.0; 2];
    for &i in rows {
        counts[table.label(i).index()] += table.weight(i);
    }
    counts
}

/// Best threshold on a numeric attribute by information gain, with at least
/// `min_leaf` weight on each side.
fn best_threshold(table: &DataTable, rows: &[usize], attribute: usize, total: f64, min_leaf: f64) -> Option<Candidate> {
    let mut known: Vec<(f64, usize, f64)> = rows
        .iter()
        .filter_map(|&i| {
            let v = table.value(i, attribute);
            (!is_missing(v)).then(|| (v, table.label(i).index(), table.weight(i)))
        })
        .collect();
    if known.len() < 2 {
        return None;
    }
    known.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut all = [0.0; 2];
    for &(_, c, w) in &known {
        all[c] += w;
    }
    let mut left = [0.0; 2];
    let mut best: Option<(SplitScore, f64)> = None;
    for k in 0..known.len() - 1 {
        let (v, c, w) = known[k];
        left[c] += w;
        let next = known[k + 1].0;
        if next == v {
            continue;
        }
        let right = [all[0] - left[0], all[1] - left[1]];
        if left[0] + left[1] < min_leaf || right[0] + right[1] < min_leaf {
            continue;
        }
        let score = score_branches(&[left, right], total);
        if best.map_or(true, |(b, _)| score.gain > b.gain) {
            best = Some((score, (v + next) / 2.0));
        }
    }
    best.map(|(score, t)| Candidate {
        attribute,
        split: Split::Threshold(t),
        score,
    })
}

fn nominal_candidate(
    table: &DataTable,
    rows: &[usize],
    attribute: usize,
    arity: usize,
    total: f64,
    min_leaf: f64,
) -> Option<Candidate> {
    let mut branches = vec![[0.0; 2]; arity];
    for &i in rows {
        let v = table.value(i, attribute);
        if !is_missing(v) {
            branches[v as usize][table.label(i).index()] += table.weight(i);
        }
    }
    let big = branches.iter().filter(|b| b[0] + b[1] >= min_leaf).count();
    if big < 2 {
        return None;
    }
    Some(Candidate {
        attribute,
        split: Split::Nominal,
        score: score_branches(&branches, total),
    })
}

fn grow(table: &DataTable, rows: &[usize], used: &mut [bool], params: &C45Params) -> Node {
    let counts = weighted_counts(table, rows);
    let total = counts[0] + counts[1];
    if counts[0] <= 0.0 || counts[1] <= 0.0 || total < 2.0 * params.min_leaf {
        return Node::Leaf { counts };
    }

    let candidates: Vec<Candidate> = (0..table.n_attributes())
        .filter_map(|a| match table.schema().attribute(a).arity() {
            Some(_) if used[a] => None,
            Some(k) => nominal_candidate(table, rows, a, k, total, params.min_leaf),
            None => best_threshold(table, rows, a, total, params.min_leaf),
        })
        .collect();
    if candidates.is_empty() {
        return Node::Leaf { counts };
    }
    let mean_gain = candidates.iter().map(|c| c.score.gain).sum::<f64>() / candidates.len() as f64;
    let mut chosen: Option<(&Candidate, f64)> = None;
    for c in &candidates {
        if c.score.gain <= 1e-12 {
            continue;
        }
        if let Some(ratio) = c.score.eligible_ratio(mean_gain) {
            if chosen.map_or(true, |(_, best)| ratio > best) {
                chosen = Some((c, ratio));
            }
        }
    }
    let Some((best, _)) = chosen else {
        return Node::Leaf { counts };
    };

    let attribute = best.attribute;
    match best.split {
        Split::Nominal => {
            let arity = table.schema().attribute(attribute).arity().unwrap_or(0);
            let mut parts: Vec<Vec<usize>> = vec![Vec::new(); arity];
            let mut missing = Vec::new();
            for &i in rows {
                let v = table.value(i, attribute);
                if is_missing(v) {
                    missing.push(i);
                } else {
                    parts[v as usize].push(i);
                }
            }
            let fallback = largest_part(table, &parts);
            parts[fallback].extend(missing);
            used[attribute] = true;
            let children = parts
                .iter()
                .map(|p| {
                    if p.is_empty() {
                        Node::Leaf { counts: [0.0, 0.0] }
                    } else {
                        grow(table, p, used, params)
                    }
                })
                .collect();
            used[attribute] = false;
            Node::Nominal {
                attribute,
                counts,
                children,
                fallback,
            }
        }
        Split::Threshold(threshold) => {
            let mut parts = vec![Vec::new(), Vec::new()];
            let mut missing = Vec::new();
            for &i in rows {
                let v = table.value(i, attribute);
                if is_missing(v) {
                    missing.push(i);
                } else {
                    parts[usize::from(v > threshold)].push(i);
                }
            }
            let fallback = largest_part(table, &parts);
            parts[fallback].extend(missing);
            let gt = grow(table, &parts[1], used, params);
            let le = grow(table, &parts[0], used, params);
            Node::Threshold {
                attribute,
                threshold,
                counts,
                le: Box::new(le),
                gt: Box::new(gt),
                missing_le: fallback == 0,
            }
        }
    }
}

fn largest_part(table: &DataTable, parts: &[Vec<usize>]) -> usize {
    let mut best = 0;
    let mut best_w = f64::NEG_INFINITY;
    for (k, p) in parts.iter().enumerate() {
        let w: f64 = p.iter().map(|&i| table.weight(i)).sum();
        if w > best_w {
            best = k;
            best_w = w;
        }
    }
    best
}

/// Extra errors predicted on top of `errors` observed among `n` instances:
/// the upper confidence limit of the binomial error rate, times `n`, minus
/// the observed errors.
pub(crate) fn additional_errors(n: f64, errors: f64, cf: f64, z: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if errors < 1.0 {
        let base = n * (1.0 - cf.powf(1.0 / n));
        if errors == 0.0 {
            return base;
        }
        return base + errors * (additional_errors(n, 1.0, cf, z) - base);
    }
    if errors + 0.5 >= n {
        return (n - errors).max(0.0);
    }
    let f = (errors + 0.5) / n;
    let r = (f + z * z / (2.0 * n) + z * (f / n - f * f / n + z * z / (4.0 * n * n)).sqrt()) / (1.0 + z * z / n);
    r * n - errors
}

fn leaf_estimate(counts: [f64; 2], cf: f64, z: f64) -> f64 {
    let n = counts[0] + counts[1];
    let errors = counts[0].min(counts[1]);
    errors + additional_errors(n, errors, cf, z)
}

/// Bottom-up subtree replacement. Returns the pruned node and its estimated
/// error count.
fn prune(node: Node, cf: f64, z: f64) -> (Node, f64) {
    match node {
        Node::Leaf { counts } => {
            let est = leaf_estimate(counts, cf, z);
            (Node::Leaf { counts }, est)
        }
        Node::Nominal {
            attribute,
            counts,
            children,
            fallback,
        } => {
            let mut subtree = 0.0;
            let children: Vec<Node> = children
                .into_iter()
                .map(|c| {
                    let (c, e) = prune(c, cf, z);
                    subtree += e;
                    c
                })
                .collect();
            let as_leaf = leaf_estimate(counts, cf, z);
            if as_leaf <= subtree + 0.1 {
                (Node::Leaf { counts }, as_leaf)
            } else {
                (
                    Node::Nominal {
                        attribute,
                        counts,
                        children,
                        fallback,
                    },
                    subtree,
                )
            }
        }
        Node::Threshold {
            attribute,
            threshold,
            counts,
            le,
            gt,
            missing_le,
        } => {
            let (le, e1) = prune(*le, cf, z);
            let (gt, e2) = prune(*gt, cf, z);
            let as_leaf = leaf_estimate(counts, cf, z);
            if as_leaf <= e1 + e2 + 0.1 {
                (Node::Leaf { counts }, as_leaf)
            } else {
                (
                    Node::Threshold {
                        attribute,
                        threshold,
                        counts,
                        le: Box::new(le),
                        gt: Box::new(gt),
                        missing_le,
                    },
                    e1 + e2,
                )
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::testutil::*;
    use crate::data::{Attribute, Label, Schema};
    use crate::learners::{Classifier, LearnerSpec, ModelBody};
    use proptest::prelude::*;
    use std::collections::HashMap;
    use std::sync::Arc;
    use Label::{Negative as N, Positive as P};

    fn tree_of(spec: &LearnerSpec, t: &DataTable) -> DecisionTree {
        match spec.train(t).unwrap().body() {
            ModelBody::C45(tree) => tree.clone(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn four_row_example() {
        let t = nominal_table(&[2], &[(vec![0], P), (vec![0], P), (vec![1], N), (vec![1], N)]);
        let s = c45_gain_ratio(&t, 0, Split::Nominal).unwrap();
        assert!((s.gain - 1.0).abs() < 1e-12);
        assert!((s.split_info - 1.0).abs() < 1e-12);
        assert!((s.ratio().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_table_has_zero_gain() {
        let t = nominal_table(&[2, 3], &[(vec![0, 1], P), (vec![1, 2], P), (vec![1, 0], P)]);
        for a in 0..2 {
            assert_eq!(c45_gain_ratio(&t, a, Split::Nominal).unwrap().gain, 0.0);
        }
    }

    #[test]
    fn mismatched_split_is_an_error() {
        let t = nominal_table(&[2], &[(vec![0], P)]);
        assert!(c45_gain_ratio(&t, 0, Split::Threshold(0.5)).is_err());
        assert!(c45_gain_ratio(&t, 3, Split::Nominal).is_err());
    }

    #[test]
    fn ineligible_below_mean_gain() {
        let s = SplitScore { gain: 0.1, split_info: 1.0 };
        assert_eq!(s.eligible_ratio(0.2), None);
        assert_eq!(s.eligible_ratio(0.1), Some(0.1));
        assert_eq!(SplitScore { gain: 0.3, split_info: 0.0 }.eligible_ratio(0.0), None);
    }

    #[test]
    fn perfect_nominal_split_gives_depth_one() {
        let mut rows = Vec::new();
        for i in 0..40 {
            let pos = i % 2 == 0;
            rows.push((vec![usize::from(!pos), i % 3, (i / 3) % 2], if pos { P } else { N }));
        }
        let t = nominal_table(&[2, 3, 2], &rows);
        for prune in [false, true] {
            let spec = LearnerSpec::C45(C45Params { prune, ..Default::default() });
            let tree = tree_of(&spec, &t);
            assert_eq!(tree.root.depth(), 1);
            let m = spec.train(&t).unwrap();
            for i in 0..t.n_rows() {
                assert_eq!(m.predict_label(t.row(i)).unwrap(), t.label(i));
            }
        }
    }

    #[test]
    fn leaf_laplace() {
        let tree = DecisionTree {
            root: Node::Leaf { counts: [3.0, 1.0] },
            laplace: true,
        };
        assert_eq!(tree.predict(&[0.0]).0, [4.0 / 6.0, 2.0 / 6.0]);
    }

    #[test]
    fn numeric_thresholds_are_midpoints() {
        let rows: Vec<_> = (0..12).map(|i| (vec![i as f64], if i < 6 { N } else { P })).collect();
        let t = numeric_table(1, &rows);
        let tree = tree_of(&LearnerSpec::C45(C45Params { prune: false, ..Default::default() }), &t);
        match tree.root {
            Node::Threshold { threshold, .. } => assert_eq!(threshold, 5.5),
            other => panic!("unexpected root {other:?}"),
        }
    }

    #[test]
    fn noisy_subtrees_get_pruned() {
        // Class is independent of the attributes: the unpruned tree overfits,
        // the pruned tree collapses.
        let mut rows = Vec::new();
        let mut state = 12345u64;
        for _ in 0..200 {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let x = (state >> 33) % 100;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let pos = (state >> 33) % 10 < 2;
            rows.push((vec![x as f64], if pos { P } else { N }));
        }
        let t = numeric_table(1, &rows);
        let full = tree_of(&LearnerSpec::C45(C45Params { prune: false, ..Default::default() }), &t);
        let pruned = tree_of(&LearnerSpec::c45(), &t);
        assert!(pruned.root.n_leaves() < full.root.n_leaves());
    }

    #[test]
    fn pessimistic_error_reference_values() {
        let z = Normal::standard().inverse_cdf(0.75);
        assert!((z - 0.6744897501960817).abs() < 1e-9);
        // Zero observed errors: n * (1 - cf^(1/n)).
        assert!((additional_errors(2.0, 0.0, 0.25, z) - 1.0).abs() < 1e-12);
        // Closed form at e=2, n=4, computed by hand.
        let f: f64 = 2.5 / 4.0;
        let r = (f + z * z / 8.0 + z * (f / 4.0 - f * f / 4.0 + z * z / 64.0).sqrt()) / (1.0 + z * z / 4.0);
        assert!((additional_errors(4.0, 2.0, 0.25, z) - (4.0 * r - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn nominal_tested_once_per_path() {
        fn check(node: &Node, seen: &mut Vec<usize>) {
            if let Node::Nominal { attribute, children, .. } = node {
                assert!(!seen.contains(attribute));
                seen.push(*attribute);
                for c in children {
                    check(c, seen);
                }
                seen.pop();
            } else if let Node::Threshold { le, gt, .. } = node {
                check(le, seen);
                check(gt, seen);
            }
        }
        let mut rows = Vec::new();
        for i in 0..64usize {
            let cells = vec![i % 2, (i / 2) % 3, (i / 6) % 2];
            let pos = (cells[0] ^ cells[2]) == 1 || cells[1] == 2;
            rows.push((cells, if pos { P } else { N }));
        }
        let t = nominal_table(&[2, 3, 2], &rows);
        let tree = tree_of(&LearnerSpec::C45(C45Params { prune: false, ..Default::default() }), &t);
        check(&tree.root, &mut Vec::new());
    }

    /// Gain ratio recomputed by tallying (branch, class) pairs in a hash map.
    fn oracle(rows: &[(usize, f64, Label)], split: Split) -> (f64, f64) {
        let mut joint: HashMap<(usize, Label), usize> = HashMap::new();
        for &(nom, num, label) in rows {
            let b = match split {
                Split::Nominal => nom,
                Split::Threshold(t) => usize::from(num > t),
            };
            *joint.entry((b, label)).or_default() += 1;
        }
        let n = rows.len() as f64;
        let h = |ps: Vec<f64>| -> f64 { ps.into_iter().filter(|p| *p > 0.0).map(|p| -p * p.log2()).sum() };
        let class_n = |l: Label| rows.iter().filter(|r| r.2 == l).count() as f64;
        let h_class = h(vec![class_n(N) / n, class_n(P) / n]);
        let mut branches: Vec<usize> = joint.keys().map(|k| k.0).collect();
        branches.sort();
        branches.dedup();
        let mut cond = 0.0;
        let mut si = 0.0;
        for b in branches {
            let nb = (*joint.get(&(b, N)).unwrap_or(&0) + *joint.get(&(b, P)).unwrap_or(&0)) as f64;
            let pn = *joint.get(&(b, N)).unwrap_or(&0) as f64 / nb;
            cond += nb / n * h(vec![pn, 1.0 - pn]);
            si -= nb / n * (nb / n).log2();
        }
        (h_class - cond, si)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn gain_ratio_matches_counting_oracle(
            rows in prop::collection::vec((0usize..3, 0i32..6, any::<bool>()), 1..=20),
            threshold in 0i32..6,
        ) {
            let rows: Vec<(usize, f64, Label)> = rows
                .into_iter()
                .map(|(a, b, c)| (a, b as f64, if c { P } else { N }))
                .collect();
            let schema = Schema::new(
                vec![Attribute::nominal("a", ["x", "y", "z"]), Attribute::numeric("b")],
                "c",
                ["n".into(), "p".into()],
            ).unwrap();
            let values = rows.iter().flat_map(|r| [r.0 as f64, r.1]).collect();
            let t = DataTable::new(Arc::new(schema), values, rows.iter().map(|r| r.2).collect()).unwrap();
            for (attr, split) in [(0, Split::Nominal), (1, Split::Threshold(threshold as f64 + 0.5))] {
                let s = c45_gain_ratio(&t, attr, split).unwrap();
                let (gain, si) = oracle(&rows, split);
                prop_assert!((s.gain - gain).abs() < 1e-9);
                prop_assert!((s.split_info - si).abs() < 1e-9);
                match s.ratio() {
                    Some(r) => prop_assert!((r - gain / si).abs() < 1e-9),
                    None => prop_assert!(si < 1e-9),
                }
            }
        }

        #[test]
        fn unpruned_tree_fits_separable_data(
            rows in prop::collection::vec((0usize..3, 0usize..2, 0usize..2), 4..40),
        ) {
            // Label is a nested function of `a` then `b` (`c` is noise), and
            // all minimum-leaf constraints are lifted.
            let rows: Vec<(Vec<usize>, Label)> = rows
                .into_iter()
                .map(|(a, b, c)| {
                    let pos = a == 1 || (a == 0 && b == 1);
                    (vec![a, b, c], if pos { P } else { N })
                })
                .collect();
            let t = nominal_table(&[3, 2, 2], &rows);
            let spec = LearnerSpec::C45(C45Params { prune: false, min_leaf: 1e-9, ..Default::default() });
            let m = spec.train(&t).unwrap();
            for i in 0..t.n_rows() {
                prop_assert_eq!(m.predict_label(t.row(i)).unwrap(), t.label(i));
            }
        }
    }
}
