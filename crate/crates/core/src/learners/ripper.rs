//! RIPPER rule induction for binary classes.
//!
//! Rules are learned for the minority class; the majority class is the
//! default. Each rule is grown greedily on two thirds of the remaining data
//! by FOIL information gain and pruned on the remaining third by deleting
//! the trailing conditions that maximize `(p - n) / (p + n)`. Rule learning
//! stops when the description length of the rule set exceeds the smallest
//! length seen so far by `max_dl_surplus` bits, or when the new rule's error
//! on the pruning data exceeds `max_prune_error`.
//!
//! Each optimization round proposes, for every rule, a replacement grown
//! from scratch and a revision grown from the existing rule. Both variants
//! are pruned to maximize the accuracy of the whole rule set on the pruning
//! data, and the variant with the smallest total description length is
//! kept. Positives left uncovered afterwards get new rules, and rules whose
//! removal shortens the description length are dropped.
//!
//! Description lengths follow the simplified scheme of the JRip
//! implementation: a rule with `k` conditions out of `T` possible ones costs
//! `0.5 * (log2 k + 2 log2 log2 k + S(T, k, k/T))` bits, and the data given
//! the rule set costs `log2(cover + uncover + 1)` plus the bits to name the
//! false positives among the covered and the false negatives among the
//! uncovered instances, where `S(t, k, p) = -k log2 p - (t - k) log2(1 - p)`.

use std::fmt;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{is_missing, AttributeKind, DataTable, Label, Schema};
use crate::error::{Error, Result};
use crate::learners::ClassDist;
use crate::rng::{rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RipperParams {
    /// Share of the remaining data held out for pruning each rule.
    pub prune_fraction: f64,
    pub optimizations: usize,
    /// Minimum weight a condition must cover while growing.
    pub min_coverage: f64,
    pub max_dl_surplus: f64,
    pub max_prune_error: f64,
    pub seed: u64,
}

impl Default for RipperParams {
    fn default() -> Self {
        RipperParams {
            prune_fraction: 1.0 / 3.0,
            optimizations: 2,
            min_coverage: 2.0,
            max_dl_surplus: 64.0,
            max_prune_error: 0.5,
            seed: 1,
        }
    }
}

impl RipperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.prune_fraction > 0.0 && self.prune_fraction < 1.0) {
            return Err(Error::Config(format!(
                "ripper.prune_fraction = {} must be in (0, 1)",
                self.prune_fraction
            )));
        }
        if !(self.min_coverage.is_finite() && self.min_coverage >= 0.0) {
            return Err(Error::Config("ripper.min_coverage must be >= 0".into()));
        }
        if !(self.max_dl_surplus.is_finite() && self.max_dl_surplus >= 0.0) {
            return Err(Error::Config("ripper.max_dl_surplus must be >= 0".into()));
        }
        if !(self.max_prune_error > 0.0 && self.max_prune_error <= 1.0) {
            return Err(Error::Config("ripper.max_prune_error must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Condition {
    Eq { attribute: usize, value: usize },
    Le { attribute: usize, threshold: f64 },
    Gt { attribute: usize, threshold: f64 },
}

impl Condition {
    pub fn attribute(&self) -> usize {
        match *self {
            Condition::Eq { attribute, .. } | Condition::Le { attribute, .. } | Condition::Gt { attribute, .. } => {
                attribute
            }
        }
    }

    /// Missing values never satisfy a condition.
    #[inline]
    pub fn covers(&self, instance: &[f64]) -> bool {
        match *self {
            Condition::Eq { attribute, value } => {
                let v = instance[attribute];
                !is_missing(v) && v as usize == value
            }
            Condition::Le { attribute, threshold } => instance[attribute] <= threshold,
            Condition::Gt { attribute, threshold } => instance[attribute] > threshold,
        }
    }

    fn render(&self, schema: &Schema) -> String {
        let attr = schema.attribute(self.attribute());
        match *self {
            Condition::Eq { value, .. } => format!("{} = {}", attr.name, attr.format_value(value as f64)),
            Condition::Le { threshold, .. } => format!("{} <= {threshold}", attr.name),
            Condition::Gt { threshold, .. } => format!("{} > {threshold}", attr.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub conditions: Vec<Condition>,
    pub class: Label,
    /// `[negative, positive]` training weight that reaches this rule and
    /// satisfies it.
    pub counts: [f64; 2],
    /// Weight of growing-set instances of `class` covered when the rule was
    /// created.
    pub grow_positives: f64,
}

impl Rule {
    fn empty(class: Label) -> Self {
        Rule {
            conditions: Vec::new(),
            class,
            counts: [0.0; 2],
            grow_positives: 0.0,
        }
    }

    #[inline]
    pub fn covers(&self, instance: &[f64]) -> bool {
        self.conditions.iter().all(|c| c.covers(instance))
    }
}

/// Ordered rules with a default class for instances no rule covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleList {
    pub rules: Vec<Rule>,
    pub default_class: Label,
    pub default_counts: [f64; 2],
}

impl RuleList {
    pub(crate) fn fit(params: &RipperParams, table: &DataTable) -> Self {
        let counts = table.class_counts();
        // Minority class first; equal counts learn rules for positives.
        let target = if counts[0] < counts[1] { Label::Negative } else { Label::Positive };
        learn(params, table, target)
    }

    pub(crate) fn predict(&self, instance: &[f64]) -> ClassDist {
        for rule in &self.rules {
            if rule.covers(instance) {
                return ClassDist::laplace(rule.counts);
            }
        }
        ClassDist::laplace(self.default_counts)
    }

    pub(crate) fn render(&self, schema: &Schema, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RIPPER rules ({})", self.rules.len())?;
        for rule in &self.rules {
            let conds: Vec<String> = rule.conditions.iter().map(|c| c.render(schema)).collect();
            writeln!(
                f,
                "  ({}) => {} ({}/{})",
                conds.join(" and "),
                schema.class_label(rule.class),
                rule.counts[0] + rule.counts[1],
                rule.counts[rule.class.other().index()]
            )?;
        }
        writeln!(
            f,
            "  default => {} ({}/{})",
            schema.class_label(self.default_class),
            self.default_counts[0] + self.default_counts[1],
            self.default_counts[self.default_class.other().index()]
        )
    }
}

/// Learns an ordered rule list for `target_class`; the other class is the
/// default. Deterministic for a fixed `seed`.
pub fn ripper_grow_prune(table: &DataTable, target_class: Label, seed: u64) -> RuleList {
    let params = RipperParams {
        seed,
        ..RipperParams::default()
    };
    learn(&params, table, target_class)
}

fn learn(params: &RipperParams, table: &DataTable, target: Label) -> RuleList {
    let all: Vec<usize> = (0..table.n_rows()).collect();
    let learner = Learner::new(params, table, target);
    let has_target = all.iter().any(|&i| table.label(i) == target);
    let mut rules = Vec::new();
    if has_target && table.class_counts()[target.index()] > 0.0 {
        let mut rng = rng_from_seed(params.seed);
        let start = learner.total_dl(&rules, &all);
        learner.cover(&mut rules, &all, &mut rng, start);
        for _ in 0..params.optimizations {
            if rules.is_empty() {
                break;
            }
            learner.optimize(&mut rules, &all, &mut rng);
            let dl = learner.total_dl(&rules, &all);
            learner.cover(&mut rules, &all, &mut rng, dl);
            learner.drop_lengthening_rules(&mut rules, &all);
        }
    }
    learner.finish(rules, &all)
}

struct Learner<'a> {
    params: &'a RipperParams,
    table: &'a DataTable,
    target: Label,
    /// Number of possible conditions, the universe for the theory cost.
    n_conditions: f64,
    /// Prior share of the target class, the expected false-positive share
    /// of errors.
    expected_fp: f64,
}

fn log2(x: f64) -> f64 {
    x.log2()
}

/// Bits to pick `k` out of `t` items at rate `p`, with `0 log 0 = 0`.
fn subset_dl(t: f64, k: f64, p: f64) -> f64 {
    let mut bits = 0.0;
    if k > 0.0 {
        bits -= k * log2(p);
    }
    if t - k > 0.0 {
        bits -= (t - k) * log2(1.0 - p);
    }
    if bits.is_finite() {
        bits
    } else {
        f64::MAX / 4.0
    }
}

fn theory_dl(k: usize, n_conditions: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let k = k as f64;
    let mut bits = log2(k);
    if k > 1.0 {
        bits += 2.0 * log2(bits);
    }
    bits += subset_dl(n_conditions, k, k / n_conditions);
    0.5 * bits
}

fn data_dl(expected_fp: f64, cover: f64, uncover: f64, fp: f64, fn_: f64) -> f64 {
    let total_bits = log2(cover + uncover + 1.0);
    let (cover_bits, uncover_bits);
    if cover > uncover {
        let expected = expected_fp * (fp + fn_);
        cover_bits = subset_dl(cover, fp, expected / cover);
        uncover_bits = if uncover > 0.0 { subset_dl(uncover, fn_, fn_ / uncover) } else { 0.0 };
    } else {
        let expected = (1.0 - expected_fp) * (fp + fn_);
        cover_bits = if cover > 0.0 { subset_dl(cover, fp, fp / cover) } else { 0.0 };
        uncover_bits = subset_dl(uncover, fn_, expected / uncover);
    }
    total_bits + cover_bits + uncover_bits
}

impl<'a> Learner<'a> {
    fn new(params: &'a RipperParams, table: &'a DataTable, target: Label) -> Self {
        let mut n_conditions = 0.0;
        for (a, attr) in table.schema().attributes().iter().enumerate() {
            match &attr.kind {
                AttributeKind::Nominal(domain) => n_conditions += domain.len() as f64,
                AttributeKind::Numeric => {
                    let mut values: Vec<f64> = (0..table.n_rows())
                        .map(|i| table.value(i, a))
                        .filter(|v| !is_missing(*v))
                        .collect();
                    values.sort_by(f64::total_cmp);
                    values.dedup();
                    n_conditions += 2.0 * values.len() as f64;
                }
            }
        }
        let counts = table.class_counts();
        let total = counts[0] + counts[1];
        let expected_fp = if total > 0.0 { counts[target.index()] / total } else { 0.5 };
        Learner {
            params,
            table,
            target,
            n_conditions: n_conditions.max(1.0),
            expected_fp,
        }
    }

    #[inline]
    fn is_pos(&self, i: usize) -> bool {
        self.table.label(i) == self.target
    }

    /// Weighted (positives, negatives) among `rows` covered by `rule`.
    fn coverage(&self, rule: &Rule, rows: &[usize]) -> (f64, f64) {
        let mut p = 0.0;
        let mut n = 0.0;
        for &i in rows {
            if rule.covers(self.table.row(i)) {
                if self.is_pos(i) {
                    p += self.table.weight(i);
                } else {
                    n += self.table.weight(i);
                }
            }
        }
        (p, n)
    }

    fn covered_by_any(&self, rules: &[Rule], i: usize) -> bool {
        let row = self.table.row(i);
        rules.iter().any(|r| r.covers(row))
    }

    fn uncovered(&self, rules: &[Rule], rows: &[usize]) -> Vec<usize> {
        rows.iter().copied().filter(|&i| !self.covered_by_any(rules, i)).collect()
    }

    fn positive_weight(&self, rows: &[usize]) -> f64 {
        rows.iter().filter(|&&i| self.is_pos(i)).map(|&i| self.table.weight(i)).sum()
    }

    fn total_dl(&self, rules: &[Rule], rows: &[usize]) -> f64 {
        let theory: f64 = rules.iter().map(|r| theory_dl(r.conditions.len(), self.n_conditions)).sum();
        let (mut cover, mut uncover, mut fp, mut fn_) = (0.0, 0.0, 0.0, 0.0);
        for &i in rows {
            let w = self.table.weight(i);
            if self.covered_by_any(rules, i) {
                cover += w;
                if !self.is_pos(i) {
                    fp += w;
                }
            } else {
                uncover += w;
                if self.is_pos(i) {
                    fn_ += w;
                }
            }
        }
        theory + data_dl(self.expected_fp, cover, uncover, fp, fn_)
    }

    /// Stratified random split into (grow, prune).
    fn split(&self, rows: &[usize], rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
        let mut grow = Vec::new();
        let mut prune = Vec::new();
        for want_pos in [true, false] {
            let mut group: Vec<usize> = rows.iter().copied().filter(|&i| self.is_pos(i) == want_pos).collect();
            group.shuffle(rng);
            let n_prune = (group.len() as f64 * self.params.prune_fraction).round() as usize;
            prune.extend_from_slice(&group[..n_prune]);
            grow.extend_from_slice(&group[n_prune..]);
        }
        grow.sort_unstable();
        prune.sort_unstable();
        (grow, prune)
    }

    /// Adds conditions by FOIL gain until the rule covers no negatives of
    /// `rows` or no condition has positive gain.
    fn grow(&self, mut rule: Rule, rows: &[usize]) -> Rule {
        let table = self.table;
        loop {
            let covered: Vec<usize> = rows.iter().copied().filter(|&i| rule.covers(table.row(i))).collect();
            let (p0, n0) = self.tally(&covered);
            if n0 <= 0.0 || p0 <= 0.0 {
                break;
            }
            let base = log2(p0 / (p0 + n0));
            let foil = |p1: f64, n1: f64| -> Option<f64> {
                if p1 <= 0.0 || p1 + n1 < self.params.min_coverage {
                    return None;
                }
                Some(p1 * (log2(p1 / (p1 + n1)) - base))
            };
            let mut best: Option<(Condition, f64)> = None;
            let mut consider = |c: Condition, g: Option<f64>| {
                if let Some(g) = g {
                    if g > 1e-12 && best.map_or(true, |(_, b)| g > b) {
                        best = Some((c, g));
                    }
                }
            };
            for (a, attr) in table.schema().attributes().iter().enumerate() {
                match &attr.kind {
                    AttributeKind::Nominal(domain) => {
                        if rule.conditions.iter().any(|c| matches!(c, Condition::Eq { attribute, .. } if *attribute == a)) {
                            continue;
                        }
                        let mut stats = vec![[0.0; 2]; domain.len()];
                        for &i in &covered {
                            let v = table.value(i, a);
                            if !is_missing(v) {
                                stats[v as usize][usize::from(self.is_pos(i))] += table.weight(i);
                            }
                        }
                        for (value, s) in stats.iter().enumerate() {
                            consider(Condition::Eq { attribute: a, value }, foil(s[1], s[0]));
                        }
                    }
                    AttributeKind::Numeric => {
                        let mut known: Vec<(f64, bool, f64)> = covered
                            .iter()
                            .filter_map(|&i| {
                                let v = table.value(i, a);
                                (!is_missing(v)).then(|| (v, self.is_pos(i), table.weight(i)))
                            })
                            .collect();
                        if known.len() < 2 {
                            continue;
                        }
                        known.sort_by(|x, y| x.0.total_cmp(&y.0));
                        let (tp, tn) = known.iter().fold((0.0, 0.0), |(p, n), &(_, pos, w)| {
                            if pos {
                                (p + w, n)
                            } else {
                                (p, n + w)
                            }
                        });
                        let (mut lp, mut ln) = (0.0, 0.0);
                        for k in 0..known.len() - 1 {
                            let (v, pos, w) = known[k];
                            if pos {
                                lp += w;
                            } else {
                                ln += w;
                            }
                            let next = known[k + 1].0;
                            if next == v {
                                continue;
                            }
                            let threshold = (v + next) / 2.0;
                            consider(Condition::Le { attribute: a, threshold }, foil(lp, ln));
                            consider(Condition::Gt { attribute: a, threshold }, foil(tp - lp, tn - ln));
                        }
                    }
                }
            }
            match best {
                Some((c, _)) => rule.conditions.push(c),
                None => break,
            }
        }
        rule
    }

    fn tally(&self, rows: &[usize]) -> (f64, f64) {
        let p = self.positive_weight(rows);
        let total: f64 = rows.iter().map(|&i| self.table.weight(i)).sum();
        (p, total - p)
    }

    /// Keeps the prefix of `rule` (at least one condition) that maximizes
    /// `worth`; ties keep the shorter prefix.
    fn prune_by(&self, rule: &Rule, worth: impl Fn(&Rule) -> f64) -> Rule {
        let mut best_len = rule.conditions.len();
        let mut best_value = f64::NEG_INFINITY;
        for len in 1..=rule.conditions.len() {
            let candidate = Rule {
                conditions: rule.conditions[..len].to_vec(),
                ..rule.clone()
            };
            let v = worth(&candidate);
            if v > best_value + 1e-12 {
                best_value = v;
                best_len = len;
            }
        }
        Rule {
            conditions: rule.conditions[..best_len].to_vec(),
            ..rule.clone()
        }
    }

    /// `(p - n) / (p + n)` on the pruning rows, 0 when nothing is covered.
    fn irep_worth(&self, rule: &Rule, prune: &[usize]) -> f64 {
        let (p, n) = self.coverage(rule, prune);
        if p + n > 0.0 {
            (p - n) / (p + n)
        } else {
            0.0
        }
    }

    /// Accuracy on `prune` of `rule` followed by `rest`, with uncovered
    /// instances predicted as the default class.
    fn ruleset_worth(&self, rule: &Rule, rest: &[Rule], prune: &[usize]) -> f64 {
        let mut correct = 0.0;
        let mut total = 0.0;
        for &i in prune {
            let row = self.table.row(i);
            let w = self.table.weight(i);
            let covered = rule.covers(row) || rest.iter().any(|r| r.covers(row));
            total += w;
            if covered == self.is_pos(i) {
                correct += w;
            }
        }
        if total > 0.0 {
            correct / total
        } else {
            0.0
        }
    }

    /// Grows and prunes rules on the instances `rules` leave uncovered until
    /// a stopping condition fires.
    fn cover(&self, rules: &mut Vec<Rule>, all: &[usize], rng: &mut Rng, start_dl: f64) {
        let mut min_dl = start_dl;
        loop {
            let remaining = self.uncovered(rules, all);
            if self.positive_weight(&remaining) <= 0.0 {
                break;
            }
            let (grow_rows, prune_rows) = self.split(&remaining, rng);
            let grow_pos = self.positive_weight(&grow_rows);
            if grow_pos <= 0.0 {
                break;
            }
            let grown = self.grow(Rule::empty(self.target), &grow_rows);
            if grown.conditions.is_empty() {
                break;
            }
            let mut rule = self.prune_by(&grown, |r| self.irep_worth(r, &prune_rows));
            let (gp, _) = self.coverage(&rule, &grow_rows);
            rule.grow_positives = gp;

            let (p, n) = self.coverage(&rule, &prune_rows);
            let error = if p + n > 0.0 {
                n / (p + n)
            } else {
                let (p, n) = self.coverage(&rule, &grow_rows);
                n / (p + n)
            };
            rules.push(rule);
            let dl = self.total_dl(rules, all);
            if dl > min_dl + self.params.max_dl_surplus || error > self.params.max_prune_error {
                rules.pop();
                break;
            }
            min_dl = min_dl.min(dl);
        }
    }

    fn optimize(&self, rules: &mut Vec<Rule>, all: &[usize], rng: &mut Rng) {
        for i in 0..rules.len() {
            let reach = self.uncovered(&rules[..i], all);
            if self.positive_weight(&reach) <= 0.0 {
                continue;
            }
            let (grow_rows, prune_rows) = self.split(&reach, rng);
            if self.positive_weight(&grow_rows) <= 0.0 {
                continue;
            }
            let rest = rules[i + 1..].to_vec();
            let worth = |r: &Rule| self.ruleset_worth(r, &rest, &prune_rows);

            let mut variants = vec![rules[i].clone()];
            let replacement = self.grow(Rule::empty(self.target), &grow_rows);
            if !replacement.conditions.is_empty() {
                variants.push(self.prune_by(&replacement, worth));
            }
            let revision = self.grow(rules[i].clone(), &grow_rows);
            if revision.conditions.len() > rules[i].conditions.len() {
                variants.push(self.prune_by(&revision, worth));
            }

            let mut best = 0;
            let mut best_dl = f64::INFINITY;
            for (k, variant) in variants.iter().enumerate() {
                let (gp, _) = self.coverage(variant, &grow_rows);
                if k > 0 && gp <= 0.0 {
                    continue;
                }
                let mut candidate = rules.clone();
                candidate[i] = variant.clone();
                let dl = self.total_dl(&candidate, all);
                if dl < best_dl - 1e-12 {
                    best_dl = dl;
                    best = k;
                }
            }
            if best > 0 {
                let mut chosen = variants.swap_remove(best);
                chosen.grow_positives = self.coverage(&chosen, &grow_rows).0;
                rules[i] = chosen;
            }
        }
    }

    fn drop_lengthening_rules(&self, rules: &mut Vec<Rule>, all: &[usize]) {
        let mut i = rules.len();
        while i > 0 {
            i -= 1;
            let with = self.total_dl(rules, all);
            let mut without = rules.clone();
            without.remove(i);
            if self.total_dl(&without, all) < with - 1e-12 {
                *rules = without;
            }
        }
    }

    /// Records per-rule coverage in order and drops rules that no training
    /// instance reaches.
    fn finish(&self, rules: Vec<Rule>, all: &[usize]) -> RuleList {
        let mut remaining: Vec<usize> = all.to_vec();
        let mut kept = Vec::new();
        for mut rule in rules {
            let mut counts = [0.0; 2];
            remaining.retain(|&i| {
                if rule.covers(self.table.row(i)) {
                    counts[self.table.label(i).index()] += self.table.weight(i);
                    false
                } else {
                    true
                }
            });
            if counts[0] + counts[1] > 0.0 {
                rule.counts = counts;
                kept.push(rule);
            }
        }
        let mut default_counts = [0.0; 2];
        for &i in &remaining {
            default_counts[self.table.label(i).index()] += self.table.weight(i);
        }
        RuleList {
            rules: kept,
            default_class: self.target.other(),
            default_counts,
        }
    }
}
