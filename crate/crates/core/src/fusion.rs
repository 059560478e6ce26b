//! Patient-wise aggregation, decision profiles, the eight late-fusion rules
//! and the two early-fusion baselines.
//!
//! A decision profile stacks the soft outputs of `L` per-modality classifiers
//! into an `L x C` matrix; a fusion rule turns that matrix into per-class
//! supports (or directly into a crisp class) and the maximum-membership rule
//! picks the final class. Ties always resolve to the lowest class index, and
//! row selection ties to the lowest modality index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classify::{argmax_lowest, ClassSupport};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// An `L x C` matrix of per-modality, per-class supports for one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionProfile {
    rows: Vec<ClassSupport>,
    modality_ids: Vec<String>,
}

impl DecisionProfile {
    pub fn new(modality_ids: Vec<String>, rows: Vec<ClassSupport>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyInput("decision profile".into()));
        }
        if modality_ids.len() != rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} modality ids for {} rows",
                modality_ids.len(),
                rows.len()
            )));
        }
        let c = rows[0].class_count();
        if rows.iter().any(|r| r.class_count() != c) {
            return Err(Error::DimensionMismatch(
                "profile rows disagree on class count".into(),
            ));
        }
        Ok(Self { rows, modality_ids })
    }

    pub fn modality_count(&self) -> usize {
        self.rows.len()
    }

    pub fn class_count(&self) -> usize {
        self.rows[0].class_count()
    }

    pub fn modality_ids(&self) -> &[String] {
        &self.modality_ids
    }

    #[inline]
    pub fn support(&self, modality: usize, class: usize) -> f64 {
        self.rows[modality].supports()[class]
    }

    pub fn rows(&self) -> &[ClassSupport] {
        &self.rows
    }
}

/// Builds a profile with generated modality ids `m0..m{L-1}`.
pub fn build_profile(per_modality: Vec<ClassSupport>) -> Result<DecisionProfile> {
    let ids = (0..per_modality.len()).map(|i| format!("m{i}")).collect();
    DecisionProfile::new(ids, per_modality)
}

/// Per-class centroids of training decision profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTemplateSet {
    /// `templates[class][modality][class’]`
    templates: Vec<Vec<Vec<f64>>>,
    class_counts: Vec<usize>,
}

impl DecisionTemplateSet {
    pub fn class_count(&self) -> usize {
        self.templates.len()
    }

    pub fn modality_count(&self) -> usize {
        self.templates[0].len()
    }

    /// Template of `class`: an `L x C` matrix.
    pub fn template(&self, class: usize) -> &[Vec<f64>] {
        &self.templates[class]
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }
}

/// Fits one template per class as the element-wise mean of that class's
/// training profiles. Every class in `0..C` needs at least one profile.
#[allow(clippy::needless_range_loop)]
pub fn fit_decision_templates(
    training: &[(DecisionProfile, usize)],
) -> Result<DecisionTemplateSet> {
    let Some((first, _)) = training.first() else {
        return Err(Error::EmptyInput("decision template training set".into()));
    };
    let (l, c) = (first.modality_count(), first.class_count());
    if training
        .iter()
        .any(|(p, _)| p.modality_count() != l || p.class_count() != c)
    {
        return Err(Error::DimensionMismatch(
            "training profiles disagree on shape".into(),
        ));
    }
    let mut sums = vec![vec![vec![0.0; c]; l]; c];
    let mut counts = vec![0usize; c];
    for (profile, class) in training {
        if *class >= c {
            return Err(Error::InvalidValue(format!(
                "class {class} outside the {c} profile classes"
            )));
        }
        counts[*class] += 1;
        for i in 0..l {
            for j in 0..c {
                sums[*class][i][j] += profile.support(i, j);
            }
        }
    }
    if let Some(empty) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyInput(format!(
            "no training profile for class {empty}"
        )));
    }
    for (class, n) in counts.iter().enumerate() {
        for row in &mut sums[class] {
            for v in row.iter_mut() {
                *v /= *n as f64;
            }
        }
    }
    Ok(DecisionTemplateSet {
        templates: sums,
        class_counts: counts,
    })
}

/// Result of a fusion rule: per-class supports for the soft rules, none for
/// the crisp ones, plus the maximum-membership class.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub supports: Option<Vec<f64>>,
    pub chosen_class: usize,
}

impl FusionOutcome {
    fn from_supports(supports: Vec<f64>) -> Self {
        let chosen_class = argmax_lowest(&supports);
        Self {
            supports: Some(supports),
            chosen_class,
        }
    }
}

fn column_fold<F>(dp: &DecisionProfile, init: f64, f: F) -> Vec<f64>
where
    F: Fn(f64, f64) -> f64,
{
    (0..dp.class_count())
        .map(|j| {
            (0..dp.modality_count())
                .map(|i| dp.support(i, j))
                .fold(init, &f)
        })
        .collect()
}

/// Product rule: `chi_j = prod_i mu_ij`.
pub fn fuse_product(dp: &DecisionProfile) -> FusionOutcome {
    FusionOutcome::from_supports(column_fold(dp, 1.0, |a, b| a * b))
}

/// Max rule: `chi_j = max_i mu_ij`.
pub fn fuse_max(dp: &DecisionProfile) -> FusionOutcome {
    FusionOutcome::from_supports(column_fold(dp, f64::NEG_INFINITY, f64::max))
}

/// Min rule: `chi_j = min_i mu_ij`.
pub fn fuse_min(dp: &DecisionProfile) -> FusionOutcome {
    FusionOutcome::from_supports(column_fold(dp, f64::INFINITY, f64::min))
}

/// Mean rule: `chi_j = (1/L) sum_i mu_ij`.
pub fn fuse_mean(dp: &DecisionProfile) -> FusionOutcome {
    let l = dp.modality_count() as f64;
    let sums = column_fold(dp, 0.0, |a, b| a + b);
    FusionOutcome::from_supports(sums.into_iter().map(|s| s / l).collect())
}

/// Decision-template rule: similarity is one minus the mean squared
/// deviation between the profile and each class template, so
/// `chi_i = 1 - (1/(L*C)) sum_k sum_j (mu_kj - dt_kj)^2`, always in `[0, 1]`.
#[allow(clippy::needless_range_loop)]
pub fn fuse_decision_template(
    dp: &DecisionProfile,
    dts: &DecisionTemplateSet,
) -> Result<FusionOutcome> {
    check_template_shape(dp, dts)?;
    let (l, c) = (dp.modality_count(), dp.class_count());
    let supports = (0..dts.class_count())
        .map(|t| {
            let template = dts.template(t);
            let mut sq = 0.0;
            for i in 0..l {
                for j in 0..c {
                    sq += (dp.support(i, j) - template[i][j]).powi(2);
                }
            }
            1.0 - sq / (l as f64 * c as f64)
        })
        .collect();
    Ok(FusionOutcome::from_supports(supports))
}

/// Dempster-Shafer rule.
///
/// Per modality `i`, the proximity of the classifier output `D_i` to each
/// class template row is `(1 + ||DT_j[i] - D_i||^2)^-1`, normalized over
/// classes (Euclidean norm). Per-class beliefs multiply the classic
/// combination factor across modalities and the scaling factor is chosen so
/// the final supports sum to 1. If a belief denominator degenerates to zero
/// (full proximity on one class, none elsewhere), that class takes the whole
/// support directly.
#[allow(clippy::needless_range_loop)]
pub fn fuse_dempster_shafer(
    dp: &DecisionProfile,
    dts: &DecisionTemplateSet,
) -> Result<FusionOutcome> {
    check_template_shape(dp, dts)?;
    let (l, c) = (dp.modality_count(), dp.class_count());

    // proximity[i][j] = Phi_{j,i}
    let mut proximity = vec![vec![0.0; c]; l];
    for i in 0..l {
        let d_i = dp.rows()[i].supports();
        let mut terms = Vec::with_capacity(c);
        for j in 0..c {
            let template_row = &dts.template(j)[i];
            let sq: f64 = template_row
                .iter()
                .zip(d_i)
                .map(|(t, d)| (t - d).powi(2))
                .sum();
            terms.push(1.0 / (1.0 + sq));
        }
        let total: f64 = terms.iter().sum();
        for j in 0..c {
            proximity[i][j] = terms[j] / total;
        }
    }

    let mut supports = vec![0.0; c];
    let mut degenerate = Vec::new();
    for j in 0..c {
        let mut belief = 1.0;
        let mut hit_zero = false;
        for row in proximity.iter() {
            let others: f64 = (0..c).filter(|&k| k != j).map(|k| 1.0 - row[k]).product();
            let denom = 1.0 - row[j] * (1.0 - others);
            if denom == 0.0 {
                hit_zero = true;
                break;
            }
            belief *= row[j] * others / denom;
        }
        if hit_zero {
            degenerate.push(j);
        } else {
            supports[j] = belief;
        }
    }

    if !degenerate.is_empty() {
        let share = 1.0 / degenerate.len() as f64;
        supports = vec![0.0; c];
        for &j in &degenerate {
            supports[j] = share;
        }
        return Ok(FusionOutcome::from_supports(supports));
    }

    let total: f64 = supports.iter().sum();
    let supports = supports.into_iter().map(|b| b / total).collect();
    Ok(FusionOutcome::from_supports(supports))
}

fn check_template_shape(dp: &DecisionProfile, dts: &DecisionTemplateSet) -> Result<()> {
    if dts.class_count() != dp.class_count() || dts.modality_count() != dp.modality_count() {
        return Err(Error::DimensionMismatch(format!(
            "templates are {}x{} per class for a {}x{} profile",
            dts.modality_count(),
            dts.class_count(),
            dp.modality_count(),
            dp.class_count()
        )));
    }
    Ok(())
}

/// Majority vote: each row votes for its own argmax, the class with most
/// votes wins. Crisp outcome.
pub fn fuse_majority_vote(dp: &DecisionProfile) -> FusionOutcome {
    let mut votes = vec![0.0; dp.class_count()];
    for row in dp.rows() {
        votes[row.argmax()] += 1.0;
    }
    FusionOutcome {
        supports: None,
        chosen_class: argmax_lowest(&votes),
    }
}

/// Confidence rule: the row holding the single largest entry of the profile
/// decides alone. Crisp outcome.
pub fn fuse_confidence(dp: &DecisionProfile) -> FusionOutcome {
    let mut best_row = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, row) in dp.rows().iter().enumerate() {
        let row_max = row.supports()[row.argmax()];
        if row_max > best_value {
            best_value = row_max;
            best_row = i;
        }
    }
    FusionOutcome {
        supports: None,
        chosen_class: dp.rows()[best_row].argmax(),
    }
}

/// The eight late-fusion rules, with their stable string identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionRule {
    Product,
    Max,
    Min,
    Mean,
    Dt,
    Ds,
    Vote,
    Confidence,
}

impl FusionRule {
    pub const ALL: [FusionRule; 8] = [
        FusionRule::Product,
        FusionRule::Max,
        FusionRule::Min,
        FusionRule::Mean,
        FusionRule::Dt,
        FusionRule::Ds,
        FusionRule::Vote,
        FusionRule::Confidence,
    ];

    pub fn id(self) -> &'static str {
        match self {
            FusionRule::Product => "product",
            FusionRule::Max => "max",
            FusionRule::Min => "min",
            FusionRule::Mean => "mean",
            FusionRule::Dt => "dt",
            FusionRule::Ds => "ds",
            FusionRule::Vote => "vote",
            FusionRule::Confidence => "confidence",
        }
    }

    /// Whether the rule needs fitted decision templates.
    pub fn needs_templates(self) -> bool {
        matches!(self, FusionRule::Dt | FusionRule::Ds)
    }

    /// Whether the rule emits a crisp class instead of soft supports.
    pub fn is_crisp(self) -> bool {
        matches!(self, FusionRule::Vote | FusionRule::Confidence)
    }
}

impl fmt::Display for FusionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FusionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FusionRule::ALL
            .into_iter()
            .find(|r| r.id() == s)
            .ok_or_else(|| Error::Parse(format!("unknown fusion rule `{s}`")))
    }
}

/// Applies `rule` to a profile; template-based rules need `dts`.
pub fn fuse(
    rule: FusionRule,
    dp: &DecisionProfile,
    dts: Option<&DecisionTemplateSet>,
) -> Result<FusionOutcome> {
    match rule {
        FusionRule::Product => Ok(fuse_product(dp)),
        FusionRule::Max => Ok(fuse_max(dp)),
        FusionRule::Min => Ok(fuse_min(dp)),
        FusionRule::Mean => Ok(fuse_mean(dp)),
        FusionRule::Dt | FusionRule::Ds => {
            let dts = dts.ok_or_else(|| {
                Error::InvalidParameter(format!("rule `{rule}` needs fitted decision templates"))
            })?;
            if rule == FusionRule::Dt {
                fuse_decision_template(dp, dts)
            } else {
                fuse_dempster_shafer(dp, dts)
            }
        }
        FusionRule::Vote => Ok(fuse_majority_vote(dp)),
        FusionRule::Confidence => Ok(fuse_confidence(dp)),
    }
}

/// Patient-wise feature mean: component-wise arithmetic mean over vectors
/// with identical names in identical order.
pub fn aggregate_a1(vectors: &[FeatureVector]) -> Result<FeatureVector> {
    let Some(first) = vectors.first() else {
        return Err(Error::EmptyInput("feature aggregation".into()));
    };
    for v in &vectors[1..] {
        if v.names() != first.names() {
            return Err(Error::DimensionMismatch(
                "feature names differ across aggregated vectors".into(),
            ));
        }
    }
    let n = vectors.len() as f64;
    let mut sums = vec![0.0; first.len()];
    for v in vectors {
        for (s, x) in sums.iter_mut().zip(v.values()) {
            *s += x;
        }
    }
    FeatureVector::new(
        first.names().to_vec(),
        sums.into_iter().map(|s| s / n).collect(),
    )
}

/// Patient-wise score mean: component-wise mean of class supports.
pub fn aggregate_a2(supports: &[ClassSupport]) -> Result<ClassSupport> {
    let Some(first) = supports.first() else {
        return Err(Error::EmptyInput("score aggregation".into()));
    };
    let c = first.class_count();
    if supports.iter().any(|s| s.class_count() != c) {
        return Err(Error::DimensionMismatch(
            "class counts differ across aggregated supports".into(),
        ));
    }
    let n = supports.len() as f64;
    let mut sums = vec![0.0; c];
    for s in supports {
        for (acc, x) in sums.iter_mut().zip(s.supports()) {
            *acc += x;
        }
    }
    ClassSupport::new(sums.into_iter().map(|s| (s / n).clamp(0.0, 1.0)).collect())
}

/// The two early-fusion baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EarlyMode {
    Concat,
    Kronecker,
}

impl EarlyMode {
    pub const ALL: [EarlyMode; 2] = [EarlyMode::Concat, EarlyMode::Kronecker];

    pub fn id(self) -> &'static str {
        match self {
            EarlyMode::Concat => "concat",
            EarlyMode::Kronecker => "kronecker",
        }
    }
}

impl fmt::Display for EarlyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EarlyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EarlyMode::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::Parse(format!("unknown early-fusion mode `{s}`")))
    }
}

/// Name-prefixed concatenation of per-modality vectors, in modality order.
pub fn early_concat(parts: &[(String, FeatureVector)]) -> Result<FeatureVector> {
    if parts.is_empty() {
        return Err(Error::EmptyInput("early fusion".into()));
    }
    if let Some((id, _)) = parts.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::EmptyInput(format!(
            "modality `{id}` has no features"
        )));
    }
    let blocks: Vec<FeatureVector> = parts.iter().map(|(id, v)| v.with_prefix(id)).collect();
    FeatureVector::concat(&blocks)
}

/// Guard against runaway Kronecker growth.
const MAX_KRONECKER_LEN: usize = 1 << 20;

/// Iterated Kronecker product across modalities in order.
///
/// With `augment` each vector first gains a constant-1 component, so the
/// fused space keeps the unimodal terms alongside the pairwise interactions;
/// without it the result is the pure product.
pub fn early_kronecker(parts: &[(String, FeatureVector)], augment: bool) -> Result<FeatureVector> {
    if parts.is_empty() {
        return Err(Error::EmptyInput("early fusion".into()));
    }
    if let Some((id, _)) = parts.iter().find(|(_, v)| v.is_empty()) {
        return Err(Error::EmptyInput(format!(
            "modality `{id}` has no features"
        )));
    }
    let mut acc_names: Vec<String> = vec![];
    let mut acc_values: Vec<f64> = vec![];
    for (idx, (id, v)) in parts.iter().enumerate() {
        let mut names: Vec<String> = v.names().iter().map(|n| format!("{id}.{n}")).collect();
        let mut values = v.values().to_vec();
        if augment {
            names.push(format!("{id}.unit"));
            values.push(1.0);
        }
        if idx == 0 {
            acc_names = names;
            acc_values = values;
            continue;
        }
        if acc_values.len() * values.len() > MAX_KRONECKER_LEN {
            return Err(Error::InvalidParameter(format!(
                "kronecker product would exceed {MAX_KRONECKER_LEN} components"
            )));
        }
        let mut next_names = Vec::with_capacity(acc_names.len() * names.len());
        let mut next_values = Vec::with_capacity(acc_values.len() * values.len());
        for (an, av) in acc_names.iter().zip(&acc_values) {
            for (bn, bv) in names.iter().zip(&values) {
                next_names.push(format!("{an}*{bn}"));
                next_values.push(av * bv);
            }
        }
        acc_names = next_names;
        acc_values = next_values;
    }
    FeatureVector::new(acc_names, acc_values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn support(values: &[f64]) -> ClassSupport {
        ClassSupport::new(values.to_vec()).unwrap()
    }

    /// Shared fixture: rows [0.6,0.4], [0.8,0.2], [0.3,0.7].
    fn dp_star() -> DecisionProfile {
        build_profile(vec![
            support(&[0.6, 0.4]),
            support(&[0.8, 0.2]),
            support(&[0.3, 0.7]),
        ])
        .unwrap()
    }

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::from_values(values.to_vec()).unwrap()
    }

    #[test]
    fn profile_construction_and_errors() {
        let dp = dp_star();
        assert_eq!(dp.modality_count(), 3);
        assert_eq!(dp.class_count(), 2);
        assert_abs_diff_eq!(dp.support(1, 0), 0.8);

        let single = build_profile(vec![support(&[0.4, 0.6])]).unwrap();
        assert_eq!(single.modality_count(), 1);

        let ragged = build_profile(vec![support(&[0.4, 0.6]), support(&[0.2, 0.3, 0.5])]);
        assert!(ragged.is_err());
    }

    #[test]
    fn product_rule_on_fixture() {
        let out = fuse_product(&dp_star());
        let chi = out.supports.as_ref().unwrap();
        assert_abs_diff_eq!(chi[0], 0.144, epsilon = 1e-12);
        assert_abs_diff_eq!(chi[1], 0.056, epsilon = 1e-12);
        assert_eq!(out.chosen_class, 0);
    }

    #[test]
    fn product_absorbs_zero_and_is_identity_for_single_row() {
        let dp = build_profile(vec![support(&[0.0, 1.0]), support(&[0.5, 0.5])]).unwrap();
        let chi = fuse_product(&dp).supports.unwrap();
        assert_eq!(chi[0], 0.0);

        let one = build_profile(vec![support(&[0.25, 0.75])]).unwrap();
        assert_eq!(fuse_product(&one).supports.unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn max_min_mean_on_fixture() {
        let dp = dp_star();
        let max = fuse_max(&dp);
        assert_eq!(max.supports.as_ref().unwrap(), &vec![0.8, 0.7]);
        assert_eq!(max.chosen_class, 0);
        let min = fuse_min(&dp);
        assert_eq!(min.supports.as_ref().unwrap(), &vec![0.3, 0.2]);
        assert_eq!(min.chosen_class, 0);
        let mean = fuse_mean(&dp);
        let chi = mean.supports.as_ref().unwrap();
        assert_abs_diff_eq!(chi[0], 1.7 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(chi[1], 1.3 / 3.0, epsilon = 1e-12);
        assert_eq!(mean.chosen_class, 0);
    }

    #[test]
    fn symmetric_rules_ignore_row_order() {
        let dp = dp_star();
        let permuted = build_profile(vec![
            support(&[0.3, 0.7]),
            support(&[0.6, 0.4]),
            support(&[0.8, 0.2]),
        ])
        .unwrap();
        for rule in [
            FusionRule::Product,
            FusionRule::Max,
            FusionRule::Min,
            FusionRule::Mean,
        ] {
            let a = fuse(rule, &dp, None).unwrap().supports.unwrap();
            let b = fuse(rule, &permuted, None).unwrap().supports.unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn template_fitting_centroids() {
        let p0 = dp_star();
        let flat = build_profile(vec![support(&[0.5, 0.5]); 3]).unwrap();
        // singleton centroid equals the profile itself
        let dts = fit_decision_templates(&[(p0.clone(), 0), (flat.clone(), 1)]).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_abs_diff_eq!(dts.template(0)[i][j], p0.support(i, j));
                assert_abs_diff_eq!(dts.template(1)[i][j], 0.5);
            }
        }
        // two class-0 profiles average element-wise
        let dts = fit_decision_templates(&[(p0.clone(), 0), (flat.clone(), 0), (flat.clone(), 1)])
            .unwrap();
        assert_abs_diff_eq!(dts.template(0)[0][0], (0.6 + 0.5) / 2.0);
        assert_abs_diff_eq!(dts.template(0)[2][1], (0.7 + 0.5) / 2.0);
        assert_eq!(dts.class_counts(), &[2, 1]);

        // a class with no profiles is an error
        assert!(fit_decision_templates(&[(p0, 0), (flat, 0)]).is_err());
    }

    #[test]
    fn decision_template_similarity() {
        let dp = build_profile(vec![support(&[0.6, 0.4])]).unwrap();
        let dts = fit_decision_templates(&[
            (build_profile(vec![support(&[0.8, 0.2])]).unwrap(), 0),
            (build_profile(vec![support(&[0.2, 0.8])]).unwrap(), 1),
        ])
        .unwrap();
        let out = fuse_decision_template(&dp, &dts).unwrap();
        let chi = out.supports.as_ref().unwrap();
        assert_abs_diff_eq!(chi[0], 0.96, epsilon = 1e-12);
        assert_abs_diff_eq!(chi[1], 0.84, epsilon = 1e-12);
        assert_eq!(out.chosen_class, 0);
    }

    #[test]
    fn decision_template_exact_match_scores_one() {
        let dp = dp_star();
        let other = build_profile(vec![support(&[0.5, 0.5]); 3]).unwrap();
        let dts = fit_decision_templates(&[(dp.clone(), 0), (other, 1)]).unwrap();
        let chi = fuse_decision_template(&dp, &dts).unwrap().supports.unwrap();
        assert_abs_diff_eq!(chi[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn decision_template_maximal_distance_scores_zero() {
        let dp = build_profile(vec![support(&[1.0, 0.0])]).unwrap();
        let dts = fit_decision_templates(&[
            (build_profile(vec![support(&[0.0, 1.0])]).unwrap(), 0),
            (build_profile(vec![support(&[1.0, 0.0])]).unwrap(), 1),
        ])
        .unwrap();
        let chi = fuse_decision_template(&dp, &dts).unwrap().supports.unwrap();
        assert_abs_diff_eq!(chi[0], 0.0, epsilon = 1e-12); // every entry differs by 1
        assert_abs_diff_eq!(chi[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dempster_shafer_hand_case() {
        // L=1, C=2, ||DT_0 - D||^2 = 0 and ||DT_1 - D||^2 = 1.
        let dp = build_profile(vec![support(&[1.0, 0.0])]).unwrap();
        let dts = fit_decision_templates(&[
            (build_profile(vec![support(&[1.0, 0.0])]).unwrap(), 0),
            (build_profile(vec![support(&[0.5, 0.5])]).unwrap(), 1),
        ])
        .unwrap();
        // distance of D to DT_1 is (0.5^2 + 0.5^2) != 1; build templates directly
        let dts = DecisionTemplateSet {
            templates: vec![vec![vec![1.0, 0.0]], vec![vec![1.0, 1.0]]],
            class_counts: dts.class_counts().to_vec(),
        };
        let out = fuse_dempster_shafer(&dp, &dts).unwrap();
        let chi = out.supports.as_ref().unwrap();
        assert_abs_diff_eq!(chi[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(chi[1], 0.2, epsilon = 1e-12);
        assert_eq!(out.chosen_class, 0);
    }

    #[test]
    fn dempster_shafer_symmetric_ties_break_low() {
        let dp = build_profile(vec![support(&[0.5, 0.5])]).unwrap();
        let dts = fit_decision_templates(&[
            (build_profile(vec![support(&[0.7, 0.3])]).unwrap(), 0),
            (build_profile(vec![support(&[0.3, 0.7])]).unwrap(), 1),
        ])
        .unwrap();
        let out = fuse_dempster_shafer(&dp, &dts).unwrap();
        let chi = out.supports.as_ref().unwrap();
        assert_abs_diff_eq!(chi[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(chi[1], 0.5, epsilon = 1e-12);
        assert_eq!(out.chosen_class, 0);
    }

    #[test]
    fn dempster_shafer_row_permutation_consistent() {
        let dp = dp_star();
        let dts = fit_decision_templates(&[
            (dp.clone(), 0),
            (build_profile(vec![support(&[0.5, 0.5]); 3]).unwrap(), 1),
        ])
        .unwrap();
        let perm = [2usize, 0, 1];
        let dp_p = build_profile(perm.iter().map(|&i| dp.rows()[i].clone()).collect()).unwrap();
        let dts_p = DecisionTemplateSet {
            templates: (0..2)
                .map(|cl| perm.iter().map(|&i| dts.template(cl)[i].clone()).collect())
                .collect(),
            class_counts: dts.class_counts().to_vec(),
        };
        let a = fuse_dempster_shafer(&dp, &dts).unwrap();
        let b = fuse_dempster_shafer(&dp_p, &dts_p).unwrap();
        for (x, y) in a.supports.unwrap().iter().zip(b.supports.unwrap().iter()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn majority_vote_counts_row_argmaxes() {
        let out = fuse_majority_vote(&dp_star());
        assert_eq!(out.chosen_class, 0); // votes (0, 0, 1)
        assert!(out.supports.is_none());

        let tie = build_profile(vec![support(&[0.9, 0.1]), support(&[0.1, 0.9])]).unwrap();
        assert_eq!(fuse_majority_vote(&tie).chosen_class, 0);

        let unanimous = build_profile(vec![support(&[0.1, 0.9]); 3]).unwrap();
        assert_eq!(fuse_majority_vote(&unanimous).chosen_class, 1);
    }

    #[test]
    fn confidence_rule_selects_strongest_row() {
        let out = fuse_confidence(&dp_star());
        assert_eq!(out.chosen_class, 0); // 0.8 in row 1, argmax of that row is 0

        let dp = build_profile(vec![support(&[0.5, 0.5]), support(&[0.9, 0.1])]).unwrap();
        assert_eq!(fuse_confidence(&dp).chosen_class, 0);

        let flat = build_profile(vec![support(&[0.5, 0.5]); 3]).unwrap();
        assert_eq!(fuse_confidence(&flat).chosen_class, 0); // row 0, class 0

        let second_wins = build_profile(vec![support(&[0.6, 0.4]), support(&[0.1, 0.9])]).unwrap();
        assert_eq!(fuse_confidence(&second_wins).chosen_class, 1);
    }

    #[test]
    fn a1_averages_components() {
        let out = aggregate_a1(&[fv(&[1.0, 2.0]), fv(&[3.0, 4.0])]).unwrap();
        assert_eq!(out.values(), &[2.0, 3.0]);
        let one = aggregate_a1(&[fv(&[5.0, 6.0])]).unwrap();
        assert_eq!(one.values(), &[5.0, 6.0]);
        let three = aggregate_a1(&[fv(&[1.0, 2.0]), fv(&[1.0, 4.0]), fv(&[1.0, 6.0])]).unwrap();
        assert_eq!(three.values(), &[1.0, 4.0]);
        assert!(aggregate_a1(&[]).is_err());

        let named = FeatureVector::new(vec!["x".into()], vec![1.0]).unwrap();
        assert!(aggregate_a1(&[named, fv(&[1.0])]).is_err());
    }

    #[test]
    fn a2_averages_supports() {
        let out = aggregate_a2(&[support(&[0.2, 0.8]), support(&[0.4, 0.6])]).unwrap();
        assert_abs_diff_eq!(out.supports()[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(out.supports()[1], 0.7, epsilon = 1e-12);
        let sym = aggregate_a2(&[support(&[1.0, 0.0]), support(&[0.0, 1.0])]).unwrap();
        assert_eq!(sym.supports(), &[0.5, 0.5]);
        assert!(aggregate_a2(&[]).is_err());
    }

    #[test]
    fn concat_prefixes_and_rejects_empty() {
        let a = ("a".to_string(), fv(&[1.0, 2.0]));
        let b = ("b".to_string(), fv(&[3.0]));
        let out = early_concat(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(out.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(out.names()[0], "a.f0");
        assert_eq!(out.names()[2], "b.f0");

        let swapped = early_concat(&[b, a]).unwrap();
        assert_eq!(swapped.values(), &[3.0, 1.0, 2.0]);

        let empty = ("e".to_string(), FeatureVector::new(vec![], vec![]).unwrap());
        assert!(early_concat(&[("a".into(), fv(&[1.0])), empty]).is_err());
    }

    #[test]
    fn kronecker_pure_and_augmented() {
        let a = ("a".to_string(), fv(&[1.0, 2.0]));
        let b = ("b".to_string(), fv(&[3.0, 4.0]));
        let pure = early_kronecker(&[a.clone(), b], false).unwrap();
        assert_eq!(pure.values(), &[3.0, 4.0, 6.0, 8.0]);

        let unit = ("u".to_string(), fv(&[1.0]));
        let id = early_kronecker(&[a.clone(), unit], false).unwrap();
        assert_eq!(id.values(), &[1.0, 2.0]);

        let c = ("c".to_string(), fv(&[3.0]));
        let aug = early_kronecker(&[a, c], true).unwrap();
        assert_eq!(aug.values(), &[3.0, 1.0, 6.0, 2.0, 3.0, 1.0]);
        assert_eq!(aug.len(), 6);
    }

    #[test]
    fn rule_ids_round_trip() {
        for rule in FusionRule::ALL {
            assert_eq!(rule.id().parse::<FusionRule>().unwrap(), rule);
        }
        assert!("bogus".parse::<FusionRule>().is_err());
        for mode in EarlyMode::ALL {
            assert_eq!(mode.id().parse::<EarlyMode>().unwrap(), mode);
        }
    }

    #[test]
    fn template_rules_require_templates() {
        let dp = dp_star();
        assert!(fuse(FusionRule::Dt, &dp, None).is_err());
        assert!(fuse(FusionRule::Ds, &dp, None).is_err());
    }

    #[test]
    fn mean_and_product_agree_for_single_row() {
        for row in [[0.3, 0.7], [0.5, 0.5], [0.9, 0.1]] {
            let dp = build_profile(vec![support(&row)]).unwrap();
            assert_eq!(fuse_mean(&dp).chosen_class, fuse_product(&dp).chosen_class);
        }
    }
}
