//! Leave-one-patient-out orchestration, AUC, and rank aggregation.
//!
//! The heavy lifting is factored so a grid of experiments can share work:
//! [`compute_supports`] trains the per-(fold, modality) classifiers once and
//! records every patient's soft output, then [`late_from_supports`] assembles
//! any late-fusion cell from that table. [`run_experiment`] wires the two
//! together for a single configuration; results are identical either way
//! because forest seeds derive only from `(seed, aggregation, modality,
//! fold)`.

mod auc;
mod extract;
pub mod manifest;
mod rank;
mod synth;

pub use auc::auc;
pub use extract::{encode_record, extract_features, ExtractionParams, FeatureSet, PatientFeatures};
pub use rank::{
    rank_flows, rank_row_asc, rank_row_desc, rank_unimodal_contribution, FlowRanking, RankMatrix,
};
pub use synth::{make_synthetic_manifest, SynthParams};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{predict_soft, train_forest, ClassSupport, ForestParams};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::fusion::{
    aggregate_a1, aggregate_a2, early_concat, early_kronecker, fit_decision_templates, fuse,
    DecisionProfile, EarlyMode, FusionRule,
};
use manifest::DatasetManifest;

const SEED_TAG_LATE: u64 = 1;
const SEED_TAG_EARLY: u64 = 2;

/// Patient-wise aggregation rule: average features before classification
/// (`A1`) or average soft scores after it (`A2`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Aggregation {
    #[serde(rename = "A1")]
    FeatureMean,
    #[serde(rename = "A2")]
    ScoreMean,
}

impl Aggregation {
    pub const ALL: [Aggregation; 2] = [Aggregation::FeatureMean, Aggregation::ScoreMean];

    pub fn id(self) -> &'static str {
        match self {
            Aggregation::FeatureMean => "A1",
            Aggregation::ScoreMean => "A2",
        }
    }

    fn index(self) -> u64 {
        match self {
            Aggregation::FeatureMean => 0,
            Aggregation::ScoreMean => 1,
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A1" => Ok(Aggregation::FeatureMean),
            "A2" => Ok(Aggregation::ScoreMean),
            other => Err(Error::Parse(format!("unknown aggregation `{other}`"))),
        }
    }
}

/// Late fusion with one of the eight rules, or an early-fusion baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FusionSpec {
    Late(FusionRule),
    Early { mode: EarlyMode, augment: bool },
}

impl fmt::Display for FusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FusionSpec::Late(rule) => write!(f, "{rule}"),
            FusionSpec::Early { mode, .. } => write!(f, "early-{mode}"),
        }
    }
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Modality subset, by manifest id.
    pub modalities: Vec<String>,
    pub aggregation: Aggregation,
    pub fusion: FusionSpec,
    pub forest: ForestParams,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self, features: &FeatureSet) -> Result<()> {
        if self.modalities.is_empty() {
            return Err(Error::InvalidParameter("empty modality subset".into()));
        }
        for (i, id) in self.modalities.iter().enumerate() {
            if self.modalities[..i].contains(id) {
                return Err(Error::InvalidParameter(format!(
                    "modality `{id}` listed twice"
                )));
            }
            if features.modality_index(id).is_none() {
                return Err(Error::InvalidParameter(format!(
                    "modality `{id}` is not in the dataset"
                )));
            }
        }
        if matches!(self.fusion, FusionSpec::Early { .. })
            && self.aggregation == Aggregation::ScoreMean
        {
            return Err(Error::InvalidParameter(
                "early fusion only supports the A1 (feature mean) aggregation".into(),
            ));
        }
        Ok(())
    }

    fn modality_indices(&self, features: &FeatureSet) -> Vec<usize> {
        self.modalities
            .iter()
            .map(|id| features.modality_index(id).expect("validated"))
            .collect()
    }
}

/// One leave-one-patient-out fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub test: usize,
    pub train: Vec<usize>,
}

fn folds_for_labels(labels: &[usize]) -> Result<Vec<Fold>> {
    if labels.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "leave-one-patient-out needs at least 2 patients, got {}",
            labels.len()
        )));
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(Error::SingleClass(
            "dataset holds only one class overall".into(),
        ));
    }
    Ok((0..labels.len())
        .map(|test| Fold {
            test,
            train: (0..labels.len()).filter(|&p| p != test).collect(),
        })
        .collect())
}

/// One fold per patient; training is everyone else.
pub fn lopo_folds(manifest: &DatasetManifest) -> Result<Vec<Fold>> {
    manifest.validate()?;
    let labels: Vec<usize> = manifest
        .patients
        .iter()
        .map(|p| manifest.class_index(&p.label))
        .collect::<Result<_>>()?;
    folds_for_labels(&labels)
}

impl FeatureSet {
    pub fn folds(&self) -> Result<Vec<Fold>> {
        folds_for_labels(&self.labels())
    }
}

/// Soft outputs of every patient under every `(fold, modality)` classifier
/// of one aggregation rule.
pub struct SupportTable {
    aggregation: Aggregation,
    modality_slots: Vec<usize>,
    /// `per_fold[fold][slot][patient]`
    per_fold: Vec<Vec<Vec<ClassSupport>>>,
}

impl SupportTable {
    pub fn aggregation(&self) -> Aggregation {
        self.aggregation
    }

    /// Supports of all patients under the classifier of `modality` trained
    /// on `fold`'s training partition.
    pub fn supports(&self, fold: usize, modality: usize) -> Result<&[ClassSupport]> {
        let slot = self
            .modality_slots
            .iter()
            .position(|&m| m == modality)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("modality {modality} not in support table"))
            })?;
        Ok(&self.per_fold[fold][slot])
    }
}

/// Trains the per-(fold, modality) classifiers of one aggregation rule and
/// tabulates every patient's soft output.
///
/// Forest seeds derive from `(seed, aggregation, modality, fold)` only, so a
/// table computed over all modalities agrees exactly with one computed for a
/// subset, and cells assembled from either are identical.
pub fn compute_supports(
    features: &FeatureSet,
    folds: &[Fold],
    aggregation: Aggregation,
    modality_indices: &[usize],
    forest: &ForestParams,
    seed: u64,
) -> Result<SupportTable> {
    // A1 aggregates each patient's vectors once, outside the fold loop.
    let a1_vectors = match aggregation {
        Aggregation::FeatureMean => {
            let mut per_modality = Vec::with_capacity(modality_indices.len());
            for &m in modality_indices {
                let vectors = features
                    .patients
                    .iter()
                    .map(|p| {
                        let vs: Vec<_> = p.samples[m].iter().map(|(_, v)| v.clone()).collect();
                        aggregate_a1(&vs)
                    })
                    .collect::<Result<Vec<_>>>()?;
                per_modality.push(vectors);
            }
            Some(per_modality)
        }
        Aggregation::ScoreMean => None,
    };

    let labels = features.labels();
    let per_fold: Vec<Vec<Vec<ClassSupport>>> = folds
        .par_iter()
        .enumerate()
        .map(|(fold_idx, fold)| {
            debug_assert!(!fold.train.contains(&fold.test), "patient leakage");
            let mut slots = Vec::with_capacity(modality_indices.len());
            for (slot, &m) in modality_indices.iter().enumerate() {
                let forest_params = ForestParams {
                    rng_seed: derive_seed(&[
                        seed,
                        SEED_TAG_LATE,
                        aggregation.index(),
                        m as u64,
                        fold_idx as u64,
                    ]),
                    ..forest.clone()
                };
                let fold_context = |e: Error| {
                    let context = format!(
                        "fold {fold_idx} (test patient `{}`), modality `{}`",
                        features.patients[fold.test].id, features.modality_ids[m]
                    );
                    match e {
                        Error::SingleClass(msg) => Error::SingleClass(format!("{context}: {msg}")),
                        Error::EmptyInput(msg) => Error::EmptyInput(format!("{context}: {msg}")),
                        other => other,
                    }
                };
                let supports = match aggregation {
                    Aggregation::FeatureMean => {
                        let vectors = &a1_vectors.as_ref().unwrap()[slot];
                        let training: Vec<_> = fold
                            .train
                            .iter()
                            .map(|&p| (vectors[p].clone(), labels[p]))
                            .collect();
                        let model =
                            train_forest(&training, &forest_params).map_err(fold_context)?;
                        vectors
                            .iter()
                            .map(|v| predict_soft(&model, v))
                            .collect::<Result<Vec<_>>>()?
                    }
                    Aggregation::ScoreMean => {
                        let mut training = Vec::new();
                        for &p in &fold.train {
                            for (_, v) in &features.patients[p].samples[m] {
                                training.push((v.clone(), labels[p]));
                            }
                        }
                        let model =
                            train_forest(&training, &forest_params).map_err(fold_context)?;
                        features
                            .patients
                            .iter()
                            .map(|p| {
                                let sample_scores: Vec<ClassSupport> = p.samples[m]
                                    .iter()
                                    .map(|(_, v)| predict_soft(&model, v))
                                    .collect::<Result<_>>()?;
                                aggregate_a2(&sample_scores)
                            })
                            .collect::<Result<Vec<_>>>()?
                    }
                };
                slots.push(supports);
            }
            Ok(slots)
        })
        .collect::<Result<_>>()?;

    Ok(SupportTable {
        aggregation,
        modality_slots: modality_indices.to_vec(),
        per_fold,
    })
}

/// Per-patient outcome of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientScore {
    pub patient_id: String,
    pub label: usize,
    /// Positive-class support for soft rules; 0/1 for crisp rules.
    pub score: f64,
}

/// Result of one experiment cell: per-patient scores pooled into one AUC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub per_patient: Vec<PatientScore>,
    pub auc: f64,
    pub config: ExperimentConfig,
}

/// Assembles a late-fusion cell from a precomputed support table.
pub fn late_from_supports(
    features: &FeatureSet,
    folds: &[Fold],
    table: &SupportTable,
    rule: FusionRule,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let indices = config.modality_indices(features);
    let labels = features.labels();
    let positive = features.positive;
    let ids: Vec<String> = config.modalities.clone();

    let mut per_patient = Vec::with_capacity(folds.len());
    for (fold_idx, fold) in folds.iter().enumerate() {
        let profile_of = |patient: usize| -> Result<DecisionProfile> {
            let rows = indices
                .iter()
                .map(|&m| Ok(table.supports(fold_idx, m)?[patient].clone()))
                .collect::<Result<Vec<_>>>()?;
            DecisionProfile::new(ids.clone(), rows)
        };

        let templates = if rule.needs_templates() {
            let training: Vec<(DecisionProfile, usize)> = fold
                .train
                .iter()
                .map(|&p| Ok((profile_of(p)?, labels[p])))
                .collect::<Result<_>>()?;
            Some(fit_decision_templates(&training).map_err(|e| {
                Error::SingleClass(format!(
                    "fold {fold_idx} (test patient `{}`): {e}",
                    features.patients[fold.test].id
                ))
            })?)
        } else {
            None
        };

        let outcome = fuse(rule, &profile_of(fold.test)?, templates.as_ref())?;
        let score = match &outcome.supports {
            Some(chi) => chi[positive],
            None => f64::from(outcome.chosen_class == positive),
        };
        per_patient.push(PatientScore {
            patient_id: features.patients[fold.test].id.clone(),
            label: labels[fold.test],
            score,
        });
    }

    let auc = auc::auc(
        &per_patient
            .iter()
            .map(|p| (p.score, p.label == positive))
            .collect::<Vec<_>>(),
    )?;
    Ok(ExperimentResult {
        per_patient,
        auc,
        config: config.clone(),
    })
}

fn run_early(
    features: &FeatureSet,
    folds: &[Fold],
    mode: EarlyMode,
    augment: bool,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let indices = config.modality_indices(features);
    let labels = features.labels();
    let positive = features.positive;
    let subset_mask: u64 = indices.iter().map(|&m| 1u64 << m).sum();

    // A1-aggregate, then fuse each patient's modality vectors into one.
    let fused: Vec<_> = features
        .patients
        .iter()
        .map(|p| {
            let parts: Vec<(String, crate::features::FeatureVector)> = indices
                .iter()
                .map(|&m| {
                    let vs: Vec<_> = p.samples[m].iter().map(|(_, v)| v.clone()).collect();
                    Ok((features.modality_ids[m].clone(), aggregate_a1(&vs)?))
                })
                .collect::<Result<_>>()?;
            match mode {
                EarlyMode::Concat => early_concat(&parts),
                EarlyMode::Kronecker => early_kronecker(&parts, augment),
            }
        })
        .collect::<Result<_>>()?;

    let per_patient: Vec<PatientScore> = folds
        .par_iter()
        .enumerate()
        .map(|(fold_idx, fold)| {
            let training: Vec<_> = fold
                .train
                .iter()
                .map(|&p| (fused[p].clone(), labels[p]))
                .collect();
            let forest_params = ForestParams {
                rng_seed: derive_seed(&[
                    config.seed,
                    SEED_TAG_EARLY,
                    match mode {
                        EarlyMode::Concat => 0,
                        EarlyMode::Kronecker => 1,
                    },
                    subset_mask,
                    fold_idx as u64,
                ]),
                ..config.forest.clone()
            };
            let model = train_forest(&training, &forest_params).map_err(|e| {
                let context = format!(
                    "fold {fold_idx} (test patient `{}`)",
                    features.patients[fold.test].id
                );
                match e {
                    Error::SingleClass(msg) => Error::SingleClass(format!("{context}: {msg}")),
                    Error::EmptyInput(msg) => Error::EmptyInput(format!("{context}: {msg}")),
                    other => other,
                }
            })?;
            let support = predict_soft(&model, &fused[fold.test])?;
            Ok(PatientScore {
                patient_id: features.patients[fold.test].id.clone(),
                label: labels[fold.test],
                score: support.supports()[positive],
            })
        })
        .collect::<Result<_>>()?;

    let auc = auc::auc(
        &per_patient
            .iter()
            .map(|p| (p.score, p.label == positive))
            .collect::<Vec<_>>(),
    )?;
    Ok(ExperimentResult {
        per_patient,
        auc,
        config: config.clone(),
    })
}

/// Runs one experiment cell end to end on extracted features.
///
/// Per fold: per-modality classifiers train on the training patients only
/// (A1 on patient-mean vectors, A2 on raw samples), decision templates fit
/// on training profiles when the rule needs them, and the held-out patient
/// contributes its positive-class support (soft rules) or 0/1 decision
/// (crisp rules). All per-patient scores pool into a single AUC.
pub fn run_experiment(
    features: &FeatureSet,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    config.validate(features)?;
    let folds = features.folds()?;
    match config.fusion {
        FusionSpec::Late(rule) => {
            let indices = config.modality_indices(features);
            let table = compute_supports(
                features,
                &folds,
                config.aggregation,
                &indices,
                &config.forest,
                config.seed,
            )?;
            late_from_supports(features, &folds, &table, rule, config)
        }
        FusionSpec::Early { mode, augment } => run_early(features, &folds, mode, augment, config),
    }
}

/// Convenience wrapper: extract features from a manifest, then run one cell.
pub fn run_experiment_on_manifest(
    manifest: &DatasetManifest,
    base_dir: &std::path::Path,
    extraction: &ExtractionParams,
    config: &ExperimentConfig,
) -> Result<ExperimentResult> {
    let features = extract_features(manifest, extraction, base_dir)?;
    run_experiment(&features, config)
}
