//! Expands the configured experiment grid and runs every cell, sharing the
//! per-(fold, modality) classifier work across cells.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use modalfuse::classify::ForestParams;
use modalfuse::evaluate::{
    compute_supports, late_from_supports, run_experiment, Aggregation, ExperimentConfig,
    FeatureSet, FusionSpec, PatientScore,
};
use modalfuse::fusion::{EarlyMode, FusionRule};
use modalfuse::{Error, Result};

use crate::config::GridConfig;

/// Identity of one grid cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellKind {
    Late {
        aggregation: Aggregation,
        rule: FusionRule,
        subset: Vec<String>,
    },
    Early {
        mode: EarlyMode,
        subset: Vec<String>,
    },
    Unimodal {
        aggregation: Aggregation,
        modality: String,
    },
}

impl CellKind {
    /// Stable file-name stem for the cell's score table.
    pub fn file_stem(&self) -> String {
        match self {
            CellKind::Late {
                aggregation,
                rule,
                subset,
            } => format!("late_{aggregation}_{rule}_{}", subset.join("+")),
            CellKind::Early { mode, subset } => {
                format!("early_{mode}_{}", subset.join("+"))
            }
            CellKind::Unimodal {
                aggregation,
                modality,
            } => format!("uni_{aggregation}_{modality}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub kind: CellKind,
    pub auc: f64,
    pub per_patient: Vec<PatientScore>,
}

/// Everything one `run` invocation produced, in deterministic order:
/// late cells grouped by (aggregation, rule) over subsets, then unimodal
/// cells, then early cells.
pub struct GridResults {
    pub aggregations: Vec<Aggregation>,
    pub rules: Vec<FusionRule>,
    pub early_modes: Vec<EarlyMode>,
    pub subsets: Vec<Vec<String>>,
    pub cells: Vec<CellResult>,
}

pub fn run_grid(
    features: &FeatureSet,
    grid: &GridConfig,
    forest: &ForestParams,
    seed: u64,
) -> Result<GridResults> {
    let aggregations = grid.parsed_aggregations()?;
    let rules = grid.parsed_rules()?;
    let early_modes = grid.parsed_early_modes()?;
    let subsets = grid.resolve_subsets(&features.modality_ids)?;

    let folds = features.folds()?;

    // Every modality any cell touches; supports are computed once per
    // aggregation and shared by all late and unimodal cells.
    let mut needed: Vec<usize> = Vec::new();
    for subset in &subsets {
        for id in subset {
            let idx = features
                .modality_index(id)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown modality `{id}`")))?;
            if !needed.contains(&idx) {
                needed.push(idx);
            }
        }
    }
    if grid.include_unimodal {
        needed = (0..features.modality_ids.len()).collect();
    }
    needed.sort_unstable();

    let mut cells = Vec::new();
    for &aggregation in &aggregations {
        let table = compute_supports(features, &folds, aggregation, &needed, forest, seed)?;
        for &rule in &rules {
            for subset in &subsets {
                let config = cell_config(
                    subset.clone(),
                    aggregation,
                    FusionSpec::Late(rule),
                    forest,
                    seed,
                );
                config.validate(features)?;
                let result = late_from_supports(features, &folds, &table, rule, &config)?;
                cells.push(CellResult {
                    kind: CellKind::Late {
                        aggregation,
                        rule,
                        subset: subset.clone(),
                    },
                    auc: result.auc,
                    per_patient: result.per_patient,
                });
            }
        }
        if grid.include_unimodal {
            for modality in &features.modality_ids {
                // with a single modality every late rule collapses to the
                // classifier's own scores; mean stands in for all of them
                let config = cell_config(
                    vec![modality.clone()],
                    aggregation,
                    FusionSpec::Late(FusionRule::Mean),
                    forest,
                    seed,
                );
                config.validate(features)?;
                let result =
                    late_from_supports(features, &folds, &table, FusionRule::Mean, &config)?;
                cells.push(CellResult {
                    kind: CellKind::Unimodal {
                        aggregation,
                        modality: modality.clone(),
                    },
                    auc: result.auc,
                    per_patient: result.per_patient,
                });
            }
        }
    }

    // Early-fusion baselines: A1 only, parallel across cells.
    let early_jobs: Vec<(EarlyMode, Vec<String>)> = early_modes
        .iter()
        .flat_map(|&mode| subsets.iter().map(move |s| (mode, s.clone())))
        .collect();
    let early_cells: Vec<CellResult> = early_jobs
        .into_par_iter()
        .map(|(mode, subset)| {
            let config = cell_config(
                subset.clone(),
                Aggregation::FeatureMean,
                FusionSpec::Early {
                    mode,
                    augment: grid.kronecker_augment,
                },
                forest,
                seed,
            );
            let result = run_experiment(features, &config)?;
            Ok(CellResult {
                kind: CellKind::Early { mode, subset },
                auc: result.auc,
                per_patient: result.per_patient,
            })
        })
        .collect::<Result<_>>()?;
    cells.extend(early_cells);

    Ok(GridResults {
        aggregations,
        rules,
        early_modes,
        subsets,
        cells,
    })
}

fn cell_config(
    modalities: Vec<String>,
    aggregation: Aggregation,
    fusion: FusionSpec,
    forest: &ForestParams,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        modalities,
        aggregation,
        fusion,
        forest: forest.clone(),
        seed,
    }
}

impl GridResults {
    pub fn late_auc(
        &self,
        aggregation: Aggregation,
        rule: FusionRule,
        subset: &[String],
    ) -> Option<f64> {
        self.cells.iter().find_map(|c| match &c.kind {
            CellKind::Late {
                aggregation: a,
                rule: r,
                subset: s,
            } if *a == aggregation && *r == rule && s == subset => Some(c.auc),
            _ => None,
        })
    }

    pub fn unimodal_auc(&self, aggregation: Aggregation, modality: &str) -> Option<f64> {
        self.cells.iter().find_map(|c| match &c.kind {
            CellKind::Unimodal {
                aggregation: a,
                modality: m,
            } if *a == aggregation && m == modality => Some(c.auc),
            _ => None,
        })
    }

    pub fn early_auc(&self, mode: EarlyMode, subset: &[String]) -> Option<f64> {
        self.cells.iter().find_map(|c| match &c.kind {
            CellKind::Early { mode: m, subset: s } if *m == mode && s == subset => Some(c.auc),
            _ => None,
        })
    }

    pub fn late_cell_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c.kind, CellKind::Late { .. }))
            .count()
    }

    pub fn early_cell_count(&self) -> usize {
        self.cells
            .iter()
            .filter(|c| matches!(c.kind, CellKind::Early { .. }))
            .count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use modalfuse::evaluate::{
        extract_features, make_synthetic_manifest, ExtractionParams, SynthParams,
    };
    use std::path::Path;

    fn small_features() -> FeatureSet {
        let manifest =
            make_synthetic_manifest(&SynthParams::new(6, vec![2.0, 1.0, 0.5], 4)).unwrap();
        extract_features(&manifest, &ExtractionParams::default(), Path::new(".")).unwrap()
    }

    fn small_forest() -> ForestParams {
        ForestParams {
            n_trees: 8,
            ..ForestParams::default()
        }
    }

    #[test]
    fn default_grid_counts() {
        let features = small_features();
        let results = run_grid(&features, &GridConfig::default(), &small_forest(), 3).unwrap();
        assert_eq!(results.subsets.len(), 4);
        assert_eq!(results.late_cell_count(), 2 * 8 * 4);
        assert_eq!(results.early_cell_count(), 2 * 4);
        let unimodal = results
            .cells
            .iter()
            .filter(|c| matches!(c.kind, CellKind::Unimodal { .. }))
            .count();
        assert_eq!(unimodal, 2 * 3);
    }

    #[test]
    fn grid_cells_match_standalone_experiments() {
        let features = small_features();
        let results = run_grid(&features, &GridConfig::default(), &small_forest(), 9).unwrap();
        let subset: Vec<String> = vec!["m1".into(), "m3".into()];
        let config = ExperimentConfig {
            modalities: subset.clone(),
            aggregation: Aggregation::ScoreMean,
            fusion: FusionSpec::Late(FusionRule::Ds),
            forest: small_forest(),
            seed: 9,
        };
        let standalone = run_experiment(&features, &config).unwrap();
        let grid_auc = results
            .late_auc(Aggregation::ScoreMean, FusionRule::Ds, &subset)
            .unwrap();
        assert_eq!(standalone.auc, grid_auc);
    }

    #[test]
    fn single_cell_grid() {
        let features = small_features();
        let grid = GridConfig {
            aggregations: vec!["A1".into()],
            fusion_rules: vec!["mean".into()],
            early_modes: vec![],
            modality_subsets: vec![vec!["m1".into(), "m2".into()]],
            include_unimodal: false,
            kronecker_augment: true,
        };
        let results = run_grid(&features, &grid, &small_forest(), 1).unwrap();
        assert_eq!(results.cells.len(), 1);
        assert_eq!(results.cells[0].kind.file_stem(), "late_A1_mean_m1+m2");
    }
}
