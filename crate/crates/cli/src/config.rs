//! The run configuration file: one TOML document holding the manifest path,
//! the experiment grid, and every extraction and classifier knob, all
//! preloaded with the pipeline defaults and individually overridable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use modalfuse::classify::{FeatureSubset, ForestParams};
use modalfuse::evaluate::{Aggregation, ExtractionParams};
use modalfuse::features::FeatureParams;
use modalfuse::fusion::{EarlyMode, FusionRule};
use modalfuse::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub forest: ForestConfig,
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: RunConfig =
            toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        config.grid.validate()?;
        Ok(config)
    }

    /// Directory the manifest's relative paths resolve against.
    pub fn base_dir(&self) -> PathBuf {
        self.manifest
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_aggregations")]
    pub aggregations: Vec<String>,
    #[serde(default = "default_rules")]
    pub fusion_rules: Vec<String>,
    #[serde(default = "default_early_modes")]
    pub early_modes: Vec<String>,
    /// Modality subsets to fuse; empty means every subset of size >= 2.
    #[serde(default)]
    pub modality_subsets: Vec<Vec<String>>,
    #[serde(default = "default_true")]
    pub include_unimodal: bool,
    /// Augment each vector with a unit component before the Kronecker
    /// product, keeping unimodal terms in the fused space.
    #[serde(default = "default_true")]
    pub kronecker_augment: bool,
}

fn default_aggregations() -> Vec<String> {
    vec!["A1".into(), "A2".into()]
}

fn default_rules() -> Vec<String> {
    FusionRule::ALL.iter().map(|r| r.id().to_string()).collect()
}

fn default_early_modes() -> Vec<String> {
    EarlyMode::ALL.iter().map(|m| m.id().to_string()).collect()
}

fn default_true() -> bool {
    true
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            aggregations: default_aggregations(),
            fusion_rules: default_rules(),
            early_modes: default_early_modes(),
            modality_subsets: vec![],
            include_unimodal: true,
            kronecker_augment: true,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.aggregations.is_empty() || self.fusion_rules.is_empty() {
            return Err(Error::InvalidParameter(
                "the rule grid must name at least one aggregation and one fusion rule".into(),
            ));
        }
        for _ in self.parsed_aggregations()? {}
        for _ in self.parsed_rules()? {}
        for _ in self.parsed_early_modes()? {}
        Ok(())
    }

    pub fn parsed_aggregations(&self) -> Result<Vec<Aggregation>, Error> {
        self.aggregations.iter().map(|s| s.parse()).collect()
    }

    pub fn parsed_rules(&self) -> Result<Vec<FusionRule>, Error> {
        self.fusion_rules.iter().map(|s| s.parse()).collect()
    }

    pub fn parsed_early_modes(&self) -> Result<Vec<EarlyMode>, Error> {
        self.early_modes.iter().map(|s| s.parse()).collect()
    }

    /// The subsets to evaluate, resolved against the dataset's modalities:
    /// the configured lists, or every subset of size >= 2 in combination
    /// order when none are configured.
    pub fn resolve_subsets(&self, modality_ids: &[String]) -> Result<Vec<Vec<String>>, Error> {
        if !self.modality_subsets.is_empty() {
            for subset in &self.modality_subsets {
                if subset.is_empty() {
                    return Err(Error::InvalidParameter("empty modality subset".into()));
                }
                for id in subset {
                    if !modality_ids.contains(id) {
                        return Err(Error::InvalidParameter(format!(
                            "subset names unknown modality `{id}`"
                        )));
                    }
                }
            }
            return Ok(self.modality_subsets.clone());
        }
        let n = modality_ids.len();
        if n < 2 {
            return Err(Error::InvalidParameter(
                "default grid needs at least two modalities".into(),
            ));
        }
        if n > 16 {
            return Err(Error::InvalidParameter(
                "default grid enumeration caps at 16 modalities".into(),
            ));
        }
        let mut subsets = Vec::new();
        for size in 2..=n as u32 {
            for mask in 0u32..1 << n {
                if mask.count_ones() != size {
                    continue;
                }
                subsets.push(
                    (0..n)
                        .filter(|i| mask & (1 << i) != 0)
                        .map(|i| modality_ids[i].clone())
                        .collect(),
                );
            }
        }
        Ok(subsets)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureConfig {
    #[serde(default = "d_glcm_levels")]
    pub glcm_levels: usize,
    #[serde(default = "d_glcm_delta")]
    pub glcm_delta: usize,
    #[serde(default = "d_lbp_points")]
    pub lbp_points: u32,
    #[serde(default = "d_lbp_radius")]
    pub lbp_radius: f64,
    #[serde(default)]
    pub emit_smoothness: bool,
    #[serde(default = "d_patch_window")]
    pub patch_window: usize,
    #[serde(default = "d_patch_stride")]
    pub patch_stride: usize,
    #[serde(default = "d_background_intensity")]
    pub background_intensity: u32,
    #[serde(default = "d_background_fraction")]
    pub background_max_fraction: f64,
}

fn d_glcm_levels() -> usize {
    32
}
fn d_glcm_delta() -> usize {
    1
}
fn d_lbp_points() -> u32 {
    8
}
fn d_lbp_radius() -> f64 {
    1.0
}
fn d_patch_window() -> usize {
    100
}
fn d_patch_stride() -> usize {
    60
}
fn d_background_intensity() -> u32 {
    220
}
fn d_background_fraction() -> f64 {
    0.2
}

impl Default for FeatureConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

impl FeatureConfig {
    pub fn extraction_params(&self) -> ExtractionParams {
        ExtractionParams {
            features: FeatureParams {
                glcm_levels: self.glcm_levels,
                glcm_delta: self.glcm_delta,
                lbp_points: self.lbp_points,
                lbp_radius: self.lbp_radius,
                emit_smoothness: self.emit_smoothness,
            },
            patch_window: self.patch_window,
            patch_stride: self.patch_stride,
            background_intensity: self.background_intensity,
            background_max_fraction: self.background_max_fraction,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestConfig {
    #[serde(default = "d_n_trees")]
    pub n_trees: usize,
    /// 0 means unlimited depth.
    #[serde(default)]
    pub max_depth: usize,
    #[serde(default = "d_min_split")]
    pub min_samples_split: usize,
    /// "sqrt", "all", or a number.
    #[serde(default = "d_features_per_split")]
    pub features_per_split: String,
}

fn d_n_trees() -> usize {
    100
}
fn d_min_split() -> usize {
    2
}
fn d_features_per_split() -> String {
    "sqrt".into()
}

impl Default for ForestConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

impl ForestConfig {
    pub fn forest_params(&self) -> Result<ForestParams, Error> {
        let features_per_split = match self.features_per_split.as_str() {
            "sqrt" => FeatureSubset::Sqrt,
            "all" => FeatureSubset::All,
            other => FeatureSubset::Fixed(other.parse::<usize>().map_err(|_| {
                Error::Parse(format!(
                    "features_per_split must be `sqrt`, `all`, or a number, got `{other}`"
                ))
            })?),
        };
        Ok(ForestParams {
            n_trees: self.n_trees,
            max_depth: (self.max_depth > 0).then_some(self.max_depth),
            min_samples_split: self.min_samples_split,
            features_per_split,
            rng_seed: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let config: RunConfig = toml::from_str("manifest = \"data/m.toml\"").unwrap();
        assert_eq!(config.seed, 0);
        assert_eq!(config.out, PathBuf::from("results"));
        assert_eq!(config.grid.aggregations, vec!["A1", "A2"]);
        assert_eq!(config.grid.fusion_rules.len(), 8);
        assert_eq!(config.features.patch_window, 100);
        assert_eq!(config.features.patch_stride, 60);
        assert_eq!(config.features.background_intensity, 220);
        assert_eq!(config.features.glcm_levels, 32);
        assert_eq!(config.forest.n_trees, 100);
        assert_eq!(config.base_dir(), PathBuf::from("data"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("manifest = \"m\"\nbogus = 1").is_err());
    }

    #[test]
    fn default_subsets_enumerate_pairs_then_larger() {
        let grid = GridConfig::default();
        let ids: Vec<String> = ["p", "r", "s"].map(String::from).to_vec();
        let subsets = grid.resolve_subsets(&ids).unwrap();
        assert_eq!(
            subsets,
            vec![
                vec!["p".to_string(), "r".to_string()],
                vec!["p".to_string(), "s".to_string()],
                vec!["r".to_string(), "s".to_string()],
                vec!["p".to_string(), "r".to_string(), "s".to_string()],
            ]
        );
    }

    #[test]
    fn explicit_subsets_validated() {
        let grid = GridConfig {
            modality_subsets: vec![vec!["a".into(), "zzz".into()]],
            ..GridConfig::default()
        };
        let ids: Vec<String> = ["a", "b"].map(String::from).to_vec();
        assert!(grid.resolve_subsets(&ids).is_err());
    }

    #[test]
    fn forest_feature_rule_parses() {
        let mut config = ForestConfig::default();
        assert!(matches!(
            config.forest_params().unwrap().features_per_split,
            FeatureSubset::Sqrt
        ));
        config.features_per_split = "3".into();
        assert!(matches!(
            config.forest_params().unwrap().features_per_split,
            FeatureSubset::Fixed(3)
        ));
        config.features_per_split = "half".into();
        assert!(config.forest_params().is_err());
        config.features_per_split = "all".into();
        config.max_depth = 4;
        let params = config.forest_params().unwrap();
        assert_eq!(params.max_depth, Some(4));
    }
}
