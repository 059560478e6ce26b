//! Per-modality soft classification: a from-scratch random forest with
//! entropy splitting behind a small, deterministic interface.
//!
//! Determinism contract: identical training samples plus identical
//! `rng_seed` produce an identical forest, regardless of how many threads
//! train it. Each tree draws from its own counter-based generator seeded by
//! `(rng_seed, tree_index)`, so trees never share random state.

mod tree;

pub use tree::entropy;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Soft classifier output: one support per class, in `[0, 1]`, summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSupport {
    supports: Vec<f64>,
}

impl ClassSupport {
    pub fn new(supports: Vec<f64>) -> Result<Self> {
        if supports.is_empty() {
            return Err(Error::EmptyInput("class support".into()));
        }
        if supports.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidValue(format!(
                "support outside [0,1]: {supports:?}"
            )));
        }
        let total: f64 = supports.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidValue(format!(
                "supports sum to {total}, expected 1"
            )));
        }
        Ok(Self { supports })
    }

    pub fn supports(&self) -> &[f64] {
        &self.supports
    }

    pub fn class_count(&self) -> usize {
        self.supports.len()
    }

    /// Index of the largest support; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        argmax_lowest(&self.supports)
    }
}

/// Largest-value index with lowest-index tie-breaking.
pub(crate) fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// How many features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSubset {
    /// `max(1, floor(sqrt(n)))` features per split.
    Sqrt,
    /// Every feature at every split.
    All,
    Fixed(usize),
}

impl FeatureSubset {
    fn resolve(self, n_features: usize) -> usize {
        match self {
            FeatureSubset::Sqrt => ((n_features as f64).sqrt().floor() as usize).max(1),
            FeatureSubset::All => n_features,
            FeatureSubset::Fixed(k) => k.clamp(1, n_features),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows until purity or `min_samples_split`.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub features_per_split: FeatureSubset,
    pub rng_seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_split: 2,
            features_per_split: FeatureSubset::Sqrt,
            rng_seed: 0,
        }
    }
}

/// A trained forest: immutable, cheap to share, serializable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedForest {
    trees: Vec<tree::Tree>,
    params: ForestParams,
    n_features: usize,
    class_count: usize,
}

const FOREST_FORMAT: &str = "modalfuse-forest";
const FOREST_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ForestFile {
    format: String,
    version: u32,
    forest: TrainedForest,
}

impl TrainedForest {
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    /// Serializes to a self-describing, versioned JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ForestFile {
            format: FOREST_FORMAT.into(),
            version: FOREST_VERSION,
            forest: self.clone(),
        })
        .expect("forest serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ForestFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("forest file: {e}")))?;
        if file.format != FOREST_FORMAT {
            return Err(Error::Parse(format!("unexpected format `{}`", file.format)));
        }
        if file.version != FOREST_VERSION {
            return Err(Error::Parse(format!(
                "unsupported forest version {}",
                file.version
            )));
        }
        Ok(file.forest)
    }
}

/// Trains a forest. Each tree fits a bootstrap resample (with replacement,
/// same size) of the training set; splits maximize information gain.
pub fn train_forest(
    samples: &[(FeatureVector, usize)],
    params: &ForestParams,
) -> Result<TrainedForest> {
    if params.n_trees == 0 {
        return Err(Error::InvalidParameter(
            "forest needs at least one tree".into(),
        ));
    }
    if samples.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "need at least 2 training samples, got {}",
            samples.len()
        )));
    }
    let n_features = samples[0].0.len();
    if let Some((v, _)) = samples.iter().find(|(v, _)| v.len() != n_features) {
        return Err(Error::DimensionMismatch(format!(
            "feature vector of length {} in a {n_features}-dimensional training set",
            v.len()
        )));
    }
    let class_count = samples.iter().map(|&(_, y)| y).max().unwrap() + 1;
    let first = samples[0].1;
    if samples.iter().all(|&(_, y)| y == first) {
        return Err(Error::SingleClass(format!(
            "all {} samples are class {first}",
            samples.len()
        )));
    }

    let n = samples.len();
    let mut xs = Vec::with_capacity(n * n_features);
    for (v, _) in samples {
        xs.extend_from_slice(v.values());
    }
    let ys: Vec<usize> = samples.iter().map(|&(_, y)| y).collect();

    let grow_params = tree::GrowParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split.max(2),
        features_per_split: params.features_per_split.resolve(n_features),
        n_features,
        n_classes: class_count,
    };

    let trees: Vec<tree::Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[params.rng_seed, t as u64]));
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            tree::grow(&xs, &ys, rows, &grow_params, &mut rng)
        })
        .collect();

    Ok(TrainedForest {
        trees,
        params: params.clone(),
        n_features,
        class_count,
    })
}

/// Average of the leaf frequency vectors across trees.
pub fn predict_soft(model: &TrainedForest, x: &FeatureVector) -> Result<ClassSupport> {
    if x.len() != model.n_features {
        return Err(Error::DimensionMismatch(format!(
            "input has {} features, model expects {}",
            x.len(),
            model.n_features
        )));
    }
    let mut acc = vec![0.0; model.class_count];
    for tree in &model.trees {
        for (a, f) in acc.iter_mut().zip(tree.leaf_freqs(x.values())) {
            *a += f;
        }
    }
    let n = model.trees.len() as f64;
    let supports: Vec<f64> = acc.iter().map(|a| (a / n).clamp(0.0, 1.0)).collect();
    ClassSupport::new(supports)
}

/// Maximum-membership class of [`predict_soft`]; ties resolve to the lowest
/// class index.
pub fn predict_crisp(model: &TrainedForest, x: &FeatureVector) -> Result<usize> {
    Ok(predict_soft(model, x)?.argmax())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::from_values(values.to_vec()).unwrap()
    }

    fn separable_1d() -> Vec<(FeatureVector, usize)> {
        vec![
            (fv(&[0.0]), 0),
            (fv(&[0.1]), 0),
            (fv(&[0.9]), 1),
            (fv(&[1.0]), 1),
        ]
    }

    fn params(n_trees: usize, seed: u64) -> ForestParams {
        ForestParams {
            n_trees,
            rng_seed: seed,
            ..ForestParams::default()
        }
    }

    #[test]
    fn separable_data_reaches_perfect_training_accuracy() {
        let data = separable_1d();
        let model = train_forest(&data, &params(16, 42)).unwrap();
        for (x, y) in &data {
            assert_eq!(predict_crisp(&model, x).unwrap(), *y);
        }
    }

    #[test]
    fn training_is_deterministic_given_seed() {
        let data = separable_1d();
        let a = train_forest(&data, &params(16, 7)).unwrap();
        let b = train_forest(&data, &params(16, 7)).unwrap();
        for x in [0.0, 0.05, 0.3, 0.5, 0.77, 1.0] {
            let pa = predict_soft(&a, &fv(&[x])).unwrap();
            let pb = predict_soft(&b, &fv(&[x])).unwrap();
            assert_eq!(pa.supports(), pb.supports());
        }
    }

    #[test]
    fn single_class_training_set_rejected() {
        let data = vec![(fv(&[0.0]), 0), (fv(&[1.0]), 0)];
        assert!(matches!(
            train_forest(&data, &params(4, 0)),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn ragged_dimensions_rejected() {
        let data = vec![(fv(&[0.0]), 0), (fv(&[1.0, 2.0]), 1)];
        assert!(matches!(
            train_forest(&data, &params(4, 0)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn prediction_dimension_checked() {
        let model = train_forest(&separable_1d(), &params(4, 0)).unwrap();
        assert!(predict_soft(&model, &fv(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn supports_sum_to_one_near_the_boundary() {
        let model = train_forest(&separable_1d(), &params(64, 11)).unwrap();
        for x in [-1.0, 0.0, 0.45, 0.5, 0.55, 2.0] {
            let s = predict_soft(&model, &fv(&[x])).unwrap();
            let total: f64 = s.supports().iter().sum();
            assert!((total - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn strong_support_near_training_mass() {
        let model = train_forest(&separable_1d(), &params(64, 42)).unwrap();
        let s = predict_soft(&model, &fv(&[0.05])).unwrap();
        assert!(s.supports()[0] > 0.9, "got {:?}", s.supports());
    }

    #[test]
    fn crisp_tie_break_is_lowest_index() {
        assert_eq!(ClassSupport::new(vec![0.6, 0.4]).unwrap().argmax(), 0);
        assert_eq!(ClassSupport::new(vec![0.5, 0.5]).unwrap().argmax(), 0);
        assert_eq!(ClassSupport::new(vec![0.1, 0.9]).unwrap().argmax(), 1);
    }

    #[test]
    fn more_trees_do_not_hurt_separable_accuracy() {
        let data = separable_1d();
        for seed in [1, 2, 3, 4] {
            let small = train_forest(&data, &params(1, seed)).unwrap();
            let large = train_forest(&data, &params(64, seed)).unwrap();
            let acc = |m: &TrainedForest| {
                data.iter()
                    .filter(|(x, y)| predict_crisp(m, x).unwrap() == *y)
                    .count()
            };
            assert!(acc(&large) >= acc(&small));
            assert_eq!(acc(&large), 4);
        }
    }

    #[test]
    fn prediction_invariant_to_tree_order() {
        let data = separable_1d();
        let mut model = train_forest(&data, &params(16, 5)).unwrap();
        let before = predict_soft(&model, &fv(&[0.4])).unwrap();
        model.trees.reverse();
        let after = predict_soft(&model, &fv(&[0.4])).unwrap();
        for (a, b) in before.supports().iter().zip(after.supports()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_preserves_predictions() {
        let model = train_forest(&separable_1d(), &params(8, 9)).unwrap();
        let restored = TrainedForest::from_json(&model.to_json()).unwrap();
        for x in [0.0, 0.5, 1.0] {
            assert_eq!(
                predict_soft(&model, &fv(&[x])).unwrap().supports(),
                predict_soft(&restored, &fv(&[x])).unwrap().supports()
            );
        }
        assert!(TrainedForest::from_json("{}").is_err());
    }
}
