//! Deterministic synthetic dataset generator for exercising the pipeline.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::evaluate::manifest::{
    DatasetManifest, ModalityKind, ModalitySpec, PatientEntry, SampleRefs,
};

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub n_patients: usize,
    /// One entry per modality: the per-dimension mean separation between the
    /// two classes. 0 is pure noise.
    pub informativeness: Vec<f64>,
    /// Dimensions of each modality's feature vectors.
    pub dims: usize,
    /// Samples per patient per modality are drawn uniformly from this range.
    pub min_samples: usize,
    pub max_samples: usize,
    pub seed: u64,
}

impl SynthParams {
    pub fn new(n_patients: usize, informativeness: Vec<f64>, seed: u64) -> Self {
        Self {
            n_patients,
            informativeness,
            dims: 4,
            min_samples: 3,
            max_samples: 5,
            seed,
        }
    }
}

/// Builds a manifest of inline-vector modalities with class-conditional
/// Gaussian samples: class 0 dimensions are N(0, 1), class 1 dimensions are
/// N(informativeness, 1). Labels alternate so both classes are always
/// present; everything is a pure function of the seed.
pub fn make_synthetic_manifest(params: &SynthParams) -> Result<DatasetManifest> {
    if params.n_patients < 4 {
        return Err(Error::InvalidParameter(format!(
            "need at least 4 patients, got {}",
            params.n_patients
        )));
    }
    if params.informativeness.is_empty() {
        return Err(Error::InvalidParameter("need at least one modality".into()));
    }
    if params.dims == 0 || params.min_samples == 0 || params.min_samples > params.max_samples {
        return Err(Error::InvalidParameter(
            "dims and the sample range must be positive and ordered".into(),
        ));
    }

    let modalities: Vec<ModalitySpec> = (0..params.informativeness.len())
        .map(|m| ModalitySpec {
            id: format!("m{}", m + 1),
            kind: ModalityKind::Vector,
            table: None,
            columns: vec![],
        })
        .collect();

    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut patients = Vec::with_capacity(params.n_patients);
    for p in 0..params.n_patients {
        let class = p % 2;
        let mut samples = BTreeMap::new();
        for (m, &info) in params.informativeness.iter().enumerate() {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(&[params.seed, 0x5e_ed, p as u64, m as u64]));
            let n_samples = rng.random_range(params.min_samples..=params.max_samples);
            let shift = if class == 1 { info } else { 0.0 };
            let vectors: Vec<Vec<f64>> = (0..n_samples)
                .map(|_| {
                    (0..params.dims)
                        .map(|_| shift + noise.sample(&mut rng))
                        .collect()
                })
                .collect();
            samples.insert(format!("m{}", m + 1), SampleRefs::Inline(vectors));
        }
        patients.push(PatientEntry {
            id: format!("p{:03}", p + 1),
            label: if class == 1 { "positive" } else { "negative" }.into(),
            samples,
        });
    }

    let manifest = DatasetManifest {
        classes: vec!["negative".into(), "positive".into()],
        positive: None,
        modalities,
        patients,
    };
    manifest.validate()?;
    Ok(manifest)
}
