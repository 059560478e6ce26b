//! Turns a dataset manifest into per-patient feature vectors, modality by
//! modality.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::evaluate::manifest::{
    ColumnSpec, DatasetManifest, Encoding, ModalityKind, ModalitySpec, SampleRefs,
};
use crate::features::{pathomics_features, radiomics_features, FeatureParams, FeatureVector};
use crate::io::{load_gray_image, load_image, read_tabular, LoadedImage};
use crate::preprocess::{
    background_fraction, decompose_volume, encode_onehot, encode_ordinal, extract_patches,
    saturation_channel, AttrValue, GrayImage, ImageStack, TabularRecord,
};

/// Everything the extraction stage needs besides the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionParams {
    pub features: FeatureParams,
    /// Sliding-window size for patch extraction.
    pub patch_window: usize,
    /// Sliding-window stride.
    pub patch_stride: usize,
    /// Intensities at or above this value count as background.
    pub background_intensity: u32,
    /// Patches with strictly more than this background fraction are dropped.
    pub background_max_fraction: f64,
}

impl Default for ExtractionParams {
    fn default() -> Self {
        Self {
            features: FeatureParams::default(),
            patch_window: 100,
            patch_stride: 60,
            background_intensity: 220,
            background_max_fraction: 0.2,
        }
    }
}

/// Extracted features for every patient and modality, in manifest order.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub class_names: Vec<String>,
    /// Index of the positive class in `class_names`.
    pub positive: usize,
    pub modality_ids: Vec<String>,
    pub patients: Vec<PatientFeatures>,
}

#[derive(Debug, Clone)]
pub struct PatientFeatures {
    pub id: String,
    pub label: usize,
    /// `samples[modality][k] = (sample_id, features)`
    pub samples: Vec<Vec<(String, FeatureVector)>>,
}

impl FeatureSet {
    pub fn modality_index(&self, id: &str) -> Option<usize> {
        self.modality_ids.iter().position(|m| m == id)
    }

    pub fn labels(&self) -> Vec<usize> {
        self.patients.iter().map(|p| p.label).collect()
    }
}

/// Runs the full extraction. File references resolve relative to `base_dir`
/// (normally the manifest's directory).
pub fn extract_features(
    manifest: &DatasetManifest,
    params: &ExtractionParams,
    base_dir: &Path,
) -> Result<FeatureSet> {
    manifest.validate()?;
    let mut patients: Vec<PatientFeatures> = manifest
        .patients
        .iter()
        .map(|p| {
            Ok(PatientFeatures {
                id: p.id.clone(),
                label: manifest.class_index(&p.label)?,
                samples: vec![Vec::new(); manifest.modalities.len()],
            })
        })
        .collect::<Result<_>>()?;

    for (m_idx, modality) in manifest.modalities.iter().enumerate() {
        match modality.kind {
            ModalityKind::Tabular => {
                let rows = load_tabular_modality(modality, base_dir)?;
                for patient in patients.iter_mut() {
                    let Some(records) = rows.get(&patient.id) else {
                        return Err(Error::Manifest(format!(
                            "patient `{}` has no rows in table `{}`",
                            patient.id,
                            modality.table.as_deref().unwrap_or("?")
                        )));
                    };
                    for (k, record) in records.iter().enumerate() {
                        let features = encode_record(record, &modality.columns)?;
                        patient.samples[m_idx].push((format!("{}:{k}", patient.id), features));
                    }
                }
            }
            _ => {
                for (patient, entry) in patients.iter_mut().zip(&manifest.patients) {
                    let refs = entry.samples.get(&modality.id).ok_or_else(|| {
                        Error::Manifest(format!(
                            "patient `{}` has no samples in modality `{}`",
                            patient.id, modality.id
                        ))
                    })?;
                    patient.samples[m_idx] =
                        extract_for_patient(&patient.id, modality, refs, params, base_dir)?;
                    if patient.samples[m_idx].is_empty() {
                        return Err(Error::Manifest(format!(
                            "patient `{}` ended up with no usable samples in modality `{}` \
                             (all patches filtered?)",
                            patient.id, modality.id
                        )));
                    }
                }
            }
        }
    }

    Ok(FeatureSet {
        class_names: manifest.classes.clone(),
        positive: manifest.positive_index(),
        modality_ids: manifest.modalities.iter().map(|m| m.id.clone()).collect(),
        patients,
    })
}

fn extract_for_patient(
    patient_id: &str,
    modality: &ModalitySpec,
    refs: &SampleRefs,
    params: &ExtractionParams,
    base_dir: &Path,
) -> Result<Vec<(String, FeatureVector)>> {
    match (modality.kind, refs) {
        (ModalityKind::Vector, SampleRefs::Inline(vectors)) => vectors
            .iter()
            .enumerate()
            .map(|(k, v)| {
                Ok((
                    format!("{patient_id}:{k}"),
                    FeatureVector::from_values(v.clone())?,
                ))
            })
            .collect(),
        (ModalityKind::Vector, SampleRefs::Paths(_)) => Err(Error::Manifest(format!(
            "vector modality `{}` takes inline samples, not paths",
            modality.id
        ))),
        (ModalityKind::Pathomics, SampleRefs::Paths(paths)) => {
            let mut out = Vec::new();
            for rel in paths {
                let image = load_crop(&base_dir.join(rel))?;
                let patches = extract_patches(&image, params.patch_window, params.patch_stride)?;
                for (k, patch) in patches.iter().enumerate() {
                    let bg = background_fraction(patch, |p| p >= params.background_intensity);
                    if bg > params.background_max_fraction {
                        continue;
                    }
                    out.push((
                        format!("{rel}#{k}"),
                        pathomics_features(patch, &params.features)?,
                    ));
                }
            }
            Ok(out)
        }
        (ModalityKind::Radiomics, SampleRefs::Paths(paths)) => {
            let slices: Vec<GrayImage> = paths
                .iter()
                .map(|rel| load_gray_image(&base_dir.join(rel)))
                .collect::<Result<_>>()?;
            let stack = ImageStack::new(patient_id, slices)?;
            decompose_volume(&stack)?
                .into_iter()
                .map(|(idx, slice)| {
                    Ok((
                        format!("{}#{idx}", paths[idx]),
                        radiomics_features(&slice, &params.features)?,
                    ))
                })
                .collect()
        }
        (ModalityKind::Pathomics | ModalityKind::Radiomics, SampleRefs::Inline(_)) => {
            Err(Error::Manifest(format!(
                "image modality `{}` takes file paths, not inline vectors",
                modality.id
            )))
        }
        (ModalityKind::Tabular, _) => unreachable!("tabular handled by the table loader"),
    }
}

/// Loads a crop for the patch pipeline; RGB inputs become their saturation
/// channel, grayscale inputs pass through.
fn load_crop(path: &Path) -> Result<GrayImage> {
    Ok(match load_image(path)? {
        LoadedImage::Gray(g) => g,
        LoadedImage::Rgb(rgb) => saturation_channel(&rgb),
    })
}

fn load_tabular_modality(
    modality: &ModalitySpec,
    base_dir: &Path,
) -> Result<BTreeMap<String, Vec<TabularRecord>>> {
    let table = modality
        .table
        .as_ref()
        .ok_or_else(|| Error::Manifest(format!("modality `{}` has no table", modality.id)))?;
    let rows = read_tabular(&base_dir.join(table), &modality.columns)?;
    let mut by_patient: BTreeMap<String, Vec<TabularRecord>> = BTreeMap::new();
    for (patient_id, record) in rows {
        by_patient.entry(patient_id).or_default().push(record);
    }
    Ok(by_patient)
}

/// Encodes a tabular record into a feature vector following the declared
/// column order: numeric columns pass through, ordinal columns become their
/// position, one-hot columns expand to `name=category` indicators.
pub fn encode_record(record: &TabularRecord, columns: &[ColumnSpec]) -> Result<FeatureVector> {
    let mut names = Vec::new();
    let mut values = Vec::new();
    for spec in columns {
        let value = record
            .get(&spec.name)
            .ok_or_else(|| Error::Manifest(format!("record is missing column `{}`", spec.name)))?;
        match (&spec.encoding, value) {
            (Encoding::Numeric, AttrValue::Number(x)) => {
                names.push(spec.name.clone());
                values.push(*x);
            }
            (Encoding::Numeric, AttrValue::Category(s)) => {
                return Err(Error::Parse(format!(
                    "column `{}` is numeric but holds `{s}`",
                    spec.name
                )));
            }
            (Encoding::Ordinal(ordering), AttrValue::Category(s)) => {
                names.push(spec.name.clone());
                values.push(encode_ordinal(s, ordering)? as f64);
            }
            (Encoding::Onehot(domain), AttrValue::Category(s)) => {
                for (cat, bit) in domain.iter().zip(encode_onehot(s, domain)?) {
                    names.push(format!("{}={cat}", spec.name));
                    values.push(bit);
                }
            }
            (_, AttrValue::Number(x)) => {
                return Err(Error::Parse(format!(
                    "column `{}` is categorical but holds number {x}",
                    spec.name
                )));
            }
        }
    }
    FeatureVector::new(names, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluate::synth::{make_synthetic_manifest, SynthParams};

    #[test]
    fn synthetic_manifest_extracts_verbatim() {
        let manifest = make_synthetic_manifest(&SynthParams::new(6, vec![1.0, 2.0], 3)).unwrap();
        let features =
            extract_features(&manifest, &ExtractionParams::default(), Path::new(".")).unwrap();
        assert_eq!(features.modality_ids, vec!["m1", "m2"]);
        assert_eq!(features.patients.len(), 6);
        assert_eq!(features.positive, 1);
        let p0 = &features.patients[0];
        let SampleRefs::Inline(expected) = &manifest.patients[0].samples["m1"] else {
            panic!("synthetic manifests are inline");
        };
        assert_eq!(p0.samples[0].len(), expected.len());
        assert_eq!(p0.samples[0][0].1.values(), expected[0].as_slice());
    }

    #[test]
    fn encode_record_mixes_encodings() {
        let record = TabularRecord::new(vec![
            ("T".into(), AttrValue::Category("T3".into())),
            ("sex".into(), AttrValue::Category("F".into())),
            ("age".into(), AttrValue::Number(61.0)),
        ])
        .unwrap();
        let columns = vec![
            ColumnSpec {
                name: "T".into(),
                encoding: Encoding::Ordinal(vec![
                    "T1".into(),
                    "T2".into(),
                    "T3".into(),
                    "T4".into(),
                ]),
            },
            ColumnSpec {
                name: "sex".into(),
                encoding: Encoding::Onehot(vec!["M".into(), "F".into()]),
            },
            ColumnSpec {
                name: "age".into(),
                encoding: Encoding::Numeric,
            },
        ];
        let fv = encode_record(&record, &columns).unwrap();
        assert_eq!(fv.names(), &["T", "sex=M", "sex=F", "age"]);
        assert_eq!(fv.values(), &[2.0, 0.0, 1.0, 61.0]);
    }

    #[test]
    fn unknown_category_propagates() {
        let record =
            TabularRecord::new(vec![("T".into(), AttrValue::Category("TX".into()))]).unwrap();
        let columns = vec![ColumnSpec {
            name: "T".into(),
            encoding: Encoding::Ordinal(vec!["T1".into(), "T2".into()]),
        }];
        assert!(matches!(
            encode_record(&record, &columns),
            Err(Error::UnknownCategory { .. })
        ));
    }
}
