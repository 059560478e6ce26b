//! Dataset manifest: a human-editable TOML document listing patients, labels,
//! and per-modality sample references (file paths or inline vectors).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a modality's raw samples are turned into feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModalityKind {
    /// Image crops; sliding-window patches are cut out, background-heavy
    /// patches dropped, and each patch yields 24 co-occurrence descriptors.
    /// RGB inputs are converted to their saturation channel first.
    Pathomics,
    /// Grayscale slice images forming one stack per patient; each slice
    /// yields 48 first-order + texture descriptors.
    Radiomics,
    /// Rows of a delimited table with declared per-column encodings.
    Tabular,
    /// Inline numeric vectors, used as features verbatim.
    Vector,
}

/// Per-column encoding of a tabular modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    Numeric,
    Ordinal(Vec<String>),
    Onehot(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub encoding: Encoding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalitySpec {
    pub id: String,
    pub kind: ModalityKind,
    /// Path of the delimited table (tabular modalities only), relative to
    /// the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    /// Column encodings (tabular modalities only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<ColumnSpec>,
}

/// Sample references of one patient in one modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleRefs {
    /// Image files, relative to the manifest.
    Paths(Vec<String>),
    /// Inline feature vectors.
    Inline(Vec<Vec<f64>>),
}

impl SampleRefs {
    pub fn len(&self) -> usize {
        match self {
            SampleRefs::Paths(p) => p.len(),
            SampleRefs::Inline(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientEntry {
    pub id: String,
    pub label: String,
    /// Modality id -> sample references. Tabular modalities take their rows
    /// from the table instead and need no entry here.
    #[serde(default)]
    pub samples: BTreeMap<String, SampleRefs>,
}

/// The dataset: binary classes, modalities, and patients in declared order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    /// Exactly two class names; their order fixes class indices 0 and 1.
    pub classes: Vec<String>,
    /// Name of the positive class; defaults to the second listed class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positive: Option<String>,
    pub modalities: Vec<ModalitySpec>,
    pub patients: Vec<PatientEntry>,
}

impl DatasetManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let manifest: DatasetManifest =
            toml::from_str(text).map_err(|e| Error::Manifest(format!("bad manifest: {e}")))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("manifest serialization cannot fail")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.len() != 2 || self.classes[0] == self.classes[1] {
            return Err(Error::Manifest(format!(
                "expected two distinct classes, got {:?}",
                self.classes
            )));
        }
        if let Some(pos) = &self.positive {
            if !self.classes.contains(pos) {
                return Err(Error::Manifest(format!(
                    "positive class `{pos}` is not one of {:?}",
                    self.classes
                )));
            }
        }
        if self.modalities.is_empty() {
            return Err(Error::Manifest("no modalities declared".into()));
        }
        for (i, m) in self.modalities.iter().enumerate() {
            if self.modalities[..i].iter().any(|o| o.id == m.id) {
                return Err(Error::Manifest(format!("duplicate modality id `{}`", m.id)));
            }
            // ids end up in report file names
            if m.id.is_empty()
                || !m
                    .id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
            {
                return Err(Error::Manifest(format!(
                    "modality id `{}` must be non-empty and use only [A-Za-z0-9_.-]",
                    m.id
                )));
            }
            if m.kind == ModalityKind::Tabular {
                if m.table.is_none() {
                    return Err(Error::Manifest(format!(
                        "tabular modality `{}` needs a `table` path",
                        m.id
                    )));
                }
                if m.columns.is_empty() {
                    return Err(Error::Manifest(format!(
                        "tabular modality `{}` needs column encodings",
                        m.id
                    )));
                }
            }
        }
        if self.patients.is_empty() {
            return Err(Error::Manifest("no patients listed".into()));
        }
        for (i, p) in self.patients.iter().enumerate() {
            if self.patients[..i].iter().any(|o| o.id == p.id) {
                return Err(Error::Manifest(format!("duplicate patient id `{}`", p.id)));
            }
            if !self.classes.contains(&p.label) {
                return Err(Error::Manifest(format!(
                    "patient `{}` has unknown label `{}`",
                    p.id, p.label
                )));
            }
            for m in &self.modalities {
                if m.kind == ModalityKind::Tabular {
                    continue; // row presence is checked when the table loads
                }
                match p.samples.get(&m.id) {
                    Some(refs) if !refs.is_empty() => {}
                    _ => {
                        return Err(Error::Manifest(format!(
                            "patient `{}` has no samples in modality `{}`",
                            p.id, m.id
                        )));
                    }
                }
            }
            for key in p.samples.keys() {
                if !self.modalities.iter().any(|m| &m.id == key) {
                    return Err(Error::Manifest(format!(
                        "patient `{}` references undeclared modality `{key}`",
                        p.id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Class index (0 or 1) of a label.
    pub fn class_index(&self, label: &str) -> Result<usize> {
        self.classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| Error::Manifest(format!("unknown class `{label}`")))
    }

    /// Index of the positive class.
    pub fn positive_index(&self) -> usize {
        match &self.positive {
            Some(p) => self.classes.iter().position(|c| c == p).unwrap_or(1),
            None => 1,
        }
    }

    pub fn modality(&self, id: &str) -> Option<&ModalitySpec> {
        self.modalities.iter().find(|m| m.id == id)
    }
}
