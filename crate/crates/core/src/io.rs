//! File formats: raster images (8-bit PNG, binary PGM/PPM), delimited
//! tabular data with a header row, and the feature dump tables.

use std::path::Path;

use image::DynamicImage;

use crate::error::{Error, Result};
use crate::evaluate::manifest::{ColumnSpec, Encoding};
use crate::features::FeatureVector;
use crate::preprocess::{AttrValue, GrayImage, RgbImage, TabularRecord};

/// A decoded raster image.
pub enum LoadedImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

/// Loads a PNG or PNM image. Grayscale inputs keep their bit depth (8 or
/// 16); color inputs come back as 8-bit RGB.
pub fn load_image(path: &Path) -> Result<LoadedImage> {
    let dynamic = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let unsupported = |kind: &str| Error::Decode {
        path: path.to_path_buf(),
        reason: format!("unsupported pixel format {kind}; expected 8/16-bit gray or 8-bit RGB"),
    };
    match dynamic {
        DynamicImage::ImageLuma8(img) => {
            let (w, h) = img.dimensions();
            let pixels = img.pixels().map(|p| p.0[0] as u32).collect();
            Ok(LoadedImage::Gray(GrayImage::new(
                w as usize, h as usize, 8, pixels,
            )?))
        }
        DynamicImage::ImageLuma16(img) => {
            let (w, h) = img.dimensions();
            let pixels = img.pixels().map(|p| p.0[0] as u32).collect();
            Ok(LoadedImage::Gray(GrayImage::new(
                w as usize, h as usize, 16, pixels,
            )?))
        }
        DynamicImage::ImageRgb8(img) => {
            let (w, h) = img.dimensions();
            let pixels = img.pixels().map(|p| p.0).collect();
            Ok(LoadedImage::Rgb(RgbImage::new(
                w as usize, h as usize, pixels,
            )?))
        }
        other => Err(unsupported(&format!("{:?}", other.color()))),
    }
}

/// Loads an image that must be grayscale.
pub fn load_gray_image(path: &Path) -> Result<GrayImage> {
    match load_image(path)? {
        LoadedImage::Gray(g) => Ok(g),
        LoadedImage::Rgb(_) => Err(Error::Decode {
            path: path.to_path_buf(),
            reason: "expected a grayscale image, found RGB".into(),
        }),
    }
}

/// Writes a binary 8-bit PGM. Mostly useful for fixtures and round-trips.
pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    if image.bit_depth() > 8 {
        return Err(Error::InvalidParameter(
            "write_pgm only handles 8-bit images".into(),
        ));
    }
    let mut data = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    data.extend(image.pixels().iter().map(|&p| p as u8));
    std::fs::write(path, data).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a delimited table with a header row into per-patient records.
///
/// The table must contain a `patient_id` column; every other column becomes
/// an attribute, typed by the declared encodings (numeric columns parse as
/// floats, categorical ones stay strings).
pub fn read_tabular(path: &Path, columns: &[ColumnSpec]) -> Result<Vec<(String, TabularRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();
    let id_col = headers
        .iter()
        .position(|h| h == "patient_id")
        .ok_or_else(|| Error::Decode {
            path: path.to_path_buf(),
            reason: "missing `patient_id` column".into(),
        })?;
    for spec in columns {
        if !headers.contains(&spec.name) {
            return Err(Error::Decode {
                path: path.to_path_buf(),
                reason: format!("declared column `{}` not in table header", spec.name),
            });
        }
    }

    let is_numeric = |name: &str| {
        columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| matches!(c.encoding, Encoding::Numeric))
    };

    let mut records = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: format!("row {}: {e}", row_idx + 2),
        })?;
        let mut attributes = Vec::new();
        let mut patient_id = String::new();
        for (col, value) in row.iter().enumerate() {
            if col == id_col {
                patient_id = value.to_string();
                continue;
            }
            let name = &headers[col];
            let attr = match is_numeric(name) {
                Some(true) => {
                    let number = value.parse::<f64>().map_err(|_| Error::Decode {
                        path: path.to_path_buf(),
                        reason: format!(
                            "row {}: column `{name}` is numeric but holds `{value}`",
                            row_idx + 2
                        ),
                    })?;
                    AttrValue::Number(number)
                }
                _ => AttrValue::Category(value.to_string()),
            };
            attributes.push((name.clone(), attr));
        }
        if patient_id.is_empty() {
            return Err(Error::Decode {
                path: path.to_path_buf(),
                reason: format!("row {} has an empty patient_id", row_idx + 2),
            });
        }
        records.push((patient_id, TabularRecord::new(attributes)?));
    }
    Ok(records)
}

/// One row of a feature dump.
pub struct FeatureRow {
    pub sample_id: String,
    pub patient_id: String,
    pub modality: String,
    pub label: String,
    pub features: FeatureVector,
}

/// Writes a feature table: `sample_id, patient_id, modality, label` followed
/// by one column per feature. All rows must share the same feature names.
pub fn write_feature_table(path: &Path, rows: &[FeatureRow]) -> Result<()> {
    let Some(first) = rows.first() else {
        return Err(Error::EmptyInput("feature table".into()));
    };
    let names = first.features.names();
    let mut writer = csv::Writer::from_path(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut header = vec!["sample_id", "patient_id", "modality", "label"];
    header.extend(names.iter().map(|s| s.as_str()));
    writer.write_record(&header).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    for row in rows {
        if row.features.names() != names {
            return Err(Error::DimensionMismatch(format!(
                "sample `{}` disagrees on feature names",
                row.sample_id
            )));
        }
        let mut record = vec![
            row.sample_id.clone(),
            row.patient_id.clone(),
            row.modality.clone(),
            row.label.clone(),
        ];
        record.extend(row.features.values().iter().map(|v| format!("{v:.12e}")));
        writer.write_record(&record).map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    }
    writer.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a feature table back; the inverse of [`write_feature_table`].
pub fn read_feature_table(path: &Path) -> Result<Vec<FeatureRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.len() < 4 || headers[..4] != ["sample_id", "patient_id", "modality", "label"] {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            reason: "not a feature table (unexpected header)".into(),
        });
    }
    let names: Vec<String> = headers[4..].to_vec();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Decode {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let values: Vec<f64> = record
            .iter()
            .skip(4)
            .map(|v| {
                v.parse::<f64>().map_err(|_| Error::Decode {
                    path: path.to_path_buf(),
                    reason: format!("bad feature value `{v}`"),
                })
            })
            .collect::<Result<_>>()?;
        rows.push(FeatureRow {
            sample_id: record[0].to_string(),
            patient_id: record[1].to_string(),
            modality: record[2].to_string(),
            label: record[3].to_string(),
            features: FeatureVector::new(names.clone(), values)?,
        });
    }
    Ok(rows)
}
