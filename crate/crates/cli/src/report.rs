//! Result files: every table goes out twice, as delimited text for machines
//! and as an aligned table for people. Byte-identical output for identical
//! runs is part of the contract, so all numbers use fixed formatting.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use modalfuse::evaluate::{Aggregation, PatientScore};
use modalfuse::fusion::{EarlyMode, FusionRule};
use modalfuse::{Error, Result};

use crate::grid::GridResults;

/// Sidecar describing a results directory, so `compare` can reconstruct the
/// grid without re-reading the run config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub classes: Vec<String>,
    pub positive: String,
    pub modalities: Vec<String>,
    pub aggregations: Vec<String>,
    pub fusion_rules: Vec<String>,
    pub early_modes: Vec<String>,
    pub subsets: Vec<Vec<String>>,
    pub include_unimodal: bool,
    pub seed: u64,
}

impl RunMeta {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join("run_meta.toml");
        let text = fs::read_to_string(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn subset_label(subset: &[String]) -> String {
    subset.join("+")
}

/// Writes a table as CSV (6-decimal values) and as an aligned text block
/// (3 decimals, mirroring the usual reporting style).
fn write_table(
    out: &Path,
    stem: &str,
    corner: &str,
    columns: &[String],
    rows: &[(String, Vec<Option<f64>>)],
) -> Result<()> {
    let mut csv_text = String::new();
    csv_text.push_str(corner);
    for c in columns {
        csv_text.push(',');
        csv_text.push_str(c);
    }
    csv_text.push('\n');
    for (label, values) in rows {
        csv_text.push_str(label);
        for v in values {
            csv_text.push(',');
            if let Some(v) = v {
                csv_text.push_str(&format!("{v:.6}"));
            }
        }
        csv_text.push('\n');
    }
    write_file(&out.join(format!("{stem}.csv")), &csv_text)?;

    let label_width = rows
        .iter()
        .map(|(l, _)| l.len())
        .chain([corner.len()])
        .max()
        .unwrap_or(8);
    let col_width = columns.iter().map(|c| c.len()).max().unwrap_or(5).max(5);
    let mut txt = format!("{corner:<label_width$}");
    for c in columns {
        txt.push_str(&format!("  {c:>col_width$}"));
    }
    txt.push('\n');
    for (label, values) in rows {
        txt.push_str(&format!("{label:<label_width$}"));
        for v in values {
            match v {
                Some(v) => txt.push_str(&format!("  {:>col_width$}", format!("{v:.3}"))),
                None => txt.push_str(&format!("  {:>col_width$}", "-")),
            }
        }
        txt.push('\n');
    }
    write_file(&out.join(format!("{stem}.txt")), &txt)
}

/// Writes the complete results directory for one run.
pub fn write_run_results(out: &Path, results: &GridResults, meta: &RunMeta) -> Result<PathBuf> {
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let scores_dir = out.join("scores");
    fs::create_dir_all(&scores_dir).map_err(|source| Error::Io {
        path: scores_dir.clone(),
        source,
    })?;

    let subset_columns: Vec<String> = results.subsets.iter().map(|s| subset_label(s)).collect();

    // late grid: one row per (aggregation, rule)
    let mut late_rows = Vec::new();
    for &aggregation in &results.aggregations {
        for &rule in &results.rules {
            let values = results
                .subsets
                .iter()
                .map(|s| results.late_auc(aggregation, rule, s))
                .collect();
            late_rows.push((format!("{aggregation}+{rule}"), values));
        }
    }
    write_table(out, "late_grid", "rule", &subset_columns, &late_rows)?;

    // early grid
    let mut early_rows = Vec::new();
    for &mode in &results.early_modes {
        let values = results
            .subsets
            .iter()
            .map(|s| results.early_auc(mode, s))
            .collect();
        early_rows.push((mode.to_string(), values));
    }
    if !early_rows.is_empty() {
        write_table(out, "early_grid", "mode", &subset_columns, &early_rows)?;
    }

    // unimodal flows
    if meta.include_unimodal {
        let mut uni_rows = Vec::new();
        for &aggregation in &results.aggregations {
            let values = meta
                .modalities
                .iter()
                .map(|m| results.unimodal_auc(aggregation, m))
                .collect();
            uni_rows.push((aggregation.to_string(), values));
        }
        write_table(out, "unimodal", "aggregation", &meta.modalities, &uni_rows)?;
    }

    // per-cell patient scores
    for cell in &results.cells {
        let path = scores_dir.join(format!("{}.csv", cell.kind.file_stem()));
        let mut text = String::from("patient_id,label,score\n");
        for p in &cell.per_patient {
            text.push_str(&format!(
                "{},{},{:.6}\n",
                p.patient_id, meta.classes[p.label], p.score
            ));
        }
        write_file(&path, &text)?;
    }

    let meta_text = toml::to_string_pretty(meta).expect("meta serialization");
    write_file(&out.join("run_meta.toml"), &meta_text)?;
    Ok(out.to_path_buf())
}

/// Grids and scores read back from a results directory.
pub struct StoredResults {
    pub meta: RunMeta,
    /// `late[agg][rule][subset]`
    pub late: Vec<Vec<Vec<f64>>>,
    /// `early[mode][subset]`
    pub early: Vec<Vec<f64>>,
    /// `unimodal[agg][modality]`
    pub unimodal: Vec<Vec<f64>>,
    pub dir: PathBuf,
}

impl StoredResults {
    pub fn aggregations(&self) -> Result<Vec<Aggregation>> {
        self.meta.aggregations.iter().map(|s| s.parse()).collect()
    }

    pub fn rules(&self) -> Result<Vec<FusionRule>> {
        self.meta.fusion_rules.iter().map(|s| s.parse()).collect()
    }

    pub fn early_modes(&self) -> Result<Vec<EarlyMode>> {
        self.meta.early_modes.iter().map(|s| s.parse()).collect()
    }

    /// Per-patient scores of one cell, keyed by its file stem.
    pub fn scores(&self, stem: &str) -> Result<Vec<PatientScore>> {
        let path = self.dir.join("scores").join(format!("{stem}.csv"));
        let text = fs::read_to_string(&path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "{}: bad score row `{line}`",
                    path.display()
                )));
            }
            let label = self
                .meta
                .classes
                .iter()
                .position(|c| c == fields[1])
                .ok_or_else(|| Error::Parse(format!("unknown class `{}`", fields[1])))?;
            let score = fields[2]
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad score `{}`", fields[2])))?;
            out.push(PatientScore {
                patient_id: fields[0].to_string(),
                label,
                score,
            });
        }
        Ok(out)
    }
}

fn read_grid_csv(path: &Path, expect_rows: usize, expect_cols: usize) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expect_cols + 1 {
            return Err(Error::Parse(format!(
                "{}: row `{}` has {} columns, expected {}",
                path.display(),
                fields.first().unwrap_or(&""),
                fields.len() - 1,
                expect_cols
            )));
        }
        let values = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{}: bad value `{f}`", path.display())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(values);
    }
    if rows.len() != expect_rows {
        return Err(Error::Parse(format!(
            "{}: {} rows, expected {expect_rows}",
            path.display(),
            rows.len()
        )));
    }
    Ok(rows)
}

/// Loads a results directory written by [`write_run_results`].
pub fn load_results(dir: &Path) -> Result<StoredResults> {
    let meta = RunMeta::load(dir)?;
    let n_aggs = meta.aggregations.len();
    let n_rules = meta.fusion_rules.len();
    let n_subsets = meta.subsets.len();

    let flat = read_grid_csv(&dir.join("late_grid.csv"), n_aggs * n_rules, n_subsets)?;
    let late: Vec<Vec<Vec<f64>>> = (0..n_aggs)
        .map(|a| flat[a * n_rules..(a + 1) * n_rules].to_vec())
        .collect();

    let early = if meta.early_modes.is_empty() {
        vec![]
    } else {
        read_grid_csv(
            &dir.join("early_grid.csv"),
            meta.early_modes.len(),
            n_subsets,
        )?
    };

    let unimodal = if meta.include_unimodal {
        read_grid_csv(&dir.join("unimodal.csv"), n_aggs, meta.modalities.len())?
    } else {
        vec![]
    };

    Ok(StoredResults {
        meta,
        late,
        early,
        unimodal,
        dir: dir.to_path_buf(),
    })
}
