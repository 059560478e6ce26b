//! The four subcommands, returning process exit classes:
//! 0 success, 2 usage/config error, 3 data error, 4 internal invariant
//! violation.

use std::path::{Path, PathBuf};

use modalfuse::evaluate::{extract_features, make_synthetic_manifest, Aggregation, SynthParams};
use modalfuse::io::{write_feature_table, FeatureRow};
use modalfuse::Error;

use crate::compare::{build_report, write_report, CompareOptions};
use crate::config::RunConfig;
use crate::grid::run_grid;
use crate::report::{load_results, write_run_results, RunMeta};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_INTERNAL: u8 = 4;

/// A failure with the exit class it maps to.
#[derive(Debug)]
pub struct CliError {
    pub exit: u8,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError {
        exit: EXIT_USAGE,
        message: e.to_string(),
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError {
        exit: EXIT_DATA,
        message: e.to_string(),
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError {
        exit: EXIT_INTERNAL,
        message: format!("internal invariant violated: {e}"),
    }
}

/// Config and manifest problems are usage errors; anything that goes wrong
/// while reading or processing referenced data files is a data error.
fn load_config(path: &Path, overrides: &Overrides) -> CliResult<RunConfig> {
    let mut config = RunConfig::load(path).map_err(usage)?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.out = out.clone();
    }
    if let Some(workers) = overrides.workers {
        config.workers = workers;
    }
    Ok(config)
}

/// Flag-level overrides of config file values.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn manifest_path(config: &RunConfig, config_path: &Path) -> PathBuf {
    if config.manifest.is_absolute() {
        config.manifest.clone()
    } else {
        config_path
            .parent()
            .map(|p| p.join(&config.manifest))
            .unwrap_or_else(|| config.manifest.clone())
    }
}

fn with_worker_pool<T>(workers: usize, job: impl FnOnce() -> T + Send) -> CliResult<T>
where
    T: Send,
{
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(internal)?;
    Ok(pool.install(job))
}

/// `extract`: write one feature table per modality.
pub fn cmd_extract(config_path: &Path, overrides: &Overrides) -> CliResult<()> {
    let config = load_config(config_path, overrides)?;
    let manifest_file = manifest_path(&config, config_path);
    let manifest =
        modalfuse::evaluate::manifest::DatasetManifest::load(&manifest_file).map_err(usage)?;
    let base_dir = manifest_file
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let features = with_worker_pool(config.workers, || {
        extract_features(&manifest, &config.features.extraction_params(), &base_dir)
    })?
    .map_err(|e| {
        // on failure, report every unreadable file, not just the first
        let mut bad = Vec::new();
        for patient in &manifest.patients {
            for refs in patient.samples.values() {
                if let modalfuse::evaluate::manifest::SampleRefs::Paths(paths) = refs {
                    for rel in paths {
                        let path = base_dir.join(rel);
                        if let Err(file_err) = modalfuse::io::load_image(&path) {
                            bad.push(file_err.to_string());
                        }
                    }
                }
            }
        }
        for line in &bad {
            eprintln!("error: {line}");
        }
        data(e)
    })?;

    std::fs::create_dir_all(&config.out)
        .map_err(|e| data(format!("{}: {e}", config.out.display())))?;
    for (m, modality) in features.modality_ids.iter().enumerate() {
        let mut rows = Vec::new();
        for patient in &features.patients {
            for (sample_id, vector) in &patient.samples[m] {
                rows.push(FeatureRow {
                    sample_id: sample_id.clone(),
                    patient_id: patient.id.clone(),
                    modality: modality.clone(),
                    label: features.class_names[patient.label].clone(),
                    features: vector.clone(),
                });
            }
        }
        let path = config.out.join(format!("features_{modality}.csv"));
        write_feature_table(&path, &rows).map_err(data)?;
        println!("wrote {} ({} samples)", path.display(), rows.len());
    }
    Ok(())
}

/// `run`: execute the whole grid and write the results directory.
pub fn cmd_run(config_path: &Path, overrides: &Overrides) -> CliResult<()> {
    let config = load_config(config_path, overrides)?;
    let manifest_file = manifest_path(&config, config_path);
    let manifest =
        modalfuse::evaluate::manifest::DatasetManifest::load(&manifest_file).map_err(usage)?;
    let base_dir = manifest_file
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let forest = config.forest.forest_params().map_err(usage)?;
    config.grid.validate().map_err(usage)?;

    let results = with_worker_pool(config.workers, || {
        let features =
            extract_features(&manifest, &config.features.extraction_params(), &base_dir)?;
        run_grid(&features, &config.grid, &forest, config.seed)
    })?
    .map_err(|e| match e {
        Error::InvalidParameter(_) | Error::Parse(_) => usage(e),
        other => data(other),
    })?;

    let subsets = results.subsets.clone();
    let meta = RunMeta {
        classes: manifest.classes.clone(),
        positive: manifest.classes[manifest.positive_index()].clone(),
        modalities: manifest.modalities.iter().map(|m| m.id.clone()).collect(),
        aggregations: results.aggregations.iter().map(|a| a.to_string()).collect(),
        fusion_rules: results.rules.iter().map(|r| r.to_string()).collect(),
        early_modes: results.early_modes.iter().map(|m| m.to_string()).collect(),
        subsets,
        include_unimodal: config.grid.include_unimodal,
        seed: config.seed,
    };
    write_run_results(&config.out, &results, &meta).map_err(data)?;
    println!(
        "wrote {} late-fusion cells, {} early-fusion cells -> {}",
        results.late_cell_count(),
        results.early_cell_count(),
        config.out.display()
    );
    Ok(())
}

/// `compare`: statistical report over a results directory.
pub fn cmd_compare(
    results_dir: &Path,
    out: Option<&Path>,
    alpha: f64,
    two_sided: bool,
) -> CliResult<()> {
    if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
        return Err(usage("alpha must be in (0, 1)"));
    }
    let results = load_results(results_dir).map_err(|e| match e {
        Error::Io { .. } => usage(e),
        other => data(other),
    })?;
    let options = CompareOptions {
        alpha,
        wilcoxon_sidedness: if two_sided {
            modalfuse::stats::Sidedness::TwoSided
        } else {
            modalfuse::stats::Sidedness::OneSided
        },
    };
    let report = build_report(&results, &options).map_err(data)?;
    let out = out.unwrap_or(results_dir);
    let human = write_report(out, &report, &options).map_err(data)?;
    print!("{human}");
    Ok(())
}

/// `synth`: generate a synthetic manifest.
#[allow(clippy::too_many_arguments)]
pub fn cmd_synth(
    out: &Path,
    patients: usize,
    informativeness: &str,
    dims: usize,
    min_samples: usize,
    max_samples: usize,
    seed: u64,
) -> CliResult<()> {
    let informativeness: Vec<f64> = informativeness
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("bad informativeness value `{s}`")))
        })
        .collect::<CliResult<_>>()?;
    let params = SynthParams {
        n_patients: patients,
        informativeness,
        dims,
        min_samples,
        max_samples,
        seed,
    };
    let manifest = make_synthetic_manifest(&params).map_err(usage)?;
    manifest.save(out).map_err(data)?;
    println!(
        "wrote {} ({} patients, {} modalities)",
        out.display(),
        manifest.patients.len(),
        manifest.modalities.len()
    );
    Ok(())
}

/// Sanity helper used by tests: the aggregation ids a default grid runs.
pub fn default_aggregations() -> Vec<Aggregation> {
    vec![Aggregation::FeatureMean, Aggregation::ScoreMean]
}
