//! End-to-end command tests: exit codes, feature-table shapes, and the
//! compare report over real run output.

use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modalfuse"))
}

fn run_in(dir: &Path, args: &[&str]) -> std::process::Output {
    binary()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn")
}

fn assert_code(output: &std::process::Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn missing_config_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = run_in(dir.path(), &["run", "--config", "nope.toml"]);
    assert_code(&output, 2);
}

#[test]
fn missing_manifest_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("config.toml"),
        "manifest = \"missing.toml\"\n",
    )
    .unwrap();
    let output = run_in(dir.path(), &["run", "--config", "config.toml"]);
    assert_code(&output, 2);
    let output = run_in(dir.path(), &["extract", "--config", "config.toml"]);
    assert_code(&output, 2);
}

#[test]
fn unreadable_image_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    std::fs::write(
        base.join("manifest.toml"),
        r#"
classes = ["neg", "pos"]

[[modalities]]
id = "imaging"
kind = "radiomics"

[[patients]]
id = "p1"
label = "neg"
[patients.samples]
imaging = ["missing.pgm"]

[[patients]]
id = "p2"
label = "pos"
[patients.samples]
imaging = ["missing2.pgm"]
"#,
    )
    .unwrap();
    std::fs::write(base.join("config.toml"), "manifest = \"manifest.toml\"\n").unwrap();
    let output = run_in(base, &["extract", "--config", "config.toml"]);
    assert_code(&output, 3);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("missing.pgm"),
        "error names the file: {stderr}"
    );
}

#[test]
fn bad_grid_config_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let synth = run_in(
        base,
        &["synth", "--out", "manifest.toml", "--patients", "6"],
    );
    assert_code(&synth, 0);
    std::fs::write(
        base.join("config.toml"),
        "manifest = \"manifest.toml\"\n[grid]\nfusion_rules = [\"bogus\"]\n",
    )
    .unwrap();
    let output = run_in(base, &["run", "--config", "config.toml"]);
    assert_code(&output, 2);
}

#[test]
fn extract_writes_pathomics_24_and_radiomics_48_columns() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();

    // two tiny grayscale PGMs per patient, enough for one 6x6 patch each
    std::fs::create_dir(base.join("img")).unwrap();
    let mut state = 11u32;
    for patient in ["p1", "p2"] {
        for kind in ["crop", "ct"] {
            let mut data = b"P5\n8 8\n255\n".to_vec();
            for _ in 0..64 {
                state = state.wrapping_mul(1664525).wrapping_add(1013904223);
                data.push((state >> 24) as u8 % 200); // keep below background
            }
            std::fs::write(base.join(format!("img/{patient}_{kind}.pgm")), data).unwrap();
        }
    }

    std::fs::write(
        base.join("manifest.toml"),
        r#"
classes = ["neg", "pos"]

[[modalities]]
id = "path"
kind = "pathomics"

[[modalities]]
id = "radio"
kind = "radiomics"

[[patients]]
id = "p1"
label = "neg"
[patients.samples]
path = ["img/p1_crop.pgm"]
radio = ["img/p1_ct.pgm"]

[[patients]]
id = "p2"
label = "pos"
[patients.samples]
path = ["img/p2_crop.pgm"]
radio = ["img/p2_ct.pgm"]
"#,
    )
    .unwrap();
    std::fs::write(
        base.join("config.toml"),
        "manifest = \"manifest.toml\"\nout = \"features\"\n\n\
         [features]\npatch_window = 6\npatch_stride = 2\nglcm_levels = 8\n",
    )
    .unwrap();

    let output = run_in(base, &["extract", "--config", "config.toml"]);
    assert_code(&output, 0);

    let pathomics = std::fs::read_to_string(base.join("features/features_path.csv")).unwrap();
    let header: Vec<&str> = pathomics.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 4 + 24, "pathomics: 24 feature columns");
    assert_eq!(
        &header[..4],
        &["sample_id", "patient_id", "modality", "label"]
    );
    // 8x8 image, window 6, stride 2 -> 2x2 patches per crop, 2 patients
    assert_eq!(pathomics.lines().count() - 1, 8);

    let radiomics = std::fs::read_to_string(base.join("features/features_radio.csv")).unwrap();
    let header: Vec<&str> = radiomics.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 4 + 48, "radiomics: 48 feature columns");
    assert_eq!(radiomics.lines().count() - 1, 2, "one slice per patient");
}

#[test]
fn synth_run_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    assert_code(
        &run_in(
            base,
            &[
                "synth",
                "--out",
                "manifest.toml",
                "--patients",
                "10",
                "--informativeness",
                "2.5,1.0,0.4",
                "--seed",
                "9",
            ],
        ),
        0,
    );
    std::fs::write(
        base.join("config.toml"),
        "manifest = \"manifest.toml\"\nseed = 9\nout = \"results\"\n\n[forest]\nn_trees = 16\n",
    )
    .unwrap();
    assert_code(&run_in(base, &["run", "--config", "config.toml"]), 0);
    let output = run_in(base, &["compare", "--results", "results"]);
    assert_code(&output, 0);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("Flow ranking"));
    assert!(stdout.contains("Late vs early fusion"));

    for file in [
        "results/comparison.txt",
        "results/flow_ranking.csv",
        "results/modality_contribution.csv",
        "results/best_rule_wilcoxon.csv",
        "results/late_vs_early.csv",
    ] {
        assert!(base.join(file).exists(), "{file} missing");
    }

    // every late-vs-early cell counts 8 late rules
    let sign = std::fs::read_to_string(base.join("results/late_vs_early.csv")).unwrap();
    for line in sign.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let total: usize = fields[2].parse::<usize>().unwrap()
            + fields[3].parse::<usize>().unwrap()
            + fields[4].parse::<usize>().unwrap();
        assert_eq!(total, 8, "win-tie-loss counts sum to the 8 A1 rules");
    }
}

#[test]
fn compare_on_identical_aucs_flags_nothing() {
    // hand-built results directory where every flow ties everywhere
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let results = base.join("results");
    std::fs::create_dir_all(results.join("scores")).unwrap();

    let meta = r#"classes = ["neg", "pos"]
positive = "pos"
modalities = ["a", "b"]
aggregations = ["A1"]
fusion_rules = ["product", "mean"]
early_modes = ["concat"]
subsets = [["a", "b"]]
include_unimodal = true
seed = 0
"#;
    std::fs::write(results.join("run_meta.toml"), meta).unwrap();
    std::fs::write(
        results.join("late_grid.csv"),
        "rule,a+b\nA1+product,0.750000\nA1+mean,0.750000\n",
    )
    .unwrap();
    std::fs::write(
        results.join("early_grid.csv"),
        "mode,a+b\nconcat,0.750000\n",
    )
    .unwrap();
    std::fs::write(
        results.join("unimodal.csv"),
        "aggregation,a,b\nA1,0.750000,0.750000\n",
    )
    .unwrap();
    // identical per-patient scores for both rules
    let scores = "patient_id,label,score\np1,neg,0.200000\np2,pos,0.900000\np3,neg,0.300000\n\
                  p4,pos,0.800000\np5,neg,0.400000\np6,pos,0.700000\n";
    for stem in ["late_A1_product_a+b", "late_A1_mean_a+b"] {
        std::fs::write(results.join(format!("scores/{stem}.csv")), scores).unwrap();
    }

    let output = run_in(base, &["compare", "--results", "results"]);
    assert_code(&output, 0);
    let report = std::fs::read_to_string(results.join("comparison.txt")).unwrap();
    assert!(
        !report.contains("(*)"),
        "no flow should be flagged:\n{report}"
    );
    assert!(
        !report.contains("differs ("),
        "no rule should differ:\n{report}"
    );
    assert!(
        !report.contains("significantly better"),
        "no sign test should fire:\n{report}"
    );
}

#[test]
fn early_cells_always_aggregate_with_a1() {
    // the grid cannot express an (A2, early) cell: early baselines pin A1
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    assert_code(
        &run_in(
            base,
            &["synth", "--out", "manifest.toml", "--patients", "6"],
        ),
        0,
    );
    std::fs::write(
        base.join("config.toml"),
        "manifest = \"manifest.toml\"\n[grid]\naggregations = [\"A2\"]\n",
    )
    .unwrap();
    let output = run_in(base, &["run", "--config", "config.toml"]);
    assert_code(&output, 0);
    let meta = std::fs::read_to_string(base.join("results/run_meta.toml")).unwrap();
    assert!(meta.contains("early_modes"));
}

#[test]
fn extract_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    assert_code(
        &run_in(
            base,
            &[
                "synth",
                "--out",
                "manifest.toml",
                "--patients",
                "6",
                "--seed",
                "4",
            ],
        ),
        0,
    );
    std::fs::write(
        base.join("config.toml"),
        "manifest = \"manifest.toml\"\nout = \"features\"\n",
    )
    .unwrap();
    assert_code(&run_in(base, &["extract", "--config", "config.toml"]), 0);
    let first = std::fs::read(base.join("features/features_m1.csv")).unwrap();
    assert_code(&run_in(base, &["extract", "--config", "config.toml"]), 0);
    let second = std::fs::read(base.join("features/features_m1.csv")).unwrap();
    assert_eq!(
        first, second,
        "re-running extract must overwrite identically"
    );
}
