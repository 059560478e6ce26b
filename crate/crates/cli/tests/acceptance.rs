//! Acceptance suite, criteria 6-7: byte-identical determinism of `run`
//! across repeats and worker counts, and completeness of the default grid.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modalfuse"))
}

fn run_ok(args: &[&str], dir: &Path) {
    let output = binary()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("spawn modalfuse");
    assert!(
        output.status.success(),
        "modalfuse {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Every file under `dir`, keyed by relative path, with full contents.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(base: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path
                    .strip_prefix(base)
                    .unwrap()
                    .to_string_lossy()
                    .into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

fn write_config(dir: &Path, workers: usize, out: &str) {
    std::fs::write(
        dir.join("config.toml"),
        format!(
            "manifest = \"manifest.toml\"\nseed = 17\nout = \"{out}\"\nworkers = {workers}\n\n\
             [forest]\nn_trees = 24\n"
        ),
    )
    .unwrap();
}

#[test]
fn acceptance_6_run_determinism_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    run_ok(
        &[
            "synth",
            "--out",
            "manifest.toml",
            "--patients",
            "12",
            "--informativeness",
            "2.0,1.0,0.5",
            "--seed",
            "5",
        ],
        dir,
    );

    let mut snapshots = Vec::new();
    for (label, workers) in [("w1a", 1), ("w1b", 1), ("w8a", 8), ("w8b", 8)] {
        write_config(dir, workers, label);
        run_ok(&["run", "--config", "config.toml"], dir);
        snapshots.push((label, workers, snapshot(&dir.join(label))));
    }

    let (_, _, reference) = &snapshots[0];
    assert!(!reference.is_empty());
    for (label, workers, snap) in &snapshots[1..] {
        assert_eq!(snap.len(), reference.len(), "{label}: file count differs");
        for (name, bytes) in reference {
            let other = snap
                .get(name)
                .unwrap_or_else(|| panic!("{label} is missing {name}"));
            assert_eq!(
                other, bytes,
                "{name} differs between worker counts 1 and {workers}"
            );
        }
    }

    println!(
        "ACCEPTANCE 6 (byte-identical run output across repeats and worker counts 1/8, \
         {} files compared): PASS",
        reference.len()
    );
}

#[test]
fn acceptance_7_default_grid_completeness() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    run_ok(
        &[
            "synth",
            "--out",
            "manifest.toml",
            "--patients",
            "8",
            "--informativeness",
            "2.0,1.0,0.5",
            "--seed",
            "3",
        ],
        dir,
    );
    write_config(dir, 0, "results");
    run_ok(&["run", "--config", "config.toml"], dir);

    let late = std::fs::read_to_string(dir.join("results/late_grid.csv")).unwrap();
    let late_rows: Vec<&str> = late.lines().skip(1).collect();
    assert_eq!(late_rows.len(), 16, "expected 16 rule-combination rows");
    let mut late_cells = 0;
    for row in &late_rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5, "rule label plus 4 modality subsets");
        for value in &fields[1..] {
            value.parse::<f64>().expect("filled AUC cell");
            late_cells += 1;
        }
    }
    assert_eq!(late_cells, 64, "16 rules x 4 subsets");

    let early = std::fs::read_to_string(dir.join("results/early_grid.csv")).unwrap();
    let early_rows: Vec<&str> = early.lines().skip(1).collect();
    assert_eq!(early_rows.len(), 2, "two early-fusion modes");
    let mut early_cells = 0;
    for row in &early_rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 5);
        for value in &fields[1..] {
            value.parse::<f64>().expect("filled AUC cell");
            early_cells += 1;
        }
    }
    assert_eq!(early_cells, 8, "2 modes x 4 subsets, A1 only");

    // per-cell score files exist for every late and early cell
    let scores = std::fs::read_dir(dir.join("results/scores"))
        .unwrap()
        .count();
    assert_eq!(scores, 64 + 8 + 6, "late + early + unimodal score files");

    println!("ACCEPTANCE 7 (grid completeness: 64 late + 8 early cells): PASS");
}
