//! The statistical comparison report: flow ranking with Friedman and
//! Bonferroni-Dunn annotations, per-subset best-rule Wilcoxon tests, and the
//! late-versus-early win-tie-loss sign tables.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use modalfuse::evaluate::{rank_flows, rank_unimodal_contribution, PatientScore};
use modalfuse::stats::{
    bonferroni_dunn, friedman_iman_davenport, sign_test, sign_test_threshold, wilcoxon_signed_rank,
    Sidedness, TestResult,
};
use modalfuse::{Error, Result};

use crate::report::{subset_label, StoredResults};

pub struct CompareOptions {
    /// Significance level for Friedman, Bonferroni-Dunn, and Wilcoxon.
    pub alpha: f64,
    pub wilcoxon_sidedness: Sidedness,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            wilcoxon_sidedness: Sidedness::OneSided,
        }
    }
}

pub struct FlowReport {
    pub flow_names: Vec<String>,
    pub scores: Vec<f64>,
    pub mean_ranks: Vec<f64>,
    pub best: usize,
    pub friedman: Result<TestResult>,
    pub dunn: Vec<(usize, TestResult)>,
}

pub struct WilcoxonRow {
    pub subset: String,
    pub best_rule: String,
    pub other_rule: String,
    pub result: Result<TestResult>,
}

pub struct SignRow {
    pub subset: String,
    pub mode: String,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    pub significant: bool,
}

pub struct ComparisonReport {
    pub flows: Option<FlowReport>,
    pub modality_scores: Option<Vec<(String, f64)>>,
    pub wilcoxon: Vec<WilcoxonRow>,
    pub sign: Vec<SignRow>,
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Row labels of the rule grid, `A1+product` style, in stored order.
fn rule_labels(results: &StoredResults) -> Vec<String> {
    let mut labels = Vec::new();
    for agg in &results.meta.aggregations {
        for rule in &results.meta.fusion_rules {
            labels.push(format!("{agg}+{rule}"));
        }
    }
    labels
}

pub fn build_report(results: &StoredResults, options: &CompareOptions) -> Result<ComparisonReport> {
    let meta = &results.meta;
    let n_subsets = meta.subsets.len();
    let n_rules = meta.fusion_rules.len();

    // ----- flow ranking over every (aggregation, rule) row -----
    let flows = if meta.include_unimodal {
        let mut flow_names: Vec<String> = meta.modalities.clone();
        flow_names.extend(meta.subsets.iter().map(|s| subset_label(s)));
        let mut table = Vec::new();
        for (a, _) in meta.aggregations.iter().enumerate() {
            for (r, _) in meta.fusion_rules.iter().enumerate() {
                let mut row = Vec::with_capacity(flow_names.len());
                for (m, _) in meta.modalities.iter().enumerate() {
                    row.push(results.unimodal[a][m]);
                }
                for s in 0..n_subsets {
                    row.push(results.late[a][r][s]);
                }
                table.push(row);
            }
        }
        let ranking = rank_flows(&table)?;
        let mean_ranks = ranking.ranks.mean_ranks();
        let best = argmax_lowest(&ranking.scores);
        let friedman = friedman_iman_davenport(&ranking.ranks, options.alpha);
        let dunn = bonferroni_dunn(&ranking.ranks, best, options.alpha)?;
        Some(FlowReport {
            flow_names,
            scores: ranking.scores,
            mean_ranks,
            best,
            friedman,
            dunn,
        })
    } else {
        None
    };

    // ----- per-modality contribution from the multimodal table -----
    let modality_scores = if n_subsets >= 2 {
        let subsets_idx: Vec<Vec<usize>> = meta
            .subsets
            .iter()
            .map(|s| {
                s.iter()
                    .map(|id| {
                        meta.modalities
                            .iter()
                            .position(|m| m == id)
                            .ok_or_else(|| Error::Parse(format!("unknown modality `{id}`")))
                    })
                    .collect::<Result<_>>()
            })
            .collect::<Result<_>>()?;
        let mut table = Vec::new();
        for (a, _) in meta.aggregations.iter().enumerate() {
            for (r, _) in meta.fusion_rules.iter().enumerate() {
                table.push(results.late[a][r].clone());
            }
        }
        let scores = rank_unimodal_contribution(&table, &subsets_idx, meta.modalities.len())?;
        Some(meta.modalities.iter().cloned().zip(scores).collect())
    } else {
        None
    };

    // ----- best rule per subset, Wilcoxon against the rest -----
    let positive = meta
        .classes
        .iter()
        .position(|c| *c == meta.positive)
        .unwrap_or(1);
    let labels = rule_labels(results);
    let mut wilcoxon = Vec::new();
    for (s, subset) in meta.subsets.iter().enumerate() {
        let column: Vec<f64> = (0..meta.aggregations.len())
            .flat_map(|a| (0..n_rules).map(move |r| results.late[a][r][s]))
            .collect();
        let best_idx = argmax_lowest(&column);
        let best_errors = cell_errors(results, &cell_stem(meta, best_idx, subset), positive)?;
        for (idx, label) in labels.iter().enumerate() {
            if idx == best_idx {
                continue;
            }
            let other_errors = cell_errors(results, &cell_stem(meta, idx, subset), positive)?;
            let pairs = align_pairs(&best_errors, &other_errors)?;
            wilcoxon.push(WilcoxonRow {
                subset: subset_label(subset),
                best_rule: labels[best_idx].clone(),
                other_rule: label.clone(),
                result: wilcoxon_signed_rank(&pairs, options.alpha, options.wilcoxon_sidedness),
            });
        }
    }

    // ----- late vs early sign tables over the A1 rules -----
    let mut sign = Vec::new();
    if let Some(a1_pos) = meta.aggregations.iter().position(|a| a == "A1") {
        for (m, mode) in meta.early_modes.iter().enumerate() {
            for (s, subset) in meta.subsets.iter().enumerate() {
                let early_auc = results.early[m][s];
                let mut wins = 0;
                let mut ties = 0;
                let mut losses = 0;
                for r in 0..n_rules {
                    let late_auc = results.late[a1_pos][r][s];
                    if late_auc > early_auc {
                        wins += 1;
                    } else if late_auc == early_auc {
                        ties += 1;
                    } else {
                        losses += 1;
                    }
                }
                let result = sign_test(wins, ties, losses);
                sign.push(SignRow {
                    subset: subset_label(subset),
                    mode: mode.clone(),
                    wins,
                    ties,
                    losses,
                    significant: result.significant,
                });
            }
        }
    }

    Ok(ComparisonReport {
        flows,
        modality_scores,
        wilcoxon,
        sign,
    })
}

/// File stem of the late cell at flat rule-combination index `idx`.
fn cell_stem(meta: &crate::report::RunMeta, idx: usize, subset: &[String]) -> String {
    let n_rules = meta.fusion_rules.len();
    let agg = &meta.aggregations[idx / n_rules];
    let rule = &meta.fusion_rules[idx % n_rules];
    format!("late_{agg}_{rule}_{}", subset_label(subset))
}

/// Per-patient absolute errors `|score - y|`, keyed by patient.
fn cell_errors(results: &StoredResults, stem: &str, positive: usize) -> Result<Vec<(String, f64)>> {
    let scores: Vec<PatientScore> = results.scores(stem)?;
    Ok(scores
        .into_iter()
        .map(|p| {
            let y = f64::from(p.label == positive);
            (p.patient_id, (p.score - y).abs())
        })
        .collect())
}

fn align_pairs(a: &[(String, f64)], b: &[(String, f64)]) -> Result<Vec<(f64, f64)>> {
    a.iter()
        .map(|(id, ea)| {
            let eb = b
                .iter()
                .find(|(other, _)| other == id)
                .map(|(_, e)| *e)
                .ok_or_else(|| Error::Parse(format!("patient `{id}` missing from a score file")))?;
            Ok((*ea, eb))
        })
        .collect()
}

/// Renders and writes the report files; returns the human-readable text.
pub fn write_report(
    out: &Path,
    report: &ComparisonReport,
    options: &CompareOptions,
) -> Result<String> {
    fs::create_dir_all(out).map_err(|source| Error::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let mut human = String::new();

    if let Some(flows) = &report.flows {
        let mut csv = String::from("flow,score,mean_rank,z,p,significantly_worse_than_best\n");
        writeln!(human, "== Flow ranking (normalized rank scores) ==").unwrap();
        match &flows.friedman {
            Ok(f) => writeln!(
                human,
                "Friedman/Iman-Davenport: F = {:.4}, p = {:.6} -> {}",
                f.statistic,
                f.p_value.unwrap_or(f64::NAN),
                if f.significant {
                    "flows differ"
                } else {
                    "no significant difference"
                }
            )
            .unwrap(),
            Err(e) => writeln!(human, "Friedman/Iman-Davenport: {e}").unwrap(),
        }
        let mut any_flagged = false;
        for (i, name) in flows.flow_names.iter().enumerate() {
            let marker = if i == flows.best {
                " (best)".to_string()
            } else if let Some((_, t)) = flows.dunn.iter().find(|(j, _)| *j == i) {
                if t.significant
                    && flows
                        .friedman
                        .as_ref()
                        .map(|f| f.significant)
                        .unwrap_or(false)
                {
                    any_flagged = true;
                    " (*)".to_string()
                } else {
                    String::new()
                }
            } else {
                String::new()
            };
            writeln!(
                human,
                "  {name:<16} score {:.3}  mean rank {:.3}{marker}",
                flows.scores[i], flows.mean_ranks[i]
            )
            .unwrap();
            let (z, p, sig) = if i == flows.best {
                (0.0, 1.0, false)
            } else {
                let (_, t) = flows.dunn.iter().find(|(j, _)| *j == i).unwrap();
                (t.statistic, t.p_value.unwrap_or(f64::NAN), t.significant)
            };
            writeln!(
                csv,
                "{name},{:.6},{:.6},{z:.6},{p:.6},{sig}",
                flows.scores[i], flows.mean_ranks[i]
            )
            .unwrap();
        }
        if any_flagged {
            writeln!(
                human,
                "(*) significantly different from the best flow \
                 (Bonferroni-Dunn, per-comparison alpha {:.4})",
                options.alpha / (flows.flow_names.len() as f64 - 1.0)
            )
            .unwrap();
        }
        human.push('\n');
        fs::write(out.join("flow_ranking.csv"), csv).map_err(|source| Error::Io {
            path: out.join("flow_ranking.csv"),
            source,
        })?;
    }

    if let Some(scores) = &report.modality_scores {
        writeln!(human, "== Per-modality contribution (normalized ranks) ==").unwrap();
        let mut csv = String::from("modality,score\n");
        for (name, score) in scores {
            writeln!(human, "  {name:<16} score {score:.3}").unwrap();
            writeln!(csv, "{name},{score:.6}").unwrap();
        }
        human.push('\n');
        fs::write(out.join("modality_contribution.csv"), csv).map_err(|source| Error::Io {
            path: out.join("modality_contribution.csv"),
            source,
        })?;
    }

    if !report.wilcoxon.is_empty() {
        writeln!(
            human,
            "== Best rule per subset (Wilcoxon signed-rank on per-patient errors) =="
        )
        .unwrap();
        let mut csv = String::from("subset,best_rule,other_rule,z,p,significant\n");
        let mut last_subset = String::new();
        for row in &report.wilcoxon {
            if row.subset != last_subset {
                writeln!(human, "  [{}] best rule: {}", row.subset, row.best_rule).unwrap();
                last_subset = row.subset.clone();
            }
            match &row.result {
                Ok(t) => {
                    if t.significant {
                        writeln!(
                            human,
                            "    {} differs (z = {:.3}, p = {:.4})",
                            row.other_rule,
                            t.statistic,
                            t.p_value.unwrap_or(f64::NAN)
                        )
                        .unwrap();
                    }
                    writeln!(
                        csv,
                        "{},{},{},{:.6},{:.6},{}",
                        row.subset,
                        row.best_rule,
                        row.other_rule,
                        t.statistic,
                        t.p_value.unwrap_or(f64::NAN),
                        t.significant
                    )
                    .unwrap();
                }
                Err(e) => {
                    writeln!(
                        csv,
                        "{},{},{},,,{e}",
                        row.subset, row.best_rule, row.other_rule
                    )
                    .unwrap();
                }
            }
        }
        human.push('\n');
        fs::write(out.join("best_rule_wilcoxon.csv"), csv).map_err(|source| Error::Io {
            path: out.join("best_rule_wilcoxon.csv"),
            source,
        })?;
    }

    if !report.sign.is_empty() {
        writeln!(
            human,
            "== Late vs early fusion (win-tie-loss over the A1 rules, one-tailed sign test) =="
        )
        .unwrap();
        let mut csv = String::from("subset,mode,wins,ties,losses,threshold,significant\n");
        for row in &report.sign {
            let n = row.wins + row.ties + row.losses;
            writeln!(
                human,
                "  [{}] vs {}: {}-{}-{}{}",
                row.subset,
                row.mode,
                row.wins,
                row.ties,
                row.losses,
                if row.significant {
                    "  (late significantly better)"
                } else {
                    ""
                }
            )
            .unwrap();
            writeln!(
                csv,
                "{},{},{},{},{},{:.4},{}",
                row.subset,
                row.mode,
                row.wins,
                row.ties,
                row.losses,
                sign_test_threshold(n),
                row.significant
            )
            .unwrap();
        }
        fs::write(out.join("late_vs_early.csv"), csv).map_err(|source| Error::Io {
            path: out.join("late_vs_early.csv"),
            source,
        })?;
    }

    fs::write(out.join("comparison.txt"), &human).map_err(|source| Error::Io {
        path: out.join("comparison.txt"),
        source,
    })?;
    Ok(human)
}
