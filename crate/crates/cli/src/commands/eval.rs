//! `eval`: summarize per-case results with bootstrap confidence intervals
//! and compare the top two models with a one-sided paired test.
//!
//! Input CSV columns: `case_id,model_id,value` for precomputed per-case
//! metrics, or `case_id,model_id,score,label` for scored binary outcomes
//! (summarized as AUC). Comparison tests operate on paired per-case
//! values, so they require the value layout.

use crate::error::{CmdError, DataResult};
use crate::manifest::write_atomic;
use lesionforge::seed::derive_seed;
use lesionforge::stats::{
    auc, bootstrap_ci, paired_permutation_one_sided, wilcoxon_one_sided, MetricSummary,
    PairedScores,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, Serialize)]
struct ModelSummary {
    model: String,
    n_cases: usize,
    metric: String,
    summary: MetricSummary,
}

#[derive(Debug, Clone, Serialize)]
struct Comparison {
    top_model: String,
    second_model: String,
    test: String,
    p_value: f64,
    rendered: String,
}

#[derive(Debug, Serialize)]
struct EvalOutput {
    models: Vec<ModelSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<Comparison>,
}

enum Records {
    /// model -> case -> metric value
    Values(BTreeMap<String, BTreeMap<String, f64>>),
    /// model -> case -> (score, label)
    Scores(BTreeMap<String, BTreeMap<String, (f64, bool)>>),
}

pub fn run(
    results: &Path,
    test: Option<&str>,
    bootstrap: usize,
    level: f64,
    permutations: usize,
    seed: u64,
    out: &Path,
) -> Result<(), CmdError> {
    let records = parse_csv(results)?;
    check_case_alignment(&records)?;
    std::fs::create_dir_all(out).data_ctx("creating output directory")?;

    let (mut models, metric_name) = match &records {
        Records::Values(by_model) => {
            let mut models = Vec::new();
            for (model, cases) in by_model {
                let values: Vec<f64> = cases.values().copied().collect();
                let summary = bootstrap_ci(
                    &values,
                    |v| v.iter().sum::<f64>() / v.len() as f64,
                    bootstrap,
                    level,
                    derive_seed(seed, model),
                )
                .data()?;
                models.push(ModelSummary {
                    model: model.clone(),
                    n_cases: values.len(),
                    metric: "mean".into(),
                    summary,
                });
            }
            (models, "mean")
        }
        Records::Scores(by_model) => {
            let mut models = Vec::new();
            for (model, cases) in by_model {
                let scores: Vec<f64> = cases.values().map(|(s, _)| *s).collect();
                let labels: Vec<bool> = cases.values().map(|(_, l)| *l).collect();
                let summary =
                    auc_bootstrap(&scores, &labels, bootstrap, level, derive_seed(seed, model))?;
                models.push(ModelSummary {
                    model: model.clone(),
                    n_cases: scores.len(),
                    metric: "auc".into(),
                    summary,
                });
            }
            (models, "auc")
        }
    };
    models.sort_by(|a, b| {
        b.summary
            .point
            .partial_cmp(&a.summary.point)
            .unwrap()
            .then(a.model.cmp(&b.model))
    });

    let comparison = match test {
        None => None,
        Some(test_name) => {
            let by_model = match &records {
                Records::Values(v) => v,
                Records::Scores(_) => {
                    return Err(CmdError::usage(
                        "comparison tests need per-case metric values (case_id,model_id,value)",
                    ))
                }
            };
            if models.len() < 2 {
                return Err(CmdError::data_msg(
                    "comparison tests need at least two models",
                ));
            }
            let top = &models[0].model;
            let second = &models[1].model;
            let top_cases = &by_model[top];
            let second_cases = &by_model[second];
            let case_ids: Vec<String> = top_cases.keys().cloned().collect();
            let a: Vec<f64> = case_ids.iter().map(|c| top_cases[c]).collect();
            let b: Vec<f64> = case_ids.iter().map(|c| second_cases[c]).collect();
            let paired = PairedScores::new(case_ids, a, b).data()?;
            let p = match test_name {
                "wilcoxon" => wilcoxon_one_sided(&paired).data()?,
                "permutation" => {
                    paired_permutation_one_sided(&paired, permutations, derive_seed(seed, "perm"))
                        .data()?
                }
                other => return Err(CmdError::usage(format!("unknown test `{other}`"))),
            };
            Some(Comparison {
                top_model: top.clone(),
                second_model: second.clone(),
                test: test_name.to_string(),
                p_value: p,
                rendered: format!("{p:.3}"),
            })
        }
    };

    // Human-readable table.
    for m in &models {
        println!(
            "{:<24} {:>3} cases  {} = {:.3} ({:.3}-{:.3})",
            m.model, m.n_cases, metric_name, m.summary.point, m.summary.ci_low, m.summary.ci_high
        );
    }
    if let Some(c) = &comparison {
        println!(
            "{} vs {} ({}, one-sided): p = {}",
            c.top_model, c.second_model, c.test, c.rendered
        );
    }

    // summary.csv
    let mut csv_text = String::from("model,n_cases,metric,estimate,ci_low,ci_high,level,replicates\n");
    for m in &models {
        csv_text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            m.model,
            m.n_cases,
            m.metric,
            m.summary.point,
            m.summary.ci_low,
            m.summary.ci_high,
            m.summary.level,
            m.summary.replicates
        ));
    }
    write_atomic(&out.join("summary.csv"), csv_text.as_bytes()).data()?;

    if let Some(c) = &comparison {
        let comparison_csv = format!(
            "top_model,second_model,test,p_value,rendered\n{},{},{},{},{}\n",
            c.top_model, c.second_model, c.test, c.p_value, c.rendered
        );
        write_atomic(&out.join("comparison.csv"), comparison_csv.as_bytes()).data()?;
    }

    let output = EvalOutput { models, comparison };
    write_atomic(
        &out.join("summary.json"),
        serde_json::to_string_pretty(&output).data()?.as_bytes(),
    )
    .data()?;
    Ok(())
}

fn parse_csv(path: &Path) -> Result<Records, CmdError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CmdError::data(anyhow::anyhow!("cannot read {}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .data()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let idx = |name: &str| headers.iter().position(|h| h == name);
    let (ci, mi) = match (idx("case_id"), idx("model_id")) {
        (Some(c), Some(m)) => (c, m),
        _ => {
            return Err(CmdError::data_msg(
                "results CSV needs case_id and model_id columns",
            ))
        }
    };

    if let Some(vi) = idx("value") {
        let mut by_model: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (no, record) in reader.records().enumerate() {
            let record = record.data()?;
            let value: f64 = record[vi]
                .trim()
                .parse()
                .map_err(|_| CmdError::data_msg(format!("row {}: bad value", no + 2)))?;
            by_model
                .entry(record[mi].trim().to_string())
                .or_default()
                .insert(record[ci].trim().to_string(), value);
        }
        if by_model.is_empty() {
            return Err(CmdError::data_msg("results CSV has no data rows"));
        }
        Ok(Records::Values(by_model))
    } else if let (Some(si), Some(li)) = (idx("score"), idx("label")) {
        let mut by_model: BTreeMap<String, BTreeMap<String, (f64, bool)>> = BTreeMap::new();
        for (no, record) in reader.records().enumerate() {
            let record = record.data()?;
            let score: f64 = record[si]
                .trim()
                .parse()
                .map_err(|_| CmdError::data_msg(format!("row {}: bad score", no + 2)))?;
            let label = match record[li].trim() {
                "0" | "false" => false,
                "1" | "true" => true,
                other => {
                    return Err(CmdError::data_msg(format!(
                        "row {}: label `{other}` is not binary",
                        no + 2
                    )))
                }
            };
            by_model
                .entry(record[mi].trim().to_string())
                .or_default()
                .insert(record[ci].trim().to_string(), (score, label));
        }
        if by_model.is_empty() {
            return Err(CmdError::data_msg("results CSV has no data rows"));
        }
        Ok(Records::Scores(by_model))
    } else {
        Err(CmdError::data_msg(
            "results CSV needs either a value column or score+label columns",
        ))
    }
}

fn check_case_alignment(records: &Records) -> Result<(), CmdError> {
    let case_sets: BTreeMap<&String, BTreeSet<&String>> = match records {
        Records::Values(m) => m
            .iter()
            .map(|(model, cases)| (model, cases.keys().collect()))
            .collect(),
        Records::Scores(m) => m
            .iter()
            .map(|(model, cases)| (model, cases.keys().collect()))
            .collect(),
    };
    let union: BTreeSet<&String> = case_sets.values().flatten().copied().collect();
    let mut offenders = Vec::new();
    for (model, cases) in &case_sets {
        let missing: Vec<&str> = union
            .iter()
            .filter(|c| !cases.contains(**c))
            .map(|c| c.as_str())
            .collect();
        if !missing.is_empty() {
            offenders.push(format!("{model}: missing {}", missing.join(", ")));
        }
    }
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(CmdError::data_msg(format!(
            "case ids are not aligned across models:\n  {}",
            offenders.join("\n  ")
        )))
    }
}

/// AUC point estimate plus a percentile bootstrap over case resampling.
/// Single-class resamples are redrawn a bounded number of times.
fn auc_bootstrap(
    scores: &[f64],
    labels: &[bool],
    b: usize,
    level: f64,
    seed: u64,
) -> Result<MetricSummary, CmdError> {
    let point = auc(scores, labels).data()?;
    if b == 0 {
        return Err(CmdError::data_msg("bootstrap replicates must be > 0"));
    }
    let n = scores.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Vec::with_capacity(b);
    for _ in 0..b {
        let mut value = point;
        for _attempt in 0..100 {
            let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let s: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
            let l: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
            if let Ok(a) = auc(&s, &l) {
                value = a;
                break;
            }
        }
        stats.push(value);
    }
    stats.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let alpha = 1.0 - level;
    let rank = |q: f64| -> f64 {
        let r = (q * b as f64).ceil() as usize;
        stats[r.clamp(1, b) - 1]
    };
    Ok(MetricSummary {
        point,
        ci_low: rank(alpha / 2.0),
        ci_high: rank(1.0 - alpha / 2.0),
        replicates: b,
        level,
    })
}
