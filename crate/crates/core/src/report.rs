//! Per-dataset aggregation and report rendering.
//!
//! Rows aggregate structural compliance, per-tag reference rates, confidence
//! verbalization, AUROC/ECE, accuracy, and mean completion length, with
//! optional disclosure-faithfulness and commitment columns merged in from
//! judged artifacts. Rendering is deterministic: datasets sort
//! alphabetically and identical inputs produce byte-identical text.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::metrics::{auroc, ece, PredictionPoint};
use crate::records::{RecordError, TraceRecord};
use crate::trace::{self, ReferenceProfile};
use crate::verify;

/// Aggregation knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Equal-width ECE bins.
    pub ece_bins: usize,
    /// Verbalization rate below which AUROC/ECE get a low-coverage flag.
    pub low_coverage_threshold: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { ece_bins: 10, low_coverage_threshold: 0.2 }
    }
}

/// The per-record facts the aggregator consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportItem {
    pub dataset: String,
    pub structural_ok: bool,
    pub refs: ReferenceProfile,
    /// Verbalized integer confidence, when present.
    pub confidence: Option<u8>,
    pub correct: bool,
    pub tokens: f64,
    /// True when `tokens` is the whitespace fallback rather than a provider
    /// count.
    pub tokens_estimated: bool,
}

impl ReportItem {
    /// Derive an item from a trace record by re-parsing its output.
    ///
    /// Correctness comes from the gold answer when present; otherwise the
    /// record must carry a prior grade under `meta.correct`. Token counts
    /// prefer `meta.completion_tokens` and fall back to a whitespace split
    /// of the output, flagged as an estimate.
    pub fn from_record(rec: &TraceRecord) -> Result<ReportItem, RecordError> {
        let doc = trace::parse_trace(&rec.output);
        let correct = match rec.gold() {
            Some(gold) => {
                verify::r_corr(trace::extract_final_answer(&doc).as_deref(), &gold) == 1
            }
            None => rec.meta.get("correct").and_then(serde_json::Value::as_bool).ok_or_else(
                || {
                    RecordError::Schema(format!(
                        "record {}: no gold_answer and no meta.correct to grade with",
                        rec.id
                    ))
                },
            )?,
        };
        let (tokens, tokens_estimated) = match rec.meta_u64("completion_tokens") {
            Some(t) => (t as f64, false),
            None => (rec.output.split_whitespace().count() as f64, true),
        };
        Ok(ReportItem {
            dataset: rec.dataset.clone(),
            structural_ok: trace::structural_ok(&doc),
            refs: trace::reference_profile(&doc),
            confidence: trace::extract_confidence(&doc),
            correct,
            tokens,
            tokens_estimated,
        })
    }
}

/// Disclosure and commitment aggregates keyed by dataset, merged into the
/// report when available.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JudgedInputs {
    /// φ per dataset (absent when the conditioning set was empty).
    #[serde(default)]
    pub phi: BTreeMap<String, Option<f64>>,
    /// Mean commitment bits per dataset over valid verdicts.
    #[serde(default)]
    pub commitment: BTreeMap<String, CommitmentRates>,
}

/// Mean commitment-audit bits over valid verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommitmentRates {
    pub understanding: f64,
    pub facts: f64,
    pub plan: f64,
    pub n_valid: usize,
}

/// One aggregated dataset row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub dataset: String,
    pub n: usize,
    pub compliance_rate: f64,
    pub ref_rate_understanding: f64,
    pub ref_rate_facts: f64,
    pub ref_rate_plan: f64,
    pub verbalization_rate: f64,
    pub auroc: Option<f64>,
    pub ece: Option<f64>,
    pub accuracy: f64,
    pub mean_tokens: f64,
    pub tokens_estimated: bool,
    /// AUROC/ECE computed from under-covered confidence; read with care.
    pub low_confidence_coverage: bool,
    pub phi: Option<f64>,
    pub commitment_understanding: Option<f64>,
    pub commitment_facts: Option<f64>,
    pub commitment_plan: Option<f64>,
}

/// A full report: one row per dataset, alphabetical.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<DatasetRow>,
}

/// Aggregate items (plus optional judged inputs) into a report.
pub fn aggregate_report(
    items: &[ReportItem],
    judged: Option<&JudgedInputs>,
    cfg: &ReportConfig,
) -> EvalReport {
    let mut by_dataset: BTreeMap<&str, Vec<&ReportItem>> = BTreeMap::new();
    for item in items {
        by_dataset.entry(item.dataset.as_str()).or_default().push(item);
    }

    let rows = by_dataset
        .into_iter()
        .map(|(dataset, group)| {
            let n = group.len();
            let nf = n as f64;
            let mean = |f: &dyn Fn(&ReportItem) -> bool| {
                group.iter().filter(|i| f(i)).count() as f64 / nf
            };
            let verbalization_rate = mean(&|i: &ReportItem| i.confidence.is_some());
            let points: Vec<PredictionPoint> = group
                .iter()
                .filter_map(|i| {
                    i.confidence.map(|s| PredictionPoint::new(f64::from(s) / 10.0, i.correct))
                })
                .collect();
            let judged_phi = judged.and_then(|j| j.phi.get(dataset).copied()).flatten();
            let commitment = judged.and_then(|j| j.commitment.get(dataset));
            DatasetRow {
                dataset: dataset.to_string(),
                n,
                compliance_rate: mean(&|i: &ReportItem| i.structural_ok),
                ref_rate_understanding: mean(&|i: &ReportItem| i.refs.has_understanding_ref),
                ref_rate_facts: mean(&|i: &ReportItem| i.refs.has_facts_ref),
                ref_rate_plan: mean(&|i: &ReportItem| i.refs.has_plan_ref),
                verbalization_rate,
                auroc: auroc(&points),
                ece: ece(&points, cfg.ece_bins),
                accuracy: mean(&|i: &ReportItem| i.correct),
                mean_tokens: group.iter().map(|i| i.tokens).sum::<f64>() / nf,
                tokens_estimated: group.iter().any(|i| i.tokens_estimated),
                low_confidence_coverage: verbalization_rate < cfg.low_coverage_threshold
                    && !points.is_empty(),
                phi: judged_phi,
                commitment_understanding: commitment.map(|c| c.understanding),
                commitment_facts: commitment.map(|c| c.facts),
                commitment_plan: commitment.map(|c| c.plan),
            }
        })
        .collect();
    EvalReport { rows }
}

/// Output formats for [`emit_report`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    MarkdownTable,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "markdown_table" | "markdown" | "md" => Ok(ReportFormat::MarkdownTable),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format: {other}")),
        }
    }
}

/// Column table shared by the text formats. `n` renders without decimals,
/// token counts with one, rates with four.
type MetricFn = fn(&DatasetRow) -> Option<f64>;
const COLUMNS: &[(&str, MetricFn)] = &[
    ("n", |r| Some(r.n as f64)),
    ("compliance", |r| Some(r.compliance_rate)),
    ("ref_understanding", |r| Some(r.ref_rate_understanding)),
    ("ref_facts", |r| Some(r.ref_rate_facts)),
    ("ref_plan", |r| Some(r.ref_rate_plan)),
    ("verbalized", |r| Some(r.verbalization_rate)),
    ("auroc", |r| r.auroc),
    ("ece", |r| r.ece),
    ("accuracy", |r| Some(r.accuracy)),
    ("mean_tokens", |r| Some(r.mean_tokens)),
    ("phi", |r| r.phi),
    ("commit_understanding", |r| r.commitment_understanding),
    ("commit_facts", |r| r.commitment_facts),
    ("commit_plan", |r| r.commitment_plan),
];

fn fmt_value(label: &str, v: f64) -> String {
    match label {
        "n" => format!("{v:.0}"),
        "mean_tokens" => format!("{v:.1}"),
        _ => format!("{v:.4}"),
    }
}

fn cell(row: &DatasetRow, label: &str, metric: MetricFn) -> String {
    match metric(row) {
        Some(v) => {
            let mut s = fmt_value(label, v);
            if row.low_confidence_coverage && matches!(label, "auroc" | "ece") {
                s.push('*');
            }
            if label == "mean_tokens" && row.tokens_estimated {
                s.push('~');
            }
            s
        }
        None => "-".to_string(),
    }
}

/// Render a report. Deterministic; an empty report renders headers only.
pub fn emit_report(report: &EvalReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Csv => {
            let mut out = String::from("dataset");
            for (label, _) in COLUMNS {
                out.push(',');
                out.push_str(label);
            }
            out.push('\n');
            for row in &report.rows {
                out.push_str(&row.dataset);
                for (label, metric) in COLUMNS {
                    out.push(',');
                    let c = cell(row, label, *metric);
                    out.push_str(if c == "-" { "" } else { &c });
                }
                out.push('\n');
            }
            out
        }
        ReportFormat::MarkdownTable => {
            let mut out = String::from("| dataset |");
            for (label, _) in COLUMNS {
                out.push_str(&format!(" {label} |"));
            }
            out.push_str("\n|---|");
            out.push_str(&"---|".repeat(COLUMNS.len()));
            out.push('\n');
            let mut any_low = false;
            let mut any_est = false;
            for row in &report.rows {
                out.push_str(&format!("| {} |", row.dataset));
                for (label, metric) in COLUMNS {
                    out.push_str(&format!(" {} |", cell(row, label, *metric)));
                }
                out.push('\n');
                any_low |= row.low_confidence_coverage;
                any_est |= row.tokens_estimated;
            }
            if any_low {
                out.push_str("\n\\* confidence coverage below threshold; treat with caution\n");
            }
            if any_est {
                out.push_str("\n~ whitespace token estimate (no provider count journaled)\n");
            }
            out
        }
    }
}

/// Mean and population standard deviation of one metric across runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub mean: f64,
    pub std: f64,
    /// Number of runs the metric was present in.
    pub n_runs: usize,
}

/// Per-dataset mean ± std across multiple run reports.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub runs: usize,
    /// dataset → column label → cell.
    pub cells: BTreeMap<String, BTreeMap<String, SummaryCell>>,
}

/// Summarize several per-run reports into mean ± std per metric. Metrics
/// absent in a run are averaged over the runs that have them.
pub fn summarize_runs(reports: &[EvalReport]) -> RunSummary {
    let mut values: BTreeMap<String, BTreeMap<String, Vec<f64>>> = BTreeMap::new();
    for report in reports {
        for row in &report.rows {
            let per_ds = values.entry(row.dataset.clone()).or_default();
            for (label, metric) in COLUMNS {
                if let Some(v) = metric(row) {
                    per_ds.entry((*label).to_string()).or_default().push(v);
                }
            }
        }
    }
    let cells = values
        .into_iter()
        .map(|(ds, metrics)| {
            let row = metrics
                .into_iter()
                .map(|(label, vals)| {
                    let n = vals.len() as f64;
                    let mean = vals.iter().sum::<f64>() / n;
                    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    (label, SummaryCell { mean, std: var.sqrt(), n_runs: vals.len() })
                })
                .collect();
            (ds, row)
        })
        .collect();
    RunSummary { runs: reports.len(), cells }
}

/// Render a multi-run summary with `mean ± std` cells.
pub fn emit_summary(summary: &RunSummary, format: ReportFormat) -> String {
    if format == ReportFormat::Json {
        let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
        s.push('\n');
        return s;
    }
    let markdown = format == ReportFormat::MarkdownTable;
    let mut out = String::new();
    if markdown {
        out.push_str("| dataset |");
        for (label, _) in COLUMNS {
            out.push_str(&format!(" {label} |"));
        }
        out.push_str("\n|---|");
        out.push_str(&"---|".repeat(COLUMNS.len()));
        out.push('\n');
    } else {
        out.push_str("dataset");
        for (label, _) in COLUMNS {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
    }
    for (ds, metrics) in &summary.cells {
        if markdown {
            out.push_str(&format!("| {ds} |"));
        } else {
            out.push_str(ds);
        }
        for (label, _) in COLUMNS {
            let cell = metrics
                .get(*label)
                .map(|c| format!("{} ± {}", fmt_value(label, c.mean), fmt_value(label, c.std)));
            if markdown {
                out.push_str(&format!(" {} |", cell.as_deref().unwrap_or("-")));
            } else {
                out.push(',');
                if let Some(c) = &cell {
                    out.push_str(c);
                }
            }
        }
        out.push('\n');
    }
    out
}
