//! The four trace reward components and their weighted composite.
//!
//! For a trace `y` against gold answer `a`:
//!
//! - correctness: `r_corr = 1{Verify(y, a)}`
//! - structure:   `r_struct = 1{every tag appears exactly once, in order}`
//! - references:  `r_ref = (1/3)·1{<understanding> cited} + (1/3)·1{<facts>
//!   cited} + (1/3)·1{<plan> cited}`, counted in the think body
//! - confidence:  `r_conf = (1 − (p − r_corr)²) − λ·δ_miss` with `p = s/10`;
//!   a missing score zeroes the Brier term and pays the full `λ` penalty
//!
//! and the composite `R = α·r_corr + β·r_struct + γ·r_ref + ζ·r_conf`.
//!
//! Components are computed independently: a structurally broken trace with a
//! parseable self-assessment still earns (or loses) the confidence term, and
//! a boxed answer anywhere in the text is still graded for correctness.

use serde::{Deserialize, Serialize};

use crate::trace::{self, TraceDocument};
use crate::verify::{self, GoldAnswer};

/// Composite weights plus the missing-confidence penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub lambda_miss: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        RewardWeights { alpha: 0.25, beta: 0.25, gamma: 0.25, zeta: 0.25, lambda_miss: 1.0 }
    }
}

impl RewardWeights {
    /// All weights must be nonnegative and finite.
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("zeta", self.zeta),
            ("lambda_miss", self.lambda_miss),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("reward weight {name} must be a nonnegative finite number, got {v}"));
            }
        }
        Ok(())
    }
}

/// Per-component scores for one trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    /// 0 or 1.
    pub r_corr: f64,
    /// 0 or 1.
    pub r_struct: f64,
    /// 0, 1/3, 2/3, or 1.
    pub r_ref: f64,
    /// In [-λ, 1].
    pub r_conf: f64,
    /// 1 when no confidence score was extracted.
    pub delta_miss: u8,
    /// Stated probability s/10, when a score was extracted.
    pub p: Option<f64>,
    /// The weighted composite.
    pub total: f64,
}

/// Structure reward: [`trace::structural_ok`] as 0/1.
pub fn r_struct(doc: &TraceDocument) -> u8 {
    trace::structural_ok(doc) as u8
}

/// Reference reward: one third per preparation tag cited in the think body.
pub fn r_ref(doc: &TraceDocument) -> f64 {
    f64::from(trace::reference_profile(doc).count()) / 3.0
}

/// Confidence reward. `confidence` is the extracted integer score.
pub fn r_conf(confidence: Option<u8>, correct: u8, lambda_miss: f64) -> f64 {
    match confidence {
        Some(s) => {
            debug_assert!(s <= 10);
            let p = f64::from(s) / 10.0;
            1.0 - (p - f64::from(correct)).powi(2)
        }
        None => -lambda_miss,
    }
}

/// Score one parsed trace against its gold answer.
pub fn score_trace(doc: &TraceDocument, gold: &GoldAnswer, weights: &RewardWeights) -> RewardBreakdown {
    let answer = trace::extract_final_answer(doc);
    let corr = verify::r_corr(answer.as_deref(), gold);
    let structure = r_struct(doc);
    let refs = r_ref(doc);
    let confidence = trace::extract_confidence(doc);
    let conf = r_conf(confidence, corr, weights.lambda_miss);

    let r_corr = f64::from(corr);
    let r_struct = f64::from(structure);
    let total = weights.alpha * r_corr + weights.beta * r_struct + weights.gamma * refs + weights.zeta * conf;

    RewardBreakdown {
        r_corr,
        r_struct,
        r_ref: refs,
        r_conf: conf,
        delta_miss: confidence.is_none() as u8,
        p: confidence.map(|s| f64::from(s) / 10.0),
        total,
    }
}

/// Score a trajectory group and attach group-relative advantages:
/// `(total_i − mean) / std` with population std, and all-zero advantages for
/// zero-variance groups (common on trivially solved problems).
pub fn score_group(
    docs: &[TraceDocument],
    gold: &GoldAnswer,
    weights: &RewardWeights,
) -> Vec<(RewardBreakdown, f64)> {
    let breakdowns: Vec<RewardBreakdown> =
        docs.iter().map(|d| score_trace(d, gold, weights)).collect();
    let advantages = group_advantages(&breakdowns.iter().map(|b| b.total).collect::<Vec<_>>());
    breakdowns.into_iter().zip(advantages).collect()
}

/// Mean-centered, std-normalized advantages over a slice of totals.
pub fn group_advantages(totals: &[f64]) -> Vec<f64> {
    let n = totals.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = totals.iter().sum::<f64>() / n as f64;
    let var = totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    if std == 0.0 {
        return vec![0.0; n];
    }
    totals.iter().map(|t| (t - mean) / std).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{assemble_full_trace, parse_trace};

    fn full_trace(think: &str, answer: &str, assessment: &str) -> TraceDocument {
        parse_trace(&assemble_full_trace("u", "f", "p", think, answer, assessment))
    }

    fn perfect() -> TraceDocument {
        full_trace(
            "Per <understanding>, using the <facts> and the <plan>: 2+2=4.",
            "\\boxed{4}",
            "All checked. Confidence: 10/10",
        )
    }

    #[test]
    fn r_conf_examples() {
        assert_eq!(r_conf(Some(10), 1, 1.0), 1.0);
        assert_eq!(r_conf(Some(0), 1, 1.0), 0.0);
        assert_eq!(r_conf(None, 0, 1.0), -1.0);
        assert_eq!(r_conf(None, 1, 1.0), -1.0);
        assert!((r_conf(Some(7), 0, 1.0) - 0.51).abs() < 1e-12);
        assert!((r_conf(Some(3), 1, 1.0) - 0.51).abs() < 1e-12);
    }

    #[test]
    fn perfect_trace_totals_one() {
        let gold = GoldAnswer::classify("4");
        let b = score_trace(&perfect(), &gold, &RewardWeights::default());
        assert_eq!(b.r_corr, 1.0);
        assert_eq!(b.r_struct, 1.0);
        assert_eq!(b.r_ref, 1.0);
        assert_eq!(b.r_conf, 1.0);
        assert_eq!(b.delta_miss, 0);
        assert_eq!(b.p, Some(1.0));
        assert_eq!(b.total, 1.0);
    }

    #[test]
    fn compliant_wrong_all_refs_zero_confidence() {
        let doc = full_trace(
            "Per <understanding>, <facts>, <plan>: conclude 5.",
            "\\boxed{5}",
            "Shaky. Confidence: 0/10",
        );
        let gold = GoldAnswer::classify("4");
        let b = score_trace(&doc, &gold, &RewardWeights::default());
        assert_eq!((b.r_corr, b.r_struct, b.r_ref, b.r_conf), (0.0, 1.0, 1.0, 1.0));
        assert!((b.total - 0.75).abs() < 1e-12);
    }

    #[test]
    fn think_only_correct_answer_no_confidence() {
        let doc = parse_trace("<think>so it is \\boxed{4}</think>");
        let gold = GoldAnswer::classify("4");
        let b = score_trace(&doc, &gold, &RewardWeights::default());
        assert_eq!((b.r_corr, b.r_struct, b.r_ref, b.r_conf), (1.0, 0.0, 0.0, -1.0));
        assert_eq!(b.delta_miss, 1);
        assert_eq!(b.p, None);
        assert!(b.total.abs() < 1e-12);
    }

    #[test]
    fn partial_references() {
        let doc = full_trace("Only the <facts> get cited.", "\\boxed{4}", "Confidence: 5/10");
        assert!((r_ref(&doc) - 1.0 / 3.0).abs() < 1e-15);
        let doc = parse_trace("<understanding>u</understanding>");
        assert_eq!(r_ref(&doc), 0.0);
    }

    #[test]
    fn editing_self_assessment_only_moves_r_conf() {
        let gold = GoldAnswer::classify("4");
        let w = RewardWeights::default();
        let a = full_trace("t", "\\boxed{4}", "Confidence: 10/10");
        let b = full_trace("t", "\\boxed{4}", "Confidence: 2/10");
        let ba = score_trace(&a, &gold, &w);
        let bb = score_trace(&b, &gold, &w);
        assert_eq!(ba.r_corr, bb.r_corr);
        assert_eq!(ba.r_struct, bb.r_struct);
        assert_eq!(ba.r_ref, bb.r_ref);
        assert_ne!(ba.r_conf, bb.r_conf);
        assert_ne!(ba.total, bb.total);
    }

    #[test]
    fn conf_monotone_toward_truth() {
        for s in 0..10u8 {
            assert!(r_conf(Some(s + 1), 1, 1.0) >= r_conf(Some(s), 1, 1.0));
            assert!(r_conf(Some(s), 0, 1.0) >= r_conf(Some(s + 1), 0, 1.0));
        }
    }

    #[test]
    fn group_advantage_cases() {
        assert_eq!(group_advantages(&[1.0, 1.0, 1.0, 1.0]), vec![0.0; 4]);
        let adv = group_advantages(&[0.0, 1.0]);
        assert!((adv[0] + 1.0).abs() < 1e-12 && (adv[1] - 1.0).abs() < 1e-12);
        assert_eq!(group_advantages(&[0.42]), vec![0.0]);
        assert!(group_advantages(&[]).is_empty());
    }

    #[test]
    fn advantages_sum_to_zero() {
        let totals = [0.1, 0.9, 0.3, 0.55, -0.2, 1.0, 0.75];
        let sum: f64 = group_advantages(&totals).iter().sum();
        assert!(sum.abs() < 1e-12);
    }

    #[test]
    fn weights_validation() {
        assert!(RewardWeights::default().validate().is_ok());
        let bad = RewardWeights { alpha: -0.1, ..Default::default() };
        assert!(bad.validate().is_err());
        let nan = RewardWeights { zeta: f64::NAN, ..Default::default() };
        assert!(nan.validate().is_err());
    }
}
