//! Deterministic core for structured reasoning traces: the six-section tag
//! grammar, answer verification, the four-component reward, rank-preserving
//! confidence debiasing, judge-verdict parsing, and calibration metrics with
//! report aggregation.
//!
//! Everything in this crate is pure and reentrant; HTTP clients and pipeline
//! orchestration live in the companion crates.

pub mod debias;
pub mod faithfulness;
pub mod judge;
pub mod metrics;
pub mod records;
pub mod report;
pub mod reward;
pub mod trace;
pub mod verify;

pub use debias::{remap_scores, ConfidenceSample, DebiasConfig, ScoreDistribution};
pub use metrics::{auroc, ece, PredictionPoint};
pub use records::{ProblemRecord, ScoredRecord, TraceRecord};
pub use reward::{score_group, score_trace, RewardBreakdown, RewardWeights};
pub use trace::{parse_trace, structural_ok, SectionKind, TraceDocument};
pub use verify::{normalize_answer, verify, GoldAnswer, VerifyOutcome};

/// Chapters of the guide under `book/` double as doctests so the examples
/// there keep compiling against the real API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/trace-format.md")]
    mod trace_format {}
    #[doc = include_str!("../../../book/src/answer-checking.md")]
    mod answer_checking {}
    #[doc = include_str!("../../../book/src/rewards.md")]
    mod rewards {}
    #[doc = include_str!("../../../book/src/confidence-debiasing.md")]
    mod confidence_debiasing {}
    #[doc = include_str!("../../../book/src/calibration-metrics.md")]
    mod calibration_metrics {}
    #[doc = include_str!("../../../book/src/faithfulness.md")]
    mod faithfulness {}
}
