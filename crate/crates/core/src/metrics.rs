//! Discrimination and calibration metrics over verbalized confidence.
//!
//! AUROC answers "if outputs are sorted by stated confidence, how often does
//! a correct answer outrank an incorrect one?" — the Mann–Whitney
//! formulation, ties credited one half. ECE answers "do answers stated at
//! 80% confidence come out correct about 80% of the time?" — the bin-weighted
//! gap between stated confidence and empirical accuracy.
//!
//! Both are meaningful only over outputs that actually state a confidence
//! score; callers filter first and should treat low-coverage values with
//! suspicion.

use serde::{Deserialize, Serialize};

/// One graded prediction: stated confidence and whether the answer was right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionPoint {
    /// Stated confidence in [0, 1] (s/10 on the integer grid).
    pub p: f64,
    pub correct: bool,
}

impl PredictionPoint {
    pub fn new(p: f64, correct: bool) -> Self {
        PredictionPoint { p, correct }
    }
}

/// Default number of equal-width ECE bins.
pub const DEFAULT_ECE_BINS: usize = 10;

/// Area under the ROC curve via the rank-sum (Mann–Whitney U) identity, ties
/// counted one half. `None` unless both classes are present.
///
/// Equivalent to brute-force pair counting:
/// `(#{p⁺ > p⁻} + ½·#{p⁺ = p⁻}) / (n⁺·n⁻)`.
pub fn auroc(points: &[PredictionPoint]) -> Option<f64> {
    let n_pos = points.iter().filter(|pt| pt.correct).count();
    let n_neg = points.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].p.total_cmp(&points[b].p));

    // Average ranks within tie groups keep the half-credit exact.
    let mut rank_sum_pos = 0.0_f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && points[order[j]].p == points[order[i]].p {
            j += 1;
        }
        let avg_rank = (i + j + 1) as f64 / 2.0; // 1-based
        for &idx in &order[i..j] {
            if points[idx].correct {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }

    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

/// Expected calibration error with `n_bins` equal-width, right-closed bins on
/// [0, 1]; p = 0 falls in the first bin. `None` when there are no points.
pub fn ece(points: &[PredictionPoint], n_bins: usize) -> Option<f64> {
    assert!(n_bins >= 1, "ece requires at least one bin");
    if points.is_empty() {
        return None;
    }

    let mut count = vec![0usize; n_bins];
    let mut conf_sum = vec![0.0_f64; n_bins];
    let mut correct_sum = vec![0usize; n_bins];
    for pt in points {
        let b = bin_index(pt.p, n_bins);
        count[b] += 1;
        conf_sum[b] += pt.p;
        correct_sum[b] += pt.correct as usize;
    }

    let n = points.len() as f64;
    let mut total = 0.0;
    for b in 0..n_bins {
        if count[b] == 0 {
            continue;
        }
        let m = count[b] as f64;
        let acc = correct_sum[b] as f64 / m;
        let conf = conf_sum[b] / m;
        total += (m / n) * (acc - conf).abs();
    }
    Some(total)
}

/// Bin index for confidence `p`: right-closed intervals `((i−1)/B, i/B]`,
/// with p = 0 assigned to the first bin.
fn bin_index(p: f64, n_bins: usize) -> usize {
    if p <= 0.0 {
        return 0;
    }
    let idx = (p * n_bins as f64).ceil() as usize;
    idx.clamp(1, n_bins) - 1
}
