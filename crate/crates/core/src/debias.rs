//! Rank-preserving confidence debiasing by histogram specification.
//!
//! Keeping only correct-answer traces inflates self-assessment scores toward
//! the top of the 0..=10 grid. To widen coverage of the low bins without
//! reordering anyone, scores are remapped so their marginal matches a target
//! mixture of the empirical PMF with the uniform distribution:
//!
//! ```text
//! p_tgt(s) = α·p_emp(s) + (1−α)/11
//! ```
//!
//! Each sample takes the mid-quantile of its rank, `u = (r − 1/2)/N` (ranks
//! over nondecreasing score order, ties broken by input order), and maps
//! through the target inverse CDF:
//!
//! ```text
//! s' = min { s ∈ {0..10} : F_tgt(s) ≥ u }
//! ```
//!
//! The map preserves ranks exactly and matches `p_tgt` up to discretization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of points on the integer score grid 0..=10.
pub const SUPPORT: usize = 11;

#[derive(Debug, Error, PartialEq)]
pub enum DebiasError {
    #[error("empty sample")]
    EmptySample,
    #[error("score {0} outside the 0..=10 grid")]
    ScoreOutOfRange(u8),
    #[error("mixture alpha {0} outside [0, 1]")]
    InvalidAlpha(f64),
}

/// Configuration for the debiasing transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DebiasConfig {
    /// Weight of the empirical PMF in the target mixture.
    pub mixture_alpha: f64,
}

impl Default for DebiasConfig {
    fn default() -> Self {
        DebiasConfig { mixture_alpha: 0.9 }
    }
}

impl DebiasConfig {
    pub fn validate(&self) -> Result<(), DebiasError> {
        if !(0.0..=1.0).contains(&self.mixture_alpha) || !self.mixture_alpha.is_finite() {
            return Err(DebiasError::InvalidAlpha(self.mixture_alpha));
        }
        Ok(())
    }
}

/// A PMF and its CDF over the 11-point score grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pmf: [f64; SUPPORT],
    cdf: [f64; SUPPORT],
}

impl ScoreDistribution {
    fn from_pmf(pmf: [f64; SUPPORT]) -> Self {
        let mut cdf = [0.0; SUPPORT];
        let mut acc = 0.0;
        for (s, &p) in pmf.iter().enumerate() {
            acc += p;
            cdf[s] = acc;
        }
        ScoreDistribution { pmf, cdf }
    }

    /// Probability mass at score `s`.
    pub fn pmf(&self, s: u8) -> f64 {
        self.pmf[s as usize]
    }

    /// Cumulative probability up to and including `s`.
    pub fn cdf(&self, s: u8) -> f64 {
        self.cdf[s as usize]
    }

    /// The full PMF as a slice indexed by score.
    pub fn pmf_slice(&self) -> &[f64; SUPPORT] {
        &self.pmf
    }

    /// Smallest score whose CDF reaches `u`: the inverse-CDF map. Falls back
    /// to 10 if accumulated rounding leaves the CDF a hair under `u`.
    pub fn inverse_cdf(&self, u: f64) -> u8 {
        for s in 0..SUPPORT {
            if self.cdf[s] >= u {
                return s as u8;
            }
        }
        (SUPPORT - 1) as u8
    }

    /// Total-variation distance to another distribution on the same grid.
    pub fn total_variation(&self, other: &ScoreDistribution) -> f64 {
        0.5 * self
            .pmf
            .iter()
            .zip(other.pmf.iter())
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// One remapped confidence sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSample {
    pub trace_id: String,
    /// Original score.
    pub s: u8,
    /// 1-based rank in nondecreasing score order, ties by input order.
    pub rank: usize,
    /// Mid-quantile (rank − 1/2)/N.
    pub u: f64,
    /// Remapped score.
    pub s_prime: u8,
}

/// Empirical PMF of a score sample.
pub fn empirical_pmf(scores: &[u8]) -> Result<ScoreDistribution, DebiasError> {
    if scores.is_empty() {
        return Err(DebiasError::EmptySample);
    }
    let mut counts = [0usize; SUPPORT];
    for &s in scores {
        if s as usize >= SUPPORT {
            return Err(DebiasError::ScoreOutOfRange(s));
        }
        counts[s as usize] += 1;
    }
    let n = scores.len() as f64;
    let mut pmf = [0.0; SUPPORT];
    for (p, &c) in pmf.iter_mut().zip(counts.iter()) {
        *p = c as f64 / n;
    }
    Ok(ScoreDistribution::from_pmf(pmf))
}

/// Mix the empirical PMF with the uniform distribution on the grid.
pub fn target_pmf(emp: &ScoreDistribution, cfg: &DebiasConfig) -> Result<ScoreDistribution, DebiasError> {
    cfg.validate()?;
    let alpha = cfg.mixture_alpha;
    let uniform = 1.0 / SUPPORT as f64;
    let mut pmf = [0.0; SUPPORT];
    for (t, &e) in pmf.iter_mut().zip(emp.pmf.iter()) {
        *t = alpha * e + (1.0 - alpha) * uniform;
    }
    Ok(ScoreDistribution::from_pmf(pmf))
}

/// Remap a sample of `(trace_id, score)` pairs by histogram specification.
/// Output order matches input order.
pub fn remap_scores<S: AsRef<str>>(
    samples: &[(S, u8)],
    cfg: &DebiasConfig,
) -> Result<Vec<ConfidenceSample>, DebiasError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(DebiasError::EmptySample);
    }
    let scores: Vec<u8> = samples.iter().map(|(_, s)| *s).collect();
    let emp = empirical_pmf(&scores)?;
    let tgt = target_pmf(&emp, cfg)?;

    // Stable sort by score assigns tied ranks in input order.
    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| scores[i]);

    let mut ranks = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        ranks[i] = pos + 1;
    }

    Ok(samples
        .iter()
        .enumerate()
        .map(|(i, (id, s))| {
            let u = (ranks[i] as f64 - 0.5) / n as f64;
            ConfidenceSample {
                trace_id: id.as_ref().to_string(),
                s: *s,
                rank: ranks[i],
                u,
                s_prime: tgt.inverse_cdf(u),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empirical_counts() {
        let d = empirical_pmf(&[10, 10, 9, 8]).unwrap();
        assert_eq!(d.pmf(8), 0.25);
        assert_eq!(d.pmf(9), 0.25);
        assert_eq!(d.pmf(10), 0.5);
        assert_eq!(d.pmf(0), 0.0);
        assert!((d.cdf(10) - 1.0).abs() < 1e-12);

        let d = empirical_pmf(&[0]).unwrap();
        assert_eq!(d.pmf(0), 1.0);
        let d = empirical_pmf(&[5, 5, 5, 5]).unwrap();
        assert_eq!(d.pmf(5), 1.0);
    }

    #[test]
    fn empirical_rejects_bad_input() {
        assert_eq!(empirical_pmf(&[]), Err(DebiasError::EmptySample));
        assert_eq!(empirical_pmf(&[11]), Err(DebiasError::ScoreOutOfRange(11)));
    }

    #[test]
    fn target_mixture_point_mass() {
        let emp = empirical_pmf(&[10]).unwrap();
        let tgt = target_pmf(&emp, &DebiasConfig { mixture_alpha: 0.9 }).unwrap();
        assert!((tgt.pmf(10) - (0.9 + 0.1 / 11.0)).abs() < 1e-12);
        for s in 0..10u8 {
            assert!((tgt.pmf(s) - 0.1 / 11.0).abs() < 1e-12);
        }
        let sum: f64 = tgt.pmf_slice().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn target_mixture_extremes() {
        let emp = empirical_pmf(&[3, 3, 7]).unwrap();
        let id = target_pmf(&emp, &DebiasConfig { mixture_alpha: 1.0 }).unwrap();
        assert_eq!(id.pmf_slice(), emp.pmf_slice());
        let uni = target_pmf(&emp, &DebiasConfig { mixture_alpha: 0.0 }).unwrap();
        for s in 0..=10u8 {
            assert!((uni.pmf(s) - 1.0 / 11.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_tens_case() {
        let samples: Vec<(String, u8)> = (0..10).map(|i| (format!("t{i}"), 10u8)).collect();
        let out = remap_scores(&samples, &DebiasConfig::default()).unwrap();
        let mut remapped: Vec<u8> = out.iter().map(|c| c.s_prime).collect();
        remapped.sort_unstable();
        assert_eq!(remapped, vec![5, 10, 10, 10, 10, 10, 10, 10, 10, 10]);
        // The lowest mid-quantile is the one that drops.
        let low = out.iter().find(|c| c.rank == 1).unwrap();
        assert_eq!(low.s_prime, 5);
        assert!((low.u - 0.05).abs() < 1e-12);
    }

    #[test]
    fn near_identity_case() {
        let samples = [("a", 8u8), ("b", 9), ("c", 10), ("d", 10)];
        let out = remap_scores(&samples, &DebiasConfig::default()).unwrap();
        let remapped: Vec<u8> = out.iter().map(|c| c.s_prime).collect();
        assert_eq!(remapped, vec![8, 9, 10, 10]);
    }

    #[test]
    fn single_sample_identity_mixture() {
        for k in 0..=10u8 {
            let out = remap_scores(&[("only", k)], &DebiasConfig { mixture_alpha: 1.0 }).unwrap();
            assert_eq!(out[0].s_prime, k);
            assert_eq!(out[0].rank, 1);
            assert!((out[0].u - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_rank_by_input_order_and_output_order_is_input_order() {
        let samples = [("first", 7u8), ("second", 7), ("third", 3)];
        let out = remap_scores(&samples, &DebiasConfig::default()).unwrap();
        assert_eq!(out[0].trace_id, "first");
        assert_eq!(out[1].trace_id, "second");
        assert_eq!(out[2].trace_id, "third");
        assert_eq!(out[2].rank, 1);
        assert_eq!(out[0].rank, 2);
        assert_eq!(out[1].rank, 3);
    }

    #[test]
    fn rank_preservation_all_pairs() {
        let samples: Vec<(String, u8)> =
            [9u8, 9, 10, 2, 7, 10, 10, 8, 9, 6, 10, 10, 5, 9, 10, 0, 10, 8]
                .iter()
                .enumerate()
                .map(|(i, &s)| (format!("t{i}"), s))
                .collect();
        let out = remap_scores(&samples, &DebiasConfig::default()).unwrap();
        for a in &out {
            for b in &out {
                if a.rank < b.rank {
                    assert!(a.s_prime <= b.s_prime, "rank order broken: {a:?} vs {b:?}");
                }
            }
        }
    }

    #[test]
    fn remap_errors() {
        let empty: [(&str, u8); 0] = [];
        assert_eq!(remap_scores(&empty, &DebiasConfig::default()), Err(DebiasError::EmptySample));
        assert!(matches!(
            remap_scores(&[("a", 3u8)], &DebiasConfig { mixture_alpha: 1.5 }),
            Err(DebiasError::InvalidAlpha(_))
        ));
    }
}
