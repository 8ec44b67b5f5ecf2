//! Parsing of judge-model verdicts.
//!
//! Two verdict shapes exist: the commitment audit returns three bits in one
//! box, `\boxed{U,F,P}`, and the pairwise readability comparison returns a
//! single option, `\boxed{k}` with k in 1..=5. Judges that think out loud may
//! emit earlier boxes; the final box is the verdict. Unparseable outputs are
//! marked invalid and excluded from rates rather than coerced.

use serde::{Deserialize, Serialize};

use crate::trace::last_boxed_payload;

/// The three commitment bits: does the think section follow the stated
/// understanding, use only the listed facts, and execute the plan in order?
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentBits {
    pub understanding: u8,
    pub facts: u8,
    pub plan: u8,
}

/// A commitment-audit verdict: parsed bits (if the output was parseable)
/// plus the raw judge output for the record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentVerdict {
    pub bits: Option<CommitmentBits>,
    pub judge_raw: String,
}

impl CommitmentVerdict {
    /// Parse a raw judge output. The final `\boxed{...}` payload must match
    /// `b,b,b` with each bit 0 or 1, modulo whitespace; anything else is
    /// invalid.
    pub fn parse(judge_raw: impl Into<String>) -> Self {
        let judge_raw = judge_raw.into();
        let bits = last_boxed_payload(&judge_raw).and_then(|p| parse_bit_triple(&p));
        CommitmentVerdict { bits, judge_raw }
    }

    pub fn is_valid(&self) -> bool {
        self.bits.is_some()
    }
}

fn parse_bit_triple(payload: &str) -> Option<CommitmentBits> {
    let parts: Vec<&str> = payload.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return None;
    }
    let mut bits = [0u8; 3];
    for (slot, part) in bits.iter_mut().zip(&parts) {
        *slot = match *part {
            "0" => 0,
            "1" => 1,
            _ => return None,
        };
    }
    Some(CommitmentBits { understanding: bits[0], facts: bits[1], plan: bits[2] })
}

/// A pairwise readability verdict on the 1..=5 scale, stored in the
/// *canonical* frame: 1 means the first-listed trace is clearly easier to
/// read, 5 means the second is. Verdicts collected with the presentation
/// order swapped are remapped on construction so both directions aggregate
/// directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadabilityVerdict {
    pub option: u8,
    pub order_swapped: bool,
}

impl ReadabilityVerdict {
    /// Build from the option as the judge stated it. For swapped
    /// presentations the scale is mirrored (1↔5, 2↔4, 3↔3) so the stored
    /// option always refers to the canonical order.
    pub fn from_stated(stated: u8, order_swapped: bool) -> Option<Self> {
        if !(1..=5).contains(&stated) {
            return None;
        }
        let option = if order_swapped { swap_remap(stated) } else { stated };
        Some(ReadabilityVerdict { option, order_swapped })
    }
}

/// Mirror a 1..=5 preference when the two traces trade places.
pub fn swap_remap(option: u8) -> u8 {
    debug_assert!((1..=5).contains(&option));
    6 - option
}

/// Parse the final `\boxed{k}` option from a raw readability-judge output.
/// Tolerates whitespace and markdown emphasis around the integer; values
/// outside 1..=5 are invalid.
pub fn parse_readability_option(judge_raw: &str) -> Option<u8> {
    let payload = last_boxed_payload(judge_raw)?;
    let cleaned = payload.trim_matches(|c: char| c.is_whitespace() || matches!(c, '*' | '_' | '`'));
    let k: u8 = cleaned.parse().ok()?;
    (1..=5).contains(&k).then_some(k)
}
