//! Answer equivalence checking between an extracted final answer and a gold
//! answer.
//!
//! The rule ladder, consulted in order until one decides:
//!
//! 1. `exact` — the raw strings match after trimming outer whitespace.
//! 2. `numeric` / `rational` — both sides parse as numbers. Integers compare
//!    exactly; other exact rationals (decimals, `a/b`, `\frac{a}{b}`)
//!    compare exactly, and the outcome is labeled `rational` when either
//!    side used fraction syntax. Values that only parse as floats (e.g.
//!    scientific notation) compare within relative tolerance `1e-9`, which
//!    exists solely to guard truncated decimal expansions of rationals.
//! 3. `choice_letter` — for multiple-choice golds, case-folded single-letter
//!    comparison (`(C)` ≡ `c`).
//! 4. `normalized_literal` — equality after [`normalize_answer`].
//!
//! A missing candidate short-circuits to `no_extract`, never equivalent.
//!
//! Deliberately out of scope: symbolic algebra (`2\sqrt{3}` vs `\sqrt{12}`
//! is *not* equivalent here), unit conversion, and natural-language grading.
//! The ladder is deterministic and dependency-free so the same inputs always
//! grade the same way.

use serde::{Deserialize, Serialize};

/// How a gold answer is classified, derived deterministically from its text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerKind {
    /// Parses as an integer, decimal, fraction, or float.
    Numeric,
    /// Contains math syntax but is not a plain number (e.g. `2\sqrt{3}`).
    Expression,
    /// A single option letter a–e, possibly parenthesized.
    MultipleChoice,
    /// Anything else.
    Literal,
}

/// A gold answer plus its derived kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnswer {
    pub raw: String,
    pub kind: AnswerKind,
}

impl GoldAnswer {
    /// Classify a raw gold-answer string.
    ///
    /// Rules, in order, over the normalized text: a value that parses as a
    /// number is `Numeric`; a lone letter a–e is `MultipleChoice`; anything
    /// containing digits or math syntax (`\\ ^ _ { } = + * /`) is
    /// `Expression`; the rest is `Literal`.
    pub fn classify(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        let norm = normalize_answer(&raw);
        let kind = if parse_exact(&norm).is_some() || parse_float(&norm).is_some() {
            AnswerKind::Numeric
        } else if is_choice_letter(&norm) {
            AnswerKind::MultipleChoice
        } else if norm.chars().any(|c| {
            c.is_ascii_digit() || matches!(c, '\\' | '^' | '_' | '{' | '}' | '=' | '+' | '*' | '/')
        }) {
            AnswerKind::Expression
        } else {
            AnswerKind::Literal
        };
        GoldAnswer { raw, kind }
    }
}

/// Which rule decided a [`verify`] call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerifyRule {
    Exact,
    Numeric,
    Rational,
    ChoiceLetter,
    NormalizedLiteral,
    NoExtract,
}

/// Outcome of an equivalence check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub equivalent: bool,
    pub rule_applied: VerifyRule,
}

impl VerifyOutcome {
    fn new(equivalent: bool, rule_applied: VerifyRule) -> Self {
        VerifyOutcome { equivalent, rule_applied }
    }
}

/// Relative tolerance for float-only numeric comparison.
pub const NUMERIC_RELATIVE_TOLERANCE: f64 = 1e-9;

/// Normalize an answer string: unwrap `\boxed{}`, `$` delimiters, leading
/// "answer is" phrases and trailing periods; drop thousands separators;
/// collapse internal whitespace; lowercase lone choice letters.
///
/// Idempotent: normalizing twice equals normalizing once.
pub fn normalize_answer(s: &str) -> String {
    let mut cur = s.trim().to_string();
    // Unwrap layered decoration until a fixpoint.
    for _ in 0..16 {
        let next = unwrap_once(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    let mut out = strip_thousands_separators(&cur);
    out = collapse_whitespace(&out);
    if let Some(letter) = as_choice_letter(&out) {
        return letter.to_string();
    }
    out
}

fn unwrap_once(s: &str) -> String {
    let mut t = s.trim();

    // $...$ and $$...$$ math delimiters.
    while t.len() >= 2 && t.starts_with('$') && t.ends_with('$') {
        t = t[1..t.len() - 1].trim();
    }

    // A \boxed{...} wrapping the whole string.
    if t.starts_with(r"\boxed{") && t.ends_with('}') {
        if let Some(payload) = crate::trace::last_boxed_payload(t) {
            if format!(r"\boxed{{{payload}}}") == t {
                return payload.trim().to_string();
            }
        }
    }

    // Leading "the (final) answer is".
    let lower = t.to_ascii_lowercase();
    for prefix in ["the final answer is", "the answer is", "final answer is", "answer is"] {
        if lower.starts_with(prefix) {
            return t[prefix.len()..].trim_start_matches([':', ' ', '\t']).trim().to_string();
        }
    }

    // Trailing periods (but keep a decimal point: only strip when the dot
    // ends the string).
    let trimmed = t.trim_end_matches('.');
    if trimmed.len() != t.len() {
        return trimmed.trim().to_string();
    }

    t.to_string()
}

/// Remove commas used as thousands separators: a comma between a digit and
/// exactly three digits not followed by another digit.
fn strip_thousands_separators(s: &str) -> String {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::with_capacity(s.len());
    for (i, &c) in chars.iter().enumerate() {
        let is_sep = c == ','
            && i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.len() > i + 3
            && chars[i + 1..=i + 3].iter().all(|c| c.is_ascii_digit())
            && chars.get(i + 4).is_none_or(|c| !c.is_ascii_digit());
        if !is_sep {
            out.push(c);
        }
    }
    out
}

fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_ws = false;
    for c in s.trim().chars() {
        if c.is_whitespace() {
            in_ws = true;
        } else {
            if in_ws && !out.is_empty() {
                out.push(' ');
            }
            in_ws = false;
            out.push(c);
        }
    }
    out
}

fn as_choice_letter(s: &str) -> Option<char> {
    let inner = s
        .strip_prefix('(')
        .and_then(|rest| rest.strip_suffix(')'))
        .unwrap_or(s);
    let mut chars = inner.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() && c.to_ascii_lowercase() <= 'e' => {
            Some(c.to_ascii_lowercase())
        }
        _ => None,
    }
}

fn is_choice_letter(s: &str) -> bool {
    as_choice_letter(s).is_some()
}

// ─── Exact rational arithmetic ───────────────────────────────────────────────

/// An exact rational with reduced terms and positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Rational {
    num: i128,
    den: i128,
}

impl Rational {
    fn new(num: i128, den: i128) -> Option<Self> {
        if den == 0 {
            return None;
        }
        let g = gcd(num.unsigned_abs(), den.unsigned_abs());
        let sign = if (num < 0) != (den < 0) && num != 0 { -1 } else { 1 };
        let num = i128::try_from(num.unsigned_abs() / g).ok()? * sign;
        let den = i128::try_from(den.unsigned_abs() / g).ok()?;
        Some(Rational { num, den })
    }

    fn is_integer(self) -> bool {
        self.den == 1
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b.max(1);
    }
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Parse a normalized string as an exact rational. Accepts integers,
/// decimals, `a/b`, and `\frac{a}{b}` (plus `\dfrac`/`\tfrac`), with optional
/// leading sign. Values that would overflow `i128` return `None`.
fn parse_exact(s: &str) -> Option<Rational> {
    let s = s.trim().replace('\u{2212}', "-"); // unicode minus
    let s = s.as_str();

    for frac in [r"\frac", r"\dfrac", r"\tfrac"] {
        if let Some(rest) = s.strip_prefix(frac) {
            return parse_latex_frac(rest.trim_start());
        }
        if let Some(rest) = s.strip_prefix('-').and_then(|r| r.strip_prefix(frac)) {
            let r = parse_latex_frac(rest.trim_start())?;
            return Rational::new(-r.num, r.den);
        }
    }

    if let Some((a, b)) = s.split_once('/') {
        let num = parse_decimal(a.trim())?;
        let den = parse_decimal(b.trim())?;
        if den.num == 0 {
            return None;
        }
        let n = num.num.checked_mul(den.den)?;
        let d = num.den.checked_mul(den.num)?;
        return Rational::new(n, d);
    }

    parse_decimal(s)
}

fn parse_latex_frac(s: &str) -> Option<Rational> {
    let rest = s.strip_prefix('{')?;
    let close = rest.find('}')?;
    let a = parse_decimal(rest[..close].trim())?;
    let rest = rest[close + 1..].trim_start();
    let rest = rest.strip_prefix('{')?;
    let close = rest.find('}')?;
    if !rest[close + 1..].trim().is_empty() {
        return None;
    }
    let b = parse_decimal(rest[..close].trim())?;
    if b.num == 0 {
        return None;
    }
    let n = a.num.checked_mul(b.den)?;
    let d = a.den.checked_mul(b.num)?;
    Rational::new(n, d)
}

/// Parse a plain signed integer or decimal (no exponent) exactly.
fn parse_decimal(s: &str) -> Option<Rational> {
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    if digits.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    if int_part.len() + frac_part.len() > 36 {
        return None; // would overflow i128
    }
    let mut num: i128 = 0;
    for c in int_part.chars().chain(frac_part.chars()) {
        num = num.checked_mul(10)?.checked_add((c as u8 - b'0') as i128)?;
    }
    let den = 10i128.checked_pow(frac_part.len() as u32)?;
    Rational::new(if neg { -num } else { num }, den)
}

/// Parse as a finite float (covers scientific notation). Rejects NaN/inf and
/// alphabetic forms like "inf".
fn parse_float(s: &str) -> Option<f64> {
    let s = s.trim().replace('\u{2212}', "-");
    let first = s.chars().next()?;
    if !(first.is_ascii_digit() || matches!(first, '-' | '+' | '.')) {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn uses_fraction_syntax(s: &str) -> bool {
    s.contains('/') || s.contains(r"\frac") || s.contains(r"\dfrac") || s.contains(r"\tfrac")
}

/// Check a candidate answer against the gold answer. Total over arbitrary
/// strings; see the module docs for the rule ladder.
pub fn verify(candidate: Option<&str>, gold: &GoldAnswer) -> VerifyOutcome {
    let Some(candidate) = candidate else {
        return VerifyOutcome::new(false, VerifyRule::NoExtract);
    };

    if candidate.trim() == gold.raw.trim() {
        return VerifyOutcome::new(true, VerifyRule::Exact);
    }

    let n_c = normalize_answer(candidate);
    let n_g = normalize_answer(&gold.raw);

    // Numeric comparison.
    let exact_c = parse_exact(&n_c);
    let exact_g = parse_exact(&n_g);
    match (exact_c, exact_g) {
        (Some(a), Some(b)) => {
            let rule = if uses_fraction_syntax(&n_c) || uses_fraction_syntax(&n_g) {
                VerifyRule::Rational
            } else {
                VerifyRule::Numeric
            };
            if a == b {
                return VerifyOutcome::new(true, rule);
            }
            if a.is_integer() && b.is_integer() {
                return VerifyOutcome::new(false, VerifyRule::Numeric);
            }
            return VerifyOutcome::new(
                within_tolerance(a.to_f64(), b.to_f64()),
                VerifyRule::Numeric,
            );
        }
        _ => {
            if let (Some(a), Some(b)) = (
                exact_c.map(Rational::to_f64).or_else(|| parse_float(&n_c)),
                exact_g.map(Rational::to_f64).or_else(|| parse_float(&n_g)),
            ) {
                return VerifyOutcome::new(within_tolerance(a, b), VerifyRule::Numeric);
            }
        }
    }

    // Multiple choice: case-folded letter match.
    if gold.kind == AnswerKind::MultipleChoice {
        if let (Some(a), Some(b)) = (as_choice_letter(&n_c), as_choice_letter(&n_g)) {
            return VerifyOutcome::new(a == b, VerifyRule::ChoiceLetter);
        }
    }

    VerifyOutcome::new(n_c == n_g && !n_c.is_empty(), VerifyRule::NormalizedLiteral)
}

fn within_tolerance(a: f64, b: f64) -> bool {
    (a - b).abs() <= NUMERIC_RELATIVE_TOLERANCE * 1f64.max(a.abs()).max(b.abs())
}

/// Correctness reward: 1 iff the candidate verifies against the gold answer.
pub fn r_corr(candidate: Option<&str>, gold: &GoldAnswer) -> u8 {
    verify(candidate, gold).equivalent as u8
}
