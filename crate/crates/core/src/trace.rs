//! Six-section reasoning-trace grammar: parsing, structural validation, and
//! field extraction.
//!
//! A well-formed trace is six tagged blocks in a fixed canonical order:
//!
//! ```text
//! <understanding> ... </understanding>
//! <facts> ... </facts>
//! <plan> ... </plan>
//! <think> ... </think>
//! <final_answer> ... </final_answer>
//! <self_assessment> ... </self_assessment>
//! ```
//!
//! Parsing is total: arbitrary UTF-8 in, [`TraceDocument`] out. Malformed
//! structure is reported as data via [`Violation`] diagnostics, never as an
//! error.
//!
//! Grammar rules, precisely:
//!
//! - Tag matching is exact and case-sensitive (`<facts>`, never `<Facts>`).
//! - Blocks are recognized at the top level only. While a block is open, the
//!   only special token is that block's own closing tag — plus a re-occurrence
//!   of its own opening tag, which is flagged as a duplicate. Tags of *other*
//!   kinds inside an open block are plain content. This is what lets a
//!   `<think>` body cite `<facts>` or `<plan>` without breaking structure.
//! - A closing tag with no block open is a stray close (covers interleaved
//!   and half-nested structures).
//! - A second complete block of an already-seen kind is a duplicate; the
//!   first block wins.
//! - Text between blocks is kept as a stray span. Stray text is not a
//!   structural violation.

use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

/// The six section kinds, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Understanding,
    Facts,
    Plan,
    Think,
    FinalAnswer,
    SelfAssessment,
}

impl SectionKind {
    /// All kinds in canonical order.
    pub const ALL: [SectionKind; 6] = [
        SectionKind::Understanding,
        SectionKind::Facts,
        SectionKind::Plan,
        SectionKind::Think,
        SectionKind::FinalAnswer,
        SectionKind::SelfAssessment,
    ];

    /// Tag name as it appears between the angle brackets.
    pub fn tag_name(self) -> &'static str {
        match self {
            SectionKind::Understanding => "understanding",
            SectionKind::Facts => "facts",
            SectionKind::Plan => "plan",
            SectionKind::Think => "think",
            SectionKind::FinalAnswer => "final_answer",
            SectionKind::SelfAssessment => "self_assessment",
        }
    }

    /// Opening tag literal, e.g. `<facts>`.
    pub fn open_tag(self) -> &'static str {
        match self {
            SectionKind::Understanding => "<understanding>",
            SectionKind::Facts => "<facts>",
            SectionKind::Plan => "<plan>",
            SectionKind::Think => "<think>",
            SectionKind::FinalAnswer => "<final_answer>",
            SectionKind::SelfAssessment => "<self_assessment>",
        }
    }

    /// Closing tag literal, e.g. `</facts>`.
    pub fn close_tag(self) -> &'static str {
        match self {
            SectionKind::Understanding => "</understanding>",
            SectionKind::Facts => "</facts>",
            SectionKind::Plan => "</plan>",
            SectionKind::Think => "</think>",
            SectionKind::FinalAnswer => "</final_answer>",
            SectionKind::SelfAssessment => "</self_assessment>",
        }
    }

    /// Position of this kind in the canonical order (0..=5).
    pub fn canonical_index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag_name())
    }
}

/// A structural violation found while parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// The section never appears (no complete block, no dangling open tag).
    MissingTag { section: SectionKind },
    /// An opening tag was never closed; the rest of the input was consumed
    /// as its body.
    UnclosedTag { section: SectionKind, at: usize },
    /// A closing tag with no matching open block (interleaved or nested
    /// structure, or a plain stray close).
    StrayCloseTag { section: SectionKind, at: usize },
    /// The tag appears again after its block already completed, or its
    /// opening tag re-occurs inside its own open block.
    DuplicateTag { section: SectionKind, at: usize },
    /// A complete block whose kind precedes an earlier block in canonical
    /// order.
    OutOfOrderTag { section: SectionKind, at: usize },
}

impl Violation {
    /// The section the violation is about.
    pub fn section(&self) -> SectionKind {
        match *self {
            Violation::MissingTag { section }
            | Violation::UnclosedTag { section, .. }
            | Violation::StrayCloseTag { section, .. }
            | Violation::DuplicateTag { section, .. }
            | Violation::OutOfOrderTag { section, .. } => section,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingTag { section } => write!(f, "missing <{section}> section"),
            Violation::UnclosedTag { section, at } => {
                write!(f, "<{section}> opened at byte {at} is never closed")
            }
            Violation::StrayCloseTag { section, at } => {
                write!(f, "</{section}> at byte {at} has no open <{section}> block")
            }
            Violation::DuplicateTag { section, at } => {
                write!(f, "duplicate <{section}> tag at byte {at}")
            }
            Violation::OutOfOrderTag { section, at } => {
                write!(f, "<{section}> block at byte {at} is out of canonical order")
            }
        }
    }
}

/// One extracted section: kind, body text, and where the body sits in the
/// raw input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    /// Body text between the tags, verbatim.
    pub body: String,
    /// Byte range of `body` within the raw input.
    pub body_span: Range<usize>,
    /// Byte range of the whole block, opening tag through closing tag.
    pub block_span: Range<usize>,
}

/// Parse result for one raw model output.
///
/// `diagnostics` is empty exactly when every tag appears exactly once, in
/// canonical order, as six well-nested top-level blocks. Stray text between
/// blocks lives in `stray_spans` and does not affect compliance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub raw_text: String,
    /// Extracted sections in document order, at most one per kind.
    pub sections: Vec<Section>,
    pub diagnostics: Vec<Violation>,
    /// Non-whitespace text outside any block.
    pub stray_spans: Vec<Range<usize>>,
}

/// Which of the three preparation tags the think body cites literally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReferenceProfile {
    pub has_understanding_ref: bool,
    pub has_facts_ref: bool,
    pub has_plan_ref: bool,
}

impl ReferenceProfile {
    /// Number of tags cited, 0..=3.
    pub fn count(self) -> u8 {
        self.has_understanding_ref as u8 + self.has_facts_ref as u8 + self.has_plan_ref as u8
    }
}

/// A `Confidence: X/10` match inside the self-assessment body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfidenceMatch {
    /// The integer score, 0..=10.
    pub value: u8,
    /// Byte range of the numerator digits within the raw input, so the score
    /// can be rewritten in place.
    pub value_span: Range<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TagToken {
    Open(SectionKind),
    Close(SectionKind),
}

/// All tag-literal occurrences in `text`, in byte order.
///
/// The twelve literals are mutually non-overlapping (none is a substring of
/// another), so a single left-to-right scan over `<` positions is enough.
fn scan_tags(text: &str) -> Vec<(usize, TagToken)> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(off) = memchr(bytes, b'<', pos) {
        let rest = &text[off..];
        let mut matched = None;
        for kind in SectionKind::ALL {
            if rest.starts_with(kind.open_tag()) {
                matched = Some((kind.open_tag().len(), TagToken::Open(kind)));
                break;
            }
            if rest.starts_with(kind.close_tag()) {
                matched = Some((kind.close_tag().len(), TagToken::Close(kind)));
                break;
            }
        }
        match matched {
            Some((len, tok)) => {
                out.push((off, tok));
                pos = off + len;
            }
            None => pos = off + 1,
        }
    }
    out
}

fn memchr(haystack: &[u8], needle: u8, from: usize) -> Option<usize> {
    haystack[from..].iter().position(|&b| b == needle).map(|i| from + i)
}

/// Parse raw model output into a [`TraceDocument`]. Total: never fails.
pub fn parse_trace(raw_text: &str) -> TraceDocument {
    let tokens = scan_tags(raw_text);

    let mut sections: Vec<Section> = Vec::new();
    let mut diagnostics: Vec<Violation> = Vec::new();
    let mut stray_spans: Vec<Range<usize>> = Vec::new();
    // (kind, open tag start, body start, whether a block of this kind already completed)
    let mut open: Option<(SectionKind, usize, usize, bool)> = None;
    let mut cursor = 0usize;
    let mut completed = [false; 6];
    let mut unclosed = [false; 6];

    let note_stray = |span: Range<usize>, stray: &mut Vec<Range<usize>>| {
        if !raw_text[span.clone()].trim().is_empty() {
            stray.push(span);
        }
    };

    for (pos, tok) in tokens {
        match open {
            None => match tok {
                TagToken::Open(kind) => {
                    note_stray(cursor..pos, &mut stray_spans);
                    let body_start = pos + kind.open_tag().len();
                    let dup = completed[kind.canonical_index()];
                    if dup {
                        diagnostics.push(Violation::DuplicateTag { section: kind, at: pos });
                    }
                    open = Some((kind, pos, body_start, dup));
                    cursor = body_start;
                }
                TagToken::Close(kind) => {
                    note_stray(cursor..pos, &mut stray_spans);
                    diagnostics.push(Violation::StrayCloseTag { section: kind, at: pos });
                    cursor = pos + kind.close_tag().len();
                }
            },
            Some((kind, block_start, body_start, dup)) => match tok {
                TagToken::Close(k) if k == kind => {
                    if !dup {
                        sections.push(Section {
                            kind,
                            body: raw_text[body_start..pos].to_string(),
                            body_span: body_start..pos,
                            block_span: block_start..pos + kind.close_tag().len(),
                        });
                        completed[kind.canonical_index()] = true;
                    }
                    open = None;
                    cursor = pos + kind.close_tag().len();
                }
                TagToken::Open(k) if k == kind => {
                    // Re-opening the block that is already open: the tag
                    // literal occurs more than once.
                    diagnostics.push(Violation::DuplicateTag { section: kind, at: pos });
                }
                // Tags of other kinds inside an open block are content
                // (cross-section references in <think> rely on this).
                _ => {}
            },
        }
    }

    match open {
        Some((kind, block_start, _, _)) => {
            diagnostics.push(Violation::UnclosedTag { section: kind, at: block_start });
            unclosed[kind.canonical_index()] = true;
        }
        None => note_stray(cursor..raw_text.len(), &mut stray_spans),
    }

    for kind in SectionKind::ALL {
        let i = kind.canonical_index();
        if !completed[i] && !unclosed[i] {
            diagnostics.push(Violation::MissingTag { section: kind });
        }
    }

    // Completed blocks must appear in canonical order.
    let mut max_seen: Option<usize> = None;
    for sec in &sections {
        let idx = sec.kind.canonical_index();
        match max_seen {
            Some(m) if idx < m => diagnostics.push(Violation::OutOfOrderTag {
                section: sec.kind,
                at: sec.block_span.start,
            }),
            _ => max_seen = Some(max_seen.map_or(idx, |m| m.max(idx))),
        }
    }

    TraceDocument { raw_text: raw_text.to_string(), sections, diagnostics, stray_spans }
}

/// True iff the trace is structurally compliant: every tag exactly once, in
/// canonical order. Equals the structure reward as a boolean.
pub fn structural_ok(doc: &TraceDocument) -> bool {
    doc.diagnostics.is_empty()
}

/// Literal-substring reference search, restricted to the think body.
///
/// All occurrences count, including ones inside code fences or quotes — the
/// search is purely literal.
pub fn reference_profile(doc: &TraceDocument) -> ReferenceProfile {
    let Some(think) = doc.section(SectionKind::Think) else {
        return ReferenceProfile::default();
    };
    ReferenceProfile {
        has_understanding_ref: think.body.contains(SectionKind::Understanding.open_tag()),
        has_facts_ref: think.body.contains(SectionKind::Facts.open_tag()),
        has_plan_ref: think.body.contains(SectionKind::Plan.open_tag()),
    }
}

/// Extract the verbalized confidence score, if any.
///
/// Scans the self-assessment body for `Confidence: X/10` with X an integer in
/// 0..=10, tolerating whitespace and markdown emphasis around the tokens. The
/// final valid match wins. Out-of-range numerators and denominators other
/// than 10 do not match.
pub fn extract_confidence(doc: &TraceDocument) -> Option<u8> {
    confidence_match(doc).map(|m| m.value)
}

/// Like [`extract_confidence`], but also reports where the numerator sits in
/// the raw text so the score can be rewritten.
pub fn confidence_match(doc: &TraceDocument) -> Option<ConfidenceMatch> {
    let sa = doc.section(SectionKind::SelfAssessment)?;
    let re = confidence_regex();
    let mut last = None;
    for caps in re.captures_iter(&sa.body) {
        let num = caps.get(1).expect("group 1");
        let den = caps.get(2).expect("group 2");
        if den.as_str() != "10" {
            continue;
        }
        let Ok(value) = num.as_str().parse::<u8>() else { continue };
        if value > 10 {
            continue;
        }
        let start = sa.body_span.start + num.start();
        last = Some(ConfidenceMatch { value, value_span: start..start + num.len() });
    }
    last
}

fn confidence_regex() -> &'static regex::Regex {
    use std::sync::OnceLock;
    static RE: OnceLock<regex::Regex> = OnceLock::new();
    RE.get_or_init(|| {
        regex::Regex::new(r"Confidence\s*:[\s*_`]*([0-9]+)[*_`]*\s*/\s*[*_`]*([0-9]+)")
            .expect("confidence pattern compiles")
    })
}

/// Rewrite the verbalized confidence score in place, returning the new raw
/// text. `None` when the trace has no extractable score.
pub fn rewrite_confidence(doc: &TraceDocument, new_score: u8) -> Option<String> {
    debug_assert!(new_score <= 10);
    let m = confidence_match(doc)?;
    let mut out = String::with_capacity(doc.raw_text.len() + 2);
    out.push_str(&doc.raw_text[..m.value_span.start]);
    out.push_str(&new_score.to_string());
    out.push_str(&doc.raw_text[m.value_span.end..]);
    Some(out)
}

/// Extract the committed final answer: the last brace-balanced `\boxed{...}`
/// payload in the final-answer body, falling back to the last one anywhere in
/// the raw text.
pub fn extract_final_answer(doc: &TraceDocument) -> Option<String> {
    if let Some(fa) = doc.section(SectionKind::FinalAnswer) {
        if let Some(payload) = last_boxed_payload(&fa.body) {
            return Some(payload);
        }
    }
    last_boxed_payload(&doc.raw_text)
}

/// Last brace-balanced `\boxed{...}` payload in `text`. Backslash escapes
/// protect literal braces; unbalanced payloads are skipped.
pub fn last_boxed_payload(text: &str) -> Option<String> {
    const NEEDLE: &str = r"\boxed{";
    let mut best = None;
    let mut from = 0;
    while let Some(rel) = text[from..].find(NEEDLE) {
        let start = from + rel + NEEDLE.len();
        if let Some(end) = balanced_end(&text[start..]) {
            best = Some(text[start..start + end].to_string());
            from = start + end + 1;
        } else {
            from = from + rel + NEEDLE.len();
        }
    }
    best
}

/// Byte offset of the `}` that closes an already-open brace, honoring
/// backslash escapes, or `None` if the braces never balance.
fn balanced_end(s: &str) -> Option<usize> {
    let mut depth = 1usize;
    let mut chars = s.char_indices();
    while let Some((i, c)) = chars.next() {
        match c {
            '\\' => {
                chars.next();
            }
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

impl TraceDocument {
    /// The section of the given kind, if extracted.
    pub fn section(&self, kind: SectionKind) -> Option<&Section> {
        self.sections.iter().find(|s| s.kind == kind)
    }

    /// Convenience: [`structural_ok`] as a method.
    pub fn structural_ok(&self) -> bool {
        structural_ok(self)
    }

    /// Convenience: [`reference_profile`] as a method.
    pub fn reference_profile(&self) -> ReferenceProfile {
        reference_profile(self)
    }

    /// Convenience: [`extract_confidence`] as a method.
    pub fn confidence(&self) -> Option<u8> {
        extract_confidence(self)
    }

    /// Convenience: [`extract_final_answer`] as a method.
    pub fn final_answer(&self) -> Option<String> {
        extract_final_answer(self)
    }
}

/// Assemble six section bodies into a canonical compliant trace, blocks
/// separated by blank lines.
pub fn assemble_trace(bodies: &[(SectionKind, &str)]) -> String {
    let mut out = String::new();
    for (i, (kind, body)) in bodies.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        out.push_str(kind.open_tag());
        out.push_str(body);
        out.push_str(kind.close_tag());
    }
    out
}

/// Assemble a full six-section trace in canonical order.
pub fn assemble_full_trace(
    understanding: &str,
    facts: &str,
    plan: &str,
    think: &str,
    final_answer: &str,
    self_assessment: &str,
) -> String {
    assemble_trace(&[
        (SectionKind::Understanding, understanding),
        (SectionKind::Facts, facts),
        (SectionKind::Plan, plan),
        (SectionKind::Think, think),
        (SectionKind::FinalAnswer, final_answer),
        (SectionKind::SelfAssessment, self_assessment),
    ])
}
