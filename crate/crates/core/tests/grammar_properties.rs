//! Property tests for the trace grammar, normalization, debiasing, and
//! group advantages.

use proptest::prelude::*;

use tracelab_core::debias::{remap_scores, DebiasConfig};
use tracelab_core::reward::group_advantages;
use tracelab_core::trace::{
    assemble_full_trace, extract_confidence, parse_trace, reference_profile, structural_ok,
    SectionKind,
};
use tracelab_core::verify::{normalize_answer, verify, GoldAnswer};

/// Section bodies that cannot collide with tag literals.
fn body() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 .,:;()\\n-]{0,60}"
}

fn compliant_trace() -> impl Strategy<Value = String> {
    (
        body(),
        body(),
        body(),
        body(),
        prop::collection::vec(prop::sample::select(vec![
            SectionKind::Understanding,
            SectionKind::Facts,
            SectionKind::Plan,
        ]), 0..4),
        body(),
        prop::option::of(0u8..=10),
    )
        .prop_map(|(u, f, p, mut t, refs, fa, conf)| {
            for kind in refs {
                t.push_str(" from ");
                t.push_str(kind.open_tag());
                t.push(' ');
            }
            let sa = match conf {
                Some(s) => format!("looks fine\nConfidence: {s}/10"),
                None => "no stated score".to_string(),
            };
            assemble_full_trace(&u, &f, &p, &t, &format!("{fa} \\boxed{{42}}"), &sa)
        })
}

proptest! {
    /// Assembly round-trips: the parser returns exactly the six sections
    /// with byte-identical bodies.
    #[test]
    fn round_trip_preserves_bodies(
        (u, f, p, t, fa, sa) in (body(), body(), body(), body(), body(), body())
    ) {
        let text = assemble_full_trace(&u, &f, &p, &t, &fa, &sa);
        let doc = parse_trace(&text);
        prop_assert!(structural_ok(&doc));
        let expected = [u, f, p, t, fa, sa];
        prop_assert_eq!(doc.sections.len(), 6);
        for (sec, want) in doc.sections.iter().zip(expected.iter()) {
            prop_assert_eq!(&sec.body, want);
        }
    }

    /// Removing any single structural tag breaks compliance.
    #[test]
    fn monotone_damage_under_tag_deletion(text in compliant_trace()) {
        let doc = parse_trace(&text);
        prop_assert!(structural_ok(&doc));
        for sec in &doc.sections {
            let open_end = sec.block_span.start + sec.kind.open_tag().len();
            let close_start = sec.block_span.end - sec.kind.close_tag().len();
            for range in [sec.block_span.start..open_end, close_start..sec.block_span.end] {
                let mut mutated = text.clone();
                mutated.replace_range(range, "");
                prop_assert!(
                    !structural_ok(&parse_trace(&mutated)),
                    "deleting a {} tag kept the trace compliant",
                    sec.kind
                );
            }
        }
    }

    /// Reference flags only see the think body.
    #[test]
    fn references_ignore_text_outside_think(text in compliant_trace(), noise in body()) {
        let doc = parse_trace(&text);
        let before = reference_profile(&doc);
        // Splice a <facts> literal into the understanding body.
        let u = doc.section(SectionKind::Understanding).unwrap();
        let mut mutated = text.clone();
        mutated.insert_str(u.body_span.start, "<facts>");
        mutated.insert_str(0, &noise);
        let after = reference_profile(&parse_trace(&mutated));
        prop_assert_eq!(before, after);
    }

    /// The last valid confidence line wins; surrounding content is inert.
    #[test]
    fn confidence_takes_final_match(a in 0u8..=10, b in 0u8..=10, pre in body(), post in body()) {
        let sa = format!("{pre}\nConfidence: {a}/10\n...\nConfidence: {b}/10\n{post}");
        let doc = parse_trace(&assemble_full_trace("u", "f", "p", "t", "fa", &sa));
        prop_assert_eq!(extract_confidence(&doc), Some(b));
    }

    /// normalize_answer is idempotent over arbitrary short strings.
    #[test]
    fn normalize_idempotent(s in "\\PC{0,40}") {
        let once = normalize_answer(&s);
        prop_assert_eq!(normalize_answer(&once), once);
    }

    /// verify is total over adversarial candidate strings.
    #[test]
    fn verify_never_panics(s in "\\PC{0,40}", g in "\\PC{1,20}") {
        let gold = GoldAnswer::classify(g);
        let out = verify(Some(&s), &gold);
        let _ = out.equivalent;
    }

    /// Histogram-specification remapping: ranks preserved, support closed,
    /// deterministic, output order = input order.
    #[test]
    fn remap_invariants(
        scores in prop::collection::vec(0u8..=10, 1..120),
        alpha in 0.0f64..=1.0
    ) {
        let samples: Vec<(String, u8)> = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| (format!("t{i}"), s))
            .collect();
        let cfg = DebiasConfig { mixture_alpha: alpha };
        let out = remap_scores(&samples, &cfg).unwrap();
        let again = remap_scores(&samples, &cfg).unwrap();
        prop_assert_eq!(&out, &again);
        for (c, (id, s)) in out.iter().zip(samples.iter()) {
            prop_assert_eq!(&c.trace_id, id);
            prop_assert_eq!(c.s, *s);
            prop_assert!(c.s_prime <= 10);
        }
        for a in &out {
            for b in &out {
                if a.rank < b.rank {
                    prop_assert!(a.s_prime <= b.s_prime);
                }
            }
        }
    }

    /// Group advantages are mean-zero for any nonempty group.
    #[test]
    fn advantages_sum_to_zero(totals in prop::collection::vec(-1.0f64..=1.0, 1..40)) {
        let adv = group_advantages(&totals);
        let sum: f64 = adv.iter().sum();
        prop_assert!(sum.abs() < 1e-12);
    }
}

/// Marginal matching: for large samples the remapped histogram sits within
/// total-variation 0.02 of the target mixture.
#[test]
fn remap_matches_target_marginal() {
    use rand::distr::weighted::WeightedIndex;
    use rand::prelude::*;

    let weights = [1.0, 1.0, 1.0, 2.0, 2.0, 3.0, 4.0, 6.0, 10.0, 14.0, 16.0];
    let dist = WeightedIndex::new(weights).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let samples: Vec<(String, u8)> =
        (0..2000).map(|i| (format!("t{i}"), dist.sample(&mut rng) as u8)).collect();

    let cfg = DebiasConfig::default();
    let out = remap_scores(&samples, &cfg).unwrap();
    let remapped: Vec<u8> = out.iter().map(|c| c.s_prime).collect();
    let original: Vec<u8> = samples.iter().map(|(_, s)| *s).collect();

    let emp = tracelab_core::debias::empirical_pmf(&original).unwrap();
    let tgt = tracelab_core::debias::target_pmf(&emp, &cfg).unwrap();
    let hist = tracelab_core::debias::empirical_pmf(&remapped).unwrap();
    let tv = hist.total_variation(&tgt);
    assert!(tv <= 0.02, "total variation {tv} exceeds the discretization bound");
}
