use proptest::prelude::*;
use sillon_core::lexicon::KeywordLexicon;
use sillon_core::text::{
    normalize_comment, reconstructs, restore, segment_sentences, tokenize, Abbreviations, RestorationConfig, TextError,
    TimedSegment,
};

fn alnum_lower(s: &str) -> String {
    s.to_lowercase().chars().filter(|c| c.is_alphanumeric()).collect()
}

fn word() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[a-zéèàçôû]{1,8}",
        1 => "[A-ZÉ][a-z]{0,5}",
        1 => "[0-9]{1,3}",
        1 => "[a-z]{1,5}[.!?,]",
        1 => Just("M.".to_string()),
        1 => Just("…".to_string()),
        1 => Just("😀".to_string()),
        1 => Just("l'eau".to_string()),
    ]
}

fn segments() -> impl Strategy<Value = Vec<TimedSegment>> {
    prop::collection::vec((prop::collection::vec(word(), 0..6), 0.0f64..3.0, 0.1f64..4.0), 0..12).prop_map(|raw| {
        let mut t = 0.0;
        raw.into_iter()
            .map(|(words, gap, dur)| {
                t += gap;
                let seg = TimedSegment::new(t, dur, words.join(" "));
                t += dur;
                seg
            })
            .collect()
    })
}

fn messy_text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            6 => word(),
            1 => Just("  ".to_string()),
            1 => Just("\t\n".to_string()),
            1 => Just("\u{0007}".to_string()),
            1 => Just("e\u{0301}".to_string()),
            1 => Just("👍🏽".to_string()),
            1 => Just("🇫🇷".to_string()),
            1 => Just("!!".to_string()),
            1 => Just("« ».".to_string()),
            1 => Just("\u{200d}".to_string()),
        ],
        0..20,
    )
    .prop_map(|parts| parts.concat())
}

proptest! {
    #[test]
    fn restore_preserves_word_content(segs in segments(), threshold in 0.2f64..3.0) {
        let cfg = RestorationConfig { pause_threshold_s: threshold, ..Default::default() };
        let out = restore(&segs, &cfg).unwrap();
        let input: String = segs.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join(" ");
        prop_assert_eq!(alnum_lower(&out), alnum_lower(&input));
        prop_assert_eq!(restore(&segs, &cfg).unwrap(), out);
    }

    #[test]
    fn restored_text_segments_into_at_least_one_sentence(segs in segments()) {
        prop_assume!(segs.iter().any(|s| !s.text.trim().is_empty()));
        let cfg = RestorationConfig::default();
        let out = restore(&segs, &cfg).unwrap();
        let spans = segment_sentences(&out, &cfg.abbreviations);
        prop_assert!(!spans.is_empty());
        prop_assert!(reconstructs(&out, &spans));
    }

    #[test]
    fn segmentation_reconstructs_any_text(text in messy_text()) {
        let spans = segment_sentences(&text, &Abbreviations::default());
        prop_assert!(reconstructs(&text, &spans), "{:?} {:?}", text, spans);
        prop_assert_eq!(spans.is_empty(), text.trim().is_empty());
    }

    #[test]
    fn normalize_is_idempotent(text in messy_text()) {
        let once = normalize_comment(&text);
        prop_assert_eq!(normalize_comment(&once), once.clone());
        prop_assert!(!once.contains("  "));
        prop_assert!(!once.chars().any(|c| c.is_control()));
    }

    #[test]
    fn tokens_are_ordered_spans_of_the_source(text in messy_text()) {
        let toks = tokenize(&text);
        let mut cursor = 0;
        for t in &toks {
            prop_assert!(t.start >= cursor && t.end > t.start);
            // everything skipped between tokens is whitespace
            prop_assert!(text[cursor..t.start].chars().all(char::is_whitespace));
            let surface = text[t.start..t.end].replace('’', "'").to_lowercase();
            prop_assert_eq!(&surface, &t.text);
            cursor = t.end;
        }
        prop_assert!(text[cursor..].chars().all(char::is_whitespace));
        prop_assert_eq!(tokenize(&text), toks);
    }

    #[test]
    fn keyword_hits_never_overlap(text in prop::collection::vec(
        prop_oneof![Just("bouillie"), Just("bordelaise"), Just("purin"), Just("d'ortie"), Just("ortie"), Just("x")], 0..30)
        .prop_map(|w| w.join(" ")))
    {
        let lex = KeywordLexicon::from_categories([
            ("traitements", vec!["bouillie bordelaise", "bordelaise", "purin d'ortie", "ortie"]),
            ("divers", vec!["bouillie", "d'ortie purin"]),
        ]).unwrap();
        let hits = lex.tag(&text);
        for pair in hits.windows(2) {
            prop_assert!(pair[0].end <= pair[1].start);
        }
        for h in &hits {
            prop_assert_eq!(text[h.start..h.end].to_lowercase(), h.term.clone());
        }
    }
}

#[test]
fn restore_rejects_unsorted_segments() {
    let segs = [TimedSegment::new(5.0, 1.0, "b"), TimedSegment::new(1.0, 1.0, "a")];
    assert_eq!(restore(&segs, &RestorationConfig::default()), Err(TextError::UnsortedSegments { index: 1 }));
}

#[test]
fn restore_gap_rule_trace() {
    let cfg = RestorationConfig { pause_threshold_s: 1.5, ..Default::default() };
    let segs = [
        TimedSegment::new(0.0, 2.0, "on plante les poireaux"),
        TimedSegment::new(4.0, 1.0, "ensuite on arrose"),
        TimedSegment::new(5.5, 1.0, "un peu"),
    ];
    // gaps: 2.0 (break), 0.5 (no break)
    assert_eq!(restore(&segs, &cfg).unwrap(), "On plante les poireaux. Ensuite on arrose un peu.");
}

#[test]
fn disabled_restoration_joins_words() {
    let cfg = RestorationConfig { enabled: false, ..Default::default() };
    let segs = [TimedSegment::new(0.0, 1.0, "a  b"), TimedSegment::new(9.0, 1.0, "c")];
    assert_eq!(restore(&segs, &cfg).unwrap(), "a b c");
}
