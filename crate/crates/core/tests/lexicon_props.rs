use std::collections::BTreeSet;

use phonprep::lexicon::{
    derive_nonsilence_phones, extract_word_list, filter_lexicon, missing_words, parse_lexicon, render_phone_groups, Lexicon,
    NormalizationPolicy, OovEntry, Pronunciation, SeparatorPolicy,
};
use proptest::prelude::*;

fn lexicon() -> impl Strategy<Value = Lexicon> {
    prop::collection::vec(("[A-F]{1,3}", prop::collection::vec("(AA[0-2]|K|T|IY[0-2]|S)", 1..4)), 0..20).prop_map(|entries| {
        let mut lex = Lexicon::new();
        for (w, p) in entries {
            lex.insert(w, Pronunciation::new(p).unwrap());
        }
        lex
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn missing_and_covered_partition_the_words(lex in lexicon(), words in prop::collection::btree_set("[A-F]{1,3}", 0..20)) {
        let missing: BTreeSet<String> = missing_words(&words, &lex).into_iter().collect();
        let covered: BTreeSet<String> = words.iter().filter(|w| lex.entries().iter().any(|(lw, _)| lw == *w)).cloned().collect();
        prop_assert!(missing.is_disjoint(&covered));
        prop_assert_eq!(missing.union(&covered).cloned().collect::<BTreeSet<_>>(), words);
    }

    #[test]
    fn filtered_lexicon_only_holds_requested_words(lex in lexicon(), words in prop::collection::btree_set("[A-F]{1,3}", 0..20)) {
        let f = filter_lexicon(&lex, &words, &OovEntry::default());
        prop_assert_eq!(f.entries()[0].0.as_str(), "<oov>");
        for (w, p) in &f.entries()[1..] {
            prop_assert!(words.contains(w));
            prop_assert!(lex.prons(w).any(|q| q == p));
        }
        let kept = lex.entries().iter().filter(|(w, _)| words.contains(w)).count();
        prop_assert_eq!(f.len(), kept + 1);
    }

    #[test]
    fn render_then_parse_is_identity(lex in lexicon()) {
        let (back, report) = parse_lexicon(&lex.render(SeparatorPolicy::Tab), SeparatorPolicy::Tab).unwrap();
        prop_assert_eq!(back.entries(), lex.entries());
        prop_assert!(report.is_empty());
    }

    #[test]
    fn word_list_counts_sum_to_token_count(text in "([a-z]{1,4}[ .,]{1,2}){0,30}") {
        let policy = NormalizationPolicy::default();
        let counts = extract_word_list(&text, &policy);
        prop_assert_eq!(counts.iter().map(|c| c.count).sum::<usize>(), policy.tokens(&text).count());
        for w in counts.windows(2) {
            prop_assert!(w[0].count > w[1].count || (w[0].count == w[1].count && w[0].word < w[1].word));
        }
    }
}

#[test]
fn oov_block() {
    let (lex, _) = parse_lexicon("A AH0\nA EY1\nZEBRA Z IY1 B R AH0\n", SeparatorPolicy::AnyWhitespace).unwrap();
    let words: BTreeSet<String> = ["A".to_string()].into();
    let oov = OovEntry { word: "<oov>".into(), phone: "<oov>".into() };
    assert_eq!(filter_lexicon(&lex, &words, &oov).render(SeparatorPolicy::AnyWhitespace), "<oov> <oov>\nA AH0\nA EY1\n");
}

#[test]
fn stress_variants_share_a_line() {
    let (lex, _) = parse_lexicon("CAR K AA1 R\nCOT K AA0 T\nMA M AA2\n", SeparatorPolicy::AnyWhitespace).unwrap();
    let rendered = render_phone_groups(&derive_nonsilence_phones(&lex));
    let lines: Vec<&str> = rendered.lines().collect();
    assert!(lines.contains(&"AA0 AA1 AA2"));
    assert!(lines.contains(&"K"));
}
