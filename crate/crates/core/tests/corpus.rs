use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regtext::corpus::{make_splits, tokenize, DocumentBatch, SplitSpec, Vocabulary, PAD, UNK};
use regtext::smoothing::text_perturb;

#[test]
fn tokenizer_matches_golden_file() {
    let golden = include_str!("data/tokenize_golden.tsv");
    for line in golden.lines() {
        let (input, expected) = line.split_once('\t').unwrap();
        let expected: Vec<&str> = expected.split(' ').collect();
        assert_eq!(tokenize(input), expected, "input {input:?}");
    }
}

fn counts(labels: &[usize], idx: &[usize], k: usize) -> Vec<usize> {
    let mut c = vec![0; k];
    idx.iter().for_each(|&i| c[labels[i]] += 1);
    c
}

prop_compose! {
    fn token_docs()(docs in prop::collection::vec(prop::collection::vec(0u8..12, 0..15), 1..20)) -> Vec<Vec<String>> {
        docs.into_iter().map(|d| d.into_iter().map(|t| format!("w{t}")).collect()).collect()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tokens_have_no_whitespace_and_are_lowercase(text in "[ a-zA-Z0-9',.!?-]{0,40}") {
        for tok in tokenize(&text) {
            prop_assert!(!tok.is_empty());
            prop_assert!(!tok.chars().any(char::is_whitespace));
            prop_assert_eq!(tok.to_lowercase(), tok.clone());
        }
    }

    #[test]
    fn raising_min_count_only_removes_words(docs in token_docs(), lo in 1usize..4, extra in 0usize..4) {
        let small = Vocabulary::build(&docs, lo + extra);
        let big = Vocabulary::build(&docs, lo);
        prop_assert!(small.len() <= big.len());
        for tok in small.tokens() {
            prop_assert!(big.get(tok).is_some());
        }
        prop_assert_eq!(big.get("<pad>"), Some(PAD));
        prop_assert_eq!(big.get("<unk>"), Some(UNK));
    }

    #[test]
    fn splits_are_disjoint_and_stratified(
        k in 2usize..5,
        per_class in 20usize..60,
        test_per_class in 5usize..30,
        frac in 0.02f64..0.2,
        mult in 1usize..4,
        seed in 0u64..1000,
    ) {
        let train: Vec<usize> = (0..k * per_class).map(|i| i % k).collect();
        let test: Vec<usize> = (0..k * test_per_class).map(|i| (i / 3) % k).collect();
        let spec = SplitSpec { labeled_fraction: frac, unlabeled_multiplier: mult, seed, ..SplitSpec::default() };
        let Ok(s) = make_splits(&train, &test, k, &spec) else {
            // Too few labeled documents for one per class is a legitimate rejection.
            prop_assert!(((train.len() as f64 * frac).floor() as usize) < k || (mult + 1) * ((train.len() as f64 * frac).floor() as usize) > train.len());
            return Ok(());
        };
        prop_assert!(s.is_disjoint());
        prop_assert_eq!(s.unlabeled.len(), mult * s.labeled.len());
        let lc = counts(&train, &s.labeled, k);
        prop_assert!(lc.iter().all(|&c| c == lc[0]));
        let vc = counts(&test, &s.validation, k);
        prop_assert!(vc.iter().max().unwrap() - vc.iter().min().unwrap() <= 1);
        prop_assert_eq!(s.validation.len() + s.test.len(), test.len());
        prop_assert_eq!(make_splits(&train, &test, k, &spec).unwrap(), s);
    }

    #[test]
    fn swapping_keeps_the_token_multiset(
        docs in prop::collection::vec(prop::collection::vec(2usize..50, 1..12), 1..6),
        seed in 0u64..1000,
    ) {
        let refs: Vec<&[usize]> = docs.iter().map(Vec::as_slice).collect();
        let batch = DocumentBatch::new(&refs, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = text_perturb(&batch, 0.0, 0.5, &mut rng).unwrap();
        prop_assert_eq!(out.lengths(), batch.lengths());
        for row in 0..batch.size() {
            let multiset = |d: &[usize]| d.iter().fold(BTreeMap::new(), |mut m, &t| { *m.entry(t).or_insert(0) += 1; m });
            prop_assert_eq!(multiset(out.doc(row)), multiset(batch.doc(row)));
        }
    }
}
