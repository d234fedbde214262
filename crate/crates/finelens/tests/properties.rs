//! Randomized invariants over the partitioning, pruning, merge, and
//! tokenization layers.

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use proptest::prelude::*;

use finelens::corpus::{merge_shared_decisions, Corpus, EnforcementCase, Sector};
use finelens::eval::{kfold, split, SplitSpec};
use finelens::textprep::{preprocess_document, prune_rare_terms, Lexicon, PrepConfig, TokenizedDoc};

fn lexicon() -> &'static Lexicon {
    static LEX: OnceLock<Lexicon> = OnceLock::new();
    LEX.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("dictionary.txt"),
            "breach\nbreaches\nconsent\nnotice\nnotices\nfine\nfined\nthe\nof\n",
        )
        .unwrap();
        std::fs::write(dir.path().join("stopwords.txt"), "the\nof\na\n").unwrap();
        std::fs::write(
            dir.path().join("lemmas.tsv"),
            "breaches\tbreach\nnotices\tnotice\nfined\tfine\n",
        )
        .unwrap();
        Lexicon::load_dir(dir.path()).unwrap()
    })
}

proptest! {
    #[test]
    fn split_partitions_indices(n in 2usize..200, seed in any::<u64>(), frac in 0.05f64..0.5) {
        let spec = SplitSpec { seed, test_fraction: frac, folds: 2 };
        let (train, test) = split(n, &spec);
        prop_assert_eq!(test.len(), (n as f64 * frac).ceil() as usize);
        let mut all = [train.clone(), test.clone()].concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(train.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(test.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn kfold_partitions_with_balanced_sizes(n in 5usize..150, k in 2usize..8, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let indices: Vec<usize> = (0..n).collect();
        let folds = kfold(&indices, k, seed);
        prop_assert_eq!(folds.len(), k);
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        let (min, max) = (*sizes.iter().min().unwrap(), *sizes.iter().max().unwrap());
        prop_assert!(max - min <= 1);
        let mut flat: Vec<usize> = folds.into_iter().flatten().collect();
        flat.sort_unstable();
        prop_assert_eq!(flat, indices);
    }

    #[test]
    fn prune_never_lengthens_docs(
        docs in prop::collection::vec(
            prop::collection::vec("[a-d]{3}", 0..12),
            1..8,
        ),
        min_count in 1usize..5,
    ) {
        let docs: Vec<TokenizedDoc> = docs
            .into_iter()
            .enumerate()
            .map(|(i, lemmas)| TokenizedDoc { case_id: format!("c{i}"), lemmas })
            .collect();
        let cfg = PrepConfig { min_corpus_count: min_count, ..PrepConfig::default() };
        let pruned = prune_rare_terms(&docs, &cfg);
        prop_assert_eq!(pruned.len(), docs.len());
        let mut counts = std::collections::HashMap::new();
        for d in &docs {
            for l in &d.lemmas {
                *counts.entry(l.clone()).or_insert(0usize) += 1;
            }
        }
        for (before, after) in docs.iter().zip(&pruned) {
            prop_assert!(after.lemmas.len() <= before.lemmas.len());
            prop_assert_eq!(&after.case_id, &before.case_id);
            for l in &after.lemmas {
                prop_assert!(counts[l] >= min_count);
            }
        }
    }

    #[test]
    fn merge_is_idempotent_and_conserves_fines(
        specs in prop::collection::vec((0u8..4, 1u32..40, 1.0f64..1e6), 1..20),
    ) {
        let cases: Vec<EnforcementCase> = specs
            .iter()
            .enumerate()
            .map(|(i, &(group, article, fine))| EnforcementCase {
                case_id: format!("c{i}"),
                country: "FI".to_string(),
                year: 2020,
                sector: Sector::Unknown,
                articles: BTreeSet::from([article]),
                fine_eur: fine,
                decision_ref: format!("dec-{group}"),
                text: String::new(),
            })
            .collect();
        let total: f64 = cases.iter().map(|c| c.fine_eur).sum();
        let distinct: HashSet<String> = cases.iter().map(|c| c.decision_ref.clone()).collect();
        let corpus = Corpus { cases };

        let once = merge_shared_decisions(&corpus).unwrap();
        prop_assert_eq!(once.cases.len(), distinct.len());
        let merged_total: f64 = once.cases.iter().map(|c| c.fine_eur).sum();
        prop_assert!((merged_total - total).abs() < 1e-6 * total.max(1.0));

        let twice = merge_shared_decisions(&once).unwrap();
        prop_assert_eq!(&twice, &once);
    }

    #[test]
    fn tokenization_ignores_punctuation_placement(
        words in prop::collection::vec(
            prop::sample::select(vec!["breach", "breaches", "consent", "notices", "fined", "the"]),
            0..15,
        ),
        seps in prop::collection::vec(
            prop::sample::select(vec![" ", ". ", ", ", "; ", " - ", "\n", "(", ") "]),
            15,
        ),
    ) {
        let plain = words.join(" ");
        let mut decorated = String::new();
        for (w, s) in words.iter().zip(&seps) {
            decorated.push_str(w);
            decorated.push_str(s);
        }
        let cfg = PrepConfig::default();
        prop_assert_eq!(
            preprocess_document(&plain, lexicon(), &cfg),
            preprocess_document(&decorated, lexicon(), &cfg)
        );
    }
}
