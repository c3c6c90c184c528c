use std::collections::BTreeSet;
use std::sync::Arc;

use dlgen_core::dialog::{Action, DialogState, Mode};
use dlgen_core::slicer::{self, retain_by_label, retain_by_leaf_term, splice_consumed, DerivedTree};
use dlgen_core::Document;
use dlgen_testkit::{document_filter, random_dataset, random_steps, token_universe, GenConfig, PathOracle};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn modes() -> [Mode; 2] {
    [Mode::Basic, Mode::Generalized]
}

#[test]
fn engine_matches_path_oracle_on_random_dialogs() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..150 {
        let ds = random_dataset(&mut rng, &GenConfig::SMALL);
        let mode = modes()[rng.gen_range(0..2)];
        let mut state = DialogState::new(Arc::new(ds.clone()), mode);
        let mut oracle = PathOracle::new(&ds, mode);
        for step in random_steps(&mut rng, &ds, 8) {
            let action = step.resolve(&state);
            let (next, outcome) = state.apply(&action);
            if let Some(expected) = oracle.apply(&action) {
                assert_eq!(outcome.is_ok(), expected, "{action:?} on {mode}: {outcome:?}");
            }
            state = next;
            assert_eq!(state.tree().document_ids(), oracle.documents(), "after {action:?}");
        }
    }
}

#[test]
fn fresh_tokens_agree_with_document_filter() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..150 {
        let ds = random_dataset(&mut rng, &GenConfig::SMALL);
        let universe: Vec<String> = token_universe(&ds).into_iter().collect();
        for mode in modes() {
            let mut state = DialogState::new(Arc::new(ds.clone()), mode);
            let mut accepted: Vec<String> = Vec::new();
            for _ in 0..4 {
                let token = universe[rng.gen_range(0..universe.len())].clone();
                if accepted.contains(&token) {
                    continue;
                }
                let mut candidate = accepted.clone();
                candidate.push(token.clone());
                let expected = document_filter(&ds, mode, &candidate);
                match state.out_of_turn(&token) {
                    Ok(next) => {
                        assert_eq!(next.tree().document_ids(), expected);
                        state = next;
                        accepted = candidate;
                    }
                    Err(_) => assert!(expected.is_empty(), "{token} rejected but matches {expected:?}"),
                }
            }
        }
    }
}

#[test]
fn vocabulary_lists_exactly_the_sayable_tokens() {
    let mut rng = StdRng::seed_from_u64(13);
    for _ in 0..60 {
        let ds = random_dataset(&mut rng, &GenConfig::SMALL);
        let universe = token_universe(&ds);
        let mode = modes()[rng.gen_range(0..2)];
        let mut state = DialogState::new(Arc::new(ds.clone()), mode);
        for step in random_steps(&mut rng, &ds, 4) {
            if let Ok(vocab) = state.vocabulary() {
                let sayable = vocab.sayable_tokens();
                for token in &universe {
                    let ok = state.out_of_turn(token).is_ok();
                    assert_eq!(ok, sayable.contains(token), "{token} in {mode} mode");
                }
                for entry in &vocab.labels {
                    assert!(state.out_of_turn(&entry.label).is_ok(), "label {}", entry.label);
                }
            }
            let action = step.resolve(&state);
            state = state.apply(&action).0;
        }
    }
}

fn dataset_seed() -> impl Strategy<Value = u64> {
    any::<u64>()
}

fn purviews_are_correct(tree: &DerivedTree) -> bool {
    tree.root()
        .walk()
        .into_iter()
        .all(|n| n.purview == n.document_ids().len() && n.purview >= 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn retain_then_splice_keeps_documents(seed in dataset_seed(), pick in any::<usize>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let ds = random_dataset(&mut rng, &GenConfig::SMALL);
        let universe: Vec<String> = token_universe(&ds).into_iter().collect();
        let token = &universe[pick % universe.len()];
        let full = DerivedTree::from_dataset(&ds);
        if let Ok((tree, matched)) = retain_by_label(&full, token) {
            prop_assert!(purviews_are_correct(&tree));
            let spliced = splice_consumed(&tree, &matched);
            let ids: BTreeSet<_> = spliced.root().walk().iter().map(|n| n.id).collect();
            prop_assert!(ids.is_disjoint(&matched));
            let mut before: Vec<_> = tree.paths().into_iter().map(|(_, d)| d).collect();
            let mut after: Vec<_> = spliced.paths().into_iter().map(|(_, d)| d).collect();
            before.sort();
            after.sort();
            prop_assert_eq!(before, after);
            prop_assert!(purviews_are_correct(&spliced));
            // Re-applying keeps the leaf set.
            let (again, _) = retain_by_label(&tree, token).unwrap();
            prop_assert_eq!(again.document_ids(), tree.document_ids());
        }
        if let Ok(tree) = retain_by_leaf_term(&full, token, &ds) {
            let again = retain_by_leaf_term(&tree, token, &ds).unwrap();
            prop_assert_eq!(again.document_ids(), tree.document_ids());
        }
    }

    #[test]
    fn pivot_conserves_documents(seed in dataset_seed()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let ds = std::iter::repeat_with(|| random_dataset(&mut rng, &GenConfig::SMALL))
            .find(|ds| !ds.facet_schema().is_empty())
            .unwrap();
        let order: Vec<String> = ds.facet_schema().iter().rev().cloned().collect();
        let docs: Vec<&Document> = ds.documents().iter().collect();
        let tree = slicer::pivot(&docs, &order, &ds).unwrap();
        let all: BTreeSet<String> = ds.documents().iter().map(|d| d.id.clone()).collect();
        prop_assert_eq!(tree.document_ids(), all);
        prop_assert!(purviews_are_correct(&tree));
        for (labels, doc) in tree.paths() {
            prop_assert_eq!(labels.len(), order.len());
            let doc = ds.document(&doc).unwrap();
            for (label, facet) in labels.iter().zip(&order) {
                let key = dlgen_core::text::label_key(label);
                prop_assert!(doc.facet(facet).iter().any(|v| dlgen_core::text::label_key(v) == key));
            }
        }
    }

    #[test]
    fn utterance_order_does_not_matter(seed in dataset_seed(), a in any::<usize>(), b in any::<usize>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let ds = Arc::new(random_dataset(&mut rng, &GenConfig::SMALL));
        let universe: Vec<String> = token_universe(&ds).into_iter().collect();
        let (t1, t2) = (&universe[a % universe.len()], &universe[b % universe.len()]);
        for mode in modes() {
            let s = DialogState::new(Arc::clone(&ds), mode);
            let one = s.out_of_turn(t1).and_then(|s| s.out_of_turn(t2));
            let two = s.out_of_turn(t2).and_then(|s| s.out_of_turn(t1));
            if let (Ok(x), Ok(y)) = (one, two) {
                prop_assert_eq!(x.tree().shape(), y.tree().shape());
            }
        }
    }

    #[test]
    fn replaying_a_transcript_reproduces_the_view(seed in dataset_seed()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let ds = Arc::new(random_dataset(&mut rng, &GenConfig::SMALL));
        let mut state = DialogState::new(Arc::clone(&ds), Mode::Generalized);
        for step in random_steps(&mut rng, &ds, 8) {
            let action = step.resolve(&state);
            state = state.apply(&action).0;
        }
        let actions: Vec<Action> = state.script();
        let report = dlgen_core::replay::replay(DialogState::new(ds, Mode::Generalized), &actions, false).unwrap();
        prop_assert_eq!(report.state.view(), state.view());
        prop_assert_eq!(report.state.transcript(), state.transcript());
    }
}
