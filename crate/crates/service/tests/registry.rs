use std::sync::Arc;
use std::thread;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use serde_json::json;

use teeda_core::persistence::{load_corpus, save_corpus, ItemDocument};
use teeda_core::{Category, Corpus};
use teeda_service::{replay, Action, Registry, RegistryError};

const LABELS: &[&str] = &["date", "age", "sex", "area name", "number of cases", "日付", "price"];

fn doc(value: serde_json::Value) -> ItemDocument {
    serde_json::from_value(value).unwrap()
}

fn random_doc(rng: &mut StdRng, request: bool) -> ItemDocument {
    let n = rng.random_range(1..=4);
    let vars: Vec<&str> = LABELS.choose_multiple(rng, n).copied().collect();
    if request {
        doc(json!({"kind": "request", "name": format!("r{}", rng.random::<u16>()), "variables": vars}))
    } else {
        doc(json!({
            "kind": "providable",
            "name": format!("j{}", rng.random::<u16>()),
            "variables": vars,
            "types": ["table"],
            "sharing": "generally shareable",
        }))
    }
}

/// Random valid and invalid operations against a registry.
fn drive(registry: &Registry, rng: &mut StdRng, steps: usize) {
    for _ in 0..steps {
        let ids: Vec<String> = registry
            .snapshot()
            .corpus
            .items()
            .map(|i| i.id().to_string())
            .collect();
        let pick = ids.choose(rng).cloned();
        match rng.random_range(0..6) {
            0 | 1 => {
                let request = rng.random_bool(0.5);
                let _ = registry.create_item(&random_doc(rng, request));
            }
            2 => {
                if let Some(id) = pick {
                    let kind = registry.snapshot().corpus.get(&id).unwrap().kind();
                    let request = kind == teeda_core::DataKind::Request;
                    // sometimes tries a kind change, which must be rejected
                    let flip = rng.random_bool(0.2);
                    let r = registry.update_item(&id, &random_doc(rng, request != flip));
                    assert_eq!(r.is_err(), flip);
                }
            }
            3 => {
                if let Some(id) = pick {
                    registry.delete_item(&id).unwrap();
                }
            }
            4 => {
                if let Some(id) = pick {
                    let cat = [
                        None,
                        Some(Category::IndividualDecisionMaking),
                        Some(Category::PhenomenonUnderstanding),
                    ]
                    .choose(rng)
                    .copied()
                    .unwrap();
                    let _ = registry.categorize(&id, cat);
                }
            }
            _ => {
                let bad = doc(json!({"kind": "request", "name": "", "variables": []}));
                assert!(matches!(
                    registry.create_item(&bad),
                    Err(RegistryError::ValidationFailed(_))
                ));
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn replaying_the_log_reproduces_the_registry(seed in any::<u64>(), steps in 0usize..60) {
        let registry = Registry::in_memory();
        let mut rng = StdRng::seed_from_u64(seed);
        drive(&registry, &mut rng, steps);
        let events = registry.events();
        for (i, e) in events.iter().enumerate() {
            prop_assert_eq!(e.seq, i as u64 + 1);
        }
        let replayed = replay(&events).unwrap();
        let snap = registry.snapshot();
        prop_assert_eq!(&replayed, snap.corpus.as_ref());
    }
}

#[test]
fn concurrent_writers_get_contiguous_sequence_numbers() {
    let registry = Arc::new(Registry::in_memory());
    let mut sub = registry.subscribe(None).unwrap();
    let handles: Vec<_> = (0..8)
        .map(|t| {
            let registry = Arc::clone(&registry);
            thread::spawn(move || {
                let mut rng = StdRng::seed_from_u64(t);
                for _ in 0..50 {
                    registry.create_item(&random_doc(&mut rng, t % 2 == 0)).unwrap();
                }
            })
        })
        .collect();
    for h in handles {
        h.join().unwrap();
    }
    let events = registry.events();
    assert_eq!(events.len(), 400);
    let seqs: Vec<u64> = events.iter().map(|e| e.seq).collect();
    assert_eq!(seqs, (1..=400).collect::<Vec<_>>());

    let mut live = Vec::new();
    while let Ok(e) = sub.live.try_recv() {
        live.push(e);
    }
    assert_eq!(live, events);
    assert_eq!(registry.snapshot().corpus.len(), 400);
}

#[test]
fn subscribers_see_identical_sequences() {
    let registry = Arc::new(Registry::in_memory());
    let mut rng = StdRng::seed_from_u64(7);
    drive(&registry, &mut rng, 10);
    let mut early = registry.subscribe(Some(0)).unwrap();
    drive(&registry, &mut rng, 20);
    let mut late = registry.subscribe(Some(3.min(registry.seq()))).unwrap();
    drive(&registry, &mut rng, 20);

    let collect = |sub: &mut teeda_service::Subscription| {
        let mut all = sub.replay.clone();
        while let Ok(e) = sub.live.try_recv() {
            if all.last().is_none_or(|l| e.seq > l.seq) {
                all.push(e);
            }
        }
        all
    };
    let a = collect(&mut early);
    let b = collect(&mut late);
    let full = registry.events();
    assert_eq!(a, full);
    assert_eq!(b.as_slice(), &full[b[0].seq as usize - 1..]);
}

#[test]
fn subscribing_past_the_end_is_a_replay_gap() {
    let registry = Registry::in_memory();
    assert!(matches!(
        registry.subscribe(Some(1)),
        Err(RegistryError::ReplayGap { since: 1, current: 0 })
    ));
}

#[test]
fn broadcast_happens_after_commit() {
    let registry = Arc::new(Registry::in_memory());
    let mut sub = registry.subscribe(None).unwrap();
    let reader = {
        let registry = Arc::clone(&registry);
        thread::spawn(move || {
            for _ in 0..100 {
                let event = sub.live.blocking_recv().unwrap();
                // the snapshot already contains what the event announces
                let snap = registry.snapshot();
                assert!(snap.seq >= event.seq);
                assert!(snap.corpus.contains(&event.id));
            }
        })
    };
    let mut rng = StdRng::seed_from_u64(1);
    for _ in 0..100 {
        registry.create_item(&random_doc(&mut rng, true)).unwrap();
    }
    reader.join().unwrap();
}

#[test]
fn restart_resumes_sequence_and_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mut rng = StdRng::seed_from_u64(99);
    let (seq, corpus) = {
        let registry = Registry::open(&path).unwrap();
        drive(&registry, &mut rng, 40);
        (registry.seq(), Corpus::clone(&registry.snapshot().corpus))
    };
    assert_eq!(load_corpus(&path).unwrap(), corpus);

    let registry = Registry::open(&path).unwrap();
    assert_eq!(registry.seq(), seq);
    assert_eq!(registry.snapshot().corpus.as_ref(), &corpus);
    let c = registry.create_item(&random_doc(&mut rng, true)).unwrap();
    assert_eq!(c.event.seq, seq + 1);
    assert!(!corpus.contains(&c.event.id), "generated ids are never reused");
}

#[test]
fn external_edits_are_reconciled_into_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.jsonl");
    let mut rng = StdRng::seed_from_u64(5);
    {
        let registry = Registry::open(&path).unwrap();
        drive(&registry, &mut rng, 30);
    }
    let mut edited = load_corpus(&path).unwrap();
    let first = edited.items().next().map(|i| i.id().to_string());
    if let Some(id) = first {
        edited.remove(&id).unwrap();
    }
    edited
        .insert(random_doc(&mut rng, false).to_item().unwrap())
        .unwrap();
    save_corpus(&edited, &path).unwrap();

    let registry = Registry::open(&path).unwrap();
    assert_eq!(registry.snapshot().corpus.as_ref(), &edited);
    assert_eq!(&replay(&registry.events()).unwrap(), &edited);
}

#[test]
fn writes_report_warnings_and_errors() {
    let registry = Registry::in_memory();
    let c = registry
        .create_item(&doc(json!({"kind": "request", "name": "a", "variables": ["date"]})))
        .unwrap();
    assert_eq!(c.warnings.len(), 1);
    assert_eq!(c.event.action, Action::Created);
    assert_eq!(c.event.id, "item-0001");

    let dup = doc(json!({"id": "item-0001", "kind": "request", "name": "b", "variables": ["x", "y"]}));
    assert!(matches!(registry.create_item(&dup), Err(RegistryError::DuplicateId(_))));

    let mismatch = doc(json!({"id": "other", "kind": "request", "name": "b", "variables": ["x", "y"]}));
    assert!(matches!(
        registry.update_item("item-0001", &mismatch),
        Err(RegistryError::ValidationFailed(_))
    ));

    let extra = doc(json!({"kind": "request", "name": "b", "variables": ["x"], "colour": "red"}));
    assert!(matches!(registry.create_item(&extra), Err(RegistryError::ValidationFailed(_))));

    let jacket = doc(json!({"kind": "providable", "name": "j", "variables": ["date", "x"]}));
    let j = registry.create_item(&jacket).unwrap().event.id;
    assert!(matches!(
        registry.categorize(&j, Some(Category::IndividualDecisionMaking)),
        Err(RegistryError::NotARequest(_))
    ));
    assert!(matches!(registry.matches(&j, None), Err(RegistryError::UnknownRequest(_))));
    assert!(matches!(registry.delete_item("nope"), Err(RegistryError::UnknownItem(_))));

    let m = registry.matches("item-0001", Some(5)).unwrap();
    assert!(!m.unmet);
    assert_eq!(m.matches[0].jacket_id, j);
    assert_eq!(registry.seq(), 2);
}
