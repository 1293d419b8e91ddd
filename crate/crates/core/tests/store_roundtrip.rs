use fewshot_core::embedding_store::{load_dataset, save_dataset, Dataset, EmbeddingRecord, Span};
use proptest::prelude::*;

type RecordParts = (Option<Vec<f32>>, Option<(Vec<Vec<f32>>, Vec<usize>)>, String);

fn record(dim: usize) -> impl Strategy<Value = RecordParts> {
    let vector = move || prop::collection::vec(any::<f32>().prop_filter("finite", |x| x.is_finite()), dim);
    (
        prop::option::of(vector()),
        prop::option::of((prop::collection::vec(vector(), 1..5), prop::collection::vec(1usize..3, 0..3))),
        "[A-Z]{1,3}",
    )
        .prop_filter("payload", |(p, t, _)| p.is_some() || t.is_some())
}

fn dataset() -> impl Strategy<Value = Dataset> {
    (1usize..5).prop_flat_map(|dim| {
        prop::collection::vec(record(dim), 1..8).prop_map(move |raw| {
            let records = raw
                .into_iter()
                .enumerate()
                .map(|(i, (pooled, tokens, label))| {
                    let (tokens, word_spans) = match tokens {
                        Some((tokens, widths)) => {
                            // Consume widths while they fit inside the token sequence.
                            let mut spans = Vec::new();
                            let mut at = 0;
                            for w in widths {
                                if at + w <= tokens.len() {
                                    spans.push(Span::new(at, at + w));
                                    at += w;
                                }
                            }
                            (Some(tokens), Some(spans))
                        }
                        None => (None, None),
                    };
                    EmbeddingRecord {
                        id: format!("r{i}"),
                        label,
                        pooled,
                        tokens,
                        word_spans,
                    }
                })
                .collect();
            Dataset::with_dimension(records, dim).expect("valid by construction")
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn load_after_save_is_identity(ds in dataset()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.jsonl");
        save_dataset(&ds, &path).unwrap();
        let back = load_dataset(&path).unwrap();
        prop_assert_eq!(back.len(), ds.len());
        for (a, b) in back.records().iter().zip(ds.records()) {
            let bits = |v: &Option<Vec<f32>>| v.as_ref().map(|v| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
            prop_assert_eq!(bits(&a.pooled), bits(&b.pooled));
            let tbits = |t: &Option<Vec<Vec<f32>>>| t.as_ref().map(|t| t.iter().map(|v| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>()).collect::<Vec<_>>());
            prop_assert_eq!(tbits(&a.tokens), tbits(&b.tokens));
        }
        prop_assert_eq!(back, ds);
    }
}

#[test]
fn record_order_is_preserved() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("order.jsonl");
    let ids = ["z", "a", "m", "b"];
    let ds = Dataset::new(ids.iter().map(|id| EmbeddingRecord::pooled(*id, "X", vec![1.0, 2.0])).collect()).unwrap();
    save_dataset(&ds, &path).unwrap();
    let back: Vec<String> = load_dataset(&path).unwrap().records().iter().map(|r| r.id.clone()).collect();
    assert_eq!(back, ids);
}
