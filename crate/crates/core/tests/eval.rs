//! Metric invariants over random prediction sets.

use codeclass::classifier::{RankedClass, TopKPrediction};
use codeclass::eval::{confusion_matrix, evaluate, span_statistic, topk_accuracy, Gold, GoldLabels};
use codeclass::pscode::{Prediction, PsPrediction, ScoredCode};
use proptest::prelude::*;

const C: usize = 6;

fn class(i: usize) -> String {
    format!("IND_{i}")
}

/// Each sample: a permutation seed for its full ranking and 1–2 gold classes.
fn arb_samples() -> impl Strategy<Value = Vec<(Vec<usize>, Vec<usize>)>> {
    proptest::collection::vec(
        (
            Just((0..C).collect::<Vec<_>>()).prop_shuffle(),
            proptest::collection::btree_set(0..C, 1..3).prop_map(|s| s.into_iter().collect::<Vec<_>>()),
        ),
        1..60,
    )
}

fn build(samples: &[(Vec<usize>, Vec<usize>)], k: usize) -> (Vec<Prediction>, Gold) {
    let mut preds = Vec::new();
    let mut gold = Gold::new();
    for (i, (ranking, g)) in samples.iter().enumerate() {
        let id = format!("c{i}");
        let ranked = ranking[..k]
            .iter()
            .enumerate()
            .map(|(r, &c)| RankedClass {
                id: class(c),
                prob: 1.0 / (r + 2) as f64,
            })
            .collect();
        preds.push(Prediction {
            company_id: id.clone(),
            industries: TopKPrediction { ranked },
            products: ranking[..k]
                .iter()
                .map(|&c| PsPrediction {
                    industry_id: class(c),
                    ranked: vec![ScoredCode {
                        id: format!("PS_{c}"),
                        score: 0.5,
                    }],
                })
                .collect(),
        });
        gold.insert(
            id,
            GoldLabels {
                industries: g.iter().map(|&c| class(c)).collect(),
                ps_codes: vec![format!("PS_{}", g[0])],
            },
        );
    }
    (preds, gold)
}

proptest! {
    #[test]
    fn accuracy_monotone_in_k(samples in arb_samples()) {
        let (preds, gold) = build(&samples, C);
        let mut prev = 0.0;
        for k in 1..=C {
            let a = topk_accuracy(&preds, &gold, k).unwrap();
            prop_assert!(a >= prev);
            prop_assert!((0.0..=1.0).contains(&a));
            prev = a;
        }
        prop_assert_eq!(prev, 1.0);
    }

    #[test]
    fn confusion_conserves_and_span_bounded(samples in arb_samples(), mass in 0.1f64..1.0) {
        let (preds, gold) = build(&samples, 3);
        let cm = confusion_matrix(&preds, &gold).unwrap();
        prop_assert_eq!(cm.total(), preds.len());
        for (i, label) in cm.labels.iter().enumerate() {
            let expected = samples.iter().filter(|(_, g)| class(g[0]) == *label).count();
            prop_assert_eq!(cm.row_total(i), expected);
        }
        let span = span_statistic(&cm, mass);
        for (label, s) in &span {
            prop_assert!(*s >= 1 && *s <= cm.labels.len(), "{} {}", label, s);
        }
        // a larger mass never needs fewer cells
        let wider = span_statistic(&cm, 1.0);
        for (label, s) in &span {
            prop_assert!(wider[label] >= *s);
        }
    }

    #[test]
    fn report_fields_consistent(samples in arb_samples()) {
        let (preds, gold) = build(&samples, 3);
        let r = evaluate(&preds, &gold, 3, 0.9).unwrap();
        prop_assert_eq!(r.n_samples, preds.len());
        prop_assert_eq!(r.top3_industry_accuracy, topk_accuracy(&preds, &gold, 3).unwrap());
        // gold code PS_g sits under industry g, so a product hit implies
        // that industry was predicted
        prop_assert!(r.top2_ps_accuracy.unwrap() <= r.top3_industry_accuracy);
    }
}
