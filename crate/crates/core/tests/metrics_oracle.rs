use proptest::prelude::*;
use sillon_core::evaluate::{confusion, report, ConfusionMatrix, EvalError};

// Metrics straight from the label lists, by counting.
struct Brute {
    precision: Vec<f64>,
    recall: Vec<f64>,
    f1: Vec<f64>,
    support: Vec<f64>,
    accuracy: f64,
}

fn brute(preds: &[usize], golds: &[usize], k: usize) -> Brute {
    let mut b = Brute { precision: vec![], recall: vec![], f1: vec![], support: vec![], accuracy: 0.0 };
    for c in 0..k {
        let tp = preds.iter().zip(golds).filter(|(p, g)| **p == c && **g == c).count() as f64;
        let predicted = preds.iter().filter(|p| **p == c).count() as f64;
        let gold = golds.iter().filter(|g| **g == c).count() as f64;
        let p = if predicted == 0.0 { 0.0 } else { tp / predicted };
        let r = if gold == 0.0 { 0.0 } else { tp / gold };
        b.precision.push(p);
        b.recall.push(r);
        b.f1.push(if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) });
        b.support.push(gold);
    }
    b.accuracy = preds.iter().zip(golds).filter(|(p, g)| p == g).count() as f64 / preds.len() as f64;
    b
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn weighted(xs: &[f64], w: &[f64]) -> f64 {
    xs.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / w.iter().sum::<f64>()
}

fn labelled(k: usize) -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    (2..=k).prop_flat_map(|k| {
        (1..200usize).prop_flat_map(move |n| {
            (Just(k), prop::collection::vec(0..k, n), prop::collection::vec(0..k, n))
        })
    })
}

fn names(k: usize) -> Vec<String> {
    (0..k).map(|c| format!("class{c}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn report_matches_brute_force((k, preds, golds) in labelled(7)) {
        let classes = names(k);
        let p: Vec<&str> = preds.iter().map(|&i| classes[i].as_str()).collect();
        let g: Vec<&str> = golds.iter().map(|&i| classes[i].as_str()).collect();
        let rep = report(&confusion(&p, &g, &classes).unwrap()).unwrap();
        let b = brute(&preds, &golds, k);
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12;

        for c in 0..k {
            prop_assert!(close(rep.per_class[c].precision, b.precision[c]));
            prop_assert!(close(rep.per_class[c].recall, b.recall[c]));
            prop_assert!(close(rep.per_class[c].f1, b.f1[c]));
            prop_assert_eq!(rep.per_class[c].support as f64, b.support[c]);
        }
        prop_assert!(close(rep.macro_avg.precision, mean(&b.precision)));
        prop_assert!(close(rep.macro_avg.recall, mean(&b.recall)));
        prop_assert!(close(rep.macro_avg.f1, mean(&b.f1)));
        prop_assert!(close(rep.weighted_avg.precision, weighted(&b.precision, &b.support)));
        prop_assert!(close(rep.weighted_avg.f1, weighted(&b.f1, &b.support)));
        prop_assert_eq!(rep.weighted_avg.recall, b.accuracy);
        prop_assert_eq!(rep.accuracy, b.accuracy);
        prop_assert_eq!(rep.total as usize, preds.len());

        for x in [rep.macro_avg.precision, rep.macro_avg.recall, rep.macro_avg.f1,
                  rep.weighted_avg.precision, rep.weighted_avg.f1, rep.accuracy] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        let macro_f1 = rep.macro_avg.f1;
        let lo = rep.per_class.iter().map(|m| m.f1).fold(f64::INFINITY, f64::min);
        let hi = rep.per_class.iter().map(|m| m.f1).fold(0.0, f64::max);
        prop_assert!(lo - 1e-12 <= macro_f1 && macro_f1 <= hi + 1e-12);
    }

    #[test]
    fn permuting_classes_permutes_per_class_metrics((k, preds, golds) in labelled(6), rot in 1usize..6) {
        let classes = names(k);
        let perm: Vec<usize> = (0..k).map(|c| (c + rot) % k).collect();
        let permuted: Vec<String> = perm.iter().map(|&c| classes[c].clone()).collect();
        let p: Vec<&str> = preds.iter().map(|&i| classes[i].as_str()).collect();
        let g: Vec<&str> = golds.iter().map(|&i| classes[i].as_str()).collect();
        let a = report(&confusion(&p, &g, &classes).unwrap()).unwrap();
        let b = report(&confusion(&p, &g, &permuted).unwrap()).unwrap();
        for (j, &c) in perm.iter().enumerate() {
            prop_assert_eq!(&b.per_class[j], &a.per_class[c]);
        }
        prop_assert!((a.macro_avg.f1 - b.macro_avg.f1).abs() <= 1e-12);
        prop_assert_eq!(a.accuracy, b.accuracy);
    }
}

#[test]
fn hand_worked_twenty_examples() {
    // gold A predicted A 8 times, A->B 2, B->A 1, B->B 9
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for (g, p, n) in [("A", "A", 8), ("A", "B", 2), ("B", "A", 1), ("B", "B", 9)] {
        for _ in 0..n {
            golds.push(g);
            preds.push(p);
        }
    }
    let m = confusion(&preds, &golds, &["A", "B"]).unwrap();
    assert_eq!(m.counts, vec![vec![8, 2], vec![1, 9]]);
    let rep = report(&m).unwrap();
    assert_eq!(rep.accuracy, 0.85);
    // P_A = 8/9, R_A = 0.8, P_B = 9/11, R_B = 0.9
    let f1a = 2.0 * (8.0 / 9.0) * 0.8 / (8.0 / 9.0 + 0.8);
    let f1b = 2.0 * (9.0 / 11.0) * 0.9 / (9.0 / 11.0 + 0.9);
    assert!((rep.macro_avg.f1 - (f1a + f1b) / 2.0).abs() < 1e-15);
    assert!((rep.macro_avg.f1 - 0.8496).abs() < 5e-5);
}

#[test]
fn degenerate_inputs() {
    assert_eq!(confusion(&["A"], &["A", "B"], &["A", "B"]), Err(EvalError::LengthMismatch { preds: 1, golds: 2 }));
    assert!(matches!(confusion(&["Z"], &["A"], &["A", "B"]), Err(EvalError::UnknownLabel(_))));
    let empty = ConfusionMatrix::from_counts(vec!["A".into()], vec![vec![0]]);
    assert_eq!(report(&empty), Err(EvalError::EmptyMatrix));
    let single = confusion(&["B"], &["B"], &["A", "B"]).unwrap();
    assert_eq!(single.counts, vec![vec![0, 0], vec![0, 1]]);
    let rep = report(&single).unwrap();
    // class A has no gold and no predicted instance: all zeros under the zero-division rule
    assert_eq!(rep.per_class[0].f1, 0.0);
    assert_eq!(rep.macro_avg.f1, 0.5);
}
