use adclust_core::dataset::default_feature_names;
use adclust_core::kernel::{weight, KernelClassifier, KernelOptions};
use adclust_core::{Dataset, Label};
use approx::assert_relative_eq;
use proptest::prelude::*;

fn flip(l: Label) -> Label {
    match l {
        Label::Normal => Label::Abnormal,
        Label::Abnormal => Label::Normal,
        Label::Unlabeled => Label::Unlabeled,
    }
}

#[test]
fn five_label_hand_instance() {
    let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 1.0], vec![2.0, 2.0]];
    let labels = vec![Label::Normal, Label::Normal, Label::Abnormal, Label::Abnormal, Label::Normal];
    let d = Dataset::new(rows.clone(), labels, default_feature_names(2)).unwrap();
    let c = KernelClassifier::fit(&d, Some(1.5)).unwrap();
    let x = [1.0, 1.0];
    let k: Vec<f64> = rows
        .iter()
        .map(|r| (-((r[0] - x[0]).powi(2) + (r[1] - x[1]).powi(2)) / (2.0 * 1.5 * 1.5)).exp())
        .collect();
    let want = (k[0] + k[1] + k[4]) / k.iter().sum::<f64>();
    assert_relative_eq!(c.score(&x).value, want, max_relative = 1e-12);

    let balanced = KernelClassifier::fit_with(
        &d,
        &KernelOptions {
            bandwidth: Some(1.5),
            bandwidth_scale: 1.0,
            balanced: true,
        },
    )
    .unwrap();
    let (pos, neg) = ((k[0] + k[1] + k[4]) / 3.0, (k[2] + k[3]) / 2.0);
    assert_relative_eq!(balanced.score(&x).value, pos / (pos + neg), max_relative = 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn label_flip_antisymmetry(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 4..20),
        probe in prop::collection::vec(-3.0f64..3.0, 2),
        balanced in any::<bool>(),
    ) {
        let n = rows.len();
        let labels: Vec<Label> = (0..n).map(|i| match i % 3 { 0 => Label::Normal, 1 => Label::Abnormal, _ => Label::Unlabeled }).collect();
        let d = Dataset::new(rows.clone(), labels.clone(), default_feature_names(2)).unwrap();
        let f = Dataset::new(rows, labels.into_iter().map(flip).collect(), default_feature_names(2)).unwrap();
        let opts = KernelOptions { bandwidth: None, bandwidth_scale: 0.5, balanced };
        let a = KernelClassifier::fit_with(&d, &opts).unwrap().score(&probe);
        let b = KernelClassifier::fit_with(&f, &opts).unwrap().score(&probe);
        if !a.underflow {
            prop_assert!((a.value + b.value - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn weight_monotone(b1 in 0.0f64..1.0, b2 in 0.0f64..1.0, k in 0.1f64..100.0) {
        if b1 < b2 {
            prop_assert!(weight(b1, k) < weight(b2, k));
        }
        prop_assert!(weight(b1, k).abs() <= k);
        if b1 > 0.5 {
            prop_assert!(weight(b1, k * 2.0) > weight(b1, k));
        }
    }
}
