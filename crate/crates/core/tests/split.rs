use forge_core::datasets::{class_weights, stratified_split, DatasetError, Histogram};
use forge_core::ClassLabel;
use proptest::prelude::*;

fn labels_strategy() -> impl Strategy<Value = Vec<ClassLabel>> {
    (10usize..80, 10usize..80, 10usize..80).prop_perturb(|(a, b, c), mut rng| {
        let mut v: Vec<ClassLabel> = [(ClassLabel::Hateful, a), (ClassLabel::Offensive, b), (ClassLabel::Neither, c)]
            .into_iter()
            .flat_map(|(l, n)| std::iter::repeat_n(l, n))
            .collect();
        // interleave so indices are not grouped by class
        for i in (1..v.len()).rev() {
            v.swap(i, rng.random_range(0..=i));
        }
        v
    })
}

fn ratios_strategy() -> impl Strategy<Value = [f64; 3]> {
    // nonzero parts stay large enough for the smallest class
    (0.5f64..0.75, prop::option::of(0.11f64..0.14)).prop_map(|(train, val)| {
        let val = val.unwrap_or(0.0);
        [train, val, 1.0 - train - val]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn split_is_a_partition(labels in labels_strategy(), ratios in ratios_strategy(), seed in any::<u64>()) {
        let plan = stratified_split(&labels, ratios, seed).unwrap();
        let mut all: Vec<usize> = plan.parts().iter().flat_map(|p| p.iter().copied()).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
    }

    #[test]
    fn per_class_counts_follow_the_ratios(labels in labels_strategy(), ratios in ratios_strategy(), seed in any::<u64>()) {
        let plan = stratified_split(&labels, ratios, seed).unwrap();
        let whole = Histogram::of(&labels);
        for (part, r) in plan.parts().iter().zip(ratios) {
            let h = Histogram::of(part.iter().map(|&i| &labels[i]));
            for l in ClassLabel::ALL {
                let expected = whole.count(l) as f64 * r;
                prop_assert!((h.count(l) as f64 - expected).abs() <= 1.0, "{l}: {} vs {expected}", h.count(l));
            }
        }
    }

    #[test]
    fn split_is_deterministic(labels in labels_strategy(), seed in any::<u64>()) {
        let a = stratified_split(&labels, [0.8, 0.1, 0.1], seed).unwrap();
        let b = stratified_split(&labels, [0.8, 0.1, 0.1], seed).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn bad_ratios_are_rejected() {
    let labels = vec![ClassLabel::Hateful; 10];
    for r in [[0.5, 0.5, 0.5], [1.2, -0.1, -0.1], [f64::NAN, 0.5, 0.5]] {
        assert!(matches!(stratified_split(&labels, r, 0), Err(DatasetError::InvalidRatios(_))));
    }
}

#[test]
fn tiny_classes_cannot_fill_every_split() {
    let mut labels = vec![ClassLabel::Offensive; 50];
    labels.push(ClassLabel::Hateful);
    labels.extend(vec![ClassLabel::Neither; 20]);
    assert!(matches!(stratified_split(&labels, [0.8, 0.1, 0.1], 0), Err(DatasetError::ClassTooSmall { .. })));
}

#[test]
fn class_weights_are_inverse_frequency() {
    let w = class_weights(Histogram([10, 60, 30])).unwrap();
    let want = [100.0 / 30.0, 100.0 / 180.0, 100.0 / 90.0];
    for (a, b) in w.0.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
    // the weighted class totals are equal
    let totals: Vec<f64> = [10.0, 60.0, 30.0].iter().zip(w.0).map(|(n, w)| n * w).collect();
    assert!(totals.windows(2).all(|t| (t[0] - t[1]).abs() < 1e-9));
    assert!(matches!(class_weights(Histogram([0, 5, 5])), Err(DatasetError::EmptyClass(ClassLabel::Hateful))));
}
