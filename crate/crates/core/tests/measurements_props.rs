use proptest::prelude::*;
use symrec::measurements::{generate, DistributionSpec, MeasurementSet, TeacherNetwork};
use symrec::symtensor::{random_rank_one_sum, random_symmetric, SymmetricTensor};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn same_seed_same_bits(d in 1usize..=4, ell in 1u32..=3, n in 0usize..40, seed in any::<u64>()) {
        let t = random_symmetric(d, ell, seed).unwrap();
        let dist = DistributionSpec::Laplace { loc: 0.0, scale: 1.0 };
        let a = generate(&t, &dist, n, seed).unwrap();
        let b = generate(&t, &dist, n, seed).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }

    #[test]
    fn csv_round_trip_is_exact(d in 1usize..=4, ell in 1u32..=3, n in 1usize..20, seed in any::<u64>()) {
        let t = random_symmetric(d, ell, seed).unwrap();
        let ms = generate(&t, &DistributionSpec::standard_normal(), n, seed).unwrap();
        let back = MeasurementSet::from_csv(&ms.to_csv()).unwrap();
        prop_assert_eq!(back.x, ms.x);
        prop_assert_eq!(back.y, ms.y);
    }

    #[test]
    fn teacher_labels_equal_tensor_labels(d in 1usize..=5, r in 1usize..=4, ell in 1u32..=4, seed in any::<u64>()) {
        let net = TeacherNetwork::random(d, r, seed).unwrap();
        let t = net.tensorize(ell).unwrap();
        let ms = generate(&t, &DistributionSpec::standard_normal(), 25, seed.wrapping_add(1)).unwrap();
        for (x, y) in ms.x.iter().zip(&ms.y) {
            let f = net.evaluate(x, ell);
            prop_assert!((f - y).abs() <= 1e-10 * f.abs().max(1.0), "{f} vs {y}");
        }
    }

    #[test]
    fn discrete_labels_are_bounded(d in 1usize..=5, r in 1usize..=3, ell in 1u32..=4, b in 1u32..=3, seed in any::<u64>()) {
        // Unit-norm components, so |Y| ≤ r (B√d)^ℓ max|λ|.
        let s = random_rank_one_sum(d, r, seed);
        let unit: Vec<(f64, Vec<f64>)> = s
            .as_pairs()
            .into_iter()
            .map(|(l, v)| {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                (l, v.into_iter().map(|x| x / n).collect())
            })
            .collect();
        let max_l = unit.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
        let t = SymmetricTensor::from_rank_one_sum(&symrec::RankOneSum::from_pairs(unit), ell).unwrap();
        let ms = generate(&t, &DistributionSpec::uniform_integers(b), 50, seed).unwrap();
        let cap = r as f64 * (b as f64 * (d as f64).sqrt()).powi(ell as i32) * max_l;
        for y in &ms.y {
            prop_assert!(y.abs() <= cap * (1.0 + 1e-12));
        }
    }
}
