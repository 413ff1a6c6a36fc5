use proptest::prelude::*;
use symrec::measurements::{generate, DistributionSpec};
use symrec::recovery::{design_matrix, erm_solve, null_space_witness, polarization_decompose, rank_min_als, AlsOptions};
use symrec::orthopoly::{moments_of, second_moment_exact};
use symrec::symtensor::{random_symmetric, sym_dim, SymmetricTensor};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn design_matrix_reproduces_labels(d in 1usize..=4, ell in 1u32..=3, n in 1usize..30, seed in any::<u64>()) {
        let tstar = random_symmetric(d, ell, seed).unwrap();
        let ms = generate(&tstar, &DistributionSpec::standard_normal(), n, seed).unwrap();
        let m = design_matrix(&ms).unwrap();
        let t = random_symmetric(d, ell, seed ^ 1).unwrap();
        let got = m.apply(&t).unwrap();
        for (x, g) in ms.x.iter().zip(got) {
            let want = t.apply(x).unwrap();
            prop_assert!((g - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn erm_round_trip_above_threshold(d in 1usize..=4, ell in 1u32..=3, extra in 0usize..5, seed in any::<u64>()) {
        let tstar = random_symmetric(d, ell, seed).unwrap();
        let n = sym_dim(d, ell).unwrap() as usize + extra;
        let ms = generate(&tstar, &DistributionSpec::Uniform { low: -1.0, high: 1.0 }, n, seed).unwrap();
        let est = erm_solve(&ms).unwrap().estimate.materialize().unwrap();
        let err = est.sub(&tstar).unwrap().frobenius_norm() / tstar.frobenius_norm();
        prop_assert!(err <= 1e-8, "relative error {err}");
    }

    #[test]
    fn witness_below_threshold(d in 2usize..=4, ell in 2u32..=3, short in 1usize..4, seed in any::<u64>()) {
        let tstar = random_symmetric(d, ell, seed).unwrap();
        let n = sym_dim(d, ell).unwrap() as usize - short;
        let dist = DistributionSpec::standard_normal();
        let ms = generate(&tstar, &dist, n, seed).unwrap();
        let w = null_space_witness(&ms).unwrap().expect("witness exists below sym_dim");
        for x in &ms.x {
            prop_assert!(w.apply(x).unwrap().abs() <= 1e-9);
        }
        let m = moments_of(&dist, 2 * ell as usize).unwrap();
        prop_assert!(second_moment_exact(&w, &m).unwrap() > 0.0);
    }

    #[test]
    fn polarization_reconstructs(d in 1usize..=3, ell in 1u32..=3, seed in any::<u64>()) {
        let t = random_symmetric(d, ell, seed).unwrap();
        let s = polarization_decompose(&t);
        prop_assert!(s.len() as u64 <= (1u64 << ell) * sym_dim(d, ell).unwrap());
        let back = SymmetricTensor::from_rank_one_sum_in(&s, d, ell).unwrap();
        prop_assert!(back.sub(&t).unwrap().max_abs() <= 1e-10 * t.max_abs().max(1.0));
    }
}

#[test]
fn als_is_scaling_equivariant() {
    let tstar = SymmetricTensor::from_rank_one_sum(&symrec::symtensor::random_rank_one_sum(3, 1, 5), 3).unwrap();
    let ms = generate(&tstar, &DistributionSpec::standard_normal(), 30, 6).unwrap();
    let opts = AlsOptions {
        restarts: 3,
        seed: 9,
        ..Default::default()
    };
    let base = rank_min_als(&ms, 1, &opts).unwrap().estimate.materialize().unwrap();
    for c in [-1.0, 2.0] {
        let scaled = rank_min_als(&ms.scaled_labels(c), 1, &opts).unwrap().estimate.materialize().unwrap();
        let diff = scaled.sub(&base.scaled(c)).unwrap().max_abs();
        assert!(diff <= 1e-9 * base.max_abs().max(1.0) * c.abs(), "c={c}: {diff}");
    }
}
