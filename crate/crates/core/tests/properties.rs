//! Property tests for the structural invariants: transform round trips,
//! Parseval, semigroup contraction, norm axioms, and ratio invariances.

use hpl_core::cube::{
    expectation, heat_semigroup, inverse_walsh, mean_square_norm, spectral_square_norm,
    walsh_transform, CubeFunction, CubePoint,
};
use hpl_core::norms::{rademacher_moment, type_ratio, MomentQuery, NormSpec};
use proptest::prelude::*;

fn cube_function_strategy(
    max_n: usize,
    max_d: usize,
) -> impl Strategy<Value = CubeFunction> {
    (1..=max_n, 1..=max_d).prop_flat_map(|(n, d)| {
        prop::collection::vec(-1.0f64..1.0, (1usize << n) * d)
            .prop_map(move |values| CubeFunction::from_values(n, d, values).unwrap())
    })
}

fn norm_strategy(d: usize) -> impl Strategy<Value = NormSpec> {
    prop_oneof![
        Just(NormSpec::lp(1.0, d).unwrap()),
        Just(NormSpec::euclidean(d).unwrap()),
        Just(NormSpec::linf(d).unwrap()),
        (1.0f64..4.0).prop_map(move |p| NormSpec::lp(p, d).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn walsh_round_trip_is_identity(f in cube_function_strategy(8, 3)) {
        let back = inverse_walsh(&walsh_transform(&f));
        prop_assert!(f.max_abs_diff(&back) < 1e-12);
    }

    #[test]
    fn parseval_holds(f in cube_function_strategy(8, 3)) {
        let spec = walsh_transform(&f);
        let lhs = mean_square_norm(&f);
        let rhs = spectral_square_norm(&spec);
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs));
    }

    #[test]
    fn heat_semigroup_is_a_contraction(
        f in cube_function_strategy(6, 3),
        t in 0.0f64..5.0,
        norm_pick in 0usize..3,
    ) {
        // The kernel weights are a probability distribution, so the largest
        // point norm cannot grow, whichever norm measures it.
        let norm = match norm_pick {
            0 => NormSpec::lp(1.0, f.d()).unwrap(),
            1 => NormSpec::euclidean(f.d()).unwrap(),
            _ => NormSpec::linf(f.d()).unwrap(),
        };
        let flowed = heat_semigroup(&f, t).unwrap();
        let max_before = (0..f.len())
            .map(|x| norm.norm(f.value(CubePoint(x))).unwrap())
            .fold(0.0f64, f64::max);
        let max_after = (0..f.len())
            .map(|x| norm.norm(flowed.value(CubePoint(x))).unwrap())
            .fold(0.0f64, f64::max);
        prop_assert!(max_after <= max_before + 1e-12 * (1.0 + max_before));
    }

    #[test]
    fn semigroup_flows_toward_the_mean(f in cube_function_strategy(6, 2), t in 0.1f64..3.0) {
        let mean = expectation(&f);
        let flat = CubeFunction::constant(f.n(), &mean).unwrap();
        let before = f.max_abs_diff(&flat);
        let after = heat_semigroup(&f, t).unwrap().max_abs_diff(&flat);
        prop_assert!(after <= before + 1e-12);
    }

    #[test]
    fn norm_axioms(
        u in prop::collection::vec(-5.0f64..5.0, 4),
        v in prop::collection::vec(-5.0f64..5.0, 4),
        c in -4.0f64..4.0,
        norm in norm_strategy(4),
    ) {
        let nu = norm.norm(&u).unwrap();
        let nv = norm.norm(&v).unwrap();
        let sum: Vec<f64> = u.iter().zip(v.iter()).map(|(a, b)| a + b).collect();
        prop_assert!(norm.norm(&sum).unwrap() <= nu + nv + 1e-12 * (1.0 + nu + nv));
        let scaled: Vec<f64> = u.iter().map(|a| c * a).collect();
        let ns = norm.norm(&scaled).unwrap();
        prop_assert!((ns - c.abs() * nu).abs() < 1e-12 * (1.0 + ns));
    }

    #[test]
    fn moment_is_sign_and_permutation_invariant(
        vecs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..6),
        p in 1.0f64..3.0,
        swap in any::<(prop::sample::Index, prop::sample::Index)>(),
        flip in any::<prop::sample::Index>(),
    ) {
        let norm = NormSpec::lp(1.5, 2).unwrap();
        let base = rademacher_moment(&MomentQuery {
            p_moment: p,
            vectors: vecs.clone(),
            norm,
        }).unwrap().value;
        let mut mutated = vecs.clone();
        let (i, j) = (swap.0.index(mutated.len()), swap.1.index(mutated.len()));
        mutated.swap(i, j);
        let k = flip.index(mutated.len());
        mutated[k].iter_mut().for_each(|x| *x = -*x);
        let other = rademacher_moment(&MomentQuery {
            p_moment: p,
            vectors: mutated,
            norm,
        }).unwrap().value;
        prop_assert!((base - other).abs() < 1e-11 * (1.0 + base));
    }

    #[test]
    fn type_ratio_is_scale_invariant(
        vecs in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 1..5),
        p in 1.0f64..2.0,
        c in prop_oneof![0.01f64..10.0, -10.0f64..-0.01],
    ) {
        let norm = NormSpec::linf(2).unwrap();
        let nonzero = vecs.iter().any(|v| v.iter().any(|x| x.abs() > 1e-9));
        prop_assume!(nonzero);
        let base = type_ratio(&vecs, p, &norm).unwrap();
        let scaled: Vec<Vec<f64>> =
            vecs.iter().map(|v| v.iter().map(|x| c * x).collect()).collect();
        let other = type_ratio(&scaled, p, &norm).unwrap();
        prop_assert!((base - other).abs() < 1e-10 * (1.0 + base));
    }
}
