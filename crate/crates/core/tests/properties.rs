use levy_bridge::feynman_kac::{path_fk_weight, Potential};
use levy_bridge::kernels::{cauchy_kernel, char_fn_cauchy, char_fn_step, truncation_gap};
use levy_bridge::numerics::RandomStream;
use levy_bridge::stepsim::{maximal_bound, sample_free_path};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn truncation_gap_is_bounded(eps in 1e-3f64..5.0, p in -20.0f64..20.0, t in 0.0f64..3.0) {
        let (gap, bound) = truncation_gap(eps, p, t);
        prop_assert!(gap >= -1e-15 && gap <= bound * (1.0 + 1e-12) + 1e-15);
        // |e^{-a} − e^{-b}| ≤ |a − b|
        let direct = (char_fn_step(eps, p, t).unwrap() - char_fn_cauchy(p, t).unwrap()).abs();
        prop_assert!(direct <= gap + 1e-15);
    }

    #[test]
    fn cauchy_kernel_is_symmetric_and_translation_invariant(
        y in -50.0f64..50.0, x in -50.0f64..50.0, s in 0.0f64..2.0, tau in 1e-3f64..5.0, shift in -10.0f64..10.0,
    ) {
        let k = cauchy_kernel(y, s, x, s + tau).unwrap();
        prop_assert_eq!(k, cauchy_kernel(x, s, y, s + tau).unwrap());
        let moved = cauchy_kernel(y + shift, 0.0, x + shift, tau).unwrap();
        prop_assert!((k - moved).abs() <= 1e-12 * k);
    }

    #[test]
    fn free_paths_are_valid_and_weights_split(
        eps in 0.05f64..2.0, x0 in -5.0f64..5.0, seed in any::<u64>(), cut in 0.01f64..0.99,
    ) {
        let p = sample_free_path(eps, x0, (0.0, 1.0), RandomStream::new(seed, 0)).unwrap();
        p.validate().unwrap();
        prop_assert_eq!(p.state_at(0.0), x0);
        let v = Potential::Box { a: -1.0, b: 2.0, height: 1.5 };
        let whole = path_fk_weight(&p, &v).unwrap();
        let split = path_fk_weight(&p.restrict(0.0, cut).unwrap(), &v).unwrap()
            * path_fk_weight(&p.restrict(cut, 1.0).unwrap(), &v).unwrap();
        prop_assert!((whole - split).abs() <= 1e-13 * whole);
        prop_assert!(whole >= (-1.5f64).exp() - 1e-15 && whole <= 1.0);
    }

    #[test]
    fn maximal_bound_decreases_in_n(n in 0.1f64..500.0, dn in 0.1f64..50.0, t in 0.1f64..5.0) {
        prop_assert!(maximal_bound(n + dn, t) < maximal_bound(n, t));
        prop_assert!(maximal_bound(n, t) <= 3.0);
    }
}
