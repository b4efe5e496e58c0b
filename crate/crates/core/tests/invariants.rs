use proptest::prelude::*;
use supertr::curve::raw_forms;
use supertr::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn engines_agree_on_random_curves(seed in 100u64..10_000, odd in any::<bool>()) {
        let eps = if odd { 3 } else { 1 };
        let c = random_curve(seed, eps, 20).unwrap();
        let a = run_airy(&c, 5).unwrap();
        let b = run_tr(&c, 5).unwrap();
        prop_assert_eq!(a.first_difference(&b), None);
    }

    #[test]
    fn entries_respect_parity_and_bound(seed in 100u64..10_000) {
        let c = random_curve(seed, 3, 20).unwrap();
        let t = run_airy(&c, 5).unwrap();
        for (k, _) in t.entries() {
            prop_assert!(k.bos.iter().all(|i| i % 2 == 1));
            prop_assert!(k.fer.iter().all(|j| j % 2 == 0));
            prop_assert!(k.fer.windows(2).all(|w| w[0] < w[1]));
            let sum: u32 = k.bos.iter().chain(&k.fer).sum();
            prop_assert!(sum <= store::index_bound(3, k.chi()));
        }
    }

    #[test]
    fn fit_inverts_build(seed in 0u64..10_000, odd in any::<bool>()) {
        let c = random_curve(seed, if odd { 3 } else { 1 }, 10).unwrap();
        let deg = 2 * c.trunc as i64 + 2;
        let raw = raw_forms(&c, deg);
        let back = fit_parameters(&raw, c.epsilon, &c.name, c.trunc, c.ring.clone()).unwrap();
        prop_assert_eq!(&back, &c);
    }
}
