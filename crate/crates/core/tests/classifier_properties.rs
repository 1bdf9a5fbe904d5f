use elliptica::classifier::{theorem1_conditions, theorem3_conditions};
use elliptica::{classify, DecayProfile, SystemConfig};
use proptest::prelude::*;

/// Values on a quarter lattice so that equality cases come up often.
fn lattice(lo: i32, hi: i32) -> impl Strategy<Value = f64> {
    (lo * 4..=hi * 4).prop_map(|k| f64::from(k) / 4.0)
}

fn coupled() -> impl Strategy<Value = (f64, f64)> {
    (lattice(1, 4), lattice(1, 4)).prop_filter("alpha * beta > 1", |(a, b)| a * b > 1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4000))]

    #[test]
    fn never_both_existence_and_nonexistence(
        (a, b) in coupled(),
        l in lattice(-4, 6), m in lattice(-4, 6), n in lattice(-4, 6), x in lattice(-4, 6),
    ) {
        let cfg = SystemConfig::new(3, a, b).unwrap();
        let prof = DecayProfile::exponents(l, n, m, x);
        let t1 = theorem1_conditions(&cfg, &prof, false).unwrap();
        let t3 = theorem3_conditions(&cfg, &prof).unwrap();
        prop_assert!(!(t1.iter().any(|&f| f) && t3.iter().any(|&f| f)), "{t1:?} {t3:?}");
    }

    #[test]
    fn never_both_off_lattice(
        (a, b) in (1.0f64..4.0, 1.0f64..4.0).prop_filter("coupled", |(a, b)| a * b > 1.0),
        l in -4.0f64..6.0, m in -4.0f64..6.0, n in -4.0f64..6.0, x in -4.0f64..6.0,
    ) {
        let cfg = SystemConfig::new(3, a, b).unwrap();
        let prof = DecayProfile::exponents(l, n, m, x);
        let t1 = theorem1_conditions(&cfg, &prof, false).unwrap();
        let t3 = theorem3_conditions(&cfg, &prof).unwrap();
        prop_assert!(!(t1.iter().any(|&f| f) && t3.iter().any(|&f| f)));
    }

    #[test]
    fn swapping_roles_permutes_conditions(
        (a, b) in coupled(),
        l in lattice(-4, 6), m in lattice(-4, 6), n in lattice(-4, 6), x in lattice(-4, 6),
    ) {
        let t1 = theorem1_conditions(&SystemConfig::new(3, a, b).unwrap(), &DecayProfile::exponents(l, n, m, x), false).unwrap();
        let t3 = theorem3_conditions(&SystemConfig::new(3, a, b).unwrap(), &DecayProfile::exponents(l, n, m, x)).unwrap();
        let cfg_s = SystemConfig::new(3, b, a).unwrap();
        let prof_s = DecayProfile::exponents(m, x, l, n);
        let s1 = theorem1_conditions(&cfg_s, &prof_s, false).unwrap();
        let s3 = theorem3_conditions(&cfg_s, &prof_s).unwrap();
        prop_assert_eq!(s1, [t1[1], t1[0], t1[3], t1[2], t1[5], t1[4]]);
        prop_assert_eq!(s3, [t3[0], t3[2], t3[1], t3[3]]);
    }

    #[test]
    fn doubly_critical_implications(
        (a, b) in coupled(),
        n in lattice(-4, 6), x in lattice(-4, 6),
    ) {
        let cfg = SystemConfig::new(3, a, b).unwrap();
        let t1 = theorem1_conditions(&cfg, &DecayProfile::exponents(2.0, n, 2.0, x), false).unwrap();
        let (v, vi) = (t1[4], t1[5]);
        if n >= 1.0 && x < 1.0 {
            prop_assert!(!v || vi);
        }
        if n < 1.0 && x >= 1.0 {
            prop_assert!(!vi || v);
        }
        if n < 1.0 && x < 1.0 {
            prop_assert!(v && vi);
        }
    }

    #[test]
    fn classification_is_deterministic(
        (a, b) in coupled(),
        l in lattice(-4, 6), m in lattice(-4, 6), n in lattice(-4, 6), x in lattice(-4, 6),
        symmetric in any::<bool>(),
    ) {
        let cfg = SystemConfig::new(3, a, b).unwrap();
        let prof = DecayProfile::exponents(l, n, m, x);
        prop_assert_eq!(classify(&cfg, &prof, symmetric).unwrap(), classify(&cfg, &prof, symmetric).unwrap());
    }
}
