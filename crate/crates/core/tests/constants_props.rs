use frachardy::constants::{gamma0, gamma_alpha, kappa_s, m_alpha};
use proptest::prelude::*;

proptest! {
    #[test]
    fn gamma_alpha_decreases(n in 1usize..6, s in 0.05f64..0.95, u in 0.0f64..0.98, du in 0.005f64..0.02) {
        prop_assume!(n as f64 > 2.0 * s);
        let top = 0.5 * (n as f64 - 2.0 * s);
        let a = u * top;
        let b = ((u + du) * top).min(top);
        let ga = gamma_alpha(n, s, a).unwrap();
        let gb = gamma_alpha(n, s, b).unwrap();
        prop_assert!(gb < ga, "gamma({b}) = {gb} >= gamma({a}) = {ga}");
        prop_assert!(ga <= gamma0(n, s) * (1.0 + 1e-13));
        prop_assert!(gb >= 0.0);
    }

    #[test]
    fn gamma_alpha_factorizes(n in 1usize..6, s in 0.05f64..0.95, u in 0.0f64..1.0) {
        prop_assume!(n as f64 > 2.0 * s);
        let alpha = u * 0.5 * (n as f64 - 2.0 * s);
        let g = gamma_alpha(n, s, alpha).unwrap();
        let m = m_alpha(n, s, alpha).unwrap() * m_alpha(n, s, -alpha).unwrap();
        prop_assert!((g - m).abs() <= 1e-12 * g.abs().max(1e-300) + 1e-300);
    }

    #[test]
    fn kappa_positive_and_increasing(s in 0.02f64..0.97) {
        prop_assert!(kappa_s(s) > 0.0);
        prop_assert!(kappa_s(s + 0.01) > kappa_s(s));
    }
}
