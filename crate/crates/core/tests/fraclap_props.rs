use frachardy::constants::m_alpha;
use frachardy::fit::power_fit;
use frachardy::fraclap::{frac_lap_radial_at, frac_lap_singular, ground_state, hankel_forward};
use frachardy::radial::{default_grid, log_grid, RadialProfile};
use proptest::prelude::*;

fn gaussian(n: usize, lambda: f64) -> RadialProfile {
    RadialProfile::from_fn(n, &default_grid(), |r| (-0.5 * (lambda * r).powi(2)).exp()).unwrap()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn scaling_covariance(n in 1usize..=3, s in 0.1f64..0.9, lambda in 0.5f64..2.0) {
        let pts = [0.0, 0.3, 0.8, 1.5, 2.5];
        let scaled: Vec<f64> = pts.iter().map(|p| lambda * p).collect();
        let lhs = frac_lap_radial_at(&gaussian(n, lambda), s, &pts).unwrap();
        let rhs = frac_lap_radial_at(&gaussian(n, 1.0), s, &scaled).unwrap();
        let k = lambda.powf(2.0 * s);
        let scale = sup(&lhs);
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - k * b).abs() < 1e-6 * scale, "{:e}", (a - k * b).abs() / scale);
        }
    }

    #[test]
    fn linearity(n in 1usize..=3, s in 0.1f64..0.9, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let g = log_grid(1e-3, 1e2, 512);
        let u = RadialProfile::from_fn(n, &g, |r| (-0.5 * r * r).exp()).unwrap();
        let v = RadialProfile::from_fn(n, &g, |r| (-r * r).exp() * (1.0 + r * r)).unwrap();
        let pts = [0.0, 0.4, 1.0, 2.0];
        let w = u.combine(a, &v, b).unwrap();
        let lw = frac_lap_radial_at(&w, s, &pts).unwrap();
        let lu = frac_lap_radial_at(&u, s, &pts).unwrap();
        let lv = frac_lap_radial_at(&v, s, &pts).unwrap();
        let scale = sup(&lu).max(sup(&lv)) * (a.abs() + b.abs());
        for i in 0..pts.len() {
            prop_assert!((lw[i] - a * lu[i] - b * lv[i]).abs() <= 1e-7 * scale, "{:e}", (lw[i] - a * lu[i] - b * lv[i]).abs() / scale);
        }
    }

    #[test]
    fn ground_state_symbol_exponent(alpha in 0.0f64..0.9) {
        let (n, s) = (3, 0.5);
        let g = log_grid(1e-3, 1e3, 256);
        let th = ground_state(n, s, alpha, &g).unwrap();
        let rho: Vec<f64> = (0..=20).map(|k| 0.1 * 100f64.powf(k as f64 / 20.0)).collect();
        let f = hankel_forward(&th, &rho).unwrap();
        let fit = power_fit(&rho, f.values()).unwrap();
        prop_assert!((fit.exponent + 1.5 + s + alpha).abs() < 1e-3, "{:?}", fit);
        let m = m_alpha(n, s, alpha).unwrap();
        prop_assert!((fit.prefactor / m - 1.0).abs() < 1e-3);
    }
}

#[test]
fn bump_maximum_is_positive() {
    let bump = |x: &[f64]| {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        if r2 < 1.0 { (-1.0 / (1.0 - r2)).exp() } else { 0.0 }
    };
    for n in 1..=3 {
        let x = vec![0.0; n];
        let v = frac_lap_singular(&bump, &x, 0.5).unwrap();
        assert!(v.value > 0.0);
    }
}
