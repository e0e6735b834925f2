//! Gamma and Bessel functions of real argument.
//!
//! Everything here is double precision and tuned for the orders that occur
//! in radial transforms (`nu = (N - 2) / 2`) and in the Poisson-kernel
//! multiplier (`K_s`, `0 < s < 1`).

use crate::error::{Error, Result};
use std::f64::consts::PI;

fn is_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Gamma function. Poles at the non-positive integers are reported as errors.
pub fn gamma(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::Domain("gamma of NaN".to_string()));
    }
    if is_pole(x) {
        return Err(Error::Pole(x));
    }
    Ok(gamma_unchecked(x))
}

/// Gamma without the pole check; returns `inf` at poles.
pub(crate) fn gamma_unchecked(x: f64) -> f64 {
    if is_pole(x) {
        return f64::INFINITY;
    }
    if x == x.floor() && x <= 23.0 {
        return (2..x as u64).map(|k| k as f64).product();
    }
    statrs::function::gamma::gamma(x)
}

/// `ln |Gamma(x)|` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Reciprocal Gamma, entire: zero at the poles of Gamma.
pub fn rgamma(x: f64) -> f64 {
    if is_pole(x) {
        0.0
    } else {
        1.0 / gamma_unchecked(x)
    }
}

/// Bessel function of the first kind `J_nu(x)` for `nu > -1`, `x >= 0`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    assert!(nu > -1.0, "bessel_j: order must exceed -1");
    assert!(x >= 0.0, "bessel_j: argument must be non-negative");
    if x == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    let frac = nu - nu.floor();
    if (frac - 0.5).abs() < 1e-15 && x > nu + 1.0 {
        return spherical_half_order(nu, x);
    }
    if x < 8.0 {
        return x.powf(nu) * lambda_series(nu, x);
    }
    if x >= 25.0 + nu * nu {
        return hankel_asymptotic(nu, x);
    }
    miller(nu, x)
}

/// Regularized kernel `x^{-nu} J_nu(x)`, finite at zero with value
/// `2^{-nu} / Gamma(nu + 1)`. This is the kernel of the radial Fourier
/// transform in dimension `N = 2 nu + 2`.
pub fn bessel_lambda(nu: f64, x: f64) -> f64 {
    if x < 8.0 {
        lambda_series(nu, x)
    } else {
        bessel_j(nu, x) * x.powf(-nu)
    }
}

fn lambda_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 2f64.powf(-nu) * rgamma(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn spherical_half_order(nu: f64, x: f64) -> f64 {
    let pref = (2.0 / (PI * x)).sqrt();
    let mut jm = pref * x.cos(); // J_{-1/2}
    if nu < 0.0 {
        return jm;
    }
    let mut j = pref * x.sin(); // J_{1/2}
    let mut order = 0.5;
    while order + 0.5 < nu + 1e-12 {
        let next = 2.0 * order / x * j - jm;
        jm = j;
        j = next;
        order += 1.0;
    }
    j
}

fn hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let chi = x - (0.5 * nu + 0.25) * PI;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * x);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn miller(nu: f64, x: f64) -> f64 {
    let n0 = nu.floor().max(0.0) as usize;
    let f = nu - n0 as f64;
    let top = n0 + x as usize + 60;
    let mut j = vec![0.0f64; top + 2];
    j[top] = 1e-300;
    for m in (1..=top).rev() {
        let order = f + m as f64;
        j[m - 1] = 2.0 * order / x * j[m] - j[m + 1];
        if j[m - 1].abs() > 1e250 {
            for v in j[m - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    // sum_{k>=0} (f+2k) Gamma(f+k)/k! J_{f+2k} = (x/2)^f
    let mut sum = gamma_unchecked(f + 1.0) * j[0];
    let mut g = gamma_unchecked(f + 1.0); // Gamma(f+k)/k! at k = 1
    let mut k = 1;
    while 2 * k <= top {
        let kf = k as f64;
        sum += (f + 2.0 * kf) * g * j[2 * k];
        g *= (f + kf) / (kf + 1.0);
        k += 1;
    }
    j[n0] * (0.5 * x).powf(f) / sum
}

/// Modified Bessel function of the second kind `K_nu(x)`, `x > 0`, from the
/// integral `int_0^inf exp(-x cosh u) cosh(nu u) du` with the trapezoid rule.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    assert!(x > 0.0);
    bessel_k_scaled(nu, x) * (-x).exp()
}

/// `exp(x) K_nu(x)`.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    let h = (0.1f64).min(0.25 / x.sqrt());
    let u_max = (1.0 + 745.0 / x).acosh();
    let mut sum = 0.5;
    let mut k = 1;
    loop {
        let u = k as f64 * h;
        if u > u_max {
            break;
        }
        let term = (-x * (u.cosh() - 1.0)).exp() * (nu * u).cosh();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
        k += 1;
    }
    sum * h
}

/// Fourier symbol of the Poisson kernel of `div(t^{1-2s} grad w) = 0`:
/// `phi(z) = 2^{1-s} / Gamma(s) z^s K_s(z)`, with `phi(0) = 1`.
pub fn poisson_symbol(s: f64, z: f64) -> f64 {
    if z <= 0.0 {
        return 1.0;
    }
    if z > 740.0 {
        return 0.0;
    }
    2f64.powf(1.0 - s) * rgamma(s) * z.powf(s) * bessel_k(s, z)
}
