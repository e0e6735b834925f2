//! Radial Fourier transform
//! `F(y) = int_0^inf Lambda_nu(y r) u(r) r^{N-1} dr`, `Lambda_nu(x) = x^{-nu} J_nu(x)`,
//! `nu = (N - 2)/2`, with the unitary normalization of the N-dimensional
//! transform. It is its own inverse.
//!
//! The profile's tail law `c r^e` is removed and transformed in closed form;
//! the remaining residual has compact support and is integrated numerically.

use crate::error::{Error, Result};
use crate::par;
use crate::quad::{self, Estimate};
use crate::radial::RadialProfile;
use crate::special::{bessel_lambda, gamma_unchecked, rgamma};

/// Default target accuracy, relative to the size of the integrand.
pub const DEFAULT_TOL: f64 = 1e-12;
// a point fails when its error estimate exceeds this multiple of the target
const FAIL_FACTOR: f64 = 1e4;

/// `int_0^inf Lambda_nu(y r) r^{e+N-1} dr = M(e) y^{-N-e}`, with
/// `M(e) = 2^{e+N/2} Gamma((N+e)/2) / Gamma(-e/2)`, continued to all `e`
/// except `e = -N - 2j`.
pub fn power_transform_coefficient(n: usize, e: f64) -> Result<f64> {
    let nf = n as f64;
    let a = 0.5 * (nf + e);
    if a <= 0.0 && a == a.floor() {
        return Err(Error::Domain(format!("power law r^{e} has no homogeneous transform in dimension {n}")));
    }
    Ok(2f64.powf(e + 0.5 * nf) * gamma_unchecked(a) * rgamma(-0.5 * e))
}

// Taylor coefficients lambda_k of Lambda_nu(x) = sum lambda_k x^{2k}
fn lambda_coef(nu: f64, k: usize) -> f64 {
    let mut c = 2f64.powf(-nu) * rgamma(nu + 1.0);
    for j in 1..=k {
        c *= -0.25 / (j as f64 * (nu + j as f64));
    }
    c
}

#[derive(Clone, Copy)]
enum Head {
    Power(f64, f64),
    Even(f64, f64),
}

/// A profile split into a closed-form power tail and a compact residual.
pub struct Prepared<'a> {
    profile: &'a RadialProfile,
    nu: f64,
    nf: f64,
    tail: Option<(f64, f64, f64)>,
    far: Option<(f64, f64)>,
    head: Head,
    residual: RadialProfile,
    support: f64,
    scale: f64,
    tol: f64,
}

impl<'a> Prepared<'a> {
    pub fn new(p: &'a RadialProfile, tol: f64) -> Result<Self> {
        let n = p.dim();
        let nf = n as f64;
        let r = p.r();
        let v = p.values();
        let last = r.len() - 1;
        // tails slower than r^{-N} are removed globally, faster ones are
        // added past r_max
        let (mut tail, mut far) = (None, None);
        if let Some(e) = p.decay_exponent() {
            let c = v[last] / p.r_max().powf(e);
            let m = power_transform_coefficient(n, e)?;
            if e > -nf {
                tail = Some((c, e, m));
            } else {
                far = Some((c, e));
            }
        }
        let head = match p.head_exponent() {
            Some(h) => Head::Power(v[0] / p.r_min().powf(h), h),
            None => {
                let (a, b) = p.even_head();
                Head::Even(a, b)
            }
        };
        let h = p.head_exponent().unwrap_or(0.0);
        let res: Vec<f64> = r
            .iter()
            .zip(v)
            .map(|(&x, &u)| match tail {
                Some((c, e, _)) => u - c * x.powf(e),
                None => u,
            })
            .collect();
        let mass = |i: usize| res[i].abs() * r[i].powf(nf);
        let peak = (0..=last).map(mass).fold(0.0f64, f64::max);
        // rounding noise of an exact power law is not a residual
        let significant = |i: usize| mass(i) > 1e-15 * peak && res[i].abs() > 1e-13 * v[i].abs();
        let support = match (0..=last).rev().find(|&i| significant(i)) {
            Some(i) if peak > 0.0 => r[(i + 2).min(last)],
            _ => r[0],
        };
        // size of the integrand, for absolute tolerances
        let dl = (r[last] / r[0]).ln() / last as f64;
        let lam0 = lambda_coef(0.5 * nf - 1.0, 0).abs();
        let scale = lam0 * v.iter().zip(r).map(|(u, x)| u.abs() * x.powf(nf)).sum::<f64>() * dl
            + lam0 * v[0].abs() * p.r_min().powf(nf) / (h + nf);
        let residual = RadialProfile::new(n, r.to_vec(), res)?;
        Ok(Prepared { profile: p, nu: 0.5 * nf - 1.0, nf, tail, far, head, residual, support, scale, tol })
    }

    /// Transform at a single frequency `y >= 0`.
    pub fn at(&self, y: f64) -> Result<Estimate> {
        let mut total = self.head_part(y) + self.middle_part(y) + self.far_part(y)?;
        if let Some((c, e, m)) = self.tail {
            if y == 0.0 {
                if -self.nf - e < 0.0 {
                    return Err(Error::Domain(format!("transform at 0 diverges for tail r^{e}")));
                }
            } else {
                total.value += c * m * y.powf(-self.nf - e);
            }
        }
        let gate = FAIL_FACTOR * self.tol * (self.scale + total.value.abs());
        if !total.value.is_finite() || total.error > gate {
            return Err(Error::Quadrature { estimate: total.error, tol: gate });
        }
        Ok(total)
    }

    // int_0^{r_min} of the head law minus the removed power tail
    fn head_part(&self, y: f64) -> Estimate {
        let a = self.profile.r_min();
        let head = self.head;
        let nu = self.nu;
        let nf = self.nf;
        let tail = self.tail;
        let g = |r: f64| {
            let mut v = match head {
                Head::Power(c, h) => c * r.powf(h + nf - 1.0),
                Head::Even(a, b) => (a + b * r * r) * r.powf(nf - 1.0),
            };
            if let Some((c, e, _)) = tail {
                v -= c * r.powf(e + nf - 1.0);
            }
            v * bessel_lambda(nu, y * r)
        };
        let tol = self.tol;
        if y * a <= 4.0 {
            quad::tanh_sinh(&|_x: f64, dl: f64, _dr: f64| g(dl), 0.0, a, tol)
        } else {
            let b = 2.0 / y;
            let first = quad::tanh_sinh(&|_x: f64, dl: f64, _dr: f64| g(dl), 0.0, b, tol);
            first + quad::adaptive(&g, &oscillation_breaks(b, a, y), tol * self.scale, tol, 20_000)
        }
    }

    // c int_{r_max}^inf Lambda(y r) r^{e+N-1} dr for e <= -N
    fn far_part(&self, y: f64) -> Result<Estimate> {
        let Some((c, e)) = self.far else { return Ok(Estimate::zero()) };
        let r0 = self.profile.r_max();
        let nu = self.nu;
        let mu = e + self.nf - 1.0;
        let x0 = y * r0;
        if x0 <= 4.0 {
            // M y^{-N-e} minus the finite part of int_0^{r_max}, as a power series
            let mut sum = 0.0;
            let mut k = 0;
            loop {
                let p = mu + 1.0 + 2.0 * k as f64;
                let term = lambda_coef(nu, k) * y.powi(2 * k as i32) * r0.powf(p) / p;
                sum += term;
                k += 1;
                if term.abs() <= 1e-17 * sum.abs() || k > 200 {
                    break;
                }
            }
            let hom = if y == 0.0 { 0.0 } else { power_transform_coefficient(self.profile.dim(), e)? * y.powf(-self.nf - e) };
            return Ok(Estimate { value: c * (hom - sum), error: 1e-15 * c.abs() * sum.abs() });
        }
        let f = |r: f64| bessel_lambda(nu, y * r) * r.powf(mu);
        let half = std::f64::consts::PI / y;
        let mut partial = Vec::with_capacity(24);
        let mut acc = 0.0;
        let mut err = 0.0;
        for j in 0..24 {
            let a = r0 + j as f64 * half;
            let piece = quad::integrate(&f, a, a + half, 0.0, 1e-13);
            acc += piece.value;
            err += piece.error;
            partial.push(acc);
        }
        let (value, extrap) = wynn_epsilon(&partial);
        Ok(Estimate { value: c * value, error: c.abs() * (extrap + err) })
    }

    fn middle_part(&self, y: f64) -> Estimate {
        let a = self.profile.r_min();
        if self.support <= a {
            return Estimate::zero();
        }
        let nu = self.nu;
        let nf = self.nf;
        let f = |r: f64| bessel_lambda(nu, y * r) * self.residual.eval(r) * r.powf(nf - 1.0);
        let breaks = oscillation_breaks(a, self.support, y);
        let max_panels = 4 * breaks.len() + 400;
        quad::adaptive(&f, &breaks, self.tol * self.scale, self.tol, max_panels)
    }
}

/// Wynn's epsilon acceleration of a sequence of partial sums; returns the
/// limit estimate and the change between the last two even columns.
pub fn wynn_epsilon(s: &[f64]) -> (f64, f64) {
    let n = s.len();
    let mut prev = vec![0.0; n + 1];
    let mut cur = s.to_vec();
    let mut best = s[n - 1];
    let mut err = f64::INFINITY;
    for k in 1..n {
        let mut next = vec![0.0; n - k];
        for j in 0..n - k {
            let d = cur[j + 1] - cur[j];
            if d == 0.0 {
                return (cur[j + 1], err.min((cur[j + 1] - best).abs()));
            }
            next[j] = prev[j + 1] + 1.0 / d;
        }
        if k % 2 == 0 {
            let est = next[n - k - 1];
            err = (est - best).abs();
            best = est;
        }
        prev = cur;
        cur = next;
    }
    (best, err)
}

// panels growing by 25% in r and never wider than 4 / y
fn oscillation_breaks(a: f64, b: f64, y: f64) -> Vec<f64> {
    let mut out = vec![a];
    let mut x = a;
    while x < b {
        let step = (0.25 * x).min(if y > 0.0 { 4.0 / y } else { f64::INFINITY });
        x = (x + step).min(b);
        if b - x < 1e-9 * b {
            x = b;
        }
        out.push(x);
    }
    out
}

/// Values of the transform at each `y`, with the default tolerance.
pub fn transform_values(p: &RadialProfile, y: &[f64], tol: f64) -> Result<Vec<f64>> {
    let prep = Prepared::new(p, tol)?;
    par::map_slice(y, |&yi| prep.at(yi).map(|e| e.value)).into_iter().collect()
}

// Highest frequency the samples resolve: one over the grid step at the
// radius where |u| r^N peaks. None when that mass sits in the tail.
fn resolution_limit(p: &RadialProfile) -> Option<f64> {
    let nf = p.dim() as f64;
    if p.decay_exponent().is_some_and(|e| e > -nf) {
        return None;
    }
    let r = p.r();
    let i = (0..r.len() - 1).max_by(|&a, &b| {
        let ma = p.values()[a].abs() * r[a].powf(nf);
        let mb = p.values()[b].abs() * r[b].powf(nf);
        ma.total_cmp(&mb)
    })?;
    Some(1.0 / (r[i + 1] - r[i]))
}

/// Transform onto the grid `y`, carrying end laws implied by the input's.
pub fn transform(p: &RadialProfile, y: &[f64], tol: f64) -> Result<RadialProfile> {
    let mut values = transform_values(p, y, tol)?;
    let nf = p.dim() as f64;
    let head = p.decay_exponent().filter(|&e| e < 0.0 && e > -nf).map(|e| -nf - e);
    let tail = p.head_exponent().filter(|&h| !(h >= 0.0 && (h / 2.0).fract() == 0.0)).map(|h| -nf - h);
    if tail.is_none() {
        // values below the quadrature floor carry no signal
        let floor = tol * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        values.iter_mut().filter(|v| v.abs() < floor).for_each(|v| *v = 0.0);
        if let Some(cut) = resolution_limit(p) {
            y.iter().zip(values.iter_mut()).filter(|(yi, _)| **yi > cut).for_each(|(_, v)| *v = 0.0);
        }
    }
    Ok(RadialProfile::new(p.dim(), y.to_vec(), values)?.with_laws(head, tail))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::log_grid;
    use approx::assert_relative_eq;

    #[test]
    fn wynn_sums_alternating_series() {
        // 1 - 1/2 + 1/3 - ... = ln 2
        let mut acc = 0.0;
        let partial: Vec<f64> = (1..=16)
            .map(|k| {
                acc += if k % 2 == 1 { 1.0 } else { -1.0 } / k as f64;
                acc
            })
            .collect();
        let (v, _) = wynn_epsilon(&partial);
        assert!((v - std::f64::consts::LN_2).abs() < 1e-11);
    }

    #[test]
    fn gaussian_is_self_reciprocal() {
        for n in 1..=3 {
            let g = log_grid(1e-3, 1e2, 1024);
            let p = RadialProfile::from_fn(n, &g, |r| (-0.5 * r * r).exp()).unwrap();
            let y = [0.0, 0.1, 1.0, 2.5, 5.0];
            let f = transform_values(&p, &y, DEFAULT_TOL).unwrap();
            for (yi, fi) in y.iter().zip(&f) {
                assert!((fi - (-0.5 * yi * yi).exp()).abs() < 1e-8, "N={n} y={yi}: {fi}");
            }
        }
    }

    #[test]
    fn power_law_exact() {
        // r^{-1} in R^3 transforms to sqrt(2/pi) y^{-2}
        let g = log_grid(1e-3, 1e3, 128);
        let p = RadialProfile::power_law(3, &g, 1.0, -1.0).unwrap();
        let f = transform_values(&p, &[0.1, 1.0, 7.0], DEFAULT_TOL).unwrap();
        for (y, v) in [0.1f64, 1.0, 7.0].iter().zip(&f) {
            assert_relative_eq!(*v, (2.0 / std::f64::consts::PI).sqrt() / (y * y), max_relative = 1e-9);
        }
    }

    #[test]
    fn fast_tail_below_minus_n() {
        // (1 + r^2)^{-2} in R^1 has transform sqrt(pi/2)(1 + y) e^{-y} / 2
        let g = log_grid(1e-4, 1e3, 1500);
        let p = RadialProfile::from_fn(1, &g, |r| (1.0 + r * r).powi(-2)).unwrap().with_decay(-4.0).unwrap();
        for &y in &[0.0, 0.5, 2.0, 6.0] {
            let v = Prepared::new(&p, DEFAULT_TOL).unwrap().at(y).unwrap().value;
            let want = (std::f64::consts::PI / 2.0).sqrt() * 0.5 * (1.0 + y) * (-y).exp();
            assert!((v - want).abs() < 1e-8, "y={y}: {v} vs {want}");
        }
    }
}
