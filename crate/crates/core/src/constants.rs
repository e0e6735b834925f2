//! Problem parameters and the closed-form constants attached to them:
//! the Hardy constants `gamma_alpha`, the Fourier factors `m_alpha`, the
//! extension constant `kappa_s`, and the two kernel normalizations.

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{gamma_unchecked, rgamma};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Problem parameters `(N, s, alpha, p, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub n: usize,
    pub s: f64,
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
}

impl Params {
    /// Dimension and order; `alpha = 0`, `p = 2`, `q = 1.5`.
    pub fn new(n: usize, s: f64) -> Result<Self> {
        let p = Params { n, s, alpha: 0.0, p: 2.0, q: 1.5 };
        p.validate()?;
        Ok(p)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        self.alpha = alpha;
        self.validate()?;
        Ok(self)
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        self.p = p;
        self.validate()?;
        Ok(self)
    }

    pub fn with_q(mut self, q: f64) -> Result<Self> {
        self.q = q;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Invalid("dimension N must be at least 1".into()));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::Invalid(format!("s = {} is outside (0, 1)", self.s)));
        }
        if !(self.p > 1.0) {
            return Err(Error::Invalid(format!("p = {} must exceed 1", self.p)));
        }
        if !(self.q > 1.0 && self.q < 2.0) {
            return Err(Error::Invalid(format!("q = {} is outside (1, 2)", self.q)));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Invalid(format!("alpha = {} must be non-negative", self.alpha)));
        }
        if self.hardy_admissible() && self.alpha > self.alpha_max() + 1e-14 {
            return Err(Error::Invalid(format!(
                "alpha = {} exceeds (N - 2s)/2 = {}",
                self.alpha,
                self.alpha_max()
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    fn hardy_admissible(&self) -> bool {
        self.dim() > 2.0 * self.s
    }

    /// Errors unless `N > 2s`.
    pub fn require_hardy(&self) -> Result<()> {
        if self.hardy_admissible() {
            Ok(())
        } else {
            Err(Error::Domain(format!("Hardy potential needs N > 2s (N = {}, s = {})", self.n, self.s)))
        }
    }

    /// Weight exponent `a = 1 - 2s` of the extension problem.
    pub fn a(&self) -> f64 {
        1.0 - 2.0 * self.s
    }

    /// Gagliardo order `tau = (1 + 2s)/2 - 1/q` of the remainder norm.
    pub fn tau(&self) -> f64 {
        0.5 * (1.0 + 2.0 * self.s) - 1.0 / self.q
    }

    /// Upper end `(N - 2s)/2` of the alpha range.
    pub fn alpha_max(&self) -> f64 {
        0.5 * (self.dim() - 2.0 * self.s)
    }

    /// Critical exponent `(N + 2s - 2 alpha)/(N - 2s - 2 alpha)`; infinite at the top of the range.
    pub fn p_crit(&self) -> f64 {
        let den = self.dim() - 2.0 * self.s - 2.0 * self.alpha;
        if den <= 0.0 {
            f64::INFINITY
        } else {
            (self.dim() + 2.0 * self.s - 2.0 * self.alpha) / den
        }
    }

    /// `(N + 2s)/(N - 2s)`, the lower end of the explicit-solution window.
    pub fn p_sobolev(&self) -> f64 {
        (self.dim() + 2.0 * self.s) / (self.dim() - 2.0 * self.s)
    }

    pub fn gamma0(&self) -> f64 {
        gamma0(self.n, self.s)
    }

    pub fn gamma_alpha(&self) -> Result<f64> {
        gamma_alpha(self.n, self.s, self.alpha)
    }

    pub fn constants(&self) -> Result<PaperConstants> {
        PaperConstants::compute(self)
    }
}

/// All constants attached to a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaperConstants {
    pub gamma0: f64,
    pub gamma_alpha: f64,
    pub m_alpha: f64,
    pub kappa_s: f64,
    pub c_sn: f64,
    pub p_ns: f64,
}

impl PaperConstants {
    pub fn compute(params: &Params) -> Result<Self> {
        params.require_hardy()?;
        let k = kernel_constants(params.n, params.s)?;
        Ok(PaperConstants {
            gamma0: gamma0(params.n, params.s),
            gamma_alpha: gamma_alpha(params.n, params.s, params.alpha)?,
            m_alpha: m_alpha(params.n, params.s, params.alpha)?,
            kappa_s: kappa_s(params.s),
            c_sn: k.c_sn,
            p_ns: k.p_ns,
        })
    }
}

/// Surface area of the unit sphere `S^{N-1}` (2 for `N = 1`).
pub fn sphere_area(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    2.0 * PI.powf(h) * rgamma(h)
}

/// Optimal constant of the fractional Hardy inequality,
/// `2^{2s} Gamma((N+2s)/4)^2 / Gamma((N-2s)/4)^2`.
pub fn gamma0(n: usize, s: f64) -> f64 {
    let nf = n as f64;
    let num = gamma_unchecked((nf + 2.0 * s) / 4.0);
    let den = rgamma((nf - 2.0 * s) / 4.0);
    4f64.powf(s) * (num * den).powi(2)
}

/// `gamma_alpha` for `0 <= alpha <= (N - 2s)/2`; zero at the upper end.
pub fn gamma_alpha(n: usize, s: f64, alpha: f64) -> Result<f64> {
    let nf = n as f64;
    let top = 0.5 * (nf - 2.0 * s);
    if !(nf > 2.0 * s) {
        return Err(Error::Domain(format!("gamma_alpha needs N > 2s (N = {n}, s = {s})")));
    }
    if alpha < 0.0 || alpha > top + 1e-14 || alpha.is_nan() {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0, {top}]")));
    }
    if alpha >= top {
        return Ok(0.0);
    }
    let a = gamma_unchecked((nf + 2.0 * s + 2.0 * alpha) / 4.0);
    let b = gamma_unchecked((nf + 2.0 * s - 2.0 * alpha) / 4.0);
    let c = rgamma((nf - 2.0 * s - 2.0 * alpha) / 4.0);
    let d = rgamma((nf - 2.0 * s + 2.0 * alpha) / 4.0);
    Ok(4f64.powf(s) * a * b * c * d)
}

/// Fourier factor `m_alpha = 2^{s+alpha} Gamma((N+2s+2alpha)/4) / Gamma((N-2s-2alpha)/4)`
/// of the homogeneous function `|x|^{(2s-N)/2 + alpha}`. Valid for
/// `-N/2 - s < alpha <= (N - 2s)/2`.
pub fn m_alpha(n: usize, s: f64, alpha: f64) -> Result<f64> {
    let nf = n as f64;
    let lo = -0.5 * nf - s;
    let hi = 0.5 * (nf - 2.0 * s);
    if !(alpha > lo && alpha <= hi + 1e-14) {
        return Err(Error::Domain(format!("m_alpha: alpha = {alpha} outside ({lo}, {hi}]")));
    }
    let num = gamma_unchecked((nf + 2.0 * s + 2.0 * alpha) / 4.0);
    Ok(2f64.powf(s + alpha) * num * rgamma((nf - 2.0 * s - 2.0 * alpha) / 4.0))
}

/// Extension constant `kappa_s = Gamma(1-s) / (2^{2s-1} Gamma(s))`.
pub fn kappa_s(s: f64) -> f64 {
    gamma_unchecked(1.0 - s) / gamma_unchecked(s) / 2f64.powf(2.0 * s - 1.0)
}

/// Calibrated kernel normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelConstants {
    /// `C_{s,N}` of the principal-value integral.
    pub c_sn: f64,
    /// `p_{N,s}` of the Poisson kernel `p t^{2s} (|x|^2 + t^2)^{-(N+2s)/2}`.
    pub p_ns: f64,
}

const CALIBRATION_TOL: f64 = 1e-11;

/// Compute `C_{s,N}` and `p_{N,s}` by calibration.
///
/// `p_{N,s}` normalizes the Poisson kernel to unit mass. `C_{s,N}` makes the
/// principal-value integral of `exp(-|x|^2/2)` at the origin equal the
/// Fourier-multiplier value `(2 pi)^{-N/2} int |z|^{2s} exp(-|z|^2/2) dz`.
/// Both sides are independent radial quadratures.
pub fn kernel_constants(n: usize, s: f64) -> Result<KernelConstants> {
    if !(s > 0.0 && s < 1.0) || n == 0 {
        return Err(Error::Domain(format!("kernel constants need N >= 1 and s in (0,1), got N = {n}, s = {s}")));
    }
    let nf = n as f64;
    let area = sphere_area(n);

    // int_0^inf r^{N-1} (1 + r^2)^{-(N+2s)/2} dr with r = tan(theta)
    let mass = quad::tanh_sinh(
        &|th: f64, _dl: f64, dr: f64| th.sin().powf(nf - 1.0) * dr.sin().powf(2.0 * s - 1.0),
        0.0,
        0.5 * PI,
        1e-14,
    );
    check_calibration("Poisson mass", mass)?;
    let p_ns = 1.0 / (area * mass.value);

    // spectral side at the origin
    let spectral = semi_infinite(&|r: f64| r.powf(2.0 * s + nf - 1.0) * (-0.5 * r * r).exp())?;
    let spectral = (2.0 * PI).powf(-0.5 * nf) * area * spectral;

    // singular side: int_0^inf (1 - exp(-r^2/2)) r^{-1-2s} dr
    let raw = semi_infinite(&|r: f64| -(-0.5 * r * r).exp_m1() * r.powf(-1.0 - 2.0 * s))?;
    let raw = area * raw;
    if !(raw > 0.0) {
        return Err(Error::Calibration("non-positive singular-integral calibration".into()));
    }
    Ok(KernelConstants { c_sn: spectral / raw, p_ns })
}

fn check_calibration(what: &str, e: quad::Estimate) -> Result<()> {
    if !e.value.is_finite() || e.error > CALIBRATION_TOL * e.value.abs() {
        return Err(Error::Calibration(format!("{what}: quadrature error {:.3e} on {:.6e}", e.error, e.value)));
    }
    Ok(())
}

// int_0^inf via [0,1] plus x = 1/u on [1, inf)
fn semi_infinite(f: &dyn Fn(f64) -> f64) -> Result<f64> {
    let head = quad::tanh_sinh(&|x: f64, dl: f64, _dr: f64| f(dl.max(x)), 0.0, 1.0, 1e-14);
    let tail = quad::tanh_sinh(&|u: f64, dl: f64, _dr: f64| {
        let u = dl.max(u);
        f(1.0 / u) / (u * u)
    }, 0.0, 1.0, 1e-14);
    check_calibration("head", head)?;
    check_calibration("tail", tail)?;
    Ok(head.value + tail.value)
}
