//! The fractional Hardy inequality `gamma_0 int |x|^{-2s} u^2 <= int |z|^{2s} |u^|^2`
//! on radial test functions: Rayleigh quotients, best-constant estimates, the
//! positive-supersolution test, and the remainder in the improved inequality.
//!
//! Seminorms are computed in real space,
//! `int |z|^{2s} |u^|^2 = (C_{s,N} / 2) int int (u(x) - u(y))^2 |x - y|^{-N-2s}`,
//! which reduces for radial `u` to a double radial integral with a cached
//! angular kernel.

use crate::constants::{gamma0, kernel_constants, sphere_area};
use crate::error::{Error, Result};
use crate::fraclap::frac_lap_radial;
use crate::par;
use crate::quad;
use crate::radial::{log_grid, RadialProfile};
use crate::report::{Check, Report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

// tanh-sinh nodes on (0, 1): (x, 1 - x, weight)
fn unit_nodes(h: f64, tmax: f64) -> Vec<(f64, f64, f64)> {
    let k = (tmax / h).ceil() as i64;
    (-k..=k)
        .map(|i| {
            let t = i as f64 * h;
            let z = PI * t.sinh();
            let x = 1.0 / (1.0 + (-z).exp());
            let y = 1.0 / (1.0 + z.exp());
            let w = h * PI * t.cosh() * x * y;
            (x, y, w)
        })
        .filter(|n| n.0 > 0.0 && n.1 > 0.0 && n.2 > 0.0)
        .collect()
}

/// `|S^{N-1}| int_{S^{N-1}} |e - lam sigma|^{-N-beta} d sigma` for a unit `e`.
pub fn angular_kernel(n: usize, beta: f64, lam: f64, one_minus: f64) -> f64 {
    let nf = n as f64;
    let plus = 1.0 + lam;
    match n {
        1 => 2.0 * (one_minus.powf(-1.0 - beta) + plus.powf(-1.0 - beta)),
        3 => {
            let d = one_minus.powf(-1.0 - beta) - plus.powf(-1.0 - beta);
            if lam < 1e-4 {
                // series of the difference quotient near lam = 0
                16.0 * PI * PI * (1.0 + (2.0 + beta) * (3.0 + beta) * lam * lam / 6.0)
            } else {
                8.0 * PI * PI * d / (lam * (1.0 + beta))
            }
        }
        _ => {
            // |S^{N-1}| |S^{N-2}| int_0^pi (1 + lam^2 - 2 lam cos th)^{-k} sin^{N-2} th d th
            let k = 0.5 * (nf + beta);
            let f = |th: f64, dl: f64, _dr: f64| {
                let half = (0.5 * dl).sin();
                let base = one_minus * one_minus + 4.0 * lam * half * half;
                base.powf(-k) * th.sin().powf(nf - 2.0)
            };
            let v = quad::tanh_sinh(&f, 0.0, PI, 1e-11).value;
            sphere_area(n) * sphere_area(n - 1) * v
        }
    }
}

/// `int int_{D x D} |u(x) - u(y)|^q |x - y|^{-N-beta} dx dy` for radial `u`,
/// over `D = R^N` or a ball.
#[derive(Debug, Clone)]
pub struct GagliardoForm {
    n: usize,
    beta: f64,
    q: f64,
    // (lam, weight * lam^{N-1} * kernel)
    nodes: Vec<(f64, f64)>,
}

impl GagliardoForm {
    pub fn new(n: usize, beta: f64, q: f64) -> Result<Self> {
        if n == 0 || !(beta > 0.0) || !(q >= 1.0) {
            return Err(Error::Domain(format!("Gagliardo form needs N >= 1, beta > 0, q >= 1 (N = {n}, beta = {beta}, q = {q})")));
        }
        let nf = n as f64;
        let nodes = unit_nodes(1.0 / 24.0, 3.2)
            .into_iter()
            .map(|(lam, om, w)| (lam, w * lam.powf(nf - 1.0) * angular_kernel(n, beta, lam, om)))
            .collect();
        Ok(GagliardoForm { n, beta, q, nodes })
    }

    // int_0^1 lam^{N-1} K(lam) |u(r) - u(r lam)|^q d lam
    fn inner(&self, u: &RadialProfile, r: f64) -> f64 {
        let ur = u.eval(r);
        self.nodes.iter().map(|(lam, w)| w * (ur - u.eval(r * lam)).abs().powf(self.q)).sum()
    }

    fn outer(&self, u: &RadialProfile, breaks: &[f64]) -> f64 {
        let nf = self.n as f64;
        let f = |r: f64| r.powf(nf - 1.0 - self.beta) * self.inner(u, r);
        quad::adaptive(&f, breaks, 0.0, 1e-9, 40 * breaks.len()).value
    }

    /// Double integral over `R^N x R^N`. `u` must vanish beyond its grid.
    pub fn full_space(&self, u: &RadialProfile) -> Result<f64> {
        self.check(u)?;
        if u.decay_exponent().is_some() {
            return Err(Error::Invalid("full-space Gagliardo form needs a compactly supported profile".into()));
        }
        let nf = self.n as f64;
        let (r0, r1) = (u.r_min(), u.r_max());
        let far = 100.0 * r1;
        let mut breaks = u.r().to_vec();
        breaks.extend(log_grid(r1, far, 41).into_iter().skip(1));
        let body = self.outer(u, &breaks);
        // beyond `far` only pairs with one point in the support remain and
        // the kernel is |x|^{-N-beta}
        let mass = quad::adaptive(&|r: f64| r.powf(nf - 1.0) * u.eval(r).abs().powf(self.q), u.r(), 0.0, 1e-10, 20 * u.len())
            .value
            + quad::tanh_sinh(&|_x: f64, dl: f64, _dr: f64| dl.powf(nf - 1.0) * u.eval(dl).abs().powf(self.q), 0.0, r0, 1e-10)
                .value;
        let k0 = sphere_area(self.n).powi(2);
        let tail = k0 * far.powf(-self.beta) / self.beta * mass;
        Ok(2.0 * (body + tail))
    }

    /// Double integral over `B_R x B_R`.
    pub fn ball(&self, u: &RadialProfile, radius: f64) -> Result<f64> {
        self.check(u)?;
        let mut breaks: Vec<f64> = u.r().iter().copied().filter(|&r| r < radius).collect();
        breaks.push(radius);
        Ok(2.0 * self.outer(u, &breaks))
    }

    fn check(&self, u: &RadialProfile) -> Result<()> {
        if u.dim() != self.n {
            return Err(Error::Invalid(format!("profile lives in dimension {}, form in {}", u.dim(), self.n)));
        }
        Ok(())
    }
}

/// `int |z|^{2s} |u^(z)|^2 dz` through the Gagliardo representation.
pub fn seminorm_squared(u: &RadialProfile, s: f64) -> Result<f64> {
    let c = kernel_constants(u.dim(), s)?.c_sn;
    Ok(0.5 * c * GagliardoForm::new(u.dim(), 2.0 * s, 2.0)?.full_space(u)?)
}

/// `int |x|^{-2s} u^2 dx`.
pub fn hardy_term(u: &RadialProfile, s: f64) -> Result<f64> {
    if !(2.0 * s < u.dim() as f64) {
        return Err(Error::Domain(format!("|x|^(-2s) is not integrable for N = {} and s = {s}", u.dim())));
    }
    Ok(u.weighted_l2(-2.0 * s))
}

/// `seminorm^2 / int |x|^{-2s} u^2`.
pub fn rayleigh_quotient(u: &RadialProfile, s: f64) -> Result<f64> {
    let den = hardy_term(u, s)?;
    if !(den > 0.0) {
        return Err(Error::ZeroDenominator("Hardy term of the trial function vanishes".into()));
    }
    Ok(seminorm_squared(u, s)? / den)
}

/// A radial test function supported in the closed unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Trial {
    /// `(r^2 + eps^2)^{-(N-2s)/4}` times a smooth cutoff equal to 1 on
    /// `r <= 1/2`; a smoothed truncation of `theta_0`.
    Cap { eps: f64 },
    /// `exp(1 - 1 / (1 - (r/c)^2))` on `r < c`.
    Bump { radius: f64 },
    /// `exp(1 - 1 / (1 - ((r - m)/w)^2))` on `|r - m| < w`.
    Ring { center: f64, width: f64 },
}

fn smooth_step(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// 1 on `r <= 1/2`, 0 on `r >= 1`, smooth in between.
pub fn cutoff(r: f64) -> f64 {
    let a = smooth_step(1.0 - r);
    let b = smooth_step(r - 0.5);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl Trial {
    pub fn value(&self, n: usize, s: f64, r: f64) -> f64 {
        match *self {
            Trial::Cap { eps } => {
                let e = 0.25 * (n as f64 - 2.0 * s);
                (r * r + eps * eps).powf(-e) * cutoff(r)
            }
            Trial::Bump { radius } => {
                let x = r / radius;
                if x < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
            Trial::Ring { center, width } => {
                let x = (r - center) / width;
                if x.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - x * x)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    // smallest length scale of the member
    fn scale(&self) -> f64 {
        match *self {
            Trial::Cap { eps } => eps,
            Trial::Bump { radius } => radius,
            Trial::Ring { center, width } => width.min(center),
        }
    }
}

/// A deterministic list of trial functions with a common sampling rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialFamily {
    pub n: usize,
    pub s: f64,
    pub members: Vec<Trial>,
    /// Grid nodes per decade of radius.
    pub nodes_per_decade: usize,
}

impl TrialFamily {
    pub fn new(n: usize, s: f64, members: Vec<Trial>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Invalid("trial family is empty".into()));
        }
        for m in &members {
            let ok = match *m {
                Trial::Cap { eps } => eps > 0.0 && eps < 1.0,
                Trial::Bump { radius } => radius > 0.0 && radius <= 1.0,
                Trial::Ring { center, width } => width > 0.0 && center - width >= 0.0 && center + width <= 1.0,
            };
            if !ok {
                return Err(Error::Invalid(format!("trial {m:?} is not supported in the unit ball")));
            }
        }
        Ok(TrialFamily { n, s, members, nodes_per_decade: 60 })
    }

    /// Caps at the given widths.
    pub fn caps(n: usize, s: f64, eps: &[f64]) -> Result<Self> {
        Self::new(n, s, eps.iter().map(|&eps| Trial::Cap { eps }).collect())
    }

    /// `size` members: caps with widths `10^{-1}` down to `10^{-10}` and bumps
    /// and rings with seeded random parameters.
    pub fn desk(n: usize, s: f64, size: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let caps = (size / 2).max(1);
        let mut members: Vec<Trial> =
            (0..caps).map(|i| Trial::Cap { eps: 10f64.powf(-1.0 - 9.0 * i as f64 / (caps.max(2) - 1) as f64) }).collect();
        while members.len() < size {
            if members.len().is_multiple_of(2) {
                members.push(Trial::Bump { radius: rng.gen_range(0.3..1.0) });
            } else {
                let center = rng.gen_range(0.3..0.7);
                let width = rng.gen_range(0.1..0.3f64).min(center).min(1.0 - center);
                members.push(Trial::Ring { center, width });
            }
        }
        Self::new(n, s, members)
    }

    pub fn with_density(mut self, nodes_per_decade: usize) -> Self {
        self.nodes_per_decade = nodes_per_decade.max(8);
        self
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }
    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Member `i` sampled on a log grid from `1e-3` times its smallest
    /// scale out to the unit sphere.
    pub fn profile(&self, i: usize) -> Result<RadialProfile> {
        let m = self.members[i];
        let lo = 1e-3 * m.scale().min(1e-1);
        let nodes = ((1.0 / lo).log10() * self.nodes_per_decade as f64).ceil() as usize + 1;
        RadialProfile::from_fn(self.n, &log_grid(lo, 1.0, nodes), |r| m.value(self.n, self.s, r))
    }

    pub fn profiles(&self) -> Result<Vec<RadialProfile>> {
        (0..self.len()).map(|i| self.profile(i)).collect()
    }
}

/// Quotients of every member, in family order.
pub fn quotients(fam: &TrialFamily) -> Result<Vec<f64>> {
    let profiles = fam.profiles()?;
    par::map_slice(&profiles, |u| rayleigh_quotient(u, fam.s)).into_iter().collect()
}

/// Smallest Rayleigh quotient over the family.
pub fn best_constant_estimate(fam: &TrialFamily) -> Result<f64> {
    Ok(quotients(fam)?.into_iter().fold(f64::INFINITY, f64::min))
}

/// Relative tolerance for the supersolution and form checks.
pub const AP_TOL: f64 = 1e-2;

/// Positive-supersolution test: verify `(-Delta)^s u_pos >= b u_pos` at the
/// interior nodes `r in [10 r_min, r_max / 10]`, then check
/// `seminorm^2(phi) - int b phi^2 >= -AP_TOL seminorm^2(phi)` for every trial.
pub fn ap_form_check(u_pos: &RadialProfile, b: &RadialProfile, s: f64, fam: &TrialFamily) -> Result<Report> {
    if u_pos.values().iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Invalid("supersolution candidate must be positive at every node".into()));
    }
    let mut report = Report::new("ap_form_check");
    let lap = frac_lap_radial(u_pos, s)?;
    let (lo, hi) = (10.0 * u_pos.r_min(), u_pos.r_max() / 10.0);
    let mut worst = f64::INFINITY;
    for ((r, l), u) in u_pos.r().iter().zip(lap.values()).zip(u_pos.values()) {
        if *r < lo || *r > hi {
            continue;
        }
        let bu = b.eval(*r) * u;
        let rel = (l - bu) / l.abs().max(bu.abs()).max(f64::MIN_POSITIVE);
        worst = worst.min(rel);
    }
    report.push(Check::at_least("supersolution: min relative ((-Delta)^s u - b u)", worst, 0.0, 1e-3));
    let profiles = fam.profiles()?;
    let margins = par::map_slice(&profiles, |phi| -> Result<(f64, f64)> {
        let semi = seminorm_squared(phi, s)?;
        let nf = phi.dim() as f64;
        let f = |r: f64| {
            let v = phi.eval(r);
            b.eval(r) * v * v * r.powf(nf - 1.0)
        };
        let body = quad::adaptive(&f, phi.r(), 0.0, 1e-11, 20 * phi.len()).value;
        let head = quad::tanh_sinh(&|_x: f64, dl: f64, _dr: f64| f(dl), 0.0, phi.r_min(), 1e-11).value;
        Ok((semi, semi - sphere_area(phi.dim()) * (body + head)))
    });
    for (i, m) in margins.into_iter().enumerate() {
        let (semi, margin) = m?;
        report.push(Check::at_least(format!("form margin / seminorm^2, trial {i}"), margin / semi, 0.0, AP_TOL));
    }
    Ok(report)
}

/// Below this `E_0(u)` a trial is treated as extremal and gets no ratio.
pub const EXTREMAL_FLOOR: f64 = 1e-10;

/// Pieces of the improved-inequality ratio for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Remainder {
    /// `seminorm^2 - gamma_0 int |x|^{-2s} u^2`.
    pub e0: f64,
    /// `||u||_{W^{tau,q}(B)}^2`.
    pub norm2: f64,
    /// `e0 / norm2`, absent for extremal trials.
    pub ratio: Option<f64>,
}

/// `E_0(u) / ||u||^2_{W^{tau,q}(B)}` with `tau = (1+2s)/2 - 1/q`, where
/// `||u||^q = int_B |u|^q + int_B int_B |u(x) - u(y)|^q |x - y|^{-N-q tau}`.
pub fn remainder_ratio(u: &RadialProfile, s: f64, q: f64) -> Result<Remainder> {
    let n = u.dim();
    if !(q < 2.0 && q > 1.0f64.max(2.0 / (1.0 + 2.0 * s))) {
        return Err(Error::Domain(format!("q = {q} must satisfy max(1, 2/(1+2s)) < q < 2")));
    }
    if u.r_max() > 1.0 + 1e-12 {
        return Err(Error::Invalid("remainder ratio needs a profile supported in the unit ball".into()));
    }
    let tau = 0.5 * (1.0 + 2.0 * s) - 1.0 / q;
    let double = GagliardoForm::new(n, q * tau, q)?.ball(u, 1.0)?;
    let nf = n as f64;
    let lq = sphere_area(n)
        * quad::adaptive(&|r: f64| r.powf(nf - 1.0) * u.eval(r).abs().powf(q), u.r(), 0.0, 1e-11, 20 * u.len()).value;
    let norm = lq + double;
    if !(norm > 0.0) {
        return Err(Error::ZeroDenominator("W^{tau,q} norm of the trial vanishes".into()));
    }
    let norm2 = norm.powf(2.0 / q);
    let e0 = seminorm_squared(u, s)? - gamma0(n, s) * hardy_term(u, s)?;
    let ratio = (e0 >= EXTREMAL_FLOOR).then_some(e0 / norm2);
    Ok(Remainder { e0, norm2, ratio })
}

/// Quotients and remainder ratios over a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyReport {
    pub n: usize,
    pub s: f64,
    pub gamma0: f64,
    pub quotients: Vec<f64>,
    pub infimum: f64,
    pub q: Option<f64>,
    pub tau: Option<f64>,
    pub remainders: Vec<Remainder>,
}

impl HardyReport {
    /// Quotients only.
    pub fn quotients(fam: &TrialFamily) -> Result<Self> {
        let quotients = quotients(fam)?;
        let infimum = quotients.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(HardyReport { n: fam.n, s: fam.s, gamma0: gamma0(fam.n, fam.s), quotients, infimum, q: None, tau: None, remainders: Vec::new() })
    }

    /// Quotients and remainder ratios at exponent `q`.
    pub fn with_remainders(fam: &TrialFamily, q: f64) -> Result<Self> {
        let mut rep = Self::quotients(fam)?;
        let profiles = fam.profiles()?;
        rep.remainders = par::map_slice(&profiles, |u| remainder_ratio(u, fam.s, q)).into_iter().collect::<Result<_>>()?;
        rep.q = Some(q);
        rep.tau = Some(0.5 * (1.0 + 2.0 * fam.s) - 1.0 / q);
        Ok(rep)
    }

    /// Smallest remainder ratio among non-extremal trials.
    pub fn ratio_infimum(&self) -> Option<f64> {
        self.remainders.iter().filter_map(|r| r.ratio).reduce(f64::min)
    }
}
