//! The fractional Laplacian `(-Delta)^s` by three independent routes: the
//! radial Fourier transform, the periodic FFT multiplier `|zeta|^{2s}`, and
//! the principal-value singular integral.

use crate::constants::{kernel_constants, sphere_area};
use crate::error::{Error, Result};
use crate::hankel::{self, DEFAULT_TOL};
use crate::par;
use crate::quad::{self, Estimate};
use crate::radial::{reciprocal, RadialProfile, SpectralProfile};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;

fn check_order(s: f64) -> Result<()> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("order s = {s} outside (0, 1)")))
    }
}

/// Ground state `theta_alpha(r) = r^{(2s-N)/2 + alpha}` on the grid `r`.
pub fn ground_state(n: usize, s: f64, alpha: f64, r: &[f64]) -> Result<RadialProfile> {
    RadialProfile::power_law(n, r, 1.0, 0.5 * (2.0 * s - n as f64) + alpha)
}

/// Radial Fourier transform of `u` at the frequencies `rho`.
pub fn hankel_forward(u: &RadialProfile, rho: &[f64]) -> Result<SpectralProfile> {
    Ok(SpectralProfile::new(hankel::transform(u, rho, DEFAULT_TOL)?))
}

/// Inverse radial Fourier transform onto the radii `r`.
pub fn hankel_inverse(f: &SpectralProfile, r: &[f64]) -> Result<RadialProfile> {
    hankel::transform(f.profile(), r, DEFAULT_TOL)
}

/// `rho^{2s}` times the transform of `u`, on the grid reciprocal to `u`'s.
pub fn symbol_times_transform(u: &RadialProfile, s: f64) -> Result<SpectralProfile> {
    check_order(s)?;
    hankel_forward(u, &reciprocal(u.r()))?.times_power(2.0 * s)
}

/// `(-Delta)^s u` on the grid of `u`.
pub fn frac_lap_radial(u: &RadialProfile, s: f64) -> Result<RadialProfile> {
    hankel_inverse(&symbol_times_transform(u, s)?, u.r())
}

/// `(-Delta)^s u` at arbitrary radii, including `r = 0`.
pub fn frac_lap_radial_at(u: &RadialProfile, s: f64, points: &[f64]) -> Result<Vec<f64>> {
    let g = symbol_times_transform(u, s)?;
    hankel::transform_values(g.profile(), points, DEFAULT_TOL)
}

/// Samples on the periodic box `[-L/2, L/2)^N`, `N <= 3`, with `n` points
/// per axis (a power of two), stored row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridField {
    dim: usize,
    extent: f64,
    samples: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn new(dim: usize, extent: f64, samples: usize, values: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Invalid(format!("grid dimension {dim} not in 1..=3")));
        }
        if !samples.is_power_of_two() || samples < 2 {
            return Err(Error::Invalid(format!("samples per axis {samples} is not a power of two")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::Invalid(format!("box extent {extent} must be positive")));
        }
        if values.len() != samples.pow(dim as u32) {
            return Err(Error::Invalid("value count does not match the grid".into()));
        }
        Ok(GridField { dim, extent, samples, values })
    }

    pub fn from_fn(dim: usize, extent: f64, samples: usize, f: impl Fn(&[f64]) -> f64 + Sync + Send) -> Result<Self> {
        let total = samples.pow(dim as u32);
        let h = extent / samples as f64;
        let values = par::map_range(total, |flat| {
            let mut x = [0.0; 3];
            let mut rem = flat;
            for d in (0..dim).rev() {
                x[d] = -0.5 * extent + h * (rem % samples) as f64;
                rem /= samples;
            }
            f(&x[..dim])
        });
        Self::new(dim, extent, samples, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn extent(&self) -> f64 {
        self.extent
    }
    pub fn samples(&self) -> usize {
        self.samples
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn spacing(&self) -> f64 {
        self.extent / self.samples as f64
    }

    /// Value at a point lying on the grid.
    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        if x.len() != self.dim {
            return None;
        }
        let h = self.spacing();
        let mut flat = 0;
        for &xi in x {
            let j = (xi + 0.5 * self.extent) / h;
            let jr = j.round();
            if (j - jr).abs() > 1e-9 || jr < 0.0 || jr >= self.samples as f64 {
                return None;
            }
            flat = flat * self.samples + jr as usize;
        }
        Some(self.values[flat])
    }

    /// CSV with columns `x0[,x1[,x2]],value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        let mut wtr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (0..self.dim).map(|d| format!("x{d}")).collect();
        header.push("value".into());
        wtr.write_record(&header).map_err(io)?;
        let h = self.spacing();
        for (flat, v) in self.values.iter().enumerate() {
            let mut rec = vec![String::new(); self.dim + 1];
            let mut rem = flat;
            for d in (0..self.dim).rev() {
                rec[d] = format!("{:.17e}", -0.5 * self.extent + h * (rem % self.samples) as f64);
                rem /= self.samples;
            }
            rec[self.dim] = format!("{v:.17e}");
            wtr.write_record(&rec).map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))
    }
}

// N-dimensional FFT: transform the last axis, then rotate it to the front
pub(crate) fn fft_nd(mut buf: Vec<Complex64>, dim: usize, n: usize, inverse: bool) -> Vec<Complex64> {
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let outer = buf.len() / n;
    for _ in 0..dim {
        let lines = (4096 / n).max(1) * n;
        par::for_each_chunk_mut(&mut buf, lines, |c| fft.process(c));
        let old = buf;
        buf = par::map_range(old.len(), |flat| {
            let b = flat / outer;
            let a = flat % outer;
            old[a * n + b]
        });
    }
    buf
}

/// Signed angular frequency of FFT index `k` on a box of side `extent`.
pub(crate) fn frequency(k: usize, n: usize, extent: f64) -> f64 {
    let k = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * k / extent
}

/// Apply a radial Fourier multiplier `m(|zeta|)` to a periodic field.
pub fn apply_multiplier(f: &GridField, m: impl Fn(f64) -> f64 + Sync + Send) -> GridField {
    let n = f.samples;
    let dim = f.dim;
    let buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut spec = fft_nd(buf, dim, n, false);
    let total = spec.len();
    let norm = 1.0 / total as f64;
    let factors = par::map_range(total, |flat| {
        let mut rem = flat;
        let mut z2 = 0.0;
        for _ in 0..dim {
            let w = frequency(rem % n, n, f.extent);
            z2 += w * w;
            rem /= n;
        }
        m(z2.sqrt()) * norm
    });
    spec.iter_mut().zip(&factors).for_each(|(c, k)| *c *= k);
    let back = fft_nd(spec, dim, n, true);
    GridField { dim, extent: f.extent, samples: n, values: back.iter().map(|c| c.re).collect() }
}

/// `(-Delta)^s f` by the discrete multiplier `|zeta|^{2s}`, zero on the mean.
pub fn frac_lap_fft(f: &GridField, s: f64) -> Result<GridField> {
    check_order(s)?;
    Ok(apply_multiplier(f, |z| if z == 0.0 { 0.0 } else { z.powf(2.0 * s) }))
}

/// Settings of the principal-value backend.
#[derive(Debug, Clone, Copy)]
pub struct SingularOptions {
    /// Radius of the Taylor-regularized core.
    pub delta: f64,
    /// Radius beyond which only the `f(x)` term is kept.
    pub cutoff: f64,
    /// Angular nodes per direction.
    pub angular: usize,
    /// Relative tolerance of the radial quadrature.
    pub tol: f64,
}

impl Default for SingularOptions {
    fn default() -> Self {
        SingularOptions { delta: 0.02, cutoff: 1e3, angular: 48, tol: 1e-9 }
    }
}

/// Principal-value evaluator `C_{s,N} P.V. int (f(x) - f(y)) |x - y|^{-N-2s} dy`.
pub struct SingularIntegral {
    dim: usize,
    s: f64,
    c_sn: f64,
    opts: SingularOptions,
}

impl SingularIntegral {
    pub fn new(dim: usize, s: f64, opts: SingularOptions) -> Result<Self> {
        check_order(s)?;
        if !(1..=3).contains(&dim) {
            return Err(Error::Invalid(format!("singular backend supports N <= 3, got {dim}")));
        }
        let c_sn = kernel_constants(dim, s)?.c_sn;
        Ok(SingularIntegral { dim, s, c_sn, opts })
    }

    // unit directions covering half the sphere, weights summing to |S^{N-1}| / 2
    fn directions(&self, x: &[f64]) -> Vec<([f64; 3], f64)> {
        let m = self.opts.angular;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut e0 = [0.0; 3];
        if norm > 0.0 {
            for (d, v) in x.iter().enumerate() {
                e0[d] = v / norm;
            }
        } else {
            e0[0] = 1.0;
        }
        match self.dim {
            1 => vec![(e0, 1.0)],
            2 => {
                let e1 = [-e0[1], e0[0], 0.0];
                (0..2 * m)
                    .map(|i| {
                        let t = PI * (i as f64 + 0.5) / (2 * m) as f64;
                        let (s, c) = t.sin_cos();
                        ([c * e0[0] + s * e1[0], c * e0[1] + s * e1[1], 0.0], PI / (2 * m) as f64)
                    })
                    .collect()
            }
            _ => {
                // orthonormal frame around e0
                let pick = if e0[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
                let dot: f64 = pick.iter().zip(&e0).map(|(a, b)| a * b).sum();
                let mut e1 = [pick[0] - dot * e0[0], pick[1] - dot * e0[1], pick[2] - dot * e0[2]];
                let l = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
                e1.iter_mut().for_each(|v| *v /= l);
                let e2 = [
                    e0[1] * e1[2] - e0[2] * e1[1],
                    e0[2] * e1[0] - e0[0] * e1[2],
                    e0[0] * e1[1] - e0[1] * e1[0],
                ];
                let (gx, gw) = quad::gauss_legendre(m);
                let nphi = m;
                let mut out = Vec::with_capacity(m * nphi);
                for (z, w) in gx.iter().zip(&gw) {
                    // cos(theta) in (0, 1)
                    let ct = 0.5 * (1.0 + z);
                    let st = (1.0 - ct * ct).sqrt();
                    for j in 0..nphi {
                        let phi = 2.0 * PI * j as f64 / nphi as f64;
                        let (sp, cp) = phi.sin_cos();
                        let mut d = [0.0; 3];
                        for k in 0..3 {
                            d[k] = ct * e0[k] + st * (cp * e1[k] + sp * e2[k]);
                        }
                        out.push((d, 0.5 * w * 2.0 * PI / nphi as f64));
                    }
                }
                out
            }
        }
    }

    /// Value at `x` with an error estimate covering quadrature and the
    /// truncated far field.
    pub fn eval(&self, f: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64]) -> Result<Estimate> {
        if x.len() != self.dim {
            return Err(Error::Invalid(format!("point has {} coordinates, expected {}", x.len(), self.dim)));
        }
        let n = self.dim;
        let s = self.s;
        let o = self.opts;
        let fx = f(x);
        let area = sphere_area(n);
        let dirs = self.directions(x);
        let shifted = |rho: f64, d: &[f64; 3], sign: f64| {
            let mut y = [0.0; 3];
            for k in 0..n {
                y[k] = x[k] + sign * rho * d[k];
            }
            f(&y[..n])
        };

        // core: Taylor model, 2f(x) - f(x + z) - f(x - z) ~ -z.H.z
        let h = o.delta / 8.0;
        let mut lap = 0.0;
        for k in 0..n {
            let mut e = [0.0; 3];
            e[k] = 1.0;
            lap += (shifted(h, &e, 1.0) + shifted(h, &e, -1.0) - 2.0 * fx) / (h * h);
        }
        let core = -0.5 * area * lap / n as f64 * o.delta.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);

        // shell: int_delta^R <2f(x) - f(x+rho w) - f(x-rho w)> rho^{-1-2s} d rho, in v = ln rho
        let avg = |rho: f64| -> f64 {
            dirs.iter().map(|(d, w)| w * (2.0 * fx - shifted(rho, d, 1.0) - shifted(rho, d, -1.0))).sum()
        };
        let g = |v: f64| {
            let rho = v.exp();
            avg(rho) * (-2.0 * s * v).exp()
        };
        let (a, b) = (o.delta.ln(), o.cutoff.ln());
        let pieces = ((b - a) / 0.5).ceil().max(1.0) as usize;
        let breaks: Vec<f64> = (0..=pieces).map(|i| a + (b - a) * i as f64 / pieces as f64).collect();
        let scale = fx.abs().max(dirs.iter().map(|(d, _)| shifted(o.delta, d, 1.0).abs()).fold(0.0, f64::max))
            * area
            * o.delta.powf(-2.0 * s);
        let shell = quad::adaptive(&g, &breaks, 1e-3 * o.tol * scale, o.tol, 4000);

        // far field: the spherical mean is frozen at the cutoff; its change
        // between R and 2R bounds the error
        let m_r = avg(o.cutoff);
        let far = m_r * o.cutoff.powf(-2.0 * s) / (2.0 * s);
        let far_err = (m_r - avg(2.0 * o.cutoff)).abs() * o.cutoff.powf(-2.0 * s) / (2.0 * s);

        let value = self.c_sn * (core + shell.value + far);
        let error = self.c_sn * (shell.error + far_err);
        if !value.is_finite() || error > 1e3 * o.tol * (value.abs() + self.c_sn * scale * 1e-3) {
            return Err(Error::Quadrature { estimate: error, tol: o.tol * value.abs() });
        }
        Ok(Estimate { value, error })
    }
}

/// `(-Delta)^s f(x)` by the principal-value integral with default settings.
pub fn frac_lap_singular(f: &(dyn Fn(&[f64]) -> f64 + Sync), x: &[f64], s: f64) -> Result<Estimate> {
    SingularIntegral::new(x.len(), s, SingularOptions::default())?.eval(f, x)
}

/// One evaluation point of a cross-backend comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackendSample {
    pub x: f64,
    pub hankel: f64,
    pub fft: f64,
    pub singular: f64,
}

/// Largest pairwise difference over a comparison, divided by the largest
/// radial value.
pub fn max_relative_deviation(samples: &[BackendSample]) -> f64 {
    let scale = samples.iter().fold(0.0f64, |m, b| m.max(b.hankel.abs()));
    samples
        .iter()
        .map(|b| (b.hankel - b.fft).abs().max((b.hankel - b.singular).abs()).max((b.fft - b.singular).abs()))
        .fold(0.0, f64::max)
        / scale
}

/// Box side and samples per axis used for the FFT backend on a unit Gaussian.
pub fn gaussian_box(n: usize) -> (f64, usize) {
    match n {
        1 => (2048.0, 32768),
        2 => (128.0, 512),
        _ => (32.0, 128),
    }
}

/// `(-Delta)^s exp(-|x|^2/2)` in `R^N` by all three backends at the points
/// `x e_1`. Points must lie on the FFT grid.
pub fn gaussian_backends(n: usize, s: f64, points: &[f64]) -> Result<Vec<BackendSample>> {
    check_order(s)?;
    if !(1..=3).contains(&n) {
        return Err(Error::Invalid(format!("backend comparison needs N <= 3, got {n}")));
    }
    let gauss = |x: &[f64]| (-0.5 * x.iter().map(|v| v * v).sum::<f64>()).exp();
    let u = RadialProfile::from_fn(n, &crate::radial::default_grid(), |r| (-0.5 * r * r).exp())?;
    let radial = frac_lap_radial_at(&u, s, points)?;
    let (l, m) = gaussian_box(n);
    let field = frac_lap_fft(&GridField::from_fn(n, l, m, gauss)?, s)?;
    let sing = SingularIntegral::new(n, s, SingularOptions::default())?;
    points
        .iter()
        .zip(radial)
        .map(|(&x, hankel)| {
            let mut pt = vec![0.0; n];
            pt[0] = x;
            let fft = field
                .value_at(&pt)
                .ok_or_else(|| Error::Invalid(format!("point {x} is not a node of the FFT grid")))?;
            let singular = sing.eval(&gauss, &pt)?.value;
            Ok(BackendSample { x, hankel, fft, singular })
        })
        .collect()
}
