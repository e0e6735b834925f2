//! Radial functions on logarithmic grids.
//!
//! A [`RadialProfile`] stores samples `u(r_i)` of a radial function on `R^N`,
//! interpolates them with a cubic spline in `ln r`, and extends them
//! past the grid with optional power laws at either end.

use crate::error::{Error, Result};
use serde::Serialize;
use std::io::{Read, Write};

/// `nodes` points geometrically spaced over `[r_min, r_max]`.
pub fn log_grid(r_min: f64, r_max: f64, nodes: usize) -> Vec<f64> {
    assert!(nodes >= 2 && r_min > 0.0 && r_max > r_min);
    let (a, b) = (r_min.ln(), r_max.ln());
    let h = (b - a) / (nodes - 1) as f64;
    (0..nodes)
        .map(|i| match i {
            0 => r_min,
            i if i == nodes - 1 => r_max,
            i => (a + h * i as f64).exp(),
        })
        .collect()
}

/// 512 nodes over `[1e-3, 1e3]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 512)
}

/// Reciprocal grid `1 / r` in increasing order.
pub fn reciprocal(r: &[f64]) -> Vec<f64> {
    r.iter().rev().map(|x| 1.0 / x).collect()
}

/// Radial function sampled on a strictly increasing positive grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialProfile {
    n: usize,
    r: Vec<f64>,
    values: Vec<f64>,
    /// Beyond `r_max`: `values[last] * (r / r_max)^e`; zero when unset.
    decay_exponent: Option<f64>,
    /// Below `r_min`: `values[0] * (r / r_min)^h`; when unset, the even
    /// quadratic `a + b r^2` through the first two samples.
    head_exponent: Option<f64>,
    #[serde(skip)]
    m: Vec<f64>,
}

impl RadialProfile {
    pub fn new(n: usize, r: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        if r.len() < 3 || r.len() != values.len() {
            return Err(Error::Invalid(format!(
                "profile needs at least 3 nodes and matching lengths (got {} radii, {} values)",
                r.len(),
                values.len()
            )));
        }
        if !(r[0] > 0.0) || r.windows(2).any(|w| !(w[1] > w[0])) || !r[r.len() - 1].is_finite() {
            return Err(Error::Invalid("radii must be positive, finite and strictly increasing".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite value at r = {}", r[i])));
        }
        let m = spline_moments(&r, &values);
        Ok(RadialProfile { n, r, values, decay_exponent: None, head_exponent: None, m })
    }

    /// Sample `f` on the grid.
    pub fn from_fn(n: usize, r: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(n, r.to_vec(), r.iter().map(|&x| f(x)).collect())
    }

    /// Pure power law `c r^e` with matching laws at both ends.
    pub fn power_law(n: usize, r: &[f64], c: f64, e: f64) -> Result<Self> {
        Self::from_fn(n, r, |x| c * x.powf(e))?.with_head(e)?.with_decay(e)
    }

    pub fn with_decay(mut self, e: f64) -> Result<Self> {
        if !e.is_finite() {
            return Err(Error::Invalid("decay exponent must be finite".into()));
        }
        self.decay_exponent = Some(e);
        Ok(self)
    }

    pub fn with_head(mut self, h: f64) -> Result<Self> {
        if !(h > -(self.n as f64)) || !h.is_finite() {
            return Err(Error::Invalid(format!("head exponent {h} is not locally integrable in dimension {}", self.n)));
        }
        self.head_exponent = Some(h);
        Ok(self)
    }

    pub(crate) fn with_laws(mut self, head: Option<f64>, tail: Option<f64>) -> Self {
        self.head_exponent = head;
        self.decay_exponent = tail;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn r(&self) -> &[f64] {
        &self.r
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn decay_exponent(&self) -> Option<f64> {
        self.decay_exponent
    }
    pub fn head_exponent(&self) -> Option<f64> {
        self.head_exponent
    }
    pub fn r_min(&self) -> f64 {
        self.r[0]
    }
    pub fn r_max(&self) -> f64 {
        self.r[self.r.len() - 1]
    }
    pub fn len(&self) -> usize {
        self.r.len()
    }
    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Value at any `r >= 0`, using the end laws outside the grid.
    pub fn eval(&self, r: f64) -> f64 {
        let last = self.r.len() - 1;
        if r < self.r[0] {
            return self.head_value(r);
        }
        if r > self.r[last] {
            return match self.decay_exponent {
                Some(e) => self.values[last] * (r / self.r[last]).powf(e),
                None => 0.0,
            };
        }
        let i = self.r.partition_point(|&x| x <= r).clamp(1, last) - 1;
        self.eval_in(i, r)
    }

    /// Coefficients `(a, b)` of the even head model `a + b r^2`.
    pub fn even_head(&self) -> (f64, f64) {
        let (r0, r1) = (self.r[0], self.r[1]);
        let b = (self.values[1] - self.values[0]) / (r1 * r1 - r0 * r0);
        (self.values[0] - b * r0 * r0, b)
    }

    fn head_value(&self, r: f64) -> f64 {
        match self.head_exponent {
            Some(h) => self.values[0] * (r / self.r[0]).powf(h),
            None => {
                let (a, b) = self.even_head();
                a + b * r * r
            }
        }
    }

    // cubic in x = ln r on [r_i, r_{i+1}]
    fn eval_in(&self, i: usize, r: f64) -> f64 {
        let x0 = self.r[i].ln();
        let x1 = self.r[i + 1].ln();
        let h = x1 - x0;
        let x = r.ln();
        let a = (x1 - x) / h;
        let b = 1.0 - a;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Same grid and laws, values mapped pointwise.
    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let v = self.r.iter().zip(&self.values).map(|(&r, &u)| f(r, u)).collect();
        Ok(Self::new(self.n, self.r.clone(), v)?.with_laws(self.head_exponent, self.decay_exponent))
    }

    /// Multiply by `c`.
    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out.m.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `a * self + b * other` on a shared grid. The end laws must agree.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
        if self.r != other.r || self.n != other.n {
            return Err(Error::Invalid("profiles live on different grids".into()));
        }
        if self.head_exponent != other.head_exponent || self.decay_exponent != other.decay_exponent {
            return Err(Error::Invalid("profiles carry different end laws".into()));
        }
        let v = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Ok(Self::new(self.n, self.r.clone(), v)?.with_laws(self.head_exponent, self.decay_exponent))
    }

    /// `int_{|x| < r_max} u^2 |x|^w dx`, with the head law below `r_min`.
    pub fn weighted_l2(&self, weight_exponent: f64) -> f64 {
        let area = crate::constants::sphere_area(self.n);
        let nf = self.n as f64;
        let f = |r: f64| {
            let u = self.eval(r);
            u * u * r.powf(nf - 1.0 + weight_exponent)
        };
        let body = crate::quad::adaptive(&f, &self.r, 0.0, 1e-12, 20 * self.r.len()).value;
        let head = crate::quad::tanh_sinh(&|_x: f64, dl: f64, _dr: f64| f(dl), 0.0, self.r[0], 1e-12).value;
        area * (body + head)
    }

    /// CSV with header `r,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        wtr.write_record(["r", "value"]).map_err(io)?;
        for (r, v) in self.r.iter().zip(&self.values) {
            wtr.write_record([format!("{r:.17e}"), format!("{v:.17e}")]).map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))
    }

    /// Read a `r,value` CSV written by [`write_csv`](Self::write_csv).
    pub fn read_csv<R: Read>(n: usize, rdr: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(rdr);
        let mut r = Vec::new();
        let mut v = Vec::new();
        for rec in rdr.deserialize::<(f64, f64)>() {
            let (a, b) = rec.map_err(|e| Error::Invalid(format!("csv: {e}")))?;
            r.push(a);
            v.push(b);
        }
        Self::new(n, r, v)
    }
}

/// Second derivatives (in `ln r`) of the cubic spline whose end moments are
/// linear extrapolations of their neighbours.
fn spline_moments(r: &[f64], y: &[f64]) -> Vec<f64> {
    let n = r.len();
    let x: Vec<f64> = r.iter().map(|v| v.ln()).collect();
    let mut m = vec![0.0; n];
    if n < 4 {
        return m;
    }
    // tridiagonal system for m_1 .. m_{n-2}
    let k = n - 2;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        sub[i - 1] = h0;
        diag[i - 1] = 2.0 * (h0 + h1);
        sup[i - 1] = h1;
        rhs[i - 1] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
    }
    // m_0 = m_1 + (m_1 - m_2) h_0 / h_1, and symmetrically at the far end
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    diag[0] += sub[0] * (1.0 + h0 / h1);
    sup[0] -= sub[0] * h0 / h1;
    let (g0, g1) = (x[n - 1] - x[n - 2], x[n - 2] - x[n - 3]);
    diag[k - 1] += sup[k - 1] * (1.0 + g0 / g1);
    sub[k - 1] -= sup[k - 1] * g0 / g1;
    for i in 1..k {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[k] = rhs[k - 1] / diag[k - 1];
    for i in (0..k - 1).rev() {
        m[i + 1] = (rhs[i] - sup[i] * m[i + 2]) / diag[i];
    }
    m[0] = m[1] + (m[1] - m[2]) * h0 / h1;
    m[n - 1] = m[n - 2] + (m[n - 2] - m[n - 3]) * g0 / g1;
    m
}

/// Radial function of the frequency variable `rho = |zeta|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralProfile(pub(crate) RadialProfile);

impl SpectralProfile {
    pub fn new(profile: RadialProfile) -> Self {
        SpectralProfile(profile)
    }
    pub fn rho(&self) -> &[f64] {
        self.0.r()
    }
    pub fn values(&self) -> &[f64] {
        self.0.values()
    }
    pub fn dim(&self) -> usize {
        self.0.dim()
    }
    pub fn eval(&self, rho: f64) -> f64 {
        self.0.eval(rho)
    }
    pub fn profile(&self) -> &RadialProfile {
        &self.0
    }

    /// Multiply by `rho^k`, shifting both end laws.
    pub fn times_power(&self, k: f64) -> Result<Self> {
        let p = &self.0;
        let head = Some(p.head_exponent().unwrap_or(0.0) + k);
        let tail = p.decay_exponent().map(|e| e + k);
        Ok(SpectralProfile(p.map(|rho, v| v * rho.powf(k))?.with_laws(head, tail)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_endpoints_exact() {
        let g = log_grid(1e-3, 1e3, 512);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[511], 1e3);
        assert_relative_eq!(g[1] / g[0], g[300] / g[299], max_relative = 1e-12);
        let rg = reciprocal(&g);
        assert_relative_eq!(rg[0], 1e-3, max_relative = 1e-15);
    }

    #[test]
    fn spline_reproduces_smooth_function() {
        let g = log_grid(1e-2, 1e2, 400);
        let p = RadialProfile::from_fn(3, &g, |r| (-0.5 * r * r).exp()).unwrap();
        for &r in &[0.013, 0.5, 1.234, 3.3] {
            assert!((p.eval(r) - (-0.5 * r * r).exp()).abs() < 1e-7);
        }
        assert_eq!(p.eval(200.0), 0.0);
        assert!((p.eval(1e-4) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn end_laws() {
        let g = log_grid(1e-2, 1e2, 64);
        let p = RadialProfile::power_law(3, &g, 2.0, -0.7).unwrap();
        assert_relative_eq!(p.eval(1e-4), 2.0 * 1e-4f64.powf(-0.7), max_relative = 1e-12);
        assert_relative_eq!(p.eval(1e4), 2.0 * 1e4f64.powf(-0.7), max_relative = 1e-12);
        assert!(RadialProfile::from_fn(3, &g, |_| 1.0).unwrap().with_head(-3.0).is_err());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialProfile::new(3, vec![1.0, 1.0, 2.0], vec![0.0; 3]).is_err());
        assert!(RadialProfile::new(3, vec![0.0, 1.0, 2.0], vec![0.0; 3]).is_err());
        assert!(RadialProfile::new(3, vec![1.0, 2.0, 3.0], vec![0.0, f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = log_grid(0.1, 10.0, 16);
        let p = RadialProfile::from_fn(2, &g, |r| r.sin()).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let q = RadialProfile::read_csv(2, buf.as_slice()).unwrap();
        assert_eq!(p.values(), q.values());
        assert_eq!(p.r(), q.r());
    }

    #[test]
    fn weighted_l2_of_power_law() {
        // u = r^{-1/2} with weight |x|^{-1} in R^3: integrand is 4 pi on (0, 1)
        let g = log_grid(1e-3, 1.0, 200);
        let p = RadialProfile::from_fn(3, &g, |r| r.powf(-0.5)).unwrap().with_head(-0.5).unwrap();
        assert_relative_eq!(p.weighted_l2(-1.0), 4.0 * std::f64::consts::PI, max_relative = 1e-8);
    }
}
