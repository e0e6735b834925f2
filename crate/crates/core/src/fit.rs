//! Least-squares power-law fits.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r2: f64,
}

/// Fit `y = c x^e` by linear regression of `ln y` on `ln x`. All values must
/// be positive.
pub fn power_fit(x: &[f64], y: &[f64]) -> Result<PowerFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Invalid(format!("power fit needs matching samples, got {} and {}", x.len(), y.len())));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::Invalid("power fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (e, b, r2) = linear_fit(&lx, &ly);
    Ok(PowerFit { exponent: e, prefactor: b.exp(), r2 })
}

/// Slope, intercept and coefficient of determination of `y ~ a x + b`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let a = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - (syy - a * sxy) / syy };
    (a, my - a * mx, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = [0.5, 1.0, 2.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.7)).collect();
        let f = power_fit(&x, &y).unwrap();
        assert!((f.exponent + 0.7).abs() < 1e-13);
        assert!((f.prefactor - 3.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(power_fit(&x, &[1.0, -1.0, 1.0, 1.0]).is_err());
    }
}
