//! Sparse symmetric positive-definite systems: sparse Cholesky from
//! `nalgebra-sparse` and a Jacobi-preconditioned conjugate-gradient solver.

use crate::error::{Error, Result};
use crate::par;
use nalgebra::DMatrix;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix, CsrMatrix};

/// Symmetric matrix assembled from additive entries.
#[derive(Debug, Clone)]
pub struct SymmetricMatrix {
    csr: CsrMatrix<f64>,
}

impl SymmetricMatrix {
    /// Sum duplicate `(i, j, v)` triplets into an `n x n` matrix. Both halves
    /// must be supplied.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut coo = CooMatrix::new(n, n);
        for &(i, j, v) in triplets {
            coo.push(i, j, v);
        }
        SymmetricMatrix { csr: CsrMatrix::from(&coo) }
    }

    pub fn dim(&self) -> usize {
        self.csr.nrows()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.csr.get_entry(i, i).map(|e| e.into_value()).unwrap_or(0.0)).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let offs = self.csr.row_offsets();
        let cols = self.csr.col_indices();
        let vals = self.csr.values();
        par::map_range(self.dim(), |i| (offs[i]..offs[i + 1]).map(|k| vals[k] * x[cols[k]]).sum())
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.apply(x).iter().zip(y).map(|(a, b)| a * b).sum()
    }

    /// Sparse Cholesky factorization of the unit-diagonal scaling. Fails with
    /// [`Error::Coercivity`] when the matrix is not positive definite.
    pub fn factor(&self) -> Result<Factor> {
        let diag = self.diagonal();
        if let Some(d) = diag.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::Coercivity(format!("non-positive diagonal entry {d}")));
        }
        let scale: Vec<f64> = diag.iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut scaled = self.csr.clone();
        for (i, j, v) in scaled.triplet_iter_mut() {
            *v *= scale[i] * scale[j];
        }
        CscCholesky::factor(&CscMatrix::from(&scaled))
            .map(|chol| Factor { chol, scale })
            .map_err(|e| Error::Coercivity(format!("Cholesky factorization failed: {e:?}")))
    }

    /// Conjugate gradients with Jacobi preconditioning to relative residual `tol`.
    pub fn cg(&self, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
        let n = self.dim();
        let inv: Vec<f64> = self.diagonal().iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
        let bnorm = norm(b);
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok(CgOutcome { x, iterations: 0, residual: 0.0 });
        }
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        for it in 1..=max_iter {
            let ap = self.apply(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Coercivity(format!("non-positive curvature {pap:.3e} in conjugate gradients")));
            }
            let step = rz / pap;
            x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += step * pi);
            r.iter_mut().zip(&ap).for_each(|(ri, ai)| *ri -= step * ai);
            let res = norm(&r) / bnorm;
            if res <= tol {
                return Ok(CgOutcome { x, iterations: it, residual: res });
            }
            z = r.iter().zip(&inv).map(|(a, b)| a * b).collect();
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        Err(Error::NoConvergence { iterations: max_iter, residual: norm(&r) / bnorm })
    }
}

/// Result of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Cholesky factor of a [`SymmetricMatrix`], reusable across right-hand sides.
pub struct Factor {
    chol: CscCholesky<f64>,
    scale: Vec<f64>,
}

impl Factor {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = DMatrix::from_iterator(b.len(), 1, b.iter().zip(&self.scale).map(|(x, d)| x * d));
        self.chol.solve(&rhs).iter().zip(&self.scale).map(|(x, d)| x * d).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize, shift: f64) -> SymmetricMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 + shift));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SymmetricMatrix::from_triplets(n, &t)
    }

    #[test]
    fn direct_and_cg_agree() {
        let a = laplacian(50, 0.01);
        let b: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let x = a.factor().unwrap().solve(&b);
        let y = a.cg(&b, 1e-12, 500).unwrap();
        for (u, v) in x.iter().zip(&y.x) {
            assert!((u - v).abs() < 1e-9);
        }
        let r: Vec<f64> = a.apply(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
        assert!(norm(&r) < 1e-10);
    }

    #[test]
    fn indefinite_is_rejected() {
        assert!(matches!(laplacian(10, -3.0).factor(), Err(Error::Coercivity(_))));
    }
}
