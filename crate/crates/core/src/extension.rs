//! The extension problem `div(t^{1-2s} grad w) = 0` on the upper half-space,
//! its Poisson kernel, and the Dirichlet-to-Neumann operator
//! `B_s v = -kappa_s^{-1} lim t^{1-2s} dw/dt`.
//!
//! Radial data are discretized by finite volumes on a tensor mesh in
//! `(t, |x|)`. The mesh is geometrically graded toward `t = 0`, and every
//! t-edge uses the exact conductance of the one-dimensional weighted problem,
//! `2s / (t_{k+1}^{2s} - t_k^{2s})`, so the boundary flux is resolved.

use crate::constants::{kappa_s, kernel_constants, sphere_area};
use crate::error::{Error, Result};
use crate::fraclap::{apply_multiplier, hankel_forward, GridField};
use crate::hankel::{self, DEFAULT_TOL};
use crate::linalg::{Factor, SymmetricMatrix};
use crate::par;
use crate::quad;
use crate::radial::{log_grid, reciprocal, RadialProfile, SpectralProfile};
use crate::special::poisson_symbol;
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

/// `[0, T rho^{K-1}, ..., T rho, T]`: `levels` heights above the boundary.
pub fn graded_heights(height: f64, ratio: f64, levels: usize) -> Vec<f64> {
    assert!(levels >= 2 && ratio > 0.0 && ratio < 1.0 && height > 0.0);
    let mut t = vec![0.0];
    t.extend((1..=levels).map(|k| height * ratio.powi((levels - k) as i32)));
    t
}

/// `[0]` followed by `nodes` log-spaced radii over `[first, radius]`.
pub fn graded_radii(first: f64, radius: f64, nodes: usize) -> Vec<f64> {
    let mut x = vec![0.0];
    x.extend(log_grid(first, radius, nodes));
    x
}

/// Mesh parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeshConfig {
    pub height: f64,
    pub ratio: f64,
    pub levels: usize,
    pub radius: f64,
    pub first_radius: f64,
    pub radial_nodes: usize,
}

impl MeshConfig {
    /// Default grading with the lowest level about a tenth of `first_radius`.
    pub fn resolving(first_radius: f64, radial_nodes: usize) -> Self {
        let d = MeshConfig::default();
        let levels = ((0.1 * first_radius / d.height).ln() / d.ratio.ln()).ceil() as usize + 2;
        MeshConfig { first_radius, radial_nodes, levels: levels.max(d.levels), ..d }
    }
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig { height: 20.0, ratio: 0.85, levels: 80, radius: 40.0, first_radius: 1e-3, radial_nodes: 240 }
    }
}

/// Tensor mesh on `[0, T] x [0, R]` in `(t, |x|)` with its finite-volume
/// weights.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceMesh {
    n: usize,
    s: f64,
    t: Vec<f64>,
    x: Vec<f64>,
    // conductance of t-edge k, times the x-cell measure
    ct: Vec<f64>,
    // conductance of x-edge j, times the t-cell measure
    cx: Vec<f64>,
    // int r^{N-1} over the dual cell of x_j
    xcell: Vec<f64>,
    // int t^{1-2s} over the dual cell of t_k
    tcell: Vec<f64>,
}

impl HalfSpaceMesh {
    /// Mesh through the given nodes. Both must start at 0 and increase.
    pub fn new(n: usize, s: f64, t: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        check_order(s)?;
        if n == 0 {
            return Err(Error::Invalid("dimension must be at least 1".into()));
        }
        for (name, v) in [("t", &t), ("x", &x)] {
            if v.len() < 3 || v[0] != 0.0 || v.windows(2).any(|w| !(w[1] > w[0])) || !v[v.len() - 1].is_finite() {
                return Err(Error::Invalid(format!("{name}-nodes must start at 0 and increase strictly")));
            }
        }
        let nf = n as f64;
        let a2 = 2.0 - 2.0 * s;
        let ct = t.windows(2).map(|w| 2.0 * s / (w[1].powf(2.0 * s) - w[0].powf(2.0 * s))).collect();
        let cx = x.windows(2).map(|w| (0.5 * (w[0] + w[1])).powf(nf - 1.0) / (w[1] - w[0])).collect();
        let dual = |v: &[f64], j: usize| {
            let lo = if j == 0 { 0.0 } else { 0.5 * (v[j - 1] + v[j]) };
            let hi = if j + 1 == v.len() { v[j] } else { 0.5 * (v[j] + v[j + 1]) };
            (lo, hi)
        };
        let xcell = (0..x.len())
            .map(|j| {
                let (lo, hi) = dual(&x, j);
                (hi.powf(nf) - lo.powf(nf)) / nf
            })
            .collect();
        let tcell = (0..t.len())
            .map(|k| {
                let (lo, hi) = dual(&t, k);
                (hi.powf(a2) - lo.powf(a2)) / a2
            })
            .collect();
        Ok(HalfSpaceMesh { n, s, t, x, ct, cx, xcell, tcell })
    }

    pub fn from_config(n: usize, s: f64, c: &MeshConfig) -> Result<Self> {
        if !(c.first_radius > 0.0 && c.radius > c.first_radius && c.radial_nodes >= 2) {
            return Err(Error::Invalid("radial mesh needs 0 < first_radius < radius and at least 2 nodes".into()));
        }
        if !(c.ratio > 0.0 && c.ratio < 1.0 && c.height > 0.0 && c.levels >= 2) {
            return Err(Error::Invalid("height grading needs ratio in (0,1), height > 0, levels >= 2".into()));
        }
        Self::new(n, s, graded_heights(c.height, c.ratio, c.levels), graded_radii(c.first_radius, c.radius, c.radial_nodes))
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn order(&self) -> f64 {
        self.s
    }
    pub fn t(&self) -> &[f64] {
        &self.t
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    /// `int r^{N-1} dr` over the dual cell of each radial node.
    pub fn cell_measure(&self) -> &[f64] {
        &self.xcell
    }

    /// Radial extent `(lo, hi)` of each dual cell.
    pub fn cell_bounds(&self) -> Vec<(f64, f64)> {
        let x = &self.x;
        (0..x.len())
            .map(|j| {
                let lo = if j == 0 { 0.0 } else { 0.5 * (x[j - 1] + x[j]) };
                let hi = if j + 1 == x.len() { x[j] } else { 0.5 * (x[j] + x[j + 1]) };
                (lo, hi)
            })
            .collect()
    }

    /// Cell averages of `c r^e`, exact for the power law. Needs `e > -N`.
    pub fn power_average(&self, c: f64, e: f64) -> Result<Vec<f64>> {
        let nf = self.n as f64;
        if !(e + nf > 0.0) {
            return Err(Error::Domain(format!("r^{e} is not locally integrable in dimension {}", self.n)));
        }
        Ok(self
            .cell_bounds()
            .iter()
            .zip(&self.xcell)
            .map(|((lo, hi), m)| c * (hi.powf(e + nf) - lo.powf(e + nf)) / (e + nf) / m)
            .collect())
    }

    fn nt(&self) -> usize {
        self.t.len()
    }
    fn nx(&self) -> usize {
        self.x.len()
    }

    // edges as (node a, node b, conductance), node = k * nx + j
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        let (nt, nx) = (self.nt(), self.nx());
        let mut e = Vec::with_capacity(2 * nt * nx);
        for k in 0..nt {
            for j in 0..nx {
                let a = k * nx + j;
                if k + 1 < nt {
                    e.push((a, a + nx, self.ct[k] * self.xcell[j]));
                }
                if j + 1 < nx {
                    e.push((a, a + 1, self.cx[j] * self.tcell[k]));
                }
            }
        }
        e
    }

    /// Nodes on the top and lateral truncation boundary.
    fn is_outer(&self, node: usize) -> bool {
        let (k, j) = (node / self.nx(), node % self.nx());
        k + 1 == self.nt() || j + 1 == self.nx()
    }
}

/// A function `w(t, |x|)` on a [`HalfSpaceMesh`], stored level by level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfSpaceField {
    n: usize,
    s: f64,
    t: Vec<f64>,
    x: Vec<f64>,
    values: Vec<f64>,
}

impl HalfSpaceField {
    pub fn new(n: usize, s: f64, t: Vec<f64>, x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_order(s)?;
        if values.len() != t.len() * x.len() {
            return Err(Error::Invalid(format!("{} values for a {} x {} mesh", values.len(), t.len(), x.len())));
        }
        if t.first() != Some(&0.0) || t.windows(2).any(|w| !(w[1] > w[0])) || x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("t must start at 0; both node sets must increase".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite field value".into()));
        }
        Ok(HalfSpaceField { n, s, t, x, values })
    }

    fn on_mesh(mesh: &HalfSpaceMesh, values: Vec<f64>) -> Self {
        HalfSpaceField { n: mesh.n, s: mesh.s, t: mesh.t.clone(), x: mesh.x.clone(), values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn order(&self) -> f64 {
        self.s
    }
    /// Weight exponent `a = 1 - 2s`.
    pub fn weight_exponent(&self) -> f64 {
        1.0 - 2.0 * self.s
    }
    pub fn t(&self) -> &[f64] {
        &self.t
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn at(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.x.len() + j]
    }
    /// Values on the level `t = t_k`.
    pub fn level(&self, k: usize) -> &[f64] {
        let nx = self.x.len();
        &self.values[k * nx..(k + 1) * nx]
    }
    /// Boundary values `w(0, x)`.
    pub fn trace(&self) -> &[f64] {
        self.level(0)
    }

    /// CSV with columns `t,x,value`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Invalid(format!("csv: {e}"));
        wtr.write_record(["t", "x", "value"]).map_err(io)?;
        for (k, t) in self.t.iter().enumerate() {
            for (j, x) in self.x.iter().enumerate() {
                wtr.write_record([format!("{t:.17e}"), format!("{x:.17e}"), format!("{:.17e}", self.at(k, j))]).map_err(io)?;
            }
        }
        wtr.flush().map_err(|e| Error::Invalid(format!("csv: {e}")))
    }
}

/// Poisson kernel `P(t, x) = p_{N,s} t^{2s} (t^2 + |x|^2)^{-(N+2s)/2}` at `|x| = r`.
pub fn poisson_kernel(n: usize, s: f64, t: f64, r: f64) -> Result<f64> {
    let p = kernel_constants(n, s)?.p_ns;
    Ok(p * t.powf(2.0 * s) * (t * t + r * r).powf(-0.5 * (n as f64 + 2.0 * s)))
}

/// `P(t, .) * u` at the radii `points`, by the Fourier symbol of the kernel.
pub fn poisson_extend_at(u: &RadialProfile, s: f64, t: f64, points: &[f64]) -> Result<Vec<f64>> {
    check_order(s)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("extension height t = {t} must be positive")));
    }
    let f = hankel_forward(u, &reciprocal(u.r()))?;
    extend_spectrum(&f, s, t, points)
}

// inverse transform of `f(rho) phi(t rho)`; `t = 0` gives the plain inverse
fn extend_spectrum(f: &SpectralProfile, s: f64, t: f64, points: &[f64]) -> Result<Vec<f64>> {
    if t == 0.0 {
        return hankel::transform_values(f.profile(), points, DEFAULT_TOL);
    }
    let rho0 = f.rho();
    // continue the spectrum until the symbol has decayed
    let (lo, hi) = (rho0[0], rho0[rho0.len() - 1]);
    let top = hi.max(60.0 / t);
    let per_decade = rho0.len() as f64 / (hi / lo).log10();
    let nodes = ((top / lo).log10() * per_decade).ceil() as usize + 1;
    let rho = log_grid(lo, top, nodes.max(rho0.len()));
    let g = RadialProfile::from_fn(f.dim(), &rho, |z| f.eval(z) * poisson_symbol(s, t * z))?;
    let g = match f.profile().head_exponent() {
        Some(h) => g.with_head(h)?,
        None => g,
    };
    hankel::transform_values(&g, points, DEFAULT_TOL)
}

/// `P(t, .) * u` on the grid of `u`.
pub fn poisson_extend(u: &RadialProfile, s: f64, t: f64) -> Result<RadialProfile> {
    let v = poisson_extend_at(u, s, t, u.r())?;
    RadialProfile::new(u.dim(), u.r().to_vec(), v)
}

/// `P(t, .) * f` for a periodic field.
pub fn poisson_extend_grid(f: &GridField, s: f64, t: f64) -> Result<GridField> {
    check_order(s)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("extension height t = {t} must be positive")));
    }
    Ok(apply_multiplier(f, |z| poisson_symbol(s, t * z)))
}

/// Poisson extension of `u` sampled on the tensor nodes. Every level,
/// including `t = 0`, goes through the same transform pair, so the level
/// differences carry no interpolation error.
pub fn poisson_extend_field(u: &RadialProfile, s: f64, t: &[f64], x: &[f64]) -> Result<HalfSpaceField> {
    check_order(s)?;
    let f = hankel_forward(u, &reciprocal(u.r()))?;
    let levels = par::map_slice(t, |&tk| extend_spectrum(&f, s, tk, x));
    let mut values = Vec::with_capacity(t.len() * x.len());
    for l in levels {
        values.extend(l?);
    }
    HalfSpaceField::new(u.dim(), s, t.to_vec(), x.to_vec(), values)
}

/// Relative gap between the two flux extrapolations beyond which
/// [`dtn_trace`] reports instability.
pub const EXTRAPOLATION_TOL: f64 = 0.05;

/// The boundary flux `-lim_{t->0} t^{1-2s} dw/dt` at the radial nodes
/// `x > 0`, extrapolated from the three lowest t-edges.
///
/// Near the boundary `w = w_0 - phi t^{2s} / (2s) + c t^2 + ...`, so the
/// difference quotient on the edge `[t_k, t_{k+1}]` equals `phi` plus a term
/// linear in `theta_k = 2s (t_{k+1}^2 - t_k^2) / (t_{k+1}^{2s} - t_k^{2s})`.
pub fn dtn_trace(w: &HalfSpaceField) -> Result<RadialProfile> {
    let t = &w.t;
    if t.len() < 4 {
        return Err(Error::Invalid("flux extrapolation needs at least four levels".into()));
    }
    let s = w.s;
    let edge = |k: usize| {
        let d = t[k + 1].powf(2.0 * s) - t[k].powf(2.0 * s);
        (2.0 * s / d, 2.0 * s * (t[k + 1] * t[k + 1] - t[k] * t[k]) / d)
    };
    let (c0, th0) = edge(0);
    let (c1, th1) = edge(1);
    let (c2, th2) = edge(2);
    let j0 = w.x.iter().position(|&x| x > 0.0).unwrap_or(w.x.len());
    let mut near = Vec::new();
    let mut far = Vec::new();
    for j in j0..w.x.len() {
        let f0 = -c0 * (w.at(1, j) - w.at(0, j));
        let f1 = -c1 * (w.at(2, j) - w.at(1, j));
        let f2 = -c2 * (w.at(3, j) - w.at(2, j));
        near.push(f0 - th0 * (f1 - f0) / (th1 - th0));
        far.push(f1 - th1 * (f2 - f1) / (th2 - th1));
    }
    let scale = near.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (i, (a, b)) in near.iter().zip(&far).enumerate() {
        if (a - b).abs() > EXTRAPOLATION_TOL * scale {
            return Err(Error::Extrapolation { x: w.x[j0 + i], a: *a, b: *b });
        }
    }
    RadialProfile::new(w.n, w.x[j0..].to_vec(), near)
}

/// Weighted Dirichlet energy `int t^{1-2s} |grad w|^2` over the mesh, in the
/// full space `R^{N+1}_+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyEstimate {
    pub value: f64,
    /// Estimate of the energy outside the truncated box, from the boundary
    /// term `-int w t^{1-2s} dw/dn` of Green's identity.
    pub tail: f64,
}

pub fn weighted_energy(w: &HalfSpaceField) -> Result<EnergyEstimate> {
    let mesh = HalfSpaceMesh::new(w.n, w.s, w.t.clone(), w.x.clone())?;
    let v = &w.values;
    let area = sphere_area(w.n);
    let value: f64 = mesh.edges().iter().map(|&(a, b, c)| c * (v[a] - v[b]).powi(2)).sum();
    let (nt, nx) = (mesh.nt(), mesh.nx());
    let mut tail = 0.0;
    for j in 0..nx {
        let (top, below) = ((nt - 1) * nx + j, (nt - 2) * nx + j);
        tail -= mesh.ct[nt - 2] * mesh.xcell[j] * v[top] * (v[top] - v[below]);
    }
    for k in 0..nt {
        let (edge, inner) = (k * nx + nx - 1, k * nx + nx - 2);
        tail -= mesh.cx[nx - 2] * mesh.tcell[k] * v[edge] * (v[edge] - v[inner]);
    }
    Ok(EnergyEstimate { value: area * value, tail: area * tail.max(0.0) })
}

/// Linear solver used for the extension systems.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[derive(Default)]
pub enum SolverKind {
    /// Sparse Cholesky.
    #[default]
    Direct,
    /// Jacobi-preconditioned conjugate gradients to the given relative residual.
    Cg { tol: f64 },
}


// Assembled system on the free nodes of a mesh.
struct System {
    mesh: HalfSpaceMesh,
    edges: Vec<(usize, usize, f64)>,
    // node -> free index
    map: Vec<Option<usize>>,
    matrix: SymmetricMatrix,
    factor: Option<Factor>,
    kind: SolverKind,
}

impl System {
    // `free_trace(j)` selects which boundary nodes are unknowns; `diag` adds
    // to their diagonal.
    fn new(mesh: &HalfSpaceMesh, free_trace: impl Fn(usize) -> bool, diag: &[f64], kind: SolverKind) -> Result<Self> {
        Self::with_edges(mesh, mesh.edges(), free_trace, diag, kind)
    }

    fn with_edges(
        mesh: &HalfSpaceMesh,
        edges: Vec<(usize, usize, f64)>,
        free_trace: impl Fn(usize) -> bool,
        diag: &[f64],
        kind: SolverKind,
    ) -> Result<Self> {
        let nx = mesh.nx();
        let total = mesh.nt() * nx;
        let mut map = vec![None; total];
        let mut count = 0;
        // radius-major numbering keeps the bandwidth at the number of levels
        for j in 0..nx {
            for k in 0..mesh.nt() {
                let node = k * nx + j;
                if mesh.is_outer(node) || (k == 0 && !free_trace(j)) {
                    continue;
                }
                map[node] = Some(count);
                count += 1;
            }
        }
        let mut trip = Vec::with_capacity(5 * count);
        for &(a, b, c) in &edges {
            match (map[a], map[b]) {
                (Some(i), Some(j)) => {
                    trip.extend([(i, i, c), (j, j, c), (i, j, -c), (j, i, -c)]);
                }
                (Some(i), None) => trip.push((i, i, c)),
                (None, Some(j)) => trip.push((j, j, c)),
                (None, None) => {}
            }
        }
        for (j, d) in diag.iter().enumerate() {
            if let Some(i) = map[j] {
                trip.push((i, i, *d));
            }
        }
        let matrix = SymmetricMatrix::from_triplets(count, &trip);
        let factor = match kind {
            SolverKind::Direct => Some(matrix.factor()?),
            SolverKind::Cg { .. } => None,
        };
        Ok(System { mesh: mesh.clone(), edges, map, matrix, factor, kind })
    }

    // Solve with `fixed` values on non-free nodes (indexed by node) and a
    // source on the free ones; returns the full nodal field.
    fn solve(&self, fixed: &dyn Fn(usize) -> f64, source: &dyn Fn(usize) -> f64) -> Result<Vec<f64>> {
        let total = self.map.len();
        let mut rhs = vec![0.0; self.matrix.dim()];
        for (node, m) in self.map.iter().enumerate() {
            if let Some(i) = m {
                rhs[*i] += source(node);
            }
        }
        for &(a, b, c) in &self.edges {
            match (self.map[a], self.map[b]) {
                (Some(i), None) => rhs[i] += c * fixed(b),
                (None, Some(j)) => rhs[j] += c * fixed(a),
                _ => {}
            }
        }
        let x = match (&self.factor, self.kind) {
            (Some(f), _) => {
                // two steps of iterative refinement
                let mut x = f.solve(&rhs);
                for _ in 0..2 {
                    let ax = self.matrix.apply(&x);
                    let res: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
                    for (xi, d) in x.iter_mut().zip(f.solve(&res)) {
                        *xi += d;
                    }
                }
                x
            }
            (None, SolverKind::Cg { tol }) => self.matrix.cg(&rhs, tol, 20 * self.matrix.dim())?.x,
            (None, SolverKind::Direct) => unreachable!(),
        };
        Ok((0..total).map(|node| self.map[node].map_or_else(|| fixed(node), |i| x[i])).collect())
    }
}

/// The mixed boundary problem realizing `(B_s + c)^{-1}` on a ball `E`:
/// `div(t^{1-2s} grad w) = 0`, `w = 0` on `{t = 0} \ E` and on the
/// truncation boundary, and `-t^{1-2s} dw/dt + kappa_s c w = kappa_s g` on `E`.
#[derive(Debug, Clone)]
pub struct MixedProblem {
    mesh: HalfSpaceMesh,
    patch: f64,
    data: Vec<f64>,
    coefficient: Vec<f64>,
    solver: SolverKind,
}

impl MixedProblem {
    /// Neumann patch `|x| < patch` with data `g` sampled at the radial nodes.
    pub fn new(mesh: &HalfSpaceMesh, patch: f64, g: impl Fn(f64) -> f64) -> Result<Self> {
        let r = mesh.x[mesh.nx() - 1];
        if !(patch > 0.0 && patch <= r) {
            return Err(Error::Invalid(format!("patch radius {patch} must lie in (0, {r}]")));
        }
        let data: Vec<f64> = mesh.x.iter().map(|&x| if x < patch { g(x) } else { 0.0 }).collect();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("Neumann data must be finite on the patch".into()));
        }
        let coefficient = vec![0.0; mesh.nx()];
        Ok(MixedProblem { mesh: mesh.clone(), patch, data, coefficient, solver: SolverKind::Direct })
    }

    /// Zeroth-order coefficient per radial node (cell averages for singular
    /// potentials). Negative values are allowed as long as the problem stays
    /// coercive.
    pub fn with_coefficient(mut self, c: Vec<f64>) -> Result<Self> {
        if c.len() != self.mesh.nx() || c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("coefficient must be finite with one value per radial node".into()));
        }
        self.coefficient = c;
        Ok(self)
    }

    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }

    pub fn mesh(&self) -> &HalfSpaceMesh {
        &self.mesh
    }
    pub fn patch(&self) -> f64 {
        self.patch
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Solve a [`MixedProblem`]. The trace `w(0, .)` solves `B_s v + c v = g` on
/// the patch.
pub fn solve_mixed(prob: &MixedProblem) -> Result<HalfSpaceField> {
    TraceSolver::new(&prob.mesh, prob.patch, &prob.coefficient, prob.solver)?.solve_field(&prob.data)
}

/// Factorized mixed problem, reused across right-hand sides.
pub struct TraceSolver {
    system: System,
    kappa: f64,
    patch_nodes: usize,
}

impl TraceSolver {
    pub fn new(mesh: &HalfSpaceMesh, patch: f64, coefficient: &[f64], solver: SolverKind) -> Result<Self> {
        let kappa = kappa_s(mesh.s);
        let patch_nodes = mesh.x.iter().filter(|&&x| x < patch).count();
        if patch_nodes == 0 {
            return Err(Error::Invalid(format!("patch radius {patch} contains no mesh node")));
        }
        let diag: Vec<f64> = (0..mesh.nx())
            .map(|j| if j < patch_nodes { kappa * coefficient.get(j).copied().unwrap_or(0.0) * mesh.xcell[j] } else { 0.0 })
            .collect();
        let system = System::new(mesh, |j| j < patch_nodes, &diag, solver)?;
        Ok(TraceSolver { system, kappa, patch_nodes })
    }

    pub fn mesh(&self) -> &HalfSpaceMesh {
        &self.system.mesh
    }

    /// Number of radial nodes inside the patch.
    pub fn patch_nodes(&self) -> usize {
        self.patch_nodes
    }

    /// Field solving the problem with data `g` (one value per radial node).
    pub fn solve_field(&self, g: &[f64]) -> Result<HalfSpaceField> {
        let mesh = &self.system.mesh;
        let nx = mesh.nx();
        let src = |node: usize| if node < nx && node < self.patch_nodes { self.kappa * mesh.xcell[node] * g[node] } else { 0.0 };
        let values = self.system.solve(&|_| 0.0, &src)?;
        Ok(HalfSpaceField::on_mesh(mesh, values))
    }

    /// Trace `v` on the patch nodes.
    pub fn solve(&self, g: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_field(g)?.values[..self.patch_nodes].to_vec())
    }
}

/// Discrete harmonic extension with prescribed boundary values, and the
/// discrete Dirichlet-to-Neumann map it induces.
pub struct DirichletSolver {
    system: System,
    kappa: f64,
}

impl DirichletSolver {
    pub fn new(mesh: &HalfSpaceMesh, solver: SolverKind) -> Result<Self> {
        let system = System::new(mesh, |_| false, &[], solver)?;
        Ok(DirichletSolver { system, kappa: kappa_s(mesh.s) })
    }

    pub fn mesh(&self) -> &HalfSpaceMesh {
        &self.system.mesh
    }

    /// Extension of the boundary values `v` (one per radial node; the value
    /// at `R` is replaced by 0).
    pub fn extend(&self, v: &[f64]) -> Result<HalfSpaceField> {
        let mesh = &self.system.mesh;
        let nx = mesh.nx();
        if v.len() != nx {
            return Err(Error::Invalid(format!("{} boundary values for {nx} radial nodes", v.len())));
        }
        let fixed = |node: usize| if node < nx - 1 { v[node] } else { 0.0 };
        let values = self.system.solve(&fixed, &|_| 0.0)?;
        Ok(HalfSpaceField::on_mesh(mesh, values))
    }

    /// `B_s v` at the radial nodes: the discrete boundary flux of the
    /// extension divided by `kappa_s` and the cell measure.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let w = self.extend(v)?;
        Ok(self.apply_field(&w))
    }

    fn apply_field(&self, w: &HalfSpaceField) -> Vec<f64> {
        let mesh = &self.system.mesh;
        let nx = mesh.nx();
        let mut flux = vec![0.0; nx];
        for (a, b, c) in mesh.edges() {
            if a < nx {
                flux[a] += c * (w.values[a] - w.values[b]);
            }
            if b < nx {
                flux[b] += c * (w.values[b] - w.values[a]);
            }
        }
        flux.iter().zip(&mesh.xcell).map(|(f, m)| f / (self.kappa * m)).collect()
    }

    /// `<B_s v, phi>` with the discrete `L^2(r^{N-1} dr)` pairing times the
    /// sphere area.
    pub fn pairing(&self, v: &[f64], phi: &[f64]) -> Result<f64> {
        let bv = self.apply(v)?;
        let mesh = &self.system.mesh;
        Ok(sphere_area(mesh.n) * bv.iter().zip(phi).zip(&mesh.xcell).map(|((a, b), m)| a * b * m).sum::<f64>())
    }
}

/// Extension `Theta` of the ground state `|x|^e`, `e = (2s - N)/2 + alpha`.
/// It is homogeneous of degree `e`, so `Theta(t, r) = t^e psi(r / t)` with
/// `psi` tabulated once.
#[derive(Debug, Clone)]
pub struct GroundStateExtension {
    s: f64,
    e: f64,
    rho: Vec<f64>,
    log_psi: Vec<f64>,
}

impl GroundStateExtension {
    pub fn new(n: usize, s: f64, alpha: f64) -> Result<Self> {
        check_order(s)?;
        let e = 0.5 * (2.0 * s - n as f64) + alpha;
        if !(e < 0.0 && e + (n as f64) > 0.0) {
            return Err(Error::Domain(format!("ground-state exponent {e} outside (-N, 0)")));
        }
        let p = kernel_constants(n, s)?.p_ns;
        let rho = log_grid(1e-3, 1e3, 145);
        let psi: Vec<f64> = par::map_slice(&rho, |&x| p * power_convolution(n, s, e, x));
        if psi.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Invalid("ground-state extension is not positive".into()));
        }
        Ok(GroundStateExtension { s, e, rho, log_psi: psi.iter().map(|v| v.ln()).collect() })
    }

    pub fn exponent(&self) -> f64 {
        self.e
    }

    fn psi(&self, rho: f64) -> f64 {
        let (r, l) = (&self.rho, &self.log_psi);
        let last = r.len() - 1;
        if rho <= r[0] {
            return l[0].exp();
        }
        if rho >= r[last] {
            // psi = rho^e (1 - c rho^{-2s} + ...)
            let c = 1.0 - (l[last] - self.e * r[last].ln()).exp();
            return rho.powf(self.e) * (1.0 - c * (r[last] / rho).powf(2.0 * self.s));
        }
        let i = r.partition_point(|&x| x <= rho).clamp(1, last) - 1;
        let w = (rho / r[i]).ln() / (r[i + 1] / r[i]).ln();
        (l[i] + w * (l[i + 1] - l[i])).exp()
    }

    /// `Theta(t, r)`; infinite at the origin.
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        if t == 0.0 {
            r.powf(self.e)
        } else {
            t.powf(self.e) * self.psi(r / t)
        }
    }
}

// int_{S^{N-1}} (a - b <omega, e_1>)^{-m} d omega, with a > b >= 0
fn sphere_mean_power(n: usize, a: f64, b: f64, m: f64, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
    let x = b / a;
    match n {
        1 => (a - b).powf(-m) + (a + b).powf(-m),
        3 if x < 1e-4 => 4.0 * PI * a.powf(-m) * (1.0 + m * (m + 1.0) / 6.0 * x * x),
        3 => 2.0 * PI * ((a - b).powf(1.0 - m) - (a + b).powf(1.0 - m)) / (b * (m - 1.0)),
        _ => {
            let f = |th: f64| (a - b * th.cos()).powf(-m) * th.sin().powi(n as i32 - 2);
            // panels graded toward the peak at theta = 0
            let w = (2.0 * (a - b) / b.max(f64::MIN_POSITIVE)).sqrt();
            let mut breaks = vec![0.0];
            breaks.extend([w, 4.0 * w, 16.0 * w].into_iter().filter(|v| *v < PI));
            breaks.push(PI);
            let total: f64 = breaks
                .windows(2)
                .map(|p| {
                    let (c, h) = (0.5 * (p[0] + p[1]), 0.5 * (p[1] - p[0]));
                    h * gl.0.iter().zip(&gl.1).map(|(z, wt)| wt * f(c + h * z)).sum::<f64>()
                })
                .sum();
            sphere_area(n - 1) * total
        }
    }
}

// int |y|^e (1 + |x - y|^2)^{-(N+2s)/2} dy at |x| = rho
fn power_convolution(n: usize, s: f64, e: f64, rho: f64) -> f64 {
    let nf = n as f64;
    let m = 0.5 * (nf + 2.0 * s);
    let gl = quad::gauss_legendre(48);
    let kernel = |r: f64| sphere_mean_power(n, 1.0 + rho * rho + r * r, 2.0 * rho * r, m, &gl);
    // r = y^{1/(N+e)} removes the weight near the origin
    let k = nf + e;
    let r1 = 0.5 * rho.min(1.0);
    let head = quad::integrate(&|y: f64| kernel(y.powf(1.0 / k)), 0.0, r1.powf(k), 0.0, 1e-11).value / k;
    let far = 1e3 * rho.max(1.0);
    let mut breaks = vec![r1];
    breaks.extend([rho - 4.0, rho, rho + 4.0].into_iter().filter(|v| *v > r1 && *v < far));
    let decade = |x: f64| (x * 10.0).min(far);
    while *breaks.last().unwrap() < far {
        let next = decade(*breaks.last().unwrap());
        breaks.push(next);
    }
    let body = quad::adaptive(&|r: f64| r.powf(nf - 1.0 + e) * kernel(r), &breaks, 0.0, 1e-11, 4000).value;
    let tail = sphere_area(n) * far.powf(e - 2.0 * s) / (2.0 * s - e);
    head + body + tail
}

/// `(B_s - gamma_alpha |x|^{-2s} + c_k)^{-1}` on a ball in ground-state
/// form. With `v = Theta w` the extension problem becomes
/// `div(t^{1-2s} Theta^2 grad w) = 0` and the Hardy term cancels from the
/// boundary condition, leaving only `c_k = (gamma_alpha |x|^{-2s} - k)^+`
/// when the potential is truncated at `k`.
pub struct GroundStateSolver {
    system: System,
    kappa: f64,
    patch_nodes: usize,
    // int_cell |x|^e, per unit sphere area
    moment: Vec<f64>,
    trace: Vec<f64>,
}

impl GroundStateSolver {
    pub fn new(mesh: &HalfSpaceMesh, patch: f64, alpha: f64, cutoff: Option<f64>, solver: SolverKind) -> Result<Self> {
        let theta = GroundStateExtension::new(mesh.n, mesh.s, alpha)?;
        Self::with_extension(mesh, patch, &theta, alpha, cutoff, solver)
    }

    pub fn with_extension(
        mesh: &HalfSpaceMesh,
        patch: f64,
        theta: &GroundStateExtension,
        alpha: f64,
        cutoff: Option<f64>,
        solver: SolverKind,
    ) -> Result<Self> {
        let gamma = crate::constants::gamma_alpha(mesh.n, mesh.s, alpha)?;
        let (s, nf, e) = (mesh.s, mesh.n as f64, theta.exponent());
        let kappa = kappa_s(s);
        let patch_nodes = mesh.x.iter().filter(|&&x| x < patch).count();
        if patch_nodes == 0 {
            return Err(Error::Invalid(format!("patch radius {patch} contains no mesh node")));
        }
        let nx = mesh.nx();
        let edges = mesh
            .edges()
            .into_iter()
            .map(|(a, b, c)| {
                let t = 0.5 * (mesh.t[a / nx] + mesh.t[b / nx]);
                let r = 0.5 * (mesh.x[a % nx] + mesh.x[b % nx]);
                (a, b, c * theta.eval(t, r).powi(2))
            })
            .collect();
        let bounds = mesh.cell_bounds();
        let power = |lo: f64, hi: f64, q: f64| {
            if q == 0.0 {
                (hi / lo).ln()
            } else {
                (hi.powf(q) - lo.powf(q)) / q
            }
        };
        let moment: Vec<f64> = bounds.iter().map(|&(lo, hi)| power(lo, hi, e + nf)).collect();
        let trace = moment.iter().zip(&mesh.xcell).map(|(m, c)| m / c).collect();
        // int_cell (gamma r^{-2s} - k)^+ Theta^2 r^{N-1} dr
        let excess: Vec<f64> = match cutoff {
            None => vec![0.0; nx],
            Some(k) => {
                if !(k > 0.0) {
                    return Err(Error::Invalid(format!("cutoff {k} must be positive")));
                }
                let rk = (gamma / k).powf(0.5 / s);
                bounds
                    .iter()
                    .map(|&(lo, hi)| {
                        let top = hi.min(rk);
                        if lo >= top {
                            0.0
                        } else {
                            gamma * power(lo, top, 2.0 * alpha) - k * power(lo, top, 2.0 * alpha + 2.0 * s)
                        }
                    })
                    .collect()
            }
        };
        let free = |j: usize| j < patch_nodes && excess[j].is_finite();
        let diag: Vec<f64> = excess.iter().map(|c| if c.is_finite() { kappa * c } else { 0.0 }).collect();
        let system = System::with_edges(mesh, edges, free, &diag, solver)?;
        Ok(GroundStateSolver { system, kappa, patch_nodes, moment, trace })
    }

    /// Number of radial nodes inside the patch.
    pub fn patch_nodes(&self) -> usize {
        self.patch_nodes
    }

    /// `v` on the patch nodes for data `g`. The value at the origin is the
    /// cell average of `Theta w`.
    pub fn solve(&self, g: &[f64]) -> Result<Vec<f64>> {
        let nx = self.system.mesh.nx();
        let src = |node: usize| if node < nx && node < self.patch_nodes { self.kappa * self.moment[node] * g[node] } else { 0.0 };
        let w = self.system.solve(&|_| 0.0, &src)?;
        Ok((0..self.patch_nodes).map(|j| self.trace[j] * w[j]).collect())
    }
}

/// Parallel map over independent mixed problems.
pub fn solve_many(problems: &[MixedProblem]) -> Vec<Result<HalfSpaceField>> {
    par::map_slice(problems, solve_mixed)
}
