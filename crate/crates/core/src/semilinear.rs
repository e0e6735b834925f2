//! The semilinear problem `B_s u - gamma_alpha |x|^{-2s} u = u^p` in the unit
//! ball: monotone iteration for the linear problem with a Hardy potential,
//! constrained minimization, the explicit supercritical power solution, and
//! the near-origin mechanism behind nonexistence above `p_crit`.
//!
//! Everything discrete lives on the trace of a [`HalfSpaceMesh`]; the Neumann
//! patch is the unit ball and functions vanish outside it.

use crate::constants::{gamma_alpha, sphere_area, Params};
use crate::error::{Error, Result};
use crate::extension::{
    DirichletSolver, GroundStateExtension, GroundStateSolver, HalfSpaceMesh, MeshConfig, SolverKind, TraceSolver,
};
use crate::fit::{power_fit, PowerFit};
use crate::fraclap::frac_lap_radial;
use crate::par;
use crate::radial::RadialProfile;
use crate::report::{Check, Report};
use serde::Serialize;

/// Radius of the ball the semilinear problems are posed in.
pub const BALL: f64 = 1.0;

/// `b(x) = min(gamma |x|^{-2s}, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialSpec {
    pub gamma: f64,
    pub s: f64,
    pub cutoff: Option<f64>,
}

impl PotentialSpec {
    pub fn new(gamma: f64, s: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Invalid(format!("potential coefficient {gamma} must be finite and non-negative")));
        }
        Ok(PotentialSpec { gamma, s, cutoff: None })
    }

    /// `gamma_alpha |x|^{-2s}`.
    pub fn hardy(n: usize, s: f64, alpha: f64) -> Result<Self> {
        Self::new(gamma_alpha(n, s, alpha)?, s)
    }

    pub fn with_cutoff(mut self, k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::Invalid(format!("cutoff {k} must be positive")));
        }
        self.cutoff = Some(k);
        Ok(self)
    }

    pub fn exponent(&self) -> f64 {
        -2.0 * self.s
    }

    pub fn eval(&self, r: f64) -> f64 {
        let b = self.gamma * r.powf(self.exponent());
        self.cutoff.map_or(b, |k| b.min(k))
    }

    /// Averages over the dual cells of `mesh`, exact for the truncated power.
    pub fn on_mesh(&self, mesh: &HalfSpaceMesh) -> Result<Vec<f64>> {
        let nf = mesh.dim() as f64;
        let e = self.exponent();
        if !(e + nf > 0.0) {
            return Err(Error::Domain(format!("|x|^{e} is not locally integrable in dimension {}", mesh.dim())));
        }
        // radius where the power meets the cutoff
        let rk = match self.cutoff {
            Some(k) if self.gamma > 0.0 => (k / self.gamma).powf(1.0 / e),
            _ => 0.0,
        };
        let power = |a: f64, b: f64| self.gamma * (b.powf(e + nf) - a.powf(e + nf)) / (e + nf);
        let flat = |a: f64, b: f64| self.cutoff.unwrap_or(0.0) * (b.powf(nf) - a.powf(nf)) / nf;
        Ok(mesh
            .cell_bounds()
            .iter()
            .zip(mesh.cell_measure())
            .map(|(&(lo, hi), m)| {
                let split = rk.clamp(lo, hi);
                (flat(lo, split) + power(split, hi)) / m
            })
            .collect())
    }
}

/// `B_s` on the ball, for functions vanishing outside it, with the lumped
/// mass of the trace nodes.
pub struct BallOperator {
    dirichlet: DirichletSolver,
    nodes: usize,
    mass: Vec<f64>,
}

impl BallOperator {
    pub fn new(mesh: &HalfSpaceMesh) -> Result<Self> {
        let nodes = mesh.x().iter().filter(|&&x| x < BALL).count();
        let area = sphere_area(mesh.dim());
        let mass = mesh.cell_measure()[..nodes].iter().map(|m| area * m).collect();
        Ok(BallOperator { dirichlet: DirichletSolver::new(mesh, SolverKind::Direct)?, nodes, mass })
    }

    /// Number of trace nodes inside the ball.
    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn radii(&self) -> &[f64] {
        &self.dirichlet.mesh().x()[..self.nodes]
    }

    /// `B_s u` at the ball nodes.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut full = vec![0.0; self.dirichlet.mesh().x().len()];
        full[..self.nodes].copy_from_slice(&u[..self.nodes]);
        let mut out = self.dirichlet.apply(&full)?;
        out.truncate(self.nodes);
        Ok(out)
    }

    /// `sum m_j u_j v_j`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.mass.iter().zip(u).zip(v).map(|((m, a), b)| m * a * b).sum()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }
}

/// Options of the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterOptions {
    pub max_iter: usize,
    /// Stop when the sup-norm change is below `tol` times the sup norm.
    pub tol: f64,
    /// Divergence is declared when an iterate exceeds this multiple of the first.
    pub growth: f64,
}

impl Default for IterOptions {
    fn default() -> Self {
        IterOptions { max_iter: 500, tol: 1e-10, growth: 1e8 }
    }
}

/// Result of a discrete solve on the ball nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveOutcome {
    /// Ball nodes, starting at the origin.
    pub r: Vec<f64>,
    pub values: Vec<f64>,
    /// Lagrange multiplier of the constrained minimization.
    pub lambda: Option<f64>,
    /// Relative sup-norm change per iteration.
    pub increments: Vec<f64>,
    /// Smallest `v_n - v_{n-1}` over all nodes and iterations, relative to
    /// the sup norm; non-negative for a monotone sequence.
    pub min_step: Option<f64>,
    /// Relative weighted residual of the discrete equation.
    pub residual: f64,
    /// Fitted exponent of `v ~ r^e` on `[10 r_1, 100 r_1]`.
    pub exponent: Option<f64>,
}

impl SolveOutcome {
    pub fn iterations(&self) -> usize {
        self.increments.len()
    }

    /// The solution at the positive nodes.
    pub fn profile(&self, n: usize) -> Result<RadialProfile> {
        let i = self.r.iter().position(|&r| r > 0.0).unwrap_or(self.r.len());
        RadialProfile::new(n, self.r[i..].to_vec(), self.values[i..].to_vec())
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Power fit of `v` over the radial window `[lo, hi]`.
pub fn window_fit(r: &[f64], v: &[f64], lo: f64, hi: f64) -> Result<PowerFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = r.iter().zip(v).filter(|(r, _)| **r >= lo && **r <= hi).map(|(a, b)| (*a, *b)).unzip();
    if x.len() < 3 {
        return Err(Error::Invalid(format!("fewer than three nodes in [{lo}, {hi}]")));
    }
    power_fit(&x, &y)
}

fn near_origin_fit(r: &[f64], v: &[f64]) -> Option<f64> {
    let r1 = r.iter().copied().find(|&x| x > 0.0)?;
    window_fit(r, v, 10.0 * r1, 100.0 * r1).ok().map(|f| f.exponent)
}

// spline overshoot below zero is dropped when the tabulated data is non-negative
fn sample(f: &RadialProfile, r: &[f64]) -> Vec<f64> {
    let floor = if f.values().iter().all(|v| *v >= 0.0) { 0.0 } else { f64::NEG_INFINITY };
    r.iter().map(|&x| f.eval(x).max(floor)).collect()
}

fn relative_residual(op: &BallOperator, b: &[f64], v: &[f64], f: &[f64]) -> Result<f64> {
    let bv = op.apply(v)?;
    let res: Vec<f64> = (0..op.nodes()).map(|j| bv[j] - b[j] * v[j] - f[j]).collect();
    let scale = op.norm(f).max(op.norm(&bv));
    Ok(if scale > 0.0 { op.norm(&res) / scale } else { 0.0 })
}

/// `v_n = B_s^{-1}(b v_{n-1} + f)` from `v_0 = B_s^{-1} f`, with one
/// factorization.
pub fn monotone_solve(mesh: &HalfSpaceMesh, b: &PotentialSpec, f: &RadialProfile, opts: &IterOptions) -> Result<SolveOutcome> {
    let solver = TraceSolver::new(mesh, BALL, &[], SolverKind::Direct)?;
    let op = BallOperator::new(mesh)?;
    let m = op.nodes();
    let r = op.radii().to_vec();
    if f.values().iter().any(|v| *v < 0.0) {
        return Err(Error::Invalid("monotone iteration needs non-negative data".into()));
    }
    let fv = sample(f, &r);
    let bv = b.on_mesh(mesh)?;
    let mut v = solver.solve(&fv)?;
    let first = sup(&v);
    let mut increments = Vec::new();
    let mut min_step = f64::INFINITY;
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let rhs: Vec<f64> = (0..m).map(|j| bv[j] * v[j] + fv[j]).collect();
        let next = solver.solve(&rhs)?;
        let top = sup(&next);
        if !(top <= opts.growth * first.max(f64::MIN_POSITIVE)) {
            return Err(Error::Divergence(format!("iterate grew to {top:.3e} from {first:.3e}; the potential is not below the Hardy threshold")));
        }
        let step = next.iter().zip(&v).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
        let change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / top.max(f64::MIN_POSITIVE);
        min_step = min_step.min(step / top.max(f64::MIN_POSITIVE));
        increments.push(change);
        v = next;
        if change <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { iterations: opts.max_iter, residual: increments.last().copied().unwrap_or(f64::NAN) });
    }
    let residual = relative_residual(&op, &bv, &v, &fv)?;
    let exponent = near_origin_fit(&r, &v);
    Ok(SolveOutcome { r, values: v, lambda: None, increments, min_step: Some(min_step), residual, exponent })
}

/// `(B_s - b) v = f` in one coupled solve.
pub fn direct_solve(mesh: &HalfSpaceMesh, b: &PotentialSpec, f: &RadialProfile) -> Result<SolveOutcome> {
    let bv = b.on_mesh(mesh)?;
    let coef: Vec<f64> = bv.iter().map(|v| -v).collect();
    let solver = TraceSolver::new(mesh, BALL, &coef, SolverKind::Direct)?;
    let op = BallOperator::new(mesh)?;
    let r = op.radii().to_vec();
    let fv = sample(f, &r);
    let v = solver.solve(&fv)?;
    let residual = relative_residual(&op, &bv, &v, &fv)?;
    let exponent = near_origin_fit(&r, &v);
    Ok(SolveOutcome { r, values: v, lambda: None, increments: Vec::new(), min_step: None, residual, exponent })
}

/// `(B_s - min(gamma_alpha |x|^{-2s}, k)) v = f` in ground-state form, where
/// the Hardy term cancels exactly (see [`GroundStateSolver`]).
pub fn ground_state_solve(
    mesh: &HalfSpaceMesh,
    theta: &GroundStateExtension,
    alpha: f64,
    cutoff: Option<f64>,
    f: &RadialProfile,
) -> Result<SolveOutcome> {
    let solver = GroundStateSolver::with_extension(mesh, BALL, theta, alpha, cutoff, SolverKind::Direct)?;
    let op = BallOperator::new(mesh)?;
    let r = op.radii().to_vec();
    let fv = sample(f, &r);
    let v = solver.solve(&fv)?;
    let mut b = PotentialSpec::hardy(mesh.dim(), mesh.order(), alpha)?;
    if let Some(k) = cutoff {
        b = b.with_cutoff(k)?;
    }
    let residual = relative_residual(&op, &b.on_mesh(mesh)?, &v, &fv)?;
    let exponent = near_origin_fit(&r, &v);
    Ok(SolveOutcome { r, values: v, lambda: None, increments: Vec::new(), min_step: None, residual, exponent })
}

/// Constrained minimization of `E_alpha(u) = <B_s u, u> - gamma_alpha int |x|^{-2s} u^2`
/// over `int (u^+)^{p+1} = 1` by projected gradient descent in the energy
/// inner product. The returned values are the rescaled solution
/// `lambda^{1/(p-1)} u` of `B_s U - gamma_alpha |x|^{-2s} U = U^p`.
pub fn variational_minimize(params: &Params, mesh: &HalfSpaceMesh, opts: &IterOptions) -> Result<SolveOutcome> {
    params.validate()?;
    params.require_hardy()?;
    let p = params.p;
    if !(p < params.p_crit()) {
        return Err(Error::Domain(format!("p = {p} is not below p_crit = {}", params.p_crit())));
    }
    if mesh.dim() != params.n || mesh.order() != params.s {
        return Err(Error::Invalid("mesh does not match the parameters".into()));
    }
    let op = BallOperator::new(mesh)?;
    let m = op.nodes();
    let r = op.radii().to_vec();
    let base = PotentialSpec::hardy(params.n, params.s, params.alpha)?;
    // the critical coefficient is reached through truncations
    let ladder: Vec<Option<f64>> =
        if params.alpha == 0.0 { (1..=8).map(|i| Some(10f64.powi(i))).chain([None]).collect() } else { vec![None] };

    let e = 0.5 * (2.0 * params.s - params.n as f64) + params.alpha;
    let r1 = r[1];
    let mut u: Vec<f64> = r.iter().map(|&x| (x * x + r1 * r1).powf(0.5 * e) * (1.0 - x * x).max(0.0)).collect();
    let mut outcome = None;
    for k in ladder {
        let pot = match k {
            Some(k) => base.with_cutoff(k)?,
            None => base,
        };
        let bv = pot.on_mesh(mesh)?;
        let coef: Vec<f64> = bv.iter().map(|v| -v).collect();
        let solver = match TraceSolver::new(mesh, BALL, &coef, SolverKind::Direct) {
            Ok(s) => s,
            Err(Error::Coercivity(_)) if k.is_some() && outcome.is_some() => break,
            Err(err) => return Err(err),
        };
        let a = |v: &[f64]| -> Result<Vec<f64>> {
            let bu = op.apply(v)?;
            Ok((0..m).map(|j| bu[j] - bv[j] * v[j]).collect())
        };
        let energy = |v: &[f64]| -> Result<f64> { Ok(op.inner(&a(v)?, v)) };
        let project = |v: &[f64]| -> Option<Vec<f64>> {
            let plus: Vec<f64> = v.iter().map(|x| x.max(0.0)).collect();
            let g: f64 = op.inner(&plus.iter().map(|x| x.powf(p)).collect::<Vec<_>>(), &plus);
            (g > 0.0).then(|| plus.iter().map(|x| x * g.powf(-1.0 / (p + 1.0))).collect())
        };
        u = project(&u).ok_or_else(|| Error::Invalid("initial guess has no positive part".into()))?;
        let mut en = energy(&u)?;
        let mut increments = Vec::new();
        let mut converged = false;
        for _ in 0..opts.max_iter {
            let up: Vec<f64> = u.iter().map(|x| x.powf(p)).collect();
            let w = solver.solve(&up)?;
            let mu = 2.0 * op.inner(&u, &up) / op.inner(&w, &up);
            let grad: Vec<f64> = (0..m).map(|j| 2.0 * u[j] - mu * w[j]).collect();
            let mut tau = 0.5;
            let mut accepted = None;
            for _ in 0..40 {
                let trial: Vec<f64> = (0..m).map(|j| u[j] - tau * grad[j]).collect();
                if let Some(c) = project(&trial) {
                    let ec = energy(&c)?;
                    if ec <= en + 1e-14 * en.abs() {
                        accepted = Some((c, ec));
                        break;
                    }
                }
                tau *= 0.5;
            }
            let Some((next, ec)) = accepted else {
                // the energy no longer decreases in floating point
                converged = increments.last().is_some_and(|c| *c <= opts.tol.sqrt());
                break;
            };
            let change = next.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / sup(&next);
            increments.push(change);
            u = next;
            en = ec;
            if change <= opts.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence {
                iterations: increments.len(),
                residual: increments.last().copied().unwrap_or(f64::NAN),
            });
        }
        // at the constraint the multiplier equals the energy
        let lambda = en;
        let scale = lambda.powf(1.0 / (p - 1.0));
        let big: Vec<f64> = u.iter().map(|x| scale * x).collect();
        let bigp: Vec<f64> = big.iter().map(|x| x.powf(p)).collect();
        let residual = relative_residual(&op, &bv, &big, &bigp)?;
        let exponent = near_origin_fit(&r, &big);
        outcome = Some(SolveOutcome {
            r: r.clone(),
            values: big,
            lambda: Some(lambda),
            increments,
            min_step: None,
            residual,
            exponent,
        });
    }
    outcome.ok_or_else(|| Error::Coercivity("no admissible truncation of the potential".into()))
}

/// Euler-Lagrange consistency of a variational outcome: the energy of the
/// normalized minimizer against the multiplier fitted from the equation,
/// `<(B_s - b) u, u^p> / <u^p, u^p>`.
pub fn multiplier_gap(params: &Params, mesh: &HalfSpaceMesh, out: &SolveOutcome) -> Result<f64> {
    let lambda = out.lambda.ok_or_else(|| Error::Invalid("outcome carries no multiplier".into()))?;
    let op = BallOperator::new(mesh)?;
    let p = params.p;
    let u: Vec<f64> = out.values.iter().map(|x| x / lambda.powf(1.0 / (p - 1.0))).collect();
    let bv = PotentialSpec::hardy(params.n, params.s, params.alpha)?.on_mesh(mesh)?;
    let au: Vec<f64> = op.apply(&u)?.iter().zip(&bv).zip(&u).map(|((a, b), v)| a - b * v).collect();
    let up: Vec<f64> = u.iter().map(|x| x.powf(p)).collect();
    let fitted = op.inner(&au, &up) / op.inner(&up, &up);
    let energy = op.inner(&au, &u);
    Ok((energy - fitted).abs() / fitted.abs())
}

/// `w = mu r^{-2s/(p-1)}`, a singular solution of
/// `(-Delta)^s w - gamma_alpha |x|^{-2s} w = w^p` away from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExplicitSolution {
    pub n: usize,
    pub s: f64,
    pub alpha: f64,
    pub p: f64,
    /// `(N-2s)/2 - 2s/(p-1)`, the ground-state index matching the power.
    pub beta: f64,
    /// `(gamma_beta - gamma_alpha)^{1/(p-1)}`.
    pub mu: f64,
}

impl ExplicitSolution {
    pub fn exponent(&self) -> f64 {
        -2.0 * self.s / (self.p - 1.0)
    }

    pub fn profile(&self, r: &[f64]) -> Result<RadialProfile> {
        RadialProfile::power_law(self.n, r, self.mu, self.exponent())
    }

    /// Pointwise relative residual `|(-Delta)^s w - gamma_alpha r^{-2s} w - w^p| / w^p`
    /// at the nodes of `r` inside `[lo, hi]`.
    pub fn residual(&self, r: &[f64], lo: f64, hi: f64) -> Result<Vec<(f64, f64)>> {
        let w = self.profile(r)?;
        let lap = frac_lap_radial(&w, self.s)?;
        let ga = gamma_alpha(self.n, self.s, self.alpha)?;
        Ok(r.iter()
            .zip(w.values())
            .zip(lap.values())
            .filter(|((x, _), _)| **x >= lo && **x <= hi)
            .map(|((x, wv), l)| {
                let rhs = wv.powf(self.p);
                (*x, (l - ga * x.powf(-2.0 * self.s) * wv - rhs).abs() / rhs)
            })
            .collect())
    }
}

/// The explicit solution for `(N+2s)/(N-2s) <= p < p_crit(alpha)` and
/// `0 < alpha < (N-2s)/2`.
pub fn explicit_supercritical(params: &Params) -> Result<ExplicitSolution> {
    params.validate()?;
    params.require_hardy()?;
    let (n, s, alpha, p) = (params.n, params.s, params.alpha, params.p);
    if !(alpha > 0.0 && alpha < params.alpha_max()) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in (0, {})", params.alpha_max())));
    }
    let (lo, hi) = (params.p_sobolev(), params.p_crit());
    if !(p >= lo && p < hi) {
        return Err(Error::Domain(format!("p = {p} outside [{lo}, {hi})")));
    }
    let beta = (0.5 * (n as f64 - 2.0 * s) - 2.0 * s / (p - 1.0)).max(0.0);
    let gap = gamma_alpha(n, s, beta)? - gamma_alpha(n, s, alpha)?;
    if !(gap > 0.0) {
        return Err(Error::Domain(format!("gamma_beta - gamma_alpha = {gap} is not positive")));
    }
    Ok(ExplicitSolution { n, s, alpha, p, beta, mu: gap.powf(1.0 / (p - 1.0)) })
}

/// Largest relative deviation of the per-decade growth slopes at the
/// critical exponent.
pub const SLOPE_SPREAD: f64 = 0.10;

/// Settings of the nonexistence diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonexistenceConfig {
    pub mesh: MeshConfig,
    /// Cutoffs `k` of the potential; `None` is the untruncated potential.
    pub cutoffs: Vec<Option<f64>>,
    /// Radii `eps` at which `int_{eps < |x| < 1} v^{p+1}` is recorded.
    pub eps: Vec<f64>,
}

impl Default for NonexistenceConfig {
    fn default() -> Self {
        NonexistenceConfig {
            mesh: MeshConfig { first_radius: 1e-6, levels: 150, radial_nodes: 300, ..MeshConfig::default() },
            cutoffs: vec![Some(1e2), Some(1e3), Some(1e4), None],
            eps: (2..=5).map(|i| 10f64.powi(-i)).collect(),
        }
    }
}

/// Growth of `int_{eps < |x| < 1} v^{p+1}` as `eps` shrinks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Growth {
    pub p: f64,
    pub eps: Vec<f64>,
    pub integrals: Vec<f64>,
    /// Increase per unit of `ln(1/eps)` between consecutive radii.
    pub slopes: Vec<f64>,
}

impl Growth {
    /// Largest deviation of a slope from their mean, relative to the mean.
    pub fn spread(&self) -> f64 {
        let mean = self.slopes.iter().sum::<f64>() / self.slopes.len() as f64;
        self.slopes.iter().map(|s| (s / mean - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Everything the diagnostic computed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Nonexistence {
    pub target_exponent: f64,
    pub fit: PowerFit,
    pub fit_window: (f64, f64),
    /// `min_j (v_{k+1} - v_k)` over consecutive cutoffs, relative to sup.
    pub ladder_steps: Vec<f64>,
    pub critical: Growth,
    pub subcritical: Growth,
    pub r: Vec<f64>,
    pub values: Vec<f64>,
}

fn growth(op: &BallOperator, v: &[f64], p: f64, eps: &[f64]) -> Growth {
    let r = op.radii();
    let integrals: Vec<f64> = eps
        .iter()
        .map(|&e| (0..op.nodes()).filter(|&j| r[j] > e).map(|j| op.mass()[j] * v[j].max(0.0).powf(p + 1.0)).sum())
        .collect();
    let slopes = integrals.windows(2).zip(eps.windows(2)).map(|(i, e)| (i[1] - i[0]) / (e[0] / e[1]).ln()).collect();
    Growth { p, eps: eps.to_vec(), integrals, slopes }
}

/// Solve `B_s v - min(b, k) v = min(f, 1)` along the cutoff ladder, fit the
/// near-origin exponent of the last solution, and measure the growth of
/// `int_{eps < |x| < 1} v^{p+1}` at `p_crit(alpha)` and at `p_crit(alpha) - 1/2`.
pub fn nonexistence_diagnostic(params: &Params, f: &RadialProfile, cfg: &NonexistenceConfig) -> Result<(Report, Nonexistence)> {
    params.validate()?;
    params.require_hardy()?;
    if !(params.alpha < params.alpha_max()) {
        return Err(Error::Domain(format!("alpha must be below {}", params.alpha_max())));
    }
    if cfg.eps.len() < 3 || cfg.cutoffs.is_empty() {
        return Err(Error::Invalid("diagnostic needs at least three radii and one cutoff".into()));
    }
    let mesh = HalfSpaceMesh::from_config(params.n, params.s, &cfg.mesh)?;
    let gamma = params.gamma_alpha()?;
    for k in cfg.cutoffs.iter().flatten() {
        // the mesh must resolve the radius where the cutoff takes over
        let rk = (gamma / k).powf(0.5 / params.s);
        if rk < 10.0 * cfg.mesh.first_radius {
            return Err(Error::Invalid(format!("cutoff {k} acts below r = {rk:.2e}, finer than the mesh")));
        }
    }
    let g = f.map(|_, v| v.min(1.0))?;
    if g.values().iter().any(|v| *v < 0.0) || g.values().iter().all(|v| *v == 0.0) {
        return Err(Error::Invalid("data must be non-negative and nontrivial".into()));
    }
    let theta = GroundStateExtension::new(params.n, params.s, params.alpha)?;
    let sols: Vec<SolveOutcome> = par::map_slice(&cfg.cutoffs, |k| ground_state_solve(&mesh, &theta, params.alpha, *k, &g))
        .into_iter()
        .collect::<Result<_>>()?;
    let ladder_steps: Vec<f64> = sols
        .windows(2)
        .map(|w| {
            let top = sup(&w[1].values);
            w[1].values.iter().zip(&w[0].values).skip(1).map(|(a, b)| (a - b) / top).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let last = sols.last().expect("nonempty ladder");
    let r1 = last.r[1];
    let fit_window = (10.0 * r1, 100.0 * r1);
    let fit = window_fit(&last.r, &last.values, fit_window.0, fit_window.1)?;
    if fit.r2 < 0.99 {
        return Err(Error::FitQuality { r2: fit.r2 });
    }
    let target = 0.5 * (2.0 * params.s - params.n as f64) + params.alpha;
    let op = BallOperator::new(&mesh)?;
    let pc = params.p_crit();
    let critical = growth(&op, &last.values, pc, &cfg.eps);
    let subcritical = growth(&op, &last.values, pc - 0.5, &cfg.eps);

    let mut report = Report::new("nonexistence");
    report.config = serde_json::to_value(params).unwrap_or_default();
    report.push(Check::close("near-origin exponent / target", fit.exponent / target, 1.0, 0.05));
    report.push(Check::at_least("exponent fit R^2", fit.r2, 0.99, 0.0));
    let worst = ladder_steps.iter().copied().fold(f64::INFINITY, f64::min);
    report.push(Check::at_least("truncation ladder monotone (min relative step)", worst, 0.0, 1e-12));
    if params.alpha == 0.0 {
        // v^{p+1} |x|^{N-1} ~ |x|^{-1}: the integral grows like log(1/eps)
        let positive = critical.slopes.iter().all(|s| *s > 0.0);
        report.push(Check::holds("critical slopes positive", positive));
        report.push(Check::at_most("critical slope spread", critical.spread(), 0.0, SLOPE_SPREAD));
    } else {
        // v^{p-1} |x|^{2s} is scale invariant: an extra Hardy-type potential
        let e = (pc - 1.0) * fit.exponent + 2.0 * params.s;
        report.push(Check::close("exponent of v^(p-1) |x|^(2s)", e, 0.0, 0.05));
    }
    let first = subcritical.slopes[0];
    let tail = *subcritical.slopes.last().expect("slopes");
    report.push(Check::at_most("subcritical slope decay (last / first)", tail / first, 0.0, 0.5));
    Ok((report, Nonexistence {
        target_exponent: target,
        fit,
        fit_window,
        ladder_steps,
        critical,
        subcritical,
        r: last.r.clone(),
        values: last.values.clone(),
    }))
}

/// Relative sup-norm distance between two solutions on the same nodes.
pub fn relative_gap(a: &SolveOutcome, b: &SolveOutcome) -> f64 {
    let top = sup(&a.values).max(sup(&b.values));
    a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / top
}
