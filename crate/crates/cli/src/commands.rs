//! The subcommands. Each returns an [`Outcome`] and leaves writing to the caller.

use frachardy::constants::{gamma_alpha, kappa_s, m_alpha, sphere_area, Params};
use frachardy::extension::*;
use frachardy::fraclap::{frac_lap_radial, frac_lap_radial_at, gaussian_backends, ground_state, max_relative_deviation};
use frachardy::hardy::{ap_form_check, seminorm_squared, HardyReport, Trial, TrialFamily};
use frachardy::quad;
use frachardy::radial::{default_grid, log_grid, RadialProfile};
use frachardy::report::{Check, Report};
use frachardy::semilinear::*;
use frachardy::special::gamma;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{Method, RunConfig};
use crate::output::{num, Outcome, Table};
use crate::CliError;

fn params(cfg: &RunConfig) -> Result<Params, CliError> {
    Ok(Params::new(cfg.n, cfg.s)?.with_alpha(cfg.alpha)?.with_p(cfg.p)?.with_q(cfg.q)?)
}

fn outcome(report: Report, tables: Vec<Table>, summary: Vec<String>) -> Outcome {
    Outcome { report, tables, summary }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn gaussian(n: usize) -> Result<RadialProfile, CliError> {
    Ok(RadialProfile::from_fn(n, &default_grid(), |r| (-0.5 * r * r).exp())?)
}

fn mesh(cfg: &RunConfig) -> Result<HalfSpaceMesh, CliError> {
    let mc = MeshConfig { radius: cfg.r_max(), ..MeshConfig::resolving(cfg.r_min(), cfg.grid_nodes()) };
    Ok(HalfSpaceMesh::from_config(cfg.n, cfg.s, &mc)?)
}

fn bump_data(n: usize) -> Result<RadialProfile, CliError> {
    Ok(RadialProfile::from_fn(n, &log_grid(1e-6, 1.0, 400), |r| Trial::Bump { radius: 0.9 }.value(n, 0.5, r))?)
}

pub fn constants(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(cfg)?;
    let c = p.constants()?;
    let tol = cfg.tol();
    let mut report = Report::new("constants");
    let mut table = Table::new("constants", &["N", "s", "alpha", "gamma0", "gamma_alpha", "m_alpha", "kappa_s", "c_sn", "p_ns", "p_sobolev", "p_crit"]);
    table.push_numbers(&[cfg.n as f64, cfg.s, cfg.alpha, c.gamma0, c.gamma_alpha, c.m_alpha, c.kappa_s, c.c_sn, c.p_ns, p.p_sobolev(), p.p_crit()]);
    let prod = m_alpha(cfg.n, cfg.s, cfg.alpha)? * m_alpha(cfg.n, cfg.s, -cfg.alpha)?;
    report.push(Check::close("gamma_alpha - m_alpha m_-alpha", c.gamma_alpha - prod, 0.0, tol));
    let mut tables = vec![table];
    let mut summary = vec![
        format!("gamma0 = {}", c.gamma0),
        format!("gamma_alpha = {}", c.gamma_alpha),
        format!("kappa_s = {}", c.kappa_s),
        format!("m_alpha = {}", c.m_alpha),
    ];
    if let Some(sweep) = cfg.alpha_sweep {
        let alphas = sweep.values();
        let mut sw = Table::new("constants_sweep", &["alpha", "gamma_alpha", "m_alpha", "m_minus_alpha"]);
        let mut gammas = Vec::new();
        let mut worst = 0.0f64;
        for &a in &alphas {
            let g = gamma_alpha(cfg.n, cfg.s, a)?;
            let (mp, mm) = (m_alpha(cfg.n, cfg.s, a)?, m_alpha(cfg.n, cfg.s, -a)?);
            worst = worst.max((g - mp * mm).abs());
            gammas.push(g);
            sw.push_numbers(&[a, g, mp, mm]);
        }
        report.push(Check::close("sweep: max |gamma_alpha - m_alpha m_-alpha|", worst, 0.0, tol));
        report.push(Check::holds("sweep: gamma_alpha strictly decreasing", gammas.windows(2).all(|w| w[1] < w[0])));
        summary.push(format!("sweep: {} values of alpha in [{}, {}]", sweep.count, sweep.start, sweep.end));
        tables.push(sw);
    }
    Ok(outcome(report, tables, summary))
}

fn check_groundstate(cfg: &RunConfig, report: &mut Report, tables: &mut Vec<Table>) -> Result<(), CliError> {
    let g = log_grid(cfg.r_min(), cfg.r_max(), cfg.grid_nodes());
    let th = ground_state(cfg.n, cfg.s, cfg.alpha, &g)?;
    let lap = frac_lap_radial(&th, cfg.s)?;
    let ga = gamma_alpha(cfg.n, cfg.s, cfg.alpha)?;
    let mut t = Table::new("groundstate_residual", &["r", "frac_lap", "hardy_term", "residual"]);
    let mut worst = 0.0f64;
    for ((r, l), u) in lap.r().iter().zip(lap.values()).zip(th.values()) {
        let h = ga * r.powf(-2.0 * cfg.s) * u;
        let res = (l - h).abs() / h.abs().max(l.abs());
        if (0.1..=10.0).contains(r) {
            worst = worst.max(res);
        }
        t.push_numbers(&[*r, *l, h, res]);
    }
    report.push(Check::at_most("groundstate: max relative residual on [0.1, 10]", worst, 0.0, cfg.tol()));
    tables.push(t);
    Ok(())
}

fn check_backends(cfg: &RunConfig, report: &mut Report, tables: &mut Vec<Table>) -> Result<(), CliError> {
    let xs = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
    let b = gaussian_backends(cfg.n, cfg.s, &xs)?;
    let mut t = Table::new("backends", &["x", "hankel", "fft", "singular"]);
    for v in &b {
        t.push_numbers(&[v.x, v.hankel, v.fft, v.singular]);
    }
    report.push(Check::at_most("backends: max relative deviation", max_relative_deviation(&b), 0.0, 1e-3));
    let nf = cfg.n as f64;
    let exact = 2f64.powf(cfg.s) * gamma(cfg.s + 0.5 * nf)? / gamma(0.5 * nf)?;
    let origin = frac_lap_radial_at(&gaussian(cfg.n)?, cfg.s, &[0.0])?[0];
    report.push(Check::close("backends: Gaussian at origin / closed form", origin / exact, 1.0, 1e-4));
    tables.push(t);
    Ok(())
}

fn check_mass(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let (n, s) = (cfg.n, cfg.s);
    let mut worst = 0.0f64;
    for &t in &[0.01, 1.0, 30.0] {
        let f = |r: f64| sphere_area(n) * r.powf(n as f64 - 1.0) * poisson_kernel(n, s, t, r).unwrap_or(f64::NAN);
        let (lo, hi) = (1e-8 * t, 1e8 * t);
        let body = quad::adaptive(&f, &log_grid(lo, hi, 161), 0.0, 1e-13, 20_000).value;
        let head = quad::tanh_sinh(&|_x: f64, d: f64, _r: f64| f(d), 0.0, lo, 1e-14).value;
        let tail = sphere_area(n) * poisson_kernel(n, s, 1.0, 0.0)? * t.powf(2.0 * s) * hi.powf(-2.0 * s) / (2.0 * s);
        worst = worst.max((head + body + tail - 1.0).abs());
    }
    report.push(Check::close("mass: max |Poisson kernel mass - 1|", worst, 0.0, 1e-8));
    Ok(())
}

fn verify_mesh(cfg: &RunConfig) -> Result<HalfSpaceMesh, CliError> {
    Ok(HalfSpaceMesh::from_config(cfg.n, cfg.s, &MeshConfig::default())?)
}

fn check_dtn(cfg: &RunConfig, report: &mut Report, tables: &mut Vec<Table>) -> Result<(), CliError> {
    let mesh = verify_mesh(cfg)?;
    let ds = DirichletSolver::new(&mesh, SolverKind::Direct)?;
    let v: Vec<f64> = mesh.x().iter().map(|r| (-0.5 * r * r).exp()).collect();
    let inner: Vec<f64> = mesh.x().iter().copied().take_while(|&r| r <= 4.0).collect();
    let lap = frac_lap_radial_at(&gaussian(cfg.n)?, cfg.s, &inner)?;
    let d = dtn_trace(&ds.extend(&v)?)?;
    let k = kappa_s(cfg.s);
    let mut t = Table::new("dtn", &["x", "dtn", "kappa_frac_lap"]);
    let mut worst = 0.0f64;
    for ((x, a), b) in d.r().iter().zip(d.values()).zip(&lap[1..]) {
        worst = worst.max((a - k * b).abs());
        t.push_numbers(&[*x, *a, k * b]);
    }
    report.push(Check::at_most("dtn: max |DtN - kappa_s frac_lap| / sup", worst / (k * sup(&lap)), 0.0, 0.01));
    tables.push(t);
    Ok(())
}

fn check_energy(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let mesh = verify_mesh(cfg)?;
    let ds = DirichletSolver::new(&mesh, SolverKind::Direct)?;
    let bump = |r: f64| Trial::Bump { radius: 1.0 }.value(1, 0.5, r);
    let v: Vec<f64> = mesh.x().iter().map(|r| bump(*r)).collect();
    let e = weighted_energy(&ds.extend(&v)?)?;
    let u = RadialProfile::from_fn(cfg.n, &log_grid(1e-4, 1.0, 400), bump)?;
    let want = kappa_s(cfg.s) * seminorm_squared(&u, cfg.s)?;
    report.push(Check::close("energy: extension energy / (kappa_s seminorm^2)", (e.value + e.tail) / want, 1.0, 0.02));
    Ok(())
}

fn check_maximum(cfg: &RunConfig, report: &mut Report) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.unwrap_or(7));
    let mc = MeshConfig { levels: 40, radial_nodes: 60, radius: 20.0, first_radius: 1e-2, ..Default::default() };
    let mut violations = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let s = rng.gen_range(0.1..0.9);
        let mesh = HalfSpaceMesh::from_config(n, s, &mc)?;
        let patch = rng.gen_range(0.5..5.0);
        let amp: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let g = |r: f64| amp.iter().enumerate().map(|(i, a)| a * (1.0 + (i as f64 * r).cos())).sum::<f64>();
        let c: f64 = rng.gen_range(0.0..2.0);
        let prob = MixedProblem::new(&mesh, patch, g)?.with_coefficient(vec![c; mesh.x().len()])?;
        violations += solve_mixed(&prob)?.values().iter().filter(|v| **v < 0.0).count();
    }
    report.push(Check::close("maximum: negative nodes over 100 random problems", violations as f64, 0.0, 0.0));
    Ok(())
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    params(cfg)?.require_hardy()?;
    let mut report = Report::new("verify");
    let mut tables = Vec::new();
    for name in &cfg.checks {
        match name.as_str() {
            "groundstate" => check_groundstate(cfg, &mut report, &mut tables)?,
            "backends" => check_backends(cfg, &mut report, &mut tables)?,
            "mass" => check_mass(cfg, &mut report)?,
            "dtn" => check_dtn(cfg, &mut report, &mut tables)?,
            "energy" => check_energy(cfg, &mut report)?,
            "maximum" => check_maximum(cfg, &mut report)?,
            other => return Err(CliError::Invalid(format!("unknown check {other:?}"))),
        }
    }
    Ok(outcome(report, tables, Vec::new()))
}

/// Solver path for `(alpha, p)`: explicit strictly above the Sobolev power,
/// variational otherwise.
pub fn solve_path(n: usize, s: f64, alpha: f64, p: f64) -> Method {
    let nf = n as f64;
    let sobolev = (nf + 2.0 * s) / (nf - 2.0 * s);
    if alpha > 0.0 && p > sobolev {
        Method::Explicit
    } else {
        Method::Variational
    }
}

fn profile_table(r: &[f64], v: &[f64]) -> Table {
    let mut t = Table::new("profile", &["r", "u"]);
    for (a, b) in r.iter().zip(v) {
        t.push_numbers(&[*a, *b]);
    }
    t
}

pub fn solve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(cfg)?;
    p.require_hardy()?;
    let method = cfg.method.unwrap_or(Method::Auto);
    if method != Method::Monotone && p.p >= p.p_crit() {
        return Err(CliError::Forbidden(format!(
            "no positive solution exists for p = {} >= p_crit(alpha) = {:.6} (N = {}, s = {}, alpha = {}): \
             the nonexistence theorem forces u = 0 near the origin",
            p.p,
            p.p_crit(),
            p.n,
            p.s,
            p.alpha
        )));
    }
    let mut report = Report::new("solve");
    let tol = cfg.tol();
    match method {
        Method::Explicit => {
            let e = explicit_supercritical(&p)?;
            let r = log_grid(cfg.r_min(), cfg.r_max(), cfg.grid_nodes());
            let res = e.residual(&r, 0.1, 10.0)?;
            let worst = res.iter().map(|x| x.1).fold(0.0, f64::max);
            report.push(Check::at_most("explicit: max pointwise relative residual on [0.1, 10]", worst, 0.0, tol));
            let prof = e.profile(&r)?;
            let mut rt = Table::new("residual", &["r", "residual"]);
            for (x, v) in &res {
                rt.push_numbers(&[*x, *v]);
            }
            let summary = vec![
                "path: explicit".to_string(),
                format!("beta = {}", e.beta),
                format!("mu = {}", e.mu),
                format!("exponent = {}", e.exponent()),
            ];
            Ok(outcome(report, vec![profile_table(prof.r(), prof.values()), rt], summary))
        }
        Method::Variational | Method::Auto => {
            let m = mesh(cfg)?;
            let out = variational_minimize(&p, &m, &IterOptions::default())?;
            let lambda = out.lambda.unwrap_or(f64::NAN);
            report.push(Check::holds("variational: solution non-negative", out.values.iter().all(|v| *v >= 0.0)));
            report.push(Check::at_least("variational: lambda", lambda, 0.0, 0.0));
            report.push(Check::at_most("variational: relative residual of rescaled equation", out.residual, 0.0, tol));
            let summary = vec![
                "path: variational".to_string(),
                format!("lambda = {lambda}"),
                format!("iterations = {}", out.iterations()),
                format!("multiplier gap = {}", multiplier_gap(&p, &m, &out)?),
            ];
            Ok(outcome(report, vec![profile_table(&out.r, &out.values)], summary))
        }
        Method::Monotone => {
            let m = mesh(cfg)?;
            let b = PotentialSpec::hardy(p.n, p.s, p.alpha)?;
            let opts = IterOptions { tol: 1e-12, max_iter: 2000, ..Default::default() };
            let f = bump_data(p.n)?;
            let mono = monotone_solve(&m, &b, &f, &opts)?;
            let direct = direct_solve(&m, &b, &f)?;
            report.push(Check::at_least("monotone: min relative step", mono.min_step.unwrap_or(f64::NAN), 0.0, 1e-11));
            report.push(Check::at_most("monotone: gap to direct solve", relative_gap(&mono, &direct), 0.0, 1e-6));
            report.push(Check::at_most("monotone: relative residual", mono.residual, 0.0, tol));
            let mut inc = Table::new("increments", &["iteration", "change"]);
            for (i, c) in mono.increments.iter().enumerate() {
                inc.push_numbers(&[(i + 1) as f64, *c]);
            }
            let summary = vec!["path: monotone".to_string(), format!("iterations = {}", mono.iterations())];
            Ok(outcome(report, vec![profile_table(&mono.r, &mono.values), inc], summary))
        }
    }
}

pub fn nonexistence(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(cfg)?;
    let d = NonexistenceConfig::default();
    let res = MeshConfig::resolving(cfg.r_min(), cfg.grid_nodes());
    let nc = NonexistenceConfig {
        mesh: MeshConfig { radius: cfg.r_max(), levels: res.levels.max(d.mesh.levels), ..res },
        ..d
    };
    let (report, out) = nonexistence_diagnostic(&p, &bump_data(p.n)?, &nc)?;
    let mut growth = Table::new("growth", &["eps", "critical_integral", "subcritical_integral"]);
    for ((e, a), b) in out.critical.eps.iter().zip(&out.critical.integrals).zip(&out.subcritical.integrals) {
        growth.push_numbers(&[*e, *a, *b]);
    }
    let summary = vec![
        format!("target exponent = {}", out.target_exponent),
        format!("fitted exponent = {} on [{}, {}]", out.fit.exponent, out.fit_window.0, out.fit_window.1),
        format!("p_crit = {}", out.critical.p),
        format!("critical slopes = {:?}", out.critical.slopes),
        format!("subcritical slopes = {:?}", out.subcritical.slopes),
    ];
    Ok(outcome(report, vec![profile_table(&out.r, &out.values), growth], summary))
}

fn family(cfg: &RunConfig) -> Result<TrialFamily, CliError> {
    let size = cfg.family_size.unwrap_or(20);
    Ok(TrialFamily::desk(cfg.n, cfg.s, size, cfg.seed.unwrap_or(7))?.with_density(cfg.grid_nodes()))
}

fn trial_cells(t: &Trial) -> Vec<serde_json::Value> {
    match *t {
        Trial::Cap { eps } => vec![json!("cap"), num(eps), serde_json::Value::Null],
        Trial::Bump { radius } => vec![json!("bump"), num(radius), serde_json::Value::Null],
        Trial::Ring { center, width } => vec![json!("ring"), num(center), num(width)],
    }
}

pub fn hardy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(cfg)?;
    p.require_hardy()?;
    let fam = family(cfg)?;
    let rep = HardyReport::quotients(&fam)?;
    let g0 = rep.gamma0;
    let mut report = Report::new("hardy");
    report.push(Check::at_least("min Rayleigh quotient", rep.infimum, g0, cfg.tol()));
    report.push(Check::close("best constant estimate / gamma0", rep.infimum / g0, 1.0, 0.10));

    let g = log_grid(1e-4, 1e4, 400);
    let th = ground_state(p.n, p.s, p.alpha, &g)?;
    let ga = p.gamma_alpha()?;
    let e2 = -2.0 * p.s;
    let with_ga = ap_form_check(&th, &RadialProfile::from_fn(p.n, &g, |r| ga * r.powf(e2))?, p.s, &fam)?;
    for c in &with_ga.checks {
        report.push(Check { name: format!("AP with gamma_alpha: {}", c.name), ..c.clone() });
    }
    let over = g0 + 0.2;
    let with_over = ap_form_check(&th, &RadialProfile::from_fn(p.n, &g, |r| over * r.powf(e2))?, p.s, &fam)?;
    report.push(Check::holds("AP with gamma0 + 0.2 fails", !with_over.passed()));

    let mut t = Table::new("quotients", &["index", "kind", "param", "width", "quotient"]);
    for (i, (m, q)) in fam.members.iter().zip(&rep.quotients).enumerate() {
        let mut row = vec![json!(i)];
        row.extend(trial_cells(m));
        row.push(num(*q));
        t.push(row);
    }
    let summary = vec![format!("gamma0 = {g0}"), format!("gamma_alpha = {ga}"), format!("best estimate = {}", rep.infimum)];
    Ok(outcome(report, vec![t], summary))
}

pub fn remainder(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(cfg)?;
    p.require_hardy()?;
    let fam = family(cfg)?;
    let rep = HardyReport::with_remainders(&fam, p.q)?;
    let mut report = Report::new("remainder");
    let ratios: Vec<f64> = rep.remainders.iter().filter_map(|r| r.ratio).collect();
    report.push(Check::holds("every non-extremal ratio positive", !ratios.is_empty() && ratios.iter().all(|r| *r > 0.0)));
    let inf = rep.ratio_infimum().unwrap_or(f64::NAN);
    let mut summary = vec![
        format!("tau = {}", rep.tau.unwrap_or(f64::NAN)),
        format!("ratio infimum = {inf}"),
        format!("extremal trials = {}", rep.remainders.len() - ratios.len()),
    ];
    if cfg.refine {
        let fine = HardyReport::with_remainders(&fam.clone().with_density(2 * fam.nodes_per_decade), p.q)?;
        let inf2 = fine.ratio_infimum().unwrap_or(f64::NAN);
        report.push(Check::close("refined / coarse ratio infimum", inf2 / inf, 1.0, cfg.tol()));
        summary.push(format!("refined ratio infimum = {inf2}"));
    }
    let mut t = Table::new("remainder", &["index", "kind", "param", "width", "e0", "norm2", "ratio"]);
    for (i, (m, r)) in fam.members.iter().zip(&rep.remainders).enumerate() {
        let mut row = vec![json!(i)];
        row.extend(trial_cells(m));
        row.extend([num(r.e0), num(r.norm2), r.ratio.map(num).unwrap_or(serde_json::Value::Null)]);
        t.push(row);
    }
    Ok(outcome(report, vec![t], summary))
}

pub fn extend(cfg: &RunConfig) -> Result<Outcome, CliError> {
    params(cfg)?;
    let m = mesh(cfg)?;
    let ds = DirichletSolver::new(&m, SolverKind::Direct)?;
    let v: Vec<f64> = m.x().iter().map(|r| (-0.5 * r * r).exp()).collect();
    let w = ds.extend(&v)?;
    let d = dtn_trace(&w)?;
    let k = kappa_s(cfg.s);
    let g = gaussian(cfg.n)?;
    let inner: Vec<(f64, f64)> = d.r().iter().copied().zip(d.values().iter().copied()).filter(|(x, _)| *x <= 4.0).collect();
    let xs: Vec<f64> = inner.iter().map(|x| x.0).collect();
    let lap = frac_lap_radial_at(&g, cfg.s, &xs)?;
    let worst = inner.iter().zip(&lap).map(|((_, a), b)| (a - k * b).abs()).fold(0.0, f64::max);
    let mut report = Report::new("extend");
    report.push(Check::at_most("max |DtN - kappa_s frac_lap| / sup", worst / (k * sup(&lap)), 0.0, cfg.tol()));
    let e = weighted_energy(&w)?;
    let fine = RadialProfile::from_fn(cfg.n, &log_grid(1e-4, 9.0, 600), |r| (-0.5 * r * r).exp())?;
    let want = k * seminorm_squared(&fine, cfg.s)?;
    report.push(Check::close("extension energy / (kappa_s seminorm^2)", (e.value + e.tail) / want, 1.0, 0.02));

    let mut field = Table::new("field", &["t", "x", "value"]);
    for (kk, t) in w.t().iter().enumerate() {
        for (j, x) in w.x().iter().enumerate() {
            field.push_numbers(&[*t, *x, w.at(kk, j)]);
        }
    }
    let mut trace = Table::new("trace", &["x", "dtn", "kappa_frac_lap"]);
    for ((x, a), b) in inner.iter().zip(&lap) {
        trace.push_numbers(&[*x, *a, k * b]);
    }
    let summary = vec![format!("kappa_s = {k}"), format!("mesh: {} levels x {} radial nodes", m.t().len(), m.x().len())];
    Ok(outcome(report, vec![field, trace], summary))
}
