//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test --release -p frachardy-cli --test acceptance`.

use frachardy::constants::{gamma0, gamma_alpha, kappa_s, m_alpha, sphere_area, Params};
use frachardy::extension::*;
use frachardy::fraclap::{frac_lap_radial, frac_lap_radial_at, gaussian_backends, ground_state, max_relative_deviation};
use frachardy::hardy::{ap_form_check, quotients, seminorm_squared, HardyReport, Trial, TrialFamily};
use frachardy::par;
use frachardy::quad;
use frachardy::radial::{default_grid, log_grid, RadialProfile};
use frachardy::semilinear::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

// criterion 1
const CONST_TOL: f64 = 1e-12;
const SWEEP_SAMPLES: usize = 50;
// criterion 2
const BACKEND_TOL: f64 = 1e-3;
const ORIGIN_TOL: f64 = 1e-4;
// criterion 3
const GROUND_TOL: f64 = 1e-3;
// criterion 4
const MASS_TOL: f64 = 1e-8;
const DTN_TOL: f64 = 0.01;
const ENERGY_TOL: f64 = 0.02;
const RANDOM_PROBLEMS: usize = 100;
// criterion 5
const MONO_STEP_FLOOR: f64 = -1e-11;
const MONO_GAP_TOL: f64 = 1e-6;
// criterion 6
const VAR_RESIDUAL_TOL: f64 = 1e-3;
// criterion 7
const EXPLICIT_RESIDUAL_TOL: f64 = 1e-3;
const EXPLICIT_CONST_TOL: f64 = 1e-10;
// criterion 8
const EXPONENT_TOL: f64 = 0.05;
const SLOPE_TOL: f64 = 0.10;
const CONVERGENT_DECAY: f64 = 0.5;
// criterion 9
const QUOTIENT_SLACK: f64 = 0.01;
const BEST_TOL: f64 = 0.10;
const OVERSHOOT: f64 = 0.2;
// criterion 10
const FAMILY_SIZE: usize = 20;
const REFINE_TOL: f64 = 0.20;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type ExitCase<'a> = (Vec<&'a str>, Vec<(&'a str, &'a str)>, i32, Option<&'a str>);

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn gaussian(n: usize) -> RadialProfile {
    RadialProfile::from_fn(n, &default_grid(), |r| (-0.5 * r * r).exp()).unwrap()
}

// gamma_alpha from the Gamma function alone
fn gamma_alpha_oracle(n: usize, s: f64, a: f64) -> f64 {
    let nf = n as f64;
    4f64.powf(s) * gamma((nf + 2.0 * s + 2.0 * a) / 4.0) * gamma((nf + 2.0 * s - 2.0 * a) / 4.0)
        / (gamma((nf - 2.0 * s - 2.0 * a) / 4.0) * gamma((nf - 2.0 * s + 2.0 * a) / 4.0))
}

fn constants() -> Outcome {
    let g = gamma0(3, 0.5);
    let e_two_pi = (g - 2.0 / std::f64::consts::PI).abs();
    let e_oracle = [(1, 0.3), (2, 0.5), (3, 0.5), (4, 0.8), (5, 0.25)]
        .iter()
        .map(|&(n, s)| (gamma0(n, s) / gamma_alpha_oracle(n, s, 0.0) - 1.0).abs())
        .fold(0.0, f64::max);
    let kappa = kappa_s(0.5);
    let top = 0.99;
    let alphas: Vec<f64> = (0..SWEEP_SAMPLES).map(|i| top * i as f64 / (SWEEP_SAMPLES - 1) as f64).collect();
    let gs: Vec<f64> = alphas.iter().map(|&a| gamma_alpha(3, 0.5, a).unwrap()).collect();
    let e_prod = alphas
        .iter()
        .zip(&gs)
        .map(|(&a, g)| (g - m_alpha(3, 0.5, a).unwrap() * m_alpha(3, 0.5, -a).unwrap()).abs())
        .fold(0.0, f64::max);
    let decreasing = gs.windows(2).all(|w| w[1] < w[0]);
    let mut trend = true;
    for n in 3..=5 {
        let limit = (n as f64 - 2.0).powi(2) / 4.0;
        let d: Vec<f64> = [0.9, 0.99, 0.999].iter().map(|&s| (gamma0(n, s) - limit).abs()).collect();
        trend &= d[1] < d[0] && d[2] < d[1] && d[2] < 0.01 * limit.max(1.0);
    }
    let ok = e_two_pi <= CONST_TOL && e_oracle <= CONST_TOL && kappa == 1.0 && e_prod <= CONST_TOL && decreasing && trend;
    verdict(
        ok,
        format!(
            "|gamma0-2/pi|={e_two_pi:.1e} oracle={e_oracle:.1e} kappa_1/2={kappa} |gamma-m m|={e_prod:.1e} decreasing={decreasing} s->1 trend={trend}"
        ),
    )
}

fn backends() -> Outcome {
    let xs = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
    let mut worst = 0.0f64;
    let mut origin = 0.0f64;
    for n in 1..=3 {
        for &s in &[0.25, 0.5, 0.75] {
            let b = gaussian_backends(n, s, &xs).map_err(|e| e.to_string())?;
            worst = worst.max(max_relative_deviation(&b));
            let nf = n as f64;
            let exact = 2f64.powf(s) * gamma(s + 0.5 * nf) / gamma(0.5 * nf);
            let v = frac_lap_radial_at(&gaussian(n), s, &[0.0]).map_err(|e| e.to_string())?[0];
            origin = origin.max((v / exact - 1.0).abs());
        }
    }
    verdict(worst <= BACKEND_TOL && origin <= ORIGIN_TOL, format!("backend deviation {worst:.2e}, origin error {origin:.2e}"))
}

fn ground_state_identity() -> Outcome {
    let g = log_grid(1e-3, 1e3, 256);
    let mut worst = 0.0f64;
    for &alpha in &[0.0, 0.3, 0.7] {
        let th = ground_state(3, 0.5, alpha, &g).unwrap();
        let lap = frac_lap_radial(&th, 0.5).map_err(|e| e.to_string())?;
        let ga = gamma_alpha(3, 0.5, alpha).unwrap();
        for ((r, l), u) in lap.r().iter().zip(lap.values()).zip(th.values()) {
            if (0.1..=10.0).contains(r) {
                let want = ga / r * u;
                worst = worst.max((l - want).abs() / want);
            }
        }
    }
    verdict(worst <= GROUND_TOL, format!("max relative residual {worst:.2e} on [0.1, 10]"))
}

fn extension() -> Outcome {
    let cases = [(1, 0.25), (2, 0.5), (3, 0.5), (2, 0.75), (3, 0.25)];
    let mut mass = 0.0f64;
    for &(n, s) in &cases {
        for &t in &[0.01, 1.0, 30.0] {
            let f = |r: f64| sphere_area(n) * r.powf(n as f64 - 1.0) * poisson_kernel(n, s, t, r).unwrap();
            let (lo, hi) = (1e-8 * t, 1e8 * t);
            let body = quad::adaptive(&f, &log_grid(lo, hi, 161), 0.0, 1e-13, 20_000).value;
            let head = quad::tanh_sinh(&|_x: f64, d: f64, _r: f64| f(d), 0.0, lo, 1e-14).value;
            let tail = sphere_area(n) * poisson_kernel(n, s, 1.0, 0.0).unwrap() * t.powf(2.0 * s) * hi.powf(-2.0 * s) / (2.0 * s);
            mass = mass.max((head + body + tail - 1.0).abs());
        }
    }
    let mut dtn = 0.0f64;
    let mut energy = 0.0f64;
    for &(n, s) in &cases {
        let mesh = HalfSpaceMesh::from_config(n, s, &MeshConfig::default()).map_err(|e| e.to_string())?;
        let ds = DirichletSolver::new(&mesh, SolverKind::Direct).map_err(|e| e.to_string())?;
        let v: Vec<f64> = mesh.x().iter().map(|r| (-0.5 * r * r).exp()).collect();
        let inner: Vec<f64> = mesh.x().iter().copied().take_while(|&r| r <= 4.0).collect();
        let lap = frac_lap_radial_at(&gaussian(n), s, &inner).unwrap();
        let d = dtn_trace(&ds.extend(&v).unwrap()).map_err(|e| e.to_string())?;
        let k = kappa_s(s);
        let err = lap[1..].iter().zip(d.values()).map(|(a, b)| (k * a - b).abs()).fold(0.0, f64::max);
        dtn = dtn.max(err / (k * sup(&lap)));

        let bump = |r: f64| Trial::Bump { radius: 1.0 }.value(1, 0.5, r);
        let vb: Vec<f64> = mesh.x().iter().map(|r| bump(*r)).collect();
        let e = weighted_energy(&ds.extend(&vb).unwrap()).unwrap();
        let u = RadialProfile::from_fn(n, &log_grid(1e-4, 1.0, 400), bump).unwrap();
        let want = kappa_s(s) * seminorm_squared(&u, s).unwrap();
        energy = energy.max(((e.value + e.tail) / want - 1.0).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mc = MeshConfig { levels: 40, radial_nodes: 60, radius: 20.0, first_radius: 1e-2, ..Default::default() };
    let mut violations = 0usize;
    for _ in 0..RANDOM_PROBLEMS {
        let n = rng.gen_range(1..=3);
        let s = rng.gen_range(0.1..0.9);
        let mesh = HalfSpaceMesh::from_config(n, s, &mc).unwrap();
        let patch = rng.gen_range(0.5..5.0);
        let amp: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let g = |r: f64| amp.iter().enumerate().map(|(i, a)| a * (1.0 + (i as f64 * r).cos())).sum::<f64>();
        let c: f64 = rng.gen_range(0.0..2.0);
        let prob = MixedProblem::new(&mesh, patch, g).unwrap().with_coefficient(vec![c; mesh.x().len()]).unwrap();
        violations += solve_mixed(&prob).map_err(|e| e.to_string())?.values().iter().filter(|v| **v < 0.0).count();
    }
    let ok = mass <= MASS_TOL && dtn <= DTN_TOL && energy <= ENERGY_TOL && violations == 0;
    verdict(ok, format!("mass error {mass:.1e}, DtN error {dtn:.2e}, energy error {energy:.2e}, max-principle violations {violations}"))
}

fn bump_data() -> RadialProfile {
    RadialProfile::from_fn(3, &log_grid(1e-6, 1.0, 400), |r| Trial::Bump { radius: 0.9 }.value(3, 0.5, r)).unwrap()
}

fn monotone() -> Outcome {
    let m = HalfSpaceMesh::from_config(3, 0.5, &MeshConfig::resolving(1e-3, 120)).unwrap();
    let b = PotentialSpec::new(0.5 * gamma0(3, 0.5), 0.5).unwrap();
    let opts = IterOptions { tol: 1e-12, max_iter: 2000, ..Default::default() };
    let mono = monotone_solve(&m, &b, &bump_data(), &opts).map_err(|e| e.to_string())?;
    let direct = direct_solve(&m, &b, &bump_data()).map_err(|e| e.to_string())?;
    let step = mono.min_step.unwrap();
    let gap = relative_gap(&mono, &direct);
    verdict(
        step >= MONO_STEP_FLOOR && gap <= MONO_GAP_TOL,
        format!("{} iterations, min relative step {step:.1e}, gap to direct {gap:.1e}", mono.iterations()),
    )
}

fn variational() -> Outcome {
    let p = Params::new(3, 0.5).unwrap().with_alpha(0.3).unwrap().with_p(2.0).unwrap();
    let m = HalfSpaceMesh::from_config(3, 0.5, &MeshConfig::resolving(1e-3, 160)).unwrap();
    let out = variational_minimize(&p, &m, &IterOptions::default()).map_err(|e| e.to_string())?;
    let nonneg = out.values.iter().all(|v| *v >= 0.0);
    let lambda = out.lambda.unwrap_or(f64::NAN);
    verdict(
        nonneg && lambda > 0.0 && out.residual <= VAR_RESIDUAL_TOL,
        format!("non-negative {nonneg}, lambda {lambda:.4}, residual {:.1e}", out.residual),
    )
}

fn explicit() -> Outcome {
    let base = Params::new(3, 0.5).unwrap();
    let mut grid = Vec::new();
    for &a in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        let pa = base.with_alpha(a).unwrap();
        for &t in &[0.0, 0.2, 0.4, 0.6, 0.8] {
            grid.push(pa.with_p(pa.p_sobolev() + t * (pa.p_crit() - pa.p_sobolev())).unwrap());
        }
    }
    let r = log_grid(1e-4, 1e4, 1600);
    let rows = par::map_slice(&grid, |p| -> Result<(f64, f64, f64), String> {
        let e = explicit_supercritical(p).map_err(|e| e.to_string())?;
        let res = e.residual(&r, 0.1, 10.0).map_err(|e| e.to_string())?.iter().map(|x| x.1).fold(0.0, f64::max);
        let beta = 0.5 * (p.n as f64 - 2.0 * p.s) - 2.0 * p.s / (p.p - 1.0);
        let mu = (gamma_alpha_oracle(p.n, p.s, beta) - gamma_alpha_oracle(p.n, p.s, p.alpha)).powf(1.0 / (p.p - 1.0));
        Ok((res, (e.beta - beta).abs(), (e.mu - mu).abs()))
    });
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for row in rows {
        let (a, b, c) = row?;
        worst = (worst.0.max(a), worst.1.max(b), worst.2.max(c));
    }
    verdict(
        worst.0 <= EXPLICIT_RESIDUAL_TOL && worst.1 <= EXPLICIT_CONST_TOL && worst.2 <= EXPLICIT_CONST_TOL,
        format!("25 (alpha, p) pairs: residual {:.1e}, beta error {:.1e}, mu error {:.1e}", worst.0, worst.1, worst.2),
    )
}

fn nonexistence() -> Outcome {
    let cfg = NonexistenceConfig::default();
    let mut detail = Vec::new();
    let mut ok = true;
    for alpha in [0.0, 0.3] {
        let p = Params::new(3, 0.5).unwrap().with_alpha(alpha).unwrap();
        let (report, out) = nonexistence_diagnostic(&p, &bump_data(), &cfg).map_err(|e| e.to_string())?;
        let dev = (out.fit.exponent / out.target_exponent - 1.0).abs();
        ok &= report.passed() && dev <= EXPONENT_TOL;
        detail.push(format!("alpha={alpha}: exponent {:.4} vs {:.4}", out.fit.exponent, out.target_exponent));
        if alpha == 0.0 {
            // log growth at p_crit over eps = 1e-2 .. 1e-5, convergence at p_crit - 1/2
            let positive = out.critical.slopes.iter().all(|s| *s > 0.0);
            let spread = out.critical.spread();
            let sub = &out.subcritical.slopes;
            let decay = sub[sub.len() - 1] / sub[0];
            ok &= positive && spread <= SLOPE_TOL && decay <= CONVERGENT_DECAY;
            detail.push(format!("slope spread {spread:.3}, subcritical slope decay {decay:.3}"));
        }
    }
    verdict(ok, detail.join("; "))
}

fn hardy() -> Outcome {
    let g0 = gamma0(3, 0.5);
    let fam = TrialFamily::desk(3, 0.5, FAMILY_SIZE, 7).unwrap();
    let q = quotients(&fam).map_err(|e| e.to_string())?;
    let best = q.iter().copied().fold(f64::INFINITY, f64::min);
    let floor_ok = q.iter().all(|v| *v >= g0 - QUOTIENT_SLACK);
    let best_ok = (best / g0 - 1.0).abs() <= BEST_TOL;
    let g = log_grid(1e-4, 1e4, 400);
    let mut ap_ok = true;
    for alpha in [0.0, 0.3] {
        let th = ground_state(3, 0.5, alpha, &g).unwrap();
        let ga = gamma_alpha(3, 0.5, alpha).unwrap();
        let b = RadialProfile::from_fn(3, &g, |r| ga / r).unwrap();
        ap_ok &= ap_form_check(&th, &b, 0.5, &fam).map_err(|e| e.to_string())?.passed();
    }
    let th = ground_state(3, 0.5, 0.0, &g).unwrap();
    let over = RadialProfile::from_fn(3, &g, |r| (g0 + OVERSHOOT) / r).unwrap();
    let rejects = !ap_form_check(&th, &over, 0.5, &fam).map_err(|e| e.to_string())?.passed();
    verdict(
        floor_ok && best_ok && ap_ok && rejects,
        format!("min quotient {best:.4} vs gamma0 {g0:.4} ({:+.1}%), AP passes with gamma_alpha {ap_ok}, fails with gamma0+0.2 {rejects}", 100.0 * (best / g0 - 1.0)),
    )
}

fn remainder() -> Outcome {
    let fam = TrialFamily::desk(3, 0.5, FAMILY_SIZE, 7).unwrap();
    let coarse = HardyReport::with_remainders(&fam, 1.5).map_err(|e| e.to_string())?;
    let fine = HardyReport::with_remainders(&fam.clone().with_density(2 * fam.nodes_per_decade), 1.5).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = coarse.remainders.iter().filter_map(|r| r.ratio).collect();
    let positive = ratios.len() == FAMILY_SIZE && ratios.iter().all(|r| *r > 0.0);
    let (a, b) = (coarse.ratio_infimum().unwrap_or(f64::NAN), fine.ratio_infimum().unwrap_or(f64::NAN));
    let stable = (b / a - 1.0).abs() <= REFINE_TOL;
    verdict(positive && stable, format!("{} of {FAMILY_SIZE} ratios positive, infimum {a:.5e} -> {b:.5e} under refinement", ratios.iter().filter(|r| **r > 0.0).count()))
}

fn run_cli(args: &[&str], env: &[(&str, &str)]) -> (i32, String) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_frachardy"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn cli() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();
    let mut failures = Vec::new();

    let runs: [(&str, Vec<&str>); 3] = [
        ("constants", vec!["constants", "--N", "3", "--s", "0.5", "--alpha-sweep", "0:0.99:50"]),
        ("solve", vec!["solve", "--alpha", "0.5", "--p", "2.5", "--format", "csv,json"]),
        ("verify", vec!["verify", "--check", "groundstate", "--alpha", "0.3"]),
    ];
    for (name, args) in &runs {
        let out = dir(&format!("repeat-{name}"));
        let mut reports = Vec::new();
        for _ in 0..2 {
            let mut a = args.clone();
            a.extend(["--out", out.as_str()]);
            let (code, err) = run_cli(&a, &[]);
            if code != 0 {
                failures.push(format!("{name}: exit {code} ({err})"));
            }
            reports.push(std::fs::read(Path::new(&out).join(format!("{name}.report.json"))).unwrap_or_default());
        }
        if reports[0].is_empty() || reports[0] != reports[1] {
            failures.push(format!("{name}: reports differ between runs"));
        }
    }

    let cfg_path = tmp.path().join("bad.cfg");
    std::fs::write(&cfg_path, "gamma = 2\n").map_err(|e| e.to_string())?;
    let cfg = cfg_path.to_string_lossy().into_owned();
    let matrix: Vec<ExitCase> = vec![
        (vec!["constants", "--N", "3", "--s", "0.5"], vec![], 0, None),
        (vec!["solve", "--alpha", "0.3", "--p", "2"], vec![], 0, None),
        (vec!["constants", "--tol", "1e-30"], vec![], 1, None),
        (vec!["constants", "--s", "1.2"], vec![], 2, None),
        (vec!["constants", "--N", "0"], vec![], 2, None),
        (vec!["solve", "--alpha", "1.5"], vec![], 2, None),
        (vec!["solve", "--method", "explicit", "--alpha", "0.3", "--p", "1.5"], vec![], 2, None),
        (vec!["verify", "--check", "nothing"], vec![], 2, None),
        (vec!["constants", "--config", cfg.as_str()], vec![], 2, None),
        (vec!["constants"], vec![("FRACHARDY_THREADS", "zero")], 2, None),
        (vec!["constants", "--bogus"], vec![], 2, None),
        (vec!["solve", "--alpha", "0.3", "--p", "4"], vec![], 3, Some("nonexistence")),
        (vec!["solve", "--alpha", "0", "--p", "2"], vec![], 3, Some("nonexistence")),
    ];
    for (i, (args, env, want, msg)) in matrix.iter().enumerate() {
        let out = dir(&format!("matrix-{i}"));
        let mut a = args.clone();
        a.extend(["--out", out.as_str()]);
        let (code, err) = run_cli(&a, env);
        if code != *want {
            failures.push(format!("{args:?}: exit {code}, expected {want} ({})", err.trim()));
        }
        if let Some(m) = msg {
            if !err.contains(m) {
                failures.push(format!("{args:?}: message lacks {m:?}"));
            }
        }
        if *want >= 2 && Path::new(&out).exists() {
            failures.push(format!("{args:?}: wrote output despite exit {want}"));
        }
    }
    let total = runs.len() + matrix.len();
    verdict(failures.is_empty(), if failures.is_empty() { format!("{} repeat runs identical, {} exit codes honored", runs.len(), matrix.len()) } else { format!("{} of {total} cases failed: {}", failures.len(), failures.join("; ")) })
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("constants", constants),
        ("operator backends", backends),
        ("ground-state identity", ground_state_identity),
        ("extension and DtN", extension),
        ("monotone iteration", monotone),
        ("variational existence", variational),
        ("explicit supercritical solution", explicit),
        ("nonexistence mechanism", nonexistence),
        ("Hardy analysis", hardy),
        ("remainder term", remainder),
        ("CLI determinism and exit codes", cli),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} criterion {:>2} {name}: {detail} [{:.1}s]", i + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
