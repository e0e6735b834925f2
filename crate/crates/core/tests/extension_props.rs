use frachardy::constants::{gamma_alpha, kappa_s, sphere_area};
use frachardy::extension::*;
use frachardy::fit::power_fit;
use frachardy::fraclap::{frac_lap_radial_at, ground_state};
use frachardy::hardy::{seminorm_squared, Trial};
use frachardy::quad;
use frachardy::radial::{default_grid, log_grid, RadialProfile};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: [(usize, f64); 5] = [(1, 0.25), (2, 0.5), (3, 0.5), (2, 0.75), (3, 0.25)];

fn gaussian(n: usize) -> RadialProfile {
    RadialProfile::from_fn(n, &default_grid(), |r| (-0.5 * r * r).exp()).unwrap()
}

fn bump(r: f64) -> f64 {
    Trial::Bump { radius: 1.0 }.value(1, 0.5, r)
}

fn small_mesh(n: usize, s: f64) -> HalfSpaceMesh {
    let cfg = MeshConfig { levels: 40, radial_nodes: 60, radius: 20.0, first_radius: 1e-2, ..Default::default() };
    HalfSpaceMesh::from_config(n, s, &cfg).unwrap()
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn poisson_kernel_has_unit_mass() {
    for &(n, s) in &CASES {
        for &t in &[0.01, 1.0, 30.0] {
            let f = |r: f64| sphere_area(n) * r.powf(n as f64 - 1.0) * poisson_kernel(n, s, t, r).unwrap();
            let (lo, hi) = (1e-8 * t, 1e8 * t);
            let body = quad::adaptive(&f, &log_grid(lo, hi, 161), 0.0, 1e-13, 20_000).value;
            let head = quad::tanh_sinh(&|_x: f64, d: f64, _r: f64| f(d), 0.0, lo, 1e-14).value;
            let p = poisson_kernel(n, s, 1.0, 0.0).unwrap();
            let tail = sphere_area(n) * p * t.powf(2.0 * s) * hi.powf(-2.0 * s) / (2.0 * s);
            let mass = head + body + tail;
            assert!((mass - 1.0).abs() < 1e-8, "N={n} s={s} t={t}: mass {mass}");
        }
    }
}

#[test]
fn extension_recovers_data_as_t_vanishes() {
    // w(t) = u + c t^{2s} + ..., so two heights determine u
    let (n, s) = (2, 0.5);
    let g = gaussian(n);
    let x = [0.0, 0.5, 1.0, 2.0];
    let (t1, t2) = (1e-3, 1e-2);
    let w1 = poisson_extend_at(&g, s, t1, &x).unwrap();
    let w2 = poisson_extend_at(&g, s, t2, &x).unwrap();
    let q = (t2 / t1).powf(2.0 * s);
    for (i, &xi) in x.iter().enumerate() {
        let u = (-0.5 * xi * xi).exp();
        let rich = (q * w1[i] - w2[i]) / (q - 1.0);
        assert!((w1[i] - u).abs() < (w2[i] - u).abs(), "x={xi}: no approach");
        assert!((rich - u).abs() < 1e-4, "x={xi}: {rich} vs {u}");
    }
}

#[test]
fn extended_ground_state_is_homogeneous() {
    let (n, s) = (3, 0.5);
    let th = ground_state(n, s, 0.0, &default_grid()).unwrap();
    let e = 0.5 * (2.0 * s - n as f64);
    for &lam in &[2.0, 5.0] {
        for &(t, x) in &[(0.3, 1.0), (0.1, 0.4), (1.0, 0.2)] {
            let a = poisson_extend_at(&th, s, t, &[x]).unwrap()[0];
            let b = poisson_extend_at(&th, s, lam * t, &[lam * x]).unwrap()[0];
            assert!((b / (lam.powf(e) * a) - 1.0).abs() < 1e-4, "t={t} x={x} lambda={lam}");
        }
    }
}

#[test]
fn extension_of_zero_is_zero() {
    let z = RadialProfile::from_fn(2, &default_grid(), |_| 0.0).unwrap();
    assert!(poisson_extend(&z, 0.4, 0.5).unwrap().values().iter().all(|v| *v == 0.0));
}

#[test]
fn gaussian_flux_matches_fractional_laplacian() {
    let x: Vec<f64> = (1..=20).map(|i| 0.2 * i as f64).collect();
    for &(n, s) in &CASES {
        let g = gaussian(n);
        let k = kappa_s(s);
        let lap = frac_lap_radial_at(&g, s, &x).unwrap();
        let w = poisson_extend_field(&g, s, &[0.0, 5e-3, 1e-2, 2e-2], &x).unwrap();
        let d = dtn_trace(&w).unwrap();
        let err = d.values().iter().zip(&lap).map(|(a, b)| (a - k * b).abs()).fold(0.0, f64::max);
        assert!(err < 0.01 * k * sup(&lap), "N={n} s={s}: {err}");
    }
}

#[test]
fn discrete_dtn_matches_fractional_laplacian() {
    for &(n, s) in &CASES {
        let mesh = HalfSpaceMesh::from_config(n, s, &MeshConfig::default()).unwrap();
        let ds = DirichletSolver::new(&mesh, SolverKind::Direct).unwrap();
        let v: Vec<f64> = mesh.x().iter().map(|r| (-0.5 * r * r).exp()).collect();
        let bv = ds.apply(&v).unwrap();
        let inner: Vec<f64> = mesh.x().iter().copied().take_while(|&r| r <= 4.0).collect();
        let lap = frac_lap_radial_at(&gaussian(n), s, &inner).unwrap();
        let err = lap.iter().zip(&bv).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.01 * sup(&lap), "N={n} s={s}: {err}");
        // the extrapolated flux of the discrete extension agrees too
        let d = dtn_trace(&ds.extend(&v).unwrap()).unwrap();
        let k = kappa_s(s);
        let err = lap[1..].iter().zip(d.values()).map(|(a, b)| (k * a - b).abs()).fold(0.0, f64::max);
        assert!(err < 0.01 * k * sup(&lap), "N={n} s={s}: extrapolated {err}");
    }
}

#[test]
fn ground_state_extension_flux() {
    let (n, s) = (3, 0.5);
    let x = log_grid(0.2, 5.0, 30);
    for &alpha in &[0.0, 0.3, 0.7] {
        let th = ground_state(n, s, alpha, &default_grid()).unwrap();
        let w = poisson_extend_field(&th, s, &[0.0, 5e-3, 1e-2, 2e-2], &x).unwrap();
        let d = dtn_trace(&w).unwrap();
        let c = kappa_s(s) * gamma_alpha(n, s, alpha).unwrap();
        for (r, v) in d.r().iter().zip(d.values()) {
            let want = c * r.powf(-2.0 * s) * th.eval(*r);
            assert!((v / want - 1.0).abs() < 0.02, "alpha={alpha} r={r}: {v} vs {want}");
        }
    }
}

#[test]
fn truncated_dirichlet_reproduces_poisson_extension() {
    for &(n, s) in &[(1, 0.3), (3, 0.5), (2, 0.8)] {
        let g = gaussian(n);
        let mesh = HalfSpaceMesh::from_config(n, s, &MeshConfig::default()).unwrap();
        let ds = DirichletSolver::new(&mesh, SolverKind::Direct).unwrap();
        let v: Vec<f64> = mesh.x().iter().map(|r| (-0.5 * r * r).exp()).collect();
        let w = ds.extend(&v).unwrap();
        let xi: Vec<f64> = mesh.x().iter().copied().take_while(|&r| r <= 3.0).collect();
        for (k, &t) in mesh.t().iter().enumerate().filter(|(_, t)| **t >= 0.05 && **t <= 2.0) {
            let p = poisson_extend_at(&g, s, t, &xi).unwrap();
            for (j, pj) in p.iter().enumerate() {
                assert!((w.at(k, j) - pj).abs() < 0.02, "N={n} s={s} t={t} x={}", xi[j]);
            }
        }
    }
}

#[test]
fn maximum_principle_on_random_problems() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut violations = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=3);
        let s = rng.gen_range(0.1..0.9);
        let mesh = small_mesh(n, s);
        let patch = rng.gen_range(0.5..5.0);
        let amp: Vec<f64> = (0..4).map(|_| rng.gen_range(0.0..1.0)).collect();
        let g = |r: f64| amp.iter().enumerate().map(|(i, a)| a * (1.0 + (i as f64 * r).cos())).sum::<f64>();
        let c: f64 = rng.gen_range(0.0..2.0);
        let prob = MixedProblem::new(&mesh, patch, g).unwrap().with_coefficient(vec![c; mesh.x().len()]).unwrap();
        let w = solve_mixed(&prob).unwrap();
        violations += w.values().iter().filter(|v| **v < 0.0).count();
    }
    assert_eq!(violations, 0);
}

#[test]
fn interior_positivity() {
    let (n, s) = (3, 0.4);
    let mesh = small_mesh(n, s);
    // data supported in a thin shell of the patch
    let g = |r: f64| Trial::Ring { center: 0.7, width: 0.1 }.value(n, s, r);
    let w = solve_mixed(&MixedProblem::new(&mesh, 1.0, g).unwrap()).unwrap();
    let inner = mesh.x().iter().zip(w.trace()).filter(|(r, _)| **r <= 0.9);
    let floor = inner.map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    assert!(floor > 1e-3 * sup(w.trace()), "trace floor {floor}");
}

#[test]
fn comparison_principle() {
    let (n, s) = (2, 0.6);
    let mesh = small_mesh(n, s);
    let solver = TraceSolver::new(&mesh, 2.0, &vec![0.5; mesh.x().len()], SolverKind::Direct).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let g1: Vec<f64> = mesh.x().iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g2: Vec<f64> = g1.iter().map(|v| v + rng.gen_range(0.0..0.5)).collect();
        let v1 = solver.solve(&g1).unwrap();
        let v2 = solver.solve(&g2).unwrap();
        assert!(v1.iter().zip(&v2).all(|(a, b)| a <= b));
    }
}

#[test]
fn energy_identity_for_bump() {
    for &(n, s) in &[(1, 0.3), (3, 0.5), (2, 0.8)] {
        let mesh = HalfSpaceMesh::from_config(n, s, &MeshConfig::default()).unwrap();
        let ds = DirichletSolver::new(&mesh, SolverKind::Direct).unwrap();
        let v: Vec<f64> = mesh.x().iter().map(|r| bump(*r)).collect();
        let e = weighted_energy(&ds.extend(&v).unwrap()).unwrap();
        let u = RadialProfile::from_fn(n, &log_grid(1e-4, 1.0, 400), bump).unwrap();
        let want = kappa_s(s) * seminorm_squared(&u, s).unwrap();
        assert!(((e.value + e.tail) / want - 1.0).abs() < 0.02, "N={n} s={s}: {} vs {want}", e.value + e.tail);
    }
}

#[test]
fn energy_is_zero_for_zero_field() {
    let mesh = small_mesh(2, 0.5);
    let ds = DirichletSolver::new(&mesh, SolverKind::Direct).unwrap();
    let e = weighted_energy(&ds.extend(&vec![0.0; mesh.x().len()]).unwrap()).unwrap();
    assert_eq!(e.value + e.tail, 0.0);
}

#[test]
fn energy_scaling_exponent() {
    // u(lambda x) has energy lambda^{2s-N} times that of u
    for &(n, s) in &[(1, 0.3), (3, 0.5), (2, 0.8)] {
        let mesh = HalfSpaceMesh::from_config(n, s, &MeshConfig::default()).unwrap();
        let ds = DirichletSolver::new(&mesh, SolverKind::Direct).unwrap();
        let lams = [1.0, 1.5, 2.0];
        let energies: Vec<f64> = lams
            .iter()
            .map(|l| {
                let v: Vec<f64> = mesh.x().iter().map(|r| (-0.5 * (l * r).powi(2)).exp()).collect();
                weighted_energy(&ds.extend(&v).unwrap()).unwrap().value
            })
            .collect();
        let fit = power_fit(&lams, &energies).unwrap();
        let want = 2.0 * s - n as f64;
        assert!((fit.exponent - want).abs() < 0.02 * want.abs().max(0.5), "N={n} s={s}: {}", fit.exponent);
    }
}

#[test]
fn dtn_is_an_isometry() {
    for &(n, s) in &CASES {
        let mesh = small_mesh(n, s);
        let ds = DirichletSolver::new(&mesh, SolverKind::Direct).unwrap();
        let v: Vec<f64> = mesh.x().iter().map(|r| bump(*r / 2.0)).collect();
        let e = weighted_energy(&ds.extend(&v).unwrap()).unwrap();
        let p = ds.pairing(&v, &v).unwrap();
        assert!((p / (e.value / kappa_s(s)) - 1.0).abs() < 0.02, "N={n} s={s}");
    }
}

#[test]
fn flux_converges_under_height_refinement() {
    for &(n, s) in &[(1, 0.3), (3, 0.5), (2, 0.8)] {
        let coarse = MeshConfig::default();
        let fine = MeshConfig { ratio: coarse.ratio.sqrt(), levels: 2 * coarse.levels, ..coarse };
        let traces: Vec<RadialProfile> = [coarse, fine]
            .iter()
            .map(|c| {
                let mesh = HalfSpaceMesh::from_config(n, s, c).unwrap();
                let ds = DirichletSolver::new(&mesh, SolverKind::Direct).unwrap();
                let v: Vec<f64> = mesh.x().iter().map(|r| (-0.5 * r * r).exp()).collect();
                dtn_trace(&ds.extend(&v).unwrap()).unwrap()
            })
            .collect();
        let (a, b) = (&traces[0], &traces[1]);
        let change = a.values().iter().zip(b.values()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(change < 0.01 * sup(a.values()), "N={n} s={s}: {change}");
    }
}

#[test]
fn field_csv_roundtrip_shape() {
    let mesh = small_mesh(1, 0.5);
    let w = solve_mixed(&MixedProblem::new(&mesh, 1.0, |_| 1.0).unwrap()).unwrap();
    let mut buf = Vec::new();
    w.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("t,x,value"));
    assert_eq!(text.lines().count(), 1 + w.values().len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dtn_is_symmetric(seed in any::<u64>(), n in 1usize..=3, s in 0.1f64..0.9) {
        let mesh = small_mesh(n, s);
        let ds = DirichletSolver::new(&mesh, SolverKind::Direct).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nx = mesh.x().len();
        let mut v: Vec<f64> = (0..nx).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut phi: Vec<f64> = (0..nx).map(|_| rng.gen_range(-1.0..1.0)).collect();
        v[nx - 1] = 0.0;
        phi[nx - 1] = 0.0;
        let a = ds.pairing(&v, &phi).unwrap();
        let b = ds.pairing(&phi, &v).unwrap();
        let scale = ds.pairing(&v, &v).unwrap().abs().max(ds.pairing(&phi, &phi).unwrap().abs());
        prop_assert!((a - b).abs() <= 1e-8 * scale, "{} vs {}", a, b);
    }
}
