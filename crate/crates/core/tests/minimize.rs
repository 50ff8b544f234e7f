use nalgebra::{DMatrix, DVector};
use nonloc_core::functional::{energy, gateaux, strong_el_residual, Integrand};
use nonloc_core::grid::{linf_norm, RegionSelector};
use nonloc_core::kernel::{sample_kernel, KernelSpec};
use nonloc_core::minimize::{assemble_gradient, minimize, uniqueness_probe, Init, MinimizeOptions, TerminationReason};
use nonloc_core::{Domain, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quadratic_setup() -> (Domain, Integrand, Vec<f64>, GridFunction) {
    let d = Domain::new(-1.0, 1.0, 3.0, 201, &[]).unwrap();
    let sigma: f64 = 1.0;
    let mu_of = |z: f64| (-(z / sigma).powi(2)).exp() / (sigma * std::f64::consts::PI.sqrt());
    let mu = sample_kernel(&KernelSpec::Gaussian { sigma }, &d).unwrap();
    let f = Integrand::quadratic(&mu);
    let x = d.nodes().to_vec();
    let kernel: Vec<f64> = (0..x.len()).map(|k| mu_of(k as f64 * d.spacing())).collect();
    let u0 = GridFunction::from_fn(&d, |x| x).unwrap();
    (d, f, kernel, u0)
}

/// Solves Σ_j w_j μ(x_j − x_i)(u_j − u_i) = 0 for the free nodes by LU.
fn dense_oracle(d: &Domain, kernel: &[f64], u0: &GridFunction) -> Vec<f64> {
    let m = d.node_count();
    let w = d.weights();
    let free: Vec<usize> = (0..m).filter(|&i| !d.is_fixed(i)).collect();
    let n = free.len();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    let k = |i: usize, j: usize| kernel[i.abs_diff(j)];
    for (r, &i) in free.iter().enumerate() {
        for j in 0..m {
            let c = w[j] * k(i, j);
            a[(r, r)] += c;
            if d.is_fixed(j) {
                rhs[r] += c * u0.at(j);
            } else {
                let col = free.iter().position(|&q| q == j).unwrap();
                a[(r, col)] -= c;
            }
        }
    }
    let sol = a.lu().solve(&rhs).expect("nonsingular");
    let mut u = u0.values().to_vec();
    for (r, &i) in free.iter().enumerate() {
        u[i] = sol[r];
    }
    u
}

#[test]
fn quadratic_minimizer_matches_dense_solve() {
    let (d, f, kernel, u0) = quadratic_setup();
    let oracle = dense_oracle(&d, &kernel, &u0);
    let opts = MinimizeOptions { grad_tol: 1e-10, ..Default::default() };
    let res = minimize(&f, &d, &u0, &opts).unwrap();
    assert!(res.converged, "{:?}", res.termination_reason);
    let err = (0..d.node_count()).map(|i| (res.u_star.at(i) - oracle[i]).abs()).fold(0.0, f64::max);
    assert!(err <= 1e-6, "linf error {err}");
    let r = strong_el_residual(&res.u_star, &f, &d).unwrap();
    let rinf = linf_norm(&r, &d, RegionSelector::All).unwrap();
    assert!(rinf <= 1e-8, "residual {rinf}");
}

#[test]
fn energy_trace_is_monotone() {
    let (d, f, _, u0) = quadratic_setup();
    let res = minimize(&f, &d, &u0, &MinimizeOptions { init: Init::Zero, ..Default::default() }).unwrap();
    assert!(res.converged);
    assert!(res.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    let e = energy(&res.u_star, &f, &d).unwrap();
    assert!((e - res.energy_trace.last().unwrap()).abs() <= 1e-9 * (1.0 + e.abs()));
}

#[test]
fn gradient_pairs_with_gateaux() {
    let (d, f, _, _) = quadratic_setup();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let u = GridFunction::scalar((0..d.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
        let phi = GridFunction::scalar(
            (0..d.node_count())
                .map(|i| if d.is_fixed(i) { 0.0 } else { rng.gen_range(-1.0..1.0) })
                .collect(),
        )
        .unwrap();
        let g = assemble_gradient(&u, &f, &d).unwrap();
        let paired: f64 = (0..d.node_count()).map(|i| g.at(i) * phi.at(i)).sum();
        let direct = gateaux(&u, &phi, &f, &d).unwrap();
        assert!((paired - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        for i in d.indices(RegionSelector::CollarFixed) {
            assert_eq!(g.at(i), 0.0);
        }
    }
}

#[test]
fn quadratic_gradient_is_linear() {
    let (d, f, _, u0) = quadratic_setup();
    let v = GridFunction::from_fn(&d, |x| x.sin()).unwrap();
    let gu = assemble_gradient(&u0, &f, &d).unwrap();
    let gv = assemble_gradient(&v, &f, &d).unwrap();
    let gs = assemble_gradient(&u0.axpby(2.0, &v, -3.0).unwrap(), &f, &d).unwrap();
    for i in 0..d.node_count() {
        let expect = 2.0 * gu.at(i) - 3.0 * gv.at(i);
        assert!((gs.at(i) - expect).abs() <= 1e-13);
    }
}

#[test]
fn quadratic_uniqueness_probe_agrees() {
    let (d, f, _, u0) = quadratic_setup();
    let opts = MinimizeOptions { grad_tol: 1e-10, ..Default::default() };
    let r = uniqueness_probe(&f, &d, &u0, 5, 3, &opts, 1e-6).unwrap();
    assert!(r.passed, "{:?}", r.metrics);
    assert_eq!(r.metrics["converged_starts"], 5.0);
}

#[test]
fn concave_integrand_is_inconclusive() {
    let d = Domain::new(-1.0, 1.0, 1.0, 41, &[]).unwrap();
    let mu = sample_kernel(&KernelSpec::Gaussian { sigma: 0.5 }, &d).unwrap();
    let f = Integrand::quadratic(&mu).negated();
    let u0 = GridFunction::zeros(&d);
    let opts = MinimizeOptions { max_iters: 200, ..Default::default() };
    let r = uniqueness_probe(&f, &d, &u0, 3, 1, &opts, 1e-4).unwrap();
    assert!(!r.passed);
    assert_eq!(r.metrics["inconclusive"], 1.0);
}

#[test]
fn minimizer_beats_random_competitors() {
    let (d, f, _, u0) = quadratic_setup();
    let res = minimize(&f, &d, &u0, &MinimizeOptions::default()).unwrap();
    let e_star = energy(&res.u_star, &f, &d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let bump: Vec<f64> = (0..d.node_count())
            .map(|i| if d.is_fixed(i) { 0.0 } else { rng.gen_range(-0.1..0.1) })
            .collect();
        let v = res.u_star.axpby(1.0, &GridFunction::scalar(bump).unwrap(), 1.0).unwrap();
        assert!(energy(&v, &f, &d).unwrap() >= e_star);
    }
}

#[test]
fn quartic_growth_still_converges() {
    let d = Domain::new(-1.0, 1.0, 1.0, 81, &[]).unwrap();
    let mu = sample_kernel(&KernelSpec::Gaussian { sigma: 0.5 }, &d).unwrap();
    let m = mu.clone();
    let m2 = mu.clone();
    let f = Integrand::new(
        move |x, z, u, xi| xi.powi(4) * m.eval(x, z) + u * u,
        |_, _, u, _| 2.0 * u,
        move |x, z, _, xi| 4.0 * xi.powi(3) * m2.eval(x, z),
    );
    let u0 = GridFunction::from_fn(&d, |x| 1.0 + x).unwrap();
    let res = minimize(&f, &d, &u0, &MinimizeOptions::default()).unwrap();
    assert!(res.converged);
    assert_eq!(res.termination_reason, TerminationReason::GradientTol);
}
