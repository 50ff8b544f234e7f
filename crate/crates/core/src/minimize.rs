//! Steepest descent with Armijo backtracking over the admissible class
//! (values on the fixed collar held at the boundary data).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{directional_derivative, energy, strong_el_residual, Integrand};
use crate::grid::{Domain, GridFunction, RegionSelector};
use crate::report::DiagnosticReport;

/// Starting iterate away from the fixed collar.
#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    Zero,
    /// Mean of the fixed collar data, extended as a constant.
    BoundaryExtend,
    Given(GridFunction),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinimizeOptions {
    pub grad_tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub step_growth: f64,
    pub init: Init,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            grad_tol: 1e-8,
            max_iters: 10_000,
            armijo_c: 1e-4,
            backtrack: 0.5,
            initial_step: 1.0,
            step_growth: 2.0,
            init: Init::BoundaryExtend,
        }
    }
}

impl MinimizeOptions {
    fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::Parameter("grad_tol must be positive".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::Parameter("armijo constant must lie in (0, 1)".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::Parameter("backtracking factor must lie in (0, 1)".into()));
        }
        if !(self.initial_step > 0.0) || !(self.step_growth >= 1.0) {
            return Err(Error::Parameter("initial step must be positive and growth at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    GradientTol,
    MaxIters,
    LineSearchFailure,
}

#[derive(Clone, Debug)]
pub struct MinimizeResult {
    pub u_star: GridFunction,
    /// Energy at the start and after each accepted step.
    pub energy_trace: Vec<f64>,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination_reason: TerminationReason,
}

/// Nodal gradient `g_i = w_i·r_i` on free nodes, zero on the fixed collar, so
/// that `Σ_i g_i φ_i` is the first variation along `φ`.
pub fn assemble_gradient(u: &GridFunction, f: &Integrand, domain: &Domain) -> Result<GridFunction> {
    let r = strong_el_residual(u, f, domain)?;
    let g = r.values().iter().zip(domain.weights()).map(|(r, w)| w * r).collect();
    GridFunction::scalar(g)
}

fn initial_iterate(domain: &Domain, u0: &GridFunction, init: &Init) -> Result<GridFunction> {
    let fixed = domain.indices(RegionSelector::CollarFixed);
    let mut v = match init {
        Init::Zero => vec![0.0; domain.node_count()],
        Init::BoundaryExtend => {
            let mean = if fixed.is_empty() {
                0.0
            } else {
                fixed.iter().map(|&i| u0.at(i)).sum::<f64>() / fixed.len() as f64
            };
            vec![mean; domain.node_count()]
        }
        Init::Given(g) => {
            g.require_scalar("initial iterate")?;
            domain.check_len(g.rows(), "initial iterate")?;
            g.values().to_vec()
        }
    };
    for &i in &fixed {
        v[i] = u0.at(i);
    }
    GridFunction::scalar(v)
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

// 4-point Gauss–Legendre rule on [0, 1]
const GL_NODES: [f64; 4] = [
    0.069_431_844_202_973_71,
    0.330_009_478_207_571_87,
    0.669_990_521_792_428_1,
    0.930_568_155_797_026_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.173_927_422_568_726_93,
    0.326_072_577_431_273_07,
    0.326_072_577_431_273_07,
    0.173_927_422_568_726_93,
];

/// `E(u − s·g) − E(u)` as the integral of the directional derivative along the segment.
fn integrated_increment(u: &GridFunction, g: &GridFunction, s: f64, f: &Integrand, domain: &Domain) -> Result<f64> {
    let mut total = 0.0;
    for (t, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        let point = u.axpby(1.0, g, -t * s)?;
        total += w * directional_derivative(&point, g, f, domain)?;
    }
    Ok(-s * total)
}

/// Projected steepest descent from boundary data `u0` (only its values on
/// the fixed collar are used, plus the whole function for `Init::Given`).
pub fn minimize(f: &Integrand, domain: &Domain, u0: &GridFunction, opts: &MinimizeOptions) -> Result<MinimizeResult> {
    opts.validate()?;
    u0.require_scalar("minimization")?;
    domain.check_len(u0.rows(), "boundary data")?;

    let mut u = initial_iterate(domain, u0, &opts.init)?;
    let mut e_actual = match energy(&u, f, domain) {
        Ok(e) if e.is_finite() => e,
        Ok(_) | Err(Error::NonFinite { .. }) => {
            return Err(Error::Input("energy is not finite at the initial iterate".into()))
        }
        Err(e) => return Err(e),
    };
    let mut e_trace = e_actual;
    let mut trace = vec![e_trace];
    let mut trial = opts.initial_step;

    let mut iterations = 0;
    loop {
        let g = assemble_gradient(&u, f, domain)?;
        let grad_inf = g.values().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let done = |reason, converged, u| MinimizeResult {
            u_star: u,
            energy_trace: trace.clone(),
            grad_inf_norm: grad_inf,
            iterations,
            converged,
            termination_reason: reason,
        };
        if grad_inf <= opts.grad_tol {
            return Ok(done(TerminationReason::GradientTol, true, u));
        }
        if iterations >= opts.max_iters {
            return Ok(done(TerminationReason::MaxIters, false, u));
        }

        let gg = sq_norm(g.values());
        let mut s = trial;
        let accepted = loop {
            if s < 1e-16 {
                break None;
            }
            let candidate = u.axpby(1.0, &g, -s);
            let e_new = match candidate.as_ref().map(|c| energy(c, f, domain)) {
                Ok(Ok(e)) if e.is_finite() => e,
                _ => {
                    s *= opts.backtrack;
                    continue;
                }
            };
            let mut delta = e_new - e_actual;
            if delta.abs() <= 1e-7 * e_actual.abs().max(1.0) {
                delta = match integrated_increment(&u, &g, s, f, domain) {
                    Ok(d) => d,
                    Err(_) => {
                        s *= opts.backtrack;
                        continue;
                    }
                };
            }
            if delta <= -opts.armijo_c * s * gg {
                break Some((candidate.expect("checked above"), e_new, delta, s));
            }
            s *= opts.backtrack;
        };
        let Some((next, e_new, delta, s)) = accepted else {
            return Ok(done(TerminationReason::LineSearchFailure, false, u));
        };

        // quadratic model along the accepted direction
        let curvature = 2.0 * (delta + s * gg) / (s * s * gg);
        trial = if curvature > 0.0 && curvature.is_finite() {
            1.0 / curvature
        } else {
            opts.step_growth * s
        };

        u = next;
        e_actual = e_new;
        e_trace += delta;
        trace.push(e_trace);
        iterations += 1;
    }
}

/// Minimizes from `n_starts` random initial iterates and reports the largest
/// pairwise sup-distance between the results.
pub fn uniqueness_probe(
    f: &Integrand,
    domain: &Domain,
    u0: &GridFunction,
    n_starts: usize,
    seed: u64,
    opts: &MinimizeOptions,
    agreement_tol: f64,
) -> Result<DiagnosticReport> {
    if n_starts < 2 {
        return Err(Error::Parameter("uniqueness probe needs at least two starts".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solutions = Vec::with_capacity(n_starts);
    let mut converged = 0usize;
    for _ in 0..n_starts {
        let start: Vec<f64> = (0..domain.node_count()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let run_opts = MinimizeOptions {
            init: Init::Given(GridFunction::scalar(start)?),
            ..opts.clone()
        };
        let result = minimize(f, domain, u0, &run_opts)?;
        if result.converged {
            converged += 1;
        }
        solutions.push(result.u_star);
    }
    let mut spread: f64 = 0.0;
    for a in 0..n_starts {
        for b in a + 1..n_starts {
            spread = spread.max(solutions[a].max_abs_diff(&solutions[b], domain, RegionSelector::All));
        }
    }
    let inconclusive = converged < n_starts;
    let mut r = DiagnosticReport::new("uniqueness");
    r.seed = seed;
    r.trials = n_starts as u64;
    r.worst_margin = agreement_tol - spread;
    r.passed = !inconclusive && spread <= agreement_tol;
    r.set_metric("max_pairwise_distance", spread);
    r.set_metric("converged_starts", converged as f64);
    r.set_metric("inconclusive", if inconclusive { 1.0 } else { 0.0 });
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{sample_kernel, KernelSpec};

    fn setup() -> (Domain, Integrand) {
        let d = Domain::new(-1.0, 1.0, 1.0, 41, &[]).unwrap();
        let mu = sample_kernel(&KernelSpec::Gaussian { sigma: 0.5 }, &d).unwrap();
        (d, Integrand::quadratic(&mu))
    }

    #[test]
    fn constant_boundary_data_gives_constant_minimizer() {
        let (d, f) = setup();
        let u0 = GridFunction::constant(&d, 2.5).unwrap();
        let opts = MinimizeOptions { init: Init::Zero, ..Default::default() };
        let res = minimize(&f, &d, &u0, &opts).unwrap();
        assert!(res.converged);
        assert_eq!(res.termination_reason, TerminationReason::GradientTol);
        for i in 0..d.node_count() {
            assert!((res.u_star.at(i) - 2.5).abs() < 1e-6);
        }
        assert!(res.energy_trace.last().unwrap().abs() < 1e-10);
        assert!(res.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn fixed_collar_never_moves() {
        let (d, f) = setup();
        let u0 = GridFunction::from_fn(&d, |x| x.sin() + 0.1).unwrap();
        let res = minimize(&f, &d, &u0, &MinimizeOptions::default()).unwrap();
        for i in d.indices(RegionSelector::CollarFixed) {
            assert_eq!(res.u_star.at(i).to_bits(), u0.at(i).to_bits());
        }
        assert!(res.converged && res.grad_inf_norm <= 1e-8);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let (d, f) = setup();
        let u0 = GridFunction::from_fn(&d, |x| x).unwrap();
        let opts = MinimizeOptions { max_iters: 1, grad_tol: 1e-14, ..Default::default() };
        let res = minimize(&f, &d, &u0, &opts).unwrap();
        assert!(!res.converged);
        assert_eq!(res.termination_reason, TerminationReason::MaxIters);
        assert_eq!(res.energy_trace.len(), 2);
    }

    #[test]
    fn non_finite_start_is_an_input_error() {
        let (d, _) = setup();
        let f = Integrand::new(|_, _, u, _| 1.0 / u, |_, _, u, _| -1.0 / (u * u), |_, _, _, _| 0.0);
        let u0 = GridFunction::zeros(&d);
        assert!(matches!(
            minimize(&f, &d, &u0, &MinimizeOptions::default()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn gradient_pairs_with_variations() {
        let (d, f) = setup();
        let u = GridFunction::from_fn(&d, |x| x * x - 0.3 * x).unwrap();
        let phi = GridFunction::from_fn(&d, |x| if x.abs() <= 1.0 { (1.0 - x * x) * x.cos() } else { 0.0 }).unwrap();
        let g = assemble_gradient(&u, &f, &d).unwrap();
        let paired: f64 = g.values().iter().zip(phi.values()).map(|(a, b)| a * b).sum();
        let direct = crate::functional::gateaux(&u, &phi, &f, &d).unwrap();
        assert!((paired - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
    }
}
