//! Ready-to-run problems, each with its integrand, boundary data, audits and a
//! named residual check.

use std::sync::Arc;

use serde::Serialize;

use crate::checks::{check_coercivity, check_convexity, check_growth, CheckOptions, CoercivityData, GrowthData};
use crate::error::{Error, Result};
use crate::functional::{strong_el_residual, Integrand};
use crate::grid::{linf_norm, Domain, GridFunction, Region, RegionSelector};
use crate::kernel::{sample_kernel, KernelSpec, KernelTable};
use crate::minimize::{minimize, MinimizeOptions, MinimizeResult};
use crate::operators::{nonlocal_laplacian, nonlocal_p_laplacian};
use crate::report::{DiagnosticReport, Witness};
use crate::semilinear::{solve_fixed_point, spiky_source, FixedPointOptions, SemilinearProblem, SolveResult};

pub const NAMES: [&str; 5] = [
    "arctan_semilinear",
    "illposed",
    "quasilinear_potential",
    "double_power",
    "semilinear_convolution",
];

/// Default grid of a preset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainDefaults {
    pub a: f64,
    pub b: f64,
    pub collar_width: f64,
    pub node_count: usize,
}

impl DomainDefaults {
    pub fn build(&self) -> Result<Domain> {
        Domain::new(self.a, self.b, self.collar_width, self.node_count, &[])
    }
}

/// Catalog entry, as emitted by `preset list`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PresetInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub equation: &'static str,
    pub solver: SolverKind,
    pub verification: &'static str,
    pub tolerance: f64,
    pub domain: DomainDefaults,
    pub kernel: KernelSpec,
    pub collar_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    FixedPoint,
    Minimize,
}

/// The residual a preset checks a candidate solution against.
#[derive(Clone, Debug)]
pub enum Verification {
    /// `‖L_μ[u] − f0(·, u)‖_∞` on `Ω` for the preset's semilinear problem.
    Semilinear,
    /// `‖L^p_μ[u] − scale·∂_u G(u)‖_∞` on `Ω ∪ Γ′` with `∂_u G = u³`.
    PLaplacian { p: f64, scale: f64 },
    /// `‖L^q_μ[u] − M·u|u|^{p−2}‖_∞` on `Ω ∪ Γ′`.
    DoublePower { p: f64, q: f64, m_pq: f64 },
    /// `‖L_γ[u] − C·g(u)‖_∞` on `Ω ∪ Γ′` with `g = ∂_u G`.
    WeightedLaplacian { gamma: KernelTable, c: f64, m: f64 },
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub info: PresetInfo,
    pub domain: Domain,
    pub mu: KernelTable,
    pub collar_data: GridFunction,
    pub integrand: Integrand,
    pub semilinear: Option<SemilinearProblem>,
    pub coercivity: Option<CoercivityData>,
    pub growth: Vec<GrowthData>,
    pub verification: Verification,
    /// Audits run when the preset was built.
    pub audits: Vec<DiagnosticReport>,
}

fn info(name: &str) -> Result<PresetInfo> {
    let gaussian = KernelSpec::Gaussian { sigma: 1.0 };
    let wide = |m| DomainDefaults { a: -1.0, b: 1.0, collar_width: 3.0, node_count: m };
    Ok(match name {
        "arctan_semilinear" => PresetInfo {
            name: "arctan_semilinear",
            description: "Semilinear equation with an arctangent source on (-1, 1), zero collar data, \
                          Gaussian kernel; its energy is a quadratic nonlocal term plus a convex potential",
            equation: "L_mu[u](x) = 2(arctan u(x) + 1)/(x^2 + 1)",
            solver: SolverKind::FixedPoint,
            verification: "semilinear_residual",
            tolerance: 1e-7,
            domain: wide(401),
            kernel: gaussian,
            collar_value: 0.0,
        },
        "illposed" => PresetInfo {
            name: "illposed",
            description: "Affine source h - u with h sampled from |x|^(-1/2) cut off at the grid scale; \
                          the companion demo shows that (u*mu) = h forces unbounded L1 norms under refinement",
            equation: "L_mu[u](x) + f0(x, u(x)) = 0,  f0(x, u) = h(x) - u",
            solver: SolverKind::Minimize,
            verification: "semilinear_residual",
            tolerance: 1e-7,
            domain: wide(201),
            kernel: gaussian,
            collar_value: 0.0,
        },
        "quasilinear_potential" => PresetInfo {
            name: "quasilinear_potential",
            description: "p-Laplacian energy |xi mu|^p/p plus the quartic potential u^4/4 (p = 2), \
                          collar data 1",
            equation: "L^p_mu[u](x) = |Omega u Gamma| u(x)^3",
            solver: SolverKind::Minimize,
            verification: "p_laplacian_residual",
            tolerance: 1e-6,
            domain: wide(201),
            kernel: gaussian,
            collar_value: 1.0,
        },
        "double_power" => PresetInfo {
            name: "double_power",
            description: "Two-power integrand |(u + xi) mu|^q + |xi mu|^p with (p, q) = (3, 2), zero collar data",
            equation: "L^q_mu[u](x) = M_pq u(x)|u(x)|^(p-2),  M_pq = (p/q) ||mu^q||_1",
            solver: SolverKind::Minimize,
            verification: "double_power_residual",
            tolerance: 1e-10,
            domain: wide(201),
            kernel: gaussian,
            collar_value: 0.0,
        },
        "semilinear_convolution" => PresetInfo {
            name: "semilinear_convolution",
            description: "Integrand G(u) + 2u xi mu + (xi mu)^2 with G = 3u^2/2 and a constant kernel mu = 2 \
                          on |z| <= 1/2; the equation is a Laplacian with kernel gamma = (mu^2 - mu)/M",
            equation: "L_gamma[u](x) = C g(u(x)),  C = |Omega u Gamma|/(2M),  M = ||mu^2||_1 - ||mu||_1",
            solver: SolverKind::Minimize,
            verification: "weighted_laplacian_residual",
            tolerance: 1e-8,
            domain: DomainDefaults { a: -1.0, b: 1.0, collar_width: 0.5, node_count: 201 },
            kernel: KernelSpec::Constant { value: 2.0, horizon: 0.5 },
            collar_value: 1.0,
        },
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (available: {})",
                NAMES.join(", ")
            )))
        }
    })
}

/// Catalog of all presets with their defaults.
pub fn catalog() -> Vec<PresetInfo> {
    NAMES.iter().map(|n| info(n).expect("catalog names are valid")).collect()
}

/// Preset on its default grid and kernel.
pub fn preset(name: &str) -> Result<Preset> {
    let info = info(name)?;
    let domain = info.domain.build()?;
    let kernel = info.kernel.clone();
    preset_on(name, domain, &kernel)
}

fn collar(domain: &Domain, value: f64) -> GridFunction {
    GridFunction::from_raw(
        domain.node_count(),
        1,
        (0..domain.node_count())
            .map(|i| if domain.region(i) == Region::Interior { 0.0 } else { value })
            .collect(),
    )
}

fn constant_table(domain: &Domain, c: f64) -> Result<KernelTable> {
    KernelTable::from_offset_fn(domain, |_| c)
}

/// Preset on a caller-chosen grid and kernel.
pub fn preset_on(name: &str, domain: Domain, kernel: &KernelSpec) -> Result<Preset> {
    let info = info(name)?;
    let mu = sample_kernel(kernel, &domain)?;
    let measure = domain.measure();
    let collar_data = collar(&domain, info.collar_value);
    let k = Arc::new(mu.clone());
    let (k1, k2, k3) = (Arc::clone(&k), Arc::clone(&k), Arc::clone(&k));

    let mut semilinear = None;
    let mut coercivity = None;
    let mut growth = Vec::new();
    let (integrand, verification) = match name {
        "arctan_semilinear" => {
            let c = 2.0 / measure;
            let potential = |u: f64| 2.0 * u * u.atan() - (u * u).ln_1p() + 2.0 * u;
            let f = Integrand::new(
                move |x, z, u, xi| xi * xi * k1.eval(x, z) + c * potential(u) / (x * x + 1.0),
                move |x, _, u, _| c * (2.0 * u.atan() + 2.0) / (x * x + 1.0),
                move |x, z, _, xi| 2.0 * xi * k2.eval(x, z),
            )
            .with_exponents(Some(2.0), Some(1.0))
            .with_claims(true, true);

            semilinear = Some(SemilinearProblem::new(
                domain.clone(),
                mu.clone(),
                |x, u| 2.0 * (u.atan() + 1.0) / (x * x + 1.0),
                |x, u| 2.0 / ((1.0 + u * u) * (1.0 + x * x)),
                collar_data.clone(),
                0.5,
                [-10.0, 10.0],
            )?);
            let half = 0.5;
            coercivity = Some(CoercivityData {
                alpha1: mu.clone(),
                alpha2: constant_table(&domain, 0.0)?,
                // min over u of the potential is 2·ln cos 1
                alpha3: constant_table(&domain, c * 2.0 * 1f64.cos().ln())?,
                p: 2.0,
                q: 1.0,
                c0: min_on_band(&mu, &domain, half),
                delta: half,
            });
            for radius in [1.0, 10.0] {
                let bound = c * (2.0 * f64::atan(radius) + 2.0);
                let kk = Arc::clone(&k3);
                growth.push(GrowthData::Gi {
                    radius,
                    majorant: KernelTable::from_fn(&domain, move |x, z| bound / (x * x + 1.0) + 2.0 * radius * kk.eval(x, z))?,
                });
            }
            (f, Verification::Semilinear)
        }
        "illposed" => {
            let spacing = domain.spacing();
            let h = move |x: f64| spiky_source(x, spacing);
            let f = Integrand::new(
                move |x, z, u, xi| 0.5 * xi * xi * k1.eval(x, z) + (0.5 * u * u - h(x) * u) / measure,
                move |x, _, u, _| (u - h(x)) / measure,
                move |x, z, _, xi| xi * k2.eval(x, z),
            )
            .with_exponents(Some(2.0), None)
            .with_claims(true, false);
            semilinear = Some(SemilinearProblem::new(
                domain.clone(),
                mu.clone(),
                // L_μ[u] + (h − u) = 0 written as L_μ[u] = u − h
                move |x, u| u - h(x),
                |_, _| 1.0,
                collar_data.clone(),
                0.5,
                [-10.0, 10.0],
            )?);
            (f, Verification::Semilinear)
        }
        "quasilinear_potential" => {
            let p = 2.0;
            let f = Integrand::new(
                move |x, z, u, xi| (xi * k1.eval(x, z)).abs().powf(p) / p + 0.25 * u.powi(4),
                |_, _, u, _| u * u * u,
                move |x, z, _, xi| {
                    if xi == 0.0 {
                        0.0
                    } else {
                        xi.abs().powf(p - 2.0) * xi * k2.eval(x, z).abs().powf(p)
                    }
                },
            )
            .with_exponents(Some(p), Some(1.0))
            .with_claims(true, true);
            let half = 0.5;
            let sq = mu.map(|v| 0.5 * v * v)?;
            coercivity = Some(CoercivityData {
                c0: min_on_band(&sq, &domain, half),
                alpha1: sq,
                alpha2: constant_table(&domain, 1.0)?,
                // u⁴/4 ≥ |u| − 3/4
                alpha3: constant_table(&domain, -0.75)?,
                p,
                q: 1.0,
                delta: half,
            });
            for radius in [1.0, 10.0] {
                let kk = Arc::clone(&k3);
                growth.push(GrowthData::Gi {
                    radius,
                    majorant: KernelTable::from_fn(&domain, move |x, z| {
                        radius.powi(3) + radius * kk.eval(x, z).powi(2)
                    })?,
                });
            }
            (f, Verification::PLaplacian { p, scale: measure })
        }
        "double_power" => {
            let (p, q) = (3.0, 2.0);
            let f = Integrand::new(
                move |x, z, u, xi| {
                    let m = k1.eval(x, z);
                    ((u + xi) * m).abs().powf(q) + (xi * m).abs().powf(p)
                },
                {
                    let k = Arc::clone(&k);
                    move |x, z, u, xi| signed_power((u + xi) * k.eval(x, z), q - 1.0) * q * k.eval(x, z)
                },
                move |x, z, u, xi| {
                    let m = k2.eval(x, z);
                    q * signed_power((u + xi) * m, q - 1.0) * m + p * signed_power(xi * m, p - 1.0) * m
                },
            )
            .with_exponents(Some(p), Some(q))
            .with_claims(true, true);
            let m_pq = (p / q) * mu.map(|v| v.abs().powf(q))?.mass()?;
            let half = 0.5;
            let cube = mu.map(|v| v.abs().powf(p))?;
            coercivity = Some(CoercivityData {
                c0: min_on_band(&cube, &domain, half),
                alpha1: cube,
                alpha2: constant_table(&domain, 0.0)?,
                alpha3: constant_table(&domain, 0.0)?,
                p,
                q,
                delta: half,
            });
            (f, Verification::DoublePower { p, q, m_pq })
        }
        "semilinear_convolution" => {
            if let Some(v) = mu.values().iter().find(|&&v| v != 0.0 && !(v * v > v)) {
                return Err(Error::Parameter(format!(
                    "kernel value {v} violates mu^2 > mu on its support"
                )));
            }
            let mass_sq = mu.map(|v| v * v)?.mass()?;
            let m = mass_sq - mu.mass()?;
            let gamma = mu.map(|v| (v * v - v) / m)?;
            let f = Integrand::new(
                move |x, z, u, xi| {
                    let s = xi * k1.eval(x, z);
                    1.5 * u * u + 2.0 * u * s + s * s
                },
                move |x, z, u, xi| 3.0 * u + 2.0 * xi * k2.eval(x, z),
                move |x, z, u, xi| {
                    let mz = k3.eval(x, z);
                    2.0 * u * mz + 2.0 * xi * mz * mz
                },
            )
            .with_exponents(Some(2.0), Some(1.0))
            .with_claims(true, false);
            (f, Verification::WeightedLaplacian { gamma, c: measure / (2.0 * m), m })
        }
        _ => unreachable!("name validated by info"),
    };

    let mut p = Preset {
        info,
        domain,
        mu,
        collar_data,
        integrand,
        semilinear,
        coercivity,
        growth,
        verification,
        audits: Vec::new(),
    };
    p.audits = audit(&p, &CheckOptions { trials: 2000, ..Default::default() })?;
    if let Some(failed) = p.audits.iter().find(|r| !r.passed) {
        return Err(Error::Parameter(format!(
            "preset '{}' failed its {} audit (worst margin {:e})",
            p.info.name, failed.check, failed.worst_margin
        )));
    }
    Ok(p)
}

fn signed_power(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(e)
    }
}

/// Smallest table value over node pairs with `|z| ≤ delta`.
fn min_on_band(table: &KernelTable, domain: &Domain, delta: f64) -> f64 {
    let x = domain.nodes();
    let band = delta + 1e-9 * domain.spacing();
    let mut best = f64::INFINITY;
    for i in 0..x.len() {
        for j in 0..x.len() {
            if (x[j] - x[i]).abs() <= band {
                best = best.min(table.at(i, j));
            }
        }
    }
    best
}

/// Convexity, coercivity and growth audits of a preset's integrand.
pub fn audit(p: &Preset, opts: &CheckOptions) -> Result<Vec<DiagnosticReport>> {
    let mut out = vec![check_convexity(&p.integrand, &p.domain, opts)?];
    if let Some(c) = &p.coercivity {
        out.push(check_coercivity(&p.integrand, c, &p.domain, opts)?);
    }
    for g in &p.growth {
        out.push(check_growth(&p.integrand, g, &p.domain, opts)?);
    }
    Ok(out)
}

/// Pointwise residual of the preset's verification equation; zero where it is
/// not asserted.
pub fn verification_residual(p: &Preset, u: &GridFunction) -> Result<GridFunction> {
    u.require_scalar("preset verification")?;
    p.domain.check_len(u.rows(), "solution")?;
    let d = &p.domain;
    let selector = RegionSelector::Free;
    let masked = |values: Vec<f64>, sel: RegionSelector| {
        let v = values
            .into_iter()
            .enumerate()
            .map(|(i, r)| if sel.contains(d.region(i)) { r } else { 0.0 })
            .collect();
        GridFunction::from_raw(d.node_count(), 1, v)
    };
    Ok(match &p.verification {
        Verification::Semilinear => {
            let problem = p.semilinear.as_ref().expect("semilinear presets carry a problem");
            problem.residual(u)?
        }
        Verification::PLaplacian { p: exp, scale } => {
            let lp = nonlocal_p_laplacian(u, &p.mu, *exp, d)?;
            let v = (0..d.node_count()).map(|i| lp.at(i) - scale * u.at(i).powi(3)).collect();
            masked(v, selector)
        }
        Verification::DoublePower { p: pe, q, m_pq } => {
            let lq = nonlocal_p_laplacian(u, &p.mu, *q, d)?;
            let v = (0..d.node_count())
                .map(|i| lq.at(i) - m_pq * signed_power(u.at(i), pe - 1.0))
                .collect();
            masked(v, selector)
        }
        Verification::WeightedLaplacian { gamma, c, .. } => {
            let lg = nonlocal_laplacian(u, gamma, d)?;
            let v = (0..d.node_count()).map(|i| lg.at(i) - c * 3.0 * u.at(i)).collect();
            masked(v, selector)
        }
    })
}

/// Checks a candidate solution against the preset's residual and tolerance.
pub fn verify_preset(p: &Preset, solution: &GridFunction) -> Result<DiagnosticReport> {
    let r = verification_residual(p, solution)?;
    let (mut worst, mut at) = (0.0_f64, 0);
    for (i, v) in r.values().iter().enumerate() {
        if v.abs() > worst {
            worst = v.abs();
            at = i;
        }
    }
    let tol = p.info.tolerance;
    let mut report = DiagnosticReport::new(format!("verify_{}", p.info.name));
    report.observe(tol - worst, || Witness {
        x: p.domain.x(at),
        u: solution.at(at),
        ..Default::default()
    });
    report.passed = worst <= tol;
    report.set_metric("residual_inf", worst);
    report.set_metric("tolerance", tol);
    Ok(report)
}

/// Checks that `γ` has unit discrete mass and that the generic Euler–Lagrange
/// residual equals `|Ω∪Γ|·g(u) − 2M·L_γ[u]` for the given `u`.
pub fn constant_consistency(p: &Preset, u: &GridFunction, tol: f64) -> Result<DiagnosticReport> {
    let Verification::WeightedLaplacian { gamma, m, .. } = &p.verification else {
        return Err(Error::Parameter(format!(
            "preset '{}' has no weighted-Laplacian constant",
            p.info.name
        )));
    };
    let d = &p.domain;
    let mut report = DiagnosticReport::new("constant_consistency");
    let mass_gap = (gamma.mass()? - 1.0).abs();
    report.observe(tol - mass_gap, Witness::default);

    let generic = strong_el_residual(u, &p.integrand, d)?;
    let lg = nonlocal_laplacian(u, gamma, d)?;
    let measure = d.measure();
    let mut identity_gap: f64 = 0.0;
    for i in d.indices(RegionSelector::Free) {
        let derived = measure * 3.0 * u.at(i) - 2.0 * m * lg.at(i);
        identity_gap = identity_gap.max((generic.at(i) - derived).abs());
    }
    report.observe(tol - identity_gap, Witness::default);
    report.passed = mass_gap <= tol && identity_gap <= tol;
    report.set_metric("m_derivation", *m);
    report.set_metric("gamma_mass_gap", mass_gap);
    report.set_metric("identity_gap", identity_gap);
    Ok(report)
}

#[derive(Clone, Debug)]
pub enum PresetSolve {
    FixedPoint(SolveResult),
    Minimize(MinimizeResult),
}

impl PresetSolve {
    pub fn solution(&self) -> &GridFunction {
        match self {
            PresetSolve::FixedPoint(r) => &r.u_star,
            PresetSolve::Minimize(r) => &r.u_star,
        }
    }

    pub fn converged(&self) -> bool {
        match self {
            PresetSolve::FixedPoint(r) => r.converged,
            PresetSolve::Minimize(r) => r.converged,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            PresetSolve::FixedPoint(r) => r.iterations,
            PresetSolve::Minimize(r) => r.iterations,
        }
    }
}

/// Solver settings used by [`solve_preset`].
#[derive(Clone, Debug, PartialEq)]
pub struct PresetSolveOptions {
    pub fixed_point: FixedPointOptions,
    pub minimize: MinimizeOptions,
}

impl Default for PresetSolveOptions {
    fn default() -> Self {
        PresetSolveOptions {
            fixed_point: FixedPointOptions { tol: 1e-10, ..Default::default() },
            minimize: MinimizeOptions { grad_tol: 1e-10, ..Default::default() },
        }
    }
}

/// Solves a preset with its designated solver.
pub fn solve_preset(p: &Preset, opts: &PresetSolveOptions) -> Result<PresetSolve> {
    match p.info.solver {
        SolverKind::FixedPoint => {
            let problem = p.semilinear.as_ref().expect("fixed-point presets carry a problem");
            Ok(PresetSolve::FixedPoint(solve_fixed_point(
                problem,
                &problem.initial_guess(),
                &opts.fixed_point,
            )?))
        }
        SolverKind::Minimize => Ok(PresetSolve::Minimize(minimize(
            &p.integrand,
            &p.domain,
            &p.collar_data,
            &opts.minimize,
        )?)),
    }
}

/// `‖r‖_∞` of the verification residual restricted to `Ω`.
pub fn interior_residual(p: &Preset, u: &GridFunction) -> Result<f64> {
    linf_norm(&verification_residual(p, u)?, &p.domain, RegionSelector::Interior)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;

    #[test]
    fn unknown_name() {
        assert!(matches!(preset("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn arctan_defaults() {
        let p = preset("arctan_semilinear").unwrap();
        assert_eq!((p.domain.a(), p.domain.b()), (-1.0, 1.0));
        assert_eq!(p.info.kernel, KernelSpec::Gaussian { sigma: 1.0 });
        assert!(p.audits.iter().all(|r| r.passed));
    }

    #[test]
    fn arctan_constant_one_fails_with_closed_form_residual() {
        let p = preset("arctan_semilinear").unwrap();
        let one = GridFunction::constant(&p.domain, 1.0).unwrap();
        let r = verify_preset(&p, &one).unwrap();
        assert!(!r.passed);
        let expected = 2.0 * (FRAC_PI_4 + 1.0);
        assert!((r.metrics["residual_inf"] - expected).abs() < 1e-12);
    }

    #[test]
    fn double_power_zero_is_exact() {
        let p = preset("double_power").unwrap();
        let r = verify_preset(&p, &GridFunction::zeros(&p.domain)).unwrap();
        assert!(r.passed);
        assert_eq!(r.metrics["residual_inf"], 0.0);
    }

    #[test]
    fn convolution_kernel_must_exceed_one() {
        let d = Domain::new(-1.0, 1.0, 0.5, 201, &[]).unwrap();
        let bad = KernelSpec::Constant { value: 0.5, horizon: 0.5 };
        assert!(matches!(
            preset_on("semilinear_convolution", d, &bad),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn catalog_lists_every_preset() {
        let names: Vec<_> = catalog().iter().map(|i| i.name).collect();
        assert_eq!(names, NAMES);
    }
}
