use std::io::Write;
use std::path::Path;

use nonloc_core::checks::{check_coercivity, check_convexity, check_growth, CheckOptions};
use nonloc_core::functional::strong_el_residual;
use nonloc_core::grid::{linf_norm, RegionSelector};
use nonloc_core::io::{read_grid_function_on, read_two_point_field, write_two_point_field};
use nonloc_core::kernel::sample_kernel;
use nonloc_core::minimize::minimize as run_minimize;
use nonloc_core::operators::{
    convolve, convolve_fft, nonlocal_divergence, nonlocal_gradient, nonlocal_laplacian, nonlocal_p_laplacian,
};
use nonloc_core::presets::{catalog, solve_preset, verification_residual, verify_preset, Preset, PresetSolve};
use nonloc_core::semilinear::{
    forced_l1_bounds, illposed_demo, solve_fixed_point, spiky_source, IllposedOptions, SemilinearProblem,
};
use nonloc_core::{DiagnosticReport, Domain, GridFunction};
use serde_json::{json, Map, Value};

use crate::config::{parse_domain_arg, parse_kernel_arg, Emit, ProblemConfig, RunConfig};
use crate::output::{metrics, Artifacts, Summary};
use crate::{ApplyArgs, CheckKind, CliError, Operator};

/// Runs `body` against the output directory and always finishes with a
/// summary. Run-time failures are recorded there; usage errors propagate.
fn with_summary(
    cfg: &RunConfig,
    config: Value,
    command: &str,
    status_key: &'static str,
    body: impl FnOnce(&mut Artifacts) -> Result<(bool, Map<String, Value>), CliError>,
) -> Result<bool, CliError> {
    let mut art = Artifacts::new(&cfg.output.dir, &cfg.output.emit);
    let (ok, key_metrics, error) = match body(&mut art) {
        Ok((ok, m)) => (ok, m, None),
        Err(CliError::Run(msg)) => (false, Map::new(), Some(msg)),
        Err(e) => return Err(e),
    };
    let config_hash = crate::config::hash_json(&config);
    art.summary(Summary {
        command: command.to_string(),
        status_key,
        ok,
        key_metrics,
        error,
        config,
        config_hash,
    })
}

fn config_value(cfg: &RunConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn reports_json(reports: &[DiagnosticReport]) -> Value {
    serde_json::to_value(reports).expect("reports serialize")
}

pub fn apply(args: &ApplyArgs, mut cfg: RunConfig) -> Result<bool, CliError> {
    let domain_cfg = match &args.domain {
        Some(s) => parse_domain_arg(s)?,
        None => cfg.domain.clone().ok_or_else(|| CliError::Usage("apply needs --domain or a config domain".into()))?,
    };
    let spec = match &args.kernel {
        Some(s) => parse_kernel_arg(s)?,
        None => cfg.kernel.clone().ok_or_else(|| CliError::Usage("apply needs --kernel or a config kernel".into()))?,
    };
    let domain = domain_cfg.build()?;
    let kernel = sample_kernel(&spec, &domain)?;
    let need = |p: &Option<std::path::PathBuf>, flag: &str| {
        p.clone().ok_or_else(|| CliError::Usage(format!("{:?} needs --{flag}", args.operator)))
    };
    let read_u = |path: &Path| -> Result<GridFunction, CliError> { Ok(read_grid_function_on(path, &domain)?) };

    enum Out {
        Nodes(GridFunction),
        Pairs(nonloc_core::TwoPointField),
    }
    let result = match args.operator {
        Operator::Gradient => Out::Pairs(nonlocal_gradient(&read_u(&need(&args.u, "u")?)?, &kernel)?),
        Operator::Divergence => {
            let field = read_two_point_field(&need(&args.field, "field")?, domain.node_count())?;
            Out::Nodes(nonlocal_divergence(&field, &kernel, &domain)?)
        }
        Operator::Laplacian => Out::Nodes(nonlocal_laplacian(&read_u(&need(&args.u, "u")?)?, &kernel, &domain)?),
        Operator::PLaplacian => {
            let p = args.p.ok_or_else(|| CliError::Usage("p_laplacian needs --p".into()))?;
            Out::Nodes(nonlocal_p_laplacian(&read_u(&need(&args.u, "u")?)?, &kernel, p, &domain)?)
        }
        Operator::Convolve => {
            let u = read_u(&need(&args.u, "u")?)?;
            Out::Nodes(if args.fft {
                convolve_fft(&u, &kernel, &domain)?
            } else {
                convolve(&u, &kernel, &domain)?
            })
        }
    };

    cfg.domain = Some(domain_cfg);
    cfg.kernel = Some(spec);
    let config = json!({
        "operator": args.operator,
        "u": args.u,
        "field": args.field,
        "p": args.p,
        "fft": args.fft,
        "run": config_value(&cfg),
    });
    let name = format!("{}.csv", serde_json::to_value(args.operator).unwrap().as_str().unwrap());
    with_summary(&cfg, config, "apply", "passed", |art| {
        let sup = match &result {
            Out::Nodes(u) => {
                art.grid_function(&name, &domain, u)?;
                u.values().iter().fold(0.0_f64, |a, v| a.max(v.abs()))
            }
            Out::Pairs(f) => {
                art.with_path(&name, |path| write_two_point_field(path, f))?;
                f.values().iter().fold(0.0_f64, |a, v| a.max(v.abs()))
            }
        };
        Ok((true, metrics([("output_linf", sup)])))
    })
}

fn preset_from_config(cfg: &mut RunConfig, command: &str) -> Result<Preset, CliError> {
    let name = cfg
        .preset_name()
        .ok_or_else(|| CliError::Usage(format!("{command} needs problem.preset_name in the config")))?
        .to_string();
    cfg.resolve_preset(&name)
}

pub fn minimize(mut cfg: RunConfig) -> Result<bool, CliError> {
    let p = preset_from_config(&mut cfg, "minimize")?;
    let opts = cfg.minimize_options();
    with_summary(&cfg, config_value(&cfg), "minimize", "converged", |art| {
        let res = run_minimize(&p.integrand, &p.domain, &p.collar_data, &opts)?;
        let el = strong_el_residual(&res.u_star, &p.integrand, &p.domain)?;
        let el_inf = linf_norm(&el, &p.domain, RegionSelector::Free)?;
        let verification = verify_preset(&p, &res.u_star)?;
        if art.wants(Emit::SolutionCsv) {
            art.grid_function("solution.csv", &p.domain, &res.u_star)?;
        }
        if art.wants(Emit::ResidualCsv) {
            art.grid_function("residual.csv", &p.domain, &el)?;
        }
        if art.wants(Emit::TraceJson) {
            art.json(
                "trace.json",
                &json!({
                    "energy_trace": res.energy_trace,
                    "iterations": res.iterations,
                    "grad_inf_norm": res.grad_inf_norm,
                    "termination_reason": res.termination_reason,
                }),
            )?;
        }
        if art.wants(Emit::ReportJson) {
            art.json("report.json", &reports_json(std::slice::from_ref(&verification)))?;
        }
        let energy = res.energy_trace.last().copied().unwrap_or(f64::NAN);
        Ok((
            res.converged,
            metrics([
                ("energy", energy),
                ("grad_inf_norm", res.grad_inf_norm),
                ("iterations", res.iterations as f64),
                ("el_residual_inf", el_inf),
                ("residual_inf", verification.metrics["residual_inf"]),
            ]),
        ))
    })
}

fn semilinear_problem(cfg: &mut RunConfig) -> Result<SemilinearProblem, CliError> {
    match cfg.problem.clone() {
        Some(ProblemConfig::Semilinear(sc)) => {
            let (domain, mu) = cfg.resolve_grid("arctan_semilinear")?;
            sc.build(domain, mu)
        }
        Some(ProblemConfig::PresetName(name)) => {
            let p = cfg.resolve_preset(&name)?;
            p.semilinear
                .ok_or_else(|| CliError::Usage(format!("preset '{name}' is not a semilinear problem")))
        }
        None => Err(CliError::Usage("semilinear needs a problem in the config".into())),
    }
}

pub fn semilinear(mut cfg: RunConfig) -> Result<bool, CliError> {
    let problem = semilinear_problem(&mut cfg)?;
    let opts = cfg.fixed_point_options();
    with_summary(&cfg, config_value(&cfg), "semilinear", "converged", |art| {
        let res = solve_fixed_point(&problem, &problem.initial_guess(), &opts)?;
        let d = problem.domain();
        if art.wants(Emit::SolutionCsv) {
            art.grid_function("solution.csv", d, &res.u_star)?;
        }
        if art.wants(Emit::ResidualCsv) {
            art.grid_function("residual.csv", d, &problem.residual(&res.u_star)?)?;
        }
        if art.wants(Emit::TraceJson) {
            art.json(
                "trace.json",
                &json!({
                    "update_norms": res.update_norms,
                    "contraction_estimates": res.contraction_estimates,
                    "iterations": res.iterations,
                    "termination": res.termination,
                    "damping": res.damping,
                }),
            )?;
        }
        if art.wants(Emit::ReportJson) {
            art.json(
                "report.json",
                &json!({ "residual_inf": res.residual_inf, "tol": opts.tol, "converged": res.converged }),
            )?;
        }
        let worst_contraction = res.contraction_estimates.iter().copied().fold(0.0, f64::max);
        Ok((
            res.converged,
            metrics([
                ("residual_inf", res.residual_inf),
                ("iterations", res.iterations as f64),
                ("max_contraction_estimate", worst_contraction),
            ]),
        ))
    })
}

pub fn residual(mut cfg: RunConfig, u_path: &Path) -> Result<bool, CliError> {
    if let Some(name) = cfg.preset_name().map(str::to_string) {
        let p = cfg.resolve_preset(&name)?;
        let u = read_grid_function_on(u_path, &p.domain)?;
        let mut config = config_value(&cfg);
        config["u"] = json!(u_path);
        return with_summary(&cfg, config, "residual", "passed", |art| {
            let r = verification_residual(&p, &u)?;
            let report = verify_preset(&p, &u)?;
            let el = strong_el_residual(&u, &p.integrand, &p.domain)?;
            if art.wants(Emit::ResidualCsv) {
                art.grid_function("residual.csv", &p.domain, &r)?;
            }
            if art.wants(Emit::ReportJson) {
                art.json("report.json", &reports_json(std::slice::from_ref(&report)))?;
            }
            Ok((
                report.passed,
                metrics([
                    ("residual_inf", report.metrics["residual_inf"]),
                    ("tolerance", p.info.tolerance),
                    ("el_residual_inf", linf_norm(&el, &p.domain, RegionSelector::Free)?),
                ]),
            ))
        });
    }
    let problem = semilinear_problem(&mut cfg)?;
    let u = read_grid_function_on(u_path, problem.domain())?;
    let tol = cfg.solver.tol;
    let mut config = config_value(&cfg);
    config["u"] = json!(u_path);
    with_summary(&cfg, config, "residual", "passed", |art| {
        let r = problem.residual(&u)?;
        let inf = linf_norm(&r, problem.domain(), RegionSelector::Interior)?;
        if art.wants(Emit::ResidualCsv) {
            art.grid_function("residual.csv", problem.domain(), &r)?;
        }
        Ok((inf <= tol, metrics([("residual_inf", inf), ("tolerance", tol)])))
    })
}

pub fn check(mut cfg: RunConfig, which: CheckKind, preset: Option<String>, trials: Option<u64>) -> Result<bool, CliError> {
    let name = match preset {
        Some(n) => n,
        None => cfg
            .preset_name()
            .ok_or_else(|| CliError::Usage("check needs --preset or problem.preset_name".into()))?
            .to_string(),
    };
    let p = cfg.resolve_preset(&name)?;
    if let Some(t) = trials {
        cfg.solver.trials = t;
    }
    let opts = CheckOptions {
        trials: cfg.solver.trials,
        seed: cfg.solver.seed,
        ..Default::default()
    };
    if matches!(which, CheckKind::Coercivity) && p.coercivity.is_none() {
        return Err(CliError::Usage(format!("preset '{name}' has no coercivity data")));
    }
    let command = format!("check {}", format!("{which:?}").to_lowercase());
    with_summary(&cfg, config_value(&cfg), &command, "passed", |art| {
        let reports = match which {
            CheckKind::Convexity => vec![check_convexity(&p.integrand, &p.domain, &opts)?],
            CheckKind::Coercivity => {
                let data = p.coercivity.as_ref().expect("checked above");
                vec![check_coercivity(&p.integrand, data, &p.domain, &opts)?]
            }
            CheckKind::Growth => p
                .growth
                .iter()
                .map(|g| check_growth(&p.integrand, g, &p.domain, &opts))
                .collect::<Result<_, _>>()?,
        };
        if art.wants(Emit::ReportJson) {
            art.json("report.json", &reports_json(&reports))?;
        }
        let passed = reports.iter().all(|r| r.passed);
        let worst = reports.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
        let violations: f64 = reports.iter().filter_map(|r| r.metrics.get("violations")).sum();
        Ok((
            passed,
            metrics([("worst_margin", worst), ("violations", violations), ("trials", opts.trials as f64)]),
        ))
    })
}

pub fn preset_list(cfg: RunConfig) -> Result<bool, CliError> {
    let listing = serde_json::to_value(catalog()).expect("catalog serializes");
    print_json(&listing);
    with_summary(&cfg, json!({ "output": cfg.output }), "preset list", "passed", |art| {
        art.json("catalog.json", &listing)?;
        Ok((true, metrics([("presets", catalog().len() as f64)])))
    })
}

pub fn preset_describe(mut cfg: RunConfig, name: &str) -> Result<bool, CliError> {
    let p = cfg.resolve_preset(name)?;
    let description = json!({ "info": p.info, "audits": p.audits });
    print_json(&description);
    with_summary(&cfg, config_value(&cfg), "preset describe", "passed", |art| {
        art.json("description.json", &description)?;
        Ok((p.audits.iter().all(|r| r.passed), Map::new()))
    })
}

pub fn preset_run(mut cfg: RunConfig, name: &str) -> Result<bool, CliError> {
    let p = cfg.resolve_preset(name)?;
    let opts = cfg.preset_options();
    let command = format!("preset run {name}");
    with_summary(&cfg, config_value(&cfg), &command, "converged", |art| {
        let solve = solve_preset(&p, &opts)?;
        let u = solve.solution();
        let verification = verify_preset(&p, u)?;
        if art.wants(Emit::SolutionCsv) {
            art.grid_function("solution.csv", &p.domain, u)?;
        }
        if art.wants(Emit::ResidualCsv) {
            art.grid_function("residual.csv", &p.domain, &verification_residual(&p, u)?)?;
        }
        if art.wants(Emit::TraceJson) {
            let trace = match &solve {
                PresetSolve::FixedPoint(r) => json!({
                    "solver": "fixed_point",
                    "update_norms": r.update_norms,
                    "contraction_estimates": r.contraction_estimates,
                    "termination": r.termination,
                }),
                PresetSolve::Minimize(r) => json!({
                    "solver": "minimize",
                    "energy_trace": r.energy_trace,
                    "grad_inf_norm": r.grad_inf_norm,
                    "termination_reason": r.termination_reason,
                }),
            };
            art.json("trace.json", &trace)?;
        }
        if art.wants(Emit::ReportJson) {
            art.json("report.json", &json!({ "verification": verification, "audits": p.audits }))?;
        }
        let ok = solve.converged() && verification.passed;
        Ok((
            ok,
            metrics([
                ("residual_inf", verification.metrics["residual_inf"]),
                ("tolerance", p.info.tolerance),
                ("iterations", solve.iterations() as f64),
            ]),
        ))
    })
}

pub fn demo_illposed(mut cfg: RunConfig, levels: usize) -> Result<bool, CliError> {
    if levels < 2 {
        return Err(CliError::Usage("--levels must be at least 2".into()));
    }
    let (domain, mu) = cfg.resolve_grid("illposed")?;
    let spec = cfg.kernel.clone().expect("resolved above");
    let h = spiky(&domain)?;
    let opts = IllposedOptions {
        seed: cfg.solver.seed,
        ..Default::default()
    };
    let mut config = config_value(&cfg);
    config["levels"] = json!(levels);
    with_summary(&cfg, config, "demo-illposed", "passed", |art| {
        let report = illposed_demo(&h, &mu, &domain, &opts)?;
        let bounds = forced_l1_bounds(&domain, &spec, levels)?;
        let factors: Vec<f64> = bounds.windows(2).map(|w| w[1] / w[0]).collect();
        if art.wants(Emit::ReportJson) {
            art.json(
                "report.json",
                &json!({ "demo": report, "forced_l1_bounds": bounds, "growth_factors": factors }),
            )?;
        }
        if art.wants(Emit::SolutionCsv) {
            art.grid_function("source.csv", &domain, &h)?;
        }
        let mut m = metrics(
            ["young_violations", "forced_l1_lower_bound", "achieved_l1", "ls_residual_linf"]
                .map(|k| (k, report.metrics[k])),
        );
        m.extend(metrics([("min_growth_factor", factors.iter().copied().fold(f64::INFINITY, f64::min))]));
        Ok((report.passed, m))
    })
}

fn spiky(domain: &Domain) -> Result<GridFunction, CliError> {
    Ok(GridFunction::from_fn(domain, |x| spiky_source(x, domain.spacing()))?)
}

/// A closed stdout (e.g. piped into `head`) is not an error.
fn print_json(v: &impl serde::Serialize) {
    let text = serde_json::to_string_pretty(v).expect("json");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}
