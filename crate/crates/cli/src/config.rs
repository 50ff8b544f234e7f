//! The JSON run configuration and its resolution into core objects.

use std::path::{Path, PathBuf};

use nonloc_core::minimize::{Init, MinimizeOptions};
use nonloc_core::presets::{catalog, preset, preset_on, Preset, PresetSolveOptions};
use nonloc_core::semilinear::{FixedPointOptions, SemilinearProblem};
use nonloc_core::{Domain, GridFunction, KernelSpec, KernelTable};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub a: f64,
    pub b: f64,
    pub collar_width: f64,
    pub node_count: usize,
    #[serde(default)]
    pub gamma_prime: Vec<[f64; 2]>,
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain, CliError> {
        let gp: Vec<(f64, f64)> = self.gamma_prime.iter().map(|g| (g[0], g[1])).collect();
        Ok(Domain::new(self.a, self.b, self.collar_width, self.node_count, &gp)?)
    }

    fn of(d: &Domain) -> Self {
        DomainConfig {
            a: d.a(),
            b: d.b(),
            collar_width: d.collar_width(),
            node_count: d.node_count(),
            gamma_prime: d.gamma_prime().iter().map(|&(l, r)| [l, r]).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    PresetName(String),
    Semilinear(SemilinearConfig),
}

/// A semilinear equation `L_μ[u] = f0(x, u)` with a built-in source family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemilinearConfig {
    pub source: SourceConfig,
    #[serde(default)]
    pub collar_value: f64,
    #[serde(default = "default_floor")]
    pub monotonicity_floor: f64,
    #[serde(default = "default_box")]
    pub sample_box: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceConfig {
    /// `scale·(arctan u + 1)/(x² + 1)`
    Arctan { scale: f64 },
    /// `h + slope·u`
    Linear { h: f64, slope: f64 },
}

fn default_floor() -> f64 {
    0.1
}

fn default_box() -> [f64; 2] {
    [-10.0, 10.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Samples per audit in `check`.
    pub trials: u64,
    pub optimizer: OptimizerConfig,
    pub fixed_point: FixedPointConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-10,
            max_iters: 10_000,
            seed: 0,
            trials: 10_000,
            optimizer: OptimizerConfig::default(),
            fixed_point: FixedPointConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub armijo_c: f64,
    pub backtrack: f64,
    pub initial_step: f64,
    pub step_growth: f64,
    pub init: InitKind,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let d = MinimizeOptions::default();
        OptimizerConfig {
            armijo_c: d.armijo_c,
            backtrack: d.backtrack,
            initial_step: d.initial_step,
            step_growth: d.step_growth,
            init: InitKind::BoundaryExtend,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Zero,
    BoundaryExtend,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedPointConfig {
    pub damping: f64,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        FixedPointConfig { damping: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub emit: Vec<Emit>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            emit: vec![Emit::SolutionCsv, Emit::TraceJson, Emit::ReportJson, Emit::ResidualCsv],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Emit {
    SolutionCsv,
    TraceJson,
    ReportJson,
    ResidualCsv,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn preset_name(&self) -> Option<&str> {
        match &self.problem {
            Some(ProblemConfig::PresetName(n)) => Some(n),
            _ => None,
        }
    }

    /// Builds the named preset on the configured grid and kernel, filling any
    /// missing section from the preset defaults.
    pub fn resolve_preset(&mut self, name: &str) -> Result<Preset, CliError> {
        if let Some(other) = self.preset_name() {
            if other != name {
                return Err(CliError::Usage(format!("config names preset '{other}', command asked for '{name}'")));
            }
        }
        let base = preset(name)?;
        let p = if self.domain.is_none() && self.kernel.is_none() {
            base
        } else {
            let domain = match &self.domain {
                Some(d) => d.build()?,
                None => base.info.domain.build()?,
            };
            let kernel = self.kernel.clone().unwrap_or_else(|| base.info.kernel.clone());
            preset_on(name, domain, &kernel)?
        };
        self.domain = Some(DomainConfig::of(&p.domain));
        self.kernel = Some(self.kernel.clone().unwrap_or_else(|| p.info.kernel.clone()));
        self.problem = Some(ProblemConfig::PresetName(name.to_string()));
        Ok(p)
    }

    /// Domain and kernel for commands that are not tied to a preset.
    pub fn resolve_grid(&mut self, fallback: &str) -> Result<(Domain, KernelTable), CliError> {
        let info = catalog()
            .into_iter()
            .find(|i| i.name == fallback)
            .expect("fallback names a bundled preset");
        let domain = match &self.domain {
            Some(d) => d.build()?,
            None => info.domain.build()?,
        };
        let spec = self.kernel.clone().unwrap_or(info.kernel);
        let kernel = nonloc_core::kernel::sample_kernel(&spec, &domain)?;
        self.domain = Some(DomainConfig::of(&domain));
        self.kernel = Some(spec);
        Ok((domain, kernel))
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        let o = &self.solver.optimizer;
        MinimizeOptions {
            grad_tol: self.solver.tol,
            max_iters: self.solver.max_iters,
            armijo_c: o.armijo_c,
            backtrack: o.backtrack,
            initial_step: o.initial_step,
            step_growth: o.step_growth,
            init: match o.init {
                InitKind::Zero => Init::Zero,
                InitKind::BoundaryExtend => Init::BoundaryExtend,
            },
        }
    }

    pub fn fixed_point_options(&self) -> FixedPointOptions {
        FixedPointOptions {
            tol: self.solver.tol,
            max_iters: self.solver.max_iters,
            damping: self.solver.fixed_point.damping,
        }
    }

    pub fn preset_options(&self) -> PresetSolveOptions {
        PresetSolveOptions {
            fixed_point: self.fixed_point_options(),
            minimize: self.minimize_options(),
        }
    }
}

/// Hex SHA-256 of a serialized configuration.
pub fn hash_json(v: &serde_json::Value) -> String {
    let digest = Sha256::digest(v.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl SemilinearConfig {
    pub fn build(&self, domain: Domain, mu: KernelTable) -> Result<SemilinearProblem, CliError> {
        let collar = GridFunction::constant(&domain, self.collar_value)?;
        let problem = match self.source {
            SourceConfig::Arctan { scale } => SemilinearProblem::new(
                domain,
                mu,
                move |x, u| scale * (u.atan() + 1.0) / (x * x + 1.0),
                move |x, u| scale / ((1.0 + u * u) * (1.0 + x * x)),
                collar,
                self.monotonicity_floor,
                self.sample_box,
            )?,
            SourceConfig::Linear { h, slope } => SemilinearProblem::new(
                domain,
                mu,
                move |_, u| h + slope * u,
                move |_, _| slope,
                collar,
                self.monotonicity_floor,
                self.sample_box,
            )?,
        };
        Ok(problem)
    }
}

/// Parses `gaussian[:σ]`, `constant:value:horizon`, `table:path` or
/// `two_point:path`.
pub fn parse_kernel_arg(s: &str) -> Result<KernelSpec, CliError> {
    let bad = || CliError::Usage(format!("cannot parse kernel '{s}'"));
    let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
    let mut parts = s.splitn(2, ':');
    let kind = parts.next().unwrap_or_default();
    let rest = parts.next();
    Ok(match (kind, rest) {
        ("gaussian", None) => KernelSpec::Gaussian { sigma: 1.0 },
        ("gaussian", Some(sigma)) => KernelSpec::Gaussian { sigma: num(sigma)? },
        ("constant", Some(rest)) => {
            let (v, r) = rest.split_once(':').ok_or_else(bad)?;
            KernelSpec::Constant { value: num(v)?, horizon: num(r)? }
        }
        ("table", Some(path)) => KernelSpec::Table { file: path.into() },
        ("two_point", Some(path)) => KernelSpec::TwoPoint { file: path.into() },
        _ => return Err(bad()),
    })
}

/// Parses `a,b,collar_width,node_count`.
pub fn parse_domain_arg(s: &str) -> Result<DomainConfig, CliError> {
    let bad = || CliError::Usage(format!("cannot parse domain '{s}', expected a,b,collar_width,node_count"));
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(bad());
    }
    let f = |t: &str| t.parse::<f64>().map_err(|_| bad());
    Ok(DomainConfig {
        a: f(parts[0])?,
        b: f(parts[1])?,
        collar_width: f(parts[2])?,
        node_count: parts[3].parse().map_err(|_| bad())?,
        gamma_prime: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"solver": {"tolerance": 1e-3}}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
        assert!(serde_json::from_str::<RunConfig>(r#"{"extra": 1}"#).is_err());
    }

    #[test]
    fn defaults_are_materialized() {
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        let v = serde_json::to_value(&c).unwrap();
        assert_eq!(v["solver"]["tol"], 1e-10);
        assert_eq!(v["output"]["emit"].as_array().unwrap().len(), 4);
        let back: RunConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn problem_forms() {
        let c: RunConfig = serde_json::from_str(r#"{"problem": {"preset_name": "illposed"}}"#).unwrap();
        assert_eq!(c.preset_name(), Some("illposed"));
        let c: RunConfig = serde_json::from_str(
            r#"{"problem": {"semilinear": {"source": {"type": "linear", "h": 1.0, "slope": 0.5}}}}"#,
        )
        .unwrap();
        assert!(matches!(c.problem, Some(ProblemConfig::Semilinear(_))));
    }

    #[test]
    fn kernel_and_domain_arguments() {
        assert_eq!(parse_kernel_arg("gaussian:0.5").unwrap(), KernelSpec::Gaussian { sigma: 0.5 });
        assert_eq!(
            parse_kernel_arg("constant:2:0.5").unwrap(),
            KernelSpec::Constant { value: 2.0, horizon: 0.5 }
        );
        assert!(parse_kernel_arg("cauchy").is_err());
        let d = parse_domain_arg("-1,1,3,41").unwrap();
        assert_eq!((d.a, d.node_count), (-1.0, 41));
        assert!(parse_domain_arg("-1,1,3").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let hash = |c: &RunConfig| hash_json(&serde_json::to_value(c).unwrap());
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(hash(&a), hash(&b));
        b.solver.seed = 1;
        assert_ne!(hash(&a), hash(&b));
        assert_eq!(hash(&a).len(), 64);
    }
}
