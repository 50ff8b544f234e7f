//! Sampled audits of convexity, coercivity and growth bounds for an integrand.
//!
//! `(x, z)` pairs are drawn from grid node pairs, `(u, ξ)` uniformly from a box.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functional::Integrand;
use crate::grid::Domain;
use crate::kernel::KernelTable;
use crate::report::{DiagnosticReport, Witness, MARGIN_TOLERANCE};

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOptions {
    pub trials: u64,
    pub seed: u64,
    /// Range for each of `u` and `ξ`.
    pub sample_box: [f64; 2],
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            trials: 10_000,
            seed: 0,
            sample_box: [-10.0, 10.0],
        }
    }
}

impl CheckOptions {
    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Parameter("a sampled check needs at least one trial".into()));
        }
        let [lo, hi] = self.sample_box;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Parameter(format!("invalid sample box [{lo}, {hi}]")));
        }
        Ok(())
    }
}

/// Lower-bound data `f ≥ α₁|ξ|^p + α₂|u|^q + α₃` with `α₁ ≥ C₀` on `|z| ≤ δ`.
#[derive(Clone, Debug)]
pub struct CoercivityData {
    pub alpha1: KernelTable,
    pub alpha2: KernelTable,
    pub alpha3: KernelTable,
    pub p: f64,
    pub q: f64,
    pub c0: f64,
    pub delta: f64,
}

impl CoercivityData {
    pub fn validate(&self, domain: &Domain) -> Result<()> {
        if !(1.0 <= self.q && self.q < self.p) {
            return Err(Error::Parameter(format!(
                "coercivity exponents need 1 <= q < p, got p = {}, q = {}",
                self.p, self.q
            )));
        }
        if !(self.c0 > 0.0) || !(self.delta > 0.0) {
            return Err(Error::Parameter("coercivity needs C0 > 0 and delta > 0".into()));
        }
        for table in [&self.alpha1, &self.alpha2, &self.alpha3] {
            table.check_domain(domain)?;
        }
        let x = domain.nodes();
        let m = domain.node_count();
        let band = self.delta + 1e-9 * domain.spacing();
        for i in 0..m {
            for j in 0..m {
                if (x[j] - x[i]).abs() <= band && self.alpha1.at(i, j) < self.c0 * (1.0 - 1e-12) {
                    return Err(Error::Parameter(format!(
                        "alpha1 = {} below C0 = {} at x = {}, z = {}",
                        self.alpha1.at(i, j),
                        self.c0,
                        x[i],
                        x[j] - x[i]
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Growth hypotheses on `∂_u f` and `∂_ξ f`.
#[derive(Clone, Debug)]
pub enum GrowthData {
    /// `|∂_u f|, |∂_ξ f| ≤ a_R(x, z)` whenever `|u|, |ξ| ≤ R`.
    Gi { radius: f64, majorant: KernelTable },
    /// `|∂_u f|, |∂_ξ f| ≤ a + |β|(|u|^{p−1} + |ξ|^{p−1})`.
    Gii { a: KernelTable, beta: KernelTable, p: f64 },
}

struct Sampler<'a> {
    rng: ChaCha8Rng,
    domain: &'a Domain,
}

impl<'a> Sampler<'a> {
    fn new(domain: &'a Domain, seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            domain,
        }
    }

    fn pair(&mut self) -> (usize, usize, f64, f64) {
        let m = self.domain.node_count();
        let i = self.rng.gen_range(0..m);
        let j = self.rng.gen_range(0..m);
        let x = self.domain.nodes();
        (i, j, x[i], x[j] - x[i])
    }

    fn value(&mut self, [lo, hi]: [f64; 2]) -> f64 {
        self.rng.gen_range(lo..=hi)
    }

    fn unit(&mut self) -> f64 {
        self.rng.gen_range(0.0..=1.0)
    }
}

fn start(check: &str, opts: &CheckOptions) -> Result<DiagnosticReport> {
    opts.validate()?;
    let mut r = DiagnosticReport::new(check);
    r.seed = opts.seed;
    r.sample_box = Some(opts.sample_box);
    Ok(r)
}

fn finish(mut r: DiagnosticReport, violations: u64) -> DiagnosticReport {
    r.set_metric("violations", violations as f64);
    r
}

/// Joint convexity of `(u, ξ) ↦ f(x, z, u, ξ)` along random chords.
pub fn check_convexity(f: &Integrand, domain: &Domain, opts: &CheckOptions) -> Result<DiagnosticReport> {
    let mut r = start("convexity", opts)?;
    let mut s = Sampler::new(domain, opts.seed);
    let mut violations = 0;
    for _ in 0..opts.trials {
        let (_, _, x, z) = s.pair();
        let (u1, xi1) = (s.value(opts.sample_box), s.value(opts.sample_box));
        let (u2, xi2) = (s.value(opts.sample_box), s.value(opts.sample_box));
        let t = s.unit();
        let um = t * u1 + (1.0 - t) * u2;
        let xim = t * xi1 + (1.0 - t) * xi2;
        let margin = t * f.eval(x, z, u1, xi1) + (1.0 - t) * f.eval(x, z, u2, xi2) - f.eval(x, z, um, xim);
        if !(margin >= -MARGIN_TOLERANCE) {
            violations += 1;
        }
        r.observe(margin, || Witness {
            x,
            z,
            u: u1,
            xi: xi1,
            extra: [("u2", u2), ("xi2", xi2), ("t", t)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        });
    }
    Ok(finish(r, violations))
}

/// Sampled lower bound `f ≥ α₁|ξ|^p + α₂|u|^q + α₃`.
pub fn check_coercivity(
    f: &Integrand,
    data: &CoercivityData,
    domain: &Domain,
    opts: &CheckOptions,
) -> Result<DiagnosticReport> {
    data.validate(domain)?;
    let mut r = start("coercivity", opts)?;
    r.set_metric("p", data.p);
    r.set_metric("q", data.q);
    r.set_metric("c0", data.c0);
    r.set_metric("delta", data.delta);
    let mut s = Sampler::new(domain, opts.seed);
    let mut violations = 0;
    for _ in 0..opts.trials {
        let (i, j, x, z) = s.pair();
        let (u, xi) = (s.value(opts.sample_box), s.value(opts.sample_box));
        let bound =
            data.alpha1.at(i, j) * xi.abs().powf(data.p) + data.alpha2.at(i, j) * u.abs().powf(data.q) + data.alpha3.at(i, j);
        let margin = f.eval(x, z, u, xi) - bound;
        if !(margin >= -MARGIN_TOLERANCE) {
            violations += 1;
        }
        r.observe(margin, || Witness { x, z, u, xi, ..Default::default() });
    }
    Ok(finish(r, violations))
}

/// Sampled derivative bounds; the report also carries the worst ratio
/// `max(|∂_u f|, |∂_ξ f|) / bound`.
pub fn check_growth(f: &Integrand, data: &GrowthData, domain: &Domain, opts: &CheckOptions) -> Result<DiagnosticReport> {
    let (name, sample_box) = match data {
        GrowthData::Gi { radius, majorant } => {
            if !(*radius > 0.0) {
                return Err(Error::Parameter(format!("growth radius must be positive, got {radius}")));
            }
            majorant.check_domain(domain)?;
            ("growth_gi", [-radius, *radius])
        }
        GrowthData::Gii { a, beta, p } => {
            if !(*p > 1.0) {
                return Err(Error::Parameter(format!("growth exponent must exceed 1, got {p}")));
            }
            a.check_domain(domain)?;
            beta.check_domain(domain)?;
            ("growth_gii", opts.sample_box)
        }
    };
    let local = CheckOptions { sample_box, ..opts.clone() };
    let mut r = start(name, &local)?;
    if let GrowthData::Gi { radius, .. } = data {
        r.set_metric("radius", *radius);
    }
    let mut s = Sampler::new(domain, opts.seed);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..opts.trials {
        let (i, j, x, z) = s.pair();
        let (u, xi) = (s.value(sample_box), s.value(sample_box));
        let bound = match data {
            GrowthData::Gi { majorant, .. } => majorant.at(i, j),
            GrowthData::Gii { a, beta, p } => {
                a.at(i, j) + beta.at(i, j).abs() * (u.abs().powf(p - 1.0) + xi.abs().powf(p - 1.0))
            }
        };
        let size = f.du(x, z, u, xi).abs().max(f.dxi(x, z, u, xi).abs());
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(size / bound);
        } else if size > 0.0 {
            worst_ratio = f64::INFINITY;
        }
        let margin = bound - size;
        if !(margin >= -MARGIN_TOLERANCE) {
            violations += 1;
        }
        r.observe(margin, || Witness { x, z, u, xi, ..Default::default() });
    }
    r.set_metric("worst_ratio", worst_ratio);
    Ok(finish(r, violations))
}
